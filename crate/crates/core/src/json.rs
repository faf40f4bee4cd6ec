//! JSON interchange formats.
//!
//! Every document carries `"format_version": 1`. Rationals are written as
//! `"p/q"` strings; on input, JSON numbers and decimal strings are also
//! accepted and converted exactly.

use crate::canon::{CellNode, CellRepresentation, CellTree, Interval, RepError};
use crate::process::{Branch, FiniteProcess, Node, ProcessError, Value};
use crate::rational::{format_rational, parse_rational, ParseRationalError, Rational};
use crate::transport::{Piece, TransportMap};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Rep(#[from] RepError),
}

impl FormatError {
    /// True for errors in the document itself rather than in the object it
    /// describes.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, FormatError::Json(_) | FormatError::Rational(_) | FormatError::Version(_))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(serde_json::Number),
    Text(String),
}

impl Scalar {
    fn parse(&self) -> Result<Rational, ParseRationalError> {
        match self {
            Scalar::Number(n) => parse_rational(&n.to_string()),
            Scalar::Text(s) => parse_rational(s),
        }
    }
}

fn text(r: &Rational) -> Scalar {
    Scalar::Text(format_rational(r))
}

fn value_out(v: &Value) -> Vec<Scalar> {
    v.coords().iter().map(text).collect()
}

fn value_in(raw: &[Scalar]) -> Result<Value, ParseRationalError> {
    Ok(Value::new(raw.iter().map(Scalar::parse).collect::<Result<_, _>>()?))
}

fn check_version(v: Option<u32>) -> Result<(), FormatError> {
    match v {
        None | Some(FORMAT_VERSION) => Ok(()),
        Some(other) => Err(FormatError::Version(other)),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ProcessDoc {
    #[serde(default)]
    format_version: Option<u32>,
    dimension: usize,
    depth: usize,
    root: ProcessNodeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProcessNodeDoc {
    branches: Vec<ProcessBranchDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProcessBranchDoc {
    value: Vec<Scalar>,
    prob: Scalar,
    child: Option<ProcessNodeDoc>,
}

fn process_node_out(node: &Node) -> Option<ProcessNodeDoc> {
    (!node.is_leaf()).then(|| ProcessNodeDoc {
        branches: node
            .branches
            .iter()
            .map(|b| ProcessBranchDoc {
                value: value_out(&b.value),
                prob: text(&b.prob),
                child: process_node_out(&b.child),
            })
            .collect(),
    })
}

fn process_node_in(doc: &ProcessNodeDoc) -> Result<Node, FormatError> {
    let mut branches = Vec::with_capacity(doc.branches.len());
    for b in &doc.branches {
        branches.push(Branch {
            value: value_in(&b.value)?,
            prob: b.prob.parse()?,
            child: match &b.child {
                Some(c) => process_node_in(c)?,
                None => Node::leaf(),
            },
        });
    }
    Ok(Node { branches })
}

pub fn process_to_json(p: &FiniteProcess) -> String {
    let doc = ProcessDoc {
        format_version: Some(FORMAT_VERSION),
        dimension: p.dimension,
        depth: p.depth,
        root: process_node_out(&p.root).unwrap_or(ProcessNodeDoc { branches: Vec::new() }),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// Parses and validates a process document.
pub fn process_from_json(text: &str) -> Result<FiniteProcess, FormatError> {
    let doc: ProcessDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    let root = process_node_in(&doc.root)?;
    Ok(FiniteProcess::new(doc.dimension, doc.depth, root)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct RepDoc {
    #[serde(default)]
    format_version: Option<u32>,
    dimension: usize,
    depth: usize,
    root: RepNodeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct RepNodeDoc {
    branches: Vec<RepBranchDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RepBranchDoc {
    interval: [Scalar; 2],
    value: Vec<Scalar>,
    child: Option<RepNodeDoc>,
}

fn interval_out(iv: &Interval) -> [Scalar; 2] {
    [text(&iv.lo), text(&iv.hi)]
}

fn interval_in(raw: &[Scalar; 2]) -> Result<Interval, FormatError> {
    Ok(Interval::new(raw[0].parse()?, raw[1].parse()?)?)
}

fn rep_node_out(node: &CellNode) -> Option<RepNodeDoc> {
    (!node.is_leaf()).then(|| RepNodeDoc {
        branches: node
            .cells()
            .iter()
            .enumerate()
            .map(|(i, c)| RepBranchDoc {
                interval: interval_out(&node.interval(i)),
                value: value_out(&c.value),
                child: rep_node_out(&c.child),
            })
            .collect(),
    })
}

fn rep_node_in(doc: &RepNodeDoc) -> Result<CellNode, FormatError> {
    let mut parts = Vec::with_capacity(doc.branches.len());
    for b in &doc.branches {
        let child = match &b.child {
            Some(c) => rep_node_in(c)?,
            None => CellNode::leaf(),
        };
        parts.push((interval_in(&b.interval)?, value_in(&b.value)?, child));
    }
    Ok(CellNode::from_intervals(parts)?)
}

pub fn representation_to_json(r: &CellRepresentation) -> String {
    let doc = RepDoc {
        format_version: Some(FORMAT_VERSION),
        dimension: r.dimension(),
        depth: r.depth(),
        root: rep_node_out(r.root()).unwrap_or(RepNodeDoc { branches: Vec::new() }),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// Parses and validates a representation document.
pub fn representation_from_json(text: &str) -> Result<CellRepresentation, FormatError> {
    let doc: RepDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    let root = rep_node_in(&doc.root)?;
    Ok(CellRepresentation::new(doc.dimension, doc.depth, root)?)
}

/// Parses a representation-shaped document whose values need not ascend.
pub fn cell_tree_from_json(text: &str) -> Result<CellTree, FormatError> {
    let doc: RepDoc = serde_json::from_str(text)?;
    check_version(doc.format_version)?;
    let root = rep_node_in(&doc.root)?;
    Ok(CellTree::new(doc.dimension, doc.depth, root)?)
}

/// Distinguishes a representation document from a process document.
pub fn looks_like_representation(text: &str) -> bool {
    text.contains("\"interval\"")
}

#[derive(Debug, Serialize)]
struct TransportDoc {
    format_version: u32,
    sections: Vec<TransportSectionDoc>,
}

#[derive(Debug, Serialize)]
struct TransportSectionDoc {
    step: usize,
    prefix: Vec<Vec<Scalar>>,
    history: Vec<[Scalar; 2]>,
    pieces: Vec<[[Scalar; 2]; 2]>,
}

/// Transport document: one section per step and history, each a list of
/// `[[src_lo, src_hi], [tgt_lo, tgt_hi]]` pieces.
pub fn transport_to_json(steps: &[Vec<TransportMap>]) -> String {
    let piece = |p: &Piece| [interval_out(&p.source), interval_out(&p.target)];
    let doc = TransportDoc {
        format_version: FORMAT_VERSION,
        sections: steps
            .iter()
            .flatten()
            .map(|t| TransportSectionDoc {
                step: t.step,
                prefix: t.prefix.iter().map(value_out).collect(),
                history: t.history.iter().map(interval_out).collect(),
                pieces: t.pieces.iter().map(piece).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// Stable 64-bit FNV-1a fingerprint, used to tag sampled batches with the
/// representation they came from.
pub fn fingerprint(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("fnv1a64:{h:016x}")
}
