//! Measure-preserving rearrangements between tangent steps.
//!
//! For a tangent pair, each history cell of the pair representation carries
//! two step functions on `[0, 1)`: the `f`-part `h` (cells grouped by
//! ascending `f` value) and the `g`-part `k`. The transport map `phi` sends
//! every cell, read through its `g` value `w`, into the block of `h`'s
//! partition where `h = w`, consecutively and left to right. Tangency makes
//! the block lengths match, so `phi` is a piecewise-affine bijection with
//! `k = h . phi`.

use crate::canon::{AugmentedRepresentation, CellNode, CellRepresentation, CellTree, Interval, RepError};
use crate::process::{are_tangent, format_path, Branch, FiniteProcess, Node, PairProcess, Value, Verdict};
use crate::rational::Rational;
use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("pair is not tangent after {prefix}: first-component law {first} vs second {second}")]
    NotTangent {
        prefix: String,
        first: String,
        second: String,
    },
    #[error("{0} is not an atom of the node")]
    NotAnAtom(String),
    #[error("tie-break coordinate {0} is outside [0, 1)")]
    TieOutOfRange(String),
    #[error("base representation does not belong to the pair process")]
    BaseMismatch,
    #[error(transparent)]
    Rep(#[from] RepError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub source: Interval,
    pub target: Interval,
}

impl Piece {
    /// Increasing affine map from `source` onto `target`.
    pub fn apply(&self, x: &Rational) -> Rational {
        &self.target.lo + (x - &self.source.lo) * self.target.length() / self.source.length()
    }
}

/// `phi_n(x_1, ..., x_{n-1}, .)` on one history section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportMap {
    /// One-based step index.
    pub step: usize,
    /// Pair values observed before this step.
    pub prefix: Vec<Value>,
    /// Cells of the history chain, one per earlier step.
    pub history: Vec<Interval>,
    /// Sorted by source.
    pub pieces: Vec<Piece>,
}

impl TransportMap {
    pub fn identity(step: usize) -> Self {
        TransportMap {
            step,
            prefix: Vec::new(),
            history: Vec::new(),
            pieces: vec![Piece {
                source: Interval::unit(),
                target: Interval::unit(),
            }],
        }
    }

    pub fn apply(&self, x: &Rational) -> Option<Rational> {
        let i = self.pieces.partition_point(|p| &p.source.lo <= x);
        let piece = self.pieces.get(i.checked_sub(1)?)?;
        piece.source.contains(x).then(|| piece.apply(x))
    }

    pub fn is_identity(&self) -> bool {
        self.pieces.iter().all(|p| p.source == p.target)
    }
}

/// Builds `phi_n` for every step and history section.
///
/// `base` must be the canonical representation of `pq`; its cells fix the
/// coordinates that `h` and `k` are read from.
pub fn build_transport(pq: &PairProcess, base: &CellRepresentation) -> Result<Vec<Vec<TransportMap>>, TransportError> {
    if let Verdict::Fails(w) = are_tangent(pq) {
        return Err(TransportError::NotTangent {
            prefix: format_path(&w.prefix),
            first: format_law(&w.first_law),
            second: format_law(&w.second_law),
        });
    }
    if base.dimension() != pq.process().dimension || base.depth() != pq.depth() {
        return Err(TransportError::BaseMismatch);
    }
    let half = pq.half();
    let mut steps: Vec<Vec<TransportMap>> = vec![Vec::new(); pq.depth()];
    for (prefix, node) in base.nodes() {
        let n = prefix.len();
        let mut blocks: BTreeMap<Value, (Rational, Rational)> = BTreeMap::new();
        for (i, cell) in node.cells().iter().enumerate() {
            let (f, _) = cell.value.split_at(half);
            let iv = node.interval(i);
            blocks
                .entry(f)
                .and_modify(|b| b.1 = iv.hi.clone())
                .or_insert((iv.lo, iv.hi));
        }
        let mut cursor: BTreeMap<Value, Rational> = blocks.iter().map(|(v, b)| (v.clone(), b.0.clone())).collect();
        let mut pieces = Vec::with_capacity(node.len());
        for (i, cell) in node.cells().iter().enumerate() {
            let (_, g) = cell.value.split_at(half);
            let source = node.interval(i);
            let mismatch = || TransportError::NotTangent {
                prefix: format_path(&prefix),
                first: "f-blocks".into(),
                second: g.to_string(),
            };
            let start = cursor.get_mut(&g).ok_or_else(mismatch)?;
            let end = &*start + source.length();
            if end > blocks[&g].1 {
                return Err(mismatch());
            }
            let target = Interval {
                lo: start.clone(),
                hi: end.clone(),
            };
            *start = end;
            pieces.push(Piece { source, target });
        }
        let history = crate::canon::coordinate_recovery_prefix(base, &prefix)?;
        steps[n].push(TransportMap {
            step: n + 1,
            prefix,
            history,
            pieces,
        });
    }
    Ok(steps)
}

fn format_law(law: &[(Value, Rational)]) -> String {
    let parts: Vec<String> = law
        .iter()
        .map(|(v, p)| format!("{v}:{}", crate::rational::format_rational(p)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Pairs two representations over common coordinates. At each level the
/// branches are the overlaps of an `h`-cell with a `k`-cell, weighted by
/// the overlap length, so the pair tree is the joint law of `(h, k)` under
/// Lebesgue measure with the filtration of the coordinate cells.
pub fn pair_from_representations(h: &CellTree, k: &CellTree) -> Result<PairProcess, TransportError> {
    if h.dimension != k.dimension || h.depth != k.depth {
        return Err(TransportError::BaseMismatch);
    }
    fn go(a: &CellNode, b: &CellNode) -> Node {
        let mut branches = Vec::new();
        for (i, ca) in a.cells().iter().enumerate() {
            for (j, cb) in b.cells().iter().enumerate() {
                let prob = a.interval(i).overlap(&b.interval(j));
                if prob.is_positive() {
                    branches.push(Branch {
                        value: ca.value.concat(&cb.value),
                        prob,
                        child: go(&ca.child, &cb.child),
                    });
                }
            }
        }
        Node { branches }
    }
    let p = FiniteProcess::new(2 * h.dimension, h.depth, go(&h.root, &k.root))
        .map_err(|e| TransportError::Rep(RepError::Process(e)))?;
    Ok(PairProcess::new(p).expect("even dimension"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureWitness {
    UnequalLengths { source: Interval, target: Interval },
    SourceNotTiling,
    TargetNotTiling,
    /// Preimage measure of a dyadic grid cell differs from its length.
    GridCell { cell: Interval, preimage: Rational },
}

/// Side of the dyadic grid used by [`verify_measure_preserving`].
pub const GRID_BITS: u32 = 10;

fn tiles(intervals: &mut [&Interval]) -> bool {
    intervals.sort();
    let mut at = Rational::zero();
    for iv in intervals.iter() {
        if iv.lo != at {
            return false;
        }
        at = iv.hi.clone();
    }
    at.is_one()
}

pub fn verify_measure_preserving(t: &TransportMap) -> Verdict<MeasureWitness> {
    for p in &t.pieces {
        if p.source.length() != p.target.length() {
            return Verdict::Fails(MeasureWitness::UnequalLengths {
                source: p.source.clone(),
                target: p.target.clone(),
            });
        }
    }
    if !tiles(&mut t.pieces.iter().map(|p| &p.source).collect::<Vec<_>>()) {
        return Verdict::Fails(MeasureWitness::SourceNotTiling);
    }
    if !tiles(&mut t.pieces.iter().map(|p| &p.target).collect::<Vec<_>>()) {
        return Verdict::Fails(MeasureWitness::TargetNotTiling);
    }
    let cells = 1u64 << GRID_BITS;
    let side = Rational::new(BigInt::one(), BigInt::from(cells));
    for k in 0..cells {
        let cell = Interval {
            lo: &side * Rational::from_integer(k.into()),
            hi: &side * Rational::from_integer((k + 1).into()),
        };
        let preimage: Rational = t
            .pieces
            .iter()
            .map(|p| p.target.overlap(&cell) * p.source.length() / p.target.length())
            .sum();
        if preimage != side {
            return Verdict::Fails(MeasureWitness::GridCell { cell, preimage });
        }
    }
    Verdict::Holds
}

/// Coordinate in the cell of atom `s` whose tie-break value is `tie`.
pub fn generalized_inverse(
    r: &AugmentedRepresentation,
    prefix: &[Value],
    s: &Value,
    tie: &Rational,
) -> Result<Rational, TransportError> {
    if *tie < Rational::zero() || *tie >= Rational::one() {
        return Err(TransportError::TieOutOfRange(crate::rational::format_rational(tie)));
    }
    let node = r.base().node_at(prefix)?;
    if node.find(s).is_none() {
        return Err(TransportError::NotAnAtom(s.to_string()));
    }
    Ok(r.tie_break(prefix, s)?.invert(tie))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaved {
    pub first: Rational,
    pub second: Rational,
    /// `x` had more than `2 * bits` binary digits and was truncated.
    pub truncated: bool,
}

/// Bit interleaving `[0, 1) -> [0, 1)^2` at a fixed precision: odd binary
/// digits feed the first coordinate, even digits the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterleavingMap {
    bits: u32,
}

impl InterleavingMap {
    /// `bits` per output coordinate, at most 63.
    pub fn new(bits: u32) -> Self {
        assert!((1..=63).contains(&bits), "precision must be 1..=63 bits");
        InterleavingMap { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Splits the `2 * bits` leading digits of an integer code.
    pub fn split_code(&self, code: u128) -> (u64, u64) {
        let total = 2 * self.bits;
        let (mut a, mut b) = (0u64, 0u64);
        for pos in 1..=total {
            let bit = ((code >> (total - pos)) & 1) as u64;
            if pos % 2 == 1 {
                a = (a << 1) | bit;
            } else {
                b = (b << 1) | bit;
            }
        }
        (a, b)
    }

    pub fn merge_code(&self, a: u64, b: u64) -> u128 {
        let mut code = 0u128;
        for j in (0..self.bits).rev() {
            code = (code << 1) | ((a >> j) & 1) as u128;
            code = (code << 1) | ((b >> j) & 1) as u128;
        }
        code
    }

    fn scale(bits: u32) -> Rational {
        Rational::from_integer(BigInt::one() << bits)
    }

    /// For `x` in `[0, 1)`.
    pub fn interleave(&self, x: &Rational) -> Interleaved {
        let scaled = x * Self::scale(2 * self.bits);
        let truncated = !scaled.is_integer();
        let code = scaled.floor().to_integer().to_u128().expect("x in [0, 1)");
        let (a, b) = self.split_code(code);
        let denom = Self::scale(self.bits);
        Interleaved {
            first: Rational::from_integer(a.into()) / &denom,
            second: Rational::from_integer(b.into()) / &denom,
            truncated,
        }
    }

    /// Inverse on `bits`-digit dyadics; reports truncation of longer inputs.
    pub fn deinterleave(&self, first: &Rational, second: &Rational) -> (Rational, bool) {
        let s = Self::scale(self.bits);
        let (fa, fb) = (first * &s, second * &s);
        let truncated = !fa.is_integer() || !fb.is_integer();
        let a = fa.floor().to_integer().to_u64().expect("coordinate in [0, 1)");
        let b = fb.floor().to_integer().to_u64().expect("coordinate in [0, 1)");
        let code = self.merge_code(a, b);
        (
            Rational::from_integer(BigInt::from(code)) / Self::scale(2 * self.bits),
            truncated,
        )
    }

    /// Lebesgue measure of `{x : interleave(x) in first x second}` computed
    /// by counting the `4^bits` dyadic cells whose image lies in the
    /// rectangle. Exact for rectangles with dyadic sides of at least
    /// `2^-bits`.
    pub fn preimage_measure(&self, first: &Interval, second: &Interval) -> Rational {
        let denom = Self::scale(self.bits);
        let total = 1u128 << (2 * self.bits);
        let mut hits = 0u128;
        for code in 0..total {
            let (a, b) = self.split_code(code);
            let pa = Rational::from_integer(a.into()) / &denom;
            let pb = Rational::from_integer(b.into()) / &denom;
            if first.contains(&pa) && second.contains(&pb) {
                hits += 1;
            }
        }
        Rational::from_integer(BigInt::from(hits)) / Self::scale(2 * self.bits)
    }
}
