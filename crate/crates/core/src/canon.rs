//! Conditional-quantile (increasing rearrangement) representation of a
//! finite process on the unit cube.
//!
//! Each node of a [`CellRepresentation`] tiles `[0, 1)` with half-open
//! cells, one per distinct next value, in ascending value order. The cell
//! containing the `n`-th coordinate selects the `n`-th value, and a cell's
//! length is the conditional probability of its value. Partitions are stored
//! as cumulative endpoints so point location is a binary search.

use crate::process::{conditional_law, format_path, FiniteProcess, Node, PathLaw, ProcessError, Value};
use crate::rational::{format_rational, Rational};
use num::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepError {
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("coordinate {0} is outside (0, 1)")]
    XOutOfRange(String),
    #[error("expected {expected} coordinates, got {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("path {0} is not realizable in the representation")]
    UnreachablePath(String),
    #[error("invalid interval [{lo}, {hi})")]
    BadInterval { lo: String, hi: String },
    #[error("cells at {0} do not tile [0, 1) contiguously")]
    NotTiling(String),
    #[error("cell values at {0} are not strictly ascending")]
    NotAscending(String),
    #[error("representation tree is ragged at {0}")]
    RaggedDepth(String),
    #[error("value dimension mismatch at {0}")]
    DimensionMismatch(String),
}

/// Half-open `[lo, hi)` with `0 <= lo < hi <= 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, RepError> {
        if lo.is_negative() || hi > Rational::one() || lo >= hi {
            return Err(RepError::BadInterval {
                lo: format_rational(&lo),
                hi: format_rational(&hi),
            });
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x < &self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    /// Overlap length with another interval (zero when disjoint).
    pub fn overlap(&self, other: &Interval) -> Rational {
        let lo = (&self.lo).max(&other.lo);
        let hi = (&self.hi).min(&other.hi);
        if lo < hi {
            hi - lo
        } else {
            Rational::zero()
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", format_rational(&self.lo), format_rational(&self.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub value: Value,
    pub child: CellNode,
}

/// One partition of `[0, 1)`. `cuts` has one more entry than `cells`,
/// starting at 0 and ending at 1; a leaf has no cells and no cuts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellNode {
    cuts: Vec<Rational>,
    cells: Vec<Cell>,
}

impl CellNode {
    pub fn leaf() -> Self {
        CellNode::default()
    }

    /// Builds a partition from consecutive cell lengths.
    pub fn from_lengths(parts: Vec<(Value, Rational, CellNode)>) -> Self {
        if parts.is_empty() {
            return CellNode::leaf();
        }
        let mut cuts = vec![Rational::zero()];
        let mut cells = Vec::with_capacity(parts.len());
        for (value, length, child) in parts {
            let next = cuts.last().unwrap() + length;
            cuts.push(next);
            cells.push(Cell { value, child });
        }
        CellNode { cuts, cells }
    }

    /// Builds a partition from explicit intervals, which must tile `[0, 1)`
    /// left to right.
    pub fn from_intervals(parts: Vec<(Interval, Value, CellNode)>) -> Result<Self, RepError> {
        if parts.is_empty() {
            return Ok(CellNode::leaf());
        }
        let mut cuts = vec![Rational::zero()];
        let mut cells = Vec::with_capacity(parts.len());
        for (interval, value, child) in parts {
            if cuts.last() != Some(&interval.lo) {
                return Err(RepError::NotTiling(interval.to_string()));
            }
            cuts.push(interval.hi);
            cells.push(Cell { value, child });
        }
        if cells.is_empty() || !cuts.last().unwrap().is_one() {
            return Err(RepError::NotTiling("partition end".into()));
        }
        Ok(CellNode { cuts, cells })
    }

    pub fn is_leaf(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cuts(&self) -> &[Rational] {
        &self.cuts
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval {
            lo: self.cuts[i].clone(),
            hi: self.cuts[i + 1].clone(),
        }
    }

    pub fn length(&self, i: usize) -> Rational {
        &self.cuts[i + 1] - &self.cuts[i]
    }

    /// Index of the cell containing `x`, for `x` in `[0, 1)`.
    pub fn locate(&self, x: &Rational) -> usize {
        self.cuts.partition_point(|c| c <= x) - 1
    }

    /// Same as [`CellNode::locate`] for a float coordinate.
    pub fn locate_f64(&self, x: f64) -> usize {
        let i = self.cuts.partition_point(|c| crate::rational::to_f64(c) <= x);
        i.clamp(1, self.cells.len()) - 1
    }

    /// Index of the cell carrying `value`.
    pub fn find(&self, value: &Value) -> Option<usize> {
        self.cells.binary_search_by(|c| c.value.cmp(value)).ok()
    }

    /// Sum of length times value over the cells.
    pub fn section_integral(&self, dimension: usize) -> Value {
        (0..self.len()).fold(Value::zero(dimension), |acc, i| {
            acc.add(&self.cells[i].value.scale(&self.length(i)))
        })
    }
}

/// The canonical functions `g_1, ..., g_N` as nested cell partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellRepresentation {
    dimension: usize,
    depth: usize,
    root: CellNode,
}

impl CellRepresentation {
    /// Validates tiling, strictly ascending values, uniform depth and
    /// dimension.
    pub fn new(dimension: usize, depth: usize, root: CellNode) -> Result<Self, RepError> {
        validate_cell_tree(dimension, depth, &root, true)?;
        Ok(CellRepresentation { dimension, depth, root })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> &CellNode {
        &self.root
    }

    /// The node reached by a value prefix.
    pub fn node_at(&self, prefix: &[Value]) -> Result<&CellNode, RepError> {
        let mut node = &self.root;
        for v in prefix {
            match node.find(v) {
                Some(i) => node = &node.cells[i].child,
                None => return Err(RepError::Process(ProcessError::UnreachablePrefix(format_path(prefix)))),
            }
        }
        if node.is_leaf() {
            return Err(RepError::Process(ProcessError::UnreachablePrefix(format_path(prefix))));
        }
        Ok(node)
    }

    fn check_coordinates(&self, x: &[Rational]) -> Result<(), RepError> {
        if x.len() != self.depth {
            return Err(RepError::WrongLength {
                expected: self.depth,
                found: x.len(),
            });
        }
        if let Some(bad) = x.iter().find(|c| !c.is_positive() || **c >= Rational::one()) {
            return Err(RepError::XOutOfRange(format_rational(bad)));
        }
        Ok(())
    }

    /// Cell indices selected by `x`, one per step.
    pub fn locate_chain(&self, x: &[Rational]) -> Result<Vec<usize>, RepError> {
        self.check_coordinates(x)?;
        let mut node = &self.root;
        let mut out = Vec::with_capacity(x.len());
        for xi in x {
            let i = node.locate(xi);
            out.push(i);
            node = &node.cells[i].child;
        }
        Ok(out)
    }

    /// Every internal node with its value prefix, depth first.
    pub fn nodes(&self) -> Vec<(Vec<Value>, &CellNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(Vec::new(), &self.root)];
        while let Some((prefix, node)) = stack.pop() {
            if node.is_leaf() {
                continue;
            }
            for cell in node.cells.iter().rev() {
                let mut next = prefix.clone();
                next.push(cell.value.clone());
                stack.push((next, &cell.child));
            }
            out.push((prefix, node));
        }
        out
    }
}

/// Piecewise-constant functions on the unit cube with the same nesting as
/// a representation but no ordering constraint on values. Two of these
/// over shared coordinates are the input to transport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellTree {
    pub dimension: usize,
    pub depth: usize,
    pub root: CellNode,
}

impl CellTree {
    pub fn new(dimension: usize, depth: usize, root: CellNode) -> Result<Self, RepError> {
        validate_cell_tree(dimension, depth, &root, false)?;
        Ok(CellTree { dimension, depth, root })
    }
}

impl From<CellRepresentation> for CellTree {
    fn from(r: CellRepresentation) -> Self {
        CellTree {
            dimension: r.dimension,
            depth: r.depth,
            root: r.root,
        }
    }
}

/// Structural check of a cell tree: every node at depth below `depth`
/// tiles `[0, 1)`, leaves sit exactly at `depth`, values have `dimension`
/// coordinates and, when `ascending`, strictly increase left to right.
pub fn validate_cell_tree(dimension: usize, depth: usize, root: &CellNode, ascending: bool) -> Result<(), RepError> {
    fn go(node: &CellNode, prefix: &mut Vec<Value>, depth: usize, dim: usize, ascending: bool) -> Result<(), RepError> {
        let here = format_path(prefix);
        if prefix.len() == depth {
            return if node.is_leaf() { Ok(()) } else { Err(RepError::RaggedDepth(here)) };
        }
        if node.is_leaf() || node.cuts.len() != node.cells.len() + 1 {
            return Err(RepError::RaggedDepth(here));
        }
        if !node.cuts[0].is_zero() || !node.cuts.last().unwrap().is_one() || node.cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RepError::NotTiling(here));
        }
        if ascending && node.cells.windows(2).any(|w| w[0].value >= w[1].value) {
            return Err(RepError::NotAscending(here));
        }
        for cell in &node.cells {
            if cell.value.dimension() != dim {
                return Err(RepError::DimensionMismatch(here.clone()));
            }
            prefix.push(cell.value.clone());
            go(&cell.child, prefix, depth, dim, ascending)?;
            prefix.pop();
        }
        Ok(())
    }
    if dimension == 0 || depth == 0 {
        return Err(ProcessError::Empty.into());
    }
    go(root, &mut Vec::new(), depth, dimension, ascending)
}

fn build_from_process(node: &Node) -> CellNode {
    CellNode::from_lengths(
        node.branches
            .iter()
            .map(|b| (b.value.clone(), b.prob.clone(), build_from_process(&b.child)))
            .collect(),
    )
}

/// `Pr(next value < t | prefix)` under the strict lexicographic order.
pub fn conditional_cdf(p: &FiniteProcess, prefix: &[Value], t: &Value) -> Result<Rational, ProcessError> {
    Ok(conditional_law(p, prefix)?
        .into_iter()
        .filter(|(v, _)| v < t)
        .map(|(_, q)| q)
        .sum())
}

/// Conditional quantile with half-open cells: returns the atom `v` with
/// `cdf(v) <= x < cdf(v) + Pr(v)`. A boundary point goes to the right-hand
/// atom.
pub fn quantile_function(p: &FiniteProcess, prefix: &[Value], x: &Rational) -> Result<Value, RepError> {
    if !x.is_positive() || *x >= Rational::one() {
        return Err(RepError::XOutOfRange(format_rational(x)));
    }
    let law = conditional_law(p, prefix)?;
    let mut upper = Rational::zero();
    for (v, q) in &law {
        upper += q;
        if *x < upper {
            return Ok(v.clone());
        }
    }
    // Unreachable for a valid process: the masses sum to 1 > x.
    Ok(law.last().expect("non-empty law").0.clone())
}

pub fn canonical_representation(p: &FiniteProcess) -> CellRepresentation {
    CellRepresentation {
        dimension: p.dimension,
        depth: p.depth,
        root: build_from_process(&p.aggregated().root),
    }
}

pub fn evaluate(r: &CellRepresentation, x: &[Rational]) -> Result<Vec<Value>, RepError> {
    r.check_coordinates(x)?;
    let mut node = &r.root;
    let mut out = Vec::with_capacity(x.len());
    for xi in x {
        let cell = &node.cells[node.locate(xi)];
        out.push(cell.value.clone());
        node = &cell.child;
    }
    Ok(out)
}

pub fn law_of_representation(r: &CellRepresentation) -> PathLaw {
    fn go(node: &CellNode, prefix: &mut Vec<Value>, weight: Rational, out: &mut Vec<(Vec<Value>, Rational)>) {
        if node.is_leaf() {
            out.push((prefix.clone(), weight));
            return;
        }
        for (i, cell) in node.cells.iter().enumerate() {
            prefix.push(cell.value.clone());
            go(&cell.child, prefix, &weight * node.length(i), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&r.root, &mut Vec::new(), Rational::one(), &mut out);
    PathLaw::from_entries(out)
}

/// The chain of cells whose values spell out `path`.
pub fn coordinate_recovery(r: &CellRepresentation, path: &[Value]) -> Result<Vec<Interval>, RepError> {
    if path.len() != r.depth {
        return Err(RepError::UnreachablePath(format_path(path)));
    }
    let mut node = &r.root;
    let mut out = Vec::with_capacity(path.len());
    for v in path {
        let i = node.find(v).ok_or_else(|| RepError::UnreachablePath(format_path(path)))?;
        out.push(node.interval(i));
        node = &node.cells[i].child;
    }
    Ok(out)
}

/// Cells along a value prefix of any length up to the depth.
pub fn coordinate_recovery_prefix(r: &CellRepresentation, prefix: &[Value]) -> Result<Vec<Interval>, RepError> {
    let mut node = &r.root;
    let mut out = Vec::with_capacity(prefix.len());
    for v in prefix {
        let i = node.find(v).ok_or_else(|| RepError::UnreachablePath(format_path(prefix)))?;
        out.push(node.interval(i));
        node = &node.cells[i].child;
    }
    Ok(out)
}

/// Increasing affine bijection from a cell onto `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieBreak {
    pub interval: Interval,
}

impl TieBreak {
    pub fn apply(&self, x: &Rational) -> Rational {
        (x - &self.interval.lo) / self.interval.length()
    }

    pub fn invert(&self, t: &Rational) -> Rational {
        &self.interval.lo + t * self.interval.length()
    }
}

/// A representation whose steps carry an auxiliary tie-break coordinate,
/// making `x_n -> (value, tie)` strictly increasing and invertible within
/// every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedRepresentation {
    base: CellRepresentation,
}

pub fn augment(r: &CellRepresentation) -> AugmentedRepresentation {
    AugmentedRepresentation { base: r.clone() }
}

impl AugmentedRepresentation {
    pub fn base(&self) -> &CellRepresentation {
        &self.base
    }

    pub fn tie_break(&self, prefix: &[Value], value: &Value) -> Result<TieBreak, RepError> {
        let node = self.base.node_at(prefix)?;
        let i = node.find(value).ok_or_else(|| {
            let mut path = prefix.to_vec();
            path.push(value.clone());
            RepError::UnreachablePath(format_path(&path))
        })?;
        Ok(TieBreak {
            interval: node.interval(i),
        })
    }

    /// Every branch's tie-break map, keyed by value prefix and value.
    pub fn tie_breaks(&self) -> Vec<(Vec<Value>, Value, TieBreak)> {
        self.base
            .nodes()
            .into_iter()
            .flat_map(|(prefix, node)| {
                (0..node.len()).map(move |i| {
                    (
                        prefix.clone(),
                        node.cells[i].value.clone(),
                        TieBreak {
                            interval: node.interval(i),
                        },
                    )
                })
            })
            .collect()
    }

    /// Value and tie-break coordinate at every step.
    pub fn evaluate(&self, x: &[Rational]) -> Result<Vec<(Value, Rational)>, RepError> {
        self.base.check_coordinates(x)?;
        let mut node = &self.base.root;
        let mut out = Vec::with_capacity(x.len());
        for xi in x {
            let i = node.locate(xi);
            let tie = TieBreak {
                interval: node.interval(i),
            }
            .apply(xi);
            out.push((node.cells[i].value.clone(), tie));
            node = &node.cells[i].child;
        }
        Ok(out)
    }
}
