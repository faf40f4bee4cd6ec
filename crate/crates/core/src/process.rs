//! Finite filtered probability spaces.
//!
//! A [`FiniteProcess`] is a depth-`N` tree. Each node is an atom of the
//! filtration at its depth and carries the conditional distribution of the
//! next value as a list of weighted branches. All arithmetic is exact.

use crate::rational::{format_rational, Rational};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// A point of `Q^d`. The derived ordering is lexicographic by coordinate,
/// which is the canonical order used throughout the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(Vec<Rational>);

impl Value {
    pub fn new(coords: Vec<Rational>) -> Self {
        Value(coords)
    }

    pub fn scalar(x: Rational) -> Self {
        Value(vec![x])
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Value(coords.iter().map(|&c| crate::rational::int(c)).collect())
    }

    pub fn zero(dimension: usize) -> Self {
        Value(vec![Rational::zero(); dimension])
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &Value) -> Value {
        Value(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Value) -> Value {
        Value(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: &Rational) -> Value {
        Value(self.0.iter().map(|a| a * factor).collect())
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> Rational {
        self.0
            .iter()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> Rational {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn concat(&self, other: &Value) -> Value {
        Value(self.0.iter().chain(&other.0).cloned().collect())
    }

    pub fn split_at(&self, mid: usize) -> (Value, Value) {
        let (a, b) = self.0.split_at(mid);
        (Value(a.to_vec()), Value(b.to_vec()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(crate::rational::to_f64).collect()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if c.is_integer() {
                write!(f, "{}", c.numer())?;
            } else {
                write!(f, "{}", format_rational(c))?;
            }
        }
        write!(f, ")")
    }
}

pub fn format_path(path: &[Value]) -> String {
    let parts: Vec<String> = path.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(" "))
}

/// Branch indices from the root to a node.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    fn child(&self, index: usize) -> NodePath {
        let mut next = self.0.clone();
        next.push(index);
        NodePath(next)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root")?;
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub value: Value,
    pub prob: Rational,
    pub child: Node,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Node {
    pub branches: Vec<Branch>,
}

impl Node {
    pub fn leaf() -> Node {
        Node::default()
    }

    pub fn is_leaf(&self) -> bool {
        self.branches.is_empty()
    }

    /// A node whose branches are all leaves.
    pub fn terminal(law: Vec<(Value, Rational)>) -> Node {
        Node {
            branches: law
                .into_iter()
                .map(|(value, prob)| Branch {
                    value,
                    prob,
                    child: Node::leaf(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProcessError {
    #[error("non-positive probability {prob} on branch {branch} at {node}")]
    NonPositiveProb {
        node: NodePath,
        branch: usize,
        prob: String,
    },
    #[error("branch probabilities at {node} sum to {sum}, not 1")]
    ProbSumNotOne { node: NodePath, sum: String },
    #[error("ragged tree at {node}: node at depth {depth} in a process of depth {expected}")]
    RaggedDepth {
        node: NodePath,
        depth: usize,
        expected: usize,
    },
    #[error("value of dimension {found} on branch {branch} at {node}; process dimension is {expected}")]
    DimensionMismatch {
        node: NodePath,
        branch: usize,
        expected: usize,
        found: usize,
    },
    #[error("process must have dimension >= 1 and depth >= 1")]
    Empty,
    #[error("prefix {0} is not realizable")]
    UnreachablePrefix(String),
}

/// A finitely supported adapted sequence of `Q^d`-valued steps.
///
/// Fields are public for inspection; [`FiniteProcess::new`] is the
/// validating constructor and every operation assumes a valid process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteProcess {
    pub dimension: usize,
    pub depth: usize,
    pub root: Node,
}

/// Aggregated conditional distribution, sorted by value.
pub type Law = Vec<(Value, Rational)>;

pub(crate) fn aggregate_law<'a>(items: impl IntoIterator<Item = (&'a Value, Rational)>) -> Law {
    let mut acc: BTreeMap<Value, Rational> = BTreeMap::new();
    for (v, p) in items {
        *acc.entry(v.clone()).or_insert_with(Rational::zero) += p;
    }
    acc.into_iter().collect()
}

impl FiniteProcess {
    pub fn new(dimension: usize, depth: usize, root: Node) -> Result<Self, ProcessError> {
        let p = FiniteProcess {
            dimension,
            depth,
            root,
        };
        validate_process(&p)?;
        Ok(p)
    }

    /// All nodes reached by `prefix`, weighted by the probability of the
    /// branches taken to reach them.
    pub(crate) fn reach(&self, prefix: &[Value]) -> Result<Vec<(Rational, &Node)>, ProcessError> {
        let mut frontier = vec![(Rational::one(), &self.root)];
        for v in prefix {
            let mut next = Vec::new();
            for (w, node) in &frontier {
                for b in node.branches.iter().filter(|b| &b.value == v) {
                    next.push((w * &b.prob, &b.child));
                }
            }
            if next.is_empty() {
                return Err(ProcessError::UnreachablePrefix(format_path(prefix)));
            }
            frontier = next;
        }
        Ok(frontier)
    }

    /// Merges equal-valued branches at every node, mixing their subtrees, so
    /// that nodes correspond to value histories. Branches come out sorted.
    pub fn aggregated(&self) -> FiniteProcess {
        FiniteProcess {
            dimension: self.dimension,
            depth: self.depth,
            root: merge_nodes(vec![(Rational::one(), &self.root)]),
        }
    }

    /// Same tree shape with `f` applied to every branch value.
    pub(crate) fn map_values(&self, dimension: usize, f: &impl Fn(&Value) -> Value) -> FiniteProcess {
        fn go(node: &Node, f: &impl Fn(&Value) -> Value) -> Node {
            Node {
                branches: node
                    .branches
                    .iter()
                    .map(|b| Branch {
                        value: f(&b.value),
                        prob: b.prob.clone(),
                        child: go(&b.child, f),
                    })
                    .collect(),
            }
        }
        FiniteProcess {
            dimension,
            depth: self.depth,
            root: go(&self.root, f),
        }
    }
}

fn merge_nodes(sources: Vec<(Rational, &Node)>) -> Node {
    let total: Rational = sources.iter().map(|(w, _)| w.clone()).sum();
    let mut by_value: BTreeMap<&Value, (Rational, Vec<(Rational, &Node)>)> = BTreeMap::new();
    for (w, node) in &sources {
        for b in &node.branches {
            let mass = w * &b.prob;
            let slot = by_value
                .entry(&b.value)
                .or_insert_with(|| (Rational::zero(), Vec::new()));
            slot.0 += &mass;
            slot.1.push((mass, &b.child));
        }
    }
    Node {
        branches: by_value
            .into_iter()
            .map(|(value, (mass, children))| Branch {
                value: value.clone(),
                prob: mass / &total,
                child: merge_nodes(children),
            })
            .collect(),
    }
}

pub fn validate_process(p: &FiniteProcess) -> Result<(), ProcessError> {
    if p.dimension == 0 || p.depth == 0 {
        return Err(ProcessError::Empty);
    }
    fn go(node: &Node, path: NodePath, depth: usize, p: &FiniteProcess) -> Result<(), ProcessError> {
        if depth == p.depth {
            if !node.is_leaf() {
                return Err(ProcessError::RaggedDepth {
                    node: path,
                    depth,
                    expected: p.depth,
                });
            }
            return Ok(());
        }
        if node.is_leaf() {
            return Err(ProcessError::RaggedDepth {
                node: path,
                depth,
                expected: p.depth,
            });
        }
        let mut sum = Rational::zero();
        for (i, b) in node.branches.iter().enumerate() {
            if b.value.dimension() != p.dimension {
                return Err(ProcessError::DimensionMismatch {
                    node: path,
                    branch: i,
                    expected: p.dimension,
                    found: b.value.dimension(),
                });
            }
            if !b.prob.is_positive() {
                return Err(ProcessError::NonPositiveProb {
                    node: path,
                    branch: i,
                    prob: format_rational(&b.prob),
                });
            }
            sum += &b.prob;
        }
        if !sum.is_one() {
            return Err(ProcessError::ProbSumNotOne {
                node: path,
                sum: format_rational(&sum),
            });
        }
        for (i, b) in node.branches.iter().enumerate() {
            go(&b.child, path.child(i), depth + 1, p)?;
        }
        Ok(())
    }
    go(&p.root, NodePath::default(), 0, p)
}

/// Exact law of a finite sequence: value-path to probability.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathLaw(BTreeMap<Vec<Value>, Rational>);

impl PathLaw {
    /// Sums repeated paths and drops zero masses.
    pub fn from_entries(entries: impl IntoIterator<Item = (Vec<Value>, Rational)>) -> Self {
        let mut map: BTreeMap<Vec<Value>, Rational> = BTreeMap::new();
        for (path, p) in entries {
            *map.entry(path).or_insert_with(Rational::zero) += p;
        }
        map.retain(|_, p| !p.is_zero());
        PathLaw(map)
    }

    pub fn get(&self, path: &[Value]) -> Option<&Rational> {
        self.0.get(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Value>, &Rational)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> Rational {
        self.0.values().cloned().sum()
    }

    /// Law of the value at step `k` (zero-based).
    pub fn step_marginal(&self, k: usize) -> Law {
        aggregate_law(self.0.iter().map(|(path, p)| (&path[k], p.clone())))
    }

    /// Pushforward of the law under a pathwise map.
    pub fn map_paths(&self, f: impl Fn(&[Value]) -> Vec<Value>) -> PathLaw {
        PathLaw::from_entries(self.0.iter().map(|(path, p)| (f(path), p.clone())))
    }
}

pub fn joint_law(p: &FiniteProcess) -> PathLaw {
    fn go(node: &Node, prefix: &mut Vec<Value>, weight: Rational, out: &mut Vec<(Vec<Value>, Rational)>) {
        if node.is_leaf() {
            out.push((prefix.clone(), weight));
            return;
        }
        for b in &node.branches {
            prefix.push(b.value.clone());
            go(&b.child, prefix, &weight * &b.prob, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&p.root, &mut Vec::new(), Rational::one(), &mut out);
    PathLaw::from_entries(out)
}

/// Law of the next value given the value history `prefix`, aggregated and
/// sorted. Conditioning is on the values, so distinct tree nodes sharing a
/// history are mixed by their reach probabilities.
pub fn conditional_law(p: &FiniteProcess, prefix: &[Value]) -> Result<Law, ProcessError> {
    if prefix.len() >= p.depth {
        return Err(ProcessError::UnreachablePrefix(format_path(prefix)));
    }
    let reached = p.reach(prefix)?;
    let total: Rational = reached.iter().map(|(w, _)| w.clone()).sum();
    let total = &total;
    Ok(aggregate_law(reached.iter().flat_map(|(w, node)| {
        node.branches
            .iter()
            .map(move |b| (&b.value, w * &b.prob / total))
    })))
}

/// Outcome of an exact check, carrying a witness on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<W> {
    Holds,
    Fails(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds => None,
            Verdict::Fails(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsWitness {
    pub node: NodePath,
    pub prefix: Vec<Value>,
    pub mean: Value,
}

/// Walks every internal node, depth first, with its node path and value
/// prefix. Stops at the first `Some` returned by `visit`.
fn find_node<W>(
    p: &FiniteProcess,
    mut visit: impl FnMut(&Node, &NodePath, &[Value]) -> Option<W>,
) -> Option<W> {
    let mut stack = vec![(&p.root, NodePath::default(), Vec::new())];
    while let Some((node, path, prefix)) = stack.pop() {
        if node.is_leaf() {
            continue;
        }
        if let Some(w) = visit(node, &path, &prefix) {
            return Some(w);
        }
        for (i, b) in node.branches.iter().enumerate().rev() {
            let mut next: Vec<Value> = prefix.clone();
            next.push(b.value.clone());
            stack.push((&b.child, path.child(i), next));
        }
    }
    None
}

pub(crate) fn node_mean(node: &Node, dimension: usize) -> Value {
    node.branches
        .iter()
        .fold(Value::zero(dimension), |acc, b| acc.add(&b.value.scale(&b.prob)))
}

/// Zero conditional mean at every node of the tree.
pub fn is_mds(p: &FiniteProcess) -> Verdict<MdsWitness> {
    match find_node(p, |node, path, prefix| {
        let mean = node_mean(node, p.dimension);
        (!mean.is_zero()).then(|| MdsWitness {
            node: path.clone(),
            prefix: prefix.to_vec(),
            mean,
        })
    }) {
        Some(w) => Verdict::Fails(w),
        None => Verdict::Holds,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub fn other(self) -> Component {
        match self {
            Component::First => Component::Second,
            Component::Second => Component::First,
        }
    }
}

/// Two `Q^d`-valued sequences on one filtration, stored as a single
/// `Q^{2d}`-valued process whose values are `(f_n, g_n)` concatenated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairProcess {
    process: FiniteProcess,
}

impl PairProcess {
    pub fn new(process: FiniteProcess) -> Result<Self, ProcessError> {
        if process.dimension % 2 != 0 {
            return Err(ProcessError::DimensionMismatch {
                node: NodePath::default(),
                branch: 0,
                expected: process.dimension + 1,
                found: process.dimension,
            });
        }
        validate_process(&process)?;
        Ok(PairProcess { process })
    }

    pub fn process(&self) -> &FiniteProcess {
        &self.process
    }

    pub fn into_process(self) -> FiniteProcess {
        self.process
    }

    /// Dimension of one component.
    pub fn half(&self) -> usize {
        self.process.dimension / 2
    }

    pub fn depth(&self) -> usize {
        self.process.depth
    }

    pub fn component(&self, value: &Value, which: Component) -> Value {
        let (f, g) = value.split_at(self.half());
        match which {
            Component::First => f,
            Component::Second => g,
        }
    }

    pub fn swapped(&self) -> PairProcess {
        let half = self.half();
        PairProcess {
            process: self.process.map_values(self.process.dimension, &|v| {
                let (f, g) = v.split_at(half);
                g.concat(&f)
            }),
        }
    }

    /// Marginal law of one component at a node.
    pub fn component_law(&self, node: &Node, which: Component) -> Law {
        let parts: Vec<(Value, Rational)> = node
            .branches
            .iter()
            .map(|b| (self.component(&b.value, which), b.prob.clone()))
            .collect();
        aggregate_law(parts.iter().map(|(v, p)| (v, p.clone())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TangencyWitness {
    pub node: NodePath,
    pub prefix: Vec<Value>,
    pub first_law: Law,
    pub second_law: Law,
}

/// Equal conditional laws of the two components at every node.
pub fn are_tangent(pq: &PairProcess) -> Verdict<TangencyWitness> {
    match find_node(&pq.process, |node, path, prefix| {
        let first_law = pq.component_law(node, Component::First);
        let second_law = pq.component_law(node, Component::Second);
        (first_law != second_law).then(|| TangencyWitness {
            node: path.clone(),
            prefix: prefix.to_vec(),
            first_law,
            second_law,
        })
    }) {
        Some(w) => Verdict::Fails(w),
        None => Verdict::Holds,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CiWitness {
    /// The conditional joint law of the checked path given the other path
    /// is not the product of its conditional marginals.
    DoesNotFactor {
        other_path: Vec<Value>,
        checked_path: Vec<Value>,
        joint: Rational,
        product: Rational,
    },
    /// The step law given the other path differs from the step law given
    /// the pair history.
    ConditionalLawMismatch {
        pair_prefix: Vec<Value>,
        step: usize,
        given_other_path: Law,
        given_history: Law,
    },
}

/// Condition (C.I.) for one component, with the conditioning sigma field
/// generated by the other component's full path.
///
/// A single-step sequence always satisfies the condition (the trivial sigma
/// field witnesses it), so depth 1 holds unconditionally.
pub fn satisfies_ci(pq: &PairProcess, checked: Component) -> Verdict<CiWitness> {
    if pq.depth() == 1 {
        return Verdict::Holds;
    }
    let law = joint_law(&pq.process);
    let n = pq.depth();
    let split = |path: &[Value]| -> (Vec<Value>, Vec<Value>) {
        path.iter()
            .map(|v| (pq.component(v, checked), pq.component(v, checked.other())))
            .unzip()
    };

    // Step laws of the checked component given the pair history.
    let mut given_history: BTreeMap<Vec<Value>, BTreeMap<Value, Rational>> = BTreeMap::new();
    for (path, p) in law.iter() {
        for k in 0..n {
            let slot = given_history.entry(path[..k].to_vec()).or_default();
            *slot
                .entry(pq.component(&path[k], checked))
                .or_insert_with(Rational::zero) += p;
        }
    }
    let normalize = |m: &BTreeMap<Value, Rational>| -> Law {
        let total: Rational = m.values().cloned().sum();
        m.iter().map(|(v, p)| (v.clone(), p / &total)).collect()
    };

    let mut groups: BTreeMap<Vec<Value>, Vec<(Vec<Value>, &Vec<Value>, &Rational)>> = BTreeMap::new();
    for (path, p) in law.iter() {
        let (c, o) = split(path);
        groups.entry(o).or_default().push((c, path, p));
    }

    for (other_path, members) in &groups {
        let total: Rational = members.iter().map(|(_, _, p)| (*p).clone()).sum();
        let marginals: Vec<BTreeMap<Value, Rational>> = (0..n)
            .map(|k| {
                let mut m: BTreeMap<Value, Rational> = BTreeMap::new();
                for (c, _, p) in members {
                    *m.entry(c[k].clone()).or_insert_with(Rational::zero) += *p / &total;
                }
                m
            })
            .collect();
        for (c, _, p) in members {
            let joint = *p / &total;
            let product: Rational = c.iter().zip(&marginals).map(|(v, m)| m[v].clone()).product();
            if joint != product {
                return Verdict::Fails(CiWitness::DoesNotFactor {
                    other_path: other_path.clone(),
                    checked_path: c.clone(),
                    joint,
                    product,
                });
            }
        }
        for (_, full, _) in members {
            for k in 0..n {
                let given_other: Law = marginals[k].iter().map(|(v, p)| (v.clone(), p.clone())).collect();
                let hist = normalize(&given_history[&full[..k]]);
                if given_other != hist {
                    return Verdict::Fails(CiWitness::ConditionalLawMismatch {
                        pair_prefix: full[..k].to_vec(),
                        step: k + 1,
                        given_other_path: given_other,
                        given_history: hist,
                    });
                }
            }
        }
    }
    Verdict::Holds
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::{int, rat};

    fn v(x: i64) -> Value {
        Value::from_ints(&[x])
    }

    #[test]
    fn validation_accepts_fair_coin_and_names_bad_nodes() {
        assert!(validate_process(&fair_coin()).is_ok());

        let bad_sum = FiniteProcess {
            dimension: 1,
            depth: 1,
            root: Node::terminal(vec![(v(0), rat(1, 2)), (v(1), rat(1, 3))]),
        };
        let err = validate_process(&bad_sum).unwrap_err();
        assert!(matches!(err, ProcessError::ProbSumNotOne { .. }));
        assert!(err.to_string().contains("root"));

        let zero = FiniteProcess {
            dimension: 1,
            depth: 1,
            root: Node::terminal(vec![(v(0), int(0)), (v(1), int(1))]),
        };
        assert!(matches!(validate_process(&zero), Err(ProcessError::NonPositiveProb { branch: 0, .. })));

        let ragged = FiniteProcess {
            dimension: 1,
            depth: 2,
            root: Node {
                branches: vec![
                    Branch { value: v(0), prob: rat(1, 2), child: Node::terminal(vec![(v(0), int(1))]) },
                    Branch { value: v(1), prob: rat(1, 2), child: Node::leaf() },
                ],
            },
        };
        match validate_process(&ragged) {
            Err(ProcessError::RaggedDepth { node, depth: 1, .. }) => assert_eq!(node.to_string(), "root/1"),
            other => panic!("{other:?}"),
        }

        let wide = FiniteProcess {
            dimension: 1,
            depth: 1,
            root: Node::terminal(vec![(Value::from_ints(&[0, 0]), int(1))]),
        };
        assert!(matches!(validate_process(&wide), Err(ProcessError::DimensionMismatch { found: 2, .. })));
    }

    #[test]
    fn joint_laws_of_small_trees() {
        let law = joint_law(&two_coins());
        assert_eq!(law.len(), 4);
        assert!(law.iter().all(|(_, p)| *p == rat(1, 4)));

        let law = joint_law(&point_mass(5));
        assert_eq!(law.get(&[v(5)]), Some(&int(1)));

        let law = joint_law(&product_coin());
        for path in [[-1, -1], [-1, 1], [1, -1], [1, 1]] {
            assert_eq!(law.get(&[v(path[0]), v(path[1])]), Some(&rat(1, 4)));
        }
        assert_eq!(law.total(), int(1));
    }

    #[test]
    fn conditional_laws() {
        assert_eq!(
            conditional_law(&fair_coin(), &[]).unwrap(),
            vec![(v(-1), rat(1, 2)), (v(1), rat(1, 2))]
        );
        assert_eq!(
            conditional_law(&product_coin(), &[v(-1)]).unwrap(),
            vec![(v(-1), rat(1, 2)), (v(1), rat(1, 2))]
        );
        assert!(matches!(
            conditional_law(&product_coin(), &[v(3)]),
            Err(ProcessError::UnreachablePrefix(_))
        ));
    }

    #[test]
    fn conditional_law_mixes_duplicate_branches() {
        let p = FiniteProcess::new(
            1,
            2,
            Node {
                branches: vec![
                    Branch { value: v(0), prob: rat(1, 4), child: Node::terminal(vec![(v(1), int(1))]) },
                    Branch { value: v(0), prob: rat(3, 4), child: Node::terminal(vec![(v(2), int(1))]) },
                ],
            },
        )
        .unwrap();
        assert_eq!(conditional_law(&p, &[]).unwrap(), vec![(v(0), int(1))]);
        assert_eq!(conditional_law(&p, &[v(0)]).unwrap(), vec![(v(1), rat(1, 4)), (v(2), rat(3, 4))]);
        let agg = p.aggregated();
        assert_eq!(agg.root.branches.len(), 1);
        assert_eq!(joint_law(&agg), joint_law(&p));
    }

    #[test]
    fn mds_detection() {
        assert!(is_mds(&fair_coin()).holds());
        assert!(is_mds(&asymmetric()).holds());
        let p = FiniteProcess::new(1, 1, Node::terminal(vec![(v(1), rat(1, 2)), (v(2), rat(1, 2))])).unwrap();
        let w = is_mds(&p).witness().cloned().unwrap();
        assert_eq!(w.mean, Value::scalar(rat(3, 2)));
        assert!(w.prefix.is_empty());
    }

    fn pair_of(p: &FiniteProcess, g: impl Fn(&Value) -> Value) -> PairProcess {
        PairProcess::new(p.map_values(2 * p.dimension, &|f| f.concat(&g(f)))).unwrap()
    }

    #[test]
    fn tangency() {
        let same = pair_of(&product_coin(), |f| f.clone());
        assert!(are_tangent(&same).holds());
        let flipped = pair_of(&fair_coin(), |f| f.scale(&int(-1)));
        assert!(are_tangent(&flipped).holds());
        let zero = pair_of(&fair_coin(), |_| v(0));
        let w = are_tangent(&zero).witness().cloned().unwrap();
        assert!(w.prefix.is_empty());
        assert_eq!(w.second_law, vec![(v(0), int(1))]);
        assert!(!are_tangent(&zero.swapped()).holds());
    }

    #[test]
    fn ci_fails_for_identical_dependent_copy() {
        let same = pair_of(&product_coin(), |f| f.clone());
        assert!(!satisfies_ci(&same, Component::Second).holds());
        assert!(!satisfies_ci(&same, Component::First).holds());
        let single = pair_of(&fair_coin(), |f| f.clone());
        assert!(satisfies_ci(&single, Component::Second).holds());
    }

    #[test]
    fn ci_holds_for_independent_copy() {
        // Root: (f1, g1) independent fair coins; then f2, g2 independent fair
        // coins, independent of the past.
        let coins = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
        let step = |child: Node| Node {
            branches: coins
                .iter()
                .map(|&(a, b)| Branch {
                    value: Value::from_ints(&[a, b]),
                    prob: rat(1, 4),
                    child: child.clone(),
                })
                .collect(),
        };
        let last = step(Node::leaf());
        let pq = PairProcess::new(FiniteProcess::new(2, 2, step(last)).unwrap()).unwrap();
        assert!(are_tangent(&pq).holds());
        assert!(satisfies_ci(&pq, Component::Second).holds());
        assert!(satisfies_ci(&pq, Component::First).holds());
    }
}
