//! Deterministic random fixtures.

use crate::process::{Branch, FiniteProcess, Node, PairProcess, Value};
use crate::rational::{int, rat, Rational};
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_DEPTH: usize = 8;
pub const MAX_BRANCHING: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("size guard: depth {depth} and branching {branching} must be in 1..={MAX_DEPTH} and 1..={MAX_BRANCHING}")]
    SizeGuard { depth: usize, branching: usize },
    #[error("dimension must be at least 1")]
    Dimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub depth: usize,
    /// Maximum branches per node; each node draws its count from `1..=branching`.
    pub branching: usize,
    pub dimension: usize,
    /// Center every node's law so the process is a martingale difference
    /// sequence.
    pub mds: bool,
    pub seed: u64,
}

impl GenSpec {
    fn check(&self) -> Result<(), GenError> {
        if !(1..=MAX_DEPTH).contains(&self.depth) || !(1..=MAX_BRANCHING).contains(&self.branching) {
            return Err(GenError::SizeGuard {
                depth: self.depth,
                branching: self.branching,
            });
        }
        if self.dimension == 0 {
            return Err(GenError::Dimension);
        }
        Ok(())
    }
}

fn random_law(rng: &mut ChaCha8Rng, spec: &GenSpec) -> Vec<(Value, Rational)> {
    let count = rng.random_range(1..=spec.branching);
    let weights: Vec<i64> = (0..count).map(|_| rng.random_range(1..=12)).collect();
    let total: i64 = weights.iter().sum();
    let probs: Vec<Rational> = weights.iter().map(|&w| rat(w, total)).collect();
    let mut values: Vec<Value> = (0..count)
        .map(|_| {
            Value::new(
                (0..spec.dimension)
                    .map(|_| rat(rng.random_range(-8..=8), 2))
                    .collect(),
            )
        })
        .collect();
    if spec.mds {
        // Solve the last atom so the weighted sum vanishes.
        let last = count - 1;
        let partial = (0..last).fold(Value::zero(spec.dimension), |acc, i| acc.add(&values[i].scale(&probs[i])));
        values[last] = partial.scale(&(-Rational::one() / &probs[last]));
    }
    values.into_iter().zip(probs).collect()
}

pub fn generate_process(spec: &GenSpec) -> Result<FiniteProcess, GenError> {
    spec.check()?;
    fn go(rng: &mut ChaCha8Rng, spec: &GenSpec, level: usize) -> Node {
        if level == spec.depth {
            return Node::leaf();
        }
        Node {
            branches: random_law(rng, spec)
                .into_iter()
                .map(|(value, prob)| Branch {
                    value,
                    prob,
                    child: go(rng, spec, level + 1),
                })
                .collect(),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let root = go(&mut rng, spec, 0);
    Ok(FiniteProcess::new(spec.dimension, spec.depth, root).expect("generator emits valid trees"))
}

/// Couples two orderings of the same law by matching their cumulative
/// masses (north-west corner rule).
fn order_coupling(law: &[(Value, Rational)], first: &[usize], second: &[usize]) -> Vec<(Value, Value, Rational)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut left_i = law[first[0]].1.clone();
    let mut left_j = law[second[0]].1.clone();
    while i < first.len() && j < second.len() {
        let m = (&left_i).min(&left_j).clone();
        out.push((law[first[i]].0.clone(), law[second[j]].0.clone(), m.clone()));
        left_i -= &m;
        left_j -= &m;
        if left_i.is_zero() {
            i += 1;
            if i < first.len() {
                left_i = law[first[i]].1.clone();
            }
        }
        if left_j.is_zero() {
            j += 1;
            if j < second.len() {
                left_j = law[second[j]].1.clone();
            }
        }
    }
    out
}

fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        let j = rng.random_range(0..=k);
        idx.swap(k, j);
    }
    idx
}

/// A random tangent pair: at every node both components share one random
/// law, coupled either through two random orderings or independently.
pub fn generate_tangent_pair(spec: &GenSpec) -> Result<PairProcess, GenError> {
    spec.check()?;
    fn go(rng: &mut ChaCha8Rng, spec: &GenSpec, level: usize) -> Node {
        if level == spec.depth {
            return Node::leaf();
        }
        let law = random_law(rng, spec);
        let couples = if rng.random_bool(0.25) {
            law.iter()
                .flat_map(|(a, p)| law.iter().map(move |(b, q)| (a.clone(), b.clone(), p * q)))
                .collect()
        } else {
            let first = shuffled(rng, law.len());
            let second = shuffled(rng, law.len());
            order_coupling(&law, &first, &second)
        };
        Node {
            branches: couples
                .into_iter()
                .map(|(a, b, prob)| Branch {
                    value: a.concat(&b),
                    prob,
                    child: go(rng, spec, level + 1),
                })
                .collect(),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x7a6e_9e37_79b9_7f4a);
    let root = go(&mut rng, spec, 0);
    let p = FiniteProcess::new(2 * spec.dimension, spec.depth, root).expect("generator emits valid trees");
    Ok(PairProcess::new(p).expect("even dimension"))
}

/// Sum of all values at every node equal to zero, used in docs and tests.
pub fn zero_process(depth: usize, dimension: usize) -> FiniteProcess {
    let mut node = Node::leaf();
    for _ in 0..depth {
        node = Node {
            branches: vec![Branch {
                value: Value::zero(dimension),
                prob: int(1),
                child: node,
            }],
        };
    }
    FiniteProcess::new(dimension, depth, node).expect("valid")
}
