//! Martingale-difference representations with zero-mean sections, and the
//! decoupled tangent copy on the doubled cube.

use crate::canon::{canonical_representation, CellNode, CellRepresentation, RepError};
use crate::process::{format_path, is_mds, Branch, FiniteProcess, Node, PairProcess, Value, Verdict};
use crate::rational::{format_rational, Rational};
use num::Zero;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MdsError {
    #[error("not a martingale difference sequence: conditional mean {mean} after {prefix}")]
    NotMartingaleDifference { prefix: String, mean: String },
}

/// Canonical representation of a martingale difference sequence. Every
/// node's length-weighted value sum is checked to vanish exactly.
pub fn represent_mds(p: &FiniteProcess) -> Result<CellRepresentation, MdsError> {
    if let Verdict::Fails(w) = is_mds(p) {
        return Err(MdsError::NotMartingaleDifference {
            prefix: format_path(&w.prefix),
            mean: w.mean.to_string(),
        });
    }
    let r = canonical_representation(p);
    let report = verify_zero_sections(&r);
    if let Some((prefix, integral)) = report.worst() {
        return Err(MdsError::NotMartingaleDifference {
            prefix: format_path(prefix),
            mean: integral.to_string(),
        });
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionReport {
    /// Largest coordinate-wise absolute section integral over all nodes.
    pub max_abs_deviation: Rational,
    /// Section integral `sum(length * value)` per node, keyed by prefix.
    pub sections: Vec<(Vec<Value>, Value)>,
}

impl SectionReport {
    pub fn is_zero(&self) -> bool {
        self.max_abs_deviation.is_zero()
    }

    /// The node with the largest deviation, if any deviation is nonzero.
    pub fn worst(&self) -> Option<(&Vec<Value>, &Value)> {
        if self.is_zero() {
            return None;
        }
        self.sections
            .iter()
            .max_by(|a, b| a.1.max_abs().cmp(&b.1.max_abs()))
            .map(|(p, v)| (p, v))
    }
}

pub fn verify_zero_sections(r: &CellRepresentation) -> SectionReport {
    let sections: Vec<(Vec<Value>, Value)> = r
        .nodes()
        .into_iter()
        .map(|(prefix, node)| (prefix, node.section_integral(r.dimension())))
        .collect();
    let max_abs_deviation = sections
        .iter()
        .map(|(_, v)| v.max_abs())
        .max()
        .unwrap_or_else(Rational::zero);
    SectionReport {
        max_abs_deviation,
        sections,
    }
}

pub(crate) fn require_zero_sections(r: &CellRepresentation) -> Result<(), MdsError> {
    match verify_zero_sections(r).worst() {
        None => Ok(()),
        Some((prefix, integral)) => Err(MdsError::NotMartingaleDifference {
            prefix: format_path(prefix),
            mean: integral.to_string(),
        }),
    }
}

/// `u_n((x), (y)) = h_n(x_1, ..., x_{n-1}, x_n)` and
/// `v_n((x), (y)) = h_n(x_1, ..., x_{n-1}, y_n)` over one base
/// representation. Both read the history from `x`; only the coordinate
/// feeding the current step differs. Evaluation is lazy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoupledRepresentation {
    base: CellRepresentation,
}

pub fn construct_ci_copy(r: &CellRepresentation) -> DecoupledRepresentation {
    DecoupledRepresentation { base: r.clone() }
}

impl DecoupledRepresentation {
    pub fn base(&self) -> &CellRepresentation {
        &self.base
    }

    /// `(u, v)` at `((x), (y))`.
    pub fn evaluate(&self, x: &[Rational], y: &[Rational]) -> Result<(Vec<Value>, Vec<Value>), RepError> {
        // Validates both coordinate vectors.
        let chain = self.base.locate_chain(x)?;
        self.base.locate_chain(y)?;
        let mut node = self.base.root();
        let mut u = Vec::with_capacity(x.len());
        let mut v = Vec::with_capacity(x.len());
        for (&i, yi) in chain.iter().zip(y) {
            u.push(node.cells()[i].value.clone());
            v.push(node.cells()[node.locate(yi)].value.clone());
            node = &node.cells()[i].child;
        }
        Ok((u, v))
    }
}

/// The exact joint law of `(u_n, v_n)` as a pair process: at every node of
/// the `x`-chain, each `x`-cell is paired with each independent `y`-cell.
pub fn pair_law(d: &DecoupledRepresentation) -> PairProcess {
    fn go(node: &CellNode) -> Node {
        let mut branches = Vec::with_capacity(node.len() * node.len());
        for (i, ci) in node.cells().iter().enumerate() {
            let child = go(&ci.child);
            for (j, cj) in node.cells().iter().enumerate() {
                branches.push(Branch {
                    value: ci.value.concat(&cj.value),
                    prob: node.length(i) * node.length(j),
                    child: child.clone(),
                });
            }
        }
        Node { branches }
    }
    let base = &d.base;
    let process = FiniteProcess {
        dimension: 2 * base.dimension(),
        depth: base.depth(),
        root: go(base.root()),
    };
    PairProcess::new(process).expect("pair law of a valid representation is valid")
}

/// Exact section report rendered for diagnostics.
pub fn describe_sections(report: &SectionReport) -> String {
    format!(
        "{} nodes, max |section integral| = {}",
        report.sections.len(),
        format_rational(&report.max_abs_deviation)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{law_of_representation, Interval};
    use crate::process::fixtures::*;
    use crate::process::{are_tangent, is_mds, joint_law, Component};
    use crate::rational::{int, rat};

    fn v(x: i64) -> Value {
        Value::from_ints(&[x])
    }

    #[test]
    fn mds_representations_have_zero_sections() {
        let r = represent_mds(&fair_coin()).unwrap();
        assert_eq!(r.root().cells()[0].value, v(-1));
        assert!(verify_zero_sections(&r).is_zero());
        let r = represent_mds(&asymmetric()).unwrap();
        assert_eq!(r.root().section_integral(1), Value::zero(1));
        let drift = FiniteProcess::new(1, 1, Node::terminal(vec![(v(1), rat(1, 2)), (v(2), rat(1, 2))])).unwrap();
        assert!(matches!(represent_mds(&drift), Err(MdsError::NotMartingaleDifference { .. })));
        let report = verify_zero_sections(&canonical_representation(&drift));
        assert_eq!(report.max_abs_deviation, rat(3, 2));
    }

    #[test]
    fn perturbed_fair_coin_deviation() {
        let node = CellNode::from_intervals(vec![
            (Interval::new(int(0), rat(1, 3)).unwrap(), v(-1), CellNode::leaf()),
            (Interval::new(rat(1, 3), int(1)).unwrap(), v(1), CellNode::leaf()),
        ])
        .unwrap();
        let r = CellRepresentation::new(1, 1, node).unwrap();
        assert_eq!(verify_zero_sections(&r).max_abs_deviation, rat(1, 3));
    }

    #[test]
    fn decoupled_evaluation() {
        let d = construct_ci_copy(&canonical_representation(&fair_coin()));
        assert_eq!(d.evaluate(&[rat(1, 4)], &[rat(3, 4)]).unwrap(), (vec![v(-1)], vec![v(1)]));

        let d = construct_ci_copy(&canonical_representation(&product_coin()));
        let (u, w) = d.evaluate(&[rat(1, 4), rat(1, 4)], &[rat(3, 4), rat(3, 4)]).unwrap();
        assert_eq!(u, vec![v(-1), v(-1)]);
        assert_eq!(w, vec![v(1), v(1)]);
    }

    #[test]
    fn pair_laws() {
        let pq = pair_law(&construct_ci_copy(&canonical_representation(&fair_coin())));
        let law = joint_law(pq.process());
        assert_eq!(law.len(), 4);
        assert!(law.iter().all(|(_, p)| *p == rat(1, 4)));

        let pq = pair_law(&construct_ci_copy(&canonical_representation(&point_mass(2))));
        assert_eq!(joint_law(pq.process()).len(), 1);

        let p = product_coin();
        let r = canonical_representation(&p);
        let pq = pair_law(&construct_ci_copy(&r));
        let law = joint_law(pq.process());
        assert_eq!(law.len(), 16);
        for which in [Component::First, Component::Second] {
            let marginal = law.map_paths(|path| path.iter().map(|x| pq.component(x, which)).collect());
            assert_eq!(marginal, joint_law(&p));
            assert_eq!(marginal, law_of_representation(&r));
        }
        assert!(are_tangent(&pq).holds());
        assert!(crate::process::satisfies_ci(&pq, Component::Second).holds());
    }

    #[test]
    fn decoupled_copy_of_mds_is_mds_under_pair_filtration() {
        let r = represent_mds(&product_coin()).unwrap();
        let pq = pair_law(&construct_ci_copy(&r));
        // Project to the v-component while keeping the pair tree.
        let half = pq.half();
        let v_only = pq.process().map_values(half, &|x| x.split_at(half).1);
        assert!(is_mds(&v_only).holds());
    }
}
