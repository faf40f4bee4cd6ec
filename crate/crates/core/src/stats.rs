//! Pearson chi-square goodness of fit.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;

/// Cells with expected count below this are pooled into one cell.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Observations that fell outside the support of the reference law.
    pub unexpected: u64,
}

impl ChiSquare {
    pub fn passes(&self, significance: f64) -> bool {
        self.unexpected == 0 && self.p_value > significance
    }
}

/// Goodness of fit of `observed` counts to category probabilities `probs`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    let mut unexpected = 0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = nf * p;
        if p <= 0.0 {
            unexpected += o;
        } else if e < MIN_EXPECTED {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if unexpected > 0 {
        return ChiSquare {
            statistic: f64::INFINITY,
            dof: cells.len().saturating_sub(1),
            p_value: 0.0,
            unexpected,
        };
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
        unexpected,
    }
}

/// Chi-square of keyed observations against a keyed reference law. Keys
/// absent from `law` count as unexpected.
pub fn chi_square_keyed<K: Ord + Clone>(observed: &BTreeMap<K, u64>, law: &BTreeMap<K, f64>) -> ChiSquare {
    let mut counts = Vec::with_capacity(law.len() + 1);
    let mut probs = Vec::with_capacity(law.len() + 1);
    for (k, &p) in law {
        counts.push(observed.get(k).copied().unwrap_or(0));
        probs.push(p);
    }
    let stray: u64 = observed
        .iter()
        .filter(|(k, _)| !law.contains_key(k))
        .map(|(_, &c)| c)
        .sum();
    counts.push(stray);
    probs.push(0.0);
    chi_square_gof(&counts, &probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_value() {
        // 28, 31, 40, 35 against uniform: statistic 2.4179..., p 0.4903...
        let c = chi_square_gof(&[28, 31, 40, 35], &[0.25; 4]);
        assert!((c.statistic - 2.417_910_447_761_194).abs() < 1e-12);
        assert!((c.p_value - 0.490_309_306_965_388_3).abs() < 1e-9);
        assert_eq!(c.dof, 3);
    }

    #[test]
    fn stray_observations_fail() {
        let mut obs = BTreeMap::new();
        obs.insert(1, 10u64);
        obs.insert(9, 1u64);
        let law: BTreeMap<i32, f64> = [(1, 1.0)].into_iter().collect();
        let c = chi_square_keyed(&obs, &law);
        assert_eq!(c.unexpected, 1);
        assert!(!c.passes(0.01));
    }

    #[test]
    fn small_cells_are_pooled() {
        let c = chi_square_gof(&[50, 48, 1, 1], &[0.5, 0.48, 0.01, 0.01]);
        assert_eq!(c.dof, 2);
    }
}
