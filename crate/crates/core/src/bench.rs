//! Decoupling benchmarks in `R^d` with the Euclidean norm.
//!
//! Paths are sampled from a representation by drawing the cube
//! coordinates from counter-based streams. Sampled values stay exact
//! rationals, so the interleaving identities hold with no tolerance; only
//! the moment estimators work in floating point.

use crate::canon::{evaluate, CellRepresentation};
use crate::json::{fingerprint, representation_to_json};
use crate::mds::{construct_ci_copy, pair_law, require_zero_sections, DecoupledRepresentation, MdsError};
use crate::process::{joint_law, Value};
use crate::rational::{format_rational, half, Rational};
use crate::rng::{open_unit_dyadic, path_stream, GENERATOR};
use num::{Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("exponent p = {0} must exceed 1")]
    InvalidExponent(f64),
    #[error("empty batch")]
    EmptyBatch,
    #[error("degenerate batch: every sum is zero (estimate 0, standard error 0)")]
    DegenerateBatch,
    #[error("sign vector has length {found}, expected {expected}")]
    SignLength { expected: usize, found: usize },
    #[error(transparent)]
    Mds(#[from] MdsError),
}

/// Sampled value paths with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub seed: u64,
    pub generator: &'static str,
    pub source: String,
    pub paths: Vec<Vec<Value>>,
}

/// Paired samples `(d, e)` from a decoupled copy; `d` reads the `x`
/// coordinates, `e` the `y` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    pub seed: u64,
    pub generator: &'static str,
    pub source: String,
    pub d: Vec<Vec<Value>>,
    pub e: Vec<Vec<Value>>,
}

pub fn source_id(r: &CellRepresentation) -> String {
    fingerprint(&representation_to_json(r))
}

fn coordinates(seed: u64, m: u64, count: usize) -> Vec<Rational> {
    let mut rng = path_stream(seed, m);
    (0..count).map(|_| open_unit_dyadic(&mut rng)).collect()
}

/// Path `m` of the batch with this seed, computed in isolation.
pub fn sample_path(r: &CellRepresentation, seed: u64, m: u64) -> Vec<Value> {
    let x = coordinates(seed, m, r.depth());
    evaluate(r, &x).expect("dyadic draws lie in (0, 1)")
}

pub fn sample_paths(r: &CellRepresentation, count: usize, seed: u64) -> SampleBatch {
    SampleBatch {
        seed,
        generator: GENERATOR,
        source: source_id(r),
        paths: (0..count as u64).map(|m| sample_path(r, seed, m)).collect(),
    }
}

/// Pair `m`: the first `N` draws are `x`, the next `N` are `y`.
pub fn sample_pair(d: &DecoupledRepresentation, seed: u64, m: u64) -> (Vec<Value>, Vec<Value>) {
    let n = d.base().depth();
    let mut xy = coordinates(seed, m, 2 * n);
    let y = xy.split_off(n);
    d.evaluate(&xy, &y).expect("dyadic draws lie in (0, 1)")
}

pub fn sample_pairs(d: &DecoupledRepresentation, count: usize, seed: u64) -> PairBatch {
    let (dd, ee) = (0..count as u64).map(|m| sample_pair(d, seed, m)).unzip();
    PairBatch {
        seed,
        generator: GENERATOR,
        source: source_id(d.base()),
        d: dd,
        e: ee,
    }
}

/// `r_{2n-1} = d_n + e_n`, `r_{2n} = d_n - e_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterleavedPath {
    pub r: Vec<Value>,
}

pub fn interleave(d: &[Value], e: &[Value]) -> InterleavedPath {
    assert_eq!(d.len(), e.len());
    InterleavedPath {
        r: d.iter().zip(e).flat_map(|(a, b)| [a.add(b), a.sub(b)]).collect(),
    }
}

pub fn interleave_paths(batch: &PairBatch) -> Vec<InterleavedPath> {
    batch.d.iter().zip(&batch.e).map(|(d, e)| interleave(d, e)).collect()
}

/// `(½ Σ r_n, ½ Σ (-1)^{n+1} r_n)`, which equal `(Σ d_n, Σ e_n)`.
pub fn recover_sums(r: &InterleavedPath) -> (Value, Value) {
    let dim = r.r.first().map_or(0, Value::dimension);
    let mut plain = Value::zero(dim);
    let mut alternating = Value::zero(dim);
    for (i, v) in r.r.iter().enumerate() {
        plain = plain.add(v);
        alternating = if i % 2 == 0 { alternating.add(v) } else { alternating.sub(v) };
    }
    (plain.scale(&half()), alternating.scale(&half()))
}

pub fn path_sum(path: &[Value]) -> Value {
    let dim = path.first().map_or(0, Value::dimension);
    path.iter().fold(Value::zero(dim), |acc, v| acc.add(v))
}

/// Float view of each path's sum.
pub fn path_sums(paths: &[Vec<Value>]) -> Vec<Vec<f64>> {
    paths.iter().map(|p| path_sum(p).to_f64()).collect()
}

/// Per path, `Σ ε_n d_n`.
pub fn sign_transform(batch: &SampleBatch, signs: &[i8]) -> Result<Vec<Vec<f64>>, BenchError> {
    let n = batch.paths.first().map_or(signs.len(), Vec::len);
    if signs.len() != n {
        return Err(BenchError::SignLength {
            expected: n,
            found: signs.len(),
        });
    }
    Ok(batch
        .paths
        .iter()
        .map(|p| {
            let terms: Vec<Value> = p
                .iter()
                .zip(signs)
                .map(|(v, &s)| if s < 0 { v.scale(&-Rational::from_integer(1.into())) } else { v.clone() })
                .collect();
            path_sum(&terms).to_f64()
        })
        .collect())
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub se: f64,
}

fn check_p(p: f64) -> Result<(), BenchError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(BenchError::InvalidExponent(p))
    }
}

/// `(mean |s|^p)^{1/p}` with a delta-method standard error. Norms are
/// divided by their maximum before powering, so a constant batch returns
/// its norm exactly.
pub fn lp_norm(sums: &[Vec<f64>], p: f64) -> Result<Estimate, BenchError> {
    check_p(p)?;
    if sums.is_empty() {
        return Err(BenchError::EmptyBatch);
    }
    let norms: Vec<f64> = sums.iter().map(|s| euclid(s)).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(BenchError::DegenerateBatch);
    }
    let powers: Vec<f64> = norms.iter().map(|n| (n / scale).powf(p)).collect();
    let (a, var) = mean_var(&powers);
    let se_a = (var / powers.len() as f64).sqrt();
    let root = a.powf(1.0 / p);
    // d/dA A^{1/p} = A^{1/p - 1} / p
    Ok(Estimate {
        estimate: scale * root,
        se: scale * root / (p * a) * se_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub numerator: Estimate,
    pub denominator: Estimate,
}

/// `‖Σe‖_p / ‖Σd‖_p` from paired sums. The delta method runs on the log
/// ratio and keeps the covariance between the paired moments.
pub fn ratio_from_sums(d_sums: &[Vec<f64>], e_sums: &[Vec<f64>], p: f64) -> Result<RatioEstimate, BenchError> {
    let denominator = lp_norm(d_sums, p)?;
    let numerator = lp_norm(e_sums, p)?;
    let a: Vec<f64> = e_sums.iter().map(|s| euclid(s).powf(p)).collect();
    let b: Vec<f64> = d_sums.iter().map(|s| euclid(s).powf(p)).collect();
    let m = a.len() as f64;
    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let cov = if a.len() > 1 {
        a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let ratio = (ma / mb).powf(1.0 / p);
    let var_log = (va / (ma * ma) + vb / (mb * mb) - 2.0 * cov / (ma * mb)).max(0.0) / (m * p * p);
    let se = ratio * var_log.sqrt();
    Ok(RatioEstimate {
        ratio,
        se,
        ci_low: ratio - Z95 * se,
        ci_high: ratio + Z95 * se,
        numerator,
        denominator,
    })
}

/// Monte Carlo decoupling ratio of an MDS representation.
pub fn decoupling_ratio(r: &CellRepresentation, p: f64, count: usize, seed: u64) -> Result<RatioEstimate, BenchError> {
    check_p(p)?;
    require_zero_sections(r)?;
    if count == 0 {
        return Err(BenchError::EmptyBatch);
    }
    let batch = sample_pairs(&construct_ci_copy(r), count, seed);
    ratio_from_sums(&path_sums(&batch.d), &path_sums(&batch.e), p)
}

/// Exact moments of the decoupled pair, by enumerating its finite law.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRatio {
    /// `(E|Σe|^p / E|Σd|^p)^{1/p}`, or `None` when `E|Σd|^p = 0`.
    pub ratio: Option<f64>,
    /// The squared ratio as an exact rational when `p = 2`.
    pub squared: Option<Rational>,
}

pub fn exact_ratio(r: &CellRepresentation, p: f64) -> Result<ExactRatio, BenchError> {
    check_p(p)?;
    let d = construct_ci_copy(r);
    let pq = pair_law(&d);
    let law = joint_law(pq.process());
    let half = pq.half();
    let mut sq = (Rational::zero(), Rational::zero());
    let mut fl = (0.0, 0.0);
    for (path, prob) in law.iter() {
        let (mut sd, mut se) = (Value::zero(half), Value::zero(half));
        for v in path {
            let (a, b) = v.split_at(half);
            sd = sd.add(&a);
            se = se.add(&b);
        }
        let w = prob.to_f64().unwrap_or(0.0);
        if p == 2.0 {
            sq.0 += prob * sd.norm_sq();
            sq.1 += prob * se.norm_sq();
        }
        fl.0 += w * euclid(&sd.to_f64()).powf(p);
        fl.1 += w * euclid(&se.to_f64()).powf(p);
    }
    let squared = (p == 2.0 && sq.0.is_positive()).then(|| &sq.1 / &sq.0);
    let ratio = match &squared {
        Some(s) => Some(s.to_f64().unwrap_or(f64::NAN).sqrt()),
        None if fl.0 > 0.0 => Some((fl.1 / fl.0).powf(1.0 / p)),
        None => None,
    };
    Ok(ExactRatio { ratio, squared })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub exact_ratio: Option<f64>,
    /// Present for `p = 2`, as `"p/q"`.
    pub exact_ratio_squared: Option<String>,
}

impl From<&ExactRatio> for OracleReport {
    fn from(e: &ExactRatio) -> Self {
        OracleReport {
            exact_ratio: e.ratio,
            exact_ratio_squared: e.squared.as_ref().map(format_rational),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub ratio: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub generator: &'static str,
    pub source: String,
    pub oracle: Option<OracleReport>,
}

impl BenchReport {
    pub fn new(r: &CellRepresentation, est: &RatioEstimate, p: f64, m: usize, seed: u64, oracle: Option<&ExactRatio>) -> Self {
        BenchReport {
            format_version: crate::json::FORMAT_VERSION,
            ratio: est.ratio,
            se: est.se,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            p,
            m,
            seed,
            generator: GENERATOR,
            source: source_id(r),
            oracle: oracle.map(OracleReport::from),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_representation;
    use crate::process::fixtures::*;
    use crate::rational::int;

    fn v(x: i64) -> Value {
        Value::from_ints(&[x])
    }

    #[test]
    fn interleave_examples() {
        let d = [v(1), v(-1)];
        let e = [v(1), v(1)];
        let r = interleave(&d, &e);
        assert_eq!(r.r, vec![v(2), v(0), v(0), v(-2)]);
        assert_eq!(recover_sums(&r), (v(0), v(2)));
        let same = interleave(&d, &d);
        assert_eq!(same.r, vec![v(2), v(0), v(-2), v(0)]);
        let (a, b) = recover_sums(&same);
        assert_eq!(a, b);
        let zero = interleave(&[v(0), v(0)], &[v(3), v(5)]);
        assert_eq!(zero.r, vec![v(3), v(-3), v(5), v(-5)]);
        assert_eq!(recover_sums(&InterleavedPath { r: vec![v(0); 4] }), (v(0), v(0)));
    }

    #[test]
    fn sampling_is_seekable() {
        let r = canonical_representation(&product_coin());
        let batch = sample_paths(&r, 20, 9);
        assert_eq!(batch.paths[13], sample_path(&r, 9, 13));
        assert_eq!(sample_paths(&r, 1, 9).paths[0], batch.paths[0]);
        assert_ne!(sample_paths(&r, 20, 10).paths, batch.paths);
    }

    #[test]
    fn lp_norm_examples() {
        let ones = vec![vec![1.0], vec![-1.0], vec![1.0]];
        let e = lp_norm(&ones, 2.0).unwrap();
        assert_eq!((e.estimate, e.se), (1.0, 0.0));
        let constant = vec![vec![3.0, 4.0]; 5];
        assert_eq!(lp_norm(&constant, 3.0).unwrap().estimate, 5.0);
        assert_eq!(lp_norm(&[vec![0.0]], 2.0), Err(BenchError::DegenerateBatch));
        assert_eq!(lp_norm(&[vec![1.0]], 1.0), Err(BenchError::InvalidExponent(1.0)));
        let scaled: Vec<Vec<f64>> = vec![vec![0.5], vec![2.0], vec![1.0]];
        let doubled: Vec<Vec<f64>> = scaled.iter().map(|s| vec![2.0 * s[0]]).collect();
        let (a, b) = (lp_norm(&scaled, 3.0).unwrap(), lp_norm(&doubled, 3.0).unwrap());
        assert!((b.estimate - 2.0 * a.estimate).abs() < 1e-12);
    }

    #[test]
    fn sign_transform_examples() {
        let r = canonical_representation(&fair_coin());
        let batch = sample_paths(&r, 50, 3);
        assert_eq!(sign_transform(&batch, &[1]).unwrap(), path_sums(&batch.paths));
        let neg = sign_transform(&batch, &[-1]).unwrap();
        for (a, b) in neg.iter().zip(path_sums(&batch.paths)) {
            assert_eq!(a[0], -b[0]);
        }
        assert!(matches!(sign_transform(&batch, &[1, 1]), Err(BenchError::SignLength { .. })));
    }

    #[test]
    fn exact_oracle_is_one_at_p2() {
        for p in [fair_coin(), asymmetric(), product_coin(), two_coins()] {
            let r = canonical_representation(&p);
            let e = exact_ratio(&r, 2.0).unwrap();
            assert_eq!(e.squared, Some(int(1)));
            assert_eq!(e.ratio, Some(1.0));
        }
    }

    #[test]
    fn zero_process_is_degenerate() {
        let r = canonical_representation(&crate::generate::zero_process(2, 1));
        assert_eq!(decoupling_ratio(&r, 2.0, 10, 1), Err(BenchError::DegenerateBatch));
        assert_eq!(exact_ratio(&r, 2.0).unwrap().ratio, None);
    }

    #[test]
    fn non_mds_is_rejected() {
        let r = canonical_representation(&point_mass(1));
        assert!(matches!(decoupling_ratio(&r, 2.0, 10, 1), Err(BenchError::Mds(_))));
    }
}
