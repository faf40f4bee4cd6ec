//! Embedding a martingale difference sequence in planar Brownian motion.
//!
//! Step `n` occupies the time block `[n - 1, n)`. Inside a block the
//! block-relative time `s` runs Brownian motion at time `φ(s) = s/(1 - s)`
//! from the origin until it leaves the unit disk. The running value is the
//! sum of completed increments plus the harmonic extension of the current
//! node's boundary data, evaluated at the Brownian position; after the exit
//! it freezes at the boundary value of the exit arc.

use crate::canon::{CellNode, CellRepresentation, RepError};
use crate::mds::{require_zero_sections, MdsError};
use crate::process::Value;
use crate::rational::to_f64;
use crate::rng::{block_stream, open_unit_dyadic, open_unit_f64, path_stream, GENERATOR, MAX_ATTEMPTS};
use crate::stats::{chi_square_keyed, ChiSquare};
use num::complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SkorohodError {
    #[error(transparent)]
    Mds(#[from] MdsError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("|z| = {modulus} is not below 1 - boundary_eps = {limit}")]
    TooCloseToBoundary { modulus: f64, limit: f64 },
    #[error("step too coarse: {coarse} of {blocks} blocks exited in fewer than {MIN_STEPS} steps")]
    StepTooCoarse { coarse: usize, blocks: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("path {path} block {block}: no exit before the cap in {MAX_ATTEMPTS} attempts")]
    Censored { path: u64, block: usize },
}

/// Steps per block below which a block counts as coarse.
pub const MIN_STEPS: u64 = 1000;
/// Largest tolerated fraction of coarse blocks.
pub const MAX_COARSE_FRACTION: f64 = 0.01;

/// `φ(s) = s / (1 - s)`; infinite at `s = 1`.
pub fn time_change(s: f64) -> f64 {
    if s >= 1.0 {
        f64::INFINITY
    } else {
        s / (1.0 - s)
    }
}

pub fn inverse_time_change(u: f64) -> f64 {
    if u.is_infinite() {
        1.0
    } else {
        u / (1.0 + u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
    pub value: Vec<f64>,
}

/// Boundary data of one node: cell `[a, b)` becomes the arc
/// `[2πa, 2πb)`. Arcs tile `[0, 2π)` in cell order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcFunction {
    pub arcs: Vec<Arc>,
    pub dimension: usize,
    /// Value of the extension at the origin: the length-weighted mean,
    /// computed exactly when built from a node.
    pub center: Vec<f64>,
}

impl ArcFunction {
    pub fn new(arcs: Vec<Arc>, dimension: usize) -> Self {
        let mut center = vec![0.0; dimension];
        for a in &arcs {
            let w = (a.hi - a.lo) / TAU;
            for (o, v) in center.iter_mut().zip(&a.value) {
                *o += w * v;
            }
        }
        ArcFunction { arcs, dimension, center }
    }

    pub fn from_node(node: &CellNode, dimension: usize) -> Self {
        let cuts = node.cuts();
        ArcFunction {
            center: node.section_integral(dimension).to_f64(),
            arcs: node
                .cells()
                .iter()
                .enumerate()
                .map(|(i, c)| Arc {
                    lo: TAU * to_f64(&cuts[i]),
                    hi: TAU * to_f64(&cuts[i + 1]),
                    value: c.value.to_f64(),
                })
                .collect(),
            dimension,
        }
    }

    /// Length-weighted mean over the circle.
    pub fn mean(&self) -> &[f64] {
        &self.center
    }

    /// Index of the arc containing `angle` in `[0, 2π)`.
    pub fn locate(&self, angle: f64) -> usize {
        self.arcs.partition_point(|a| a.lo <= angle).clamp(1, self.arcs.len()) - 1
    }
}

pub fn arc_function(r: &CellRepresentation, prefix: &[Value]) -> Result<ArcFunction, SkorohodError> {
    Ok(ArcFunction::from_node(r.node_at(prefix)?, r.dimension()))
}

fn check_interior(z: Complex64, eps: f64) -> Result<(), SkorohodError> {
    let limit = 1.0 - eps;
    let modulus = z.norm();
    if modulus < limit {
        Ok(())
    } else {
        Err(SkorohodError::TooCloseToBoundary { modulus, limit })
    }
}

/// Probability that Brownian motion from `r e^{iφ}` first leaves the disk
/// at angle `φ + τ` with `τ` in `[-π, t]`, for `t` in `[-π, π]`.
fn exit_cdf(k: f64, t: f64) -> f64 {
    0.5 + (k * (t / 2.0).sin()).atan2((t / 2.0).cos()) / PI
}

fn wrap_signed(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Closed-form harmonic measure of the arc `[lo, hi)` from `z`, with no
/// boundary guard.
pub fn harmonic_measure_unchecked(z: Complex64, lo: f64, hi: f64) -> f64 {
    let len = hi - lo;
    if len >= TAU {
        return 1.0;
    }
    if len <= 0.0 {
        return 0.0;
    }
    let r = z.norm();
    if r == 0.0 {
        return len / TAU;
    }
    let k = (1.0 + r) / (1.0 - r);
    let u = wrap_signed(lo - z.arg());
    let w = if u + len <= PI {
        exit_cdf(k, u + len) - exit_cdf(k, u)
    } else {
        (1.0 - exit_cdf(k, u)) + exit_cdf(k, u + len - TAU)
    };
    w.clamp(0.0, 1.0)
}

pub fn harmonic_measure(z: Complex64, lo: f64, hi: f64, eps: f64) -> Result<f64, SkorohodError> {
    check_interior(z, eps)?;
    Ok(harmonic_measure_unchecked(z, lo, hi))
}

fn extension_into(a: &ArcFunction, z: Complex64, out: &mut [f64]) {
    if z.norm_sqr() == 0.0 {
        for (o, c) in out.iter_mut().zip(&a.center) {
            *o += c;
        }
        return;
    }
    for arc in &a.arcs {
        let w = harmonic_measure_unchecked(z, arc.lo, arc.hi);
        for (o, v) in out.iter_mut().zip(&arc.value) {
            *o += w * v;
        }
    }
}

pub fn harmonic_extension(a: &ArcFunction, z: Complex64, eps: f64) -> Result<Vec<f64>, SkorohodError> {
    check_interior(z, eps)?;
    let mut out = vec![0.0; a.dimension];
    extension_into(a, z, &mut out);
    Ok(out)
}

/// Exit angle in `[0, 2π)` by inverting the closed-form exit law.
pub fn sample_exit_with<R: Rng + ?Sized>(z: Complex64, rng: &mut R) -> f64 {
    let u = open_unit_f64(rng);
    let r = z.norm();
    if r == 0.0 {
        return TAU * u;
    }
    let k = (1.0 + r) / (1.0 - r);
    let c = PI * (u - 0.5);
    let t = 2.0 * c.sin().atan2(k * c.cos());
    (z.arg() + t).rem_euclid(TAU)
}

pub fn sample_exit(z: Complex64, seed: u64) -> f64 {
    sample_exit_with(z, &mut path_stream(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    ExitSample,
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "exit_sample" => Ok(Scheme::ExitSample),
            other => Err(format!("unknown scheme {other:?} (expected euler or exit_sample)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrownianConfig {
    /// Largest Brownian-time step.
    pub dt_base: f64,
    pub boundary_eps: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Censoring horizon in Brownian time.
    pub cap: f64,
}

impl BrownianConfig {
    pub const DEFAULT_DT: f64 = 5e-5;
    pub const DEFAULT_EPS: f64 = 1e-3;
    pub const DEFAULT_CAP: f64 = 1e4;

    pub fn new(seed: u64, scheme: Scheme) -> Self {
        BrownianConfig {
            dt_base: Self::DEFAULT_DT,
            boundary_eps: Self::DEFAULT_EPS,
            seed,
            scheme,
            cap: Self::DEFAULT_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), SkorohodError> {
        if !(self.dt_base.is_finite() && self.dt_base > 0.0) {
            return Err(SkorohodError::InvalidConfig(format!("dt_base = {} must be positive", self.dt_base)));
        }
        if !(self.boundary_eps > 0.0 && self.boundary_eps < 0.1) {
            return Err(SkorohodError::InvalidConfig(format!(
                "boundary_eps = {} must lie in (0, 0.1)",
                self.boundary_eps
            )));
        }
        if !(self.cap.is_finite() && self.cap > 0.0) {
            return Err(SkorohodError::InvalidConfig(format!("cap = {} must be positive", self.cap)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddedPath {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Exit angle of each step.
    pub exit_points: Vec<f64>,
    /// Brownian exit time of each step; empty for the exit-sample scheme.
    pub exit_times: Vec<f64>,
    /// The exact increment selected by each exit.
    #[serde(skip)]
    pub increments: Vec<Value>,
    pub steps: Vec<u64>,
    pub restarts: u32,
}

impl EmbeddedPath {
    /// Value at a grid time, if the time is on the grid.
    pub fn value_at(&self, t: f64) -> Option<&[f64]> {
        self.times.iter().position(|&s| s == t).map(|i| self.values[i].as_slice())
    }
}

/// Grid must be strictly increasing inside `[0, N]`.
pub fn check_grid(grid: &[f64], depth: usize) -> Result<(), SkorohodError> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > depth as f64) {
        return Err(SkorohodError::BadGrid(format!("times must lie in [0, {depth}]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SkorohodError::BadGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Integer times `0, 1, ..., N`.
pub fn integer_grid(depth: usize) -> Vec<f64> {
    (0..=depth).map(|n| n as f64).collect()
}

struct BlockExit {
    cell: usize,
    angle: f64,
    tau: f64,
    steps: u64,
    attempts: u32,
}

/// Runs one block. `slots` pairs grid indices with their Brownian times,
/// ascending; values are written as `base + extension`, frozen after exit.
#[allow(clippy::too_many_arguments)]
fn euler_block(
    node: &CellNode,
    arcs: &ArcFunction,
    base: &[f64],
    slots: &[(usize, f64)],
    cfg: &BrownianConfig,
    path: u64,
    block: usize,
    values: &mut [Vec<f64>],
) -> Result<BlockExit, SkorohodError> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = block_stream(cfg.seed, path, block as u64, attempt);
        let (mut x, mut y, mut u) = (0.0f64, 0.0f64, 0.0f64);
        let mut steps = 0u64;
        let mut next = 0;
        loop {
            while next < slots.len() && slots[next].1 <= u {
                let v = &mut values[slots[next].0];
                v.copy_from_slice(base);
                extension_into(arcs, Complex64::new(x, y), v);
                next += 1;
            }
            let target = match slots.get(next) {
                Some(&(_, g)) => (u + cfg.dt_base).min(g),
                None => u + cfg.dt_base,
            };
            if target > cfg.cap {
                break;
            }
            let h = target - u;
            let sd = h.sqrt();
            let gx: f64 = rng.sample(StandardNormal);
            let gy: f64 = rng.sample(StandardNormal);
            let (nx, ny) = (x + sd * gx, y + sd * gy);
            steps += 1;
            if nx * nx + ny * ny >= 1.0 {
                // Crossing on the segment, then projection to the circle.
                let (dx, dy) = (nx - x, ny - y);
                let a = dx * dx + dy * dy;
                let b = 2.0 * (x * dx + y * dy);
                let c = x * x + y * y - 1.0;
                let lambda = ((-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)).clamp(0.0, 1.0);
                let angle = (dy * lambda + y).atan2(dx * lambda + x).rem_euclid(TAU);
                let cell = node.locate_f64(angle / TAU);
                let value = &arcs.arcs[cell].value;
                for &(i, _) in &slots[next..] {
                    for ((o, b), v) in values[i].iter_mut().zip(base).zip(value) {
                        *o = b + v;
                    }
                }
                return Ok(BlockExit {
                    cell,
                    angle,
                    tau: u + lambda * h,
                    steps,
                    attempts: attempt as u32,
                });
            }
            x = nx;
            y = ny;
            u = target;
        }
    }
    Err(SkorohodError::Censored { path, block })
}

fn simulate_unchecked(r: &CellRepresentation, grid: &[f64], cfg: &BrownianConfig, path: u64) -> Result<EmbeddedPath, SkorohodError> {
    let dim = r.dimension();
    let depth = r.depth();
    let times: Vec<f64> = match cfg.scheme {
        Scheme::Euler => grid.to_vec(),
        Scheme::ExitSample => integer_grid(depth),
    };
    let mut values = vec![vec![0.0; dim]; times.len()];
    let mut exact = Value::zero(dim);
    let mut out = EmbeddedPath {
        times: times.clone(),
        values: Vec::new(),
        exit_points: Vec::with_capacity(depth),
        exit_times: Vec::new(),
        increments: Vec::with_capacity(depth),
        steps: Vec::new(),
        restarts: 0,
    };
    let mut node = r.root();
    let mut rng = path_stream(cfg.seed, path);
    for block in 0..depth {
        let base = exact.to_f64();
        let (cell, angle) = match cfg.scheme {
            Scheme::ExitSample => {
                // Exit from the center is uniform on the circle.
                let x = open_unit_dyadic(&mut rng);
                (node.locate(&x), TAU * to_f64(&x))
            }
            Scheme::Euler => {
                let arcs = ArcFunction::from_node(node, dim);
                let slots: Vec<(usize, f64)> = times
                    .iter()
                    .enumerate()
                    .filter(|(_, &t)| t >= block as f64 && t < (block + 1) as f64)
                    .map(|(i, &t)| (i, time_change(t - block as f64)))
                    .collect();
                let exit = euler_block(node, &arcs, &base, &slots, cfg, path, block, &mut values)?;
                out.exit_times.push(exit.tau);
                out.steps.push(exit.steps);
                out.restarts += exit.attempts;
                (exit.cell, exit.angle)
            }
        };
        let c = &node.cells()[cell];
        exact = exact.add(&c.value);
        out.exit_points.push(angle);
        out.increments.push(c.value.clone());
        node = &c.child;
    }
    let total = exact.to_f64();
    for (i, &t) in times.iter().enumerate() {
        if cfg.scheme == Scheme::ExitSample || t >= depth as f64 {
            let n = t as usize;
            let partial = out.increments[..n].iter().fold(Value::zero(dim), |acc, v| acc.add(v));
            values[i] = if n == depth { total.clone() } else { partial.to_f64() };
        }
    }
    out.values = values;
    Ok(out)
}

/// One embedded path, index `path` of the run with `cfg.seed`.
pub fn simulate_f(r: &CellRepresentation, grid: &[f64], cfg: &BrownianConfig, path: u64) -> Result<EmbeddedPath, SkorohodError> {
    cfg.validate()?;
    require_zero_sections(r)?;
    check_grid(grid, r.depth())?;
    simulate_unchecked(r, grid, cfg, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub seed: u64,
    pub generator: &'static str,
    pub scheme: Scheme,
    pub blocks: usize,
    pub coarse_blocks: usize,
    pub restarts: u64,
    #[serde(skip)]
    pub paths: Vec<EmbeddedPath>,
}

/// Paths `0..count`, with the coarse-step guard applied to the Euler scheme.
pub fn simulate_batch(r: &CellRepresentation, grid: &[f64], cfg: &BrownianConfig, count: usize) -> Result<Simulation, SkorohodError> {
    cfg.validate()?;
    require_zero_sections(r)?;
    check_grid(grid, r.depth())?;
    let paths = (0..count as u64)
        .map(|m| simulate_unchecked(r, grid, cfg, m))
        .collect::<Result<Vec<_>, _>>()?;
    let blocks = count * r.depth();
    let coarse_blocks = paths.iter().flat_map(|p| &p.steps).filter(|&&s| s < MIN_STEPS).count();
    if cfg.scheme == Scheme::Euler && blocks > 0 && coarse_blocks as f64 >= MAX_COARSE_FRACTION * blocks as f64 {
        return Err(SkorohodError::StepTooCoarse {
            coarse: coarse_blocks,
            blocks,
        });
    }
    Ok(Simulation {
        seed: cfg.seed,
        generator: GENERATOR,
        scheme: cfg.scheme,
        blocks,
        coarse_blocks,
        restarts: paths.iter().map(|p| p.restarts as u64).sum(),
        paths,
    })
}

/// Chi-square of the sampled increment paths against the exact law of the
/// representation.
pub fn increment_chi_square(r: &CellRepresentation, paths: &[EmbeddedPath]) -> ChiSquare {
    let law: BTreeMap<Vec<Value>, f64> = crate::canon::law_of_representation(r)
        .iter()
        .map(|(k, p)| (k.clone(), to_f64(p)))
        .collect();
    let mut observed: BTreeMap<Vec<Value>, u64> = BTreeMap::new();
    for p in paths {
        *observed.entry(p.increments.clone()).or_default() += 1;
    }
    chi_square_keyed(&observed, &law)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointMean {
    pub t: f64,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

impl CheckpointMean {
    /// Largest `|mean| / se` over coordinates; `0/0` counts as 0.
    pub fn z(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.se)
            .map(|(m, s)| if *m == 0.0 { 0.0 } else { m.abs() / s })
            .fold(0.0, f64::max)
    }
}

/// Least-squares slope of `F_t` on `F_s` (first coordinate) with a
/// heteroskedasticity-robust standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub s: f64,
    pub t: f64,
    pub slope: f64,
    pub se: f64,
}

impl SlopeCheck {
    pub fn z(&self) -> f64 {
        (self.slope - 1.0).abs() / self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub paths: usize,
    pub means: Vec<CheckpointMean>,
    pub max_abs_mean: f64,
    pub max_mean_z: f64,
    pub slopes: Vec<SlopeCheck>,
    /// Same-block pairs skipped because `F_s` had no spread.
    pub skipped_pairs: usize,
}

impl MartingaleReport {
    pub fn passes(&self, k: f64) -> bool {
        self.max_mean_z <= k && self.slopes.iter().all(|s| s.z() <= k)
    }
}

pub fn martingale_check(paths: &[EmbeddedPath], checkpoints: &[f64]) -> Result<MartingaleReport, SkorohodError> {
    let first = paths.first().ok_or_else(|| SkorohodError::BadGrid("no paths".into()))?;
    let idx: Vec<usize> = checkpoints
        .iter()
        .map(|&t| {
            first
                .times
                .iter()
                .position(|&s| s == t)
                .ok_or_else(|| SkorohodError::BadGrid(format!("checkpoint {t} is not a grid time")))
        })
        .collect::<Result<_, _>>()?;
    let m = paths.len() as f64;
    let dim = first.values.first().map_or(0, Vec::len);
    let mut means = Vec::with_capacity(idx.len());
    for (&i, &t) in idx.iter().zip(checkpoints) {
        let mut mean = vec![0.0; dim];
        let mut se = vec![0.0; dim];
        for c in 0..dim {
            let xs = paths.iter().map(|p| p.values[i][c]);
            let mu = xs.clone().sum::<f64>() / m;
            let var = if paths.len() > 1 { xs.map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m - 1.0) } else { 0.0 };
            mean[c] = mu;
            se[c] = (var / m).sqrt();
        }
        means.push(CheckpointMean { t, mean, se });
    }
    let mut slopes = Vec::new();
    let mut skipped_pairs = 0;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            let (s, t) = (checkpoints[a], checkpoints[b]);
            if s.floor() != t.floor() || t <= s {
                continue;
            }
            let xs: Vec<f64> = paths.iter().map(|p| p.values[idx[a]][0]).collect();
            let ys: Vec<f64> = paths.iter().map(|p| p.values[idx[b]][0]).collect();
            let mx = xs.iter().sum::<f64>() / m;
            let my = ys.iter().sum::<f64>() / m;
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            if sxx <= 0.0 {
                skipped_pairs += 1;
                continue;
            }
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let meat: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let e = y - intercept - slope * x;
                    (x - mx) * (x - mx) * e * e
                })
                .sum();
            slopes.push(SlopeCheck {
                s,
                t,
                slope,
                se: meat.sqrt() / sxx,
            });
        }
    }
    Ok(MartingaleReport {
        paths: paths.len(),
        max_abs_mean: means.iter().flat_map(|c| c.mean.iter().map(|x| x.abs())).fold(0.0, f64::max),
        max_mean_z: means.iter().map(CheckpointMean::z).fold(0.0, f64::max),
        means,
        slopes,
        skipped_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_representation;
    use crate::process::fixtures::*;
    use crate::stats::chi_square_gof;

    /// Adaptive Simpson quadrature of the Poisson kernel.
    fn poisson_oracle(z: Complex64, lo: f64, hi: f64) -> f64 {
        let (r, phi) = (z.norm(), z.arg());
        let f = |t: f64| (1.0 - r * r) / (TAU * (1.0 - 2.0 * r * (t - phi).cos() + r * r));
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&f, lo, hi, fa, fm, fb, whole, 1e-13, 50)
    }

    #[test]
    fn arc_function_examples() {
        let a = arc_function(&canonical_representation(&fair_coin()), &[]).unwrap();
        assert_eq!(a.arcs[0], Arc { lo: 0.0, hi: PI, value: vec![-1.0] });
        assert_eq!(a.arcs[1], Arc { lo: PI, hi: TAU, value: vec![1.0] });
        let b = arc_function(&canonical_representation(&asymmetric()), &[]).unwrap();
        assert_eq!(b.arcs[0].value, vec![-2.0]);
        assert!((b.arcs[0].hi - TAU / 3.0).abs() < 1e-15);
        assert_eq!(b.mean(), &[0.0]);
    }

    #[test]
    fn harmonic_measure_examples() {
        let o = Complex64::new(0.0, 0.0);
        assert_eq!(harmonic_measure(o, 0.0, PI, 1e-3).unwrap(), 0.5);
        assert_eq!(harmonic_measure(o, 0.0, TAU, 1e-3).unwrap(), 1.0);
        let z = Complex64::new(0.5, 0.0);
        let w = harmonic_measure(z, -PI / 2.0, PI / 2.0, 1e-3).unwrap();
        assert!((w - poisson_oracle(z, -PI / 2.0, PI / 2.0)).abs() < 1e-10);
        assert!(matches!(
            harmonic_measure(Complex64::new(0.9995, 0.0), 0.0, 1.0, 1e-3),
            Err(SkorohodError::TooCloseToBoundary { .. })
        ));
    }

    #[test]
    fn extension_examples() {
        let a = arc_function(&canonical_representation(&fair_coin()), &[]).unwrap();
        let o = Complex64::new(0.0, 0.0);
        assert_eq!(harmonic_extension(&a, o, 1e-3).unwrap(), vec![0.0]);
        let z = Complex64::new(0.5, 0.0);
        let lower = poisson_oracle(z, 0.0, PI);
        let e = harmonic_extension(&a, z, 1e-3).unwrap()[0];
        assert!((e - (-lower + (1.0 - lower))).abs() < 1e-10);
        let constant = ArcFunction::new(
            vec![Arc { lo: 0.0, hi: 1.0, value: vec![3.0] }, Arc { lo: 1.0, hi: TAU, value: vec![3.0] }],
            1,
        );
        let c = harmonic_extension(&constant, Complex64::new(-0.3, 0.7), 1e-3).unwrap()[0];
        assert!((c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn exit_sampling() {
        let o = Complex64::new(0.0, 0.0);
        assert_eq!(sample_exit(o, 5), sample_exit(o, 5));
        let mut rng = path_stream(11, 0);
        let mut counts = [0u64; 8];
        for _ in 0..20_000 {
            counts[(sample_exit_with(o, &mut rng) / (TAU / 8.0)) as usize] += 1;
        }
        assert!(chi_square_gof(&counts, &[0.125; 8]).p_value > 0.01);
        let z = Complex64::from_polar(0.9, 1.0);
        let mut angles: Vec<f64> = (0..2001).map(|_| sample_exit_with(z, &mut rng)).collect();
        angles.sort_by(f64::total_cmp);
        assert!(wrap_signed(angles[1000] - 1.0).abs() < PI / 2.0);
        // The sampler inverts the closed-form law on an off-center arc.
        let w = harmonic_measure_unchecked(z, 0.5, 2.0);
        let hits = (0..20_000).filter(|_| (0.5..2.0).contains(&sample_exit_with(z, &mut rng))).count();
        let se = (w * (1.0 - w) / 20_000.0).sqrt();
        assert!((hits as f64 / 20_000.0 - w).abs() < 5.0 * se);
    }

    #[test]
    fn time_change_is_increasing() {
        assert_eq!(time_change(0.0), 0.0);
        assert!(time_change(1.0).is_infinite());
        let mut last = -1.0;
        for k in 0..1000 {
            let s = k as f64 / 1000.0;
            let u = time_change(s);
            assert!(u > last);
            assert!((inverse_time_change(u) - s).abs() < 1e-12);
            last = u;
        }
    }

    #[test]
    fn exit_sample_paths_are_exact_sums() {
        let r = canonical_representation(&product_coin());
        let cfg = BrownianConfig::new(3, Scheme::ExitSample);
        let sim = simulate_batch(&r, &integer_grid(2), &cfg, 200).unwrap();
        for p in &sim.paths {
            assert_eq!(p.values[0], vec![0.0]);
            assert_eq!(p.values[1], p.increments[0].to_f64());
            assert_eq!(p.values[2][0], p.values[1][0] + p.increments[1].to_f64()[0]);
        }
        assert!(increment_chi_square(&r, &sim.paths).passes(0.01));
    }

    #[test]
    fn euler_paths_freeze_and_start_at_zero() {
        let r = canonical_representation(&fair_coin());
        let mut cfg = BrownianConfig::new(4, Scheme::Euler);
        cfg.dt_base = 1e-3;
        let grid = [0.0, 0.25, 0.5, 0.999_999, 1.0];
        let p = simulate_f(&r, &grid, &cfg, 0).unwrap();
        assert_eq!(p.values[0], vec![0.0]);
        assert_eq!(p.values[3], p.increments[0].to_f64());
        assert_eq!(p.values[4], p.increments[0].to_f64());
        assert!(p.values[1][0].abs() < 1.0);
        assert_eq!(p, simulate_f(&r, &grid, &cfg, 0).unwrap());
    }

    #[test]
    fn coarse_steps_are_reported() {
        let r = canonical_representation(&fair_coin());
        let mut cfg = BrownianConfig::new(4, Scheme::Euler);
        cfg.dt_base = 1e-2;
        assert!(matches!(
            simulate_batch(&r, &integer_grid(1), &cfg, 50),
            Err(SkorohodError::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn non_mds_and_bad_config_are_rejected() {
        let r = canonical_representation(&point_mass(1));
        let cfg = BrownianConfig::new(1, Scheme::ExitSample);
        assert!(matches!(simulate_f(&r, &[0.0], &cfg, 0), Err(SkorohodError::Mds(_))));
        let ok = canonical_representation(&fair_coin());
        let bad = BrownianConfig { boundary_eps: 0.5, ..cfg };
        assert!(matches!(simulate_f(&ok, &[0.0], &bad, 0), Err(SkorohodError::InvalidConfig(_))));
        assert!(matches!(simulate_f(&ok, &[0.5, 0.2], &cfg, 0), Err(SkorohodError::BadGrid(_))));
    }

    #[test]
    fn zero_process_has_exact_zero_means() {
        let r = canonical_representation(&crate::generate::zero_process(2, 2));
        let mut cfg = BrownianConfig::new(2, Scheme::Euler);
        cfg.dt_base = 1e-3;
        let grid = [0.0, 0.5, 1.0, 1.5];
        let paths: Vec<EmbeddedPath> = (0..20).map(|m| simulate_f(&r, &grid, &cfg, m).unwrap()).collect();
        let report = martingale_check(&paths, &grid).unwrap();
        assert_eq!(report.max_abs_mean, 0.0);
        assert!(report.passes(5.0));
    }
}
