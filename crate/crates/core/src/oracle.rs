//! Brute-force ground truth in the time domain.
//!
//! Observations are increment values: `x(k)` for `k = -T..=-1` and
//! `y(k) = x(k) + z(k)` for `k = L0+1..=L0+T`, with `z` the noise increments,
//! uncorrelated with `x`. The target is `sum_{t=0}^{N} b(t) x(t)`. The
//! projection solves the finite normal equations; the Monte Carlo path draws
//! Gaussian vectors from the same covariances and measures the error of the
//! projection weights empirically.
//!
//! Random numbers come from ChaCha20 (`rand_chacha`). Standard normals are
//! produced by the Box–Muller transform: two 53-bit uniforms
//! `u1 in (0, 1]`, `u2 in [0, 1)` give `sqrt(-2 ln u1) * (cos, sin)(2 pi u2)`.
//! Samples are drawn in batches of `BATCH`; batch `i` uses the master seed
//! with stream number `i`, and batch sums are reduced in index order, so the
//! result is bit-identical whatever the thread count.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filtering::{solve_filtering, FilteringProblem};
use crate::increments::IncrementSpec;
use crate::interpolate::{extract_time_weights, solve_functional, EstimateSolution, InterpolationProblem};
use crate::spectral::quadrature::{breakpoints, integrate_converged};
use crate::spectral::{DensityModel, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Length `T` of each observation window.
    pub window: usize,
    pub seed: u64,
    /// Monte Carlo sample count; 0 disables simulation.
    pub samples: usize,
    /// Ridge added to the Gram matrix; `None` uses `1e-10 * trace / dim`.
    pub jitter: Option<f64>,
    pub quadrature: QuadratureConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            window: 200,
            seed: 0,
            samples: 0,
            jitter: None,
            quadrature: QuadratureConfig::default(),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(8..=4096).contains(&self.window) {
            return Err(Error::Config(format!("oracle window must be in 8..=4096, got {}", self.window)));
        }
        if let Some(j) = self.jitter {
            if !(j >= 0.0) {
                return Err(Error::Config("oracle jitter must be nonnegative".into()));
            }
        }
        self.quadrature.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Empirical {
    pub mse: f64,
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub mse: f64,
    /// Weights on `x(-T..=-1)`, ascending.
    pub past_weights: Vec<f64>,
    /// Weights on `y(L0+1..=L0+T)`.
    pub future_weights: Vec<f64>,
    pub jitter: f64,
    pub empirical: Option<Empirical>,
}

/// `R(m) = (1/2pi) int p(lambda) cos(m lambda)` for `m = 0..=max_lag`.
pub fn increment_autocovariance(model: &DensityModel, max_lag: usize, q: &QuadratureConfig) -> Result<Vec<f64>> {
    if let Some(level) = model.constant_level() {
        let mut r = vec![0.0; max_lag + 1];
        r[0] = level;
        return Ok(r);
    }
    let breaks = breakpoints(&[model.spec.mu()], &model.knots(), q.singularity_exclusion);
    let mut out = integrate_converged(
        "increment autocovariance",
        &breaks,
        q.panels_for(max_lag),
        q,
        0.0,
        max_lag + 1,
        |x, o| {
            let p = model.increment_density(x);
            for (m, v) in o.iter_mut().enumerate() {
                *v = p * (m as f64 * x).cos();
            }
        },
    )?;
    out.iter_mut().for_each(|v| *v /= PI);
    Ok(out)
}

fn toeplitz(r: &[f64], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| r[i.abs_diff(j)])
}

/// Cholesky with a ridge; retried with a hundredfold larger ridge up to
/// three times before giving up.
fn cholesky_with_jitter(a: &DMatrix<f64>, jitter: f64) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    let mut j = jitter;
    for _ in 0..4 {
        let mut m = a.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += j;
        }
        if let Some(ch) = m.cholesky() {
            return Ok((ch, j));
        }
        j = if j == 0.0 { 1e-14 * a.trace().abs().max(1.0) } else { j * 100.0 };
    }
    Err(Error::Factorization(format!(
        "covariance of dimension {} is not positive definite even with ridge {j:.3e}",
        a.nrows()
    )))
}

fn default_jitter(a: &DMatrix<f64>, cfg: &OracleConfig) -> f64 {
    cfg.jitter.unwrap_or(1e-10 * a.trace() / a.nrows().max(1) as f64)
}

struct Layout {
    t: usize,
    horizon: usize,
}

impl Layout {
    /// Observation times: past block then future block.
    fn times(&self) -> Vec<i64> {
        let t = self.t as i64;
        let h = self.horizon as i64;
        (-t..0).chain(h + 1..=h + t).collect()
    }
}

fn check_pairing(spec: IncrementSpec, f: &DensityModel, g: &DensityModel) -> Result<()> {
    if f.spec != spec || g.spec != spec {
        return Err(Error::Config("density models and oracle use different increment specs".into()));
    }
    Ok(())
}

/// Finite-window linear projection of the target onto the observations.
pub fn projection_oracle(
    spec: IncrementSpec,
    big_n: usize,
    b: &[f64],
    f: &DensityModel,
    g: &DensityModel,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    cfg.validate()?;
    check_pairing(spec, f, g)?;
    if b.len() != big_n + 1 {
        return Err(Error::Config(format!("b must have N + 1 = {} entries", big_n + 1)));
    }
    let t = cfg.window;
    let horizon = spec.horizon(big_n);
    if b.iter().all(|v| *v == 0.0) {
        return Ok(OracleResult {
            mse: 0.0,
            past_weights: vec![0.0; t],
            future_weights: vec![0.0; t],
            jitter: 0.0,
            empirical: None,
        });
    }
    let q = &cfg.quadrature;
    let rf = increment_autocovariance(f, horizon + 2 * t, q)?;
    let rg = increment_autocovariance(g, t, q)?;
    let times = Layout { t, horizon }.times();
    let dim = times.len();
    let gram = DMatrix::from_fn(dim, dim, |i, j| {
        let lag = times[i].abs_diff(times[j]) as usize;
        rf[lag] + if i >= t && j >= t { rg[lag] } else { 0.0 }
    });
    let cross = DVector::from_fn(dim, |i, _| {
        b.iter()
            .enumerate()
            .map(|(s, bs)| bs * rf[times[i].abs_diff(s as i64) as usize])
            .sum()
    });
    let var: f64 = (0..b.len())
        .flat_map(|s| (0..b.len()).map(move |u| (s, u)))
        .map(|(s, u)| b[s] * b[u] * rf[s.abs_diff(u)])
        .sum();
    let (ch, jitter) = cholesky_with_jitter(&gram, default_jitter(&gram, cfg))?;
    let w = ch.solve(&cross);
    let mse = (var - w.dot(&cross)).max(0.0);
    Ok(OracleResult {
        mse,
        past_weights: w.rows(0, t).iter().copied().collect(),
        future_weights: w.rows(t, t).iter().copied().collect(),
        jitter,
        empirical: None,
    })
}

pub const BATCH: usize = 1000;

/// Standard normal stream via Box–Muller over ChaCha20.
struct Normals {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Normals {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 1.0) * SCALE;
        let u2 = (self.rng.next_u64() >> 11) as f64 * SCALE;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Simulate the projection error empirically.
pub fn monte_carlo_check(
    spec: IncrementSpec,
    big_n: usize,
    b: &[f64],
    f: &DensityModel,
    g: &DensityModel,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    if cfg.samples < 1000 {
        return Err(Error::Config(format!("Monte Carlo needs at least 1000 samples, got {}", cfg.samples)));
    }
    let mut result = projection_oracle(spec, big_n, b, f, g, cfg)?;
    if b.iter().all(|v| *v == 0.0) {
        result.empirical = Some(Empirical {
            mse: 0.0,
            std_error: 0.0,
            samples: cfg.samples,
        });
        return Ok(result);
    }
    let t = cfg.window;
    let horizon = spec.horizon(big_n);
    let q = &cfg.quadrature;

    // x on the contiguous range -T..=L0+T, z on L0+1..=L0+T.
    let nx = horizon + 2 * t + 1;
    let rf = increment_autocovariance(f, nx, q)?;
    let rg = increment_autocovariance(g, t, q)?;
    let cov_x = toeplitz(&rf, nx);
    let cov_z = toeplitz(&rg, t);
    let (chx, _) = cholesky_with_jitter(&cov_x, default_jitter(&cov_x, cfg))?;
    let (chz, _) = cholesky_with_jitter(&cov_z, default_jitter(&cov_z, cfg))?;
    let (lx, lz) = (chx.l(), chz.l());

    // Error = alpha . x + beta . z.
    let mut alpha = DVector::zeros(nx);
    for (s, bs) in b.iter().enumerate() {
        alpha[t + s] += bs;
    }
    for i in 0..t {
        alpha[i] -= result.past_weights[i];
        alpha[t + horizon + 1 + i] -= result.future_weights[i];
    }
    let beta = DVector::from_iterator(t, result.future_weights.iter().map(|w| -w));

    let batches = cfg.samples.div_ceil(BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|bi| {
            let count = BATCH.min(cfg.samples - bi * BATCH);
            let mut normals = Normals::new(cfg.seed, bi as u64);
            let mut u = DMatrix::zeros(nx, count);
            let mut v = DMatrix::zeros(t, count);
            for s in 0..count {
                for i in 0..nx {
                    u[(i, s)] = normals.next();
                }
                for i in 0..t {
                    v[(i, s)] = normals.next();
                }
            }
            let x = &lx * u;
            let z = &lz * v;
            let err = x.tr_mul(&alpha) + z.tr_mul(&beta);
            err.iter().fold((0.0, 0.0), |(s2, s4), e| {
                let e2 = e * e;
                (s2 + e2, s4 + e2 * e2)
            })
        })
        .collect();
    let (s2, s4) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let n = cfg.samples as f64;
    let mean = s2 / n;
    let var = (s4 / n - mean * mean).max(0.0) * n / (n - 1.0);
    result.empirical = Some(Empirical {
        mse: mean,
        std_error: (var / n).sqrt(),
        samples: cfg.samples,
    });
    Ok(result)
}

#[derive(Debug, Clone)]
pub enum ComparisonProblem {
    Interpolation(InterpolationProblem),
    Filtering(FilteringProblem),
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub mse_spectral: f64,
    pub mse_oracle: f64,
    pub relative_gap: f64,
    /// Max weight discrepancy over both observation windows.
    pub max_weight_gap: f64,
    pub pass: bool,
    pub solution: EstimateSolution,
    pub oracle: OracleResult,
}

pub const COMPARISON_TOLERANCE: f64 = 1e-3;

/// Solve spectrally and by projection, then compare errors and weights.
pub fn compare_spectral_vs_oracle(problem: &ComparisonProblem, cfg: &OracleConfig) -> Result<ComparisonReport> {
    let (spec, f, g) = match problem {
        ComparisonProblem::Interpolation(p) => (p.spec, &p.f, &p.g),
        ComparisonProblem::Filtering(p) => (p.spec, &p.f, &p.g),
    };
    check_pairing(spec, f, g)?;
    let sol = match problem {
        ComparisonProblem::Interpolation(p) => solve_functional(p)?,
        ComparisonProblem::Filtering(p) => solve_filtering(p)?,
    };
    let oracle = projection_oracle(spec, sol.big_n, &sol.b, f, g, cfg)?;
    let weights = extract_time_weights(&sol, cfg.window)?;
    let max_weight_gap = weights
        .past
        .iter()
        .zip(&oracle.past_weights)
        .chain(weights.future.iter().zip(&oracle.future_weights))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let relative_gap = if oracle.mse == 0.0 {
        sol.mse.abs()
    } else {
        (sol.mse - oracle.mse).abs() / oracle.mse
    };
    Ok(ComparisonReport {
        mse_spectral: sol.mse,
        mse_oracle: oracle.mse,
        relative_gap,
        max_weight_gap,
        pass: relative_gap <= COMPARISON_TOLERANCE,
        solution: sol,
        oracle,
    })
}
