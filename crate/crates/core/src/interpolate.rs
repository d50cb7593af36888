//! Optimal interpolation of a linear functional from exact past and noisy
//! future observations.
//!
//! In increment coordinates the estimate has two spectral characteristics,
//! one per observation block:
//!
//! ```text
//!     h1 = B - C Wf - (C - E) Wg      (support k <= -1)
//!     h2 = (C - E) Wg                 (support k >= L0 + 1)
//! ```
//!
//! where `B`, `C`, `E` are the transforms of `b`, `c`, `e` and `Wf`, `Wg` the
//! weighted inverses. Reported characteristics carry the extra factor
//! `(1 - e^{-i lambda mu})^n / (i lambda)^n` that maps them back to the level
//! spectral measure; time weights are the Fourier coefficients of the plain
//! forms above.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::increments::{functional_decomposition, IncrementSpec, WeightVector};
use crate::linalg::DEFAULT_CONDITION_BOUND;
use crate::operators::{build_operator_set, compose, required_lag, solve_coefficients, SystemResiduals};
use crate::spectral::quadrature::{breakpoints, integrate_converged, Rule};
use crate::spectral::{fourier_coefficients, increment_transfer, require_integrable, DensityModel, FourierTable, QuadratureConfig};

/// Truncation and numerical settings shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConfig {
    /// Operator size; `None` picks `4 (L0 + 1) + 64`.
    pub l: Option<usize>,
    pub quadrature: QuadratureConfig,
    pub condition_bound: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            l: None,
            quadrature: QuadratureConfig::default(),
            condition_bound: DEFAULT_CONDITION_BOUND,
        }
    }
}

impl TruncationConfig {
    pub fn with_l(l: usize) -> Self {
        Self {
            l: Some(l),
            ..Self::default()
        }
    }

    pub fn resolve_l(&self, horizon: usize) -> usize {
        self.l.unwrap_or(4 * (horizon + 1) + 64)
    }
}

#[derive(Debug, Clone)]
pub struct InterpolationProblem {
    pub spec: IncrementSpec,
    pub a: WeightVector,
    pub f: DensityModel,
    pub g: DensityModel,
    pub trunc: TruncationConfig,
}

#[derive(Debug, Clone)]
pub struct EstimateSolution {
    pub spec: IncrementSpec,
    /// Horizon `N` of the target functional.
    pub big_n: usize,
    /// `L0 = N + mu*n`.
    pub horizon: usize,
    pub l: usize,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `e[j] = e(L0 - j)`.
    pub e: Vec<f64>,
    /// Boundary weights `v(-mu n..=-1)`, ascending; zero for pure increment functionals.
    pub v: Vec<f64>,
    /// Mean-square error from the frequency-domain integral.
    pub mse: f64,
    /// The same error as a quadratic form in the operator matrices.
    pub mse_quadratic: f64,
    pub f: DensityModel,
    pub g: DensityModel,
    pub f_table: FourierTable,
    pub g_table: FourierTable,
    pub residuals: SystemResiduals,
    pub cond_ge: f64,
    pub cond_fmu: f64,
    pub quadrature: QuadratureConfig,
    pub minimax: bool,
}

fn check_pairing(spec: IncrementSpec, f: &DensityModel, g: &DensityModel) -> Result<()> {
    for (name, m) in [("f", f), ("g", g)] {
        if m.spec != spec {
            return Err(Error::Config(format!(
                "density {name} is paired with n={}, mu={} but the problem uses n={}, mu={}",
                m.spec.n(),
                m.spec.mu(),
                spec.n(),
                spec.mu()
            )));
        }
    }
    Ok(())
}

/// Estimate `B_N xi = sum b(k) x(k)` for increments `x` of the sequence.
pub fn solve_increment_functional(
    spec: IncrementSpec,
    b: &[f64],
    f: &DensityModel,
    g: &DensityModel,
    trunc: &TruncationConfig,
) -> Result<EstimateSolution> {
    if b.is_empty() {
        return Err(Error::Config("b must have at least one entry".into()));
    }
    check_pairing(spec, f, g)?;
    let q = &trunc.quadrature;
    q.validate()?;
    require_integrable(f, q)?;
    require_integrable(g, q)?;
    let big_n = b.len() - 1;
    let horizon = spec.horizon(big_n);
    let l = trunc.resolve_l(horizon);
    let k = required_lag(horizon, l);
    let f_table = fourier_coefficients(f, k, q)?;
    let g_table = fourier_coefficients(g, k, q)?;
    let ops = build_operator_set(&f_table, &g_table, spec, big_n, l)?;
    let comp = compose(&ops, trunc.condition_bound)?;
    let sol = solve_coefficients(&comp, &ops, b)?;

    let mse = two_integral_objective(spec, horizon, &sol.c, &sol.e, f, g, q)?;
    let mse_quadratic = quadratic_mse(&ops.fe, &g_table, horizon, &sol.c, &sol.e);
    Ok(EstimateSolution {
        spec,
        big_n,
        horizon,
        l,
        b: b.to_vec(),
        c: sol.c,
        e: sol.e,
        v: vec![0.0; spec.span()],
        mse,
        mse_quadratic,
        f: f.clone(),
        g: g.clone(),
        f_table,
        g_table,
        residuals: sol.residuals,
        cond_ge: comp.cond_ge,
        cond_fmu: comp.cond_fmu,
        quadrature: *q,
        minimax: false,
    })
}

/// Estimate `A_N xi = sum a(k) xi(k)`: decompose into increment and boundary
/// weights, then solve the increment problem.
pub fn solve_functional(problem: &InterpolationProblem) -> Result<EstimateSolution> {
    let w = functional_decomposition(problem.spec, &problem.a);
    let mut sol = solve_increment_functional(problem.spec, &w.b, &problem.f, &problem.g, &problem.trunc)?;
    sol.v = w.v;
    Ok(sol)
}

/// Estimate the single increment `x(m)`, `0 <= m <= N`.
pub fn solve_single_increment(
    spec: IncrementSpec,
    m: usize,
    big_n: usize,
    f: &DensityModel,
    g: &DensityModel,
    trunc: &TruncationConfig,
) -> Result<EstimateSolution> {
    if m > big_n {
        return Err(Error::IndexOutOfRange { index: m, max: big_n });
    }
    let mut b = vec![0.0; big_n + 1];
    b[m] = 1.0;
    solve_increment_functional(spec, &b, f, g, trunc)
}

/// Coefficients of `C - E` over indices `L0 - L + 1 ..= L - 1`, returned with
/// the index of the first entry.
pub(crate) fn difference_coeffs(horizon: usize, c: &[f64], e: &[f64]) -> (i64, Vec<f64>) {
    let l = c.len() as i64;
    let h = horizon as i64;
    let lo = h - l + 1;
    let hi = l - 1;
    let d = (lo..=hi)
        .map(|k| {
            let ck = if (0..l).contains(&k) { c[k as usize] } else { 0.0 };
            let j = h - k;
            let ek = if (0..e.len() as i64).contains(&j) { e[j as usize] } else { 0.0 };
            ck - ek
        })
        .collect();
    (lo, d)
}

/// `sum_k a(k) e^{i lambda (k + offset)}`.
pub(crate) fn series(coeffs: &[f64], offset: i64, lambda: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, lambda);
    let mut z = Complex64::from_polar(1.0, lambda * offset as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for &a in coeffs {
        acc += z * a;
        z *= step;
    }
    acc
}

fn pair_knots(f: &DensityModel, g: &DensityModel) -> Vec<f64> {
    let mut k = f.knots();
    k.extend(g.knots());
    k
}

/// `(1/2pi) int |C|^2 Wf + |C - E|^2 Wg`.
pub fn two_integral_objective(
    spec: IncrementSpec,
    horizon: usize,
    c: &[f64],
    e: &[f64],
    f: &DensityModel,
    g: &DensityModel,
    q: &QuadratureConfig,
) -> Result<f64> {
    weighted_objective(spec, horizon, c, e, &|x| f.weighted_inverse(x), &|x| g.weighted_inverse(x), &pair_knots(f, g), q)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn weighted_objective(
    spec: IncrementSpec,
    horizon: usize,
    c: &[f64],
    e: &[f64],
    wf: &(dyn Fn(f64) -> f64 + Sync),
    wg: &(dyn Fn(f64) -> f64 + Sync),
    knots: &[f64],
    q: &QuadratureConfig,
) -> Result<f64> {
    let (lo, d) = difference_coeffs(horizon, c, e);
    if c.iter().chain(e).all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let span = c.len() + d.len();
    let breaks = breakpoints(&[spec.mu()], knots, q.singularity_exclusion);
    let out = integrate_converged("mean-square error", &breaks, q.panels_for(span), q, 0.0, 1, |x, o| {
        let cc = series(c, 0, x).norm_sqr();
        let dd = series(&d, lo, x).norm_sqr();
        o[0] = cc * wf(x) + dd * wg(x);
    })?;
    Ok(out[0] / PI)
}

/// `c' Fe c + d' Tg d` with `d` the coefficients of `C - E`.
fn quadratic_mse(fe: &DMatrix<f64>, g: &FourierTable, horizon: usize, c: &[f64], e: &[f64]) -> f64 {
    let l = c.len();
    let mut first = 0.0;
    for i in 0..l {
        if c[i] == 0.0 {
            continue;
        }
        for j in 0..l {
            first += c[i] * fe[(i, j)] * c[j];
        }
    }
    let (_, d) = difference_coeffs(horizon, c, e);
    let mut second = 0.0;
    for i in 0..d.len() {
        if d[i] == 0.0 {
            continue;
        }
        for j in 0..d.len() {
            second += d[i] * g.coeffs[i.abs_diff(j)] * d[j];
        }
    }
    first + second
}

/// Which observation block a characteristic belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Exact past observations, `h1`.
    Past,
    /// Noisy future observations, `h2`.
    Future,
}

/// Plain characteristic in increment coordinates (no transfer factor).
pub fn plain_characteristic(sol: &EstimateSolution, which: Block, lambda: f64) -> Complex64 {
    let (lo, d) = difference_coeffs(sol.horizon, &sol.c, &sol.e);
    let dterm = series(&d, lo, lambda) * sol.g.weighted_inverse(lambda);
    match which {
        Block::Future => dterm,
        Block::Past => {
            series(&sol.b, 0, lambda) - series(&sol.c, 0, lambda) * sol.f.weighted_inverse(lambda) - dterm
        }
    }
}

/// Spectral characteristic with the level-measure factor
/// `(1 - e^{-i lambda mu})^n / (i lambda)^n` (limit `mu^n` at 0).
pub fn evaluate_characteristic(sol: &EstimateSolution, which: Block, lambda: f64) -> Complex64 {
    increment_transfer(sol.spec, lambda) * plain_characteristic(sol, which, lambda)
}

/// Time-domain weights of the estimate on both observation blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWeights {
    /// `past[i]` is the weight on `x(i - tail)`, i.e. `k = -tail..=-1`.
    pub past: Vec<f64>,
    /// `future[i]` is the weight on `y(L0 + 1 + i)`.
    pub future: Vec<f64>,
    pub horizon: usize,
    /// Largest coefficient of either characteristic inside `[0, L0]`.
    pub leakage: f64,
    pub tolerance: f64,
}

impl TimeWeights {
    pub fn past_at(&self, k: i64) -> Option<f64> {
        let tail = self.past.len() as i64;
        (-tail..0).contains(&k).then(|| self.past[(k + tail) as usize])
    }

    pub fn future_at(&self, k: i64) -> Option<f64> {
        let first = self.horizon as i64 + 1;
        (first..first + self.future.len() as i64)
            .contains(&k)
            .then(|| self.future[(k - first) as usize])
    }
}

pub const LEAKAGE_TOLERANCE: f64 = 1e-6;
pub const WEIGHT_NODES: usize = 4096;

/// Fourier-invert both characteristics on a uniform grid. Fails with
/// `SupportLeakage` when either has mass inside `[0, L0]`.
pub fn extract_time_weights(sol: &EstimateSolution, tail: usize) -> Result<TimeWeights> {
    if tail == 0 {
        return Err(Error::Config("tail must be positive".into()));
    }
    let h = sol.horizon;
    let m = WEIGHT_NODES.max((2 * (tail + h + 1)).next_power_of_two());
    let coeffs = |which: Block| -> Vec<f64> {
        let mut buf: Vec<Complex64> = (0..m)
            .map(|j| plain_characteristic(sol, which, 2.0 * PI * j as f64 / m as f64))
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        buf.iter().map(|z| z.re / m as f64).collect()
    };
    let at = |v: &[f64], k: i64| v[k.rem_euclid(m as i64) as usize];
    let s1 = coeffs(Block::Past);
    let s2 = coeffs(Block::Future);

    let past: Vec<f64> = (-(tail as i64)..0).map(|k| at(&s1, k)).collect();
    let future: Vec<f64> = (h as i64 + 1..=(h + tail) as i64).map(|k| at(&s2, k)).collect();
    let leakage = (0..=h as i64)
        .map(|k| at(&s1, k).abs().max(at(&s2, k).abs()))
        .fold(0.0, f64::max);
    let scale = past.iter().chain(&future).map(|v| v.abs()).fold(0.0, f64::max);
    let b_norm = sol.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tolerance = LEAKAGE_TOLERANCE * scale + 1e-12 * b_norm;
    if leakage > tolerance {
        return Err(Error::SupportLeakage { leakage, tolerance });
    }
    Ok(TimeWeights {
        past,
        future,
        horizon: h,
        leakage,
        tolerance,
    })
}

/// Default tail for weight extraction, `8 L`.
pub fn default_tail(sol: &EstimateSolution) -> usize {
    8 * sol.l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityResidual {
    pub lag: i64,
    /// Coefficient of `h1` at `lag` (defined for `lag >= 0`).
    pub past: Option<f64>,
    /// Coefficient of `h2` at `lag` (defined for `lag <= L0`).
    pub future: Option<f64>,
}

impl OrthogonalityResidual {
    pub fn max_abs(&self) -> f64 {
        self.past.unwrap_or(0.0).abs().max(self.future.unwrap_or(0.0).abs())
    }
}

/// Evaluate `(1/2pi) int h_j(lambda) e^{-i lambda l}` by quadrature: these
/// must vanish for `h1` at `l >= 0` and for `h2` at `l <= L0`.
pub fn orthogonality_residuals(sol: &EstimateSolution, lags: &[i64]) -> Result<Vec<OrthogonalityResidual>> {
    let q = &sol.quadrature;
    let max_lag = lags.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
    let breaks = breakpoints(&[sol.spec.mu()], &pair_knots(&sol.f, &sol.g), q.singularity_exclusion);
    let panels = q.panels_for(2 * sol.l + max_lag);
    let floor = Rule::new(&breaks, panels, q.order).integrate(1, |x, o| {
        o[0] = plain_characteristic(sol, Block::Past, x).norm() + plain_characteristic(sol, Block::Future, x).norm()
    })[0];
    let out = integrate_converged("orthogonality residuals", &breaks, panels, q, floor, 2 * lags.len(), |x, o| {
        let h1 = plain_characteristic(sol, Block::Past, x);
        let h2 = plain_characteristic(sol, Block::Future, x);
        for (i, &l) in lags.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, -(l as f64) * x);
            o[2 * i] = (h1 * rot).re;
            o[2 * i + 1] = (h2 * rot).re;
        }
    })?;
    let h = sol.horizon as i64;
    Ok(lags
        .iter()
        .enumerate()
        .map(|(i, &l)| OrthogonalityResidual {
            lag: l,
            past: (l >= 0).then(|| out[2 * i] / PI),
            future: (l <= h).then(|| out[2 * i + 1] / PI),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, mu: usize) -> IncrementSpec {
        IncrementSpec::new(n, mu).unwrap()
    }

    fn white(s: IncrementSpec, level: f64) -> DensityModel {
        DensityModel::increment_constant(s, level).unwrap()
    }

    #[test]
    fn zero_functional_has_zero_error() {
        let s = spec(1, 1);
        let sol = solve_increment_functional(s, &[0.0, 0.0], &white(s, 1.0), &white(s, 1.0), &TruncationConfig::default())
            .unwrap();
        assert_eq!(sol.mse, 0.0);
        assert!(sol.c.iter().chain(&sol.e).all(|v| *v == 0.0));
        let w = extract_time_weights(&sol, 16).unwrap();
        assert!(w.past.iter().chain(&w.future).all(|v| *v == 0.0));
        for r in orthogonality_residuals(&sol, &[0, 1, 2]).unwrap() {
            assert_eq!(r.max_abs(), 0.0);
        }
        for x in [0.0, 1.0, -2.0] {
            assert_eq!(evaluate_characteristic(&sol, Block::Past, x).norm(), 0.0);
        }
    }

    #[test]
    fn white_noise_error_is_closed_form() {
        // White increments carry no information about the band: the estimate
        // is zero and the error is sf * sum b^2.
        let s = spec(2, 1);
        let sol = solve_increment_functional(
            s,
            &[3.0, 2.0, 1.0],
            &white(s, 1.5),
            &white(s, 0.25),
            &TruncationConfig::default(),
        )
        .unwrap();
        assert!((sol.mse - 1.5 * 14.0).abs() < 1e-10);
        assert!((sol.mse_quadratic - sol.mse).abs() < 1e-10);
    }

    #[test]
    fn mismatched_density_spec_is_rejected() {
        let s = spec(1, 1);
        let other = spec(2, 1);
        let r = solve_increment_functional(s, &[1.0], &white(other, 1.0), &white(s, 1.0), &TruncationConfig::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn single_increment_bounds() {
        let s = spec(1, 1);
        let r = solve_single_increment(s, 3, 2, &white(s, 1.0), &white(s, 1.0), &TruncationConfig::default());
        assert!(matches!(r, Err(Error::IndexOutOfRange { index: 3, max: 2 })));
    }

    #[test]
    fn difference_coefficients_layout() {
        // L = 4, L0 = 1: indices -2..=3.
        let (lo, d) = difference_coeffs(1, &[1.0, 2.0, 0.0, 0.0], &[5.0, 7.0, 0.0, 0.0]);
        assert_eq!(lo, -2);
        // e(1) = 5 (j = 0), e(0) = 7 (j = 1).
        assert_eq!(d, vec![0.0, 0.0, 1.0 - 7.0, 2.0 - 5.0, 0.0, 0.0]);
    }
}
