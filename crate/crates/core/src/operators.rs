//! Truncated Toeplitz/Hankel operators and the coupled coefficient system.
//!
//! With `L0 = N + mu*n`, `Ge(l,k) = g(k-l)`, `Fe(l,k) = f(k-l)`,
//! `Gc(l,k) = g(L0-l-k)` and `Fc(l,k) = f(L0-l-k)`, the coefficients of the
//! optimal estimate solve
//!
//! ```text
//!     b + Gc e = (Ge + Fe) c
//!        Gc c  = Ge e
//! ```
//!
//! where `e[j]` stores `e(L0 - j)`. Eliminating `e` gives
//! `F_mu c = b` with `F_mu = Ge + Fe - Gc Ge^-1 Gc` (symmetric) and
//! `e = G_mu b` with `G_mu = Ge^-1 Gc F_mu^-1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::increments::IncrementSpec;
use crate::linalg::{ensure_conditioned, Factored};
use crate::spectral::FourierTable;

/// Residual bound, relative to `||b||`, for a solution to count as valid.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub gc: DMatrix<f64>,
    pub ge: DMatrix<f64>,
    pub fc: DMatrix<f64>,
    pub fe: DMatrix<f64>,
    pub l: usize,
    /// `L0 = N + mu*n`.
    pub horizon: usize,
}

/// Largest lag the operators of size `l` touch.
pub fn required_lag(horizon: usize, l: usize) -> usize {
    horizon.max((2 * l).saturating_sub(2 + horizon))
}

fn toeplitz(t: &FourierTable, l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |r, c| t.coeffs[r.abs_diff(c)])
}

fn hankel(t: &FourierTable, l: usize, horizon: usize) -> DMatrix<f64> {
    DMatrix::from_fn(l, l, |r, c| t.coeffs[(horizon as i64 - r as i64 - c as i64).unsigned_abs() as usize])
}

pub fn build_operator_set(
    f: &FourierTable,
    g: &FourierTable,
    spec: IncrementSpec,
    big_n: usize,
    l: usize,
) -> Result<OperatorSet> {
    let horizon = spec.horizon(big_n);
    if l <= horizon {
        return Err(Error::Config(format!(
            "truncation L = {l} must exceed N + mu*n = {horizon}"
        )));
    }
    let needed = required_lag(horizon, l);
    let available = f.order().min(g.order());
    if available < needed {
        return Err(Error::InsufficientFourierRange { needed, available });
    }
    Ok(OperatorSet {
        gc: hankel(g, l, horizon),
        ge: toeplitz(g, l),
        fc: hankel(f, l, horizon),
        fe: toeplitz(f, l),
        l,
        horizon,
    })
}

#[derive(Debug, Clone)]
pub struct ComposedOperators {
    pub fmu: DMatrix<f64>,
    pub gmu: DMatrix<f64>,
    /// `Ge^-1 Gc`, shared by both compositions.
    pub ge_inv_gc: DMatrix<f64>,
    /// `Gc Ge^-1 Gc + Fc Ge^-1 Gc - Ge`: the composition as usually printed.
    /// It agrees with `fmu` on white-noise pairs and is kept for comparison.
    pub fmu_display: DMatrix<f64>,
    pub cond_ge: f64,
    pub cond_fmu: f64,
}

pub fn compose(ops: &OperatorSet, condition_bound: f64) -> Result<ComposedOperators> {
    let cond_ge = ensure_conditioned("G^e", &ops.ge, condition_bound)?;
    let ge = Factored::new("G^e", &ops.ge)?;
    let ge_inv_gc = ge.solve_matrix(&ops.gc);
    let fmu = &ops.ge + &ops.fe - &ops.gc * &ge_inv_gc;
    let cond_fmu = ensure_conditioned("F_mu", &fmu, condition_bound)?;
    let fmu_inv = Factored::new("F_mu", &fmu)?.inverse();
    let gmu = &ge_inv_gc * &fmu_inv;
    let fmu_display = &ops.gc * &ge_inv_gc + &ops.fc * &ge_inv_gc - &ops.ge;
    Ok(ComposedOperators {
        fmu,
        gmu,
        ge_inv_gc,
        fmu_display,
        cond_ge,
        cond_fmu,
    })
}

/// Residual norms of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemResiduals {
    /// `||b + Gc e - (Ge + Fe) c||`.
    pub first: f64,
    /// `||Gc c - Ge e||`.
    pub second: f64,
    /// `||b + Ge c - (Gc + Fc) e||`, the first equation in its printed form.
    pub display_first: f64,
    /// `||b||`.
    pub b_norm: f64,
}

impl SystemResiduals {
    pub fn is_valid(&self, rel_tol: f64) -> bool {
        self.first <= rel_tol * self.b_norm && self.second <= rel_tol * self.b_norm
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientSolution {
    pub c: Vec<f64>,
    /// `e[j] = e(L0 - j)`.
    pub e: Vec<f64>,
    pub residuals: SystemResiduals,
}

pub fn system_residuals(ops: &OperatorSet, b: &DVector<f64>, c: &DVector<f64>, e: &DVector<f64>) -> SystemResiduals {
    let first = (b + &ops.gc * e - (&ops.ge + &ops.fe) * c).norm();
    let second = (&ops.gc * c - &ops.ge * e).norm();
    let display_first = (b + &ops.ge * c - (&ops.gc + &ops.fc) * e).norm();
    SystemResiduals {
        first,
        second,
        display_first,
        b_norm: b.norm(),
    }
}

/// Pad `b` with zeros to the truncation length.
pub fn padded(b: &[f64], l: usize) -> Result<DVector<f64>> {
    if b.len() > l {
        return Err(Error::Config(format!("b has {} entries but truncation is {l}", b.len())));
    }
    let mut v = DVector::zeros(l);
    v.rows_mut(0, b.len()).copy_from_slice(b);
    Ok(v)
}

pub fn solve_coefficients(comp: &ComposedOperators, ops: &OperatorSet, b: &[f64]) -> Result<CoefficientSolution> {
    let bv = padded(b, ops.l)?;
    let c = Factored::new("F_mu", &comp.fmu)?.solve(&bv);
    let e = Factored::new("G^e", &ops.ge)?.solve(&(&ops.gc * &c));
    let residuals = system_residuals(ops, &bv, &c, &e);
    if !residuals.is_valid(RESIDUAL_TOLERANCE) {
        return Err(Error::ResidualFailure {
            residual: residuals.first.max(residuals.second),
            bound: RESIDUAL_TOLERANCE * residuals.b_norm,
        });
    }
    Ok(CoefficientSolution {
        c: c.as_slice().to_vec(),
        e: e.as_slice().to_vec(),
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepStep {
    pub l: usize,
    pub mse: f64,
    /// Relative MSE change from the previous step (infinite after a failed solve).
    pub mse_drift: f64,
    /// Max change over the leading coefficients shared with the previous step.
    pub head_drift: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub steps: Vec<SweepStep>,
    /// First truncation from which every later drift stays within tolerance.
    pub converged_at: Option<usize>,
}

pub const SWEEP_TOLERANCE: f64 = 1e-4;
const HEAD: usize = 32;

/// Re-solve at each truncation and report drift. A failed solve counts as
/// infinite drift; convergence requires the final drift within tolerance.
pub fn truncation_sweep<F>(mut solve: F, l_list: &[usize]) -> Result<SweepReport>
where
    F: FnMut(usize) -> Result<(f64, Vec<f64>)>,
{
    if l_list.is_empty() || l_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("truncation list must be non-empty and nondecreasing".into()));
    }
    let mut steps: Vec<SweepStep> = Vec::new();
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for &l in l_list {
        let step = match solve(l) {
            Ok((mse, c)) => {
                let (mse_drift, head_drift) = match &prev {
                    Some((pm, pc)) => {
                        let denom = mse.abs().max(pm.abs());
                        let md = if denom == 0.0 { 0.0 } else { (mse - pm).abs() / denom };
                        let n = c.len().min(pc.len()).min(HEAD);
                        let hd = (0..n).map(|i| (c[i] - pc[i]).abs()).fold(0.0, f64::max);
                        (md, hd)
                    }
                    None => (f64::NAN, f64::NAN),
                };
                prev = Some((mse, c));
                SweepStep {
                    l,
                    mse,
                    mse_drift,
                    head_drift,
                    error: None,
                }
            }
            Err(e) => {
                prev = None;
                SweepStep {
                    l,
                    mse: f64::NAN,
                    mse_drift: f64::INFINITY,
                    head_drift: f64::INFINITY,
                    error: Some(e.to_string()),
                }
            }
        };
        steps.push(step);
    }
    let ok = |s: &SweepStep| s.error.is_none() && s.mse_drift <= SWEEP_TOLERANCE;
    let mut converged_at = None;
    for i in (1..steps.len()).rev() {
        if ok(&steps[i]) {
            converged_at = Some(steps[i].l);
        } else {
            break;
        }
    }
    match converged_at {
        Some(_) => Ok(SweepReport { steps, converged_at }),
        None => Err(Error::NoConvergence {
            iterations: steps.len(),
            residual: steps.last().map(|s| s.mse_drift).unwrap_or(f64::INFINITY),
        }),
    }
}
