//! Saddle-point verification and the least-favorable solvers.
//!
//! The first condition reads `F_mu p1 = b` with `F_mu = Fe + S`,
//! `S = Ge - Gc Ge^-1 Gc`. Because `Ge^-1 Gc d_m = d_{L0-m}` for `m <= L0`,
//! `S` annihilates the first `L0 + 1` unit vectors; with `g` known and
//! `M <= L0` the condition collapses to the Toeplitz system
//! `sum_m f(|l - m|) p1(m) = b(l)`, which fixes `p1` from the moments and
//! then `f(l)`, `l > M`, by recursion. For `M > L0` the bilinear system is
//! solved by Newton's method.

use nalgebra::{DMatrix, DVector};

use super::{
    fejer_riesz_factorize, trig_moments, DensityClass, Factorization, LeastFavorableSolution, SaddleReport,
    SADDLE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::increments::{functional_decomposition, IncrementSpec, WeightVector};
use crate::interpolate::{difference_coeffs, series, TruncationConfig};
use crate::linalg::{condition_number, ensure_conditioned, Factored};
use crate::operators::{build_operator_set, padded, required_lag, OperatorSet};
use crate::spectral::FourierTable;

const MODULUS_GRID: usize = 1024;
const NEWTON_MAX: usize = 50;
const NEWTON_TOLERANCE: f64 = 1e-13;

fn pad(t: &FourierTable, len: usize) -> FourierTable {
    let mut c = t.coeffs.clone();
    c.resize(len, 0.0);
    FourierTable::new(c)
}

/// `e(p)[L0 - m] = p1(m) - p2(m)` for `0 <= m <= L0`.
fn etilde(p1: &[f64], p2: &[f64], horizon: usize, l: usize) -> DVector<f64> {
    let mut e = DVector::zeros(l);
    for m in 0..=horizon.min(p1.len().max(p2.len()).saturating_sub(1)) {
        let a = p1.get(m).copied().unwrap_or(0.0);
        let b = p2.get(m).copied().unwrap_or(0.0);
        e[horizon - m] = a - b;
    }
    e
}

struct Setup {
    b: Vec<f64>,
    horizon: usize,
    l: usize,
    ops: OperatorSet,
    /// `Ge^-1 Gc`.
    x: DMatrix<f64>,
}

fn setup(spec: IncrementSpec, a: &WeightVector, f0: &FourierTable, g0: &FourierTable, trunc: &TruncationConfig) -> Result<Setup> {
    let big_n = a.horizon();
    let b = functional_decomposition(spec, a).b;
    let horizon = spec.horizon(big_n);
    let l = trunc.resolve_l(horizon);
    let k = required_lag(horizon, l);
    let ops = build_operator_set(&pad(f0, k + 1), &pad(g0, k + 1), spec, big_n, l)?;
    let x = Factored::new("G^e", &ops.ge)?.solve_matrix(&ops.gc);
    Ok(Setup { b, horizon, l, ops, x })
}

/// Check a candidate `(f0, g0, p1, p2)` against every saddle-point
/// condition of `class`.
#[allow(clippy::too_many_arguments)]
pub fn verify_saddle(
    spec: IncrementSpec,
    a: &WeightVector,
    class: &DensityClass,
    f0: &FourierTable,
    g0: &FourierTable,
    p1: &[f64],
    p2: &[f64],
    trunc: &TruncationConfig,
) -> Result<SaddleReport> {
    class.validate()?;
    let Setup { b, horizon, l, ops, x } = setup(spec, a, f0, g0, trunc)?;
    let bv = padded(&b, l)?;
    let p1v = padded(p1, l)?;
    let et = etilde(p1, p2, horizon, l);

    let fmu = &ops.fe + &ops.ge - &ops.gc * &x;
    let xp = &x * &p1v;
    let composed_f = (&fmu * &p1v - &bv).norm();
    let composed_g = (&xp - &et).norm();
    let display_first = ((&ops.gc + &ops.fc) * &xp - &ops.ge * &p1v - &bv).norm();
    let known_g = (&ops.fc * &xp - (&ops.ge * &p1v - &ops.gc * &xp + &bv)).norm();
    let gc_condition = condition_number(&ops.gc);
    let display_second = if gc_condition <= trunc.condition_bound {
        let y = Factored::new("G^c", &ops.gc)?.solve_matrix(&ops.ge);
        Some(((&ops.gc + &ops.fc - &ops.ge * y) * &bv - &et).norm())
    } else {
        None
    };

    let (modulus_f, modulus_g) = match ensure_conditioned("F_mu", &fmu, trunc.condition_bound)
        .and_then(|_| Factored::new("F_mu", &fmu))
    {
        Ok(fac) => {
            let c = fac.solve(&bv);
            let e = &x * &c;
            let (c, e) = (c.as_slice(), e.as_slice());
            let (lo, d) = difference_coeffs(horizon, c, e);
            let scale = p1
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .max(p2.iter().map(|v| v * v).sum())
                .max(f64::MIN_POSITIVE);
            let (mut mf, mut mg) = (0.0f64, 0.0f64);
            for i in 0..=MODULUS_GRID {
                let lam = std::f64::consts::PI * i as f64 / MODULUS_GRID as f64;
                let cc = series(c, 0, lam).norm_sqr();
                let dd = series(&d, lo, lam).norm_sqr();
                mf = mf.max((cc - series(p1, 0, lam).norm_sqr()).abs());
                mg = mg.max((dd - series(p2, 0, lam).norm_sqr()).abs());
            }
            (Some(mf / scale), Some(mg / scale))
        }
        Err(_) => (None, None),
    };

    let q = &trunc.quadrature;
    let count = class.order() + 1;
    let achieved_f = trig_moments(&f0.coeffs, count, q)?;
    let achieved_g = trig_moments(&g0.coeffs, count, q)?;
    let gap = |got: &[f64], want: &[f64]| got.iter().zip(want).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>();
    let moment_f = gap(&achieved_f, &class.f_moments());
    let moment_g = class.g_moments().map(|r| gap(&achieved_g, &r));

    Ok(SaddleReport {
        b_norm: bv.norm(),
        composed_f,
        composed_g,
        display_first,
        display_second,
        gc_condition,
        known_g,
        modulus_f,
        modulus_g,
        achieved_f,
        achieved_g,
        moment_f,
        moment_g,
    })
}

/// Verify a candidate against a `D0` class.
pub fn verify_saddle_d0(
    candidate: &LeastFavorableSolution,
    a: &WeightVector,
    class: &DensityClass,
    trunc: &TruncationConfig,
) -> Result<SaddleReport> {
    if !matches!(class, DensityClass::D0 { .. }) {
        return Err(Error::Config("expected a D0 class".into()));
    }
    verify_candidate(candidate, a, class, trunc)
}

/// Verify a candidate against a `DM` class.
pub fn verify_saddle_dm(
    candidate: &LeastFavorableSolution,
    a: &WeightVector,
    class: &DensityClass,
    trunc: &TruncationConfig,
) -> Result<SaddleReport> {
    if !matches!(class, DensityClass::DM { .. }) {
        return Err(Error::Config("expected a DM class".into()));
    }
    verify_candidate(candidate, a, class, trunc)
}

fn verify_candidate(
    c: &LeastFavorableSolution,
    a: &WeightVector,
    class: &DensityClass,
    trunc: &TruncationConfig,
) -> Result<SaddleReport> {
    if a.horizon() != c.big_n {
        return Err(Error::Config("candidate was built for a different functional".into()));
    }
    verify_saddle(c.spec, a, class, &c.f0, &c.g0, &c.p1, &c.p2, trunc)
}

fn toeplitz_recursion(r1: &[f64], b: &[f64], l: usize, bound: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = r1.len() - 1;
    let t = DMatrix::from_fn(m + 1, m + 1, |i, j| r1[i.abs_diff(j)]);
    ensure_conditioned("moment Toeplitz matrix", &t, bound)?;
    let rhs = DVector::from_fn(m + 1, |i, _| b.get(i).copied().unwrap_or(0.0));
    let p = Factored::new("moment Toeplitz matrix", &t)?.solve(&rhs);
    let scale = p.amax();
    if p[0].abs() <= 1e-14 * scale || scale == 0.0 {
        return Err(Error::Config(
            "p1(0) vanishes, so the moments do not determine the least-favorable density".into(),
        ));
    }
    let mut f = r1.to_vec();
    f.resize(l, 0.0);
    for j in m + 1..l {
        let s: f64 = (1..=m).map(|i| f[j - i] * p[i]).sum();
        f[j] = (b.get(j).copied().unwrap_or(0.0) - s) / p[0];
    }
    Ok((p.as_slice().to_vec(), f))
}

/// Newton's method on `(Fe(f) + S) p = b` with `f(0..=M) = r1` fixed and
/// unknowns `p(0..=M)`, `f(M+1..L)`.
fn newton_known_g(r1: &[f64], b: &DVector<f64>, s: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let l = b.len();
    let m = r1.len() - 1;
    let mut f = r1.to_vec();
    f.resize(l, 0.0);
    let system = |f: &[f64]| DMatrix::from_fn(l, l, |i, j| f[i.abs_diff(j)]) + s;
    let residual = |a: &DMatrix<f64>, p: &[f64]| a.columns(0, m + 1) * DVector::from_column_slice(p) - b;

    let a0 = system(&f);
    let head = a0.view((0, 0), (m + 1, m + 1)).into_owned();
    let mut p = Factored::new("moment block", &head)?
        .solve(&b.rows(0, m + 1).into_owned())
        .as_slice()
        .to_vec();
    let target = NEWTON_TOLERANCE * b.norm().max(f64::MIN_POSITIVE);
    let mut norm = residual(&a0, &p).norm();
    for it in 1..=NEWTON_MAX {
        if norm <= target {
            return Ok((p, f, it - 1));
        }
        let a = system(&f);
        let r = residual(&a, &p);
        let mut jac = DMatrix::zeros(l, l);
        jac.columns_mut(0, m + 1).copy_from(&a.columns(0, m + 1));
        for j in m + 1..l {
            for i in 0..l {
                let mut v = 0.0;
                if i >= j && i - j <= m {
                    v += p[i - j];
                }
                if i + j <= m {
                    v += p[i + j];
                }
                jac[(i, m + 1 + (j - m - 1))] = v;
            }
        }
        let step = Factored::new("Newton Jacobian", &jac)?.solve(&(-r));
        let mut t = 1.0;
        loop {
            let p_new: Vec<f64> = (0..=m).map(|i| p[i] + t * step[i]).collect();
            let mut f_new = f.clone();
            for j in m + 1..l {
                f_new[j] += t * step[j];
            }
            let n_new = residual(&system(&f_new), &p_new).norm();
            if n_new < norm || t < 1e-6 {
                p = p_new;
                f = f_new;
                norm = n_new;
                break;
            }
            t *= 0.5;
        }
    }
    if norm <= target {
        return Ok((p, f, NEWTON_MAX));
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX,
        residual: norm,
    })
}

/// Least-favorable `f` when `g` is known, for a `D0` (`P1`) or `DM` (`r1`)
/// class; any constraint on `g` in `class` is ignored.
pub fn solve_known_g(
    spec: IncrementSpec,
    a: &WeightVector,
    g: &FourierTable,
    class: &DensityClass,
    trunc: &TruncationConfig,
) -> Result<LeastFavorableSolution> {
    let class = class.without_g();
    class.validate()?;
    let r1 = class.f_moments();
    let m = r1.len() - 1;
    let b = functional_decomposition(spec, a).b;
    let horizon = spec.horizon(a.horizon());
    let l = trunc.resolve_l(horizon);
    if m + 1 >= l {
        return Err(Error::Config(format!("moment order M = {m} needs truncation L > {}", m + 1)));
    }
    let (p1, f_head, iterations) = if m <= horizon {
        let (p, f) = toeplitz_recursion(&r1, &b, l, trunc.condition_bound)?;
        (p, f, 0)
    } else {
        let st = setup(spec, a, &FourierTable::new(r1.clone()), g, trunc)?;
        let s = &st.ops.ge - &st.ops.gc * &st.x;
        newton_known_g(&r1, &padded(&b, l)?, &s)?
    };
    let f0 = FourierTable::new(f_head);
    super::ensure_nonnegative(&f0.coeffs, "least-favorable weighted inverse is negative")?;

    // p2 from the implied e: p2(m) = p1(m) - e(m).
    let st = setup(spec, a, &f0, g, trunc)?;
    let xp = &st.x * padded(&p1, l)?;
    let p2: Vec<f64> = (0..=m)
        .map(|k| p1[k] - if k <= horizon { xp[horizon - k] } else { 0.0 })
        .collect();

    let report = verify_saddle(spec, a, &class, &f0, g, &p1, &p2, trunc)?;
    let factorization = fejer_riesz_factorize(&trimmed(&f0.coeffs)).ok().map(|gamma| Factorization {
        gamma,
        zeta: fejer_riesz_factorize(&trimmed(&g.coeffs)).ok(),
    });
    Ok(LeastFavorableSolution {
        spec,
        big_n: a.horizon(),
        converged: report.is_valid(SADDLE_TOLERANCE),
        f0,
        g0: g.clone(),
        p1,
        p2,
        report,
        factorization,
        iterations,
    })
}

/// Drop negligible trailing coefficients before factorizing.
fn trimmed(c: &[f64]) -> Vec<f64> {
    let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut end = c.len();
    while end > 1 && c[end - 1].abs() <= 1e-14 * scale {
        end -= 1;
    }
    c[..end].to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Relaxation weight in `(0, 1]`.
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iter: 200,
        }
    }
}

/// Damped fixed-point iteration for `D0` with both `P1` and `P2`.
///
/// Each sweep replaces `f` by a relaxed step towards the known-`g` solution
/// at the current `g`, and rescales `g` to meet its moment. In this class the
/// second modulus condition forces `E = C`, i.e. `p2 = 0`, so `g` is fixed
/// only through its moment. Returns the last iterate with
/// `converged = false` if verification never passes.
pub fn solve_d0_fixed_point(
    spec: IncrementSpec,
    a: &WeightVector,
    class: &DensityClass,
    trunc: &TruncationConfig,
    cfg: FixedPointConfig,
    start: Option<&LeastFavorableSolution>,
) -> Result<LeastFavorableSolution> {
    class.validate()?;
    let (p1_level, p2_level) = match class {
        DensityClass::D0 { p1, p2: Some(p2) } => (*p1, *p2),
        _ => return Err(Error::Config("fixed-point solver needs a D0 class with both P1 and P2".into())),
    };
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) || cfg.max_iter == 0 {
        return Err(Error::Config("damping must lie in (0, 1] and max_iter be positive".into()));
    }
    let b = functional_decomposition(spec, a).b;
    if b[0] == 0.0 {
        return Err(Error::Config("(D a)(0) = 0: P1 does not determine p1".into()));
    }
    let mut f = start.map_or_else(|| vec![p1_level], |s| s.f0.coeffs.clone());
    let g_start = start.map_or_else(|| vec![p2_level], |s| s.g0.coeffs.clone());
    if g_start[0] <= 0.0 {
        return Err(Error::Config("starting g must have a positive mean weighted inverse".into()));
    }
    let g = FourierTable::new(g_start.iter().map(|v| v * p2_level / g_start[0]).collect());
    let p1 = vec![b[0] / p1_level];
    let p2 = vec![0.0];
    let f_class = class.without_g();

    let mut last = None;
    for it in 1..=cfg.max_iter {
        let target = solve_known_g(spec, a, &g, &f_class, trunc)?;
        let len = f.len().max(target.f0.coeffs.len());
        f.resize(len, 0.0);
        for (k, v) in f.iter_mut().enumerate() {
            let t = target.f0.coeffs.get(k).copied().unwrap_or(0.0);
            *v = (1.0 - cfg.damping) * *v + cfg.damping * t;
        }
        let f0 = FourierTable::new(f.clone());
        let report = verify_saddle(spec, a, class, &f0, &g, &p1, &p2, trunc)?;
        let converged = report.is_valid(SADDLE_TOLERANCE);
        let sol = LeastFavorableSolution {
            spec,
            big_n: a.horizon(),
            f0,
            g0: g.clone(),
            p1: p1.clone(),
            p2: p2.clone(),
            report,
            factorization: target.factorization.clone(),
            converged,
            iterations: it,
        };
        if converged {
            super::ensure_nonnegative(&sol.f0.coeffs, "least-favorable weighted inverse is negative")?;
            return Ok(sol);
        }
        last = Some(sol);
    }
    Ok(last.expect("at least one iteration"))
}
