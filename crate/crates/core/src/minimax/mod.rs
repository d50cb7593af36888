//! Minimax-robust interpolation over moment classes of densities.
//!
//! Densities enter only through their weighted inverses
//! `W(lambda) = lambda^{2n} / (|1 - e^{i lambda mu}|^{2n} f(lambda))`, so a
//! least-favorable pair is described by the Fourier heads of `W_f`, `W_g`.
//! Two classes are supported:
//!
//! * `D0`: `(1/2pi) int W_f = P1` (and optionally `int W_g = P2`);
//! * `DM`: `(1/2pi) int W_f cos(m lambda) = r1(m)` for `m = 0..=M` (and `r2`).
//!
//! A candidate is accepted only after [`verify_saddle`] has checked the
//! operator equations, the squared-modulus conditions and the moments.

pub mod factorize;
mod saddle;

use std::f64::consts::PI;

pub use factorize::{autocorrelation, ensure_nonnegative, fejer_riesz_factorize, trig_minimum};
pub use saddle::{solve_d0_fixed_point, solve_known_g, verify_saddle, verify_saddle_d0, verify_saddle_dm, FixedPointConfig};

use crate::error::{Error, Result};
use crate::increments::{functional_decomposition, IncrementSpec, WeightVector};
use crate::interpolate::{difference_coeffs, series, solve_functional, weighted_objective, EstimateSolution, InterpolationProblem, TruncationConfig};
use crate::spectral::quadrature::{breakpoints, integrate_converged};
use crate::spectral::{DensityModel, FourierTable, QuadratureConfig};

/// Residual bound (relative) for a candidate to count as least favorable.
pub const SADDLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityClass {
    D0 { p1: f64, p2: Option<f64> },
    DM { r1: Vec<f64>, r2: Option<Vec<f64>> },
}

impl DensityClass {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite());
        let ok = match self {
            DensityClass::D0 { p1, p2 } => positive(&[*p1]) && p2.is_none_or(|p| positive(&[p])),
            DensityClass::DM { r1, r2 } => {
                positive(r1) && r2.as_ref().is_none_or(|r| positive(r) && r.len() == r1.len())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "class constraints must be strictly positive (and r1, r2 of equal length)".into(),
            ))
        }
    }

    /// Number of cosine moments minus one (`M`; 0 for `D0`).
    pub fn order(&self) -> usize {
        match self {
            DensityClass::D0 { .. } => 0,
            DensityClass::DM { r1, .. } => r1.len() - 1,
        }
    }

    pub fn f_moments(&self) -> Vec<f64> {
        match self {
            DensityClass::D0 { p1, .. } => vec![*p1],
            DensityClass::DM { r1, .. } => r1.clone(),
        }
    }

    pub fn g_moments(&self) -> Option<Vec<f64>> {
        match self {
            DensityClass::D0 { p2, .. } => p2.map(|p| vec![p]),
            DensityClass::DM { r2, .. } => r2.clone(),
        }
    }

    /// The same class with the constraint on `g` dropped.
    pub fn without_g(&self) -> Self {
        match self {
            DensityClass::D0 { p1, .. } => DensityClass::D0 { p1: *p1, p2: None },
            DensityClass::DM { r1, .. } => DensityClass::DM { r1: r1.clone(), r2: None },
        }
    }
}

/// Residuals of a least-favorable candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    pub b_norm: f64,
    /// `||F_mu p1 - b||`, the first condition in composed form.
    pub composed_f: f64,
    /// `||(G^e)^-1 G^c p1 - e(p)||` where `e(p)[L0 - m] = p1(m) - p2(m)`.
    pub composed_g: f64,
    /// The first operator equation in its printed form.
    pub display_first: f64,
    /// The second printed equation; `None` when `G^c` is too ill-conditioned to invert.
    pub display_second: Option<f64>,
    pub gc_condition: f64,
    /// The known-`g` equation in its printed form.
    pub known_g: f64,
    /// `max | |C|^2 - |P1|^2 |` over a grid, relative to `sum p^2`.
    pub modulus_f: Option<f64>,
    /// `max | |C - E|^2 - |P2|^2 |`, same scale.
    pub modulus_g: Option<f64>,
    pub achieved_f: Vec<f64>,
    pub achieved_g: Vec<f64>,
    /// `|achieved - target|` per constrained moment.
    pub moment_f: Vec<f64>,
    pub moment_g: Option<Vec<f64>>,
}

impl SaddleReport {
    pub fn max_moment_residual(&self) -> f64 {
        self.moment_f
            .iter()
            .chain(self.moment_g.iter().flatten())
            .fold(0.0, |m, v| m.max(*v))
    }

    /// Largest residual that decides validity, in relative units.
    pub fn worst(&self) -> f64 {
        let scale = self.b_norm.max(f64::MIN_POSITIVE);
        let mut w = (self.composed_f / scale).max(self.modulus_f.unwrap_or(f64::INFINITY));
        // g-side conditions only bind when g is itself least favorable.
        if self.moment_g.is_some() {
            w = w.max(self.composed_g / scale);
            w = w.max(self.modulus_g.unwrap_or(f64::INFINITY));
        }
        w.max(self.max_moment_residual())
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub gamma: Vec<f64>,
    pub zeta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastFavorableSolution {
    pub spec: IncrementSpec,
    pub big_n: usize,
    /// Fourier head of the weighted inverse of `f0`.
    pub f0: FourierTable,
    pub g0: FourierTable,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub report: SaddleReport,
    pub factorization: Option<Factorization>,
    /// True only when `report` passes at [`SADDLE_TOLERANCE`].
    pub converged: bool,
    pub iterations: usize,
}

/// Density whose weighted inverse is the trigonometric sum of `coeffs`.
pub fn assemble_density(coeffs: &FourierTable, spec: IncrementSpec) -> Result<DensityModel> {
    ensure_nonnegative(&coeffs.coeffs, "assembled weighted inverse is negative")?;
    if coeffs.coeffs.iter().skip(1).all(|c| *c == 0.0) {
        let c0 = coeffs.coeffs[0];
        if c0 > 0.0 {
            return DensityModel::increment_constant(spec, 1.0 / c0);
        }
    }
    DensityModel::inverse_trig(spec, coeffs.coeffs.clone())
}

/// `(1/2pi) int S(lambda) cos(m lambda)` for `m = 0..count`, by quadrature.
pub(crate) fn trig_moments(coeffs: &[f64], count: usize, q: &QuadratureConfig) -> Result<Vec<f64>> {
    let breaks = breakpoints(&[], &[], 0.0);
    let out = integrate_converged(
        "density moments",
        &breaks,
        q.panels_for(coeffs.len() + count),
        q,
        coeffs.iter().map(|c| c.abs()).sum::<f64>(),
        count,
        |x, o| {
            let s = crate::spectral::trig_sum(coeffs, x);
            for (m, v) in o.iter_mut().enumerate() {
                *v = s * (m as f64 * x).cos();
            }
        },
    )?;
    Ok(out.into_iter().map(|v| v / PI).collect())
}

/// `(1/2pi) int |C|^2 W_f + |C - E|^2 W_g` with the weighted inverses given
/// by Fourier tables.
pub fn lemma1_objective(
    f: &FourierTable,
    g: &FourierTable,
    c: &[f64],
    e: &[f64],
    spec: IncrementSpec,
    big_n: usize,
    q: &QuadratureConfig,
) -> Result<f64> {
    if c.len() != e.len() {
        return Err(Error::Config("c and e must have the same length".into()));
    }
    weighted_objective(spec, spec.horizon(big_n), c, e, &|x| f.eval(x), &|x| g.eval(x), &[], q)
}

/// Corollary-style closed form for white-noise `g`: `f0(k) = P1 b(k) / b(0)`
/// with `b = D a`, and `p1 = b(0) / P1`.
pub fn white_noise_least_favorable(
    spec: IncrementSpec,
    a: &WeightVector,
    p1_level: f64,
    trunc: &TruncationConfig,
) -> Result<LeastFavorableSolution> {
    let class = DensityClass::D0 { p1: p1_level, p2: None };
    class.validate()?;
    let b = functional_decomposition(spec, a).b;
    if let Some((k, v)) = b.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::PositivityViolation {
            lambda: f64::NAN,
            value: *v,
            context: format!("(D a)({k}) must be positive for the white-noise closed form"),
        });
    }
    let f0 = FourierTable::new(b.iter().map(|v| p1_level * v / b[0]).collect());
    ensure_nonnegative(&f0.coeffs, "assembled least-favorable weighted inverse is negative")?;
    let g0 = FourierTable::new(vec![1.0]);
    let p1 = vec![b[0] / p1_level];
    let p2 = vec![0.0];
    let report = verify_saddle(spec, a, &class, &f0, &g0, &p1, &p2, trunc)?;
    let gamma = fejer_riesz_factorize(&f0.coeffs)?;
    Ok(LeastFavorableSolution {
        spec,
        big_n: a.horizon(),
        converged: report.is_valid(SADDLE_TOLERANCE),
        f0,
        g0,
        p1,
        p2,
        report,
        factorization: Some(Factorization {
            gamma,
            zeta: Some(vec![1.0]),
        }),
        iterations: 0,
    })
}

/// Optimal estimate under the least-favorable pair.
pub fn minimax_characteristic(
    lf: &LeastFavorableSolution,
    a: &WeightVector,
    trunc: &TruncationConfig,
) -> Result<EstimateSolution> {
    if !lf.converged {
        return Err(Error::Config(format!(
            "least-favorable candidate failed verification (worst residual {:.3e})",
            lf.report.worst()
        )));
    }
    if a.horizon() != lf.big_n {
        return Err(Error::Config("functional horizon differs from the least-favorable solution".into()));
    }
    let problem = InterpolationProblem {
        spec: lf.spec,
        a: a.clone(),
        f: assemble_density(&lf.f0, lf.spec)?,
        g: assemble_density(&lf.g0, lf.spec)?,
        trunc: *trunc,
    };
    let mut sol = solve_functional(&problem)?;
    sol.minimax = true;
    Ok(sol)
}

/// Error of the fixed estimate `h0` when the true densities are `(f, g)`:
/// `(1/2pi) int |C0|^2 W0f^2 / Wf + |C0 - E0|^2 W0g^2 / Wg`.
pub fn saddle_objective(h0: &EstimateSolution, f: &DensityModel, g: &DensityModel) -> Result<f64> {
    let q = &h0.quadrature;
    let (lo, d) = difference_coeffs(h0.horizon, &h0.c, &h0.e);
    let mut knots = f.knots();
    knots.extend(g.knots());
    knots.extend(h0.f.knots());
    knots.extend(h0.g.knots());
    let breaks = breakpoints(&[h0.spec.mu()], &knots, q.singularity_exclusion);
    let term = |h2: f64, w0: f64, w: f64| if h2 == 0.0 { 0.0 } else { h2 * w0 * w0 / w };
    let out = integrate_converged(
        "saddle objective",
        &breaks,
        q.panels_for(h0.c.len() + d.len()),
        q,
        0.0,
        1,
        |x, o| {
            let cc = series(&h0.c, 0, x).norm_sqr();
            let dd = series(&d, lo, x).norm_sqr();
            o[0] = term(cc, h0.f.weighted_inverse(x), f.weighted_inverse(x))
                + term(dd, h0.g.weighted_inverse(x), g.weighted_inverse(x));
        },
    )?;
    Ok(out[0] / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, mu: usize) -> IncrementSpec {
        IncrementSpec::new(n, mu).unwrap()
    }

    fn wv(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn class_validation() {
        assert!(DensityClass::D0 { p1: 1.0, p2: None }.validate().is_ok());
        assert!(DensityClass::D0 { p1: 0.0, p2: None }.validate().is_err());
        assert!(DensityClass::D0 { p1: 1.0, p2: Some(-1.0) }.validate().is_err());
        let dm = DensityClass::DM {
            r1: vec![1.0, 0.5],
            r2: Some(vec![1.0]),
        };
        assert!(dm.validate().is_err());
        assert_eq!(DensityClass::DM { r1: vec![2.0, 1.0, 0.5], r2: None }.order(), 2);
    }

    #[test]
    fn closed_form_two_point_functional() {
        let s = spec(1, 1);
        let lf = white_noise_least_favorable(s, &wv(&[1.0, 1.0]), 1.0, &TruncationConfig::default()).unwrap();
        assert_eq!(lf.f0.coeffs, vec![1.0, 0.5]);
        assert_eq!(lf.p1, vec![2.0]);
        assert!(lf.converged, "{:?}", lf.report);
        assert!(lf.report.known_g < 1e-8);
        let f = assemble_density(&lf.f0, s).unwrap();
        let x: f64 = 0.7;
        let expect = x * x / ((2.0 - 2.0 * x.cos()) * (1.0 + x.cos()));
        assert!((f.rho(x) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn delta_functional_gives_constant_density() {
        let s = spec(2, 1);
        let lf = white_noise_least_favorable(s, &wv(&[1.0]), 3.0, &TruncationConfig::default()).unwrap();
        assert_eq!(lf.f0.coeffs, vec![3.0]);
        assert_eq!(assemble_density(&lf.f0, s).unwrap().constant_level(), Some(1.0 / 3.0));
    }

    #[test]
    fn nonpositive_decomposition_is_rejected() {
        let r = white_noise_least_favorable(spec(1, 1), &wv(&[1.0, -2.0]), 1.0, &TruncationConfig::default());
        assert!(matches!(r, Err(Error::PositivityViolation { .. })));
    }

    #[test]
    fn assemble_rejects_negative_sum() {
        let r = assemble_density(&FourierTable::new(vec![1.0, 0.8]), spec(1, 1));
        match r {
            Err(Error::PositivityViolation { lambda, .. }) => assert!((lambda - PI).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn moments_of_trig_sum_are_its_coefficients() {
        let m = trig_moments(&[1.0, 0.3, -0.2], 4, &QuadratureConfig::default()).unwrap();
        for (got, want) in m.iter().zip([1.0, 0.3, -0.2, 0.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_coefficients_give_zero_objective() {
        let t = FourierTable::new(vec![1.0]);
        let q = QuadratureConfig::default();
        assert_eq!(lemma1_objective(&t, &t, &[0.0; 4], &[0.0; 4], spec(1, 1), 1, &q).unwrap(), 0.0);
    }
}
