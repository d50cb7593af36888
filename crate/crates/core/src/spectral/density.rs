//! Spectral density models paired with an increment spec.
//!
//! Two densities are in play for every model: the level density `rho` of the
//! sequence itself, and the increment density
//! `p(lambda) = |1 - e^{-i lambda mu}|^{2n} lambda^{-2n} rho(lambda)`.
//! The weighted inverse that feeds the operator systems is `1 / p`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::increments::IncrementSpec;

pub type SpectralFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How a density is specified.
#[derive(Clone)]
pub enum DensityForm {
    /// Increment density equal to a constant level (white increments).
    IncrementConstant { level: f64 },
    /// Level density `rho(lambda)` given by a closure.
    ClosedForm(SpectralFn),
    /// Increment density `p(lambda)` given by a closure.
    IncrementForm(SpectralFn),
    /// ARMA increments: `p = s2 |theta(e^{-i l})|^2 / |phi(e^{-i l})|^2`,
    /// `phi(z) = 1 - sum ar_j z^j`, `theta(z) = 1 + sum ma_j z^j`.
    Arma { sigma2: f64, ar: Vec<f64>, ma: Vec<f64> },
    /// Level density sampled on `[0, pi]`, monotone cubic interpolation.
    Tabulated(Tabulated),
    /// Weighted inverse given directly as `sum_k c(|k|) e^{i lambda k}`.
    InverseTrig { coeffs: Vec<f64> },
}

impl fmt::Debug for DensityForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IncrementConstant { level } => write!(f, "IncrementConstant({level})"),
            Self::ClosedForm(_) => write!(f, "ClosedForm(..)"),
            Self::IncrementForm(_) => write!(f, "IncrementForm(..)"),
            Self::Arma { sigma2, ar, ma } => write!(f, "Arma({sigma2}, {ar:?}, {ma:?})"),
            Self::Tabulated(t) => write!(f, "Tabulated({} knots)", t.lambda.len()),
            Self::InverseTrig { coeffs } => write!(f, "InverseTrig({coeffs:?})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityModel {
    pub spec: IncrementSpec,
    pub form: DensityForm,
}

/// `(2 sin(x/2) / x)`, continuous at 0.
fn chord_ratio(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 24.0
    } else {
        2.0 * (0.5 * x).sin() / x
    }
}

/// `|1 - e^{i lambda mu}|^{2n} / lambda^{2n}`, with limit `mu^{2n}` at 0.
pub fn increment_gain(spec: IncrementSpec, lambda: f64) -> f64 {
    let mu = spec.mu() as f64;
    (mu * chord_ratio(mu * lambda)).powi(2 * spec.n() as i32)
}

/// `(1 - e^{-i lambda mu})^n / (i lambda)^n`, with limit `mu^n` at 0.
pub fn increment_transfer(spec: IncrementSpec, lambda: f64) -> Complex64 {
    let mu = spec.mu() as f64;
    let one = Complex64::from_polar(mu * chord_ratio(mu * lambda), -0.5 * mu * lambda);
    one.powu(spec.n() as u32)
}

const NUDGE: f64 = 1e-7;

impl DensityModel {
    pub fn increment_constant(spec: IncrementSpec, level: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::Config(format!("increment level must be positive, got {level}")));
        }
        Ok(Self {
            spec,
            form: DensityForm::IncrementConstant { level },
        })
    }

    pub fn closed_form<F: Fn(f64) -> f64 + Send + Sync + 'static>(spec: IncrementSpec, rho: F) -> Self {
        Self {
            spec,
            form: DensityForm::ClosedForm(Arc::new(rho)),
        }
    }

    pub fn increment_form<F: Fn(f64) -> f64 + Send + Sync + 'static>(spec: IncrementSpec, p: F) -> Self {
        Self {
            spec,
            form: DensityForm::IncrementForm(Arc::new(p)),
        }
    }

    pub fn arma(spec: IncrementSpec, sigma2: f64, ar: Vec<f64>, ma: Vec<f64>) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("ARMA innovation variance must be positive, got {sigma2}")));
        }
        if ar.iter().chain(&ma).any(|v| !v.is_finite()) {
            return Err(Error::Config("ARMA coefficients must be finite".into()));
        }
        Ok(Self {
            spec,
            form: DensityForm::Arma { sigma2, ar, ma },
        })
    }

    pub fn tabulated(spec: IncrementSpec, lambda: &[f64], rho: &[f64]) -> Result<Self> {
        Ok(Self {
            spec,
            form: DensityForm::Tabulated(Tabulated::new(lambda, rho)?),
        })
    }

    /// Read a `lambda,rho` CSV covering `[0, pi]`.
    pub fn from_csv<P: AsRef<Path>>(spec: IncrementSpec, path: P) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("tabulated density CSV lacks a `{name}` column")))
        };
        let (il, ir) = (col("lambda")?, col("rho")?);
        let (mut lambda, mut rho) = (Vec::new(), Vec::new());
        for rec in reader.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("bad number in tabulated density row {:?}", rec)))
            };
            lambda.push(parse(il)?);
            rho.push(parse(ir)?);
        }
        Self::tabulated(spec, &lambda, &rho)
    }

    pub fn inverse_trig(spec: IncrementSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("trigonometric coefficients must be finite and non-empty".into()));
        }
        Ok(Self {
            spec,
            form: DensityForm::InverseTrig { coeffs },
        })
    }

    /// Extra quadrature breakpoints (interpolation knots) for this model.
    pub fn knots(&self) -> Vec<f64> {
        match &self.form {
            DensityForm::Tabulated(t) => t.lambda.clone(),
            _ => Vec::new(),
        }
    }

    /// Level density `rho(lambda)`; infinite where the increment gain vanishes.
    pub fn rho(&self, lambda: f64) -> f64 {
        match &self.form {
            DensityForm::ClosedForm(f) => 0.5 * (f(lambda) + f(-lambda)),
            DensityForm::Tabulated(t) => t.eval(lambda.abs()),
            _ => {
                let gain = increment_gain(self.spec, lambda);
                let p = self.increment_density(lambda);
                if gain == 0.0 {
                    f64::INFINITY
                } else {
                    p / gain
                }
            }
        }
    }

    fn raw_increment_density(&self, lambda: f64) -> f64 {
        match &self.form {
            DensityForm::IncrementConstant { level } => *level,
            DensityForm::IncrementForm(p) => 0.5 * (p(lambda) + p(-lambda)),
            DensityForm::Arma { sigma2, ar, ma } => {
                let z = Complex64::from_polar(1.0, -lambda);
                let mut num = Complex64::new(1.0, 0.0);
                let mut den = Complex64::new(1.0, 0.0);
                let mut zk = Complex64::new(1.0, 0.0);
                for j in 0..ar.len().max(ma.len()) {
                    zk *= z;
                    if let Some(t) = ma.get(j) {
                        num += zk * t;
                    }
                    if let Some(a) = ar.get(j) {
                        den -= zk * a;
                    }
                }
                sigma2 * num.norm_sqr() / den.norm_sqr()
            }
            DensityForm::InverseTrig { coeffs } => 1.0 / trig_sum(coeffs, lambda),
            DensityForm::ClosedForm(_) | DensityForm::Tabulated(_) => {
                increment_gain(self.spec, lambda) * self.rho(lambda)
            }
        }
    }

    /// Increment density `p(lambda)`. Removable points (`0`, `2 pi j / mu`)
    /// that evaluate to a non-finite value are replaced by the symmetric
    /// average of nearby values.
    pub fn increment_density(&self, lambda: f64) -> f64 {
        let v = self.raw_increment_density(lambda);
        if v.is_finite() {
            return v;
        }
        let near = 0.5 * (self.raw_increment_density(lambda - NUDGE) + self.raw_increment_density(lambda + NUDGE));
        if near.is_finite() {
            near
        } else {
            v
        }
    }

    /// Weighted inverse `lambda^{2n} / (|1 - e^{i lambda mu}|^{2n} rho) = 1 / p`.
    pub fn weighted_inverse(&self, lambda: f64) -> f64 {
        match &self.form {
            DensityForm::IncrementConstant { level } => 1.0 / level,
            DensityForm::InverseTrig { coeffs } => trig_sum(coeffs, lambda),
            _ => {
                let p = self.increment_density(lambda);
                if p > 0.0 {
                    1.0 / p
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Whether the weighted inverse is known to be a constant `1/level`.
    pub fn constant_level(&self) -> Option<f64> {
        match &self.form {
            DensityForm::IncrementConstant { level } => Some(*level),
            _ => None,
        }
    }
}

/// `c(0) + 2 sum_{k>=1} c(k) cos(k lambda)`.
pub fn trig_sum(coeffs: &[f64], lambda: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if k == 0 { *c } else { 2.0 * c * (k as f64 * lambda).cos() })
        .sum()
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant of `rho` on `[0, pi]`.
#[derive(Debug, Clone)]
pub struct Tabulated {
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
    slopes: Vec<f64>,
}

impl Tabulated {
    /// Negative abscissae are folded onto `|lambda|`; coincident points are
    /// averaged, which symmetrizes the table.
    pub fn new(lambda: &[f64], rho: &[f64]) -> Result<Self> {
        if lambda.len() != rho.len() {
            return Err(Error::Config("tabulated density: lambda and rho lengths differ".into()));
        }
        let mut pts: Vec<(f64, f64)> = lambda.iter().map(|l| l.abs()).zip(rho.iter().copied()).collect();
        if pts.iter().any(|(l, r)| !l.is_finite() || !r.is_finite() || *r < 0.0) {
            return Err(Error::Config("tabulated density must be finite and nonnegative".into()));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64, usize)> = Vec::new();
        for (l, r) in pts {
            match merged.last_mut() {
                Some(last) if (last.0 - l).abs() < 1e-12 => {
                    last.1 += r;
                    last.2 += 1;
                }
                _ => merged.push((l, r, 1)),
            }
        }
        let xs: Vec<f64> = merged.iter().map(|m| m.0).collect();
        let ys: Vec<f64> = merged.iter().map(|m| m.1 / m.2 as f64).collect();
        if xs.len() < 2 || xs[0] > 1e-9 || xs[xs.len() - 1] < PI - 1e-9 {
            return Err(Error::Config("tabulated density grid must cover [0, pi]".into()));
        }
        let slopes = pchip_slopes(&xs, &ys);
        Ok(Self {
            lambda: xs,
            rho: ys,
            slopes,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (xs, ys, ds) = (&self.lambda, &self.rho, &self.slopes);
        let last = xs.len() - 1;
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[last] {
            return ys[last];
        }
        let i = xs.partition_point(|&v| v <= x) - 1;
        let h = xs[i + 1] - xs[i];
        let t = (x - xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
            + (t3 - 2.0 * t2 + t) * h * ds[i]
            + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
            + (t3 - t2) * h * ds[i + 1];
        v.max(0.0)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, mu: usize) -> IncrementSpec {
        IncrementSpec::new(n, mu).unwrap()
    }

    #[test]
    fn constant_model_is_exact() {
        let m = DensityModel::increment_constant(spec(2, 3), 4.0).unwrap();
        assert_eq!(m.weighted_inverse(1.0), 0.25);
        assert_eq!(m.weighted_inverse(0.0), 0.25);
        let m = DensityModel::increment_constant(spec(1, 1), 2.5).unwrap();
        assert_eq!(m.increment_density(0.3), 2.5);
        assert!(DensityModel::increment_constant(spec(1, 1), 0.0).is_err());
    }

    #[test]
    fn closed_form_with_removable_point() {
        let s = spec(1, 1);
        let m = DensityModel::closed_form(s, |l: f64| l * l / (1.0 - Complex64::from_polar(1.0, l)).norm_sqr());
        let half = PI / 2.0;
        // Direct evaluation: rho(pi/2) = (pi/2)^2 / 2 and the gain is 2/(pi/2)^2.
        assert!((m.increment_density(half) - 1.0).abs() < 1e-14);
        assert!((m.weighted_inverse(half) - 1.0).abs() < 1e-14);
        // 0/0 at the origin resolves to the limit.
        let at0 = m.weighted_inverse(0.0);
        assert!((at0 - 1.0).abs() < 1e-8, "{at0}");
    }

    #[test]
    fn origin_limit_uses_level_density() {
        // weighted inverse at 0 equals mu^{-2n} / rho(0).
        let s = spec(2, 3);
        let m = DensityModel::closed_form(s, |l: f64| 1.0 + 0.5 * l.cos());
        let expect = 3f64.powi(-4) / 1.5;
        assert!((m.weighted_inverse(0.0) - expect).abs() < 1e-15 * expect.max(1.0));
    }

    #[test]
    fn gain_vanishes_at_seasonal_frequencies() {
        let s = spec(1, 2);
        assert!(increment_gain(s, PI).abs() < 1e-30);
        assert!((increment_gain(s, 0.0) - 4.0).abs() < 1e-15);
        let t = increment_transfer(s, 0.0);
        assert!((t - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transfer_matches_direct_formula() {
        let s = spec(2, 3);
        for &l in &[0.3, -1.1, 2.9] {
            let direct = ((Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -3.0 * l))
                / Complex64::new(0.0, l))
            .powu(2);
            assert!((increment_transfer(s, l) - direct).norm() < 1e-13);
            let gain = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 3.0 * l)).norm_sqr().powi(2)
                / l.powi(4);
            assert!((increment_gain(s, l) - gain).abs() < 1e-12 * gain);
        }
    }

    #[test]
    fn arma_density_matches_ar1_formula() {
        let m = DensityModel::arma(spec(1, 1), 2.0, vec![0.6], vec![]).unwrap();
        for &l in &[0.0, 0.7, 3.0] {
            let expect = 2.0 / (1.0 - 1.2 * f64::cos(l) + 0.36);
            assert!((m.increment_density(l) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn tabulated_interpolation_is_monotone_and_even() {
        let xs: Vec<f64> = (0..=10).map(|i| PI * i as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + x).collect();
        let m = DensityModel::tabulated(spec(1, 1), &xs, &ys).unwrap();
        let mut prev = 0.0;
        for i in 0..200 {
            let x = PI * i as f64 / 199.0;
            let v = m.rho(x);
            assert!(v >= prev - 1e-14);
            assert!((v - (1.0 + x)).abs() < 1e-12, "linear data is reproduced");
            assert_eq!(m.rho(-x), v);
            prev = v;
        }
        assert!(DensityModel::tabulated(spec(1, 1), &[0.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn inverse_trig_round_trip() {
        let m = DensityModel::inverse_trig(spec(1, 1), vec![1.0, 0.5]).unwrap();
        for &l in &[0.0, 1.0, 2.0] {
            assert!((m.weighted_inverse(l) - (1.0 + l.cos())).abs() < 1e-15);
            assert!((m.weighted_inverse(l) * m.increment_density(l) - 1.0).abs() < 1e-12);
        }
    }
}
