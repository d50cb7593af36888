//! Spectral densities, weighted inverses and their Fourier coefficients.

mod density;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use density::{increment_gain, increment_transfer, trig_sum, DensityForm, DensityModel, SpectralFn, Tabulated};
pub use quadrature::QuadratureConfig;

use crate::error::{Error, Result};
use quadrature::{breakpoints, integrate_converged, Rule};

/// Even Fourier coefficients `c(0..=K)`; `c(-k) = c(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable {
    pub coeffs: Vec<f64>,
}

impl FourierTable {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient at a signed lag, `None` beyond the table.
    pub fn at(&self, k: i64) -> Option<f64> {
        self.coeffs.get(k.unsigned_abs() as usize).copied()
    }

    /// `sum_{|k| <= K} c(|k|) e^{i lambda k}`.
    pub fn eval(&self, lambda: f64) -> f64 {
        trig_sum(&self.coeffs, lambda)
    }
}

fn model_breaks(model: &DensityModel, q: &QuadratureConfig) -> Vec<f64> {
    breakpoints(&[model.spec.mu()], &model.knots(), q.singularity_exclusion)
}

/// `c(k) = (1/2pi) int W(lambda) e^{-i lambda k}` for `k = 0..=K`.
pub fn fourier_coefficients(model: &DensityModel, k_max: usize, q: &QuadratureConfig) -> Result<FourierTable> {
    q.validate()?;
    if let Some(level) = model.constant_level() {
        let mut coeffs = vec![0.0; k_max + 1];
        coeffs[0] = 1.0 / level;
        return Ok(FourierTable::new(coeffs));
    }
    let breaks = model_breaks(model, q);
    let mut out = integrate_converged(
        "weighted-inverse Fourier coefficients",
        &breaks,
        q.panels_for(k_max),
        q,
        0.0,
        k_max + 1,
        |x, o| {
            let w = model.weighted_inverse(x);
            for (k, v) in o.iter_mut().enumerate() {
                *v = w * (k as f64 * x).cos();
            }
        },
    )?;
    out.iter_mut().for_each(|v| *v /= PI);
    Ok(FourierTable::new(out))
}

/// Outcome of an integrability probe.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub integrable: bool,
    /// Frequencies in `[0, pi]` where the weighted inverse appears unbounded.
    pub offending: Vec<f64>,
    pub diagnostic: String,
}

/// Probe whether the weighted inverse is integrable: its integral must
/// settle under panel refinement, and it must stay bounded approaching the
/// removable points `2 pi j / mu`.
pub fn check_integrability(model: &DensityModel, q: &QuadratureConfig) -> IntegrabilityReport {
    let mut offending = Vec::new();
    let mut notes = Vec::new();

    let breaks = model_breaks(model, q);
    let total = integrate_converged("weighted-inverse mass", &breaks, q.panels, q, 0.0, 1, |x, o| {
        o[0] = model.weighted_inverse(x)
    });
    if let Err(e) = &total {
        notes.push(e.to_string());
    }

    for &p in breaks.iter().filter(|p| is_removable(**p, model.spec.mu())) {
        let probe = |d: f64| {
            let x = if p >= PI { p - d } else { p + d };
            model.weighted_inverse(x)
        };
        let (far, near) = (probe(1e-3), probe(1e-8));
        if !near.is_finite() || near > 1e3 * far.max(1e-300) {
            offending.push(p);
            notes.push(format!("weighted inverse grows from {far:.3e} to {near:.3e} approaching {p:.6}"));
        }
    }

    // Interior scan: isolate spikes that are orders of magnitude above the bulk.
    let grid = 4096;
    let vals: Vec<f64> = (0..=grid)
        .map(|i| model.weighted_inverse(PI * (i as f64 + 0.5) / (grid as f64 + 1.0)))
        .collect();
    let mut sorted: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(f64::INFINITY);
    for i in 0..vals.len() {
        let v = vals[i];
        let left = if i > 0 { vals[i - 1] } else { 0.0 };
        let right = vals.get(i + 1).copied().unwrap_or(0.0);
        let spike = !v.is_finite() || (v > 1e4 * median && v >= left && v >= right);
        if spike {
            let x = PI * (i as f64 + 0.5) / (grid as f64 + 1.0);
            if !offending.iter().any(|o: &f64| (o - x).abs() < 1e-2) {
                offending.push(x);
            }
        }
    }

    let integrable = total.is_ok() && offending.is_empty();
    if total.is_err() && offending.is_empty() {
        offending.extend(largest_spike(&vals, grid));
    }
    IntegrabilityReport {
        integrable,
        offending,
        diagnostic: if notes.is_empty() {
            "weighted inverse integrable".into()
        } else {
            notes.join("; ")
        },
    }
}

fn largest_spike(vals: &[f64], grid: usize) -> Option<f64> {
    let (i, _) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))?;
    Some(PI * (i as f64 + 0.5) / (grid as f64 + 1.0))
}

fn is_removable(p: f64, mu: usize) -> bool {
    let j = p * mu as f64 / (2.0 * PI);
    (j - j.round()).abs() < 1e-9
}

/// Fail unless the model's weighted inverse is integrable.
pub fn require_integrable(model: &DensityModel, q: &QuadratureConfig) -> Result<()> {
    let report = check_integrability(model, q);
    if report.integrable {
        Ok(())
    } else {
        Err(Error::NonIntegrableDensity {
            points: report.offending,
        })
    }
}

/// `(1/2pi) int e^{i lambda m} (1 - e^{-i mu1 lambda})^n (1 - e^{i mu2 lambda})^n
/// lambda^{-2n} rho(lambda) d lambda`.
pub fn structure_function(model: &DensityModel, m: i64, mu1: usize, mu2: usize, q: &QuadratureConfig) -> Result<f64> {
    q.validate()?;
    if mu1 == 0 || mu2 == 0 {
        return Err(Error::Config("structure function steps must be >= 1".into()));
    }
    let spec = model.spec;
    let mu = spec.mu();
    let breaks = breakpoints(&[mu, mu1, mu2], &model.knots(), q.singularity_exclusion);
    let panels = q.panels_for(m.unsigned_abs() as usize + spec.n() * (mu1 + mu2));
    let integrand = |x: f64| {
        let p = model.increment_density(x);
        if mu1 == mu && mu2 == mu {
            p * (m as f64 * x).cos()
        } else {
            // (1 - e^{-i a x})^n / (i x)^n times its counterpart, over the gain
            // already folded into p.
            let s1 = spec_with(spec, mu1);
            let s2 = spec_with(spec, mu2);
            let t = increment_transfer(s1, x) * increment_transfer(s2, x).conj();
            let phase = Complex64::from_polar(1.0, m as f64 * x);
            (phase * t).re * p / increment_gain(spec, x)
        }
    };
    // Near-zero values are judged against the mass of |integrand|, which
    // only needs to be rough.
    let floor = Rule::new(&breaks, panels, q.order).integrate(1, |x, o| o[0] = integrand(x).abs())[0];
    let out = integrate_converged("structure function", &breaks, panels, q, floor, 1, |x, o| o[0] = integrand(x))?;
    Ok(out[0] / PI)
}

fn spec_with(spec: crate::increments::IncrementSpec, mu: usize) -> crate::increments::IncrementSpec {
    crate::increments::IncrementSpec::new(spec.n(), mu).expect("validated step")
}

/// Parseval-style mass `(1/2pi) int W^2`.
pub fn weighted_inverse_energy(model: &DensityModel, q: &QuadratureConfig) -> Result<f64> {
    let breaks = model_breaks(model, q);
    let out = integrate_converged("weighted-inverse energy", &breaks, q.panels, q, 0.0, 1, |x, o| {
        o[0] = model.weighted_inverse(x).powi(2)
    })?;
    Ok(out[0] / PI)
}
