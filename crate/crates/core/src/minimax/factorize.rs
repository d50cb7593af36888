//! Positivity scans and Fejér–Riesz factorization of even trigonometric
//! polynomials `S(lambda) = sum_{|k| <= K} c(|k|) e^{i lambda k}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::trig_sum;

pub const POSITIVITY_GRID: usize = 4096;

/// Location and value of the minimum of `S` on `[0, pi]`: a uniform scan
/// (endpoints included) followed by golden-section refinement around the
/// best node.
pub fn trig_minimum(coeffs: &[f64]) -> (f64, f64) {
    let h = PI / POSITIVITY_GRID as f64;
    let (mut best_x, mut best_v) = (0.0, f64::INFINITY);
    for i in 0..=POSITIVITY_GRID {
        let x = i as f64 * h;
        let v = trig_sum(coeffs, x);
        if v < best_v {
            best_x = x;
            best_v = v;
        }
    }
    let (mut a, mut b) = ((best_x - h).max(0.0), (best_x + h).min(PI));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = b - r * (b - a);
        let x2 = a + r * (b - a);
        if trig_sum(coeffs, x1) < trig_sum(coeffs, x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let x = 0.5 * (a + b);
    let v = trig_sum(coeffs, x);
    if v < best_v {
        (x, v)
    } else {
        (best_x, best_v)
    }
}

/// Tolerance for "nonnegative": rounding of the sum itself.
pub fn positivity_tolerance(coeffs: &[f64]) -> f64 {
    1e-12 * (2.0 * coeffs.iter().map(|c| c.abs()).sum::<f64>()).max(f64::MIN_POSITIVE)
}

pub fn ensure_nonnegative(coeffs: &[f64], context: &str) -> Result<()> {
    let (x, v) = trig_minimum(coeffs);
    if v < -positivity_tolerance(coeffs) || !v.is_finite() {
        return Err(Error::PositivityViolation {
            lambda: x,
            value: v,
            context: context.to_string(),
        });
    }
    Ok(())
}

fn horner(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &a in p.iter().rev() {
        d = d * z + v;
        v = v * z + a;
    }
    (v, d)
}

/// Roots of `sum_j q[j] z^j` from the companion matrix.
fn polynomial_roots(q: &[f64]) -> Result<Vec<Complex64>> {
    let deg = q.len() - 1;
    let lead = q[deg];
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -q[deg - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let roots: Vec<Complex64> = comp.complex_eigenvalues().iter().copied().collect();
    if roots.len() != deg || roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::RootFinding("companion eigenvalues are not finite".into()));
    }
    Ok(roots)
}

/// Newton polish for a simple root; stops as soon as a step does not help.
fn polish(q: &[f64], mut r: Complex64) -> Complex64 {
    let pc: Vec<Complex64> = q.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for _ in 0..8 {
        let (v, d) = horner(&pc, r);
        if d.norm() == 0.0 {
            break;
        }
        let next = r - v / d;
        if horner(&pc, next).0.norm() < v.norm() {
            r = next;
        } else {
            break;
        }
    }
    r
}

const UNIT_BAND: f64 = 1e-6;
/// Multiple roots split by about `eps^(1/m)`; anything closer is one root.
const CLUSTER_RADIUS: f64 = 1e-3;

/// Group numerically split multiple roots.
fn cluster_roots(roots: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for &r in roots {
        let near = |c: &Vec<Complex64>| {
            let mean = c.iter().sum::<Complex64>() / c.len() as f64;
            (mean - r).norm() < CLUSTER_RADIUS * r.norm().max(1.0)
        };
        match clusters.iter_mut().find(|c| near(c)) {
            Some(c) => c.push(r),
            None => clusters.push(vec![r]),
        }
    }
    clusters
}

/// Roots of the factor contributed by one cluster.
fn select(q: &[f64], cluster: &[Complex64]) -> Result<Vec<Complex64>> {
    let mult = cluster.len();
    let mean = cluster.iter().sum::<Complex64>() / mult as f64;
    if mult == 1 {
        let r = polish(q, mean);
        if (r.norm() - 1.0).abs() < UNIT_BAND {
            return Err(Error::RootFinding(format!("root {r} on the unit circle is simple")));
        }
        return Ok(if r.norm() > 1.0 { vec![r] } else { vec![] });
    }
    let spread = cluster.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max);
    if (mean.norm() - 1.0).abs() >= CLUSTER_RADIUS {
        // Off the circle: a split multiple root collapses to its mean, two
        // merely close roots stay apart.
        let outside = mean.norm() > 1.0;
        return Ok(match (outside, spread < 1e-5 * mean.norm()) {
            (false, _) => vec![],
            (true, true) => vec![mean; mult],
            (true, false) => cluster.to_vec(),
        });
    }
    if mult == 2 {
        // A reciprocal pair r, 1/conj(r) just off the circle: keep the outer one.
        let outer = if cluster[0].norm() >= cluster[1].norm() { cluster[0] } else { cluster[1] };
        let r = polish(q, outer);
        if r.norm() - 1.0 >= UNIT_BAND {
            return Ok(vec![r]);
        }
    }
    // Zeros on the circle have even multiplicity; the factor takes half.
    if mult % 2 == 1 {
        return Err(Error::RootFinding(format!("root {mean} on the unit circle has odd multiplicity {mult}")));
    }
    Ok(vec![mean / mean.norm(); mult / 2])
}

/// Minimum-phase factor `gamma(0..=K)` with
/// `|sum_k gamma(k) e^{-i lambda k}|^2 = S(lambda)` and `gamma(0) > 0`.
pub fn fejer_riesz_factorize(coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.is_empty() {
        return Err(Error::Config("empty coefficient table".into()));
    }
    ensure_nonnegative(coeffs, "Fejér–Riesz factorization needs a nonnegative polynomial")?;
    let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut k = coeffs.len() - 1;
    while k > 0 && coeffs[k].abs() <= 1e-15 * scale {
        k -= 1;
    }
    let c0 = coeffs[0];
    if k == 0 {
        return Ok(vec![c0.max(0.0).sqrt()]);
    }
    let q: Vec<f64> = (0..=2 * k).map(|j| coeffs[j.abs_diff(k)]).collect();
    let roots = polynomial_roots(&q)?;

    let mut chosen = Vec::with_capacity(k);
    for cluster in cluster_roots(&roots) {
        chosen.extend(select(&q, &cluster)?);
    }
    if chosen.len() != k {
        return Err(Error::RootFinding(format!(
            "selected {} roots for a degree-{k} factor",
            chosen.len()
        )));
    }

    // prod (1 - w / rho)
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for rho in &chosen {
        let inv = -1.0 / rho;
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &p) in poly.iter().enumerate() {
            next[i] += p;
            next[i + 1] += p * inv;
        }
        poly = next;
    }
    let real: Vec<f64> = poly.iter().map(|z| z.re).collect();
    let norm2: f64 = real.iter().map(|v| v * v).sum();
    let gamma0 = (c0 / norm2).sqrt();
    Ok(real.into_iter().map(|v| gamma0 * v).collect())
}

/// `c(k) = sum_j gamma(j) gamma(j + k)`, the coefficients of `|Gamma|^2`.
pub fn autocorrelation(gamma: &[f64]) -> Vec<f64> {
    (0..gamma.len())
        .map(|k| (0..gamma.len() - k).map(|j| gamma[j] * gamma[j + k]).sum())
        .collect()
}
