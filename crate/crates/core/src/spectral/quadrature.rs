//! Composite Gauss–Legendre quadrature on `[0, pi]`.
//!
//! Integrands in this crate are even in `lambda` (or conjugate-symmetric), so
//! every `(1/2pi) * integral over [-pi, pi]` is evaluated as `(1/pi)` times an
//! integral over the half period. Removable points are panel boundaries,
//! hence never nodes.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Panel layout for the composite rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Base number of panels on `[0, pi]`; raised automatically for oscillatory integrands.
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Half-width of an isolated panel around each removable point (0 disables).
    pub singularity_exclusion: f64,
    /// Relative change tolerated between a rule and its panel-doubled refinement.
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 32,
            order: 8,
            singularity_exclusion: 0.0,
            tolerance: 1e-9,
        }
    }
}

/// Refinements attempted before giving up on convergence.
pub const MAX_DOUBLINGS: usize = 4;

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 16 {
            return Err(Error::Config(format!("quadrature panels must be >= 16, got {}", self.panels)));
        }
        if self.order < 4 {
            return Err(Error::Config(format!("quadrature order must be >= 4, got {}", self.order)));
        }
        if !(self.singularity_exclusion >= 0.0 && self.singularity_exclusion < 0.5) {
            return Err(Error::Config("singularity_exclusion must lie in [0, 0.5)".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Panel count that keeps `cos(k lambda)` well resolved for `k <= max_freq`.
    pub fn panels_for(&self, max_freq: usize) -> usize {
        // About 1.5 radians of phase per panel; an 8-point rule is exact to
        // rounding there.
        let needed = (PI * max_freq as f64 / 1.5).ceil() as usize;
        self.panels.max(needed)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sorted, de-duplicated breakpoints on `[0, pi]`: both endpoints, every
/// `2 pi j / mu` for the given steps, and any extra points.
pub fn breakpoints(steps: &[usize], extra: &[f64], exclusion: f64) -> Vec<f64> {
    let mut removable = vec![0.0, PI];
    for &mu in steps {
        let mut j = 1;
        while 2.0 * PI * j as f64 / mu as f64 <= PI + 1e-12 {
            removable.push((2.0 * PI * j as f64 / mu as f64).min(PI));
            j += 1;
        }
    }
    let mut pts = removable.clone();
    if exclusion > 0.0 {
        for &p in &removable {
            pts.push(p - exclusion);
            pts.push(p + exclusion);
        }
    }
    pts.extend(extra.iter().copied());
    pts.retain(|p| (0.0..=PI).contains(p));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    pts
}

/// Nodes and weights of a composite rule over consecutive breakpoints with
/// roughly `panels` panels in total, distributed by segment length.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    panel_len: usize,
}

impl Rule {
    pub fn new(breaks: &[f64], panels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let total = breaks[breaks.len() - 1] - breaks[0];
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let count = ((panels as f64) * (b - a) / total).ceil().max(1.0) as usize;
            let h = (b - a) / count as f64;
            for p in 0..count {
                let lo = a + h * p as f64;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(lo + 0.5 * h * (x + 1.0));
                    weights.push(0.5 * h * w);
                }
            }
        }
        Self {
            nodes,
            weights,
            panel_len: order,
        }
    }

    /// Integrate a vector-valued integrand. Panels are processed in parallel;
    /// partial sums are combined in panel order so results do not depend on
    /// scheduling.
    pub fn integrate<F>(&self, dim: usize, f: F) -> Vec<f64>
    where
        F: Fn(f64, &mut [f64]) + Sync,
    {
        let partials: Vec<Vec<f64>> = self
            .nodes
            .par_chunks(self.panel_len)
            .zip(self.weights.par_chunks(self.panel_len))
            .map(|(xs, ws)| {
                let mut acc = vec![0.0; dim];
                let mut buf = vec![0.0; dim];
                for (&x, &w) in xs.iter().zip(ws) {
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    f(x, &mut buf);
                    for (a, v) in acc.iter_mut().zip(&buf) {
                        *a += w * v;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; dim];
        for p in partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }
}

/// Integrate over `[0, pi]`, doubling the panel count until two successive
/// results agree to `tol * max(max |I|, floor)`.
pub fn integrate_converged<F>(
    what: &str,
    breaks: &[f64],
    panels: usize,
    q: &QuadratureConfig,
    floor: f64,
    dim: usize,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let mut panels = panels;
    let mut prev = Rule::new(breaks, panels, q.order).integrate(dim, &f);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let next = Rule::new(breaks, panels, q.order).integrate(dim, &f);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureNonConvergence {
                what: what.to_string(),
                change: f64::INFINITY,
                tolerance: q.tolerance,
            });
        }
        change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = next.iter().map(|v| v.abs()).fold(floor, f64::max);
        if change <= q.tolerance * scale {
            return Ok(next);
        }
        prev = next;
    }
    let scale = prev.iter().map(|v| v.abs()).fold(floor, f64::max);
    Err(Error::QuadratureNonConvergence {
        what: what.to_string(),
        change: change / scale.max(f64::MIN_POSITIVE),
        tolerance: q.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for order in [4, 8, 12] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..2 * order {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "order {order} degree {deg}");
            }
        }
    }

    #[test]
    fn breakpoints_include_removable_points() {
        let b = breakpoints(&[3], &[], 0.0);
        assert_eq!(b.len(), 3);
        assert!((b[1] - 2.0 * PI / 3.0).abs() < 1e-15);
        let b = breakpoints(&[2], &[1.0], 0.1);
        // 0, 0.1, 1.0, pi - 0.1, pi
        assert_eq!(b.len(), 5);
    }

    #[test]
    fn converged_integral_of_cosine_series() {
        let q = QuadratureConfig::default();
        let br = breakpoints(&[1], &[], 0.0);
        let out = integrate_converged("test", &br, q.panels_for(10), &q, 0.0, 3, |x, o| {
            o[0] = x.cos().powi(2);
            o[1] = (3.0 * x).cos() * x.cos();
            o[2] = 1.0;
        })
        .unwrap();
        assert!((out[0] - PI / 2.0).abs() < 1e-13);
        assert!(out[1].abs() < 1e-13);
        assert!((out[2] - PI).abs() < 1e-13);
    }

    #[test]
    fn divergent_integrand_is_reported() {
        let q = QuadratureConfig::default();
        let br = breakpoints(&[1], &[], 0.0);
        let r = integrate_converged("log", &br, 32, &q, 0.0, 1, |x, o| o[0] = 1.0 / (x - 1.0).abs());
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn rejects_small_configs() {
        let q = QuadratureConfig { panels: 8, ..QuadratureConfig::default() };
        assert!(q.validate().is_err());
        let q = QuadratureConfig { order: 2, ..QuadratureConfig::default() };
        assert!(q.validate().is_err());
    }
}
