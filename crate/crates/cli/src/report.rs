//! Report document and CSV tables.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use increment_interp::interpolate::{plain_characteristic, Block, EstimateSolution, TimeWeights};
use increment_interp::minimax::{LeastFavorableSolution, SaddleReport};
use increment_interp::oracle::{ComparisonReport, OracleResult};
use increment_interp::spectral::DensityModel;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const REPORT_SCHEMA: &str = "increment-interp/report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    DiagnosticFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub first: f64,
    pub second: f64,
    pub display_first: f64,
    pub b_norm: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub tail: usize,
    pub leakage: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub n: usize,
    pub mu: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub horizon: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `e[j] = e(L0 - j)`.
    pub e: Vec<f64>,
    pub v: Vec<f64>,
    pub mse: f64,
    pub mse_quadratic: f64,
    pub residuals: Residuals,
    pub cond_ge: f64,
    pub cond_fmu: f64,
    pub f_table: Vec<f64>,
    pub g_table: Vec<f64>,
    pub minimax: bool,
    pub weights: Option<Weights>,
}

impl SolutionReport {
    pub fn new(sol: &EstimateSolution, weights: Option<&TimeWeights>, tail: usize) -> Self {
        let r = &sol.residuals;
        Self {
            n: sol.spec.n(),
            mu: sol.spec.mu(),
            big_n: sol.big_n,
            horizon: sol.horizon,
            l: sol.l,
            b: sol.b.clone(),
            c: sol.c.clone(),
            e: sol.e.clone(),
            v: sol.v.clone(),
            mse: sol.mse,
            mse_quadratic: sol.mse_quadratic,
            residuals: Residuals {
                first: r.first,
                second: r.second,
                display_first: r.display_first,
                b_norm: r.b_norm,
                valid: r.is_valid(increment_interp::operators::RESIDUAL_TOLERANCE),
            },
            cond_ge: sol.cond_ge,
            cond_fmu: sol.cond_fmu,
            f_table: sol.f_table.coeffs.clone(),
            g_table: sol.g_table.coeffs.clone(),
            minimax: sol.minimax,
            weights: weights.map(|w| Weights {
                tail,
                leakage: w.leakage,
                tolerance: w.tolerance,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleDiagnostics {
    pub worst: f64,
    pub composed_f: f64,
    pub composed_g: f64,
    pub display_first: f64,
    pub display_second: Option<f64>,
    pub known_g: f64,
    pub modulus_f: Option<f64>,
    pub modulus_g: Option<f64>,
    pub moment_f: Vec<f64>,
    pub moment_g: Option<Vec<f64>>,
}

impl From<&SaddleReport> for SaddleDiagnostics {
    fn from(r: &SaddleReport) -> Self {
        Self {
            worst: r.worst(),
            composed_f: r.composed_f,
            composed_g: r.composed_g,
            display_first: r.display_first,
            display_second: r.display_second,
            known_g: r.known_g,
            modulus_f: r.modulus_f,
            modulus_g: r.modulus_g,
            moment_f: r.moment_f.clone(),
            moment_g: r.moment_g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub method: String,
    pub f0: Vec<f64>,
    pub g0: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub gamma: Option<Vec<f64>>,
    pub zeta: Option<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub saddle: SaddleDiagnostics,
}

impl MinimaxReport {
    pub fn new(lf: &LeastFavorableSolution, method: &str) -> Self {
        Self {
            method: method.to_string(),
            f0: lf.f0.coeffs.clone(),
            g0: lf.g0.coeffs.clone(),
            p1: lf.p1.clone(),
            p2: lf.p2.clone(),
            gamma: lf.factorization.as_ref().map(|f| f.gamma.clone()),
            zeta: lf.factorization.as_ref().and_then(|f| f.zeta.clone()),
            converged: lf.converged,
            iterations: lf.iterations,
            saddle: (&lf.report).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub mse: f64,
    pub std_error: f64,
    pub samples: usize,
    pub z: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub window: usize,
    pub mse_spectral: f64,
    pub mse_oracle: f64,
    pub relative_gap: f64,
    pub max_weight_gap: f64,
    pub jitter: f64,
    pub pass: bool,
    pub monte_carlo: Option<MonteCarloReport>,
}

impl OracleReport {
    pub fn new(r: &ComparisonReport, window: usize, mc: Option<&OracleResult>) -> Self {
        Self {
            window,
            mse_spectral: r.mse_spectral,
            mse_oracle: r.mse_oracle,
            relative_gap: r.relative_gap,
            max_weight_gap: r.max_weight_gap,
            jitter: r.oracle.jitter,
            pass: r.pass,
            monte_carlo: mc.and_then(|m| {
                m.empirical.map(|e| {
                    let z = if e.std_error > 0.0 { (e.mse - m.mse).abs() / e.std_error } else { 0.0 };
                    MonteCarloReport {
                        mse: e.mse,
                        std_error: e.std_error,
                        samples: e.samples,
                        z,
                        within_3se: z <= 3.0,
                    }
                })
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub status: Status,
    pub error: Option<ErrorReport>,
    pub config: RunConfig,
    pub solution: Option<SolutionReport>,
    pub minimax: Option<MinimaxReport>,
    pub oracle: Option<OracleReport>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            command: config.command.name().to_string(),
            status: Status::Ok,
            error: None,
            config: config.clone(),
            solution: None,
            minimax: None,
            oracle: None,
        }
    }

    pub fn fail(&mut self, kind: &str, message: impl Into<String>) {
        self.status = Status::DiagnosticFailure;
        // Keep the first failure; later ones are usually consequences.
        if self.error.is_none() {
            self.error = Some(ErrorReport {
                kind: kind.to_string(),
                message: message.into(),
            });
        }
    }
}

/// Tables that go to CSV when requested.
#[derive(Debug, Default)]
pub struct Tables {
    pub weights: Option<TimeWeights>,
    pub fourier: Option<(Vec<f64>, Vec<f64>)>,
    pub densities: Option<(DensityModel, DensityModel)>,
    pub characteristic: Option<EstimateSolution>,
}

fn grid(points: usize) -> impl Iterator<Item = f64> {
    (1..=points).map(move |i| PI * i as f64 / points as f64)
}

pub fn write_json(dir: &Path, report: &Report) -> std::io::Result<PathBuf> {
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn write_csv(dir: &Path, tables: &Tables, points: usize) -> Result<Vec<PathBuf>, csv::Error> {
    let mut written = Vec::new();
    if let Some(w) = &tables.weights {
        let path = dir.join("weights.csv");
        let mut out = csv::Writer::from_path(&path)?;
        out.write_record(["k", "weight", "block"])?;
        let tail = w.past.len() as i64;
        for (i, v) in w.past.iter().enumerate() {
            out.write_record([(i as i64 - tail).to_string(), v.to_string(), "past".into()])?;
        }
        for (i, v) in w.future.iter().enumerate() {
            out.write_record([(w.horizon + 1 + i).to_string(), v.to_string(), "future".into()])?;
        }
        out.flush()?;
        written.push(path);
    }
    if let Some((f, g)) = &tables.fourier {
        let path = dir.join("fourier.csv");
        let mut out = csv::Writer::from_path(&path)?;
        out.write_record(["k", "f", "g"])?;
        for k in 0..f.len().max(g.len()) {
            let cell = |t: &[f64]| t.get(k).map_or(String::new(), |v| v.to_string());
            out.write_record([k.to_string(), cell(f), cell(g)])?;
        }
        out.flush()?;
        written.push(path);
    }
    if let Some((f, g)) = &tables.densities {
        let path = dir.join("density.csv");
        let mut out = csv::Writer::from_path(&path)?;
        out.write_record(["lambda", "f", "g"])?;
        for x in grid(points) {
            out.write_record([x.to_string(), f.rho(x).to_string(), g.rho(x).to_string()])?;
        }
        out.flush()?;
        written.push(path);
    }
    if let Some(sol) = &tables.characteristic {
        let path = dir.join("characteristic.csv");
        let mut out = csv::Writer::from_path(&path)?;
        out.write_record(["lambda", "h1_re", "h1_im", "h2_re", "h2_im"])?;
        for x in grid(points) {
            let h1 = plain_characteristic(sol, Block::Past, x);
            let h2 = plain_characteristic(sol, Block::Future, x);
            out.write_record([x, h1.re, h1.im, h2.re, h2.im].map(|v| v.to_string()))?;
        }
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// One-paragraph human summary.
pub fn summary(report: &Report, mut out: impl Write) -> std::io::Result<()> {
    let status = match report.status {
        Status::Ok => "ok",
        Status::DiagnosticFailure => "FAILED",
    };
    writeln!(out, "{}: {status}", report.command)?;
    if let Some(s) = &report.solution {
        writeln!(
            out,
            "  n={} mu={} N={} L={}  mse={:.12e}  residuals {:.2e}/{:.2e} (|b| {:.3e})",
            s.n, s.mu, s.big_n, s.l, s.mse, s.residuals.first, s.residuals.second, s.residuals.b_norm
        )?;
    }
    if let Some(m) = &report.minimax {
        writeln!(
            out,
            "  least favorable ({}): f0 head {:?}, converged {} after {} iterations, worst residual {:.2e}",
            m.method,
            &m.f0[..m.f0.len().min(4)],
            m.converged,
            m.iterations,
            m.saddle.worst
        )?;
    }
    if let Some(o) = &report.oracle {
        writeln!(
            out,
            "  oracle T={}: spectral {:.10} vs projection {:.10}, gap {:.2e} ({})",
            o.window,
            o.mse_spectral,
            o.mse_oracle,
            o.relative_gap,
            if o.pass { "pass" } else { "fail" }
        )?;
        if let Some(mc) = &o.monte_carlo {
            writeln!(out, "  monte carlo: {:.6} ± {:.6} over {} samples, z = {:.2}", mc.mse, mc.std_error, mc.samples, mc.z)?;
        }
    }
    if let Some(e) = &report.error {
        writeln!(out, "  {}: {}", e.kind, e.message)?;
    }
    Ok(())
}
