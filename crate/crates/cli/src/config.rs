//! Run configuration: a versioned JSON document.

use std::path::Path;

use increment_interp::increments::{IncrementSpec, WeightVector};
use increment_interp::interpolate::TruncationConfig;
use increment_interp::minimax::{DensityClass, FixedPointConfig};
use increment_interp::oracle::OracleConfig;
use increment_interp::spectral::{DensityModel, QuadratureConfig};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA: &str = "increment-interp/config/v1";

/// Input error with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub path: String,
    pub message: String,
}

impl InputError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Interpolate,
    Increment,
    Filter,
    Minimax,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Interpolate => "interpolate",
            Self::Increment => "increment",
            Self::Filter => "filter",
            Self::Minimax => "minimax",
            Self::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    IncrementConstant {
        level: f64,
    },
    Arma {
        sigma2: f64,
        #[serde(default)]
        ar: Vec<f64>,
        #[serde(default)]
        ma: Vec<f64>,
    },
    InverseTrig {
        coeffs: Vec<f64>,
    },
    Tabulated {
        lambda: Vec<f64>,
        rho: Vec<f64>,
    },
    /// Two-column `lambda,rho` file, relative to the working directory.
    Csv {
        path: String,
    },
}

impl DensitySpec {
    pub fn build(&self, spec: IncrementSpec, path: &str) -> Result<DensityModel, InputError> {
        let model = match self {
            Self::IncrementConstant { level } => DensityModel::increment_constant(spec, *level),
            Self::Arma { sigma2, ar, ma } => DensityModel::arma(spec, *sigma2, ar.clone(), ma.clone()),
            Self::InverseTrig { coeffs } => DensityModel::inverse_trig(spec, coeffs.clone()),
            Self::Tabulated { lambda, rho } => DensityModel::tabulated(spec, lambda, rho),
            Self::Csv { path: file } => DensityModel::from_csv(spec, Path::new(file)),
        };
        model.map_err(|e| InputError::new(path, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ClassSpec {
    D0 {
        p1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p2: Option<f64>,
    },
    DM {
        r1: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r2: Option<Vec<f64>>,
    },
}

impl ClassSpec {
    pub fn build(&self) -> Result<DensityClass, InputError> {
        let class = match self {
            Self::D0 { p1, p2 } => DensityClass::D0 { p1: *p1, p2: *p2 },
            Self::DM { r1, r2 } => DensityClass::DM {
                r1: r1.clone(),
                r2: r2.clone(),
            },
        };
        class.validate().map_err(|e| InputError::new("problem.class", e.to_string()))?;
        Ok(class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointSpec {
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        let d = FixedPointConfig::default();
        Self {
            damping: d.damping,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub n: usize,
    pub mu: usize,
    /// Horizon; required by `filter`, otherwise implied by `a` or `b`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_future: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassSpec>,
    /// Fourier head of a known noise weighted inverse (minimax with known `g`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Trunc {
    pub l: Option<usize>,
    pub panels: usize,
    pub order: usize,
    pub singularity_exclusion: f64,
    pub tolerance: f64,
    pub condition_bound: f64,
}

impl Default for Trunc {
    fn default() -> Self {
        let t = TruncationConfig::default();
        Self {
            l: t.l,
            panels: t.quadrature.panels,
            order: t.quadrature.order,
            singularity_exclusion: t.quadrature.singularity_exclusion,
            tolerance: t.quadrature.tolerance,
            condition_bound: t.condition_bound,
        }
    }
}

impl Trunc {
    pub fn build(&self) -> Result<TruncationConfig, InputError> {
        let quadrature = QuadratureConfig {
            panels: self.panels,
            order: self.order,
            singularity_exclusion: self.singularity_exclusion,
            tolerance: self.tolerance,
        };
        quadrature.validate().map_err(|e| InputError::new("trunc", e.to_string()))?;
        if self.l == Some(0) {
            return Err(InputError::new("trunc.l", "must be positive"));
        }
        if !(self.condition_bound > 1.0) {
            return Err(InputError::new("trunc.condition_bound", "must exceed 1"));
        }
        Ok(TruncationConfig {
            l: self.l,
            quadrature,
            condition_bound: self.condition_bound,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Oracle {
    pub window: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            window: 200,
            samples: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub format: Format,
    /// Points of the `(0, pi]` grid in the density and characteristic tables.
    pub grid: usize,
    /// Time-weight tail length; `None` uses `8 L`.
    pub tail: Option<usize>,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            format: Format::Json,
            grid: 256,
            tail: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub command: Command,
    pub problem: Problem,
    #[serde(default)]
    pub trunc: Trunc,
    #[serde(default)]
    pub oracle: Oracle,
    #[serde(default)]
    pub output: Output,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            InputError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(InputError::new(
                "schema",
                format!("expected {CONFIG_SCHEMA:?}, got {:?}", cfg.schema),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn spec(&self) -> Result<IncrementSpec, InputError> {
        IncrementSpec::new(self.problem.n, self.problem.mu).map_err(|e| InputError::new("problem", e.to_string()))
    }

    pub fn weights(&self) -> Result<WeightVector, InputError> {
        let a = self.problem.a.as_ref().ok_or_else(|| InputError::new("problem.a", "required"))?;
        let w = WeightVector::new(a.clone()).map_err(|e| InputError::new("problem.a", e.to_string()))?;
        if let Some(n) = self.problem.big_n {
            if n != w.horizon() {
                return Err(InputError::new(
                    "problem.N",
                    format!("N = {n} but a has {} entries", a.len()),
                ));
            }
        }
        Ok(w)
    }

    pub fn density(&self, which: &str) -> Result<DensityModel, InputError> {
        let spec = self.spec()?;
        let d = match which {
            "f" => self.problem.f.as_ref(),
            _ => self.problem.g.as_ref(),
        };
        let path = format!("problem.{which}");
        d.ok_or_else(|| InputError::new(&path, "required"))?.build(spec, &path)
    }

    pub fn oracle_config(&self) -> Result<OracleConfig, InputError> {
        let cfg = OracleConfig {
            window: self.oracle.window,
            seed: self.oracle.seed,
            samples: self.oracle.samples,
            jitter: None,
            quadrature: self.trunc.build()?.quadrature,
        };
        cfg.validate().map_err(|e| InputError::new("oracle.window", e.to_string()))?;
        if cfg.samples != 0 && cfg.samples < 1000 {
            return Err(InputError::new("oracle.samples", "must be 0 or at least 1000"));
        }
        Ok(cfg)
    }

    /// Check everything the chosen command needs before any solver runs.
    pub fn validate(&self) -> Result<(), InputError> {
        self.spec()?;
        self.trunc.build()?;
        if self.output.grid < 2 {
            return Err(InputError::new("output.grid", "must be at least 2"));
        }
        if self.output.tail == Some(0) {
            return Err(InputError::new("output.tail", "must be positive"));
        }
        let p = &self.problem;
        match self.command {
            Command::Interpolate => {
                self.weights()?;
                self.density("f")?;
                self.density("g")?;
            }
            Command::Increment => {
                let b = p.b.as_ref().ok_or_else(|| InputError::new("problem.b", "required"))?;
                if b.is_empty() || b.iter().any(|v| !v.is_finite()) {
                    return Err(InputError::new("problem.b", "must be non-empty and finite"));
                }
                self.density("f")?;
                self.density("g")?;
            }
            Command::Filter => {
                p.big_n.ok_or_else(|| InputError::new("problem.N", "required"))?;
                let a = p.a_future.as_ref().ok_or_else(|| InputError::new("problem.a_future", "required"))?;
                let span = self.spec()?.span();
                if a.len() != span {
                    return Err(InputError::new(
                        "problem.a_future",
                        format!("needs mu*n = {span} entries, got {}", a.len()),
                    ));
                }
                self.density("f")?;
                self.density("g")?;
            }
            Command::Minimax => {
                self.weights()?;
                let class = p.class.as_ref().ok_or_else(|| InputError::new("problem.class", "required"))?;
                class.build()?;
                let known = p.g_table.is_some();
                match class {
                    ClassSpec::DM { .. } if !known => {
                        return Err(InputError::new("problem.g_table", "required for a DM class"));
                    }
                    ClassSpec::D0 { p2: Some(_), .. } if known => {
                        return Err(InputError::new("problem.g_table", "not allowed when the class fixes P2"));
                    }
                    _ => {}
                }
                if let Some(fp) = p.fixed_point {
                    if !(fp.damping > 0.0 && fp.damping <= 1.0) {
                        return Err(InputError::new("problem.fixed_point.damping", "must lie in (0, 1]"));
                    }
                    if fp.max_iter == 0 {
                        return Err(InputError::new("problem.fixed_point.max_iter", "must be positive"));
                    }
                }
            }
            Command::OracleCheck => {
                match (p.a.is_some(), p.a_future.is_some()) {
                    (true, false) => {
                        self.weights()?;
                    }
                    (false, true) => {
                        p.big_n.ok_or_else(|| InputError::new("problem.N", "required with a_future"))?;
                    }
                    _ => {
                        return Err(InputError::new("problem", "oracle-check needs exactly one of a, a_future"));
                    }
                }
                self.density("f")?;
                self.density("g")?;
                self.oracle_config()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAGSHIP: &str = r#"{
        "schema": "increment-interp/config/v1",
        "command": "interpolate",
        "problem": {
            "n": 1, "mu": 1, "a": [1, 1, 1],
            "f": {"kind": "increment_constant", "level": 1.0},
            "g": {"kind": "increment_constant", "level": 0.25}
        }
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_json(FLAGSHIP).unwrap();
        assert_eq!(cfg.command, Command::Interpolate);
        assert_eq!(cfg.trunc, Trunc::default());
        assert_eq!(cfg.output.format, Format::Json);
        cfg.validate().unwrap();
    }

    #[test]
    fn missing_field_is_named() {
        let err = RunConfig::from_json(&FLAGSHIP.replace(r#""mu": 1, "#, "")).unwrap_err();
        assert!(err.to_string().contains("mu"), "{err}");
        assert_eq!(err.path, "problem");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let err = RunConfig::from_json(&FLAGSHIP.replace(r#""n": 1,"#, r#""n": 1, "nu": 2,"#)).unwrap_err();
        assert!(err.to_string().contains("nu"), "{err}");
    }

    #[test]
    fn wrong_schema() {
        let err = RunConfig::from_json(&FLAGSHIP.replace("config/v1", "config/v0")).unwrap_err();
        assert_eq!(err.path, "schema");
    }

    #[test]
    fn command_requirements() {
        let mut cfg = RunConfig::from_json(FLAGSHIP).unwrap();
        cfg.command = Command::Filter;
        assert_eq!(cfg.validate().unwrap_err().path, "problem.N");
        cfg.command = Command::Minimax;
        assert_eq!(cfg.validate().unwrap_err().path, "problem.class");
        cfg.problem.class = Some(ClassSpec::DM {
            r1: vec![1.0],
            r2: None,
        });
        assert_eq!(cfg.validate().unwrap_err().path, "problem.g_table");
        cfg.problem.big_n = Some(5);
        assert_eq!(cfg.validate().unwrap_err().path, "problem.N");
    }

    #[test]
    fn serialization_round_trips() {
        let cfg = RunConfig::from_json(FLAGSHIP).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}
