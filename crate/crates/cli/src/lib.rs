//! Batch runner behind the `increment-interp` binary.

pub mod config;
pub mod report;

use increment_interp::filtering::{solve_filtering, FilteringProblem};
use increment_interp::interpolate::{
    default_tail, extract_time_weights, solve_functional, solve_increment_functional, EstimateSolution,
    InterpolationProblem,
};
use increment_interp::minimax::{
    assemble_density, minimax_characteristic, solve_d0_fixed_point, solve_known_g, white_noise_least_favorable,
    FixedPointConfig,
};
use increment_interp::oracle::{compare_spectral_vs_oracle, monte_carlo_check, ComparisonProblem};
use increment_interp::spectral::FourierTable;
use increment_interp::Error;

use config::{ClassSpec, Command, InputError, RunConfig};
use report::{MinimaxReport, OracleReport, Report, SolutionReport, Tables};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_DIAGNOSTIC: u8 = 2;

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub tables: Tables,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self.report.status {
            report::Status::Ok => EXIT_OK,
            report::Status::DiagnosticFailure => EXIT_DIAGNOSTIC,
        }
    }
}

/// Stable kebab-case name for each library error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "configuration",
        Error::NonIntegrableDensity { .. } => "non-integrable-density",
        Error::QuadratureNonConvergence { .. } => "quadrature-non-convergence",
        Error::InsufficientFourierRange { .. } => "insufficient-fourier-range",
        Error::SingularOperator { .. } => "singular-operator",
        Error::ResidualFailure { .. } => "residual-failure",
        Error::IndexOutOfRange { .. } => "index-out-of-range",
        Error::SupportLeakage { .. } => "support-leakage",
        Error::PositivityViolation { .. } => "positivity-violation",
        Error::RootFinding(_) => "root-finding",
        Error::NoConvergence { .. } => "no-convergence",
        Error::Factorization(_) => "factorization",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
    }
}

/// Input problems exit 1; everything else is a diagnostic failure.
fn absorb(report: &mut Report, e: Error) -> Result<(), InputError> {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Csv(_) => Err(InputError::new("problem", e.to_string())),
        e => {
            report.fail(error_kind(&e), e.to_string());
            Ok(())
        }
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    report: Report,
    tables: Tables,
}

impl Run<'_> {
    fn attempt<T>(&mut self, r: increment_interp::Result<T>) -> Result<Option<T>, InputError> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) => absorb(&mut self.report, e).map(|_| None),
        }
    }

    fn finish(&mut self, sol: EstimateSolution) -> Result<(), InputError> {
        let tail = self.cfg.output.tail.unwrap_or_else(|| default_tail(&sol));
        let weights = self.attempt(extract_time_weights(&sol, tail))?;
        let out = SolutionReport::new(&sol, weights.as_ref(), tail);
        if !out.residuals.valid {
            self.report.fail("residual-failure", "coupled-system residual above tolerance");
        }
        self.report.solution = Some(out);
        self.tables.weights = weights;
        self.tables.fourier = Some((sol.f_table.coeffs.clone(), sol.g_table.coeffs.clone()));
        if self.tables.densities.is_none() {
            self.tables.densities = Some((sol.f.clone(), sol.g.clone()));
        }
        self.tables.characteristic = Some(sol);
        Ok(())
    }

    fn interpolation(&self) -> Result<InterpolationProblem, InputError> {
        Ok(InterpolationProblem {
            spec: self.cfg.spec()?,
            a: self.cfg.weights()?,
            f: self.cfg.density("f")?,
            g: self.cfg.density("g")?,
            trunc: self.cfg.trunc.build()?,
        })
    }

    fn filtering(&self) -> Result<FilteringProblem, InputError> {
        let p = &self.cfg.problem;
        Ok(FilteringProblem {
            spec: self.cfg.spec()?,
            a_future: p.a_future.clone().unwrap_or_default(),
            big_n: p.big_n.unwrap_or_default(),
            f: self.cfg.density("f")?,
            g: self.cfg.density("g")?,
            trunc: self.cfg.trunc.build()?,
        })
    }

    fn minimax(&mut self) -> Result<(), InputError> {
        let cfg = self.cfg;
        let p = &cfg.problem;
        let spec = cfg.spec()?;
        let a = cfg.weights()?;
        let trunc = cfg.trunc.build()?;
        let class_spec = p.class.as_ref().ok_or_else(|| InputError::new("problem.class", "required"))?;
        let class = class_spec.build()?;
        let (method, lf) = match (class_spec, &p.g_table) {
            (_, Some(g)) => ("known-g", solve_known_g(spec, &a, &FourierTable::new(g.clone()), &class, &trunc)),
            (ClassSpec::D0 { p1, p2: None }, None) => {
                ("white-noise-closed-form", white_noise_least_favorable(spec, &a, *p1, &trunc))
            }
            (ClassSpec::D0 { p2: Some(_), .. }, None) => {
                let fp = p.fixed_point.unwrap_or_default();
                let fp = FixedPointConfig {
                    damping: fp.damping,
                    max_iter: fp.max_iter,
                };
                ("fixed-point", solve_d0_fixed_point(spec, &a, &class, &trunc, fp, None))
            }
            (ClassSpec::DM { .. }, None) => return Err(InputError::new("problem.g_table", "required for a DM class")),
        };
        let Some(lf) = self.attempt(lf)? else {
            return Ok(());
        };
        self.report.minimax = Some(MinimaxReport::new(&lf, method));
        if !lf.converged {
            self.report.fail(
                "not-converged",
                format!("saddle-point residual {:.3e} after {} iterations", lf.report.worst(), lf.iterations),
            );
            return Ok(());
        }
        let densities = self.attempt(assemble_density(&lf.f0, spec).and_then(|f| Ok((f, assemble_density(&lf.g0, spec)?))))?;
        self.tables.densities = densities;
        if let Some(h0) = self.attempt(minimax_characteristic(&lf, &a, &trunc))? {
            self.finish(h0)?;
        }
        Ok(())
    }

    fn oracle_check(&mut self) -> Result<(), InputError> {
        let cfg = self.cfg;
        let ocfg = cfg.oracle_config()?;
        let problem = if cfg.problem.a.is_some() {
            ComparisonProblem::Interpolation(self.interpolation()?)
        } else {
            ComparisonProblem::Filtering(self.filtering()?)
        };
        let Some(cmp) = self.attempt(compare_spectral_vs_oracle(&problem, &ocfg))? else {
            return Ok(());
        };
        let mc = if ocfg.samples > 0 {
            let sol = &cmp.solution;
            self.attempt(monte_carlo_check(sol.spec, sol.big_n, &sol.b, &sol.f, &sol.g, &ocfg))?
        } else {
            None
        };
        let out = OracleReport::new(&cmp, ocfg.window, mc.as_ref());
        if !out.pass {
            self.report.fail(
                "oracle-mismatch",
                format!("relative mse gap {:.3e} above tolerance", out.relative_gap),
            );
        }
        if out.monte_carlo.as_ref().is_some_and(|m| !m.within_3se) {
            self.report.fail("monte-carlo-mismatch", "empirical mse outside 3 standard errors");
        }
        self.report.oracle = Some(out);
        self.finish(cmp.solution)
    }
}

/// Validate `cfg`, dispatch to the solver and collect the report.
pub fn run(cfg: &RunConfig) -> Result<Outcome, InputError> {
    cfg.validate()?;
    let mut r = Run {
        cfg,
        report: Report::new(cfg),
        tables: Tables::default(),
    };
    match cfg.command {
        Command::Interpolate => {
            let p = r.interpolation()?;
            if let Some(sol) = r.attempt(solve_functional(&p))? {
                r.finish(sol)?;
            }
        }
        Command::Increment => {
            let spec = cfg.spec()?;
            let (f, g) = (cfg.density("f")?, cfg.density("g")?);
            let b = cfg.problem.b.clone().unwrap_or_default();
            let trunc = cfg.trunc.build()?;
            if let Some(sol) = r.attempt(solve_increment_functional(spec, &b, &f, &g, &trunc))? {
                r.finish(sol)?;
            }
        }
        Command::Filter => {
            let p = r.filtering()?;
            if let Some(sol) = r.attempt(solve_filtering(&p))? {
                r.finish(sol)?;
            }
        }
        Command::Minimax => r.minimax()?,
        Command::OracleCheck => r.oracle_check()?,
    }
    Ok(Outcome {
        report: r.report,
        tables: r.tables,
    })
}
