use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use increment_interp_cli::config::{Format, RunConfig};
use increment_interp_cli::report::{summary, write_csv, write_json};
use increment_interp_cli::{run, EXIT_INPUT};

/// Interpolation, filtering and minimax estimation for sequences with
/// stationary increments.
#[derive(Parser, Debug)]
#[command(name = "increment-interp", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Overrides `oracle.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    if let Some(s) = args.seed {
        cfg.oracle.seed = s;
    }
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(EXIT_INPUT);
    }
    let mut written = Vec::new();
    if cfg.output.format.json() {
        match write_json(&args.out, &outcome.report) {
            Ok(p) => written.push(p),
            Err(e) => {
                eprintln!("error: writing report: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        }
    }
    if cfg.output.format.csv() {
        match write_csv(&args.out, &outcome.tables, cfg.output.grid) {
            Ok(p) => written.extend(p),
            Err(e) => {
                eprintln!("error: writing tables: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        }
    }
    let _ = summary(&outcome.report, std::io::stdout());
    if args.verbose {
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
    }
    ExitCode::from(outcome.exit_code())
}
