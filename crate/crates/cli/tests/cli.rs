use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use increment_interp::interpolate::{solve_functional, InterpolationProblem, TruncationConfig};
use increment_interp::increments::{IncrementSpec, WeightVector};
use increment_interp::spectral::DensityModel;
use increment_interp_cli::config::RunConfig;
use increment_interp_cli::report::{Report, Status};
use increment_interp_cli::run;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn exe(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_increment-interp"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn flagship_matches_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let out = exe(&data("flagship.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r.status, Status::Ok);

    let s = IncrementSpec::new(1, 1).unwrap();
    let sol = solve_functional(&InterpolationProblem {
        spec: s,
        a: WeightVector::new(vec![1.0, 1.0, 1.0]).unwrap(),
        f: DensityModel::increment_constant(s, 1.0).unwrap(),
        g: DensityModel::increment_constant(s, 0.25).unwrap(),
        trunc: TruncationConfig::with_l(200),
    })
    .unwrap();
    let got = r.solution.unwrap();
    assert_eq!(got.mse.to_bits(), sol.mse.to_bits());
    assert_eq!(got.c, sol.c);
    assert_eq!(got.e, sol.e);
    assert_eq!(got.b, sol.b);
}

#[test]
fn golden_reports() {
    // Regenerate with UPDATE_GOLDEN=1 after an intentional change.
    for name in ["flagship", "minimax_white"] {
        let dir = tempfile::tempdir().unwrap();
        let out = exe(&data(&format!("{name}.json")), dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0));
        let got = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let golden = data(&format!("{name}.report.json"));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&golden, &got).unwrap();
        }
        assert_eq!(got, std::fs::read_to_string(&golden).unwrap(), "{name} drifted from its golden report");
    }
}

#[test]
fn echoed_config_reproduces_report() {
    for name in ["coloured", "filter", "minimax_known_g", "increment"] {
        let first = tempfile::tempdir().unwrap();
        assert_eq!(exe(&data(&format!("{name}.json")), first.path(), &[]).status.code(), Some(0));
        let r = report(first.path());
        let echoed = first.path().join("echo.json");
        std::fs::write(&echoed, serde_json::to_string(&r.config).unwrap()).unwrap();
        let second = tempfile::tempdir().unwrap();
        assert_eq!(exe(&echoed, second.path(), &[]).status.code(), Some(0));
        assert_eq!(
            std::fs::read_to_string(first.path().join("report.json")).unwrap(),
            std::fs::read_to_string(second.path().join("report.json")).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn library_run_equals_binary() {
    let cfg = RunConfig::load(&data("coloured.json")).unwrap();
    let direct = run(&cfg).unwrap().report;
    let dir = tempfile::tempdir().unwrap();
    exe(&data("coloured.json"), dir.path(), &[]);
    assert_eq!(report(dir.path()), direct);
}

#[test]
fn nonpositive_functional_is_a_diagnostic_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = exe(&data("minimax_nonpositive.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(dir.path());
    assert_eq!(r.status, Status::DiagnosticFailure);
    assert_eq!(r.error.unwrap().kind, "positivity-violation");
}

#[test]
fn missing_field_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = exe(&data("missing_mu.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mu"), "{err}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn csv_tables_follow_their_contracts() {
    let dir = tempfile::tempdir().unwrap();
    let out = exe(&data("coloured.json"), dir.path(), &["--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("report.json").exists());

    let mut rd = csv::Reader::from_path(dir.path().join("weights.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["k", "weight", "block"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    let horizon = 2 + 1;
    for row in &rows {
        let k: i64 = row[0].parse().unwrap();
        let _: f64 = row[1].parse().unwrap();
        match &row[2] {
            "past" => assert!(k < 0),
            "future" => assert!(k > horizon),
            other => panic!("unexpected block {other}"),
        }
    }
    assert!(rows.iter().any(|r| &r[2] == "past" && r[1].parse::<f64>().unwrap().abs() > 1e-6));

    let mut rd = csv::Reader::from_path(dir.path().join("density.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["lambda", "f", "g"]);
    assert_eq!(rd.records().count(), 256);
    assert!(dir.path().join("fourier.csv").exists());
    assert!(dir.path().join("characteristic.csv").exists());
}

#[test]
fn seed_flag_is_echoed_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(exe(&data("oracle.json"), a.path(), &["--seed", "11"]).status.code(), Some(0));
    assert_eq!(exe(&data("oracle.json"), b.path(), &["--seed", "11"]).status.code(), Some(0));
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert_eq!(ra.config.oracle.seed, 11);
    assert_eq!(ra, rb);
    let mc = ra.oracle.unwrap().monte_carlo.unwrap();
    assert!(mc.within_3se, "z = {}", mc.z);
}

#[test]
fn every_command_runs() {
    for (name, command) in [
        ("increment", "increment"),
        ("filter", "filter"),
        ("minimax_fixed_point", "minimax"),
        ("minimax_known_g", "minimax"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = exe(&data(&format!("{name}.json")), dir.path(), &["--format", "both", "--verbose"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        let r = report(dir.path());
        assert_eq!(r.command, command);
        assert!(r.solution.unwrap().residuals.valid);
        assert!(String::from_utf8_lossy(&out.stderr).contains("report.json"));
    }
}
