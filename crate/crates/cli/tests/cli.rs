use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fmin_core::ProfileState;
use fmin_shoot::formats::{parse_profile_csv, profile_csv};
use proptest::prelude::*;
use serde_json::Value;

fn fmin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmin-shoot"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FMIN_SHOOT_OUT")
        .output()
        .unwrap()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: stdout {:?} stderr {:?}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn log_lines(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("results.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn weight_validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = fmin(&["validate-weight", "--weight", "constant 1"], dir.path());
    assert_eq!(code(&ok), 0);
    assert_eq!(report(&ok)["summary"]["admissible"], true);

    let sat = fmin(
        &[
            "validate-weight",
            "--weight",
            "saturating 1 2 1",
            "--smax",
            "200",
        ],
        dir.path(),
    );
    assert_eq!(code(&sat), 0);

    let bad = fmin(
        &["validate-weight", "--weight", "expr \"exp(-s)\" m=0.1 M=1"],
        dir.path(),
    );
    assert_eq!(code(&bad), 1);
    let text = report(&bad)["summary"]["violations"].to_string();
    assert!(text.contains("lower"), "{text}");

    let garbage = fmin(&["validate-weight", "--weight", "quadratic 2"], dir.path());
    assert_eq!(code(&garbage), 2);
}

#[test]
fn single_shots() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = fmin(&["shoot", "--R", "2"], dir.path());
    assert_eq!(code(&sphere), 0);
    let r = report(&sphere);
    assert_eq!(r["summary"]["classification"], "AxisHit");
    let t = r["summary"]["event_state"]["t"].as_f64().unwrap();
    assert!((t - std::f64::consts::PI).abs() < 1e-6, "{t}");
    assert!(dir.path().join("trajectory.csv").exists());

    let wide = fmin(&["shoot", "--R", "10"], dir.path());
    assert_eq!(
        report(&wide)["summary"]["classification"],
        "CrossedAxisEarly"
    );

    assert_eq!(code(&fmin(&["shoot", "--R", "-1"], dir.path())), 2);
    assert_eq!(log_lines(dir.path()).len(), 2);
}

#[test]
fn torus_files_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = fmin(&["find-torus", "--n", "2", "--samples", "512"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let s = &r["summary"];
    assert!(s["closure_error"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["embedded"], true);
    assert_eq!(s["mesh"]["euler_characteristic"], 0);
    for f in ["profile.csv", "torus.obj", "profile.svg", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(parse_profile_csv(&csv).unwrap().len(), 2 * 512 - 2);
    let on_disk: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, r);
    assert!(r.get("timing").is_none());
    assert!(log_lines(dir.path())[0]["timing"]["elapsed_ms"].is_number());

    let three = tempfile::tempdir().unwrap();
    let o = fmin(
        &["find-torus", "--n", "3", "--samples", "256"],
        three.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(!three.path().join("torus.obj").exists());
    assert!(report(&o)["summary"]["r_star"].as_f64().unwrap() > 6f64.sqrt());

    let sat = tempfile::tempdir().unwrap();
    let o = fmin(
        &[
            "find-torus",
            "--weight",
            "saturating 1 2 1",
            "--samples",
            "256",
        ],
        sat.path(),
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = report(&fmin(
        &[
            "find-torus",
            "--weight",
            "saturating 1 2 1",
            "--samples",
            "300",
            "--segments",
            "12",
        ],
        dir.path(),
    ));
    let config = dir.path().join("config.json");
    fs::write(&config, first["config"].to_string()).unwrap();
    let again = report(&fmin(
        &["find-torus", "--config", config.to_str().unwrap()],
        dir.path(),
    ));
    assert_eq!(first, again);
}

#[test]
fn sweeps_are_reproducible_and_parallel_safe() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--R-range", "10:80:geometric:4"];
    let o = fmin(&args, dir.path());
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let serial = fs::read(dir.path().join("sweep.csv")).unwrap();

    let mut parallel = vec!["--jobs", "4"];
    parallel.extend(args);
    assert_eq!(code(&fmin(&parallel, dir.path())), 0);
    assert_eq!(fs::read(dir.path().join("sweep.csv")).unwrap(), serial);

    let mut lines = log_lines(dir.path());
    for l in &mut lines {
        l.as_object_mut().unwrap().remove("timing");
    }
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1]);

    assert_eq!(
        code(&fmin(&["sweep", "--R-range", "0:0:linear:0"], dir.path())),
        2
    );
}

#[test]
fn oracle_suites() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        ["oracle", "--suite", "sphere", "--n", "2"],
        ["oracle", "--suite", "cylinder", "--n", "3"],
        ["oracle", "--suite", "lemmas", "--n", "2"],
    ] {
        let o = fmin(&args, dir.path());
        assert_eq!(
            code(&o),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert_eq!(report(&o)["summary"]["passed"], true);
        assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
    }
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["find-torus", "--samples", "400", "--segments", "16"];
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(code(&fmin(&args, dir.path())), 0);
    let first: Vec<_> = ["profile.csv", "torus.obj", "profile.svg", "report.json"]
        .map(read)
        .into();
    let mut jobs = vec!["--jobs", "3"];
    jobs.extend(args);
    assert_eq!(code(&fmin(&jobs, dir.path())), 0);
    let second: Vec<_> = ["profile.csv", "torus.obj", "profile.svg", "report.json"]
        .map(read)
        .into();
    assert_eq!(first, second);
}

#[test]
fn environment_overrides_the_output_flag() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fmin-shoot"))
        .args(["shoot", "--R", "3", "--out"])
        .arg(flag.path())
        .env("FMIN_SHOOT_OUT", env.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env.path().join("trajectory.csv").exists());
    assert!(!flag.path().join("trajectory.csv").exists());
}

#[test]
fn bad_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"n": 2, "tolerance": 1}"#).unwrap();
    let o = fmin(
        &["shoot", "--R", "3", "--config", config.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert_eq!(
        code(&fmin(&["--jobs", "0", "shoot", "--R", "3"], dir.path())),
        2
    );
    assert_eq!(code(&fmin(&["shoot"], dir.path())), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_csv_round_trips(points in prop::collection::vec(
        (-1e3..1e3_f64, -50.0..50.0_f64, 0.0..50.0_f64, -7.0..1.0_f64), 1..40)
    ) {
        let states: Vec<_> = points.iter().map(|&(t, x, r, th)| ProfileState::new(t, x, r, th)).collect();
        let back = parse_profile_csv(&profile_csv(&states)).unwrap();
        prop_assert_eq!(back, states);
    }
}
