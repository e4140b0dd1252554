use std::path::Path;
use std::process::Command;

use star_pls::experiment::output::csv_body;
use star_pls::experiment::{config_hash, load_config, run_sweep, Axis, SweepSpec};
use star_pls::optimizer::Scheme;
use star_pls::SystemConfig;

fn spec_3x2x5() -> SweepSpec {
    SweepSpec {
        axis: Axis::M,
        values: vec![4.0, 6.0, 8.0],
        schemes: vec![Scheme::Proposed, Scheme::Zf],
        seeds: vec![0, 1, 2, 3, 4],
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn config_file_defaults_and_units() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"P_tmax_dBm": 30, "sigma2_dBm": -110}"#).unwrap();
    let cfg = load_config(&path).unwrap();
    assert!((cfg.p_tmax - 1.0).abs() < 1e-15);
    assert!((cfg.sigma2_b - 1e-14).abs() < 1e-28);
    assert_eq!((cfg.m, cfg.n_t, cfg.lambda_bits), (16, 4, 2));

    std::fs::write(&path, "{}").unwrap();
    assert!(load_config(&path).unwrap_err().to_string().contains("P_tmax required"));
    assert!(load_config(&dir.path().join("missing.json")).is_err());
}

#[test]
fn sweep_writes_one_record_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SystemConfig::desk();
    let records = run_sweep(&spec_3x2x5(), &cfg, dir.path()).unwrap();
    assert_eq!(records.len(), 30);
    assert!(records.iter().all(|r| r.ok()));

    let results = read(&dir.path().join("results.csv"));
    let hash = config_hash(&cfg);
    assert!(results.starts_with(&format!("# config_sha256={hash}\n")));
    let body = csv_body(&results);
    assert_eq!(body.lines().count(), 31);
    assert!(body.starts_with("scheme,axis_value,seed,objective,"));
    assert!(!body.contains('\r'));

    let trajectories = std::fs::read_dir(dir.path().join("trajectories")).unwrap().count();
    assert_eq!(trajectories, 30);
    let one = read(&dir.path().join("trajectories/zf_M_6_seed3.csv"));
    assert!(one.contains(&hash) && one.contains("# seed=3"));

    let timings = read(&dir.path().join("timings.csv"));
    assert_eq!(csv_body(&timings).lines().count(), 31);

    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(summary["config_sha256"], hash.as_str());
    let rows = summary["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["n"] == 5));
    assert_eq!(csv_body(&read(&dir.path().join("summary.csv"))).lines().count(), 7);
}

#[test]
fn sweep_output_is_reproducible_across_runs_and_threads() {
    let cfg = SystemConfig::desk();
    let spec = SweepSpec { axis: Axis::LambdaBits, values: vec![1.0, 3.0], ..spec_3x2x5() };
    let mut bodies = Vec::new();
    for threads in [1, 4, 4] {
        let dir = tempfile::tempdir().unwrap();
        in_pool(threads, || run_sweep(&spec, &cfg, dir.path())).unwrap();
        let files = ["results.csv", "summary.csv", "trajectories/proposed_lambda_bits_3_seed4.csv"];
        bodies.push(files.map(|f| csv_body(&read(&dir.path().join(f)))));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);
}

#[test]
fn invalid_specs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SystemConfig::desk();
    let empty = SweepSpec { seeds: vec![], ..spec_3x2x5() };
    assert!(run_sweep(&empty, &cfg, dir.path()).is_err());
    let fractional = SweepSpec { values: vec![4.5], ..spec_3x2x5() };
    assert!(run_sweep(&fractional, &cfg, dir.path()).is_err());
    // Odd M is a valid axis value but the conventional baseline cannot split it.
    let odd =
        SweepSpec { values: vec![5.0, 6.0], schemes: vec![Scheme::ConventionalRis], seeds: vec![0], ..spec_3x2x5() };
    let recs = run_sweep(&odd, &cfg, dir.path()).unwrap();
    assert!(!recs[0].ok() && recs[0].objective.is_nan());
    assert!(recs[1].ok());
    assert!(read(&dir.path().join("results.csv")).contains("error: conventional RIS split"));
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_star-pls")).args(args).env_remove("STAR_PLS_THREADS").output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_commands_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    std::fs::write(d("cfg.json"), r#"{"P_tmax_dBm": 30, "m": 8}"#).unwrap();
    std::fs::write(d("bad.json"), r#"{"P_tmax_dBm": 30, "m": 0}"#).unwrap();
    std::fs::write(d("spec.json"), r#"{"axis": "P1", "values": [0.2, 0.8], "schemes": ["proposed"], "seeds": [1, 2]}"#)
        .unwrap();

    let (code, stdout, _) =
        cli(&["run", "--config", &d("cfg.json"), "--seed", "5", "--out", &d("run"), "--scheme", "zf"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("zf"));
    assert!(Path::new(&d("run/solutions.json")).exists());

    let (code, stdout, _) =
        cli(&["--threads", "2", "sweep", "--config", &d("cfg.json"), "--spec", &d("spec.json"), "--out", &d("sweep")]);
    assert_eq!(code, 0);
    assert!(stdout.contains("4/4 points succeeded"));

    let (code, _, stderr) = cli(&["run", "--config", &d("bad.json"), "--seed", "1", "--out", &d("x")]);
    assert_eq!(code, 1);
    assert!(stderr.contains("m must be a positive integer"));

    let (code, _, _) = cli(&["sweep", "--config", &d("cfg.json"), "--spec", &d("missing.json"), "--out", &d("y")]);
    assert_ne!(code, 0);

    // M = 7 cannot be split in half, so every point of this sweep fails.
    std::fs::write(d("odd.json"), r#"{"axis": "M", "values": [7], "schemes": ["conventional_ris"], "seeds": [0, 1]}"#)
        .unwrap();
    let (code, _, _) = cli(&["sweep", "--config", &d("cfg.json"), "--spec", &d("odd.json"), "--out", &d("z")]);
    assert_eq!(code, 2);
}

#[test]
fn cli_run_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    std::fs::write(d("cfg.json"), r#"{"P_tmax_dBm": 30}"#).unwrap();
    let mut bodies = Vec::new();
    for (threads, out) in [("1", "a"), ("3", "b")] {
        let (code, _, _) =
            cli(&["--threads", threads, "run", "--config", &d("cfg.json"), "--seed", "11", "--out", &d(out)]);
        assert_eq!(code, 0);
        bodies.push(csv_body(&read(&dir.path().join(out).join("results.csv"))));
    }
    assert_eq!(bodies[0], bodies[1]);
}
