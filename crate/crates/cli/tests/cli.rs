use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ancientflow"));
    c.env_remove("ANCIENTFLOW_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn oracle_passes_and_tabulates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["oracle", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(csv.starts_with("# schema=ancientflow.oracle version=1\n"));
    let row = csv.lines().find(|l| l.starts_with("hyperbolic,2,-1.0,")).expect("t = -1 row");
    let mean: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((mean - 2.01849).abs() < 1e-3);
    let row = csv.lines().find(|l| l.starts_with("euclidean,2,-1.0,")).unwrap();
    assert_eq!(row.split(',').nth(3).unwrap(), "2.0");
}

#[test]
fn simulate_matches_hyperbolic_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["simulate", "--fixture", "hyperbolic-sphere", "--n", "2", "--t0", "-5", "--t1", "-0.1", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("ok   closed-form-radius"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("simulate_report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "ancientflow.simulate-report");
    assert!(report["oracle"]["max_radius_error"].as_f64().unwrap() <= 1e-8);
    for f in ["trajectory.jsonl", "monitors.csv", "plot_max_f.csv", "plot_mean_curvature.csv", "plot_functionals.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let traj = fs::read_to_string(dir.path().join("trajectory.jsonl")).unwrap();
    let head: serde_json::Value = serde_json::from_str(traj.lines().next().unwrap()).unwrap();
    assert_eq!(head["version"], 1);
}

#[test]
fn simulate_reports_codim_one_decay() {
    let o = run(&["simulate", "--fixture", "perturbed-sphere-S3", "--monitor", "codim-one"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("ok   codim-one-decay-rate"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(code(&run(&["simulate", "--fixture", "no-such-fixture"])), 2);
    assert_eq!(code(&run(&["verify-tensor"])), 2, "missing seed");
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(code(&run(&["simulate", "--fixture", "perturbed-sphere-R3", "--monitor", "codim-one"])), 2);
    assert_eq!(code(&run(&["simulate", "--fixture", "perturbed-sphere-S3", "--n", "3"])), 2);
    assert_eq!(code(&run(&["oracle", "--family", "elliptic"])), 2);
    assert_eq!(code(&run(&["--config", "/nonexistent/cfg.toml", "oracle"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\n[simulate]\nfixture = \"round-sphere-R3\"\ncolour = 3\n").unwrap();
    assert_eq!(code(&run(&["--config", cfg.to_str().unwrap(), "simulate"])), 2);

    let o = bin().env("ANCIENTFLOW_THREADS", "zero").args(["oracle"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn injected_fault_exits_one_and_logs_worst_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["verify-tensor", "--seed", "3", "--samples", "3000", "--fault-rhs-scale", "0.99", "--out", out]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL li-li"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("tensor_report.json")).unwrap()).unwrap();
    let text = report.to_string();
    assert!(text.contains("\"sample\""), "worst sample is logged");
}

#[test]
fn config_file_values_apply_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(
        &cfg,
        "seed = 5\n[verify_tensor]\nsamples = 600\ndims = [2, 3]\ncodims = [1, 2]\n[oracle]\nfamily = \"euclidean\"\n",
    )
    .unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "verify-tensor"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("codim1-r1"));
    let o = run(&["--config", cfg.to_str().unwrap(), "oracle", "--family", "sphere"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("sphere-ode-residual") && !stdout(&o).contains("euclidean-ode-residual"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cases: [&[&str]; 4] = [
        &["verify-tensor", "--seed", "9", "--samples", "2000"],
        &["scan-functions", "--seed", "9", "--samples", "50"],
        &["simulate", "--fixture", "perturbed-sphere-S3", "--t1", "-0.9"],
        &["functionals", "--fixture", "spheroid-R3", "--t1", "-0.95"],
    ];
    for args in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&a, &b] {
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", d.path().to_str().unwrap()]);
            let o = run(&full);
            assert!(code(&o) <= 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let o = bin()
            .env("ANCIENTFLOW_THREADS", threads)
            .args(["verify-tensor", "--seed", "4", "--samples", "3000", "--out", d.path().to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    }
    assert_eq!(read_dir_sorted(a.path()), read_dir_sorted(b.path()));
}

#[test]
fn functionals_writes_constant_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["functionals", "--fixture", "round-sphere-R3", "--t1", "-0.9", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    assert!(csv.contains("# B=1.0") && csv.contains("# n=2") && csv.contains("# p=1") && csv.contains("# c=0"));
    assert!(csv.contains("C_bar"));
}
