use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_short-bandit"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

#[test]
fn run_writes_results_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "simulator = \"pattern\"\nruns = 300\nforced_exploration = true\n").unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(name);
        let o = bin(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(out);
    }
    for f in ["per_timestep.csv", "summary.csv", "manifest.toml"] {
        let a = fs::read(outputs[0].join(f)).unwrap();
        assert_eq!(a, fs::read(outputs[1].join(f)).unwrap(), "{f}");
    }
    let summary = fs::read_to_string(outputs[0].join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7);
    let manifest = fs::read_to_string(outputs[0].join("manifest.toml")).unwrap();
    assert!(manifest.contains("timestamp = 1700000000"));
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(
        bin(&["run", "--runs", "200", "--seed", "1", "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        bin(&["run", "--runs", "200", "--seed", "2", "--out", b.to_str().unwrap()])
            .status
            .success()
    );
    assert_ne!(
        fs::read(a.join("summary.csv")).unwrap(),
        fs::read(b.join("summary.csv")).unwrap()
    );
}

#[test]
fn sweep_and_grid_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = bin(&[
        "sweep",
        "--runs",
        "200",
        "--strategy",
        "e-greedy",
        "--grid",
        "0.05:0.15:0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let values: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(values, ["0.05", "0.1", "0.15"]);

    let o = bin(&[
        "sweep",
        "--runs",
        "100",
        "--strategy",
        "UCB1",
        "--grid",
        "1000,2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 3);
}

#[test]
fn verify_and_hist() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["verify-sim", "--steps", "20000", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("surviving features"));
    assert!(dir.path().join("verify_coefficients.csv").exists());

    let h = dir.path().join("h.csv");
    let o = bin(&[
        "hist",
        "--source",
        "stationary",
        "--samples",
        "10000",
        "--out",
        h.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&h).unwrap();
    assert!(text.starts_with("bin_start,count,density"));
}

#[test]
fn errors_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "horizon = 70\nsurprise = 1\n").unwrap();
    let o = bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let line: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(line["error"], "config");

    let o = bin(&["sweep", "--strategy", "nope", "--grid", "1,2"]);
    assert!(!o.status.success());
    let line: serde_json::Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(line["error"], "config");
}
