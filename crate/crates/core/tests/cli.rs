use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sinkbridge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

#[test]
fn default_runs_write_expected_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("riccati", vec![("riccati.csv", "n,error,envelope,satisfied")]),
        (
            "gaussian",
            vec![
                (
                    "gaussian-trace.csv",
                    "n,kl_bridge_gap,marginal_kl,marginal_w2,entropy_rate_envelope,improved_rate_envelope,marginal_w2_envelope",
                ),
                ("ot-limit.csv", "t,slope_gap"),
                ("proximal.csv", "n,w2,w2_envelope,kl,kl_envelope"),
            ],
        ),
        ("discrete", vec![("trace.csv", "n,H_pi2n_eta,H_mu_pi2n1,H_eta_pi2n,H_pi2n1_mu,H_bridge_Pn")]),
        ("bounds", vec![("bounds.csv", "n,theorem_tag,bound,empirical,satisfied")]),
    ];
    for (cmd, files) in cases {
        let prefix = dir.path().join(cmd);
        let out = run(&[cmd, "--out", prefix.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        for (suffix, h) in files {
            let p = dir.path().join(format!("{cmd}-{suffix}"));
            assert_eq!(header(&p), h, "{cmd} {suffix}");
        }
    }
}

#[test]
fn infinite_varpi_gives_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inf.json",
        r#"{"schema": "sinkbridge/v1", "command": "riccati", "model": {"dim": 2, "varpi": "infinite", "r0": 0.0}}"#,
    );
    let prefix = dir.path().join("inf");
    let out = run(&["--config", &cfg, "--out", prefix.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("inf-riccati.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(run(&["--config", &bad]).status.code(), Some(2));
    let schema = write_config(
        dir.path(),
        "schema.json",
        r#"{"schema": "other/v0", "command": "riccati", "model": {"dim": 1, "varpi": 1.0, "r0": 0.0}}"#,
    );
    assert_eq!(run(&["--config", &schema]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--tol-override", "foo=1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--filter", "no-such-criterion"]).status.code(), Some(2));
    assert_eq!(run(&["gaussian", "--config", &schema]).status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "slow.json",
        r#"{
            "schema": "sinkbridge/v1", "command": "discrete", "iterations": 1,
            "model": {
                "grid": {"dim": 1, "n": 32, "radius": 5.0},
                "U": {"kind": "quadratic", "params": {"mean": 1.0, "cov": 1.0}},
                "V": {"kind": "quadratic", "params": {"mean": -1.0, "cov": 0.5}},
                "W": {"kind": "linear-gaussian", "alpha": 0.0, "beta": 1.0, "tau": 0.5}
            }
        }"#,
    );
    let prefix = dir.path().join("slow");
    assert_eq!(run(&["--config", &cfg, "--out", prefix.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn kernel_underflow_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "narrow.json",
        r#"{
            "schema": "sinkbridge/v1", "command": "discrete",
            "model": {
                "grid": {"dim": 1, "n": 16, "radius": 1.0},
                "U": {"kind": "quadratic", "params": {"mean": 0.0, "cov": 1.0}},
                "V": {"kind": "quadratic", "params": {"mean": 0.0, "cov": 1.0}},
                "W": {"kind": "linear-gaussian", "alpha": 10.0, "beta": 1.0, "tau": 0.05}
            }
        }"#,
    );
    let out = run(&["--config", &cfg, "--out", dir.path().join("n").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn violated_envelope_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "small.json",
        r#"{"schema": "sinkbridge/v1", "command": "riccati", "iterations": 60, "model": {"dim": 1, "varpi": 0.1, "r0": 0.0}}"#,
    );
    let out = run(&["--config", &cfg, "--out", dir.path().join("s").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("s-riccati.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",false")));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut contents = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let prefix = dir.path().join(format!("r{i}"));
        let out = bin()
            .args(["discrete", "--seed", "3", "--out", prefix.to_str().unwrap()])
            .env("SINKBRIDGE_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        contents.push((
            std::fs::read(dir.path().join(format!("r{i}-trace.csv"))).unwrap(),
            String::from_utf8(out.stdout).unwrap(),
        ));
    }
    assert_eq!(contents[0].0, contents[1].0);
    assert_eq!(contents[0].1.replace("r0", "r1"), contents[1].1);
}

#[test]
fn verify_json_is_stable() {
    let a = run(&["verify", "--filter", "psi", "--json"]);
    let b = run(&["verify", "--filter", "psi", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["schema"], "sinkbridge/v1");
    assert_eq!(v["criteria"][0]["name"], "psi-factorization");
    assert_eq!(v["all_passed"], true);
}
