use std::path::Path;
use std::process::{Command, Output};

fn crystal_fpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crystal-fpp")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn shape_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("shape");
    let o = crystal_fpp(&["shape", "--preset", "cubic2", "--dist", "deterministic:1", "--dirs", "16", "--k-max", "6", "--replicas", "1", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.txt", "detail.csv", "shape.json", "shape.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let summary = read(&out.join("summary.txt"));
    assert!(summary.starts_with("command: shape\nverdict: PASS\n"));
    assert!(summary.contains("hull_vertices: 4"));
    assert!(summary.contains("lattice_hash: "));
    assert!(summary.lines().last().unwrap().starts_with("timestamp: "));
    let csv = read(&out.join("detail.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# crystal-fpp detail v1"));
    assert_eq!(lines.next(), Some("direction,replica,scaled_time"));
    assert_eq!(lines.count(), 16);
}

#[test]
fn monotonicity_on_the_diagonal_quotient() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mono");
    let o = crystal_fpp(&[
        "monotonicity", "--preset", "cubic2", "--kernel", "1,-1", "--dist", "exponential:1", "--k-max", "8", "--replicas", "40", "--seed", "5",
        "--out", &out_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary = read(&out.join("summary.txt"));
    assert_eq!(summary.matches("direction(").count(), 4);
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("monotonicity.json"))).unwrap();
    assert_eq!(report["quotient_dim"], 1);
    assert_eq!(report["passed"], true);
}

#[test]
fn torsion_kernel_is_an_error_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let o = crystal_fpp(&["quotient", "--preset", "cubic2", "--kernel", "2,0", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error: ") && err.contains("[2]"), "{err}");
    assert!(!out.exists());
}

#[test]
fn detail_files_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = crystal_fpp(&["mu", "--preset", "triangular", "--dist", "uniform:0.5,1.5", "--direction", "1,0", "--k-max", "6", "--replicas", "20", "--seed", "11", "--out", &out_arg(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("detail.csv")).unwrap(), std::fs::read(out.join("mu.json")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn config_file_and_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(&cfg, "preset = \"cubic2\"\nkernel = [[1, -1]]\ndistribution = \"bernoulli:0.5\"\n[estimator]\nmode = \"exhaustive\"\nbudget = 10\n").unwrap();
    let out = tmp.path().join("lift");
    let refused = crystal_fpp(&["lift-check", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("4112"));
    let o = crystal_fpp(&["lift-check", "--config", cfg.to_str().unwrap(), "--budget", "5000", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(&out.join("summary.txt"));
    assert!(summary.contains("LHS 1/4 >= RHS 95/512"), "{summary}");
    assert!(summary.contains("budget = 5000"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(&cfg, "preset = \"cubic2\"\n[estimator]\nreplica = 3\n").unwrap();
    let o = crystal_fpp(&["lattice", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replica"));
}

#[test]
fn render_with_quotient_overlay() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("shape");
    let o = crystal_fpp(&[
        "shape", "--preset", "cubic2", "--kernel", "1,-1", "--dist", "exponential:1", "--dirs", "8", "--k-max", "6", "--replicas", "10",
        "--out", &out_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = tmp.path().join("plot.svg");
    let o = crystal_fpp(&["render", "--input", out.join("shape.json").to_str().unwrap(), "--out", svg.to_str().unwrap(), "--label", "cover"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = read(&svg);
    assert!(svg.contains(r#"id="overlay""#));
    assert!(svg.contains(">cover</text>") && svg.contains("quotient shape"));
}

#[test]
fn positivity_reports_a_zero_range() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pos");
    let o = crystal_fpp(&["positivity", "--preset", "cubic2", "--p-grid", "0.2,0.9", "--k-max", "12", "--replicas", "20", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&out.join("summary.txt")).contains("zero_range: [0.9]"));
}

#[test]
fn heavy_tails_are_refused_with_the_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mu");
    let o = crystal_fpp(&["mu", "--preset", "cubic2", "--dist", "pareto:0.3", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("k*alpha = 1.2 <= 2"), "{err}");
    assert!(!out.exists());
}

#[test]
fn lattice_and_quotient_describe_their_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lat");
    let o = crystal_fpp(&["lattice", "--preset", "honeycomb", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(read(&out.join("summary.txt")).contains("edge_connectivity: 3"));
    let again = tmp.path().join("again");
    let o = crystal_fpp(&["quotient", "--lattice-file", out.join("lattice.txt").to_str().unwrap(), "--kernel", "1,0", "--out", &out_arg(&again)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&again.join("detail.csv"));
    assert_eq!(csv.lines().nth(1), Some("half_edge,origin,terminus,voltage,quotient_voltage"));
    assert!(again.join("quotient.txt").exists());
}
