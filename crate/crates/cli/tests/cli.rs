use std::path::Path;
use std::process::{Command, Output};

fn hypercount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypercount"))
        .args(args)
        .env_remove("HYPERCOUNT_OUT")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn simulate_is_reproducible_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("z.csv");
    let args = ["simulate", "--named", "triangle", "-p", "p2=0.5", "-n", "6", "--reps", "50", "--seed", "3"];
    let a = hypercount(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, hypercount(&args).stdout);
    let mut with_csv = args.to_vec();
    with_csv.extend(["--csv", csv.to_str().unwrap()]);
    assert!(hypercount(&with_csv).status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("rep,value"));
    assert_eq!(text.lines().count(), 51);
    assert_eq!(json(&a)["values"].as_array().unwrap().len(), 50);
}

#[test]
fn exact_rational_matches_oracle() {
    let out = hypercount(&["exact", "--named", "loop-pair", "-p", "p1=0.3", "-p", "p2=0.7", "-n", "4", "--mode", "rational", "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["max_relative_difference"], 0.0);
    assert_eq!(v["moments"]["exact"], v["oracle"]["exact"]);
}

#[test]
fn guard_skips_exit_with_two() {
    let out = hypercount(&["exact", "--named", "triangle", "-p", "p2=0.5", "-n", "40"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["skipped"].is_string());
}

#[test]
fn errors_exit_with_one() {
    assert_eq!(hypercount(&["exact", "--named", "triangle", "-p", "p3=0.5", "-n", "5"]).status.code(), Some(1));
    assert_eq!(hypercount(&["exact", "--named", "nope", "-p", "p2=0.5", "-n", "5"]).status.code(), Some(1));
    assert_eq!(hypercount(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hypercount(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_emit_csv_rows() {
    let out = hypercount(&["bounds", "--named", "loop-pair", "-p", "q1=n^-3", "-p", "q2=n^-1", "-n", "100,1000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,quantity,value,lower,upper,witness,status"));
    assert!(text.contains("100,bound_jlr,"));
    assert!(text.contains("1000,min_expected,"));
}

#[test]
fn kurtosis_needs_a_homogeneous_spec() {
    let out = hypercount(&["kurtosis", "--named", "loop-pair", "-p", "p1=0.3", "-p", "p2=0.5", "-n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let ok = hypercount(&["kurtosis", "--named", "triangle", "-p", "p2=0.1", "-n", "5,6"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8(ok.stdout).unwrap().contains("kurtosis_ratio"));
}

#[test]
fn distance_reads_batches_and_pmfs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let sim = hypercount(&["--out-dir", out_dir, "simulate", "--named", "edge", "-p", "p2=0.5", "-n", "6", "--reps", "1000"]);
    assert!(sim.status.success());
    let batch = dir.path().join("simulate.json");
    let d = hypercount(&["distance", batch.to_str().unwrap(), "--delta", "0.05"]);
    let v = json(&d);
    assert_eq!(v["source"], "sample");
    assert_eq!(v["estimate"]["delta"], 0.05);

    let pmf = dir.path().join("pmf.json");
    std::fs::write(&pmf, r#"{"values":[0,1],"probabilities":[0.5,0.5]}"#).unwrap();
    let v = json(&hypercount(&["distance", pmf.to_str().unwrap()]));
    assert!((v["exact"]["d_k"].as_f64().unwrap() - 0.341344746).abs() < 1e-8);
}

#[test]
fn hoeffding_verification_passes() {
    let out = hypercount(&["verify", "hoeffding", "--named", "2-path", "-p", "p2=0.3", "-n", "4,5", "--reps", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
}

fn write_config(dir: &Path, outputs: &str) -> std::path::PathBuf {
    std::fs::write(dir.join("tri.txt"), "vertices: 3\nedge: 1 2\nedge: 1 3\nedge: 2 3\n").unwrap();
    let cfg = format!(
        r#"{{"pattern":"tri.txt","schedule":["p2=0.5"],"n_grid":[5,6,8],"reps":500,"seed":9,
            "outputs":{outputs},"output_dir":"{}"}}"#,
        dir.join("out").display()
    );
    let path = dir.join("exp.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn sweep_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"["moments","bounds","distances"]"#);
    let mut bodies = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let status = hypercount(&["--out-dir", out.to_str().unwrap(), "sweep", "--config", cfg.to_str().unwrap(), "--workers", workers]);
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
        bodies.push((
            std::fs::read(out.join("sweep.csv")).unwrap(),
            std::fs::read(out.join("sweep.json")).unwrap(),
            std::fs::read(out.join("plot/dk_empirical.csv")).unwrap(),
        ));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn sweep_falls_back_to_config_output_dir_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[]");
    assert!(hypercount(&["sweep", "--config", cfg.to_str().unwrap()]).status.success());
    let header = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(header, "n,quantity,value,lower,upper,witness,status\n");

    let env_dir = dir.path().join("env");
    let out = Command::new(env!("CARGO_BIN_EXE_hypercount"))
        .args(["sweep", "--config", cfg.to_str().unwrap()])
        .env("HYPERCOUNT_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("sweep.json").exists());
}
