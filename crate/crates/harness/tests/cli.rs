use std::path::Path;
use std::process::Command;

fn possfuse(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_possfuse")).args(args).output().unwrap()
}

fn run_small(out: &Path, filter: &str) {
    let o = possfuse(&[
        "run", "--filter", filter, "--runs", "1", "--scans", "4", "--seed", "9", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("poss"), dir.path().join("prob"));
    run_small(&a, "possibilistic");
    run_small(&b, "probabilistic");
    let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert!(csv.starts_with("# schema=possfuse-results/v1 filter=possibilistic"));
    assert_eq!(csv.lines().count(), 2 + 4);

    let o = possfuse(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["per_scan"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.csv");
    std::fs::write(&bogus, "scan,ospa_mean\n1,2\n").unwrap();
    let o = possfuse(&["compare", bogus.to_str().unwrap(), bogus.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    assert!(!possfuse(&["run", "--sensors", "5"]).status.success());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"runs": 0}"#).unwrap();
    let o = possfuse(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!o.status.success());
}
