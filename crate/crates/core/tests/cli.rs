use std::path::Path;
use std::process::{Command, Output};

fn miso(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miso-bb"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = miso(&["generate", "--seed", "1", "-k", "4", "-n", "4", "--topology", "bc", "--out", name], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let v = json(&dir.path().join("a.json"));
    assert_eq!(v["K"], 4);
    assert_eq!(v["topology"], "BC");
}

#[test]
fn single_user_solve_reports_analytic_rate() {
    let dir = tempfile::tempdir().unwrap();
    miso(&["generate", "--seed", "3", "-k", "1", "-n", "2", "--power-db", "10", "--out", "one.json"], dir.path());
    let out = miso(
        &["solve", "--instance", "one.json", "--algo", "bb", "--trace", "trace.jsonl", "--out", "r.json", "--deterministic"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("r.json"));
    let s = miso_bb::model::Scenario::load(dir.path().join("one.json")).unwrap();
    let exact = (1.0 + 10.0 * s.instance.channel(0, 0, 0).norm_squared()).log2();
    assert!((r["sum_rate_bits"].as_f64().unwrap() - exact).abs() < 1e-6);
    assert!(r["gap"].as_f64().unwrap() <= 1e-3);
    assert!(r.get("wall_seconds").is_none());
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    miso(&["generate", "--seed", "2", "-k", "4", "-n", "2", "--topology", "ic", "--out", "ic.json"], dir.path());
    // grid oracle caps
    let out = miso(&["oracle", "--instance", "ic.json", "--kind", "grid"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("K <= 2"));
    // node budget
    let out = miso(&["solve", "--instance", "ic.json", "--max-nodes", "3", "--out", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&dir.path().join("r.json"))["converged"], false);
    // pricing stopped by its outer cap still writes its result
    let out = miso(&["solve", "--instance", "ic.json", "--algo", "pricing", "--lambda0", "5", "--max-outer", "1", "--out", "p.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&dir.path().join("p.json"))["converged"], false);
    // malformed file
    std::fs::write(dir.path().join("bad.json"), "{\n  \"K\": 2,\n  \"N\": [2, oops],\n  \"L_C\": 1\n}").unwrap();
    let out = miso(&["solve", "--instance", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_lists_every_reference() {
    let dir = tempfile::tempdir().unwrap();
    miso(&["generate", "--seed", "5", "-k", "2", "-n", "2", "--power-db", "5", "--out", "bc.json"], dir.path());
    let out = miso(&["compare", "--instance", "bc.json", "--lambda0", "1e-5,1", "--out", "c.json"], dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(4)));
    let v = json(&dir.path().join("c.json"));
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["algorithm"].as_str().unwrap()).collect();
    assert_eq!(names, ["bb", "pricing", "pricing", "dpc"]);
    let bb = v[0]["sum_rate_bits"].as_f64().unwrap();
    let dpc = v[3]["sum_rate_bits"].as_f64().unwrap();
    assert!(dpc >= bb - 1e-3);
}
