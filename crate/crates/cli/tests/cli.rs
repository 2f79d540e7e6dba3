use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mlfg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlfg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    format!("{}\n", text.lines().next().unwrap())
}

#[test]
fn solve_dataset1_writes_report_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlfg(&["solve", "--dataset", "1", "--out", "r.json", "--log", "it.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("r.json"));
    assert_eq!(r["completed"], true);
    assert_eq!(r["fingerprint"]["n"], 4);
    assert_eq!(r["fingerprint"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["certificate"]["certified"], true);
    let stages = r["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 22);
    let errs: Vec<f64> = stages.iter().map(|s| s["error_to_final"].as_f64().unwrap()).collect();
    for w in errs[..errs.len() - 1].windows(2) {
        assert!(w[1] < w[0]);
    }
    assert_eq!(first_line(&dir.path().join("it.csv")), golden("iterations_header.csv"));
}

#[test]
fn iteration_log_has_one_row_per_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let out = mlfg(&["solve", "--dataset", "2", "--out", "r.json", "--log", "it.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = read_json(&dir.path().join("r.json"));
    let stages = r["stages"].as_array().unwrap();
    let expected: u64 = stages.iter().map(|s| s["inner_iterations"].as_u64().unwrap() + 1).sum();
    let mut rdr = csv::Reader::from_path(dir.path().join("it.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len() as u64, expected);
    for row in &rows {
        assert_eq!(row.len(), 9);
        assert_eq!(&row[2], "newton");
        assert_eq!(&row[3], "on");
        for col in [1, 5, 6, 7, 8] {
            row[col].parse::<f64>().unwrap();
        }
    }
}

#[test]
fn subgradient_short_schedule_needs_more_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let args = |m: &'static str, f: &'static str| ["solve", "--dataset", "1", "--eps-min", "0.1", "--method", m, "--out", f];
    assert_eq!(mlfg(&args("subgradient", "s.json"), dir.path()).status.code(), Some(0));
    assert_eq!(mlfg(&args("newton", "n.json"), dir.path()).status.code(), Some(0));
    let s = read_json(&dir.path().join("s.json"));
    let n = read_json(&dir.path().join("n.json"));
    assert_eq!(s["config"]["method"], "subgradient");
    assert!(s["total_inner_iterations"].as_u64() > n["total_inner_iterations"].as_u64());
}

#[test]
fn rerun_from_echoed_config_reproduces_solution() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["solve", "--dataset", "2", "--seed", "9", "--taylor", "off"];
    assert_eq!(mlfg(&[&base[..], &["--out", "a.json"]].concat(), dir.path()).status.code(), Some(0));
    let a = read_json(&dir.path().join("a.json"));
    let c = &a["config"];
    let flag = |k: &str| c[k].to_string();
    let (eps0, gamma, eps_min, tol, p, seed) =
        (flag("eps0"), flag("gamma"), flag("eps_min"), flag("tol"), flag("p"), flag("seed"));
    let taylor = if c["taylor"] == true { "on" } else { "off" };
    let method = c["method"].as_str().unwrap();
    let rerun = [
        "solve", "--dataset", "2", "--method", method, "--eps0", &eps0, "--gamma", &gamma, "--eps-min", &eps_min,
        "--tol", &tol, "--p", &p, "--seed", &seed, "--taylor", taylor, "--out", "b.json",
    ];
    assert_eq!(mlfg(&rerun, dir.path()).status.code(), Some(0));
    let b = read_json(&dir.path().join("b.json"));
    let xa: Vec<f64> = serde_json::from_value(a["x"].clone()).unwrap();
    let xb: Vec<f64> = serde_json::from_value(b["x"].clone()).unwrap();
    for (u, v) in xa.iter().zip(&xb) {
        assert!((u - v).abs() <= 1e-12);
    }
}

#[test]
fn verify_closes_the_loop_and_rejects_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mlfg(&["solve", "--dataset", "1", "--out", "r.json"], dir.path()).status.code(), Some(0));
    let ok = mlfg(&["verify", "--dataset", "1", "--x", "r.json"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    let r = read_json(&dir.path().join("r.json"));
    let mut x: Vec<f64> = serde_json::from_value(r["x"].clone()).unwrap();
    x[0] += 0.1;
    std::fs::write(dir.path().join("bad.json"), serde_json::to_string(&x).unwrap()).unwrap();
    let bad = mlfg(&["verify", "--dataset", "1", "--x", "bad.json"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    let gap: f64 = stdout
        .lines()
        .find(|l| l.starts_with("leader 1 "))
        .and_then(|l| l.rsplit(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap > 1e-4, "{stdout}");
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mlfg(&["solve", "--data", "missing.json"], dir.path()).status.code(), Some(3));
    std::fs::write(dir.path().join("short.json"), "[1.0, 2.0, 3.0]").unwrap();
    assert_eq!(mlfg(&["verify", "--dataset", "1", "--x", "short.json"], dir.path()).status.code(), Some(3));
    std::fs::write(dir.path().join("junk.json"), "{not json").unwrap();
    assert_eq!(mlfg(&["solve", "--data", "junk.json"], dir.path()).status.code(), Some(3));
    assert_eq!(mlfg(&["solve", "--dataset", "1", "--eps0", "2.5"], dir.path()).status.code(), Some(3));
    assert_eq!(mlfg(&["solve", "--dataset", "1", "--p", "3"], dir.path()).status.code(), Some(3));
}

#[test]
fn bench_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let o = mlfg(&["bench", "--dataset", "2", "--repeats", "5", "--seed", "3", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let mut rdr = csv::Reader::from_path(dir.path().join(out)).unwrap();
        // drop the wall-clock column
        rdr.records().map(|r| {
            let r = r.unwrap();
            r.iter().take(6).map(str::to_owned).collect::<Vec<_>>()
        }).collect::<Vec<_>>()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    assert_eq!(first_line(&dir.path().join("a.csv")), golden("bench_header.csv"));
    let repeats: std::collections::BTreeSet<_> = a.iter().map(|r| r[0].clone()).collect();
    assert_eq!(repeats.len(), 5);
    for method in ["newton", "subgradient"] {
        for taylor in ["on", "off"] {
            assert!(a.iter().any(|r| r[1] == method && r[2] == taylor));
        }
    }
}

#[test]
fn bench_multistart_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = mlfg(&["bench", "--dataset", "1", "--out", "b.csv", "--multistart", "m.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("m.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    for r in &rows {
        assert!(r[4].parse::<f64>().unwrap() <= 1e-6);
        assert_eq!(&r[5], "true");
    }
}
