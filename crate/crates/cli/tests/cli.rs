use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn crp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crp"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("CRP_THREADS")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn help_exits_zero() {
    let out = Command::new(env!("CARGO_BIN_EXE_crp")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify-scaling"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(dir.path(), &["verify-scaling", "--dist", "weibull:alpha=2", "--t", "10", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_scaling_weibull_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(dir.path(), &["verify-scaling", "--dist", "weibull:alpha=2", "--t", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("verify-scaling.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "u_t", "v_t", "w_t", "residual"]);
    let row = rdr.records().next().unwrap().unwrap();
    let u: f64 = row[1].parse().unwrap();
    assert!((u - 100.0).abs() < 1e-9);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn infeasible_schedule_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(
        dir.path(),
        &[
            "--seed",
            "1",
            "exp-two-table",
            "--dist",
            "weibull:alpha=2",
            "--kappa",
            "0.4",
            "--eta",
            "1.0",
            "--phi",
            "0.9",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiments_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(dir.path(), &["exp-basic", "--dist", "weibull:alpha=2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn discrete_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = crp(
        dir.path(),
        &[
            "--seed",
            "2",
            "simulate-discrete",
            "--dist",
            "frechet:alpha=2",
            "--n-max",
            "1000",
            "--checkpoints",
            "5",
            "--replicas",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("simulate-discrete.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["replica", "n", "K_n", "s1", "s2", "s3", "share1", "share12", "leader_birth", "leader_weight"]
    );
    assert_eq!(rdr.records().count(), 15);
}

#[test]
fn jsonl_mirrors_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "4", "yule-tail", "--replicas", "200"];
    assert_eq!(crp(a.path(), &args).status.code(), Some(0));
    let mut jsonl_args = args.to_vec();
    jsonl_args.extend(["--format", "jsonl"]);
    assert_eq!(crp(b.path(), &jsonl_args).status.code(), Some(0));
    let csv_rows: Vec<csv::StringRecord> =
        csv::Reader::from_path(a.path().join("yule-tail.csv")).unwrap().records().map(Result::unwrap).collect();
    let json_rows: Vec<serde_json::Value> =
        read(&b.path().join("yule-tail.jsonl")).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(csv_rows.len(), json_rows.len());
    for (c, j) in csv_rows.iter().zip(&json_rows) {
        let emp: f64 = c[4].parse().unwrap();
        assert_eq!(emp, j["empirical"].as_f64().unwrap());
    }
}

#[test]
fn replay_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let out = crp(
        first.path(),
        &["--seed", "11", "--threads", "2", "exp-one-table", "--dist", "gumbel-unbounded:alpha=2", "--replicas", "40"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.path().join("manifest.json");
    let out = crp(second.path(), &["replay", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["exp-one-table.csv", "exp-one-table-checks.csv"] {
        assert_eq!(read(&first.path().join(f)), read(&second.path().join(f)), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    let args = ["simulate-continuous", "--t", "20", "--dist", "frechet:alpha=1", "--replicas", "16", "--seed", "3"];
    let mut a = args.to_vec();
    a.extend(["--threads", "1"]);
    let mut b = args.to_vec();
    b.extend(["--threads", "4"]);
    assert_eq!(crp(one.path(), &a).status.code(), Some(0));
    assert_eq!(crp(four.path(), &b).status.code(), Some(0));
    let f = "simulate-continuous.csv";
    assert_eq!(read(&one.path().join(f)), read(&four.path().join(f)));
}
