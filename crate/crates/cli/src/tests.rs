use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{run_cli, threads_from_env};

/// Runs the CLI in-process with the report sent to a file; returns the exit
/// code, the report text (empty when none was written) and its JSON.
fn vmperc(dir: &Path, args: &[&str]) -> (u8, String, Value) {
    let report = dir.join(format!("report-{}.json", report_name(args)));
    let _ = std::fs::remove_file(&report);
    let mut argv = vec!["vmperc"];
    argv.extend_from_slice(args);
    let r = report.to_str().unwrap().to_string();
    argv.extend_from_slice(&["--report", &r]);
    let code = run_cli(argv);
    let bytes = std::fs::read_to_string(&report).unwrap_or_default();
    let value = serde_json::from_str(&bytes).unwrap_or(Value::Null);
    (code, bytes, value)
}

fn report_name(args: &[&str]) -> String {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    args.hash(&mut h);
    format!("{:x}", h.finish())
}

fn result<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["results"].as_array().unwrap().iter().find(|e| e["name"] == name).unwrap_or_else(|| panic!("no result {name}"))
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn renorm_count_example() {
    let dir = tmp();
    let (code, _, r) = vmperc(dir.path(), &["renorm", "count", "--d", "3", "--ell", "6", "--N", "1"]);
    assert_eq!(code, 0);
    assert_eq!(result(&r, "count")["value"], 2_994_628);
    assert_eq!(r["config"]["subcommand"], "renorm-count");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert!(r["seeds"]["per_replica_rule"].is_string());
}

#[test]
fn large_counts_are_decimal_strings() {
    let dir = tmp();
    let (_, _, r) = vmperc(dir.path(), &["renorm", "count", "--N", "2"]);
    assert_eq!(result(&r, "count")["value"], Value::String(2_994_628u128.pow(3).to_string()));
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = tmp();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alpha": 0.2, "replicas": 6, "window": 2, "seed": 3}"#).unwrap();
    let (code, _, r) = vmperc(dir.path(), &["density", "--config", s(&cfg), "--alpha", "0.4", "--reproducible"]);
    assert_eq!(code, 0);
    let echo = &r["config"];
    assert_eq!(echo["alpha"], 0.4);
    assert_eq!(echo["replicas"], 6);
    assert_eq!(echo["window"], 2);
    assert_eq!(echo["eps_pair_residual"], 1e-3);
    assert_eq!(r["seeds"]["root"], 3);
    assert!(result(&r, "density[alpha=0.4]")["se"].as_f64().unwrap() > 0.0);
    assert_eq!(r["wall_time_s"], 0.0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tmp();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"alpah": 0.2}"#).unwrap();
    assert_eq!(vmperc(d, &["density", "--config", s(&cfg), "--seed", "1"]).0, 2);
    assert_eq!(vmperc(d, &["density", "--config", s(&d.join("missing.json")), "--seed", "1"]).0, 2);
    assert_eq!(vmperc(d, &["density", "--window", "2"]).0, 2, "seed is required");
    assert_eq!(vmperc(d, &["density", "--seed", "1", "--alpha", "1.5"]).0, 2);
    assert_eq!(vmperc(d, &["density", "--seed", "1", "--d", "0"]).0, 2);
    assert_eq!(vmperc(d, &["renorm", "count", "--ell", "5"]).0, 2);
    assert_eq!(vmperc(d, &["frobnicate"]).0, 2);
}

#[test]
fn worker_count_override() {
    assert_eq!(threads_from_env(None), Ok(None));
    assert_eq!(threads_from_env(Some("4".into())), Ok(Some(4)));
    assert!(threads_from_env(Some("0".into())).is_err());
    assert!(threads_from_env(Some("many".into())).is_err());
}

#[test]
fn broken_path_is_a_config_error() {
    let dir = tmp();
    let gap = dir.path().join("gap.json");
    std::fs::write(&gap, "[[5,0,0],[7,0,0]]").unwrap();
    assert_eq!(vmperc(dir.path(), &["renorm", "extract", "--path", s(&gap)]).0, 2);
    assert_eq!(vmperc(dir.path(), &["renorm", "extract"]).0, 2);
}

#[test]
fn extraction_round_trip() {
    let dir = tmp();
    let path = dir.path().join("path.json");
    let out = dir.path().join("t.json");
    let pts: Vec<[i64; 3]> = (5..=12).map(|t| [t, t / 2, 0]).collect();
    std::fs::write(&path, serde_json::to_string(&pts).unwrap()).unwrap();
    let (code, _, r) = vmperc(dir.path(), &["renorm", "extract", "--path", s(&path), "--out", s(&out)]);
    assert_eq!(code, 0);
    assert_eq!(result(&r, "leaves_crossed")["value"], true);
    let (code, _, r) = vmperc(dir.path(), &["renorm", "admissible", "--embedding", s(&out)]);
    assert_eq!(code, 0);
    assert_eq!(result(&r, "count")["value"], 1161u64 * 1161);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let dir = tmp();
    let args = ["density", "--seed", "9", "--window", "2", "--replicas", "12", "--alpha", "0.3", "--reproducible"];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| vmperc(dir.path(), &args))
    };
    let (a, b, c) = (run(1), run(1), run(3));
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1, c.1);
}

#[test]
fn data_files_have_headers() {
    let dir = tmp();
    let out = dir.path().join("curve.csv");
    let thr = dir.path().join("thr.csv");
    let (code, _, _) = vmperc(
        dir.path(),
        &[
            "crossing", "--seed", "2", "--scales", "3", "--replicas", "4", "--alpha-grid", "0.1,0.9",
            "--horizon-cap", "20", "--out", s(&out), "--thresholds-out", s(&thr),
        ],
    );
    assert_eq!(code, 0);
    let curve = std::fs::read_to_string(&out).unwrap();
    assert_eq!(curve.lines().next(), Some("L,alpha,p_hat,se,residual_bound,n"));
    assert_eq!(curve.lines().count(), 3);
    let thr = std::fs::read_to_string(&thr).unwrap();
    assert_eq!(thr.lines().next(), Some("L,alpha_star,seed"));
    assert_eq!(thr.lines().count(), 5);
}

fn write_table(dir: &Path) -> PathBuf {
    let table = dir.join("green.csv");
    assert_eq!(vmperc(dir, &["green", "--radius", "3", "--out", s(&table)]).0, 0);
    table
}

#[test]
fn green_table_check_catches_corruption() {
    let dir = tmp();
    let table = write_table(dir.path());
    let check = |p: &Path| vmperc(dir.path(), &["validate", "--only", "green.table", "--green-table", s(p)]);
    let (code, _, r) = check(&table);
    assert_eq!(code, 0);
    assert_eq!(r["details"][0]["name"], "green.table_file");

    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let row = lines.iter().position(|l| l.starts_with("1,1,0,")).unwrap();
    let mut cells: Vec<String> = lines[row].split(',').map(String::from).collect();
    let v: f64 = cells[3].parse().unwrap();
    cells[3] = (v * 1.01).to_string();
    lines[row] = cells.join(",");
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let (code, _, r) = check(&bad);
    assert_eq!(code, 1);
    assert_eq!(r["details"][0]["name"], "green.table_file");
    assert_eq!(r["details"][0]["pass"], false);
}

#[test]
fn validate_reports_are_byte_identical() {
    let dir = tmp();
    let run = || vmperc(dir.path(), &["validate", "--only", "walks", "--seed", "4"]);
    let (a, b) = (run(), run());
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_eq!(vmperc(dir.path(), &["validate", "--only", "nothing"]).0, 2);
}
