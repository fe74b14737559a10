use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frozen-mis"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("FROZEN_THRESHOLD_THREADS").output().unwrap()
}

fn csv_rows(out: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(out);
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

fn column(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap()
}

fn assert_finite_cells(out: &[u8]) {
    let (_, rows) = csv_rows(out);
    for row in rows {
        for cell in row {
            if let Ok(x) = cell.parse::<f64>() {
                assert!(x.is_finite(), "cell {cell}");
            }
        }
    }
}

#[test]
fn thresholds_row_is_pinned() {
    let o = run(&["thresholds", "--d", "100", "--n", "1000000"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 1);
    let get = |c: &str| rows[0][column(&head, c)].parse::<f64>().unwrap();
    // Regression values from the first verified run.
    for (c, want) in [
        ("alpha_fm", 0.0680293008584194),
        ("alpha_star", 0.06744546203330791),
        ("c_star", 0.11086562808112001),
        ("mis_location", 67443.93036805264),
    ] {
        assert!((get(c) / want - 1.0).abs() < 1e-10, "{c}: {}", get(c));
    }
    assert!(get("c_star_fd_rel_diff") < 1e-8);
    assert_eq!(rows[0][column(&head, "in_proven_regime")], "false");
    assert_finite_cells(&o.stdout);
}

#[test]
fn small_degree_warns_with_exit_two() {
    let o = run(&["thresholds", "--d", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(!o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_64() {
    let o = run(&["curve", "--d", "100", "--alpha-min", "0.05", "--alpha-max", "0.09", "--points", "0"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
    assert_eq!(run(&["thresholds"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["simulate", "--d", "3", "--n", "5", "--trials", "1", "--seed", "0"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn computation_errors_exit_one() {
    let o = run(&["bethe", "--d", "50", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
}

#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let args = ["simulate", "--d", "3", "--n", "20", "--trials", "50", "--seed", "7"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    for threads in ["1", "4"] {
        let b = bin().args(args).env("FROZEN_THRESHOLD_THREADS", threads).output().unwrap();
        assert_eq!(a.stdout, b.stdout);
    }
    let (head, rows) = csv_rows(&a.stdout);
    assert_eq!(rows.len(), 50);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[column(&head, "trial")], i.to_string());
        assert_eq!(row[column(&head, "seed")], (7 + i).to_string());
        let iota: f64 = row[column(&head, "intensity")].parse().unwrap();
        let mis: f64 = row[column(&head, "mis_size")].parse().unwrap();
        assert!(iota >= mis);
        assert_eq!(row[column(&head, "valid")], "true");
    }
    assert_finite_cells(&a.stdout);
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let o = bin()
        .args(["simulate", "--d", "3", "--n", "10", "--trials", "2", "--seed", "1"])
        .env("FROZEN_THRESHOLD_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn out_file_manifest_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let o = run(&["simulate", "--d", "4", "--n", "16", "--trials", "12", "--seed", "99", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let manifest_path = dir.path().join("sim.csv.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 99);
    assert_eq!(m["schema_version"], 1);
    assert!(m["timestamp"].as_str().unwrap().ends_with('Z'));
    assert_eq!(m["columns"][0], "trial");

    let again = dir.path().join("again.csv");
    let r = run(&["replay", manifest_path.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn replay_of_float_output_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = run(&["bethe", "--d", "100", "--lambda", "398", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = run(&["replay", dir.path().join("b.csv.manifest.json").to_str().unwrap()]);
    assert_eq!(r.stdout, std::fs::read(&out).unwrap());
}

#[test]
fn json_output_carries_manifest() {
    let o = run(&["forcing", "--n", "3", "--d", "3", "--k", "1", "--total", "2,1,1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["manifest"]["command"], "forcing");
    let row = &v["rows"][0];
    let p = row["probability"].as_f64().unwrap();
    let e = row["enumerated"].as_f64().unwrap();
    assert!((p - e).abs() < 1e-12);
}

#[test]
fn csv_fields_with_commas_are_quoted() {
    let o = run(&["forcing", "--n", "3", "--d", "3", "--k", "1", "--total", "2,1,1"]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(text.contains("\"2,1,1\""));
    assert!(text.contains("\r\n"));
    let (head, rows) = csv_rows(&o.stdout);
    assert_eq!(rows[0][column(&head, "total")], "2,1,1");
}

#[test]
fn curve_leaves_unreachable_points_empty() {
    let o = run(&["curve", "--d", "100", "--alpha-min", "0.05", "--alpha-max", "0.09", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][column(&head, "phi_star")], "");
    let last: f64 = rows[4][column(&head, "phi_star")].parse().unwrap();
    let fm: f64 = rows[4][column(&head, "phi_indep")].parse().unwrap();
    assert!(last < fm);
    assert_finite_cells(&o.stdout);
}

#[test]
fn hessian_long_format() {
    let o = run(&["hessian", "--d", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let (head, rows) = csv_rows(&o.stdout);
    let q = column(&head, "quantity");
    assert_eq!(rows.iter().filter(|r| r[q] == "eigenvalue").count(), 9);
    let max = rows.iter().find(|r| r[q] == "restricted_max").unwrap();
    assert!(max[column(&head, "value")].parse::<f64>().unwrap() < 0.0);
    assert_finite_cells(&o.stdout);
}
