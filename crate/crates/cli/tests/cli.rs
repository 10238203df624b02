use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ggm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ggm"))
        .args(args)
        .output()
        .expect("run ggm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `n x p` standard normals from a fixed LCG + Box-Muller, with column 3
/// replaced by twice column 0.
fn write_collinear_csv(path: &Path, n: usize, p: usize) {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut uniform = move || {
        state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    let mut text = (1..=p).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",") + "\n";
    for _ in 0..n {
        let mut row: Vec<f64> = (0..p)
            .map(|_| {
                let (u, v) = (uniform(), uniform());
                (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
            })
            .collect();
        row[3] = 2.0 * row[0];
        text += &row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn pen_table_rows_and_determinism() {
    let a = ggm(&["pen-table", "--n", "15", "--p", "10", "--K", "2", "--dmax", "4"]);
    assert!(a.status.success(), "{}", stderr(&a));
    let out = stdout(&a);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "d,pen");
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1], "0,0");
    let pen1: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((pen1 - 20.5947313).abs() < 1e-6);
    assert!(out.starts_with("# config={"));
    let b = ggm(&["pen-table", "--n", "15", "--p", "10", "--K", "2", "--dmax", "4"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn pen_table_rejects_large_dmax() {
    let o = ggm(&["pen-table", "--n", "15", "--p", "10", "--dmax", "14"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("penalty undefined: n\u{2212}d\u{2212}1 \u{2264} 0"), "{}", stderr(&o));
    let o = ggm(&["pen-table", "--n", "15", "--p", "10", "--dmax", "2", "--K", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_emits_schema_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    write_collinear_csv(&data, 15, 10);
    let out = dir.path().join("r.json");
    let args = [
        "estimate", "--data", data.to_str().unwrap(), "--family", "deg-directed",
        "--dmax", "4", "--K", "2", "--out", out.to_str().unwrap(),
    ];
    let o = ggm(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    // D = 4 at n = 15 violates both degree bounds: warned, not fatal
    assert!(stderr(&o).contains("warning: degree bound"));
    let first = std::fs::read(&out).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    let theta = v["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 10);
    for (j, row) in theta.iter().enumerate() {
        assert_eq!(row.as_array().unwrap().len(), 10);
        assert_eq!(row[j].as_f64(), Some(0.0));
    }
    assert_eq!(v["config"]["family"], "deg-directed");
    assert_eq!(v["config"]["n"], 15);
    assert!(v["crit"].as_f64().unwrap() >= 0.0);
    // the duplicated pair (variables 1 and 4, one-based) is an arc both ways
    let arcs: Vec<(u64, u64)> = v["arcs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a[0].as_u64().unwrap(), a[1].as_u64().unwrap()))
        .collect();
    assert!(arcs.contains(&(1, 4)) && arcs.contains(&(4, 1)), "{arcs:?}");

    assert!(ggm(&args).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn estimate_undirected_default_search() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    write_collinear_csv(&data, 20, 6);
    let o = ggm(&["estimate", "--data", data.to_str().unwrap(), "--family", "deg", "--dmax", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["strategy"], "branch-and-bound");
    let edges = v["edges"].as_array().unwrap();
    assert!(edges.iter().any(|e| e[0] == 1 && e[1] == 4), "{edges:?}");
}

#[test]
fn estimate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2,3\n4,5,6\n7,oops,9\n").unwrap();
    let o = ggm(&["estimate", "--data", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let data = dir.path().join("x.csv");
    write_collinear_csv(&data, 15, 5);
    let o = ggm(&["estimate", "--data", data.to_str().unwrap(), "--family", "deg", "--strategy", "exact-decomposed"]);
    assert_eq!(o.status.code(), Some(2));

    let o = ggm(&["estimate", "--data", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = ggm(&["estimate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_requires_a_density() {
    let o = ggm(&["simulate", "--n", "15", "--p", "10", "--graphs", "1", "--reps", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ggm(&["simulate", "--n", "15", "--p", "10", "--q", "0.1", "--s", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_smoke_writes_self_describing_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let start = std::time::Instant::now();
    let o = ggm(&[
        "simulate", "--n", "15", "--p", "10", "--q", "0.10", "--graphs", "1", "--reps", "2",
        "--K", "2", "--family", "deg", "--dmax", "4", "--methods", "ours,mb", "--seed", "1",
        "--out", prefix.to_str().unwrap(),
    ]);
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("r.Risk"));
    let report: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 1);
    assert_eq!(report["config"]["density"]["q"], 0.1);
    assert!(report["config"].get("threads").is_none());
    for m in ["ours", "mb"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("run_{m}.csv"))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# method={m}"));
        assert!(lines[1].starts_with("# config={") && lines[1].contains("\"seed\":1"));
        assert_eq!(lines[2], "graph_id,r_risk,power,fdr,mean_deg,n_reps");
        assert!(lines.last().unwrap().starts_with("all,"));
    }
}

#[test]
fn simulate_sparsity_index_sets_edge_probability() {
    let o = ggm(&["simulate", "--n", "15", "--p", "10", "--s", "1", "--graphs", "1", "--reps", "1", "--methods", "ours"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["density"]["s"], 1.0);
    assert_eq!(v["methods"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "n = 15\np = 10\nK = 3\ndmax = 2\n").unwrap();
    let o = ggm(&["--config", cfg.to_str().unwrap(), "pen-table", "--dmax", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("\"k\":3.0") && out.contains("\"dmax\":3"), "{out}");
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 5);

    std::fs::write(&cfg, "n = 15\nsurprise = 1\n").unwrap();
    let o = ggm(&["--config", cfg.to_str().unwrap(), "pen-table", "--p", "10", "--dmax", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("surprise"));
}

#[test]
fn prop1_small_run_and_hypothesis_warning() {
    let o = ggm(&["prop1", "--n", "10", "--p", "12", "--dmax", "3", "--reps", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: p=12"));
    let out = stdout(&o);
    assert!(out.contains("penalty,size,count,fraction"));
    assert!(out.lines().any(|l| l.starts_with("deflated,")));
    assert!(stderr(&o).contains("median gap"));
}

#[test]
fn prop1_defaults_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p1.csv");
    let o = ggm(&["prop1", "--reps", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stderr(&o).contains("warning"));
    let gap_line = stdout(&o).lines().find(|l| l.starts_with("median gap")).unwrap().to_string();
    let gap: f64 = gap_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(gap > 0.0, "{gap_line}");
    assert!(std::fs::read_to_string(&out).unwrap().contains("# hypothesis_holds=true"));
}

#[test]
fn zero_threads_is_a_usage_error() {
    let o = ggm(&["--threads", "0", "pen-table", "--n", "15", "--p", "10", "--dmax", "2"]);
    assert_eq!(o.status.code(), Some(2));
}
