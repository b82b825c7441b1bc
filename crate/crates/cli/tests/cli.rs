use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn seqopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqopt")).args(args).output().expect("spawn seqopt")
}

fn ok(args: &[&str]) -> Output {
    let out = seqopt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn header(path: &str) -> (usize, usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut it = text.lines().next().unwrap().split_whitespace().map(|t| t.parse().unwrap());
    (it.next().unwrap(), it.next().unwrap())
}

#[test]
fn generate_gold_subset() {
    let d = TempDir::new().unwrap();
    let g = p(&d, "g.txt");
    ok(&["generate", "--family", "gold", "--n", "6", "--k", "4", "--samples", "2000", "--seed", "1", "--out", &g]);
    assert_eq!(header(&g), (63, 4));
}

#[test]
fn generate_random_round_trips() {
    let d = TempDir::new().unwrap();
    let a = p(&d, "a.txt");
    let b = p(&d, "b.txt");
    ok(&["generate", "--family", "random", "--l", "127", "--k", "4", "--seed", "7", "--out", &a]);
    // optimizing zero iterations rewrites the parsed set unchanged
    ok(&["optimize", "--init", &a, "--max-iterations", "0", "--out", &b, "--summary", &p(&d, "s.json")]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let stdout = ok(&["generate", "--family", "random", "--l", "127", "--k", "4", "--seed", "7"]).stdout;
    assert_eq!(stdout, std::fs::read(&a).unwrap());
}

#[test]
fn mseq_file_has_unit_psl() {
    let d = TempDir::new().unwrap();
    let m = p(&d, "m.txt");
    ok(&["generate", "--family", "mseq", "--n", "10", "--out", &m]);
    assert_eq!(header(&m), (1023, 1));
    let r: Value = serde_json::from_slice(&ok(&["evaluate", &m]).stdout).unwrap();
    assert_eq!(r["psl"], 1);
    assert_eq!(r["isl"], 1022);
}

#[test]
fn evaluate_all_ones() {
    let d = TempDir::new().unwrap();
    let f = p(&d, "ones.txt");
    std::fs::write(&f, "4 1\n0000\n").unwrap();
    let out = p(&d, "r.json");
    ok(&["evaluate", &f, "--out", &out]);
    let r = json(&out);
    assert_eq!((r["isl"].as_i64(), r["psl"].as_i64()), (Some(48), Some(4)));
}

#[test]
fn pipeline_is_self_consistent_and_descends() {
    let d = TempDir::new().unwrap();
    let (x1, s1, t1) = (p(&d, "x1.txt"), p(&d, "s1.json"), p(&d, "t1.csv"));
    ok(&["optimize", "--l", "31", "--k", "3", "--init-seed", "5", "--seed", "1", "--out", &x1, "--summary", &s1, "--trace", &t1]);
    let (x4, s4) = (p(&d, "x4.txt"), p(&d, "s4.json"));
    ok(&["optimize", "--init", &x1, "--n", "4", "--seed", "2", "--out", &x4, "--summary", &s4]);
    let (a, b) = (json(&s1), json(&s4));
    for key in ["L", "K", "N", "seed", "isl_initial", "isl_final", "psl_final", "iterations", "status"] {
        assert!(a.get(key).is_some(), "missing {key}");
    }
    assert_eq!(a["status"], "converged");
    assert_eq!(b["isl_initial"], a["isl_final"]);
    assert!(b["isl_final"].as_i64() <= a["isl_final"].as_i64());
    for (set, summary) in [(&x1, &a), (&x4, &b)] {
        let r: Value = serde_json::from_slice(&ok(&["evaluate", set]).stdout).unwrap();
        assert_eq!(r["isl"], summary["isl_final"]);
        assert_eq!(r["psl"], summary["psl_final"]);
    }
    let trace = std::fs::read_to_string(&t1).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("t,isl,subset_size,nodes,micros"));
    let isl: Vec<i64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(isl.len() as i64, a["iterations"].as_i64().unwrap());
    assert!(isl.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn summaries_are_reproducible_from_saved_config() {
    let d = TempDir::new().unwrap();
    let cfg = p(&d, "run.toml");
    let (s1, s2) = (p(&d, "s1.json"), p(&d, "s2.json"));
    let (o1, o2) = (p(&d, "o1.txt"), p(&d, "o2.txt"));
    ok(&[
        "optimize", "--l", "23", "--k", "2", "--init-seed", "3", "--n", "6", "--seed", "4", "--solver", "bnb",
        "--save-config", &cfg, "--out", &o1, "--summary", &s1,
    ]);
    ok(&["optimize", "--config", &cfg, "--out", &o2, "--summary", &s2]);
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());
    assert_eq!(std::fs::read(&o1).unwrap(), std::fs::read(&o2).unwrap());
}

#[test]
fn exhausted_budget_is_success() {
    let d = TempDir::new().unwrap();
    let s = p(&d, "s.json");
    ok(&["optimize", "--l", "63", "--k", "4", "--time-budget", "0", "--out", &p(&d, "o.txt"), "--summary", &s]);
    assert_eq!(json(&s)["status"], "budget");
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let bad = p(&d, "bad.txt");
    std::fs::write(&bad, "3 1\n01x\n").unwrap();
    assert_eq!(seqopt(&["evaluate", &bad]).status.code(), Some(3));
    assert_eq!(seqopt(&["optimize", "--init", &bad]).status.code(), Some(3));
    assert_eq!(seqopt(&["evaluate", &p(&d, "missing.txt")]).status.code(), Some(3));
    assert_eq!(seqopt(&["optimize", "--l", "7"]).status.code(), Some(2));
    assert_eq!(seqopt(&["generate", "--family", "gold", "--n", "8"]).status.code(), Some(2));
    assert_eq!(seqopt(&["generate", "--family", "nope"]).status.code(), Some(2));
    assert_eq!(seqopt(&["optimize", "--l", "7", "--k", "2", "--n", "15"]).status.code(), Some(2));
    let cfg = p(&d, "c.toml");
    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(seqopt(&["optimize", "--config", &cfg]).status.code(), Some(3));
}

#[test]
fn benchmark_rows() {
    let out = ok(&["benchmark", "--l", "31", "--k", "2", "--n", "1,4,10", "--trials", "3"]).stdout;
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("L,K,N,trials,solver,median_micros,median_nodes,max_nodes"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let n: u32 = r[2].parse().unwrap();
        let max_nodes: u64 = r[7].parse().unwrap();
        assert!(max_nodes <= 1 << (n + 1));
    }
    assert_eq!(rows[0][2], "1");
}

#[test]
fn repro_writes_stage_artifacts() {
    let d = TempDir::new().unwrap();
    let dir = p(&d, "repro");
    let out = ok(&[
        "repro-table1", "--l", "31", "--k", "2", "--starts", "2", "--stages", "4", "--gold-samples", "200",
        "--out-dir", &dir,
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
    let table = std::fs::read_to_string(Path::new(&dir).join("table1.csv")).unwrap();
    assert!(table.starts_with("method,N,best_isl,median_isl,worst_isl\n"));
    for stage in ["n1", "n4"] {
        for f in ["run0.txt", "run1.csv", "run1.json"] {
            assert!(Path::new(&dir).join(stage).join(f).exists());
        }
    }
    let bist = json(Path::new(&dir).join("n1/run0.json"));
    let bcd = json(Path::new(&dir).join("n4/run0.json"));
    assert!(bcd["isl_final"].as_i64() <= bist["isl_final"].as_i64());
    assert!(Path::new(&dir).join("gold.txt").exists());
}
