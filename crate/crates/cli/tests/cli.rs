//! End-to-end runs of the `cpm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpm_core::oracle::{naive_lmsr_cost, naive_lmsr_price, DenseState};
use cpm_core::{Event, SetSystem};
use tempfile::TempDir;

fn cpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Writes `config`, runs `init`, and returns the snapshot path.
    fn init(&self, config: &str) -> PathBuf {
        let cfg = self.file("config.json", config);
        let snap = self.path("market.cpt");
        let out = cpm(&["init", "--config", s(&cfg), "--out", s(&snap)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        snap
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value printed after `key` and a tab.
fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no `{key}` in {report}"))
        .parse()
        .unwrap()
}

const LMSR4: &str = r#"{"system":{"kind":"interval","n":4},"market":{"kind":"lmsr","b":1.0}}"#;

#[test]
fn init_reports_size_of_large_segment_tree() {
    let ws = Workspace::new();
    let cfg = ws.file("big.json", r#"{"system":{"kind":"interval","n":1048576},"market":{"kind":"lmsr","b":2.0}}"#);
    let out = cpm(&["init", "--config", s(&cfg), "--out", s(&ws.path("big.cpt"))]);
    assert_eq!(code(&out), 0);
    let report = stdout(&out);
    assert_eq!(field(&report, "n"), 1048576.0);
    assert_eq!(field(&report, "nodes"), (2 * 1048576 - 1) as f64);
    assert!(report.contains("build_ms\t"));
}

#[test]
fn init_accepts_grid_qmsr() {
    let ws = Workspace::new();
    let snap = ws.init(r#"{"system":{"kind":"grid","side":4,"dim":2},"market":{"kind":"qmsr","b":1.0}}"#);
    let out = cpm(&["price", "--snap", s(&snap), "--event", r#"{"box":{"lo":[0,0],"hi":[1,3]}}"#]);
    assert_eq!(code(&out), 0);
    assert!((field(&stdout(&out), "price") - 0.5).abs() < 1e-12);
}

#[test]
fn malformed_config_is_a_usage_error() {
    let ws = Workspace::new();
    let cfg = ws.file("bad.json", "{ not json");
    let out = cpm(&["init", "--config", s(&cfg), "--out", s(&ws.path("x.cpt"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));
    assert!(!ws.path("x.cpt").exists());
}

#[test]
fn unknown_arguments_exit_with_usage_code() {
    assert_eq!(code(&cpm(&["price", "--bogus"])), 1);
    assert_eq!(code(&cpm(&["--help"])), 0);
}

#[test]
fn cost_and_buy_match_the_four_outcome_example() {
    let ws = Workspace::new();
    let snap = ws.init(LMSR4);
    let quote = cpm(&["cost", "--snap", s(&snap), "--event", r#"{"explicit":[0]}"#, "--shares", "1"]);
    assert!((field(&stdout(&quote), "cost") - (0.25 * std::f64::consts::E + 0.75).ln()).abs() < 1e-12);
    let bought = cpm(&["buy", "--snap", s(&snap), "--event", r#"{"interval":{"lo":0,"hi":3}}"#, "--shares", "1"]);
    assert!((field(&stdout(&bought), "paid") - 1.0).abs() < 1e-12);
    // A sale is a negative purchase and persists in the snapshot.
    let sold = cpm(&["buy", "--snap", s(&snap), "--event", r#"{"explicit":[1]}"#, "--shares", "-2"]);
    assert_eq!(code(&sold), 0);
    let p = cpm(&["price", "--snap", s(&snap), "--event", r#"{"explicit":[1]}"#]);
    let e2 = (-2.0f64).exp();
    assert!((field(&stdout(&p), "price") - e2 / (3.0 + e2)).abs() < 1e-12);
}

#[test]
fn empty_log_is_a_no_op() {
    let ws = Workspace::new();
    let snap = ws.init(LMSR4);
    let log = ws.file("empty.jsonl", "");
    let out = cpm(&["replay", "--snap", s(&snap), "--log", s(&log)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("# records=0 cash=0.000000000000"));
}

#[test]
fn replay_matches_oracle_expectations() {
    let sys = SetSystem::interval(4).unwrap();
    let mut dense = DenseState::zeros(sys);
    let single = Event::explicit([0]);
    let pair = Event::interval(1.0, 2.0);
    let first = naive_lmsr_cost(&dense, &single, 1.0, 1.0);
    dense.buy(&single, 1.0);
    let second = naive_lmsr_price(&dense, &pair, 1.0);
    let third = naive_lmsr_cost(&dense, &pair, -0.5, 1.0);

    let ws = Workspace::new();
    let snap = ws.init(LMSR4);
    let log = ws.file(
        "trades.jsonl",
        &format!(
            "{{\"op\":\"buy\",\"event\":{{\"explicit\":[0]}},\"shares\":1,\"expected\":{first}}}\n\
             {{\"op\":\"price\",\"event\":{{\"interval\":{{\"lo\":1,\"hi\":2}}}},\"expected\":{second}}}\n\
             {{\"op\":\"buy\",\"event\":{{\"interval\":{{\"lo\":1,\"hi\":2}}}},\"shares\":-0.5,\"expected\":{third}}}\n"
        ),
    );
    let out = cpm(&["--seed", "42", "replay", "--snap", s(&snap), "--log", s(&log)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout(&out);
    assert!(report.starts_with("# cpm replay seed=42\n"));
    assert!(report.contains(&format!("# records=3 cash={:.12}", first + third)));
}

#[test]
fn replay_expectation_mismatch_exits_with_assertion_code() {
    let ws = Workspace::new();
    let snap = ws.init(LMSR4);
    let log = ws.file("bad.jsonl", "{\"op\":\"buy\",\"event\":{\"interval\":{\"lo\":0,\"hi\":3}},\"shares\":1,\"expected\":0.9}\n");
    let out = cpm(&["replay", "--snap", s(&snap), "--log", s(&log)]);
    assert_eq!(code(&out), 2);
    // The record is still reported before the failure.
    assert!(stdout(&out).contains("1\tbuy\t1.000000000000"));
}

#[test]
fn replay_rejects_malformed_records() {
    let ws = Workspace::new();
    let snap = ws.init(LMSR4);
    let log = ws.file("bad.jsonl", "{\"op\":\"sell\"}\n");
    assert_eq!(code(&cpm(&["replay", "--snap", s(&snap), "--log", s(&log)])), 1);
    let corrupt = ws.file("corrupt.cpt", "CPT1 but not really");
    let empty = ws.file("e.jsonl", "");
    assert_eq!(code(&cpm(&["replay", "--snap", s(&corrupt), "--log", s(&empty)])), 1);
}

#[test]
fn leaving_the_power_interior_is_a_numerical_error() {
    let ws = Workspace::new();
    let snap = ws.init(r#"{"system":{"kind":"interval","n":4},"market":{"kind":"power","b":1.0}}"#);
    let before = std::fs::read(&snap).unwrap();
    let out = cpm(&["buy", "--snap", s(&snap), "--event", r#"{"explicit":[0]}"#, "--shares", "5"]);
    assert_eq!(code(&out), 3);
    assert_eq!(std::fs::read(&snap).unwrap(), before, "failed buy must not touch the snapshot");
}

#[test]
fn replay_is_deterministic_and_survives_a_snapshot_roundtrip() {
    let ws = Workspace::new();
    let snap = ws.init(r#"{"system":{"kind":"interval","n":64},"market":{"kind":"qmsr","b":3.0}}"#);
    let head = "{\"op\":\"buy\",\"event\":{\"interval\":{\"lo\":3,\"hi\":40}},\"shares\":0.7}\n\
                {\"op\":\"buy\",\"event\":{\"explicit\":[1,5,9]},\"shares\":-0.2}\n";
    let tail = "{\"op\":\"price\",\"event\":{\"interval\":{\"lo\":0,\"hi\":10}}}\n\
                {\"op\":\"cost\",\"event\":{\"interval\":{\"lo\":5,\"hi\":6}},\"shares\":2}\n";
    let whole = ws.file("whole.jsonl", &format!("{head}{tail}"));
    let first = cpm(&["replay", "--snap", s(&snap), "--log", s(&whole)]);
    let again = cpm(&["replay", "--snap", s(&snap), "--log", s(&whole)]);
    assert_eq!(first.stdout, again.stdout);

    let mid = ws.path("mid.cpt");
    let head_log = ws.file("head.jsonl", head);
    let tail_log = ws.file("tail.jsonl", tail);
    assert_eq!(code(&cpm(&["replay", "--snap", s(&snap), "--log", s(&head_log), "--out", s(&mid)])), 0);
    let resumed = stdout(&cpm(&["replay", "--snap", s(&mid), "--log", s(&tail_log)]));
    let results = |report: &str| -> Vec<String> {
        report
            .lines()
            .filter(|l| l.contains("\tprice\t") || l.contains("\tcost\t"))
            .map(|l| l.split('\t').skip(1).take(3).collect::<Vec<_>>().join("\t"))
            .collect()
    };
    assert_eq!(results(&stdout(&first)), results(&resumed));
}

#[test]
fn log_pool_swaps_through_the_cli() {
    let ws = Workspace::new();
    let snap = ws.init(r#"{"system":{"kind":"interval","n":2},"market":{"kind":"cfmm","function":{"kind":"log","b":1.0}}}"#);
    let ln2 = format!("{}", 2f64.ln());
    let out = cpm(&[
        "swap", "--snap", s(&snap), "--minus", r#"{"explicit":[0]}"#, "--plus", r#"{"explicit":[1]}"#, "--scale", &ln2, "--dir", "fwd",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!((field(&stdout(&out), "released") - 1.5f64.ln()).abs() < 1e-10);
    // Scoring operations do not apply to pools.
    assert_eq!(code(&cpm(&["price", "--snap", s(&snap), "--event", r#"{"explicit":[0]}"#])), 1);
}

#[test]
fn named_sets_and_multires_markets() {
    let ws = Workspace::new();
    let explicit = ws.init(
        r#"{"system":{"kind":"explicit","n":4,"sets":{"low":[0,1],"high":[2,3]}},
            "tree":{"hierarchy":{"levels":[{"cells":[{"range":[0,3]}]},{"cells":[[0,1],[2,3]]},{"cells":[[0],[1],[2],[3]]}]}},
            "market":{"kind":"lmsr","b":1.0}}"#,
    );
    let out = cpm(&["price", "--snap", s(&explicit), "--event", "low"]);
    assert!((field(&stdout(&out), "price") - 0.5).abs() < 1e-12);
    assert_eq!(code(&cpm(&["price", "--snap", s(&explicit), "--event", "middle"])), 1);

    let ws = Workspace::new();
    let mr = ws.init(
        r#"{"system":{"kind":"interval","n":8},
            "market":{"kind":"multires","rule":"lmsr","b":1.0,
                      "hierarchy":{"levels":[{"b":2.0,"cells":[{"range":[0,7]}]},{"cells":[{"range":[0,3]},{"range":[4,7]}]},
                                             {"b":0.5,"cells":[[0],[1],[2],[3],[4],[5],[6],[7]]}]}}}"#,
    );
    let bought = cpm(&["buy", "--snap", s(&mr), "--event", r#"{"interval":{"lo":0,"hi":2}}"#, "--shares", "1"]);
    assert_eq!(code(&bought), 0, "{}", String::from_utf8_lossy(&bought.stderr));
    let halves = ["{\"interval\":{\"lo\":0,\"hi\":3}}", "{\"interval\":{\"lo\":4,\"hi\":7}}"];
    let total: f64 = halves.iter().map(|e| field(&stdout(&cpm(&["price", "--snap", s(&mr), "--event", e])), "price")).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn bench_prints_seeded_csv() {
    let out = cpm(&["bench", "--kind", "interval", "--n", "1024,16384", "--ops", "500", "--seed", "9"]);
    assert_eq!(code(&out), 0);
    let report = stdout(&out);
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("# cpm bench kind=interval ops=500 seed=9"));
    assert_eq!(lines.next(), Some("n,median_visits,p99_visits,ns_per_op"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!(row[1] <= 4.0 * row[0].log2() + 2.0, "{row:?}");
    }
    // Visit columns are a function of the seed alone.
    let again = stdout(&cpm(&["bench", "--kind", "interval", "--n", "1024,16384", "--ops", "500", "--seed", "9"]));
    let visits = |r: &str| -> Vec<String> { r.lines().skip(2).map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect() };
    assert_eq!(visits(&report), visits(&again));
}

#[test]
fn bench_grid_grows_like_square_root() {
    let out = stdout(&cpm(&["bench", "--kind", "grid", "--n", "4096,16384", "--ops", "1000", "--seed", "3"]));
    let medians: Vec<f64> = out.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let ratio = medians[1] / medians[0];
    assert!((1.6..=2.6).contains(&ratio), "{ratio}");
}

#[test]
fn bench_rejects_too_few_ops_and_non_square_grids() {
    assert_eq!(code(&cpm(&["bench", "--kind", "interval", "--n", "1024", "--ops", "0"])), 1);
    assert_eq!(code(&cpm(&["bench", "--kind", "grid", "--n", "1000", "--ops", "100"])), 1);
}
