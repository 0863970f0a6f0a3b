use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

fn simproj() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_simproj"));
    cmd.env_remove("SIMPROJ_SERVER").env("RUST_BACKTRACE", "0");
    cmd
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth_graph(dir: &Path) -> PathBuf {
    let path = dir.join("graph.txt");
    ok(simproj()
        .args(["synth", "--n-u", "120", "--n-v", "90", "--edges", "1200", "--seed", "5", "--out"])
        .arg(&path)
        .output()
        .unwrap());
    path
}

#[test]
fn synth_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth_graph(dir.path());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('%')).count(), 1200);

    let stats: serde_json::Value =
        serde_json::from_str(&ok(simproj().args(["stats", "--dataset"]).arg(&path).output().unwrap())).unwrap();
    assert_eq!(stats["edges"], 1200);
    assert_eq!(stats["duplicates"], 0);
}

#[test]
fn run_writes_csv_rows_per_mode_seed_and_k() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth_graph(dir.path());
    let out = dir.path().join("results.csv");
    ok(simproj()
        .args(["run", "--mode", "simadapt,simfixed", "--fm", "0.2", "--fn", "0.2", "--filter", "1"])
        .args(["--topk", "5,max", "--seed", "3", "--reps", "2", "--format", "csv", "--dataset"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap());
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["dataset", "mode", "f_m", "f_n", "filter", "k", "wre", "one_minus_cor", "seed", "runtime_ms"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let seeds: std::collections::BTreeSet<&str> = rows.iter().map(|r| &r[8]).collect();
    assert_eq!(seeds.into_iter().collect::<Vec<_>>(), ["3", "4"]);
    assert!(rows.iter().all(|r| &r[2] == "0.2" && &r[4] == "1"));
}

#[test]
fn run_json_with_absolute_budgets_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth_graph(dir.path());
    let stdout = ok(simproj()
        .args(["run", "--mode", "simunif", "--m", "300", "--n", "500", "--topk", "10"])
        .args(["--snapshot-every", "400", "--format", "json", "--dataset"])
        .arg(&path)
        .output()
        .unwrap());
    let records: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let r = &records[0];
    assert_eq!(r["mode"], "SimUnif");
    assert_eq!(r["m"], 300);
    assert_eq!(r["n"], 500);
    // Intermediate positions only; the record itself is the end of stream.
    let ts: Vec<u64> = r["snapshots"].as_array().unwrap().iter().map(|s| s["t"].as_u64().unwrap()).collect();
    assert_eq!(ts, [400, 800]);
    assert!(r["peak_edge_sample"].as_u64().unwrap() <= 300);
}

#[test]
fn oracle_budget_overflow_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth_graph(dir.path());
    let stdout = ok(simproj()
        .args(["run", "--oracle-budget", "10", "--n", "50", "--format", "json", "--dataset"])
        .arg(&path)
        .output()
        .unwrap());
    let records: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(records[0]["oracle_overflow"], true);
    assert_eq!(records[0]["metrics_available"], false);
}

#[test]
fn stream_prints_top_pairs_with_original_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("six.txt");
    // a, b, c = 10, 20, 30; x, y, z = 7, 8, 9
    std::fs::write(&path, "% comment\n10 7\n10 8\n20 7\n20 8\n20 9\n30 8\n").unwrap();
    let stdout = ok(simproj()
        .args(["stream", "--m", "100", "--side", "u", "--topk", "2", "--batch", "4", "--dataset"])
        .arg(&path)
        .output()
        .unwrap());
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines, ["side,a,b,estimate,update_count", "U,10,20,2,2", "U,10,30,1,1"]);
}

#[test]
fn conflicting_budget_flags_are_rejected() {
    let out = simproj().args(["run", "--dataset", "x", "--fm", "0.1", "--m", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = simproj().args(["run", "--dataset", "x", "--fn", "0.1", "--exact-aggregation"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_reported() {
    let out = simproj().args(["run", "--dataset", "/no/such/graph.txt"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/graph.txt"), "{err}");
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn client_of_a_separate_server() {
    let mut child = simproj()
        .args(["serve", "--bind", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let _server = Server(child);
    let addr = line.trim().strip_prefix("listening on ").expect("address line");
    let url = format!("http://{addr}");

    let dir = tempfile::tempdir().unwrap();
    let path = synth_graph(dir.path());
    let stdout = ok(simproj()
        .args(["--server", &url, "run", "--mode", "cnhash,simple", "--topk", "5", "--dataset"])
        .arg(&path)
        .output()
        .unwrap());
    let modes: Vec<&str> = stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(modes, ["simple", "CnHash"]);

    let out = simproj().args(["--server", "http://127.0.0.1:1", "stats", "--dataset"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
}
