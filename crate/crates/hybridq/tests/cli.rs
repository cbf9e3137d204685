use std::path::Path;
use std::process::{Command, Output};

fn hybridq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridq")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hybridq(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_ingest_query_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let (ds, st) = (tmp.path().join("ds"), tmp.path().join("st"));
    ok(&["generate", "--dataset", p(&ds), "--blocks", "32", "--seed", "1"]);
    ok(&["ingest", "--dataset", p(&ds), "--state", p(&st)]);

    let jsonl = ok(&["query", "--state", p(&st), "--format", "jsonl", "--emit-vo", "SELECT * FROM entries WHERE timestamp BETWEEN 0 AND 99999999999"]);
    let lines: Vec<serde_json::Value> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 129);
    assert_eq!(lines[0]["entry_id"], 0);
    let vo = lines[128]["vo"].as_str().unwrap();
    assert!(vo.starts_with("10"), "range VO tag");

    let csv = ok(&["query", "--state", p(&st), "--format", "csv", "SELECT * FROM entries WHERE entry_id = 5"]);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("entry_id,amount,addresses,timestamp,imagecid,videocid"));

    ok(&["query", "--state", p(&st), "DELETE FROM entries WHERE entry_id = 5"]);
    let gone = hybridq(&["query", "--state", p(&st), "SELECT * FROM entries WHERE entry_id = 5"]);
    assert_eq!(gone.status.code(), Some(1));

    let table = ok(&["verify", "--state", p(&st)]);
    assert!(table.starts_with("ok: 34 blocks"), "{table}");
    let gas = std::fs::read_to_string(st.join("gas.csv")).unwrap();
    assert!(gas.starts_with("op,writes,reads,compute,total_gas\ningest,"));
    assert!(gas.lines().nth(2).unwrap().starts_with("delete,"));
}

#[test]
fn usage_and_sql_errors_exit_2() {
    assert_eq!(hybridq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hybridq(&["bench", "--index-variant", "btree", "--dataset", "x"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let out = hybridq(&["query", "--state", p(tmp.path()), "SELECT SUM(amount) FROM entries"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
}

#[test]
fn verify_detects_corrupted_payload() {
    let tmp = tempfile::tempdir().unwrap();
    let (ds, st) = (tmp.path().join("ds"), tmp.path().join("st"));
    ok(&["generate", "--dataset", p(&ds), "--blocks", "8", "--image-fraction", "1", "--video-fraction", "0"]);
    ok(&["ingest", "--dataset", p(&ds), "--state", p(&st)]);
    let obj = walk_first_file(&st.join("objects"));
    let mut bytes = std::fs::read(&obj).unwrap();
    bytes[0] ^= 1;
    std::fs::write(&obj, bytes).unwrap();
    let out = hybridq(&["verify", "--state", p(&st)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrity"));
}

#[test]
fn tampered_block_log_fails_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let (ds, st) = (tmp.path().join("ds"), tmp.path().join("st"));
    ok(&["generate", "--dataset", p(&ds), "--blocks", "8", "--image-fraction", "0", "--video-fraction", "0"]);
    ok(&["ingest", "--dataset", p(&ds), "--state", p(&st)]);
    let log = st.join("blocks.bin");
    let mut bytes = std::fs::read(&log).unwrap();
    let n = bytes.len();
    bytes[n - 40] ^= 1;
    std::fs::write(&log, bytes).unwrap();
    assert_eq!(hybridq(&["verify", "--state", p(&st)]).status.code(), Some(1));
}

#[test]
fn bench_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let csv = ok(&["bench", "--dataset", p(&ds), "--seed", "3", "--scales", "4,16", "--format", "csv"]);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("n_blocks,entries,index_variant,converted,insert_cpu_ms"));
    assert_eq!(lines.count(), 2);
    let jsonl = ok(&["bench", "--dataset", p(&ds), "--scales", "16", "--format", "jsonl", "--index-variant", "bplus-only"]);
    let row: serde_json::Value = serde_json::from_str(jsonl.trim()).unwrap();
    assert_eq!(row["index_variant"], "bplus-only");
    assert_eq!(row["converted"], false);
    assert!(ok(&["bench", "--dataset", p(&ds), "--scales", "16"]).contains("converted"));
}

fn walk_first_file(dir: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(dir).unwrap().flatten().map(|e| e.path()).collect();
    dirs.sort();
    for d in dirs {
        if d.is_file() {
            return d;
        }
        let mut files: Vec<_> = std::fs::read_dir(&d).unwrap().flatten().map(|e| e.path()).collect();
        files.sort();
        if let Some(f) = files.into_iter().find(|f| f.is_file()) {
            return f;
        }
    }
    panic!("no object files");
}
