use std::path::PathBuf;
use std::process::{Command, Output};

fn hemem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hemem")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn repo(rel: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", rel].iter().collect();
    p.to_string_lossy().into_owned()
}

const SMALL: &[&str] = &["--trials", "2", "--bconv-columns", "32", "--oracle-limbs", "1"];

#[test]
fn verify_passes_on_small_params() {
    let params = repo("params/small-n1024.toml");
    let mut args = vec!["--params", params.as_str(), "verify"];
    args.extend_from_slice(SMALL);
    let o = hemem(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("PASS ntt") && s.contains("PASS bconv") && s.contains("PASS keyswitch"), "{s}");
}

#[test]
fn injected_fault_fails_verification() {
    let params = repo("params/small-n1024.toml");
    let mut args = vec!["--params", params.as_str(), "verify", "--inject-fault", "twiddle"];
    args.extend_from_slice(SMALL);
    let o = hemem(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn input_errors_exit_two() {
    assert_eq!(hemem(&["--params", "/nonexistent.toml", "verify"]).status.code(), Some(2));
    assert_eq!(hemem(&["roofline", "--trace", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(hemem(&["--machine", "/nonexistent.toml", "plan"]).status.code(), Some(2));
    assert_eq!(hemem(&["plan", "--n", "1000"]).status.code(), Some(2));
    assert_eq!(hemem(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let params = repo("params/small-n1024.toml");
    for args in [
        vec!["--format", "structured", "--params", params.as_str(), "verify", "--trials", "1", "--bconv-columns", "16"],
        vec!["--format", "csv", "plan", "--l", "12"],
        vec!["analyze", "--pipelined"],
        vec!["trace"],
    ] {
        let a = hemem(&args);
        let b = hemem(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn plan_reports_seven_at_l12() {
    let s = stdout(&hemem(&["--format", "structured", "plan", "--l", "12", "--alpha", "12"]));
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["schema"], "hemem.plan/1");
    let stage3 = v["plans"].as_array().unwrap().iter().find(|p| p["sequence"] == "ks_stage3").unwrap();
    assert_eq!(stage3["b_star"], 7);
}

#[test]
fn roofline_totals_and_csv() {
    let s = stdout(&hemem(&["roofline", "--total-bytes", "53e9"]));
    assert!(s.contains("bound 8.8333 ms"), "{s}");
    let csv = stdout(&hemem(&["--format", "csv", "roofline", "--total-bytes", "44e9"]));
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(rows.iter().any(|r| &r[0] == "l2" && &r[2] == "true"));
    let curve = stdout(&hemem(&["roofline", "--curve"]));
    assert!(curve.starts_with("intensity,ops_per_s"));
}

#[test]
fn trace_round_trips_through_analyze_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ks.toml");
    let path_s = path.to_str().unwrap();
    assert_eq!(hemem(&["--out", path_s, "trace", "--pipelined", "--l", "24"]).status.code(), Some(0));
    let from_file = hemem(&["--format", "csv", "analyze", "--trace", path_s]);
    let direct = hemem(&["--format", "csv", "analyze", "--pipelined", "--l", "24"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, direct.stdout);
    let s = stdout(&hemem(&["analyze", "--trace", path_s, "--mode", "both"]));
    assert!(s.contains("eager - static_graph"), "{s}");
}

#[test]
fn dump_writes_stage_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let params = repo("params/small-n1024.toml");
    let mut args = vec!["--params", params.as_str(), "verify", "--dump", dir.path().to_str().unwrap()];
    args.extend_from_slice(SMALL);
    assert_eq!(hemem(&args).status.code(), Some(0));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files {
        hemem_core::dump::read_polynomial(&mut std::fs::File::open(&f).unwrap()).unwrap();
    }
}
