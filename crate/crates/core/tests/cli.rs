use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metaspike"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn diagnostic(o: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().rev().find(|l| l.starts_with('{')).expect("no JSON diagnostic");
    serde_json::from_str(line).unwrap()
}

#[test]
fn bench_dataflow_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench-dataflow"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("dataflow.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "style,Sr,Sc,n_in,n_out,sparsity,T,cycles,speedup_vs_aer");
    let dense = lines.find(|l| l.starts_with("OS,8,8,256,256,0,")).unwrap();
    assert!(dense.contains(",8896,"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dataflow.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), csv.lines().count() - 1);
}

#[test]
fn report_memory_lists_every_precision() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report-memory"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("memory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains("fxp16,51600,32,206400,"));
    assert!(csv.contains("float,51600,64,412800,"));
}

#[test]
fn bad_config_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seeds = 0\n[model]\nn_hidden = 0\n").unwrap();
    let o = run(&["train", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let d = diagnostic(&o);
    assert_eq!(d["error"], "config");
    assert!(d["message"].as_str().unwrap().contains("n_hidden") || d["message"].as_str().unwrap().contains("layer"));

    std::fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let o = run(&["report-memory", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(diagnostic(&o)["error"], "config");
}

#[test]
fn missing_dataset_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("[data]\npath = \"{}\"\n", dir.path().join("nowhere").display())).unwrap();
    let o = run(&["train", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let kind = diagnostic(&o)["error"].as_str().unwrap().to_string();
    assert!(kind == "io" || kind == "ingestion", "{kind}");
}

#[test]
fn unknown_precision_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report-memory", "--precision", "fxp8"], dir.path());
    assert!(!o.status.success());
}
