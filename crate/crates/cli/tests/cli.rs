use std::path::Path;
use std::process::{Command, Output};

fn gffperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gffperc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("JSON error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn stretch_estimate_writes_two_rows_and_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stretch.csv");
    let o = gffperc(&[
        "estimate",
        "--event",
        "stretch",
        "--d",
        "3",
        "--N",
        "4,8",
        "--kappa",
        "2",
        "--h",
        "-0.5",
        "--n",
        "8",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# version:"));
    let config_line = text.lines().find(|l| l.starts_with("# config: ")).unwrap();
    let config: serde_json::Value = serde_json::from_str(&config_line["# config: ".len()..]).unwrap();
    assert_eq!(config["run"]["seed"], 3);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 3, "header plus one row per N");
    assert!(data[0].split(',').any(|c| c == "p_hat"));

    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["records"].as_array().unwrap().len(), 2);
}

fn sample_to(path: &Path) {
    let o = gffperc(&[
        "sample",
        "--box",
        "3",
        "--seed",
        "11",
        "--index",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sampling_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.gff"), dir.path().join("b.gff"));
    sample_to(&a);
    sample_to(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_dimension_names_the_key() {
    let o = gffperc(&["green", "--d", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["key"], "d");
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "d = 3\nbogus = 1\n").unwrap();
    let o = gffperc(&["--config", cfg.to_str().unwrap(), "green"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["key"], "bogus");
}

#[test]
fn tube_needs_a_critical_level() {
    let o = gffperc(&["tube", "--N", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["key"], "h_star");
}

#[test]
fn green_prints_a_monotone_trace() {
    let o = gffperc(&["green", "--tol", "1e-5", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lower: Vec<f64> = doc["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["lower"].as_f64().unwrap())
        .collect();
    assert!(lower.len() >= 3);
    assert!(lower.windows(2).all(|w| w[0] < w[1]));
    let value = doc["config"]["derived"]["value"].as_f64().unwrap();
    assert!((value - 1.516386).abs() < 1e-4, "{value}");
}

#[test]
fn fit_reads_a_stretch_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(
        &table,
        "# version: x\nN,p_hat,censored\n16,0.5,false\n32,0.3,false\n64,0.0,true\n",
    )
    .unwrap();
    let o = gffperc(&["fit", "--input", table.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["records"].as_array().unwrap().len(), 3);
    assert_eq!(doc["config"]["derived"]["points"], 2);
}
