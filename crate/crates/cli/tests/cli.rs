use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

fn rdm_gmr(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdm-gmr"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RDM_GMR_SEED")
        .output()
        .expect("run rdm-gmr")
}

fn data_args(dir: &Path) -> Vec<String> {
    vec![
        "--data".into(),
        dir.join("composition.csv").display().to_string(),
        "--weights".into(),
        dir.join("weights.csv").display().to_string(),
        "--config".into(),
        sample().join("season.toml").display().to_string(),
    ]
}

fn run(cmd: &str, data: &Path, extra: &[&str], out: &Path) -> Output {
    let mut args: Vec<String> = vec![cmd.into()];
    args.extend(data_args(data));
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    rdm_gmr(&refs, out)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn calibrate_reports_every_week() {
    let out = tempfile::tempdir().unwrap();
    let o = run("calibrate", &sample(), &[], out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.path().join("table2.json"));
    assert_eq!(report["command"], "calibrate");
    let rows = report["results"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r["inflation"].as_f64().unwrap() > 1.0));
}

#[test]
fn degenerate_week_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(sample().join("composition.csv")).unwrap();
    let mut lines = text.lines();
    let mut edited = vec![lines.next().unwrap().to_string()];
    for line in lines {
        let mut cols: Vec<&str> = line.split(',').collect();
        if cols[0] == "3" {
            cols[3] = "0";
        }
        edited.push(cols.join(","));
    }
    std::fs::write(dir.path().join("composition.csv"), edited.join("\n") + "\n").unwrap();
    std::fs::copy(sample().join("weights.csv"), dir.path().join("weights.csv")).unwrap();

    let out = tempfile::tempdir().unwrap();
    let o = run("calibrate", dir.path(), &[], out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = json(&out.path().join("table2.json"))["results"].as_array().unwrap().clone();
    let week3 = rows.iter().find(|r| r["week"] == 3).unwrap();
    assert_ne!(week3["status"], "ok");
    assert!(rows.iter().filter(|r| r["status"] == "ok").count() == 11);

    let o = run("estimate", dir.path(), &[], out.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("week 3"));
}

#[test]
fn estimate_all_methods() {
    let out = tempfile::tempdir().unwrap();
    let args = ["--method", "all", "--initial-iters", "1000", "--keep", "500", "--format", "csv"];
    let o = run("estimate", &sample(), &args, out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.path().join("table3.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 7);
    assert!(text.lines().any(|l| l.starts_with("# config_hash: ")));
}

#[test]
fn psi_calibrate_writes_each_value() {
    let out = tempfile::tempdir().unwrap();
    let o = rdm_gmr(&["psi-calibrate", "--draws", "2000"], out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = std::fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("psi_") && n != "psi_summary.json")
        .collect();
    names.sort();
    assert_eq!(names.len(), 4, "{names:?}");
    let summary = json(&out.path().join("psi_summary.json"));
    assert_eq!(summary["results"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = tempfile::tempdir().unwrap();
    let o = rdm_gmr(&["estimate", "--data", "missing.csv", "--weights", "missing.csv", "--M", "10"], out.path());
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
}
