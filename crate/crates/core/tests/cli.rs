use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dynprobit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynprobit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

fn write_small_config(dir: &Path) {
    fs::write(dir.join("cfg.json"), r#"{"n": 30, "draws": 2000, "seed": 4}"#).unwrap();
}

#[test]
fn simulate_then_fit_all() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_small_config(dir);
    let out = dynprobit(&["simulate", "--config", "cfg.json", "--out", "sim"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let data = rows(&dir.join("sim/data.csv"));
    assert_eq!(data.len(), 30);
    for (t, row) in data.iter().enumerate() {
        assert_eq!(row[0], (t + 1).to_string());
        assert!(row[1] == "0" || row[1] == "1");
        assert_eq!(row.len(), 4);
    }
    assert_eq!(rows(&dir.join("sim/truth.csv")).len(), 30);

    let out = dynprobit(
        &["fit", "--config", "cfg.json", "--data", "sim/data.csv", "--out", "fit", "--method", "all"],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = rows(&dir.join("fit/results.csv"));
    for method in ["iid", "pfm", "mf"] {
        let block: Vec<_> = results.iter().filter(|r| r[2] == method).collect();
        assert_eq!(block.len(), 30 * 2, "{method}");
        assert!(block.iter().all(|r| r[4].parse::<f64>().unwrap() > 0.0));
    }
    assert_eq!(results.len(), 3 * 60);
    assert!(dir.join("fit/metadata.json").exists());
    assert!(dir.join("fit/timings.json").exists());
}

#[test]
fn data_round_trip_is_exact() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let text = "t,y,x1,x2\n1,1,0.1,-2.5e-7\n2,0,1.0000000000000002,3.0\n3,1,-0.3333333333333333,0.0\n";
    fs::write(dir.join("in.csv"), text).unwrap();
    let (x, y) = dynprobit::cli::io::read_data(&dir.join("in.csv")).unwrap();
    dynprobit::cli::io::write_data(&dir.join("out.csv"), &x, &y).unwrap();
    let (x_back, y_back) = dynprobit::cli::io::read_data(&dir.join("out.csv")).unwrap();
    assert_eq!(y_back.values(), y.values());
    assert_eq!(x_back, x);
    assert_eq!(x[1][0], 1.0000000000000002);
}

#[test]
fn scalar_pfm_is_exact_through_cli() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("d.csv"), "t,y,x1\n1,1,1\n").unwrap();
    fs::write(
        dir.join("cfg.json"),
        r#"{"n": 1, "p": 1, "p0": [[1.0]], "g": [[1.0]], "w": [[0.0]]}"#,
    )
    .unwrap();
    let out = dynprobit(
        &["fit", "--config", "cfg.json", "--data", "d.csv", "--out", "o", "--method", "pfm"],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = rows(&dir.join("o/results.csv"));
    assert_eq!(results.len(), 1);
    let mean: f64 = results[0][3].parse().unwrap();
    let sd: f64 = results[0][4].parse().unwrap();
    let pi = std::f64::consts::PI;
    assert!((mean - 1.0 / pi.sqrt()).abs() < 1e-6);
    assert!((sd - (1.0 - 1.0 / pi).sqrt()).abs() < 1e-6);
}

#[test]
fn compare_writes_report_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_small_config(dir);
    assert!(dynprobit(&["simulate", "--config", "cfg.json", "--out", "sim"], dir).status.success());
    let out = dynprobit(&["compare", "--config", "cfg.json", "--data", "sim/data.csv", "--out", "cmp"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("cmp/comparison.json")).unwrap()).unwrap();
    assert_eq!(report["comparisons"].as_array().unwrap().len(), 2);
    let bands = rows(&dir.join("cmp/bands.csv"));
    for row in &bands {
        let lower: f64 = row[4].parse().unwrap();
        let upper: f64 = row[5].parse().unwrap();
        assert!(lower < upper);
    }
}

#[test]
fn seeded_runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_small_config(dir);
    for out in ["a", "b"] {
        assert!(dynprobit(&["simulate", "--config", "cfg.json", "--out", out], dir).status.success());
        let fit_out = format!("{out}/fit");
        assert!(dynprobit(&["fit", "--config", "cfg.json", "--data", "a/data.csv", "--out", &fit_out], dir)
            .status
            .success());
    }
    for file in ["data.csv", "truth.csv", "metadata.json", "fit/results.csv", "fit/metadata.json"] {
        assert_eq!(
            fs::read(dir.join("a").join(file)).unwrap(),
            fs::read(dir.join("b").join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad.json"), r#"{"n": 5, "unknown_key": 1}"#).unwrap();
    assert_eq!(dynprobit(&["simulate", "--config", "bad.json", "--out", "x"], dir).status.code(), Some(2));
    fs::write(dir.join("nonpsd.json"), r#"{"n": 5, "p": 1, "w": [[-1.0]]}"#).unwrap();
    assert_eq!(dynprobit(&["simulate", "--config", "nonpsd.json", "--out", "x"], dir).status.code(), Some(2));

    fs::write(dir.join("ragged.csv"), "t,y,x1,x2\n1,1,0.5\n").unwrap();
    let out = dynprobit(&["fit", "--data", "ragged.csv", "--out", "x", "--method", "pfm"], dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row"));
    fs::write(dir.join("nonbinary.csv"), "t,y,x1,x2\n1,2,0.5,1.0\n").unwrap();
    assert_eq!(dynprobit(&["fit", "--data", "nonbinary.csv", "--out", "x", "--method", "pfm"], dir).status.code(), Some(3));
    fs::write(dir.join("nan.csv"), "t,y,x1,x2\n1,1,NaN,1.0\n").unwrap();
    assert_eq!(dynprobit(&["fit", "--data", "nan.csv", "--out", "x", "--method", "pfm"], dir).status.code(), Some(3));

    assert_eq!(dynprobit(&["fit", "--data", "missing.csv", "--out", "x"], dir).status.code(), Some(3));
    fs::write(dir.join("occupied"), "").unwrap();
    assert_eq!(dynprobit(&["simulate", "--out", "occupied"], dir).status.code(), Some(1));
    assert_eq!(dynprobit(&["frobnicate"], dir).status.code(), Some(2));
}
