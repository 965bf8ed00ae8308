use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gainloss"));
    c.env_remove("GAINLOSS_OUT_DIR").env_remove("GAINLOSS_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn synth(tmp: &TempDir) -> PathBuf {
    let dir = tmp.path().join("data");
    let out = run(&["--out-dir", dir.to_str().unwrap(), "synth", "--kind", "drop-rebound", "--n", "2500", "--seed", "9", "--name", "dr.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("dr.csv")
}

fn report(input: &Path, out: &Path, workers: &str) {
    let o = run(&[
        "--out-dir", out.to_str().unwrap(), "--workers", workers,
        "report", "-i", input.to_str().unwrap(),
        "--T", "1,3,10,40", "--k", "3,4", "--np", "8", "--seed", "4", "--t-inf", "500",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let input = synth(&tmp);
    let out = tmp.path().join("out");
    report(&input, &out, "1");
    let first = read_dir(&out);
    report(&input, &out, "1");
    assert_eq!(first, read_dir(&out));
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let input = synth(&tmp);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    report(&input, &a, "1");
    report(&input, &b, "4");
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if name == "manifest.json" {
            let strip = |v: &[u8]| {
                let mut j: serde_json::Value = serde_json::from_slice(v).unwrap();
                j["config"].as_object_mut().unwrap().remove("out_dir");
                j
            };
            assert_eq!(strip(bytes), strip(&fb[name]));
        } else {
            assert_eq!(bytes, &fb[name], "{name}");
        }
    }
}

#[test]
fn result_files_name_sigma_and_manifest_lists_them() {
    let tmp = TempDir::new().unwrap();
    let input = synth(&tmp);
    let out = tmp.path().join("out");
    report(&input, &out, "0");
    let files = read_dir(&out);
    for (name, bytes) in &files {
        if name == "manifest.json" {
            continue;
        }
        let text = String::from_utf8_lossy(bytes);
        assert!(text.contains("sigma"), "{name} does not record sigma");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&files["manifest.json"]).unwrap();
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let listed: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for name in files.keys().filter(|n| *n != "manifest.json") {
        assert!(listed.contains(&name.as_str()), "{name} missing from manifest");
    }
}

#[test]
fn env_overrides_output_dir() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("env_out");
    let o = bin()
        .env("GAINLOSS_OUT_DIR", &dir)
        .env("GAINLOSS_WORKERS", "2")
        .args(["synth", "--kind", "gaussian", "--n", "100"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("manifest.json").exists());
}

fn code_and_category(o: &Output) -> (i32, Option<String>) {
    let err = String::from_utf8_lossy(&o.stderr);
    let cat = err
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .find_map(|j| j["error"].as_str().map(String::from));
    (o.status.code().unwrap(), cat)
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();

    // unknown flag and invalid configuration
    assert_eq!(run(&["fpt", "--bogus"]).status.code(), Some(2));
    let input = synth(&tmp);
    let o = run(&["--out-dir", out, "sweep", "-i", input.to_str().unwrap(), "--smooth", "2", "--np", "2"]);
    assert_eq!(code_and_category(&o), (2, Some("config".into())));

    // missing file
    let o = run(&["--out-dir", out, "ingest", "-i", "/nonexistent/prices.csv"]);
    assert_eq!(code_and_category(&o), (3, Some("io".into())));

    // malformed rows
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "date,close\n2000-01-03,100\n2000-01-04,-5\n").unwrap();
    let o = run(&["--out-dir", out, "ingest", "-i", bad.to_str().unwrap()]);
    assert_eq!(code_and_category(&o), (4, Some("data".into())));

    // level far beyond any excursion the series can make
    let flat = tmp.path().join("flat.csv");
    let mut rows = String::from("date,close\n");
    for (i, d) in (3..=28).enumerate() {
        rows.push_str(&format!("2000-01-{d:02},{}\n", 100.0 + if i % 2 == 0 { 0.0 } else { 0.5 }));
    }
    fs::write(&flat, rows).unwrap();
    let o = run(&["--out-dir", out, "sweep", "-i", flat.to_str().unwrap(), "--T", "1", "--k", "50", "--np", "3", "--sign", "plus"]);
    assert_eq!(code_and_category(&o), (5, Some("fit".into())));
}
