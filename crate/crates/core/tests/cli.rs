mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gpfn::graph::GraphStructure;
use gpfn::rng::{stream, StreamTag};
use gpfn::{generate_attributes, sample_prior, write_dataset};

const SMALL: &str = "node_count_range = { min = 50, max = 300 }\n";

fn gpfn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpfn"))
        .args(args)
        .env_remove("GPF_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn generate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = gpfn(&["generate", "--count", "2", "--seed", "7", "--out", dir.to_str().unwrap(), "--config", &cfg, "--episodes", "1"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("generated 2 datasets"));
    }
    let la = listing(&a);
    assert_eq!(la.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), ["7.gpfn", "8.gpfn"]);
    assert_eq!(la, listing(&b));
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let (serial, parallel) = (tmp.path().join("serial"), tmp.path().join("parallel"));
    for (dir, workers) in [(&serial, "1"), (&parallel, "8")] {
        let o = gpfn(&["generate", "--count", "100", "--seed", "1", "--out", dir.to_str().unwrap(), "--config", &cfg, "--workers", workers, "--episodes", "1"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let s = listing(&serial);
    assert_eq!(s.len(), 100);
    assert_eq!(s, listing(&parallel));
}

#[test]
fn config_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_gpfn"))
        .args(["generate", "--count", "1", "--seed", "3", "--out", out.to_str().unwrap()])
        .env("GPF_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (ds, _) = gpfn::read_dataset(out.join("3.gpfn")).unwrap();
    assert!(ds.n_nodes() <= 300);
}

#[test]
fn stats_on_edgeless_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let prior = sample_prior(&common::config("node_count_range = { min = 40, max = 40 }"), 9);
    let ds = generate_attributes(&GraphStructure::empty(40), &prior, &mut stream(9, StreamTag::Attributes)).unwrap();
    let path = tmp.path().join("9.gpfn");
    write_dataset(&ds, &[], &path).unwrap();
    let o = gpfn(&["stats", path.to_str().unwrap(), path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let doc: toml::Table = text.parse().unwrap();
    let records = doc["dataset"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    let r = records[0].as_table().unwrap();
    assert_eq!(r["mean_degree"].as_float(), Some(0.0));
    assert_eq!(r["components"].as_integer(), Some(40));
    assert_eq!(r["periphery_fraction"].as_float(), Some(1.0));
}

#[test]
fn inspect_prints_header_metadata_and_lappe() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("d");
    assert_eq!(gpfn(&["generate", "--count", "1", "--seed", "11", "--out", out.to_str().unwrap(), "--config", &cfg]).status.code(), Some(0));
    let file = out.join("11.gpfn");
    let o = gpfn(&["inspect", file.to_str().unwrap(), "--lappe", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: toml::Table = stdout(&o).parse().unwrap();
    assert_eq!(doc["seed"].as_str(), Some("11"));
    assert_eq!(doc["generator_version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert_eq!(doc["header"]["version"].as_integer(), Some(1));
    assert!(doc["lappe"]["max_residual"].as_float().unwrap() <= 1e-6);
    assert!(doc["prior"]["n_total"].as_integer().unwrap() <= 300);
    let plain: toml::Table = stdout(&gpfn(&["inspect", file.to_str().unwrap()])).parse().unwrap();
    assert!(!plain.contains_key("lappe"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(gpfn(&[]).status.code(), Some(2));
    assert_eq!(gpfn(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gpfn(&["generate", "--count", "1"]).status.code(), Some(2));
    assert_eq!(gpfn(&["generate", "--count", "1", "--seed", "1", "--out", "x", "--workers", "0"]).status.code(), Some(2));
    assert_eq!(gpfn(&["stats"]).status.code(), Some(2));
    assert_eq!(gpfn(&["--help"]).status.code(), Some(0));

    let junk = tmp.path().join("junk.gpfn");
    fs::write(&junk, b"GPFN but not really").unwrap();
    let o = gpfn(&["stats", junk.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("junk.gpfn"));
    assert_eq!(gpfn(&["inspect", tmp.path().join("missing.gpfn").to_str().unwrap()]).status.code(), Some(1));

    let bad_cfg = tmp.path().join("bad.toml");
    fs::write(&bad_cfg, "node_count_range = { min = 100, max = 50 }").unwrap();
    let o = gpfn(&["generate", "--count", "1", "--seed", "1", "--out", tmp.path().join("o").to_str().unwrap(), "--config", bad_cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("node_count_range"));
}

#[test]
fn bench_reports_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let o = gpfn(&["bench", "--count", "5", "--seed", "0", "--config", &cfg, "--structure-only"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: toml::Table = stdout(&o).parse().unwrap();
    assert_eq!(doc["mode"].as_str(), Some("structure"));
    assert_eq!(doc["count"].as_integer(), Some(5));
    assert!(doc["per_second"].as_float().unwrap() > 0.0);
}
