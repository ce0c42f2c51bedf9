//! End-to-end runs of the `petitions` binary.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use petitions::corpus::write_constituencies;
use petitions::synthetic::{synthetic_archive, ArchiveSpec};
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
    config: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let archive = dir.path().join("archive.jsonl");
        let table = dir.path().join("constituencies.csv");
        let (corpus, meta) = synthetic_archive(&ArchiveSpec {
            petitions: 150,
            constituencies: 16,
            ..ArchiveSpec::default()
        })
        .unwrap();
        corpus.write_snapshot(File::create(&archive).unwrap(), None).unwrap();
        write_constituencies(&meta, File::create(&table).unwrap()).unwrap();
        let config = dir.path().join("pipeline.toml");
        fs::write(
            &config,
            format!(
                "seed = 99\nwindow_start = \"2015-06-01\"\nwindow_end = \"2016-06-01\"\n\
                 min_doc_fraction = 0.01\npam_k = 3\nsilhouette_ks = [2, 3]\n\
                 xmin_candidates = [1, 5, 10]\n\
                 [lda]\nk = 3\niterations = 60\nburn_in = 20\n\
                 [grid]\nks = [2, 3]\n\
                 [paths]\narchive = {:?}\nconstituencies = {:?}\noutput_dir = {:?}\n",
                archive,
                table,
                dir.path().join("out")
            ),
        )
        .unwrap();
        Self { dir, config }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_petitions"))
            .args(args)
            .arg("--config")
            .arg(&self.config)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petitions")).args(args).output().unwrap()
}

#[test]
fn missing_archive_is_a_config_error() {
    let out = bin(&["ingest", "--archive", "/nonexistent/archive.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/archive.jsonl"));
}

#[test]
fn bad_config_and_usage_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(bin(&["ingest", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn fit_without_snapshot_is_a_runtime_failure() {
    let ws = Workspace::new();
    let out = ws.run(&["fit"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn full_run_is_reproducible_and_labelled() {
    let ws = Workspace::new();
    ws.ok(&["ingest"]);
    ws.ok(&["fit"]);
    let model = fs::read(ws.out("model.json")).unwrap();
    ws.ok(&["fit"]);
    assert_eq!(model, fs::read(ws.out("model.json")).unwrap());

    ws.ok(&["report"]);
    let summary = fs::read(ws.out("summary.json")).unwrap();
    ws.ok(&["report"]);
    assert_eq!(summary, fs::read(ws.out("summary.json")).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&summary).unwrap();
    for key in ["meta", "corpus", "issues", "entropy", "geo", "powerlaw"] {
        assert!(json.get(key).is_some(), "summary lacks {key}");
    }
    assert_eq!(json["meta"]["seed"], 99);

    let answers = ws.dir.path().join("answers.csv");
    fs::write(&answers, "topic,subject,position\n0,a,1\n1,a,2\n2,a,3\n0,b,0\n").unwrap();
    ws.ok(&["intrusion-score", "--answers", answers.to_str().unwrap()]);
    ws.ok(&["grid", "--heldout-fraction", "0.2"]);
    let scan = ws.ok(&["xmin-scan", "--candidates", "1,5,10,20"]);
    let rows: serde_json::Value = serde_json::from_slice(&scan.stdout).unwrap();
    assert_eq!(rows["rows"].as_array().unwrap().len(), 4);

    for entry in fs::read_dir(ws.dir.path().join("out")).unwrap() {
        assert_labelled(&entry.unwrap().path());
    }
}

fn assert_labelled(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let name = path.display();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => assert!(text.starts_with("# "), "{name} lacks a header line"),
        Some("json") => {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert!(v.get("meta").is_some(), "{name} lacks meta");
        }
        Some("jsonl") => {
            let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
            assert!(first.get("meta").is_some(), "{name} lacks meta");
        }
        _ => panic!("unexpected output {name}"),
    }
    assert!(text.contains("config_hash"), "{name} lacks the config hash");
}
