//! Runs `ingest`, `fit` and `report` through the command-line entry point
//! on a synthetic archive and prints the resulting summary.

use std::fs::{self, File};

use petitions::corpus::write_constituencies;
use petitions::synthetic::{synthetic_archive, ArchiveSpec};

fn main() -> petitions::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let archive = dir.path().join("archive.jsonl");
    let table = dir.path().join("constituencies.csv");
    let out = dir.path().join("out");
    let (corpus, meta) = synthetic_archive(&ArchiveSpec::default())?;
    corpus.write_snapshot(File::create(&archive).unwrap(), None)?;
    write_constituencies(&meta, File::create(&table).unwrap())?;

    let config = dir.path().join("pipeline.toml");
    fs::write(
        &config,
        format!(
            "seed = 2024\nwindow_start = \"2015-06-01\"\nwindow_end = \"2016-06-01\"\n\
             min_doc_fraction = 0.01\npam_k = 3\nsilhouette_ks = [2, 3, 4]\n\
             [lda]\nk = 3\niterations = 200\nburn_in = 50\n\
             [paths]\narchive = {:?}\nconstituencies = {:?}\noutput_dir = {:?}\n",
            archive, table, out
        ),
    )
    .unwrap();
    for cmd in ["ingest", "fit", "report"] {
        let code = petitions::cli::run(["petitions", cmd, "--config", config.to_str().unwrap()]);
        println!("{cmd}: exit {code}");
        if code != 0 {
            std::process::exit(code);
        }
    }
    let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    println!("outputs: {names:?}");
    println!("{}", fs::read_to_string(out.join("summary.json")).unwrap());
    Ok(())
}
