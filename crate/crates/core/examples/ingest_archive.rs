//! Writes a synthetic archive in the petitions JSONL layout, ingests it with
//! a constituency table, and prints the ingest report.

use std::io::Write;

use petitions::corpus::{self, IngestConfig};
use petitions::synthetic::{synthetic_archive, ArchiveSpec};

fn main() -> petitions::Result<()> {
    let (corpus, meta) = synthetic_archive(&ArchiveSpec::default())?;
    let mut jsonl = Vec::new();
    corpus.write_snapshot(&mut jsonl, None)?;
    // a record in a state that never reached the site, and a broken line
    writeln!(
        jsonl,
        r#"{{"id":"999999","state":"rejected","attributes":{{"action":"x","background":"","created_at":"2016-01-01"}}}}"#
    )
    .unwrap();
    writeln!(jsonl, "{{not json").unwrap();

    let config = IngestConfig {
        window_start: corpus.window().0,
        window_end: corpus.window().1,
        constituencies: meta,
        ..IngestConfig::default()
    };
    let (loaded, report) = corpus::parse_archive(&jsonl[..], &config)?;
    println!("lines read          {}", report.lines_read);
    println!("accepted            {}", report.accepted);
    println!("rejected state      {}", report.dropped_rejected_state);
    println!("outside window      {}", report.dropped_outside_window);
    println!("malformed           {}", report.rejects.len());
    println!("UK signatures       {}", corpus::uk_signature_total(&loaded));
    println!("overseas signatures {}", report.overseas_signatures);
    for r in &report.rejects {
        println!("  line {}: {}", r.line_no, r.reason);
    }
    Ok(())
}
