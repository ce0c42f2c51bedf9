//! Every pair in the reference vocabulary must stem exactly.

use petitions::textprep::porter::stem;

#[test]
fn reference_vocabulary_matches() {
    let text = include_str!("fixtures/porter_pairs.txt");
    let mut total = 0;
    let mut wrong = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (word, want) = line.split_once(' ').expect("word stem");
        total += 1;
        let got = stem(word);
        if got != want {
            wrong.push(format!("{word}: got {got}, want {want}"));
        }
    }
    assert!(total > 10_000);
    assert!(wrong.is_empty(), "{} of {total} mismatches:\n{}", wrong.len(), wrong[..wrong.len().min(20)].join("\n"));
}
