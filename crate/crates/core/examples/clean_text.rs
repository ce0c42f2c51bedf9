//! Text cleaning and Porter stemming on a few petition titles, then a tiny
//! document-term matrix with document-frequency pruning.

use petitions::textprep::{clean_tokens, default_stopwords, dtm_from_tokens, porter};

fn main() -> petitions::Result<()> {
    let stopwords = default_stopwords();
    let titles = [
        "Stop ALL immigration!!",
        "Fund more nurses for NHS hospitals in 2016",
        "Give teachers a fair pay rise; schools are struggling",
        "Ban the sale of fireworks to the general public",
        "Hold a second referendum on EU membership",
    ];
    let docs: Vec<Vec<String>> = titles.iter().map(|t| clean_tokens(t, &stopwords)).collect();
    for (t, d) in titles.iter().zip(&docs) {
        println!("{t:55} -> {d:?}");
    }
    for w in ["relational", "generalizations", "hopping", "agreed", "sky"] {
        println!("stem({w}) = {}", porter::stem(w));
    }
    let ids = (0..docs.len()).map(|i| format!("p{i}")).collect();
    let (dtm, stats) = dtm_from_tokens(ids, &docs, 0.2)?;
    println!(
        "{} docs, vocabulary {} -> {} terms (min {} docs)",
        stats.n_docs, stats.vocabulary_before, stats.vocabulary_after, stats.min_doc_count
    );
    println!("terms: {:?}", dtm.vocabulary().terms());
    Ok(())
}
