//! Fits LDA to a corpus with three planted topics and compares the fitted
//! topic-word distributions with the truth after optimal topic matching.

use std::time::Instant;

use petitions::lda::{self, cosine_similarity_matrix, match_topics, LdaConfig};
use petitions::synthetic::{planted_corpus, PlantedSpec};

fn main() -> petitions::Result<()> {
    let planted = planted_corpus(&PlantedSpec::default())?;
    let config = LdaConfig {
        k: 3,
        iterations: 300,
        burn_in: 100,
        seed: 42,
        ..LdaConfig::default()
    };
    let start = Instant::now();
    let model = lda::fit(&planted.dtm, &config)?;
    println!(
        "{} docs, {} terms, fitted in {:.2?}",
        planted.dtm.n_docs(),
        planted.dtm.n_terms(),
        start.elapsed()
    );
    let fitted: Vec<Vec<f64>> = (0..model.k()).map(|t| model.phi_row(t).to_vec()).collect();
    let sim = cosine_similarity_matrix(&planted.phi, &fitted)?;
    let matching = match_topics(&sim)?;
    for (truth, &fit) in matching.iter().enumerate() {
        println!(
            "planted {truth} <-> fitted {fit}: cosine {:.3}, top words {:?}",
            sim[truth][fit],
            lda::top_words(&model, fit, 6)?
        );
    }
    let trace = &model.log_likelihood_trace;
    println!(
        "log-likelihood {:.1} (sweep {}) -> {:.1} (sweep {})",
        trace[0].log_likelihood,
        trace[0].sweep,
        trace.last().unwrap().log_likelihood,
        trace.last().unwrap().sweep
    );
    println!("mean max theta {:.3}", model.mean_max_theta());
    Ok(())
}
