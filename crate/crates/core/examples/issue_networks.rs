//! Issue prevalence, success rates and the two similarity networks on a
//! synthetic archive.

use petitions::issues::{self, co_occurrence_network, prune_network, word_distribution_network};
use petitions::lda::{self, LdaConfig};
use petitions::synthetic::{synthetic_archive, ArchiveSpec, THEMES};
use petitions::textprep::{build_dtm, default_stopwords};

fn main() -> petitions::Result<()> {
    let (corpus, _) = synthetic_archive(&ArchiveSpec::default())?;
    let (dtm, _) = build_dtm(&corpus, &default_stopwords(), 0.01)?;
    let model = lda::fit(
        &dtm,
        &LdaConfig {
            k: THEMES.len(),
            iterations: 300,
            burn_in: 100,
            seed: 3,
            ..LdaConfig::default()
        },
    )?;
    let prev = issues::prevalence(&model, &corpus)?;
    let success = issues::success_probability(&model, &corpus, issues::RESPONSE_THRESHOLD)?;
    println!("topic  petitions  signatures  P(>=10k)  top words");
    for t in 0..model.k() {
        println!(
            "{t:>5}  {:>9.3}  {:>10.3}  {:>8}  {:?}",
            prev.by_petitions[t],
            prev.by_signatures[t],
            success.raw[t].map_or("NA".to_string(), |p| format!("{p:.3}")),
            lda::top_words(&model, t, 4)?
        );
    }
    for net in [co_occurrence_network(&model)?, word_distribution_network(&model)?] {
        let s = net.summary().expect("at least two topics");
        println!(
            "{:?}: mean {:.3}, strongest {:?} {:.3}, weakest {:?} {:.3}",
            net.kind, s.mean, s.max_pair, s.max, s.min_pair, s.min
        );
        let kept = prune_network(&net, issues::DEFAULT_KEEP_FRACTION)?;
        println!("  kept edges: {:?}", kept.edges().iter().filter(|e| e.2 > 0.0).collect::<Vec<_>>());
    }
    Ok(())
}
