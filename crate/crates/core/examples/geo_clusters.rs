//! Constituency profiles, the electorate scaling regression and PAM
//! clustering of issue-share Z-scores on a synthetic archive.

use petitions::geo::{self, Metric, ScalingMode};
use petitions::lda::{self, LdaConfig};
use petitions::synthetic::{synthetic_archive, ArchiveSpec};
use petitions::textprep::{build_dtm, default_stopwords};

fn main() -> petitions::Result<()> {
    let (corpus, meta) = synthetic_archive(&ArchiveSpec::default())?;
    let (dtm, _) = build_dtm(&corpus, &default_stopwords(), 0.01)?;
    let model = lda::fit(
        &dtm,
        &LdaConfig {
            k: 3,
            iterations: 300,
            burn_in: 100,
            seed: 1,
            ..LdaConfig::default()
        },
    )?;
    let mut profiles = geo::profile_constituencies(&model, &corpus, &meta)?;
    for mode in [ScalingMode::Raw, ScalingMode::Binned] {
        let fit = geo::scaling_fit(&profiles, mode, 10)?;
        println!(
            "{mode:?} scaling: exponent {:.3}, R^2 {:.3} over {} points",
            fit.exponent, fit.r_squared, fit.n
        );
    }
    for s in geo::silhouette_sweep(&profiles, &[2, 3, 4, 5, 6], 0, Metric::Euclidean)? {
        println!("k={} silhouette {:.3} cost {:.2}", s.k, s.silhouette, s.total_cost);
    }
    let clusters = geo::pam_cluster(&profiles, 2, 0, Metric::Euclidean)?;
    geo::apply_clusters(&mut profiles, &clusters);
    let shares = geo::cluster_issue_profile(&clusters, &profiles)?;
    for (c, (row, size)) in shares.iter().zip(clusters.sizes()).enumerate() {
        let members: Vec<&str> = profiles
            .iter()
            .filter(|p| p.cluster == Some(c))
            .map(|p| p.meta.name.as_str())
            .take(4)
            .collect();
        println!("cluster {c} ({size} seats, e.g. {members:?}): mean shares {row:.3?}");
    }
    Ok(())
}
