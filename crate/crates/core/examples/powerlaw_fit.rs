//! Discrete power-law fit of a heavy-tailed sample, an x_min scan and the
//! divergence of the empirical tail at fixed thresholds.

use petitions::powerlaw::{ccdf, fit_powerlaw, scan_xmin, threshold_divergence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zeta};

fn main() -> petitions::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let zeta = Zeta::new(1.8).unwrap();
    // cap large draws to mimic a tail that falls below the power law
    let counts: Vec<u64> = (0..20_000)
        .map(|_| {
            let x = zeta.sample(&mut rng) as u64;
            if x > 5_000 { 5_000 + (x - 5_000) / 20 } else { x }
        })
        .collect();
    let emp = ccdf(&counts)?;
    println!("{} distinct values, P(X >= 100) = {:.4}", emp.x.len(), emp.at(100));
    let fit = fit_powerlaw(&counts, 10)?;
    println!(
        "x_min {} exponent {:.4} over {} points, KS {:.4}",
        fit.x_min, fit.exponent, fit.n_tail, fit.ks_distance
    );
    let thresholds = [100, 1_000, 4_000, 10_000];
    for (t, d) in thresholds.iter().zip(threshold_divergence(&counts, &fit, &thresholds)?) {
        println!("divergence at {t}: {}", d.map_or("undefined".into(), |d| format!("{d:+.3}")));
    }
    let scan = scan_xmin(&counts, &[1, 2, 5, 10, 50, 100])?;
    for (i, row) in scan.rows.iter().enumerate() {
        if let Some(f) = &row.fit {
            let mark = if scan.best == Some(i) { " <- lowest KS" } else { "" };
            println!("x_min {:>4}: exponent {:.3} KS {:.4}{mark}", row.x_min, f.exponent, f.ks_distance);
        }
    }
    Ok(())
}
