//! Normalized entropy of issue attention over a trailing week, and the
//! days whose change in entropy is unusually large.

use chrono::NaiveDate;
use petitions::temporal::{detect_volatility, entropy_series, smooth, IssueSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> petitions::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let dates: Vec<NaiveDate> = start.iter_days().take(200).collect();
    let mut values: Vec<Vec<f64>> = dates
        .iter()
        .map(|_| (0..4).map(|_| rng.random_range(800.0..1200.0)).collect())
        .collect();
    // one viral petition on a single issue
    for v in &mut values[120..123] {
        v[2] += 400_000.0;
    }
    let series = IssueSeries { dates, values };
    let es = entropy_series(&series, 7)?;
    let stats = es.stats().expect("defined days");
    println!(
        "entropy over {} days: min {:.3}, mean {:.3}, max {:.3}",
        stats.defined_days, stats.min, stats.mean, stats.max
    );
    let vol = detect_volatility(&es)?;
    println!(
        "daily change mean {:.3}%, sd {:.3}%",
        vol.mean_pct_change, vol.sd_pct_change
    );
    for f in &vol.flags {
        println!("  {} {:+.1}% ({})", f.date, f.pct_change, f.direction.as_str());
    }
    let weekly = smooth(&series, 7)?;
    println!("total mass raw {:.1}, after 7-day smoothing {:.1}", series.total(), weekly.total());
    Ok(())
}
