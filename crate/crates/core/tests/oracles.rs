//! Hand-computed and independently generated reference values.

mod common;

use common::*;
use petitions::corpus::uk_signature_total;
use petitions::geo::{self, ClusterResult, DistanceMatrix, Metric};
use petitions::issues;
use petitions::lda::{self, IntrusionInstance};
use petitions::powerlaw::{self, ccdf, fit_powerlaw, scan_xmin, threshold_divergence};
use petitions::temporal::{self, detect_volatility, EntropySeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zeta};

fn three_constituency_fixture() -> (petitions::corpus::Corpus, Vec<petitions::corpus::ConstituencyMeta>, lda::TopicModel) {
    let d = day(2016, 3, 1);
    let c = corpus(
        vec![
            petition("p1", d, &[("A", 100), ("B", 20)]),
            petition("p2", d, &[("A", 50), ("C", 200)]),
            petition("p3", d, &[("B", 80)]),
        ],
        vec![],
    );
    let meta = vec![constituency("A", 1000), constituency("B", 500), constituency("C", 2000)];
    let m = model_with_theta(&["p1", "p2", "p3"], &[vec![0.8, 0.2], vec![0.3, 0.7], vec![0.5, 0.5]]);
    (c, meta, m)
}

#[test]
fn three_constituency_z_scores_match_hand_computation() {
    let (c, meta, m) = three_constituency_fixture();
    let profiles = geo::profile_constituencies(&m, &c, &meta).unwrap();
    // A: 95/55 of 150, B: 56/44 of 100, C: 60/140 of 200
    let shares = [[95.0 / 150.0, 55.0 / 150.0], [0.56, 0.44], [0.3, 0.7]];
    // sample mean 0.4977..., sample sd 0.17516... per issue
    let z = [
        [0.7738898634059241, -0.7738898634059246],
        [0.35522813402239184, -0.35522813402239156],
        [-1.1291179974283156, 1.1291179974283154],
    ];
    for (i, p) in profiles.iter().enumerate() {
        let s = p.issue_share.as_ref().unwrap();
        let zz = p.z_scores.as_ref().unwrap();
        for t in 0..2 {
            assert!((s[t] - shares[i][t]).abs() < 1e-12);
            assert!((zz[t] - z[i][t]).abs() < 1e-12, "{} issue {t}: {} vs {}", p.meta.code, zz[t], z[i][t]);
        }
    }
    assert_eq!(profiles[0].total_signatures, 150);
    assert!((profiles[1].per_elector - 0.2).abs() < 1e-15);
    let mass: u64 = profiles.iter().map(|p| p.total_signatures).sum();
    assert_eq!(mass, uk_signature_total(&c));
}

#[test]
fn constituency_missing_from_table_is_an_error() {
    let (c, mut meta, m) = three_constituency_fixture();
    meta.pop();
    assert!(geo::profile_constituencies(&m, &c, &meta).is_err());
}

#[test]
fn two_cluster_means_match_hand_computation() {
    let (c, meta, m) = three_constituency_fixture();
    let profiles = geo::profile_constituencies(&m, &c, &meta).unwrap();
    let result = ClusterResult {
        k: 2,
        medoid_indices: vec![0, 2],
        assignments: vec![Some(0), Some(0), Some(1)],
        total_cost: 0.0,
        cost_trace: vec![],
    };
    let means = geo::cluster_issue_profile(&result, &profiles).unwrap();
    let a = (95.0 / 150.0 + 0.56) / 2.0;
    assert!((means[0][0] - a).abs() < 1e-12);
    assert!((means[0][1] - (1.0 - a)).abs() < 1e-12);
    assert!((means[1][0] - 0.3).abs() < 1e-12);
}

#[test]
fn uk_total_sums_constituencies_by_hand() {
    let (c, _, _) = three_constituency_fixture();
    assert_eq!(uk_signature_total(&c), 100 + 20 + 50 + 200 + 80);
}

#[test]
fn five_petition_prevalence() {
    let ids = ["a", "b", "c", "d", "e"];
    let theta = vec![
        vec![0.7, 0.2, 0.1],
        vec![0.1, 0.8, 0.1],
        vec![0.2, 0.2, 0.6],
        vec![0.5, 0.25, 0.25],
        vec![0.05, 0.05, 0.9],
    ];
    let sigs = [10, 2000, 300, 40, 5];
    let m = model_with_theta(&ids, &theta);
    let p = issues::prevalence_from(&m, &sigs).unwrap();
    let want_p = [1.55, 1.5, 1.95];
    let want_s = [
        7.0 + 200.0 + 60.0 + 20.0 + 0.25,
        2.0 + 1600.0 + 60.0 + 10.0 + 0.25,
        1.0 + 200.0 + 180.0 + 10.0 + 4.5,
    ];
    for t in 0..3 {
        assert!((p.by_petitions[t] - want_p[t]).abs() < 1e-12);
        assert!((p.by_signatures[t] - want_s[t]).abs() < 1e-9);
    }
    assert_eq!(p.rank_by_petitions, vec![2, 3, 1]);
    assert_eq!(p.rank_by_signatures, vec![3, 1, 2]);
}

#[test]
fn ten_petition_success_rates() {
    let ids: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    // arg-max topics 0,0,0,0,1,1,1,2,2,2
    let theta: Vec<Vec<f64>> = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
        .iter()
        .map(|&t| {
            let mut r = vec![0.2, 0.2, 0.2];
            r[t] = 0.6;
            r
        })
        .collect();
    let sigs = [10_000, 9_999, 50_000, 3, 12, 20_000, 7, 1, 2, 3];
    let m = model_with_theta(&id_refs, &theta);
    let s = issues::success_probability_from(&m, &sigs, 10_000).unwrap();
    assert_eq!(s.assigned, vec![4, 3, 3]);
    assert_eq!(s.successful, vec![2, 1, 0]);
    assert_eq!(s.raw, vec![Some(0.5), Some(1.0 / 3.0), Some(0.0)]);
    assert_eq!(s.smoothed, vec![0.5, 0.4, 0.2]);
}

#[test]
fn four_petition_series() {
    let (d0, d2) = (day(2016, 1, 1), day(2016, 1, 3));
    let c = corpus(
        vec![
            petition("a", d0, &[("X", 100)]),
            petition("b", d2, &[("X", 10), ("Y", 30)]),
            petition("c", d2, &[("Y", 200)]),
            petition("d", day(2016, 1, 2), &[]),
        ],
        vec![],
    );
    let m = model_with_theta(
        &["a", "b", "c", "d"],
        &[vec![0.9, 0.1], vec![0.5, 0.5], vec![0.25, 0.75], vec![0.5, 0.5]],
    );
    let s = temporal::build_series(&m, &c).unwrap();
    assert_eq!(s.dates[0], d0);
    assert_eq!(s.values[0], vec![90.0, 10.0]);
    assert_eq!(s.values[1], vec![0.0, 0.0]);
    assert_eq!(s.values[2], vec![20.0 + 50.0, 20.0 + 150.0]);
    assert!(s.values[3..].iter().all(|v| v == &[0.0, 0.0]));
    assert!((s.total() - 340.0).abs() < 1e-9);
}

#[test]
fn injected_ten_sigma_jump_is_the_only_flag() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let n = 200;
    let jump_at = 120;
    let dates: Vec<_> = day(2016, 1, 1).iter_days().take(n).collect();
    let mut changes: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    changes[jump_at] = 10.0;
    let mut h = vec![0.5];
    for c in &changes[1..] {
        h.push(h.last().unwrap() * (1.0 + c / 100.0));
    }
    let pct = (0..n)
        .map(|t| (t > 0).then(|| (h[t] / h[t - 1] - 1.0) * 100.0))
        .collect();
    let es = EntropySeries {
        dates: dates.clone(),
        h: h.into_iter().map(Some).collect(),
        pct_change: pct,
    };
    let v = detect_volatility(&es).unwrap();
    assert_eq!(v.flags.len(), 1);
    assert_eq!(v.flags[0].date, dates[jump_at]);
    assert_eq!(v.increases(), 1);
}

#[test]
fn pam_matches_brute_force_on_two_blobs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<Vec<f64>> = (0..12)
        .map(|i| {
            let c = if i < 6 { 0.0 } else { 20.0 };
            vec![c + rng.random_range(-1.0..1.0), c + rng.random_range(-1.0..1.0)]
        })
        .collect();
    let dist = DistanceMatrix::from_points(&pts, Metric::Euclidean);
    let r = geo::pam(&dist, 2, 0).unwrap();
    let (best, medoids) = brute_force_cost(&dist, 2);
    assert!((r.cost - best).abs() < 1e-9);
    assert_eq!(r.medoids, medoids);
    assert_eq!(r.assignment, geo::assign(&dist, &medoids));
    assert!(r.assignment[..6].iter().all(|&c| c == r.assignment[0]));
    assert!(r.assignment[6..].iter().all(|&c| c != r.assignment[0]));
}

#[test]
fn k_is_n_minus_one_on_three_points() {
    let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![5.0, 5.0]];
    let dist = DistanceMatrix::from_points(&pts, Metric::Euclidean);
    let r = geo::pam(&dist, 2, 1).unwrap();
    assert_eq!(r.assignment[0], r.assignment[1]);
    assert_ne!(r.assignment[2], r.assignment[0]);
    assert!(r.medoids.contains(&2));
}

fn zeta_tail(rng: &mut ChaCha8Rng, alpha: f64, x_min: u64, n: usize) -> Vec<u64> {
    let z = Zeta::new(alpha).unwrap();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = z.sample(rng);
        if x >= x_min as f64 {
            out.push(x as u64);
        }
    }
    out
}

#[test]
fn recovers_exponent_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs = zeta_tail(&mut rng, 2.0, 10, 10_000);
    let fit = fit_powerlaw(&xs, 10).unwrap();
    assert!((fit.exponent - 2.0).abs() < 0.05, "{}", fit.exponent);
    assert_eq!(fit.n_tail, 10_000);
    assert!(fit.ks_distance < 0.03);
}

#[test]
fn scan_on_pure_power_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs = zeta_tail(&mut rng, 2.5, 5, 10_000);
    let scan = scan_xmin(&xs, &[5, 10, 20, 50]).unwrap();
    let best = &scan.rows[scan.best.unwrap()];
    assert!(best.x_min <= 20);
    assert!((best.fit.as_ref().unwrap().exponent - 2.5).abs() < 0.05);
}

#[test]
fn divergences_vanish_inside_monte_carlo_envelope() {
    // The envelope comes from the binomial spread of the empirical tail
    // fraction at each threshold.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let xs = zeta_tail(&mut rng, 2.0, 1, 20_000);
    let fit = fit_powerlaw(&xs, 1).unwrap();
    let thresholds = [10, 100];
    let div = threshold_divergence(&xs, &fit, &thresholds).unwrap();
    for (t, d) in thresholds.iter().zip(div) {
        let p = fit.tail_ccdf(*t);
        let sd = (p * (1.0 - p) / xs.len() as f64).sqrt();
        let envelope = ((p + 4.0 * sd) / p).log10();
        let d = d.unwrap();
        assert!(d.abs() < envelope, "threshold {t}: {d} outside {envelope}");
    }
}

#[test]
fn ccdf_matches_direct_count() {
    let xs = [4, 1, 1, 9, 4, 4, 2];
    let c = ccdf(&xs).unwrap();
    for (x, p) in c.x.iter().zip(&c.p) {
        let direct = xs.iter().filter(|&&v| v >= *x).count() as f64 / xs.len() as f64;
        assert_eq!(*p, direct);
    }
    assert!(powerlaw::continuous_mle(&[10.0], 10.0).is_err());
}

#[test]
fn uniform_guessing_scores_one_in_six() {
    let instances: Vec<IntrusionInstance> = (0..400)
        .map(|t| IntrusionInstance {
            topic_index: t,
            shown_words: (0..6).map(|i| format!("w{i}")).collect(),
            intruder_position: t % 6,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let answers: Vec<Vec<usize>> = instances.iter().map(|_| (0..5).map(|_| rng.random_range(0..6)).collect()).collect();
    let s = lda::score_intrusion(&instances, &answers).unwrap();
    // 2000 Bernoulli(1/6) answers: sd about 0.0083
    assert!((s.overall - 1.0 / 6.0).abs() < 0.035, "{}", s.overall);
}

#[test]
fn hand_built_network_keeps_top_half() {
    let m = model_with_theta(
        &["a", "b", "c", "d", "e"],
        &[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.9, 0.1, 0.0, 0.0],
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.0, 0.0, 0.6, 0.4],
            vec![0.1, 0.0, 0.0, 0.9],
        ],
    );
    let net = issues::co_occurrence_network(&m).unwrap();
    // column cosines by hand: (0,1) .09/sqrt(1.82*.26), (0,3) .09/sqrt(1.82*.97),
    // (1,2) .25/sqrt(.26*.61), (2,3) .24/sqrt(.61*.97), the rest 0
    let hand = [
        ((0, 1), 0.09 / (1.82f64 * 0.26).sqrt()),
        ((0, 3), 0.09 / (1.82f64 * 0.97).sqrt()),
        ((1, 2), 0.25 / (0.26f64 * 0.61).sqrt()),
        ((2, 3), 0.24 / (0.61f64 * 0.97).sqrt()),
    ];
    for ((i, j), w) in hand {
        assert!((net.weights[i][j] - w).abs() < 1e-12);
    }
    assert_eq!(net.weights[0][2], 0.0);
    let pruned = issues::prune_network(&net, 0.5).unwrap();
    let kept: Vec<(usize, usize)> = pruned.edges().iter().filter(|e| e.2 > 0.0).map(|e| (e.0, e.1)).collect();
    assert_eq!(kept, vec![(0, 1), (1, 2), (2, 3)]);
}
