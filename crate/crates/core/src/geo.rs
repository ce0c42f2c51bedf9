//! Per-constituency analytics: signature rates, the electorate scaling
//! regression, issue-share Z-scores and k-medoids clustering.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConstituencyMeta, Corpus, UNKNOWN_CONSTITUENCY};
use crate::error::{Error, Result};
use crate::lda::TopicModel;
use crate::meta::{derive_seed, OutputMeta};

pub const DEFAULT_CLUSTERS: usize = 6;
pub const DEFAULT_SCALING_BINS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstituencyProfile {
    pub meta: ConstituencyMeta,
    /// Constituency signatures split across issues by each petition's theta.
    pub issue_mass: Vec<f64>,
    pub total_signatures: u64,
    pub per_elector: f64,
    /// Share of the constituency's signatures per issue; `None` without signatures.
    pub issue_share: Option<Vec<f64>>,
    pub z_scores: Option<Vec<f64>>,
    pub cluster: Option<usize>,
}

pub fn profile_constituencies(
    model: &TopicModel,
    corpus: &Corpus,
    meta: &[ConstituencyMeta],
) -> Result<Vec<ConstituencyProfile>> {
    model.ensure_aligned(corpus)?;
    let slot: HashMap<&str, usize> = meta.iter().enumerate().map(|(i, m)| (m.code.as_str(), i)).collect();
    let k = model.k();
    let mut mass = vec![vec![0.0; k]; meta.len()];
    let mut totals = vec![0u64; meta.len()];
    for (d, p) in corpus.petitions().iter().enumerate() {
        let theta = model.theta_row(d);
        for (code, &n) in &p.signatures_by_constituency {
            if code == UNKNOWN_CONSTITUENCY {
                continue;
            }
            let c = *slot
                .get(code.as_str())
                .ok_or_else(|| Error::Validation(format!("no metadata for constituency {code}")))?;
            totals[c] += n;
            for (m, &t) in mass[c].iter_mut().zip(theta) {
                *m += n as f64 * t;
            }
        }
    }
    let profiles = meta
        .iter()
        .zip(mass)
        .zip(totals)
        .map(|((m, issue_mass), total)| ConstituencyProfile {
            meta: m.clone(),
            issue_mass,
            total_signatures: total,
            per_elector: total as f64 / m.electorate as f64,
            issue_share: None,
            z_scores: None,
            cluster: None,
        })
        .collect();
    standardize(profiles)
}

/// Fills issue shares and Z-scores from `issue_mass`. Constituencies with
/// no signatures keep `None` and are left out of the means and deviations.
pub fn standardize(mut profiles: Vec<ConstituencyProfile>) -> Result<Vec<ConstituencyProfile>> {
    for p in &mut profiles {
        let total: f64 = p.issue_mass.iter().sum();
        p.issue_share = (total > 0.0).then(|| p.issue_mass.iter().map(|m| m / total).collect());
        p.z_scores = None;
    }
    let shares: Vec<&Vec<f64>> = profiles.iter().filter_map(|p| p.issue_share.as_ref()).collect();
    if shares.len() < 2 {
        return Ok(profiles);
    }
    let k = shares[0].len();
    let n = shares.len() as f64;
    let mean: Vec<f64> = (0..k).map(|i| shares.iter().map(|s| s[i]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..k)
        .map(|i| (shares.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        .collect();
    for p in &mut profiles {
        if let Some(share) = &p.issue_share {
            p.z_scores = Some(
                (0..k)
                    .map(|i| if sd[i] > 0.0 { (share[i] - mean[i]) / sd[i] } else { 0.0 })
                    .collect(),
            );
        }
    }
    Ok(profiles)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Raw,
    Binned,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub mode: ScalingMode,
    /// Points in the regression (constituencies or bins).
    pub n: usize,
}

/// Least squares of `ln(signatures)` on `ln(electorate)`. Binned mode sorts
/// constituencies by electorate, cuts them into `bins` equal-count groups and
/// regresses the per-bin means of the logged values.
pub fn scaling_fit(profiles: &[ConstituencyProfile], mode: ScalingMode, bins: usize) -> Result<ScalingFit> {
    let mut pts: Vec<(f64, f64)> = profiles
        .iter()
        .filter(|p| p.total_signatures > 0)
        .map(|p| ((p.meta.electorate as f64).ln(), (p.total_signatures as f64).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} constituencies with signatures, need 3",
            pts.len()
        )));
    }
    if mode == ScalingMode::Binned {
        if bins < 3 || bins > pts.len() {
            return Err(Error::Validation(format!("{bins} bins for {} points", pts.len())));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pts.len();
        pts = (0..bins)
            .map(|b| {
                let chunk = &pts[b * n / bins..(b + 1) * n / bins];
                let m = chunk.len() as f64;
                (
                    chunk.iter().map(|p| p.0).sum::<f64>() / m,
                    chunk.iter().map(|p| p.1).sum::<f64>() / m,
                )
            })
            .collect();
    }
    let (exponent, intercept, r_squared) = ols(&pts)?;
    Ok(ScalingFit {
        exponent,
        intercept,
        r_squared,
        mode,
        n: pts.len(),
    })
}

/// Slope, intercept and R^2 of y on x.
pub fn ols(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(Error::Numerical("predictor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r2))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

/// Dense symmetric dissimilarities.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_points(points: &[Vec<f64>], metric: Metric) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = metric.distance(&points[i], &points[j]);
                d[i * n + j] = x;
                d[j * n + i] = x;
            }
        }
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Sum over points of the distance to their closest medoid.
    pub fn cost(&self, medoids: &[usize]) -> f64 {
        (0..self.n)
            .map(|j| medoids.iter().map(|&m| self.get(j, m)).fold(f64::INFINITY, f64::min))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PamResult {
    /// Sorted point indices; cluster `c` is represented by `medoids[c]`.
    pub medoids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// Cost after BUILD and after every applied swap.
    pub cost_trace: Vec<f64>,
}

/// Partition Around Medoids: greedy BUILD, then best-improvement SWAP until
/// no single medoid/non-medoid exchange lowers the cost. Exact cost ties are
/// broken by a seeded ranking of candidate points.
pub fn pam(dist: &DistanceMatrix, k: usize, seed: u64) -> Result<PamResult> {
    let n = dist.len();
    if k == 0 || k >= n {
        return Err(Error::Validation(format!("k = {k} needs 0 < k < n = {n}")));
    }
    let priority: Vec<u64> = (0..n).map(|i| derive_seed(seed, &format!("pam:{i}"))).collect();
    let scale = (0..n).map(|j| dist.get(0, j)).sum::<f64>().max(1.0);
    let tol = 1e-12 * scale;

    let mut medoids = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let cost: f64 = (0..n).map(|j| nearest[j].min(dist.get(j, c))).sum();
            let better = match best {
                None => true,
                Some((b, bc)) => cost < b - tol || ((cost - b).abs() <= tol && priority[c] < priority[bc]),
            };
            if better {
                best = Some((cost, c));
            }
        }
        let (_, c) = best.expect("candidate exists while k < n");
        medoids.push(c);
        for (j, near) in nearest.iter_mut().enumerate() {
            *near = near.min(dist.get(j, c));
        }
    }

    let mut cost = dist.cost(&medoids);
    let mut trace = vec![cost];
    loop {
        // nearest and second-nearest medoid distance per point
        let mut first = vec![(f64::INFINITY, usize::MAX); n];
        let mut second = vec![f64::INFINITY; n];
        for j in 0..n {
            for (slot, &m) in medoids.iter().enumerate() {
                let x = dist.get(j, m);
                if x < first[j].0 {
                    second[j] = first[j].0;
                    first[j] = (x, slot);
                } else if x < second[j] {
                    second[j] = x;
                }
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for h in (0..n).filter(|h| !medoids.contains(h)) {
            for slot in 0..k {
                let new_cost: f64 = (0..n)
                    .map(|j| {
                        let keep = if first[j].1 == slot { second[j] } else { first[j].0 };
                        keep.min(dist.get(j, h))
                    })
                    .sum();
                let delta = new_cost - cost;
                let better = match best {
                    None => true,
                    Some((b, bh, bs)) => {
                        delta < b - tol
                            || ((delta - b).abs() <= tol && (priority[h], slot) < (priority[bh], bs))
                    }
                };
                if better {
                    best = Some((delta, h, slot));
                }
            }
        }
        match best {
            Some((delta, h, slot)) if delta < -tol => {
                medoids[slot] = h;
                cost = dist.cost(&medoids);
                trace.push(cost);
            }
            _ => break,
        }
    }

    medoids.sort_unstable();
    let assignment = assign(dist, &medoids);
    Ok(PamResult {
        cost: dist.cost(&medoids),
        medoids,
        assignment,
        cost_trace: trace,
    })
}

/// Nearest-medoid labels; medoids always label themselves.
pub fn assign(dist: &DistanceMatrix, medoids: &[usize]) -> Vec<usize> {
    (0..dist.len())
        .map(|j| {
            if let Some(c) = medoids.iter().position(|&m| m == j) {
                return c;
            }
            let mut best = 0;
            for c in 1..medoids.len() {
                if dist.get(j, medoids[c]) < dist.get(j, medoids[best]) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// True when no single medoid/non-medoid exchange lowers the cost by more
/// than `tol`. Recomputes every candidate cost from scratch.
pub fn is_swap_optimal(dist: &DistanceMatrix, medoids: &[usize], tol: f64) -> bool {
    let base = dist.cost(medoids);
    for slot in 0..medoids.len() {
        for h in (0..dist.len()).filter(|h| !medoids.contains(h)) {
            let mut trial = medoids.to_vec();
            trial[slot] = h;
            if dist.cost(&trial) < base - tol {
                return false;
            }
        }
    }
    true
}

/// Mean silhouette width; points alone in their cluster score 0.
pub fn silhouette(dist: &DistanceMatrix, assignment: &[usize], k: usize) -> f64 {
    let n = dist.len();
    let mut sizes = vec![0usize; k];
    assignment.iter().for_each(|&c| sizes[c] += 1);
    let total: f64 = (0..n)
        .map(|i| {
            let own = assignment[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[assignment[j]] += dist.get(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() || a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .sum();
    total / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterResult {
    pub k: usize,
    /// Profile indices of the medoids, in cluster order.
    pub medoid_indices: Vec<usize>,
    /// Cluster per profile; `None` for constituencies without Z-scores.
    pub assignments: Vec<Option<usize>>,
    pub total_cost: f64,
    pub cost_trace: Vec<f64>,
}

impl ClusterResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        self.assignments.iter().flatten().for_each(|&c| s[c] += 1);
        s
    }
}

fn clustered_points(profiles: &[ConstituencyProfile]) -> (Vec<usize>, Vec<Vec<f64>>) {
    profiles
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.z_scores.clone().map(|z| (i, z)))
        .unzip()
}

/// PAM over Z-score vectors of the constituencies that have them.
pub fn pam_cluster(profiles: &[ConstituencyProfile], k: usize, seed: u64, metric: Metric) -> Result<ClusterResult> {
    let (index, points) = clustered_points(profiles);
    let dist = DistanceMatrix::from_points(&points, metric);
    let res = pam(&dist, k, seed)?;
    let mut assignments = vec![None; profiles.len()];
    for (pos, &c) in res.assignment.iter().enumerate() {
        assignments[index[pos]] = Some(c);
    }
    Ok(ClusterResult {
        k,
        medoid_indices: res.medoids.iter().map(|&m| index[m]).collect(),
        assignments,
        total_cost: res.cost,
        cost_trace: res.cost_trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SilhouettePoint {
    pub k: usize,
    pub silhouette: f64,
    pub total_cost: f64,
}

pub fn silhouette_sweep(
    profiles: &[ConstituencyProfile],
    ks: &[usize],
    seed: u64,
    metric: Metric,
) -> Result<Vec<SilhouettePoint>> {
    let (_, points) = clustered_points(profiles);
    let dist = DistanceMatrix::from_points(&points, metric);
    ks.iter()
        .map(|&k| {
            let res = pam(&dist, k, seed)?;
            Ok(SilhouettePoint {
                k,
                silhouette: silhouette(&dist, &res.assignment, k),
                total_cost: res.cost,
            })
        })
        .collect()
}

/// Mean issue share within each cluster.
pub fn cluster_issue_profile(result: &ClusterResult, profiles: &[ConstituencyProfile]) -> Result<Vec<Vec<f64>>> {
    if result.assignments.len() != profiles.len() {
        return Err(Error::Dimension("clustering does not match profiles".into()));
    }
    let k_issues = profiles
        .iter()
        .find_map(|p| p.issue_share.as_ref().map(Vec::len))
        .unwrap_or(0);
    let mut sums = vec![vec![0.0; k_issues]; result.k];
    let mut counts = vec![0usize; result.k];
    for (p, c) in profiles.iter().zip(&result.assignments) {
        if let (Some(c), Some(share)) = (c, &p.issue_share) {
            counts[*c] += 1;
            sums[*c].iter_mut().zip(share).for_each(|(s, x)| *s += x);
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .map(|(s, n)| s.into_iter().map(|x| x / n.max(1) as f64).collect())
        .collect())
}

pub fn apply_clusters(profiles: &mut [ConstituencyProfile], result: &ClusterResult) {
    for (p, c) in profiles.iter_mut().zip(&result.assignments) {
        p.cluster = *c;
    }
}

/// Profiles CSV `code,name,electorate,total_signatures,per_elector,share_0..,z_0..,cluster`.
pub fn write_profiles_csv(profiles: &[ConstituencyProfile], mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
    if let Some(m) = meta {
        m.write_csv_header(&mut w)?;
    }
    let k = profiles.first().map_or(0, |p| p.issue_mass.len());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["code", "name", "electorate", "total_signatures", "per_elector"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..k).map(|i| format!("share_{i}")));
    header.extend((0..k).map(|i| format!("z_{i}")));
    header.push("cluster".into());
    wtr.write_record(&header)?;
    let cells = |v: &Option<Vec<f64>>| -> Vec<String> {
        match v {
            Some(v) => v.iter().map(f64::to_string).collect(),
            None => vec!["NA".to_string(); k],
        }
    };
    for p in profiles {
        let mut rec = vec![
            p.meta.code.clone(),
            p.meta.name.clone(),
            p.meta.electorate.to_string(),
            p.total_signatures.to_string(),
            p.per_elector.to_string(),
        ];
        rec.extend(cells(&p.issue_share));
        rec.extend(cells(&p.z_scores));
        rec.push(p.cluster.map_or_else(|| "NA".to_string(), |c| c.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("profiles", e))
}

/// Cluster membership CSV `code,cluster`.
pub fn write_clusters_csv(
    profiles: &[ConstituencyProfile],
    result: &ClusterResult,
    mut w: impl Write,
    meta: Option<&OutputMeta>,
) -> Result<()> {
    if let Some(m) = meta {
        m.write_csv_header(&mut w)?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["code", "cluster"])?;
    for (p, c) in profiles.iter().zip(&result.assignments) {
        if let Some(c) = c {
            wtr.write_record([p.meta.code.clone(), c.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("clusters", e))
}

/// Per-cluster mean shares CSV `cluster,size,share_0..`.
pub fn write_cluster_shares_csv(
    shares: &[Vec<f64>],
    sizes: &[usize],
    mut w: impl Write,
    meta: Option<&OutputMeta>,
) -> Result<()> {
    if let Some(m) = meta {
        m.write_csv_header(&mut w)?;
    }
    let k = shares.first().map_or(0, Vec::len);
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["cluster".to_string(), "size".to_string()];
    header.extend((0..k).map(|i| format!("share_{i}")));
    wtr.write_record(&header)?;
    for (c, row) in shares.iter().enumerate() {
        let mut rec = vec![c.to_string(), sizes.get(c).copied().unwrap_or(0).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("cluster shares", e))
}
