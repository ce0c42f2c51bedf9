//! Issue prevalence, success rates and issue-similarity networks.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lda::{topic_name, TopicModel};
use crate::meta::OutputMeta;

/// Government response threshold.
pub const RESPONSE_THRESHOLD: u64 = 10_000;
/// Fraction of strongest edges kept for drawing.
pub const DEFAULT_KEEP_FRACTION: f64 = 0.2;

impl TopicModel {
    /// Errors unless `theta` rows correspond one-to-one, in order, with the
    /// corpus petitions.
    pub fn ensure_aligned(&self, corpus: &Corpus) -> Result<()> {
        let ids = corpus.petitions().iter().map(|p| &p.id);
        if self.n_docs() != corpus.len() || !self.doc_ids.iter().eq(ids) {
            return Err(Error::Dimension(format!(
                "model covers {} documents, corpus holds {} petitions with different ids",
                self.n_docs(),
                corpus.len()
            )));
        }
        Ok(())
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!("lengths {} and {}", u.len(), v.len())));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Validation("cosine of a zero vector".into()));
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IssuePrevalence {
    pub by_petitions: Vec<f64>,
    pub by_signatures: Vec<f64>,
    /// 1 is most prevalent.
    pub rank_by_petitions: Vec<usize>,
    pub rank_by_signatures: Vec<usize>,
}

/// Ranks descending, 1-based; ties keep topic order.
pub fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut r = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        r[i] = pos + 1;
    }
    r
}

pub fn prevalence(model: &TopicModel, corpus: &Corpus) -> Result<IssuePrevalence> {
    model.ensure_aligned(corpus)?;
    prevalence_from(model, &corpus.uk_signatures())
}

/// Prevalence with explicit per-document weights.
pub fn prevalence_from(model: &TopicModel, signatures: &[u64]) -> Result<IssuePrevalence> {
    if signatures.len() != model.n_docs() {
        return Err(Error::Dimension(format!(
            "{} signature counts for {} documents",
            signatures.len(),
            model.n_docs()
        )));
    }
    let k = model.k();
    let mut by_petitions = vec![0.0; k];
    let mut by_signatures = vec![0.0; k];
    for (d, &s) in signatures.iter().enumerate() {
        for (t, &p) in model.theta_row(d).iter().enumerate() {
            by_petitions[t] += p;
            by_signatures[t] += s as f64 * p;
        }
    }
    Ok(IssuePrevalence {
        rank_by_petitions: ranks(&by_petitions),
        rank_by_signatures: ranks(&by_signatures),
        by_petitions,
        by_signatures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessProbability {
    pub threshold: u64,
    pub assigned: Vec<usize>,
    pub successful: Vec<usize>,
    /// Raw fraction; `None` for topics with no assigned petitions.
    pub raw: Vec<Option<f64>>,
    /// Posterior mean under a uniform Beta(1, 1) prior.
    pub smoothed: Vec<f64>,
}

/// Share of petitions, by dominant topic, whose total signatures reach
/// `threshold`.
pub fn success_probability(model: &TopicModel, corpus: &Corpus, threshold: u64) -> Result<SuccessProbability> {
    model.ensure_aligned(corpus)?;
    let totals: Vec<u64> = corpus.petitions().iter().map(|p| p.total_signatures).collect();
    success_probability_from(model, &totals, threshold)
}

pub fn success_probability_from(model: &TopicModel, signatures: &[u64], threshold: u64) -> Result<SuccessProbability> {
    if threshold == 0 {
        return Err(Error::Validation("threshold must be positive".into()));
    }
    if signatures.len() != model.n_docs() {
        return Err(Error::Dimension("signature counts do not match documents".into()));
    }
    let k = model.k();
    let mut assigned = vec![0; k];
    let mut successful = vec![0; k];
    for (t, &s) in model.dominant_topics().iter().zip(signatures) {
        assigned[*t] += 1;
        if s >= threshold {
            successful[*t] += 1;
        }
    }
    let raw = assigned
        .iter()
        .zip(&successful)
        .map(|(&n, &s)| (n > 0).then(|| s as f64 / n as f64))
        .collect();
    let smoothed = assigned
        .iter()
        .zip(&successful)
        .map(|(&n, &s)| (s as f64 + 1.0) / (n as f64 + 2.0))
        .collect();
    Ok(SuccessProbability {
        threshold,
        assigned,
        successful,
        raw,
        smoothed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    CoOccurrence,
    WordDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IssueNetwork {
    pub kind: NetworkKind,
    pub weights: Vec<Vec<f64>>,
    /// Signatures per issue; empty until attached.
    pub node_sizes: Vec<f64>,
}

impl IssueNetwork {
    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn with_node_sizes(mut self, sizes: Vec<f64>) -> Result<Self> {
        if sizes.len() != self.size() {
            return Err(Error::Dimension("node sizes do not match network".into()));
        }
        self.node_sizes = sizes;
        Ok(self)
    }

    /// Off-diagonal pairs `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.size();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.weights[i][j]))
            .collect()
    }

    /// Mean, minimum and maximum off-diagonal weight, with the extreme pairs.
    pub fn summary(&self) -> Option<NetworkSummary> {
        let edges = self.edges();
        if edges.is_empty() {
            return None;
        }
        let mean = edges.iter().map(|e| e.2).sum::<f64>() / edges.len() as f64;
        let max = *edges.iter().max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0))).unwrap();
        let min = *edges.iter().min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0))).unwrap();
        Some(NetworkSummary {
            mean,
            max_pair: (max.0, max.1),
            max: max.2,
            min_pair: (min.0, min.1),
            min: min.2,
        })
    }

    /// Edge list CSV `source,target,weight` (zero-weight edges skipped).
    pub fn write_edges_csv(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["source", "target", "weight"])?;
        for (i, j, wgt) in self.edges() {
            if wgt > 0.0 {
                wtr.write_record([i.to_string(), j.to_string(), wgt.to_string()])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("network edges", e))
    }

    /// Node CSV `topic,name,signatures`.
    pub fn write_nodes_csv(
        &self,
        mut w: impl Write,
        names: &BTreeMap<usize, String>,
        meta: Option<&OutputMeta>,
    ) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["topic", "name", "signatures"])?;
        for t in 0..self.size() {
            let size = self.node_sizes.get(t).copied().unwrap_or(0.0);
            wtr.write_record([t.to_string(), topic_name(names, t), size.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("network nodes", e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetworkSummary {
    pub mean: f64,
    pub max_pair: (usize, usize),
    pub max: f64,
    pub min_pair: (usize, usize),
    pub min: f64,
}

fn similarity_network(kind: NetworkKind, vectors: &[Vec<f64>]) -> Result<IssueNetwork> {
    let n = vectors.len();
    let mut weights = vec![vec![0.0; n]; n];
    for i in 0..n {
        weights[i][i] = 1.0;
        for j in (i + 1)..n {
            let c = cosine(&vectors[i], &vectors[j])?;
            weights[i][j] = c;
            weights[j][i] = c;
        }
    }
    Ok(IssueNetwork {
        kind,
        weights,
        node_sizes: Vec::new(),
    })
}

/// Cosine similarity between topic columns of theta.
pub fn co_occurrence_network(model: &TopicModel) -> Result<IssueNetwork> {
    let cols: Vec<Vec<f64>> = (0..model.k()).map(|t| model.theta_column(t)).collect();
    similarity_network(NetworkKind::CoOccurrence, &cols)
}

/// Cosine similarity between topic rows of phi.
pub fn word_distribution_network(model: &TopicModel) -> Result<IssueNetwork> {
    let rows: Vec<Vec<f64>> = (0..model.k()).map(|t| model.phi_row(t).to_vec()).collect();
    similarity_network(NetworkKind::WordDistribution, &rows)
}

/// Keeps the `ceil(keep_fraction * pairs)` strongest edges, plus any edge
/// tied with the weakest kept one. Everything else drops to zero.
pub fn prune_network(net: &IssueNetwork, keep_fraction: f64) -> Result<IssueNetwork> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Validation(format!("keep_fraction {keep_fraction} outside (0, 1]")));
    }
    let edges = net.edges();
    if edges.is_empty() {
        return Ok(net.clone());
    }
    let keep = ((keep_fraction * edges.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut sorted: Vec<f64> = edges.iter().map(|e| e.2).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[keep.min(sorted.len()) - 1];
    let mut out = net.clone();
    for (i, j, w) in edges {
        if w < cutoff {
            out.weights[i][j] = 0.0;
            out.weights[j][i] = 0.0;
        }
    }
    Ok(out)
}

/// Prevalence table `topic,name,mass_by_petitions,rank_p,mass_by_signatures,rank_s,success_probability`
/// with the Beta(1,1)-smoothed success rate appended. Undefined rates print `NA`.
pub fn write_prevalence_csv(
    prev: &IssuePrevalence,
    success: &SuccessProbability,
    names: &BTreeMap<usize, String>,
    mut w: impl Write,
    meta: Option<&OutputMeta>,
) -> Result<()> {
    if let Some(m) = meta {
        m.write_csv_header(&mut w)?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "topic",
        "name",
        "mass_by_petitions",
        "rank_p",
        "mass_by_signatures",
        "rank_s",
        "success_probability",
        "success_probability_smoothed",
    ])?;
    for t in 0..prev.by_petitions.len() {
        wtr.write_record([
            t.to_string(),
            topic_name(names, t),
            prev.by_petitions[t].to_string(),
            prev.rank_by_petitions[t].to_string(),
            prev.by_signatures[t].to_string(),
            prev.rank_by_signatures[t].to_string(),
            success.raw[t].map_or_else(|| "NA".to_string(), |p| p.to_string()),
            success.smoothed[t].to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("prevalence", e))
}
