//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Every document owns a ChaCha8 stream seeded from the run seed and the
//! document id, so a document's draws do not depend on its row position.
//! With `threads > 1` documents are split into contiguous blocks that
//! sample against a per-sweep snapshot of the topic-word counts; the block
//! deltas are merged in block order at the end of each sweep.

mod grid;
mod matching;
mod validation;

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::meta::{derive_seed, OutputMeta};
use crate::textprep::DocumentTermMatrix;

pub use grid::{grid_search, GridPoint, GridSpec};
pub use matching::{cosine_similarity_matrix, match_topics};
pub use validation::{
    audit_assignments, make_intrusion_instances, read_intrusion_answers, read_intrusion_key,
    read_topic_names, score_intrusion, topic_name, write_intrusion_csv, write_intrusion_key,
    AuditReport, AuditRow, IntrusionInstance, IntrusionScore, TopicScore, COHERENCE_THRESHOLD,
    INTRUSION_WORDS,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Sweeps between retained samples after burn-in. Also the spacing of
    /// log-likelihood records.
    pub thin: usize,
    pub seed: u64,
    /// 1 runs the exact serial sampler.
    pub threads: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            k: 10,
            alpha: 0.1,
            beta: 0.1,
            iterations: 1000,
            burn_in: 200,
            thin: 10,
            seed: 0,
            threads: 1,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        // k = 1 is allowed: it degenerates to smoothed term frequencies.
        if self.k == 0 {
            return Err(Error::Validation("k must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Validation("alpha and beta must be positive".into()));
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::Validation(format!(
                "need 0 <= burn_in ({}) < iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.threads == 0 {
            return Err(Error::Validation("thin and threads must be positive".into()));
        }
        if self.k > u16::MAX as usize {
            return Err(Error::Validation("too many topics".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub sweep: usize,
    pub log_likelihood: f64,
}

/// Fitted topic model. `phi` is K x V and `theta` D x K, both row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub vocabulary: Vec<String>,
    pub vocabulary_hash: String,
    pub doc_ids: Vec<String>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub log_likelihood_trace: Vec<TracePoint>,
    pub samples: usize,
}

const MODEL_FORMAT: &str = "petitions-lda-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelSnapshot {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<OutputMeta>,
    #[serde(flatten)]
    model: TopicModel,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        let v = self.n_terms();
        &self.phi[topic * v..(topic + 1) * v]
    }

    pub fn theta_row(&self, doc: usize) -> &[f64] {
        let k = self.k();
        &self.theta[doc * k..(doc + 1) * k]
    }

    pub fn theta_column(&self, topic: usize) -> Vec<f64> {
        (0..self.n_docs()).map(|d| self.theta_row(d)[topic]).collect()
    }

    /// Arg-max topic per document (lowest index on ties).
    pub fn dominant_topics(&self) -> Vec<usize> {
        (0..self.n_docs()).map(|d| argmax(self.theta_row(d))).collect()
    }

    /// Mean over documents of the largest topic probability.
    pub fn mean_max_theta(&self) -> f64 {
        let total: f64 = (0..self.n_docs())
            .map(|d| self.theta_row(d).iter().cloned().fold(f64::MIN, f64::max))
            .sum();
        total / self.n_docs() as f64
    }

    pub fn write_json(&self, w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        let snap = ModelSnapshot {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            meta: meta.cloned(),
            model: self.clone(),
        };
        serde_json::to_writer(w, &snap)?;
        Ok(())
    }

    pub fn read_json(r: impl Read) -> Result<Self> {
        let snap: ModelSnapshot = serde_json::from_reader(r)?;
        if snap.format != MODEL_FORMAT || snap.version != MODEL_VERSION {
            return Err(Error::Parse(format!(
                "unsupported model snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        let m = snap.model;
        let (k, v, d) = (m.config.k, m.vocabulary.len(), m.doc_ids.len());
        if m.phi.len() != k * v || m.theta.len() != d * k {
            return Err(Error::Dimension("model arrays do not match their shape".into()));
        }
        if crate::meta::sha256_hex(m.vocabulary.join("\n").as_bytes()) != m.vocabulary_hash {
            return Err(Error::Validation("model vocabulary hash mismatch".into()));
        }
        Ok(m)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

struct DocState {
    words: Vec<u32>,
    topics: Vec<u16>,
    counts: Vec<u32>,
    rng: ChaCha8Rng,
}

struct Sampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<DocState>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u64>,
}

impl Sampler {
    fn new(doc_ids: &[String], rows: &[Vec<(u32, u32)>], v: usize, config: &LdaConfig) -> Self {
        let k = config.k;
        let mut topic_word = vec![0u32; k * v];
        let mut topic_totals = vec![0u64; k];
        let docs = doc_ids
            .iter()
            .zip(rows)
            .map(|(id, row)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &format!("doc:{id}")));
                let words: Vec<u32> = row
                    .iter()
                    .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
                    .collect();
                let mut counts = vec![0u32; k];
                let topics = words
                    .iter()
                    .map(|&w| {
                        let z = rng.random_range(0..k);
                        counts[z] += 1;
                        topic_word[z * v + w as usize] += 1;
                        topic_totals[z] += 1;
                        z as u16
                    })
                    .collect();
                DocState {
                    words,
                    topics,
                    counts,
                    rng,
                }
            })
            .collect();
        Self {
            k,
            v,
            alpha: config.alpha,
            beta: config.beta,
            docs,
            topic_word,
            topic_totals,
        }
    }

    fn sweep(&mut self, threads: usize) {
        let params = SweepParams {
            k: self.k,
            v: self.v,
            alpha: self.alpha,
            beta: self.beta,
        };
        if threads <= 1 || self.docs.len() < 2 {
            params.sweep_block(&mut self.docs, &mut self.topic_word, &mut self.topic_totals);
            return;
        }
        let block = self.docs.len().div_ceil(threads);
        let base_tw = self.topic_word.clone();
        let base_tt = self.topic_totals.clone();
        let locals: Vec<(Vec<u32>, Vec<u64>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .docs
                .chunks_mut(block)
                .map(|chunk| {
                    let mut tw = base_tw.clone();
                    let mut tt = base_tt.clone();
                    scope.spawn(move || {
                        params.sweep_block(chunk, &mut tw, &mut tt);
                        (tw, tt)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler thread panicked"))
                .collect()
        });
        for (tw, tt) in locals {
            for ((g, l), b) in self.topic_word.iter_mut().zip(&tw).zip(&base_tw) {
                *g = (*g as i64 + *l as i64 - *b as i64) as u32;
            }
            for ((g, l), b) in self.topic_totals.iter_mut().zip(&tt).zip(&base_tt) {
                *g = (*g as i64 + *l as i64 - *b as i64) as u64;
            }
        }
    }

    /// Collapsed joint log-likelihood log p(w, z).
    fn log_likelihood(&self) -> f64 {
        let (k, v) = (self.k as f64, self.v as f64);
        let mut ll = self.k as f64 * (ln_gamma(v * self.beta) - v * ln_gamma(self.beta));
        for t in 0..self.k {
            let row = &self.topic_word[t * self.v..(t + 1) * self.v];
            ll += row.iter().map(|&c| ln_gamma(c as f64 + self.beta)).sum::<f64>();
            ll -= ln_gamma(self.topic_totals[t] as f64 + v * self.beta);
        }
        let doc_const = ln_gamma(k * self.alpha) - k * ln_gamma(self.alpha);
        for doc in &self.docs {
            ll += doc_const;
            ll += doc.counts.iter().map(|&c| ln_gamma(c as f64 + self.alpha)).sum::<f64>();
            ll -= ln_gamma(doc.words.len() as f64 + k * self.alpha);
        }
        ll
    }

    fn accumulate(&self, phi: &mut [f64], theta: &mut [f64]) {
        let vb = self.v as f64 * self.beta;
        for t in 0..self.k {
            let denom = self.topic_totals[t] as f64 + vb;
            for w in 0..self.v {
                phi[t * self.v + w] += (self.topic_word[t * self.v + w] as f64 + self.beta) / denom;
            }
        }
        let ka = self.k as f64 * self.alpha;
        for (d, doc) in self.docs.iter().enumerate() {
            let denom = doc.words.len() as f64 + ka;
            for t in 0..self.k {
                theta[d * self.k + t] += (doc.counts[t] as f64 + self.alpha) / denom;
            }
        }
    }
}

#[derive(Clone, Copy)]
struct SweepParams {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
}

impl SweepParams {
    fn sweep_block(&self, docs: &mut [DocState], topic_word: &mut [u32], topic_totals: &mut [u64]) {
        let vb = self.v as f64 * self.beta;
        let mut weights = vec![0.0f64; self.k];
        for doc in docs {
            for i in 0..doc.words.len() {
                let w = doc.words[i] as usize;
                let old = doc.topics[i] as usize;
                doc.counts[old] -= 1;
                topic_word[old * self.v + w] -= 1;
                topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..self.k {
                    total += (doc.counts[t] as f64 + self.alpha)
                        * (topic_word[t * self.v + w] as f64 + self.beta)
                        / (topic_totals[t] as f64 + vb);
                    weights[t] = total;
                }
                let u = doc.rng.random::<f64>() * total;
                let new = weights.iter().position(|&c| u < c).unwrap_or(self.k - 1);

                doc.topics[i] = new as u16;
                doc.counts[new] += 1;
                topic_word[new * self.v + w] += 1;
                topic_totals[new] += 1;
            }
        }
    }
}

pub fn fit(dtm: &DocumentTermMatrix, config: &LdaConfig) -> Result<TopicModel> {
    fit_rows(dtm.doc_ids(), dtm.rows(), dtm.vocabulary().terms(), config)
}

/// Fits on raw sparse rows. Columns may be empty, which lets held-out
/// splits keep the full vocabulary.
pub fn fit_rows(
    doc_ids: &[String],
    rows: &[Vec<(u32, u32)>],
    vocabulary: &[String],
    config: &LdaConfig,
) -> Result<TopicModel> {
    config.validate()?;
    if doc_ids.len() != rows.len() {
        return Err(Error::Dimension(format!("{} ids for {} rows", doc_ids.len(), rows.len())));
    }
    let v = vocabulary.len();
    if rows.iter().flatten().any(|&(w, _)| w as usize >= v) {
        return Err(Error::Dimension("term index beyond vocabulary".into()));
    }
    if rows.iter().all(|r| r.iter().all(|&(_, c)| c == 0)) {
        return Err(Error::InsufficientData("document-term matrix has no tokens".into()));
    }

    let mut sampler = Sampler::new(doc_ids, rows, v, config);
    let (k, d) = (config.k, doc_ids.len());
    let mut phi = vec![0.0; k * v];
    let mut theta = vec![0.0; d * k];
    let mut samples = 0usize;
    let mut trace = Vec::new();

    for sweep in 1..=config.iterations {
        sampler.sweep(config.threads);
        if sweep == 1 || sweep % config.thin == 0 || sweep == config.iterations {
            let ll = sampler.log_likelihood();
            if !ll.is_finite() {
                return Err(Error::Numerical(format!("log-likelihood {ll} at sweep {sweep}")));
            }
            trace.push(TracePoint {
                sweep,
                log_likelihood: ll,
            });
        }
        if sweep > config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
            sampler.accumulate(&mut phi, &mut theta);
            samples += 1;
        }
    }
    if samples == 0 {
        sampler.accumulate(&mut phi, &mut theta);
        samples = 1;
    }
    normalize_rows(&mut phi, v);
    normalize_rows(&mut theta, k);

    Ok(TopicModel {
        config: config.clone(),
        vocabulary: vocabulary.to_vec(),
        vocabulary_hash: crate::meta::sha256_hex(vocabulary.join("\n").as_bytes()),
        doc_ids: doc_ids.to_vec(),
        phi,
        theta,
        log_likelihood_trace: trace,
        samples,
    })
}

fn normalize_rows(m: &mut [f64], width: usize) {
    for row in m.chunks_mut(width) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
}

/// `n` highest-probability terms of a topic, ties broken alphabetically.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>> {
    if topic >= model.k() {
        return Err(Error::OutOfRange {
            index: topic,
            len: model.k(),
        });
    }
    Ok(top_word_indices(model, topic, n)
        .into_iter()
        .map(|w| model.vocabulary[w].clone())
        .collect())
}

pub(crate) fn top_word_indices(model: &TopicModel, topic: usize, n: usize) -> Vec<usize> {
    let row = model.phi_row(topic);
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| {
        row[b]
            .total_cmp(&row[a])
            .then_with(|| model.vocabulary[a].cmp(&model.vocabulary[b]))
    });
    idx.truncate(n);
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for InferConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            burn_in: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub theta: Vec<f64>,
    /// Set when the document had no in-vocabulary tokens and `theta` is uniform.
    pub empty_document: bool,
}

/// Topic proportions for an unseen document, sampling its assignments
/// with the topic-word distributions held fixed.
pub fn infer_theta(model: &TopicModel, doc: &[(u32, u32)], config: &InferConfig) -> Result<Inference> {
    let k = model.k();
    let v = model.n_terms();
    if config.iterations == 0 || config.burn_in >= config.iterations {
        return Err(Error::Validation("need burn_in < iterations".into()));
    }
    if let Some(&(w, _)) = doc.iter().find(|&&(w, _)| w as usize >= v) {
        return Err(Error::OutOfRange {
            index: w as usize,
            len: v,
        });
    }
    let words: Vec<usize> = doc
        .iter()
        .flat_map(|&(w, c)| std::iter::repeat_n(w as usize, c as usize))
        .collect();
    if words.is_empty() {
        log::warn!("inferring topics for an empty document; returning uniform proportions");
        return Ok(Inference {
            theta: vec![1.0 / k as f64; k],
            empty_document: true,
        });
    }
    let alpha = model.config.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = vec![0u32; k];
    let mut topics: Vec<usize> = words
        .iter()
        .map(|_| {
            let z = rng.random_range(0..k);
            counts[z] += 1;
            z
        })
        .collect();
    let mut weights = vec![0.0; k];
    let mut acc = vec![0.0; k];
    let denom = words.len() as f64 + k as f64 * alpha;
    for sweep in 1..=config.iterations {
        for (i, &w) in words.iter().enumerate() {
            counts[topics[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += model.phi[t * v + w] * (counts[t] as f64 + alpha);
                weights[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let z = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
            topics[i] = z;
            counts[z] += 1;
        }
        if sweep > config.burn_in {
            for t in 0..k {
                acc[t] += (counts[t] as f64 + alpha) / denom;
            }
        }
    }
    let s: f64 = acc.iter().sum();
    Ok(Inference {
        theta: acc.into_iter().map(|x| x / s).collect(),
        empty_document: false,
    })
}
