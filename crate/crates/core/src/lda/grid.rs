//! Hyperparameter sweep scored by held-out document completion.
//!
//! A seeded fraction of documents is held out. The model is fitted on the
//! rest; each held-out document's even-position tokens are used to infer its
//! topic proportions and the odd-position tokens are scored under them.

use serde::{Deserialize, Serialize};

use super::{fit_rows, infer_theta, InferConfig, LdaConfig};
use crate::error::{Error, Result};
use crate::meta::derive_seed;
use crate::textprep::DocumentTermMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub ks: Vec<usize>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub heldout_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            ks: vec![5, 10, 15, 20],
            alphas: vec![0.1],
            betas: vec![0.1],
            heldout_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub heldout_tokens: usize,
    pub heldout_log_likelihood_per_token: f64,
}

pub fn grid_search(dtm: &DocumentTermMatrix, base: &LdaConfig, spec: &GridSpec) -> Result<Vec<GridPoint>> {
    if !(spec.heldout_fraction > 0.0 && spec.heldout_fraction < 1.0) {
        return Err(Error::Validation("heldout_fraction must lie in (0, 1)".into()));
    }
    if spec.ks.is_empty() || spec.alphas.is_empty() || spec.betas.is_empty() {
        return Err(Error::Validation("empty grid".into()));
    }
    let split_seed = derive_seed(base.seed, "grid-split");
    let mut train_ids = Vec::new();
    let mut train_rows = Vec::new();
    let mut heldout = Vec::new();
    for (id, row) in dtm.doc_ids().iter().zip(dtm.rows()) {
        let u = derive_seed(split_seed, id) as f64 / u64::MAX as f64;
        if u < spec.heldout_fraction {
            heldout.push((id.clone(), row.clone()));
        } else {
            train_ids.push(id.clone());
            train_rows.push(row.clone());
        }
    }
    if heldout.is_empty() || train_ids.is_empty() {
        return Err(Error::InsufficientData("held-out split left one side empty".into()));
    }

    let mut out = Vec::new();
    for &k in &spec.ks {
        for &alpha in &spec.alphas {
            for &beta in &spec.betas {
                let config = LdaConfig {
                    k,
                    alpha,
                    beta,
                    ..base.clone()
                };
                let model = fit_rows(&train_ids, &train_rows, dtm.vocabulary().terms(), &config)?;
                let v = model.n_terms();
                let mut ll = 0.0;
                let mut tokens = 0usize;
                for (id, row) in &heldout {
                    let words: Vec<u32> = row
                        .iter()
                        .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
                        .collect();
                    let mut observed = std::collections::BTreeMap::new();
                    for w in words.iter().step_by(2) {
                        *observed.entry(*w).or_insert(0u32) += 1;
                    }
                    let observed: Vec<(u32, u32)> = observed.into_iter().collect();
                    let infer = InferConfig {
                        seed: derive_seed(base.seed, &format!("grid-infer:{id}")),
                        ..InferConfig::default()
                    };
                    let theta = infer_theta(&model, &observed, &infer)?.theta;
                    for &w in words.iter().skip(1).step_by(2) {
                        let p: f64 = (0..k).map(|t| theta[t] * model.phi[t * v + w as usize]).sum();
                        ll += p.ln();
                        tokens += 1;
                    }
                }
                if tokens == 0 {
                    return Err(Error::InsufficientData("held-out documents have no tokens to score".into()));
                }
                out.push(GridPoint {
                    k,
                    alpha,
                    beta,
                    heldout_tokens: tokens,
                    heldout_log_likelihood_per_token: ll / tokens as f64,
                });
            }
        }
    }
    Ok(out)
}
