#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::NaiveDate;
use petitions::corpus::{ConstituencyMeta, Corpus, Petition, PetitionState};
use petitions::geo::DistanceMatrix;
use petitions::lda::{LdaConfig, TopicModel};
use petitions::meta::sha256_hex;

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn petition(id: &str, created: NaiveDate, by_constituency: &[(&str, u64)]) -> Petition {
    let by_constituency: BTreeMap<String, u64> = by_constituency.iter().map(|(c, n)| (c.to_string(), *n)).collect();
    let total = by_constituency.values().sum();
    Petition {
        id: id.into(),
        action: format!("petition {id}"),
        background: String::new(),
        additional_details: None,
        created_at: created,
        state: PetitionState::Accepted,
        total_signatures: total,
        signatures_by_constituency: by_constituency,
        signatures_by_country: BTreeMap::new(),
    }
}

pub fn corpus(petitions: Vec<Petition>, meta: Vec<ConstituencyMeta>) -> Corpus {
    Corpus::new(petitions, meta, (day(2016, 1, 1), day(2016, 12, 31))).unwrap()
}

pub fn constituency(code: &str, electorate: u64) -> ConstituencyMeta {
    ConstituencyMeta {
        code: code.into(),
        name: format!("{code} seat"),
        electorate,
    }
}

/// A model with the given theta rows and a uniform two-word phi.
pub fn model_with_theta(ids: &[&str], theta: &[Vec<f64>]) -> TopicModel {
    let k = theta[0].len();
    let vocabulary = vec!["w0".to_string(), "w1".to_string()];
    TopicModel {
        config: LdaConfig { k, ..LdaConfig::default() },
        vocabulary_hash: sha256_hex(vocabulary.join("\n").as_bytes()),
        vocabulary,
        doc_ids: ids.iter().map(|s| s.to_string()).collect(),
        phi: vec![0.5; 2 * k],
        theta: theta.concat(),
        log_likelihood_trace: vec![],
        samples: 1,
    }
}

/// Lowest cost over every k-subset of medoids.
pub fn brute_force_cost(dist: &DistanceMatrix, k: usize) -> (f64, Vec<usize>) {
    fn rec(dist: &DistanceMatrix, k: usize, start: usize, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if cur.len() == k {
            let c = dist.cost(cur);
            if c < best.0 {
                *best = (c, cur.clone());
            }
            return;
        }
        for i in start..dist.len() {
            cur.push(i);
            rec(dist, k, i + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    rec(dist, k, 0, &mut Vec::new(), &mut best);
    best
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
