//! Topic-model behaviour on corpora with known planted structure.

mod common;

use common::cosine;
use petitions::lda::{
    self, audit_assignments, cosine_similarity_matrix, infer_theta, make_intrusion_instances, match_topics,
    InferConfig, LdaConfig, TopicModel,
};
use petitions::issues::word_distribution_network;
use petitions::synthetic::{planted_corpus, PlantedCorpus, PlantedSpec};
use petitions::textprep::DocumentTermMatrix;

fn config(seed: u64) -> LdaConfig {
    LdaConfig {
        k: 3,
        iterations: 300,
        burn_in: 100,
        seed,
        ..LdaConfig::default()
    }
}

fn fitted(spec: &PlantedSpec, seed: u64) -> (PlantedCorpus, TopicModel, Vec<usize>) {
    let planted = planted_corpus(spec).unwrap();
    let model = lda::fit(&planted.dtm, &config(seed)).unwrap();
    let fitted: Vec<Vec<f64>> = (0..3).map(|t| model.phi_row(t).to_vec()).collect();
    let sim = cosine_similarity_matrix(&planted.phi, &fitted).unwrap();
    let matching = match_topics(&sim).unwrap();
    (planted, model, matching)
}

fn planted_block(term: &str) -> usize {
    term[1..3].parse().unwrap()
}

#[test]
fn recovers_planted_topics() {
    let (planted, model, matching) = fitted(&PlantedSpec::default(), 11);
    for (truth, &fit) in matching.iter().enumerate() {
        let c = cosine(&planted.phi[truth], model.phi_row(fit));
        assert!(c >= 0.9, "planted {truth}: cosine {c}");
        for w in lda::top_words(&model, fit, 6).unwrap() {
            assert_eq!(planted_block(&w), truth, "{w} in topic {fit}");
        }
    }
}

#[test]
fn likelihood_rises_after_burn_in() {
    let (_, model, _) = fitted(&PlantedSpec::default(), 5);
    let first = model.log_likelihood_trace[0].log_likelihood;
    let burn = model.config.burn_in;
    let post: Vec<f64> = model
        .log_likelihood_trace
        .iter()
        .filter(|p| p.sweep > burn)
        .map(|p| p.log_likelihood)
        .collect();
    assert!(!post.is_empty());
    assert!(post.iter().sum::<f64>() / post.len() as f64 >= first);
}

#[test]
fn intruders_come_from_outside_the_planted_block() {
    let (_, model, matching) = fitted(&PlantedSpec::default(), 2);
    let inst = make_intrusion_instances(&model, 99).unwrap();
    assert_eq!(inst.len(), 3);
    for i in &inst {
        let truth = matching.iter().position(|&f| f == i.topic_index).unwrap();
        assert_ne!(planted_block(i.intruder()), truth);
        let mut shown = i.shown_words.clone();
        shown.sort();
        shown.dedup();
        assert_eq!(shown.len(), 6);
    }
}

#[test]
fn audit_agrees_with_planted_labels() {
    let (planted, model, matching) = fitted(&PlantedSpec::default(), 3);
    let report = audit_assignments(&model, 0.9, 10, 1).unwrap();
    assert!(!report.rows.is_empty());
    for row in &report.rows {
        let d = model.doc_ids.iter().position(|id| *id == row.petition_id).unwrap();
        assert_eq!(matching[planted.dominant[d]], row.topic);
    }
    assert!(audit_assignments(&model, 1.0, 10, 1).unwrap().rows.is_empty());
}

#[test]
fn inference_finds_the_matching_topic() {
    let (planted, model, matching) = fitted(&PlantedSpec::default(), 8);
    let vocab = planted.dtm.vocabulary();
    let doc: Vec<(u32, u32)> = (0..10)
        .map(|j| (vocab.index_of(&format!("t02w{j:03}")).unwrap() as u32, 2))
        .collect();
    let inf = infer_theta(&model, &doc, &InferConfig { seed: 4, ..InferConfig::default() }).unwrap();
    let top = inf.theta.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(top, matching[2]);

    for d in [0, 57, 133] {
        let again = infer_theta(&model, planted.dtm.row(d), &InferConfig::default()).unwrap();
        assert!(cosine(&again.theta, model.theta_row(d)) >= 0.8);
    }
}

#[test]
fn permuted_documents_give_matching_topics() {
    let planted = planted_corpus(&PlantedSpec::default()).unwrap();
    let a = lda::fit(&planted.dtm, &config(21)).unwrap();
    let n = planted.dtm.n_docs();
    let order: Vec<usize> = (0..n).rev().collect();
    let ids: Vec<String> = order.iter().map(|&d| planted.dtm.doc_ids()[d].clone()).collect();
    let rows: Vec<Vec<(u32, u32)>> = order.iter().map(|&d| planted.dtm.row(d).to_vec()).collect();
    let permuted = DocumentTermMatrix::from_rows(ids, planted.dtm.vocabulary().clone(), rows).unwrap();
    let b = lda::fit(&permuted, &config(21)).unwrap();
    let pa: Vec<Vec<f64>> = (0..3).map(|t| a.phi_row(t).to_vec()).collect();
    let pb: Vec<Vec<f64>> = (0..3).map(|t| b.phi_row(t).to_vec()).collect();
    let sim = cosine_similarity_matrix(&pa, &pb).unwrap();
    let m = match_topics(&sim).unwrap();
    for (i, &j) in m.iter().enumerate() {
        assert!(sim[i][j] >= 0.999, "topic {i}: {}", sim[i][j]);
    }
    for (pos, &d) in order.iter().enumerate() {
        let ta: Vec<f64> = m.iter().map(|&j| b.theta_row(pos)[j]).collect();
        assert!(cosine(&ta, a.theta_row(d)) > 0.99);
    }
}

#[test]
fn word_network_matches_smoothing_floor() {
    // Pure documents: every token of doc d belongs to topic d % 3, so a
    // perfect sampler has phi[k][w] = (count + beta) / (total + V beta).
    let spec = PlantedSpec {
        purity: 1.0,
        ..PlantedSpec::default()
    };
    let (planted, model, matching) = fitted(&spec, 13);
    let v = planted.dtm.n_terms();
    let beta = model.config.beta;
    let mut counts = vec![vec![0.0; v]; 3];
    for d in 0..planted.dtm.n_docs() {
        for &(w, c) in planted.dtm.row(d) {
            counts[planted.dominant[d]][w as usize] += c as f64;
        }
    }
    let oracle: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            row.iter().map(|c| (c + beta) / (total + v as f64 * beta)).collect()
        })
        .collect();
    let net = word_distribution_network(&model).unwrap();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let want = cosine(&oracle[i], &oracle[j]);
            let got = net.weights[matching[i]][matching[j]];
            assert!(want < 0.01);
            assert!((got - want).abs() < 1e-3, "pair {i},{j}: {got} vs {want}");
        }
    }
}
