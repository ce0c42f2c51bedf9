//! Human validation aids: word intrusion and high-confidence assignment audits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{top_word_indices, TopicModel};
use crate::error::{Error, Result};
use crate::meta::{derive_seed, OutputMeta};

pub const INTRUSION_WORDS: usize = 6;
/// Topics scoring below this intrusion accuracy are flagged as incoherent.
pub const COHERENCE_THRESHOLD: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntrusionInstance {
    pub topic_index: usize,
    pub shown_words: Vec<String>,
    pub intruder_position: usize,
}

impl IntrusionInstance {
    pub fn intruder(&self) -> &str {
        &self.shown_words[self.intruder_position]
    }
}

/// One instance per topic: the five most probable words plus one word drawn
/// uniformly from those at or below the topic's median probability.
pub fn make_intrusion_instances(model: &TopicModel, seed: u64) -> Result<Vec<IntrusionInstance>> {
    let v = model.n_terms();
    if v <= INTRUSION_WORDS {
        return Err(Error::InsufficientData(format!(
            "word intrusion needs at least {} terms, model has {v}",
            INTRUSION_WORDS + 1
        )));
    }
    (0..model.k())
        .map(|topic| {
            let row = model.phi_row(topic);
            let top = top_word_indices(model, topic, INTRUSION_WORDS - 1);
            let cutoff = median(row);
            let pool: Vec<usize> = (0..v)
                .filter(|w| row[*w] <= cutoff && !top.contains(w))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("intrusion:{topic}")));
            let intruder = pool[rng.random_range(0..pool.len())];
            let mut order: Vec<usize> = top.iter().copied().chain([intruder]).collect();
            order.shuffle(&mut rng);
            Ok(IntrusionInstance {
                topic_index: topic,
                intruder_position: order.iter().position(|&w| w == intruder).unwrap(),
                shown_words: order.into_iter().map(|w| model.vocabulary[w].clone()).collect(),
            })
        })
        .collect()
}

fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopicScore {
    pub topic: usize,
    pub correct: usize,
    pub answered: usize,
    /// `None` when nobody answered this topic.
    pub accuracy: Option<f64>,
    pub below_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntrusionScore {
    pub per_topic: Vec<TopicScore>,
    pub overall: f64,
    pub flagged_topics: Vec<usize>,
}

/// Scores annotator picks. `answers[i]` holds every subject's chosen
/// position for `instances[i]`.
pub fn score_intrusion(instances: &[IntrusionInstance], answers: &[Vec<usize>]) -> Result<IntrusionScore> {
    if instances.len() != answers.len() {
        return Err(Error::Dimension(format!(
            "{} instances but {} answer sets",
            instances.len(),
            answers.len()
        )));
    }
    let mut per_topic = Vec::with_capacity(instances.len());
    let (mut correct_all, mut answered_all) = (0usize, 0usize);
    for (inst, picks) in instances.iter().zip(answers) {
        if let Some(&bad) = picks.iter().find(|&&p| p >= inst.shown_words.len()) {
            return Err(Error::OutOfRange {
                index: bad,
                len: inst.shown_words.len(),
            });
        }
        let correct = picks.iter().filter(|&&p| p == inst.intruder_position).count();
        let accuracy = (!picks.is_empty()).then(|| correct as f64 / picks.len() as f64);
        correct_all += correct;
        answered_all += picks.len();
        per_topic.push(TopicScore {
            topic: inst.topic_index,
            correct,
            answered: picks.len(),
            accuracy,
            below_threshold: accuracy.is_some_and(|a| a < COHERENCE_THRESHOLD),
        });
    }
    if answered_all == 0 {
        return Err(Error::InsufficientData("no intrusion answers".into()));
    }
    let flagged_topics = per_topic.iter().filter(|t| t.below_threshold).map(|t| t.topic).collect();
    Ok(IntrusionScore {
        per_topic,
        overall: correct_all as f64 / answered_all as f64,
        flagged_topics,
    })
}

/// Annotator sheet: `topic,word1..word6`.
pub fn write_intrusion_csv(instances: &[IntrusionInstance], w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
    write_instances(instances, w, meta, false)
}

/// Answer key: the annotator sheet plus `intruder_position`.
pub fn write_intrusion_key(instances: &[IntrusionInstance], w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
    write_instances(instances, w, meta, true)
}

fn write_instances(
    instances: &[IntrusionInstance],
    mut w: impl Write,
    meta: Option<&OutputMeta>,
    with_key: bool,
) -> Result<()> {
    if let Some(m) = meta {
        m.write_csv_header(&mut w)?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["topic".to_string()];
    header.extend((1..=INTRUSION_WORDS).map(|i| format!("word{i}")));
    if with_key {
        header.push("intruder_position".into());
    }
    wtr.write_record(&header)?;
    for inst in instances {
        let mut rec = vec![inst.topic_index.to_string()];
        rec.extend(inst.shown_words.iter().cloned());
        if with_key {
            rec.push(inst.intruder_position.to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("intrusion csv", e))
}

pub fn read_intrusion_key(r: impl Read) -> Result<Vec<IntrusionInstance>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != INTRUSION_WORDS + 2 {
            return Err(Error::Parse(format!("intrusion key row has {} fields", rec.len())));
        }
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
        let pos = parse(&rec[INTRUSION_WORDS + 1])?;
        if pos >= INTRUSION_WORDS {
            return Err(Error::OutOfRange {
                index: pos,
                len: INTRUSION_WORDS,
            });
        }
        out.push(IntrusionInstance {
            topic_index: parse(&rec[0])?,
            shown_words: (1..=INTRUSION_WORDS).map(|i| rec[i].to_string()).collect(),
            intruder_position: pos,
        });
    }
    Ok(out)
}

/// Reads `topic,subject,position` rows and lines them up with `instances`.
pub fn read_intrusion_answers(r: impl Read, instances: &[IntrusionInstance]) -> Result<Vec<Vec<usize>>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let slot: BTreeMap<usize, usize> = instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.topic_index, i))
        .collect();
    let mut answers = vec![Vec::new(); instances.len()];
    for row in rdr.deserialize::<(usize, String, usize)>() {
        let (topic, _subject, position) = row?;
        let i = *slot
            .get(&topic)
            .ok_or_else(|| Error::Validation(format!("answer for unknown topic {topic}")))?;
        answers[i].push(position);
    }
    Ok(answers)
}

/// `topic_index,name` sidecar mapping topics to human-chosen issue names.
pub fn read_topic_names(r: impl Read) -> Result<BTreeMap<usize, String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut names = BTreeMap::new();
    for row in rdr.deserialize::<(usize, String)>() {
        let (k, name) = row?;
        names.insert(k, name);
    }
    Ok(names)
}

pub fn topic_name(names: &BTreeMap<usize, String>, topic: usize) -> String {
    names.get(&topic).cloned().unwrap_or_else(|| format!("topic_{topic}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub petition_id: String,
    pub topic: usize,
    pub max_theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub threshold: f64,
    pub rows: Vec<AuditRow>,
    /// Topics that had fewer qualifying petitions than requested.
    pub notes: Vec<String>,
}

/// Samples up to `per_topic` petitions per topic whose dominant topic
/// probability exceeds `threshold`, for manual checking.
pub fn audit_assignments(model: &TopicModel, threshold: f64, per_topic: usize, seed: u64) -> Result<AuditReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Validation(format!("audit threshold {threshold} outside (0, 1]")));
    }
    let dominant = model.dominant_topics();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for topic in 0..model.k() {
        let mut candidates: Vec<usize> = (0..model.n_docs())
            .filter(|&d| dominant[d] == topic && model.theta_row(d)[topic] > threshold)
            .collect();
        if candidates.len() < per_topic {
            notes.push(format!(
                "topic {topic}: {} of {per_topic} requested petitions exceed {threshold}",
                candidates.len()
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("audit:{topic}")));
        candidates.shuffle(&mut rng);
        candidates.truncate(per_topic);
        candidates.sort_unstable();
        rows.extend(candidates.into_iter().map(|d| AuditRow {
            petition_id: model.doc_ids[d].clone(),
            topic,
            max_theta: model.theta_row(d)[topic],
        }));
    }
    Ok(AuditReport {
        threshold,
        rows,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::LdaConfig;

    fn handmade_model() -> TopicModel {
        let vocabulary: Vec<String> = ["a", "b", "c", "d", "e", "f", "g", "h"].iter().map(|s| s.to_string()).collect();
        let phi = vec![
            0.3, 0.2, 0.15, 0.12, 0.1, 0.05, 0.05, 0.03, //
            0.03, 0.05, 0.05, 0.1, 0.12, 0.15, 0.2, 0.3,
        ];
        let theta = vec![0.97, 0.03, 0.5, 0.5, 0.02, 0.98, 0.96, 0.04];
        TopicModel {
            config: LdaConfig { k: 2, ..LdaConfig::default() },
            vocabulary_hash: crate::meta::sha256_hex(vocabulary.join("\n").as_bytes()),
            vocabulary,
            doc_ids: vec!["p0".into(), "p1".into(), "p2".into(), "p3".into()],
            phi,
            theta,
            log_likelihood_trace: vec![],
            samples: 1,
        }
    }

    #[test]
    fn instances_have_low_probability_intruder() {
        let m = handmade_model();
        let inst = make_intrusion_instances(&m, 1).unwrap();
        assert_eq!(inst.len(), 2);
        for i in &inst {
            assert_eq!(i.shown_words.len(), 6);
            let mut s = i.shown_words.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 6);
        }
        assert!(["f", "g", "h"].contains(&inst[0].intruder()));
        assert!(["a", "b", "c"].contains(&inst[1].intruder()));
        assert_eq!(inst, make_intrusion_instances(&m, 1).unwrap());
    }

    #[test]
    fn scoring() {
        let inst = make_intrusion_instances(&handmade_model(), 1).unwrap();
        let right: Vec<Vec<usize>> = inst.iter().map(|i| vec![i.intruder_position; 3]).collect();
        let s = score_intrusion(&inst, &right).unwrap();
        assert_eq!(s.overall, 1.0);
        assert!(s.flagged_topics.is_empty());

        let wrong = (inst[0].intruder_position + 1) % 6;
        let mixed = vec![vec![inst[0].intruder_position, inst[0].intruder_position, wrong], right[1].clone()];
        let s = score_intrusion(&inst, &mixed).unwrap();
        assert!((s.per_topic[0].accuracy.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.flagged_topics, vec![0]);
        assert!((s.overall - 5.0 / 6.0).abs() < 1e-12);

        assert!(matches!(score_intrusion(&inst, &right[..1]), Err(Error::Dimension(_))));
    }

    #[test]
    fn key_and_answers_roundtrip() {
        let inst = make_intrusion_instances(&handmade_model(), 5).unwrap();
        let mut key = Vec::new();
        write_intrusion_key(&inst, &mut key, Some(&OutputMeta::new(5, "h"))).unwrap();
        assert_eq!(read_intrusion_key(key.as_slice()).unwrap(), inst);
        let answers = "topic,subject,position\n1,s1,2\n0,s1,4\n0,s2,1\n";
        let a = read_intrusion_answers(answers.as_bytes(), &inst).unwrap();
        assert_eq!(a, vec![vec![4, 1], vec![2]]);
        assert!(read_intrusion_answers("topic,subject,position\n9,s,0\n".as_bytes(), &inst).is_err());
    }

    #[test]
    fn audit_filters_by_threshold() {
        let m = handmade_model();
        let r = audit_assignments(&m, 0.95, 10, 0).unwrap();
        let ids: Vec<&str> = r.rows.iter().map(|r| r.petition_id.as_str()).collect();
        assert_eq!(ids, vec!["p0", "p3", "p2"]);
        assert_eq!(r.notes.len(), 2);
        assert!(audit_assignments(&m, 1.0, 10, 0).unwrap().rows.is_empty());
        assert!(audit_assignments(&m, 0.0, 10, 0).is_err());
    }

    #[test]
    fn topic_names() {
        let names = read_topic_names("topic_index,name\n0,Driving\n2,\"Law & Order\"\n".as_bytes()).unwrap();
        assert_eq!(topic_name(&names, 2), "Law & Order");
        assert_eq!(topic_name(&names, 1), "topic_1");
    }
}
