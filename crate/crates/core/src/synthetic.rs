//! Seeded generators for planted-topic corpora and small synthetic
//! petition archives. Used by the examples and the test suites.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ConstituencyMeta, Corpus, Petition, PetitionState};
use crate::error::{Error, Result};
use crate::meta::derive_seed;
use crate::textprep::{dtm_from_tokens, DocumentTermMatrix};

#[derive(Clone, Debug)]
pub struct PlantedSpec {
    pub topics: usize,
    pub words_per_topic: usize,
    pub docs: usize,
    pub doc_length: usize,
    /// Probability mass each document puts on its own topic.
    pub purity: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            topics: 3,
            words_per_topic: 30,
            docs: 200,
            doc_length: 60,
            purity: 0.9,
            seed: 7,
        }
    }
}

pub struct PlantedCorpus {
    pub dtm: DocumentTermMatrix,
    /// True topic-word distributions over `dtm.vocabulary()`, row-major.
    pub phi: Vec<Vec<f64>>,
    pub dominant: Vec<usize>,
}

/// Topics own disjoint blocks of `words_per_topic` terms with Zipf-like
/// weights inside each block. Every document draws most tokens from one
/// topic and the rest uniformly from the others.
pub fn planted_corpus(spec: &PlantedSpec) -> Result<PlantedCorpus> {
    if spec.topics < 2 || spec.words_per_topic < 2 || spec.docs == 0 || spec.doc_length == 0 {
        return Err(Error::Validation("planted corpus needs 2+ topics, 2+ words and non-empty docs".into()));
    }
    let term = |t: usize, j: usize| format!("t{t:02}w{j:03}");
    let weights: Vec<f64> = (0..spec.words_per_topic).map(|j| 1.0 / (j as f64 + 1.0)).collect();
    let norm: f64 = weights.iter().sum();
    let word_dist = WeightedIndex::new(&weights).map_err(|e| Error::Validation(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "planted"));
    let mut docs = Vec::with_capacity(spec.docs);
    let mut dominant = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let own = d % spec.topics;
        dominant.push(own);
        let doc: Vec<String> = (0..spec.doc_length)
            .map(|_| {
                let t = if rng.random::<f64>() < spec.purity {
                    own
                } else {
                    let other = rng.random_range(0..spec.topics - 1);
                    if other >= own { other + 1 } else { other }
                };
                term(t, word_dist.sample(&mut rng))
            })
            .collect();
        docs.push(doc);
    }
    let ids = (0..spec.docs).map(|d| format!("doc{d:04}")).collect();
    let (dtm, _) = dtm_from_tokens(ids, &docs, 1.0 / spec.docs as f64)?;
    let phi = (0..spec.topics)
        .map(|t| {
            dtm.vocabulary()
                .terms()
                .iter()
                .map(|w| {
                    (0..spec.words_per_topic)
                        .find(|&j| *w == term(t, j))
                        .map_or(0.0, |j| weights[j] / norm)
                })
                .collect()
        })
        .collect();
    Ok(PlantedCorpus { dtm, phi, dominant })
}

pub const THEMES: [(&str, [&str; 12]); 3] = [
    (
        "immigration",
        [
            "border", "visa", "migrant", "asylum", "refugee", "citizenship", "deport", "passport", "quota",
            "settlement", "nationality", "embassy",
        ],
    ),
    (
        "health",
        [
            "hospital", "nurse", "doctor", "patient", "surgery", "clinic", "cancer", "treatment", "ambulance",
            "pharmacy", "dental", "therapy",
        ],
    ),
    (
        "schools",
        [
            "school", "teacher", "pupil", "exam", "classroom", "curriculum", "tuition", "student", "university",
            "homework", "uniform", "library",
        ],
    ),
];

const FILLER: [&str; 8] = ["we", "the", "government", "should", "please", "all", "must", "now"];

#[derive(Clone, Debug)]
pub struct ArchiveSpec {
    pub petitions: usize,
    pub constituencies: usize,
    pub start: NaiveDate,
    pub days: i64,
    /// Tail exponent of the signature-count distribution.
    pub exponent: f64,
    pub seed: u64,
}

impl Default for ArchiveSpec {
    fn default() -> Self {
        Self {
            petitions: 400,
            constituencies: 40,
            start: NaiveDate::from_ymd_opt(2015, 6, 1).unwrap(),
            days: 360,
            exponent: 1.6,
            seed: 11,
        }
    }
}

/// A corpus of petitions written from the three `THEMES`, with signature
/// counts from a discretised Pareto law, spread across constituencies in
/// proportion to electorate. The first quarter of constituencies form a
/// region that barely signs "schools" petitions.
pub fn synthetic_archive(spec: &ArchiveSpec) -> Result<(Corpus, Vec<ConstituencyMeta>)> {
    if spec.petitions == 0 || spec.constituencies < 4 || spec.days < 1 || spec.exponent <= 1.0 {
        return Err(Error::Validation("synthetic archive spec out of range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "archive"));
    let meta: Vec<ConstituencyMeta> = (0..spec.constituencies)
        .map(|c| ConstituencyMeta {
            code: format!("E14{c:06}"),
            name: format!("Constituency {c:02}"),
            electorate: rng.random_range(50_000..100_000),
        })
        .collect();
    let region_cut = spec.constituencies / 4;
    let mut petitions = Vec::with_capacity(spec.petitions);
    for i in 0..spec.petitions {
        let theme = rng.random_range(0..THEMES.len());
        let words = &THEMES[theme].1;
        let pick = |n: usize, rng: &mut ChaCha8Rng| -> Vec<&str> {
            (0..n)
                .map(|_| {
                    if rng.random::<f64>() < 0.15 {
                        let other = THEMES[rng.random_range(0..THEMES.len())].1;
                        other[rng.random_range(0..other.len())]
                    } else if rng.random::<f64>() < 0.3 {
                        FILLER[rng.random_range(0..FILLER.len())]
                    } else {
                        words[rng.random_range(0..words.len())]
                    }
                })
                .collect()
        };
        let action = pick(5, &mut rng).join(" ");
        let background = pick(25, &mut rng).join(" ");
        let u: f64 = rng.random();
        let total = ((1.0 - u).powf(-1.0 / (spec.exponent - 1.0))).floor().min(2_000_000.0) as u64;
        let mut by_constituency = BTreeMap::new();
        for (c, m) in meta.iter().enumerate() {
            let affinity = if c < region_cut && theme == 2 { 0.2 } else { 1.0 };
            let expected = total as f64 * affinity * m.electorate as f64 / (75_000.0 * spec.constituencies as f64);
            let n = (expected * rng.random_range(0.7..1.3)).round() as u64;
            if n > 0 {
                by_constituency.insert(m.code.clone(), n);
            }
        }
        let uk: u64 = by_constituency.values().sum();
        let overseas = uk / 50;
        let mut by_country = BTreeMap::new();
        by_country.insert("GB".to_string(), uk);
        if overseas > 0 {
            by_country.insert("FR".to_string(), overseas);
        }
        petitions.push(Petition {
            id: format!("{:06}", 100_000 + i),
            action,
            background,
            additional_details: None,
            created_at: spec.start + Duration::days(rng.random_range(0..spec.days)),
            state: PetitionState::Accepted,
            total_signatures: uk + overseas,
            signatures_by_constituency: by_constituency,
            signatures_by_country: by_country,
        });
    }
    let end = spec.start + Duration::days(spec.days);
    let corpus = Corpus::new(petitions, meta.clone(), (spec.start, end))?;
    Ok((corpus, meta))
}
