//! Text cleaning and document-term matrix construction.

pub mod porter;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{merge_text, Corpus};
use crate::error::{Error, Result};
use crate::meta::OutputMeta;

pub use porter::stem;

/// Snowball English stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
pub const DEFAULT_MIN_DOC_FRACTION: f64 = 0.001;
pub const MIN_TOKEN_CHARS: usize = 2;

/// Parses a stopword file: one word per line, `#` starts a comment.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

pub fn read_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let words = parse_stopwords(&text);
    if words.is_empty() {
        return Err(Error::Validation(format!("{} holds no stopwords", path.display())));
    }
    Ok(words)
}

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{P}\p{S}]").expect("valid regex"))
}

/// lowercase, punctuation and symbols to spaces, drop tokens holding
/// digits, drop stopwords, stem, drop stems under two characters.
pub fn clean_tokens(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    let lowered = text.to_lowercase();
    let spaced = punctuation().replace_all(&lowered, " ");
    spaced
        .split_whitespace()
        .filter(|t| !t.chars().any(char::is_numeric))
        .filter(|t| !stopwords.contains(*t))
        .map(stem)
        .filter(|s| s.chars().count() >= MIN_TOKEN_CHARS)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_frequency: Vec<usize>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>, doc_frequency: Vec<usize>) -> Result<Self> {
        if terms.len() != doc_frequency.len() {
            return Err(Error::Dimension(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                doc_frequency.len()
            )));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("vocabulary terms must be unique and sorted".into()));
        }
        Ok(Self {
            terms,
            doc_frequency,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_frequency(&self) -> &[usize] {
        &self.doc_frequency
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    /// Hash identifying the term list, used to pair models with matrices.
    pub fn fingerprint(&self) -> String {
        crate::meta::sha256_hex(self.terms.join("\n").as_bytes())
    }

    pub fn write_csv(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["term", "doc_frequency"])?;
        for (t, df) in self.terms.iter().zip(&self.doc_frequency) {
            wtr.write_record([t.as_str(), &df.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("vocabulary", e))
    }

    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let mut terms = Vec::new();
        let mut dfs = Vec::new();
        for row in rdr.deserialize::<(String, usize)>() {
            let (t, df) = row?;
            terms.push(t);
            dfs.push(df);
        }
        Self::new(terms, dfs)
    }
}

/// Sparse term counts, one row per petition (rows may be empty).
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentTermMatrix {
    doc_ids: Vec<String>,
    vocabulary: Vocabulary,
    /// Per row: (term index, count), sorted by term index, counts > 0.
    rows: Vec<Vec<(u32, u32)>>,
}

impl DocumentTermMatrix {
    pub fn from_rows(
        doc_ids: Vec<String>,
        vocabulary: Vocabulary,
        mut rows: Vec<Vec<(u32, u32)>>,
    ) -> Result<Self> {
        if doc_ids.len() != rows.len() {
            return Err(Error::Dimension(format!(
                "{} ids for {} rows",
                doc_ids.len(),
                rows.len()
            )));
        }
        if doc_ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let v = vocabulary.len();
        let mut seen = vec![false; v];
        for row in &mut rows {
            row.retain(|&(_, c)| c > 0);
            row.sort_unstable_by_key(|&(t, _)| t);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Validation("duplicate term in a row".into()));
            }
            for &(t, _) in row.iter() {
                let t = t as usize;
                if t >= v {
                    return Err(Error::OutOfRange { index: t, len: v });
                }
                seen[t] = true;
            }
        }
        if let Some(col) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!(
                "term {} has no nonzero entry",
                vocabulary.terms()[col]
            )));
        }
        Ok(Self {
            doc_ids,
            vocabulary,
            rows,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn row(&self, d: usize) -> &[(u32, u32)] {
        &self.rows[d]
    }

    pub fn rows(&self) -> &[Vec<(u32, u32)>] {
        &self.rows
    }

    pub fn row_total(&self, d: usize) -> u64 {
        self.rows[d].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total_tokens(&self) -> u64 {
        (0..self.n_docs()).map(|d| self.row_total(d)).sum()
    }

    /// Versioned JSON sparse-triplet snapshot.
    pub fn write_json(&self, w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        let triplets: Vec<[u64; 3]> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, n)| [r as u64, c as u64, n as u64]))
            .collect();
        let snap = DtmSnapshot {
            format: DTM_FORMAT.to_string(),
            version: DTM_VERSION,
            meta: meta.cloned(),
            n_docs: self.n_docs(),
            n_terms: self.n_terms(),
            vocabulary_hash: self.vocabulary.fingerprint(),
            doc_ids: self.doc_ids.clone(),
            triplets,
        };
        serde_json::to_writer(w, &snap)?;
        Ok(())
    }

    /// Reads a snapshot plus its vocabulary sidecar.
    pub fn read_json(r: impl Read, vocabulary: Vocabulary) -> Result<Self> {
        let snap: DtmSnapshot = serde_json::from_reader(r)?;
        if snap.format != DTM_FORMAT || snap.version != DTM_VERSION {
            return Err(Error::Parse(format!(
                "unsupported matrix snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        if snap.vocabulary_hash != vocabulary.fingerprint() || snap.n_terms != vocabulary.len() {
            return Err(Error::Validation("vocabulary sidecar does not match snapshot".into()));
        }
        let mut rows = vec![Vec::new(); snap.n_docs];
        for [r, c, n] in snap.triplets {
            let r = r as usize;
            if r >= rows.len() {
                return Err(Error::OutOfRange {
                    index: r,
                    len: rows.len(),
                });
            }
            rows[r].push((c as u32, n as u32));
        }
        Self::from_rows(snap.doc_ids, vocabulary, rows)
    }
}

const DTM_FORMAT: &str = "petitions-dtm";
const DTM_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DtmSnapshot {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<OutputMeta>,
    n_docs: usize,
    n_terms: usize,
    vocabulary_hash: String,
    doc_ids: Vec<String>,
    triplets: Vec<[u64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DtmStats {
    pub n_docs: usize,
    pub min_doc_count: usize,
    pub vocabulary_before: usize,
    pub vocabulary_after: usize,
    pub mean_tokens_before: f64,
    pub mean_tokens_after: f64,
}

/// Smallest document count a term needs to survive pruning.
pub fn min_doc_count(n_docs: usize, min_doc_fraction: f64) -> usize {
    // Guard against products like 0.2 * 10 landing a hair above an integer.
    ((min_doc_fraction * n_docs as f64) - 1e-9).ceil().max(1.0) as usize
}

pub fn build_dtm(
    corpus: &Corpus,
    stopwords: &HashSet<String>,
    min_doc_fraction: f64,
) -> Result<(DocumentTermMatrix, DtmStats)> {
    let mut ids = Vec::with_capacity(corpus.len());
    let mut docs = Vec::with_capacity(corpus.len());
    for p in corpus.petitions() {
        ids.push(p.id.clone());
        docs.push(clean_tokens(&merge_text(p)?, stopwords));
    }
    dtm_from_tokens(ids, &docs, min_doc_fraction)
}

/// Prunes already-cleaned token lists into a matrix.
pub fn dtm_from_tokens(
    doc_ids: Vec<String>,
    docs: &[Vec<String>],
    min_doc_fraction: f64,
) -> Result<(DocumentTermMatrix, DtmStats)> {
    if !(min_doc_fraction > 0.0 && min_doc_fraction <= 1.0) {
        return Err(Error::Validation(format!(
            "min_doc_fraction {min_doc_fraction} outside (0, 1]"
        )));
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n_docs = docs.len();
    let threshold = min_doc_count(n_docs, min_doc_fraction);

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let vocabulary_before = df.len();
    let kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= threshold).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_docs: threshold,
        });
    }
    let vocabulary = Vocabulary::new(
        kept.iter().map(|(t, _)| t.to_string()).collect(),
        kept.iter().map(|&(_, n)| n).collect(),
    )?;

    let mut rows = Vec::with_capacity(n_docs);
    let mut before = 0usize;
    let mut after = 0usize;
    for doc in docs {
        before += doc.len();
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for t in doc {
            if let Some(i) = vocabulary.index_of(t) {
                *counts.entry(i as u32).or_insert(0) += 1;
                after += 1;
            }
        }
        rows.push(counts.into_iter().collect());
    }
    let stats = DtmStats {
        n_docs,
        min_doc_count: threshold,
        vocabulary_before,
        vocabulary_after: vocabulary.len(),
        mean_tokens_before: before as f64 / n_docs as f64,
        mean_tokens_after: after as f64 / n_docs as f64,
    };
    Ok((DocumentTermMatrix::from_rows(doc_ids, vocabulary, rows)?, stats))
}

/// Loads a DTM snapshot and its vocabulary sidecar from disk.
pub fn read_dtm(matrix: impl AsRef<Path>, vocabulary: impl AsRef<Path>) -> Result<DocumentTermMatrix> {
    let (m, v) = (matrix.as_ref(), vocabulary.as_ref());
    let vocab = Vocabulary::read_csv(File::open(v).map_err(|e| Error::io(v, e))?)?;
    let f = File::open(m).map_err(|e| Error::io(m, e))?;
    DocumentTermMatrix::read_json(BufReader::new(f), vocab)
}

/// Line-oriented stopword reader for callers holding a stream.
pub fn read_stopwords_from(r: impl BufRead) -> Result<HashSet<String>> {
    let mut text = String::new();
    for line in r.lines() {
        text.push_str(&line.map_err(|e| Error::io("stopwords", e))?);
        text.push('\n');
    }
    Ok(parse_stopwords(&text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sw(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean_tokens("Stop ALL immigration!!", &sw(&["all"])), vec!["stop", "immigr"]);
        assert!(clean_tokens("", &sw(&["all"])).is_empty());
        assert!(clean_tokens("2015 2016 2017", &sw(&["all"])).is_empty());
    }

    #[test]
    fn punctuation_splits_rather_than_merges() {
        let toks = clean_tokens("road/car—vehicle's £5 tax", &sw(&["s"]));
        assert_eq!(toks, vec!["road", "car", "vehicl", "tax"]);
    }

    #[test]
    fn default_list_loads() {
        let s = default_stopwords();
        assert_eq!(s.len(), 174);
        assert!(s.contains("the") && s.contains("don't"));
    }

    #[test]
    fn threshold_arithmetic() {
        assert_eq!(min_doc_count(2, 0.001), 1);
        assert_eq!(min_doc_count(2, 0.5), 1);
        assert_eq!(min_doc_count(10, 0.2), 2);
        assert_eq!(min_doc_count(10_950, 0.001), 11);
    }

    #[test]
    fn rare_term_pruned() {
        let mut docs: Vec<Vec<String>> = (0..10).map(|_| vec!["common".to_string()]).collect();
        docs[3].push("rare".into());
        docs[4].push("pair".into());
        docs[5].push("pair".into());
        let ids = (0..10).map(|i| i.to_string()).collect();
        let (dtm, stats) = dtm_from_tokens(ids, &docs, 0.2).unwrap();
        assert_eq!(dtm.vocabulary().terms(), &["common", "pair"]);
        assert_eq!(stats.vocabulary_before, 3);
        assert_eq!(stats.vocabulary_after, 2);
        assert!((stats.mean_tokens_before - 1.3).abs() < 1e-12);
        assert!((stats.mean_tokens_after - 1.2).abs() < 1e-12);
    }

    #[test]
    fn empty_vocabulary_is_fatal() {
        let docs = vec![vec!["a1".to_string()], vec!["b1".to_string()]];
        let ids = vec!["x".into(), "y".into()];
        assert!(matches!(dtm_from_tokens(ids, &docs, 1.0), Err(Error::EmptyVocabulary { .. })));
    }

    #[test]
    fn empty_rows_kept_aligned() {
        let docs = vec![vec!["tax".to_string()], vec![], vec!["tax".to_string(), "tax".to_string()]];
        let ids = vec!["a".into(), "b".into(), "c".into()];
        let (dtm, _) = dtm_from_tokens(ids, &docs, 0.5).unwrap();
        assert_eq!(dtm.n_docs(), 3);
        assert!(dtm.row(1).is_empty());
        assert_eq!(dtm.row(2), &[(0, 2)]);
    }

    #[test]
    fn snapshot_roundtrip() {
        let docs = vec![vec!["tax".to_string(), "road".into()], vec!["road".into()]];
        let (dtm, _) = dtm_from_tokens(vec!["a".into(), "b".into()], &docs, 0.5).unwrap();
        let mut m = Vec::new();
        let mut v = Vec::new();
        dtm.write_json(&mut m, None).unwrap();
        dtm.vocabulary().write_csv(&mut v, Some(&OutputMeta::new(1, "h"))).unwrap();
        let vocab = Vocabulary::read_csv(v.as_slice()).unwrap();
        assert_eq!(DocumentTermMatrix::read_json(m.as_slice(), vocab).unwrap(), dtm);
    }
}
