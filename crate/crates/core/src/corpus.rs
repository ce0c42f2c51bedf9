//! Petition archive ingestion.
//!
//! The archive is JSON-lines, one record per line, shaped like the public
//! petitions API:
//!
//! ```text
//! {"id": "131215", "state": "closed",
//!  "attributes": {"action": "...", "background": "...", "additional_details": "...",
//!                 "created_at": "2016-05-23", "signature_count": 4150262,
//!                 "signatures_by_constituency": [{"ons_code": "E14000530", "signature_count": 1200}],
//!                 "signatures_by_country": [{"code": "GB", "signature_count": 4000000}]}}
//! ```
//!
//! Only accepted petitions are kept. Overseas signers appear in
//! `signatures_by_country` but never in constituency counts, so every
//! analytic total is built from the constituency map.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::meta::OutputMeta;

/// Bucket for constituency codes missing from the metadata table.
pub const UNKNOWN_CONSTITUENCY: &str = "UNKNOWN";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PetitionState {
    Accepted,
    Rejected,
}

impl PetitionState {
    /// Maps API state strings onto the two states the analysis cares about.
    /// Published petitions are `open` or `closed`.
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "accepted" | "open" | "closed" => Some(PetitionState::Accepted),
            "rejected" | "hidden" | "pending" | "validated" | "sponsored" | "flagged" => {
                Some(PetitionState::Rejected)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Petition {
    pub id: String,
    pub action: String,
    pub background: String,
    pub additional_details: Option<String>,
    pub created_at: NaiveDate,
    pub state: PetitionState,
    pub total_signatures: u64,
    pub signatures_by_constituency: BTreeMap<String, u64>,
    pub signatures_by_country: BTreeMap<String, u64>,
}

impl Petition {
    /// Signatures attributed to known UK constituencies. The `UNKNOWN`
    /// bucket is excluded so that this agrees with the per-constituency
    /// totals used in geographic analysis.
    pub fn uk_signatures(&self) -> u64 {
        self.signatures_by_constituency
            .iter()
            .filter(|(code, _)| code.as_str() != UNKNOWN_CONSTITUENCY)
            .map(|(_, n)| n)
            .sum()
    }
}

/// Joins action, background and additional details with single spaces.
pub fn merge_text(p: &Petition) -> Result<String> {
    if p.action.trim().is_empty() {
        return Err(Error::Validation(format!("petition {} has an empty action", p.id)));
    }
    let mut parts = vec![p.action.as_str(), p.background.as_str()];
    if let Some(details) = p.additional_details.as_deref() {
        parts.push(details);
    }
    Ok(parts
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" "))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituencyMeta {
    pub code: String,
    pub name: String,
    pub electorate: u64,
}

/// Reads the `code,name,electorate` table.
pub fn read_constituencies(path: impl AsRef<Path>) -> Result<Vec<ConstituencyMeta>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_constituencies(file)
}

pub fn parse_constituencies(reader: impl std::io::Read) -> Result<Vec<ConstituencyMeta>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.deserialize::<ConstituencyMeta>() {
        let meta = row?;
        if meta.electorate == 0 {
            return Err(Error::Validation(format!(
                "constituency {} has zero electorate",
                meta.code
            )));
        }
        if !seen.insert(meta.code.clone()) {
            return Err(Error::Validation(format!("duplicate constituency code {}", meta.code)));
        }
        out.push(meta);
    }
    Ok(out)
}

/// Writes the `code,name,electorate` table.
pub fn write_constituencies(meta: &[ConstituencyMeta], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for m in meta {
        wtr.serialize(m)?;
    }
    wtr.flush().map_err(|e| Error::io("constituencies", e))
}

#[derive(Clone, Debug)]
pub struct IngestConfig {
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Known constituencies. When empty, codes are taken as-is and never
    /// bucketed under `UNKNOWN`.
    pub constituencies: Vec<ConstituencyMeta>,
    /// Country code of domestic signers inside `signatures_by_country`.
    pub home_country: String,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            window_start: NaiveDate::from_ymd_opt(2015, 5, 8).unwrap(),
            window_end: NaiveDate::from_ymd_opt(2017, 6, 8).unwrap(),
            constituencies: Vec::new(),
            home_country: "GB".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub accepted: usize,
    pub dropped_rejected_state: usize,
    pub dropped_outside_window: usize,
    /// Malformed records. Ingestion carries on past these.
    pub rejects: Vec<Reject>,
    pub unknown_codes: BTreeSet<String>,
    /// Signatures from outside the home country, excluded from analytics.
    pub overseas_signatures: u64,
}

impl IngestReport {
    pub fn write_rejects_csv(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["line_no", "reason"])?;
        for r in &self.rejects {
            wtr.write_record([r.line_no.to_string(), r.reason.clone()])?;
        }
        wtr.flush().map_err(|e| Error::io("rejects", e))?;
        Ok(())
    }
}

/// Accepted petitions sorted by id, plus the constituency table and the
/// parliament window they were filtered against. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    petitions: Vec<Petition>,
    constituencies: Vec<ConstituencyMeta>,
    window: (NaiveDate, NaiveDate),
}

impl Corpus {
    pub fn new(
        mut petitions: Vec<Petition>,
        constituencies: Vec<ConstituencyMeta>,
        window: (NaiveDate, NaiveDate),
    ) -> Result<Self> {
        if window.0 > window.1 {
            return Err(Error::Validation(format!(
                "window start {} after end {}",
                window.0, window.1
            )));
        }
        if petitions.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        petitions.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in petitions.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Validation(format!("duplicate petition id {}", pair[0].id)));
            }
        }
        for p in &petitions {
            if p.state != PetitionState::Accepted {
                return Err(Error::Validation(format!("petition {} is not accepted", p.id)));
            }
            if p.created_at < window.0 || p.created_at > window.1 {
                return Err(Error::Validation(format!(
                    "petition {} created {} outside window",
                    p.id, p.created_at
                )));
            }
            let attributed: u64 = p.signatures_by_constituency.values().sum();
            if p.total_signatures < attributed {
                return Err(Error::Validation(format!(
                    "petition {} total {} below constituency sum {}",
                    p.id, p.total_signatures, attributed
                )));
            }
        }
        Ok(Self {
            petitions,
            constituencies,
            window,
        })
    }

    pub fn petitions(&self) -> &[Petition] {
        &self.petitions
    }

    pub fn constituencies(&self) -> &[ConstituencyMeta] {
        &self.constituencies
    }

    pub fn window(&self) -> (NaiveDate, NaiveDate) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.petitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.petitions.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.petitions.iter().map(|p| p.id.clone()).collect()
    }

    /// Per-petition UK signature counts, in corpus order.
    pub fn uk_signatures(&self) -> Vec<u64> {
        self.petitions.iter().map(Petition::uk_signatures).collect()
    }

    /// Writes the corpus back out in archive form. Loading the result with
    /// the same configuration reproduces this corpus.
    pub fn write_snapshot(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        let io = |e| Error::io("corpus snapshot", e);
        if let Some(m) = meta {
            writeln!(w, "{}", json!({ "meta": m })).map_err(io)?;
        }
        for p in &self.petitions {
            let by_const: Vec<Value> = p
                .signatures_by_constituency
                .iter()
                .map(|(c, n)| json!({"ons_code": c, "signature_count": n}))
                .collect();
            let by_country: Vec<Value> = p
                .signatures_by_country
                .iter()
                .map(|(c, n)| json!({"code": c, "signature_count": n}))
                .collect();
            let rec = json!({
                "id": p.id,
                "state": "accepted",
                "attributes": {
                    "action": p.action,
                    "background": p.background,
                    "additional_details": p.additional_details,
                    "created_at": p.created_at.to_string(),
                    "signature_count": p.total_signatures,
                    "signatures_by_constituency": by_const,
                    "signatures_by_country": by_country,
                }
            });
            writeln!(w, "{rec}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Total constituency-attributed signatures over the corpus.
pub fn uk_signature_total(corpus: &Corpus) -> u64 {
    corpus.petitions.iter().map(Petition::uk_signatures).sum()
}

pub fn load_archive(path: impl AsRef<Path>, config: &IngestConfig) -> Result<(Corpus, IngestReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_archive(BufReader::new(file), config)
}

pub fn parse_archive(reader: impl BufRead, config: &IngestConfig) -> Result<(Corpus, IngestReport)> {
    let known: HashMap<&str, ()> = config
        .constituencies
        .iter()
        .map(|c| (c.code.as_str(), ()))
        .collect();
    let mut report = IngestReport::default();
    let mut petitions = Vec::new();
    let mut ids = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("archive", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                report.lines_read += 1;
                report.rejects.push(Reject {
                    line_no,
                    reason: format!("invalid JSON: {e}"),
                });
                continue;
            }
        };
        if value.get("meta").is_some() && value.get("id").is_none() {
            continue;
        }
        report.lines_read += 1;
        let raw = match RawRecord::from_value(&value) {
            Ok(r) => r,
            Err(reason) => {
                report.rejects.push(Reject { line_no, reason });
                continue;
            }
        };
        if raw.state == PetitionState::Rejected {
            report.dropped_rejected_state += 1;
            continue;
        }
        if raw.created_at < config.window_start || raw.created_at > config.window_end {
            report.dropped_outside_window += 1;
            continue;
        }
        if !ids.insert(raw.id.clone()) {
            report.rejects.push(Reject {
                line_no,
                reason: format!("duplicate id {}", raw.id),
            });
            continue;
        }

        let mut by_const = BTreeMap::new();
        for (code, n) in raw.by_constituency {
            let key = if known.is_empty() || known.contains_key(code.as_str()) {
                code
            } else {
                if report.unknown_codes.insert(code.clone()) {
                    log::warn!("unknown constituency code {code}, bucketed as {UNKNOWN_CONSTITUENCY}");
                }
                UNKNOWN_CONSTITUENCY.to_string()
            };
            *by_const.entry(key).or_insert(0) += n;
        }
        let mut by_country = BTreeMap::new();
        for (code, n) in raw.by_country {
            *by_country.entry(code).or_insert(0) += n;
        }
        report.overseas_signatures += by_country
            .iter()
            .filter(|(c, _)| **c != config.home_country)
            .map(|(_, n)| *n)
            .sum::<u64>();

        let attributed: u64 = by_const.values().sum();
        let total = match raw.signature_count {
            Some(t) if t < attributed => {
                ids.remove(&raw.id);
                report.rejects.push(Reject {
                    line_no,
                    reason: format!("signature_count {t} below constituency sum {attributed}"),
                });
                continue;
            }
            Some(t) => t,
            None => attributed.max(by_country.values().sum()),
        };

        petitions.push(Petition {
            id: raw.id,
            action: raw.action,
            background: raw.background,
            additional_details: raw.additional_details,
            created_at: raw.created_at,
            state: PetitionState::Accepted,
            total_signatures: total,
            signatures_by_constituency: by_const,
            signatures_by_country: by_country,
        });
    }

    report.accepted = petitions.len();
    if petitions.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let corpus = Corpus::new(
        petitions,
        config.constituencies.clone(),
        (config.window_start, config.window_end),
    )?;
    Ok((corpus, report))
}

struct RawRecord {
    id: String,
    state: PetitionState,
    action: String,
    background: String,
    additional_details: Option<String>,
    created_at: NaiveDate,
    signature_count: Option<u64>,
    by_constituency: Vec<(String, u64)>,
    by_country: Vec<(String, u64)>,
}

impl RawRecord {
    fn from_value(v: &Value) -> std::result::Result<Self, String> {
        let id = match v.get("id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err("missing field id".into()),
        };
        let state_raw = v
            .get("state")
            .or_else(|| v.pointer("/attributes/state"))
            .and_then(Value::as_str)
            .ok_or("missing field state")?;
        let state = PetitionState::parse(state_raw)
            .ok_or_else(|| format!("unrecognised state {state_raw:?}"))?;
        let attrs = v.get("attributes").ok_or("missing field attributes")?;
        let text = |key: &str| -> std::result::Result<String, String> {
            attrs
                .get(key)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| format!("missing field attributes.{key}"))
        };
        let action = text("action")?;
        if action.trim().is_empty() {
            return Err("empty attributes.action".into());
        }
        let background = text("background")?;
        let additional_details = attrs
            .get("additional_details")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        let created_raw = text("created_at")?;
        let created_at = created_raw
            .get(..10)
            .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
            .ok_or_else(|| format!("unparseable created_at {created_raw:?}"))?;
        let signature_count = match attrs.get("signature_count") {
            None | Some(Value::Null) => None,
            Some(n) => Some(n.as_u64().ok_or("signature_count is not a non-negative integer")?),
        };
        let by_constituency = count_array(attrs, "signatures_by_constituency", "ons_code")?;
        let by_country = count_array(attrs, "signatures_by_country", "code")?;
        Ok(Self {
            id,
            state,
            action,
            background,
            additional_details,
            created_at,
            signature_count,
            by_constituency,
            by_country,
        })
    }
}

fn count_array(
    attrs: &Value,
    key: &str,
    code_key: &str,
) -> std::result::Result<Vec<(String, u64)>, String> {
    let arr = match attrs.get(key) {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(a)) => a,
        Some(_) => return Err(format!("attributes.{key} is not an array")),
    };
    arr.iter()
        .map(|entry| {
            let code = entry
                .get(code_key)
                .and_then(Value::as_str)
                .ok_or_else(|| format!("attributes.{key} entry missing {code_key}"))?;
            let n = entry
                .get("signature_count")
                .and_then(Value::as_u64)
                .ok_or_else(|| format!("attributes.{key} entry missing signature_count"))?;
            Ok((code.to_string(), n))
        })
        .collect()
}
