//! File-to-file pipeline stages behind the `petitions` subcommands.
//!
//! Stages communicate only through the output directory:
//!
//! | stage    | reads                                        | writes |
//! |----------|----------------------------------------------|--------|
//! | ingest   | archive, constituency table                  | `corpus.jsonl`, `constituencies.csv`, `rejects.csv`, `ingest_report.json` |
//! | fit      | `corpus.jsonl`, `constituencies.csv`         | `dtm.json`, `vocabulary.csv`, `dtm_stats.json`, `model.json`, `top_words.csv`, `trace.csv`, `intrusion.csv`, `intrusion_key.csv`, `audit.csv` |
//! | report   | `corpus.jsonl`, `constituencies.csv`, `model.json` | analytics CSVs and `summary.json` |
//!
//! Stage seeds are `derive_seed(seed, name)` for the names `lda`,
//! `intrusion`, `audit`, `pam` and `grid`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, ConstituencyMeta, Corpus, IngestConfig};
use crate::error::{Error, Result};
use crate::geo::{self, Metric, ScalingFit, ScalingMode, SilhouettePoint};
use crate::issues::{self, NetworkSummary};
use crate::lda::{self, GridPoint, GridSpec, IntrusionScore, LdaConfig, TopicModel};
use crate::meta::{derive_seed, sha256_hex, OutputMeta};
use crate::powerlaw::{self, FitReport, XminScan};
use crate::temporal::{self, EntropyStats, VolatileDay};
use crate::textprep::{self, DtmStats, Vocabulary};

pub mod files {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const CONSTITUENCIES: &str = "constituencies.csv";
    pub const REJECTS: &str = "rejects.csv";
    pub const INGEST_REPORT: &str = "ingest_report.json";
    pub const DTM: &str = "dtm.json";
    pub const VOCABULARY: &str = "vocabulary.csv";
    pub const DTM_STATS: &str = "dtm_stats.json";
    pub const MODEL: &str = "model.json";
    pub const TOP_WORDS: &str = "top_words.csv";
    pub const TRACE: &str = "trace.csv";
    pub const INTRUSION: &str = "intrusion.csv";
    pub const INTRUSION_KEY: &str = "intrusion_key.csv";
    pub const INTRUSION_SCORES: &str = "intrusion_scores.csv";
    pub const AUDIT: &str = "audit.csv";
    pub const PREVALENCE: &str = "prevalence.csv";
    pub const SERIES: &str = "issue_series.csv";
    pub const ENTROPY: &str = "entropy.csv";
    pub const PROFILES: &str = "constituency_profiles.csv";
    pub const SCALING: &str = "scaling.json";
    pub const CLUSTERS: &str = "clusters.csv";
    pub const CLUSTER_SHARES: &str = "cluster_shares.csv";
    pub const SILHOUETTE: &str = "silhouette.csv";
    pub const CCDF: &str = "ccdf.csv";
    pub const POWERLAW: &str = "powerlaw.json";
    pub const GRID: &str = "grid.csv";
    pub const XMIN_SCAN: &str = "xmin_scan.csv";
    pub const SUMMARY: &str = "summary.json";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub archive: Option<PathBuf>,
    pub constituencies: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Optional `topic_index,name` table used to label issues in reports.
    pub topic_names: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            archive: None,
            constituencies: None,
            stopwords: None,
            topic_names: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSettings {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for LdaSettings {
    fn default() -> Self {
        let d = LdaConfig::default();
        Self {
            k: d.k,
            alpha: d.alpha,
            beta: d.beta,
            iterations: d.iterations,
            burn_in: d.burn_in,
            thin: d.thin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub threads: usize,
    pub paths: Paths,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub lda: LdaSettings,
    pub min_doc_fraction: f64,
    pub entropy_window_days: usize,
    pub smoothing_windows: Vec<usize>,
    pub keep_fraction: f64,
    pub response_threshold: u64,
    pub audit_threshold: f64,
    pub audit_per_topic: usize,
    pub pam_k: usize,
    pub pam_metric: Metric,
    pub silhouette_ks: Vec<usize>,
    pub scaling_bins: usize,
    pub powerlaw_x_min: u64,
    /// Counts above this are left out of the tail fit.
    pub powerlaw_max: Option<u64>,
    pub thresholds: Vec<u64>,
    pub xmin_candidates: Vec<u64>,
    pub grid: GridSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ingest = IngestConfig::default();
        Self {
            seed: 0,
            threads: 1,
            paths: Paths::default(),
            window_start: ingest.window_start,
            window_end: ingest.window_end,
            lda: LdaSettings::default(),
            min_doc_fraction: textprep::DEFAULT_MIN_DOC_FRACTION,
            entropy_window_days: temporal::DEFAULT_ENTROPY_WINDOW,
            smoothing_windows: vec![1, 7, 30],
            keep_fraction: issues::DEFAULT_KEEP_FRACTION,
            response_threshold: issues::RESPONSE_THRESHOLD,
            audit_threshold: 0.5,
            audit_per_topic: 10,
            pam_k: geo::DEFAULT_CLUSTERS,
            pam_metric: Metric::Euclidean,
            silhouette_ks: (5..=10).collect(),
            scaling_bins: geo::DEFAULT_SCALING_BINS,
            powerlaw_x_min: powerlaw::DEFAULT_X_MIN,
            powerlaw_max: Some(10_000),
            thresholds: powerlaw::DEFAULT_THRESHOLDS.to_vec(),
            xmin_candidates: vec![1, 5, 10, 50, 100, 1000],
            grid: GridSpec::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config. Missing keys take their defaults.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.threads == 0 {
            return bad("threads must be at least 1".into());
        }
        if self.window_start > self.window_end {
            return bad("window_start is after window_end".into());
        }
        if let Err(e) = self.lda_config().validate() {
            return bad(format!("lda: {e}"));
        }
        if !(self.min_doc_fraction > 0.0 && self.min_doc_fraction <= 1.0) {
            return bad(format!("min_doc_fraction {} outside (0, 1]", self.min_doc_fraction));
        }
        if self.entropy_window_days == 0 || self.smoothing_windows.contains(&0) {
            return bad("window lengths must be positive".into());
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return bad(format!("keep_fraction {} outside (0, 1]", self.keep_fraction));
        }
        if !(self.audit_threshold > 0.0 && self.audit_threshold <= 1.0) {
            return bad(format!("audit_threshold {} outside (0, 1]", self.audit_threshold));
        }
        if self.pam_k == 0 || self.silhouette_ks.contains(&0) {
            return bad("cluster counts must be positive".into());
        }
        if self.scaling_bins < 3 {
            return bad("scaling_bins must be at least 3".into());
        }
        if self.powerlaw_x_min == 0 || self.xmin_candidates.contains(&0) {
            return bad("x_min values must be at least 1".into());
        }
        if self.powerlaw_max.is_some_and(|m| m < self.powerlaw_x_min) {
            return bad("powerlaw_max is below powerlaw_x_min".into());
        }
        for (name, p) in [
            ("archive", &self.paths.archive),
            ("constituencies", &self.paths.constituencies),
            ("stopwords", &self.paths.stopwords),
            ("topic_names", &self.paths.topic_names),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return bad(format!("{name} path {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }

    /// Short hex digest of the serialized configuration.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        sha256_hex(&bytes)[..16].to_string()
    }

    pub fn output_meta(&self) -> OutputMeta {
        OutputMeta::new(self.seed, self.config_hash())
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            k: self.lda.k,
            alpha: self.lda.alpha,
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            burn_in: self.lda.burn_in,
            thin: self.lda.thin,
            seed: self.stage_seed("lda"),
            threads: self.threads,
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.paths.output_dir.join(name)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    meta: &'a OutputMeta,
    #[serde(flatten)]
    body: &'a T,
}

fn write_json<T: Serialize>(path: &Path, meta: &OutputMeta, body: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &WithMeta { meta, body })?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_csv_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, Serialize)]
pub struct IngestSummary {
    pub lines_read: usize,
    pub accepted: usize,
    pub dropped_rejected_state: usize,
    pub dropped_outside_window: usize,
    pub rejects: usize,
    pub unknown_codes: Vec<String>,
    pub uk_signatures: u64,
    pub overseas_signatures: u64,
}

pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestSummary> {
    let archive = cfg
        .paths
        .archive
        .as_ref()
        .ok_or_else(|| Error::Config("paths.archive is required for ingest".into()))?;
    if !archive.exists() {
        return Err(Error::Config(format!("archive {} does not exist", archive.display())));
    }
    let constituencies = match &cfg.paths.constituencies {
        Some(p) => corpus::read_constituencies(p).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?,
        None => Vec::new(),
    };
    let ingest = IngestConfig {
        window_start: cfg.window_start,
        window_end: cfg.window_end,
        constituencies: constituencies.clone(),
        ..IngestConfig::default()
    };
    let (corpus, report) = corpus::load_archive(archive, &ingest).map_err(|e| e.in_stage("ingest"))?;
    let meta = cfg.output_meta();
    write_csv_with(&cfg.out(files::CORPUS), |w| corpus.write_snapshot(w, Some(&meta)))?;
    write_csv_with(&cfg.out(files::REJECTS), |w| report.write_rejects_csv(w, Some(&meta)))?;
    if !constituencies.is_empty() {
        write_csv_with(&cfg.out(files::CONSTITUENCIES), |w| {
            meta.write_csv_header(w)?;
            corpus::write_constituencies(&constituencies, w)
        })?;
    }
    let summary = IngestSummary {
        lines_read: report.lines_read,
        accepted: report.accepted,
        dropped_rejected_state: report.dropped_rejected_state,
        dropped_outside_window: report.dropped_outside_window,
        rejects: report.rejects.len(),
        unknown_codes: report.unknown_codes.iter().cloned().collect(),
        uk_signatures: corpus::uk_signature_total(&corpus),
        overseas_signatures: report.overseas_signatures,
    };
    write_json(&cfg.out(files::INGEST_REPORT), &meta, &summary)?;
    Ok(summary)
}

/// Reloads the ingest outputs: the corpus snapshot and, when present, the
/// constituency table.
pub fn load_snapshot(cfg: &PipelineConfig) -> Result<(Corpus, Vec<ConstituencyMeta>)> {
    let meta_path = cfg.out(files::CONSTITUENCIES);
    let constituencies = if meta_path.exists() {
        corpus::parse_constituencies(open(&meta_path)?)?
    } else {
        Vec::new()
    };
    let ingest = IngestConfig {
        window_start: cfg.window_start,
        window_end: cfg.window_end,
        constituencies: constituencies.clone(),
        ..IngestConfig::default()
    };
    let (corpus, _) = corpus::parse_archive(open(&cfg.out(files::CORPUS))?, &ingest)?;
    Ok((corpus, constituencies))
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    pub dtm: DtmStats,
    pub k: usize,
    pub final_log_likelihood: Option<f64>,
    pub mean_max_theta: f64,
    pub top_words: Vec<Vec<String>>,
}

pub fn run_fit(cfg: &PipelineConfig) -> Result<FitSummary> {
    let (corpus, _) = load_snapshot(cfg).map_err(|e| e.in_stage("fit"))?;
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => textprep::read_stopwords(p)?,
        None => textprep::default_stopwords(),
    };
    let (dtm, stats) = textprep::build_dtm(&corpus, &stopwords, cfg.min_doc_fraction).map_err(|e| e.in_stage("textprep"))?;
    let meta = cfg.output_meta();
    write_csv_with(&cfg.out(files::DTM), |w| dtm.write_json(w, Some(&meta)))?;
    write_csv_with(&cfg.out(files::VOCABULARY), |w| dtm.vocabulary().write_csv(w, Some(&meta)))?;
    write_json(&cfg.out(files::DTM_STATS), &meta, &stats)?;

    let model = lda::fit(&dtm, &cfg.lda_config()).map_err(|e| e.in_stage("lda"))?;
    write_csv_with(&cfg.out(files::MODEL), |w| model.write_json(w, Some(&meta)))?;
    let top: Vec<Vec<String>> = (0..model.k())
        .map(|t| lda::top_words(&model, t, lda::INTRUSION_WORDS))
        .collect::<Result<_>>()?;
    write_csv_with(&cfg.out(files::TOP_WORDS), |w| {
        meta.write_csv_header(w)?;
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["topic".to_string()];
        header.extend((1..=lda::INTRUSION_WORDS).map(|i| format!("word{i}")));
        wtr.write_record(&header)?;
        for (t, words) in top.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(words.iter().cloned());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io(files::TOP_WORDS, e))
    })?;
    write_csv_with(&cfg.out(files::TRACE), |w| {
        meta.write_csv_header(w)?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["sweep", "log_likelihood"])?;
        for p in &model.log_likelihood_trace {
            wtr.write_record([p.sweep.to_string(), p.log_likelihood.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(files::TRACE, e))
    })?;
    match lda::make_intrusion_instances(&model, cfg.stage_seed("intrusion")) {
        Ok(inst) => {
            write_csv_with(&cfg.out(files::INTRUSION), |w| lda::write_intrusion_csv(&inst, w, Some(&meta)))?;
            write_csv_with(&cfg.out(files::INTRUSION_KEY), |w| lda::write_intrusion_key(&inst, w, Some(&meta)))?;
        }
        Err(e) => log::warn!("no intrusion instances: {e}"),
    }
    let audit = lda::audit_assignments(&model, cfg.audit_threshold, cfg.audit_per_topic, cfg.stage_seed("audit"))?;
    write_csv_with(&cfg.out(files::AUDIT), |w| {
        meta.write_csv_header(w)?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["petition_id", "topic", "max_theta"])?;
        for r in &audit.rows {
            wtr.write_record([r.petition_id.clone(), r.topic.to_string(), r.max_theta.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(files::AUDIT, e))
    })?;
    for note in &audit.notes {
        log::info!("audit: {note}");
    }
    Ok(FitSummary {
        dtm: stats,
        k: model.k(),
        final_log_likelihood: model.log_likelihood_trace.last().map(|p| p.log_likelihood),
        mean_max_theta: model.mean_max_theta(),
        top_words: top,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusSummary {
    pub petitions: usize,
    pub uk_signatures: u64,
    pub window: (NaiveDate, NaiveDate),
}

#[derive(Clone, Debug, Serialize)]
pub struct IssueSummary {
    pub names: Vec<String>,
    pub by_petitions: Vec<f64>,
    pub by_signatures: Vec<f64>,
    pub rank_by_petitions: Vec<usize>,
    pub rank_by_signatures: Vec<usize>,
    pub success_threshold: u64,
    pub success_raw: Vec<Option<f64>>,
    pub success_smoothed: Vec<f64>,
    pub mean_max_theta: f64,
    pub co_occurrence: Option<NetworkSummary>,
    pub word_distribution: Option<NetworkSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropySummary {
    pub window_days: usize,
    pub stats: Option<EntropyStats>,
    pub mean_pct_change: Option<f64>,
    pub sd_pct_change: Option<f64>,
    pub flagged: Vec<VolatileDay>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeoSummary {
    pub constituencies: usize,
    pub mean_signatures_per_constituency: f64,
    pub mean_per_elector: f64,
    pub scaling_raw: ScalingFit,
    pub scaling_binned: Option<ScalingFit>,
    pub pam_k: usize,
    pub cluster_sizes: Vec<usize>,
    pub silhouette: Vec<SilhouettePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerLawSummary {
    pub fit: FitReport,
    pub fraction_at_least_100: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub corpus: CorpusSummary,
    pub issues: IssueSummary,
    pub entropy: EntropySummary,
    pub geo: Option<GeoSummary>,
    pub powerlaw: Option<PowerLawSummary>,
    pub notes: Vec<String>,
}

fn topic_names(cfg: &PipelineConfig) -> Result<BTreeMap<usize, String>> {
    match &cfg.paths.topic_names {
        Some(p) => lda::read_topic_names(open(p)?),
        None => Ok(BTreeMap::new()),
    }
}

fn load_model(cfg: &PipelineConfig) -> Result<TopicModel> {
    TopicModel::read_json(open(&cfg.out(files::MODEL))?)
}

/// Runs every analysis over the ingest and fit outputs and writes the
/// exports plus `summary.json`.
pub fn run_report(cfg: &PipelineConfig) -> Result<Summary> {
    let (corpus, constituencies) = load_snapshot(cfg).map_err(|e| e.in_stage("report"))?;
    let model = load_model(cfg).map_err(|e| e.in_stage("report"))?;
    let names = topic_names(cfg)?;
    let meta = cfg.output_meta();
    let mut notes = Vec::new();

    let issues = issue_report(cfg, &model, &corpus, &names, &meta).map_err(|e| e.in_stage("issues"))?;
    let entropy = temporal_report(cfg, &model, &corpus, &meta, &mut notes).map_err(|e| e.in_stage("temporal"))?;
    let geo = if constituencies.is_empty() {
        notes.push("no constituency table; geographic analysis skipped".into());
        None
    } else {
        Some(geo_report(cfg, &model, &corpus, &constituencies, &meta, &mut notes).map_err(|e| e.in_stage("geo"))?)
    };
    let powerlaw = powerlaw_report(cfg, &corpus, &meta, &mut notes).map_err(|e| e.in_stage("powerlaw"))?;

    let summary = Summary {
        corpus: CorpusSummary {
            petitions: corpus.len(),
            uk_signatures: corpus::uk_signature_total(&corpus),
            window: corpus.window(),
        },
        issues,
        entropy,
        geo,
        powerlaw,
        notes,
    };
    write_json(&cfg.out(files::SUMMARY), &meta, &summary)?;
    Ok(summary)
}

fn issue_report(
    cfg: &PipelineConfig,
    model: &TopicModel,
    corpus: &Corpus,
    names: &BTreeMap<usize, String>,
    meta: &OutputMeta,
) -> Result<IssueSummary> {
    let prev = issues::prevalence(model, corpus)?;
    let success = issues::success_probability(model, corpus, cfg.response_threshold)?;
    write_csv_with(&cfg.out(files::PREVALENCE), |w| {
        issues::write_prevalence_csv(&prev, &success, names, w, Some(meta))
    })?;
    let sizes: Vec<f64> = prev.by_signatures.clone();
    let mut summaries = Vec::new();
    for (tag, net) in [
        ("co_occurrence", issues::co_occurrence_network(model)?),
        ("word_distribution", issues::word_distribution_network(model)?),
    ] {
        let net = net.with_node_sizes(sizes.clone())?;
        summaries.push(net.summary());
        let pruned = issues::prune_network(&net, cfg.keep_fraction)?;
        write_csv_with(&cfg.out(&format!("network_{tag}_edges.csv")), |w| net.write_edges_csv(w, Some(meta)))?;
        write_csv_with(&cfg.out(&format!("network_{tag}_pruned_edges.csv")), |w| {
            pruned.write_edges_csv(w, Some(meta))
        })?;
        write_csv_with(&cfg.out(&format!("network_{tag}_nodes.csv")), |w| {
            net.write_nodes_csv(w, names, Some(meta))
        })?;
    }
    Ok(IssueSummary {
        names: (0..model.k()).map(|t| lda::topic_name(names, t)).collect(),
        by_petitions: prev.by_petitions,
        by_signatures: prev.by_signatures,
        rank_by_petitions: prev.rank_by_petitions,
        rank_by_signatures: prev.rank_by_signatures,
        success_threshold: success.threshold,
        success_raw: success.raw,
        success_smoothed: success.smoothed,
        mean_max_theta: model.mean_max_theta(),
        co_occurrence: summaries[0],
        word_distribution: summaries[1],
    })
}

fn temporal_report(
    cfg: &PipelineConfig,
    model: &TopicModel,
    corpus: &Corpus,
    meta: &OutputMeta,
    notes: &mut Vec<String>,
) -> Result<EntropySummary> {
    let series = temporal::build_series(model, corpus)?;
    write_csv_with(&cfg.out(files::SERIES), |w| series.write_csv(w, Some(meta)))?;
    for &win in &cfg.smoothing_windows {
        if win > 1 {
            let smoothed = temporal::smooth(&series, win)?;
            write_csv_with(&cfg.out(&format!("issue_series_smoothed_{win}.csv")), |w| {
                smoothed.write_csv(w, Some(meta))
            })?;
        }
    }
    let k = model.k();
    if k < 2 {
        notes.push("entropy needs at least two issues; skipped".into());
        return Ok(EntropySummary {
            window_days: cfg.entropy_window_days,
            stats: None,
            mean_pct_change: None,
            sd_pct_change: None,
            flagged: Vec::new(),
        });
    }
    let es = temporal::entropy_series(&series, cfg.entropy_window_days)?;
    let vol = match temporal::detect_volatility(&es) {
        Ok(v) => Some(v),
        Err(Error::InsufficientData(m)) => {
            notes.push(format!("volatility not computed: {m}"));
            None
        }
        Err(e) => return Err(e),
    };
    write_csv_with(&cfg.out(files::ENTROPY), |w| es.write_csv(vol.as_ref(), w, Some(meta)))?;
    Ok(EntropySummary {
        window_days: cfg.entropy_window_days,
        stats: es.stats(),
        mean_pct_change: vol.as_ref().map(|v| v.mean_pct_change),
        sd_pct_change: vol.as_ref().map(|v| v.sd_pct_change),
        flagged: vol.map(|v| v.flags).unwrap_or_default(),
    })
}

fn geo_report(
    cfg: &PipelineConfig,
    model: &TopicModel,
    corpus: &Corpus,
    constituencies: &[ConstituencyMeta],
    meta: &OutputMeta,
    notes: &mut Vec<String>,
) -> Result<GeoSummary> {
    let mut profiles = geo::profile_constituencies(model, corpus, constituencies)?;
    let scaling_raw = geo::scaling_fit(&profiles, ScalingMode::Raw, cfg.scaling_bins)?;
    let scaling_binned = match geo::scaling_fit(&profiles, ScalingMode::Binned, cfg.scaling_bins) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("binned scaling fit skipped: {e}"));
            None
        }
    };
    write_json(
        &cfg.out(files::SCALING),
        meta,
        &serde_json::json!({ "raw": scaling_raw, "binned": scaling_binned }),
    )?;
    let clustered = profiles.iter().filter(|p| p.z_scores.is_some()).count();
    let seed = cfg.stage_seed("pam");
    let clusters = geo::pam_cluster(&profiles, cfg.pam_k, seed, cfg.pam_metric)?;
    geo::apply_clusters(&mut profiles, &clusters);
    let shares = geo::cluster_issue_profile(&clusters, &profiles)?;
    let ks: Vec<usize> = cfg.silhouette_ks.iter().copied().filter(|&k| k >= 2 && k < clustered).collect();
    let silhouette = geo::silhouette_sweep(&profiles, &ks, seed, cfg.pam_metric)?;
    write_csv_with(&cfg.out(files::PROFILES), |w| geo::write_profiles_csv(&profiles, w, Some(meta)))?;
    write_csv_with(&cfg.out(files::CLUSTERS), |w| geo::write_clusters_csv(&profiles, &clusters, w, Some(meta)))?;
    write_csv_with(&cfg.out(files::CLUSTER_SHARES), |w| {
        geo::write_cluster_shares_csv(&shares, &clusters.sizes(), w, Some(meta))
    })?;
    write_csv_with(&cfg.out(files::SILHOUETTE), |w| {
        meta.write_csv_header(w)?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "silhouette", "total_cost"])?;
        for s in &silhouette {
            wtr.write_record([s.k.to_string(), s.silhouette.to_string(), s.total_cost.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(files::SILHOUETTE, e))
    })?;
    let n = profiles.len() as f64;
    Ok(GeoSummary {
        constituencies: profiles.len(),
        mean_signatures_per_constituency: profiles.iter().map(|p| p.total_signatures as f64).sum::<f64>() / n,
        mean_per_elector: profiles.iter().map(|p| p.per_elector).sum::<f64>() / n,
        scaling_raw,
        scaling_binned,
        pam_k: cfg.pam_k,
        cluster_sizes: clusters.sizes(),
        silhouette,
    })
}

fn signature_counts(corpus: &Corpus) -> Vec<u64> {
    corpus.petitions().iter().map(|p| p.total_signatures).collect()
}

fn fit_counts(cfg: &PipelineConfig, counts: &[u64]) -> Vec<u64> {
    counts
        .iter()
        .copied()
        .filter(|&c| cfg.powerlaw_max.is_none_or(|m| c <= m))
        .collect()
}

fn powerlaw_report(
    cfg: &PipelineConfig,
    corpus: &Corpus,
    meta: &OutputMeta,
    notes: &mut Vec<String>,
) -> Result<Option<PowerLawSummary>> {
    let counts = signature_counts(corpus);
    let emp = powerlaw::ccdf(&counts)?;
    write_csv_with(&cfg.out(files::CCDF), |w| emp.write_csv(w, Some(meta)))?;
    let fit = match powerlaw::fit_powerlaw(&fit_counts(cfg, &counts), cfg.powerlaw_x_min) {
        Ok(f) => f,
        Err(e @ (Error::InsufficientData(_) | Error::Numerical(_))) => {
            notes.push(format!("power-law fit skipped: {e}"));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let div = powerlaw::threshold_divergence(&counts, &fit, &cfg.thresholds)?;
    let report = FitReport::new(&fit, &cfg.thresholds, &div);
    write_json(&cfg.out(files::POWERLAW), meta, &report)?;
    Ok(Some(PowerLawSummary {
        fit: report,
        fraction_at_least_100: emp.at(100),
    }))
}

/// Scores annotator answers (`topic,subject,position`) against an answer key.
pub fn run_intrusion_score(cfg: &PipelineConfig, answers: &Path, key: Option<&Path>) -> Result<IntrusionScore> {
    let key_path = key.map_or_else(|| cfg.out(files::INTRUSION_KEY), Path::to_path_buf);
    for p in [answers, key_path.as_path()] {
        if !p.exists() {
            return Err(Error::Config(format!("{} does not exist", p.display())));
        }
    }
    let instances = lda::read_intrusion_key(open(&key_path)?)?;
    let picks = lda::read_intrusion_answers(open(answers)?, &instances)?;
    let score = lda::score_intrusion(&instances, &picks)?;
    let meta = cfg.output_meta();
    write_csv_with(&cfg.out(files::INTRUSION_SCORES), |w| {
        meta.write_csv_header(w)?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["topic", "correct", "answered", "accuracy", "below_threshold"])?;
        for t in &score.per_topic {
            wtr.write_record([
                t.topic.to_string(),
                t.correct.to_string(),
                t.answered.to_string(),
                t.accuracy.map_or_else(|| "NA".to_string(), |a| a.to_string()),
                t.below_threshold.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io(files::INTRUSION_SCORES, e))
    })?;
    Ok(score)
}

/// Held-out hyperparameter sweep over the fitted document-term matrix.
pub fn run_grid(cfg: &PipelineConfig) -> Result<Vec<GridPoint>> {
    let vocab = Vocabulary::read_csv(open(&cfg.out(files::VOCABULARY))?)?;
    let dtm = textprep::DocumentTermMatrix::read_json(open(&cfg.out(files::DTM))?, vocab)?;
    let mut base = cfg.lda_config();
    base.seed = cfg.stage_seed("grid");
    let points = lda::grid_search(&dtm, &base, &cfg.grid).map_err(|e| e.in_stage("grid"))?;
    let meta = cfg.output_meta();
    write_csv_with(&cfg.out(files::GRID), |w| {
        meta.write_csv_header(w)?;
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "alpha", "beta", "heldout_tokens", "heldout_log_likelihood_per_token"])?;
        for p in &points {
            wtr.write_record([
                p.k.to_string(),
                p.alpha.to_string(),
                p.beta.to_string(),
                p.heldout_tokens.to_string(),
                p.heldout_log_likelihood_per_token.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io(files::GRID, e))
    })?;
    Ok(points)
}

pub fn run_xmin_scan(cfg: &PipelineConfig) -> Result<XminScan> {
    let (corpus, _) = load_snapshot(cfg).map_err(|e| e.in_stage("xmin-scan"))?;
    let counts = fit_counts(cfg, &signature_counts(&corpus));
    let scan = powerlaw::scan_xmin(&counts, &cfg.xmin_candidates)?;
    let meta = cfg.output_meta();
    write_csv_with(&cfg.out(files::XMIN_SCAN), |w| scan.write_csv(w, Some(&meta)))?;
    Ok(scan)
}
