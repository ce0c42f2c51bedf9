//! Daily issue series, smoothing, and entropy-based volatility.
//!
//! Petitions carry only a creation date and a final signature count, so all
//! of a petition's signatures are attributed to the day it was created.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lda::TopicModel;
use crate::meta::OutputMeta;

pub const DEFAULT_ENTROPY_WINDOW: usize = 7;
/// Deviations beyond this many standard deviations mark a volatile day.
pub const VOLATILITY_SIGMAS: f64 = 3.0;
pub const MIN_CHANGES_FOR_VOLATILITY: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IssueSeries {
    pub dates: Vec<NaiveDate>,
    /// `values[day][issue]`
    pub values: Vec<Vec<f64>>,
}

impl IssueSeries {
    pub fn n_issues(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    pub fn write_csv(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["date".to_string()];
        header.extend((0..self.n_issues()).map(|i| format!("issue_{i}")));
        wtr.write_record(&header)?;
        for (d, row) in self.dates.iter().zip(&self.values) {
            let mut rec = vec![d.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("series", e))
    }
}

fn day_range(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start.iter_days().take_while(|d| *d <= end).collect()
}

pub fn build_series(model: &TopicModel, corpus: &Corpus) -> Result<IssueSeries> {
    model.ensure_aligned(corpus)?;
    let created: Vec<NaiveDate> = corpus.petitions().iter().map(|p| p.created_at).collect();
    build_series_from(model, &created, &corpus.uk_signatures(), corpus.window())
}

/// Adds `signatures[d] * theta[d][k]` to the creation day of each document.
pub fn build_series_from(
    model: &TopicModel,
    created: &[NaiveDate],
    signatures: &[u64],
    window: (NaiveDate, NaiveDate),
) -> Result<IssueSeries> {
    if created.len() != model.n_docs() || signatures.len() != model.n_docs() {
        return Err(Error::Dimension("dates or signatures do not match documents".into()));
    }
    let dates = day_range(window.0, window.1);
    let k = model.k();
    let mut values = vec![vec![0.0; k]; dates.len()];
    for (d, (&day, &s)) in created.iter().zip(signatures).enumerate() {
        if day < window.0 || day > window.1 {
            return Err(Error::Validation(format!("creation date {day} outside window")));
        }
        let row = &mut values[(day - window.0).num_days() as usize];
        for (cell, &p) in row.iter_mut().zip(model.theta_row(d)) {
            *cell += s as f64 * p;
        }
    }
    Ok(IssueSeries { dates, values })
}

/// Centered moving average per issue. Windows are truncated at the ends of
/// the series and divided by the number of days they actually cover.
pub fn smooth(series: &IssueSeries, window_days: usize) -> Result<IssueSeries> {
    if window_days == 0 {
        return Err(Error::Validation("smoothing window must be at least one day".into()));
    }
    let n = series.values.len();
    let k = series.n_issues();
    let before = (window_days - 1) / 2;
    let after = window_days / 2;
    let mut prefix = vec![vec![0.0; k]; n + 1];
    for t in 0..n {
        for i in 0..k {
            prefix[t + 1][i] = prefix[t][i] + series.values[t][i];
        }
    }
    let values = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(before);
            let hi = (t + after).min(n - 1);
            let len = (hi - lo + 1) as f64;
            (0..k).map(|i| (prefix[hi + 1][i] - prefix[lo][i]) / len).collect()
        })
        .collect();
    Ok(IssueSeries {
        dates: series.dates.clone(),
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropySeries {
    pub dates: Vec<NaiveDate>,
    /// Normalized entropy, `None` where the window holds no signatures or
    /// does not yet span a full window.
    pub h: Vec<Option<f64>>,
    /// Percentage change from the previous day.
    pub pct_change: Vec<Option<f64>>,
}

impl EntropySeries {
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.h.iter().flatten().copied()
    }

    pub fn stats(&self) -> Option<EntropyStats> {
        let hs: Vec<f64> = self.defined().collect();
        if hs.is_empty() {
            return None;
        }
        Some(EntropyStats {
            min: hs.iter().cloned().fold(f64::INFINITY, f64::min),
            max: hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean: hs.iter().sum::<f64>() / hs.len() as f64,
            defined_days: hs.len(),
        })
    }

    /// CSV `date,entropy,pct_change,flagged,direction`.
    pub fn write_csv(&self, volatility: Option<&Volatility>, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let flags: BTreeMap<NaiveDate, Direction> = volatility
            .map(|v| v.flags.iter().map(|f| (f.date, f.direction)).collect())
            .unwrap_or_default();
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["date", "entropy", "pct_change", "flagged", "direction"])?;
        let na = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| v.to_string());
        for (t, d) in self.dates.iter().enumerate() {
            let dir = flags.get(d);
            wtr.write_record([
                d.to_string(),
                na(self.h[t]),
                na(self.pct_change[t]),
                dir.is_some().to_string(),
                dir.map_or(String::new(), |d| d.as_str().to_string()),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("entropy", e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntropyStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub defined_days: usize,
}

/// Normalized Shannon entropy `-sum p ln p / ln K` of a mass vector, or
/// `None` when the mass is zero.
pub fn normalized_entropy(mass: &[f64]) -> Option<f64> {
    let total: f64 = mass.iter().sum();
    if total <= 0.0 || mass.len() < 2 {
        return None;
    }
    let h: f64 = mass
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| {
            let p = m / total;
            -p * p.ln()
        })
        .sum();
    // A single occupied issue sums to -0.0.
    Some((h / (mass.len() as f64).ln()).clamp(0.0, 1.0) + 0.0)
}

/// Entropy of signature mass pooled over the trailing window ending each day.
pub fn entropy_series(series: &IssueSeries, window_days: usize) -> Result<EntropySeries> {
    if window_days == 0 {
        return Err(Error::Validation("entropy window must be at least one day".into()));
    }
    let k = series.n_issues();
    if k < 2 {
        return Err(Error::Validation("entropy needs at least two issues".into()));
    }
    let n = series.values.len();
    let h: Vec<Option<f64>> = (0..n)
        .map(|t| {
            if t + 1 < window_days {
                return None;
            }
            let mut mass = vec![0.0; k];
            for row in &series.values[t + 1 - window_days..=t] {
                mass.iter_mut().zip(row).for_each(|(m, v)| *m += v);
            }
            normalized_entropy(&mass)
        })
        .collect();
    let pct_change = (0..n)
        .map(|t| match (t.checked_sub(1).and_then(|p| h[p]), h[t]) {
            (Some(prev), Some(cur)) if prev > 0.0 => Some((cur - prev) / prev * 100.0),
            _ => None,
        })
        .collect();
    Ok(EntropySeries {
        dates: series.dates.clone(),
        h,
        pct_change,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolatileDay {
    pub date: NaiveDate,
    pub pct_change: f64,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Volatility {
    pub mean_pct_change: f64,
    pub sd_pct_change: f64,
    pub flags: Vec<VolatileDay>,
}

impl Volatility {
    pub fn increases(&self) -> usize {
        self.flags.iter().filter(|f| f.direction == Direction::Increase).count()
    }

    pub fn decreases(&self) -> usize {
        self.flags.len() - self.increases()
    }
}

/// Flags days whose percentage change lies more than three sample standard
/// deviations from the mean change over the whole series.
pub fn detect_volatility(es: &EntropySeries) -> Result<Volatility> {
    let changes: Vec<(usize, f64)> = es
        .pct_change
        .iter()
        .enumerate()
        .filter_map(|(t, c)| c.map(|c| (t, c)))
        .collect();
    if changes.len() < MIN_CHANGES_FOR_VOLATILITY {
        return Err(Error::InsufficientData(format!(
            "{} defined daily changes, need {MIN_CHANGES_FOR_VOLATILITY}",
            changes.len()
        )));
    }
    let n = changes.len() as f64;
    let mean = changes.iter().map(|c| c.1).sum::<f64>() / n;
    let sd = (changes.iter().map(|c| (c.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let flags = changes
        .iter()
        .filter(|&&(_, c)| (c - mean).abs() > VOLATILITY_SIGMAS * sd)
        .map(|&(t, c)| VolatileDay {
            date: es.dates[t],
            pct_change: c,
            direction: if c >= 0.0 { Direction::Increase } else { Direction::Decrease },
        })
        .collect();
    Ok(Volatility {
        mean_pct_change: mean,
        sd_pct_change: sd,
        flags,
    })
}
