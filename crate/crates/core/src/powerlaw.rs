//! Signatures-per-petition CCDF and discrete power-law tail fitting.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meta::OutputMeta;

pub const DEFAULT_X_MIN: u64 = 10;
pub const DEFAULT_THRESHOLDS: [u64; 2] = [10_000, 100_000];

const ALPHA_LOW: f64 = 1.0 + 1e-6;
const ALPHA_HIGH: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ccdf {
    pub x: Vec<u64>,
    /// Fraction of observations `>= x`.
    pub p: Vec<f64>,
}

impl Ccdf {
    /// Empirical `P(X >= t)` for any `t`, not only observed values.
    pub fn at(&self, t: u64) -> f64 {
        let i = self.x.partition_point(|&x| x < t);
        self.p.get(i).copied().unwrap_or(0.0)
    }

    pub fn write_csv(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "p"])?;
        for (x, p) in self.x.iter().zip(&self.p) {
            wtr.write_record([x.to_string(), p.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("ccdf", e))
    }
}

pub fn ccdf(counts: &[u64]) -> Result<Ccdf> {
    if counts.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
    counts.iter().for_each(|&c| *freq.entry(c).or_default() += 1);
    let n = counts.len() as f64;
    let mut remaining = counts.len();
    let mut out = Ccdf {
        x: Vec::with_capacity(freq.len()),
        p: Vec::with_capacity(freq.len()),
    };
    for (x, c) in freq {
        out.x.push(x);
        out.p.push(remaining as f64 / n);
        remaining -= c;
    }
    Ok(out)
}

/// Hurwitz zeta `sum_{n>=0} (q+n)^-s` for `s > 1`, `q > 0`, by Euler-Maclaurin
/// summation after ten explicit terms.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    const N: usize = 10;
    // B_{2j} / (2j)!
    const COEF: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
    ];
    debug_assert!(s > 1.0 && q > 0.0);
    let mut sum: f64 = (0..N).map(|n| (q + n as f64).powf(-s)).sum();
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) times a^(-s-2j+1)
    let mut fact = s;
    let mut pow = a.powf(-s - 1.0);
    let a2 = a * a;
    for (j, c) in COEF.iter().enumerate() {
        sum += c * fact * pow;
        let m = 2.0 * j as f64;
        fact *= (s + m + 1.0) * (s + m + 2.0);
        pow /= a2;
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub x_min: u64,
    pub exponent: f64,
    pub n_tail: usize,
    pub ks_distance: f64,
}

impl PowerLawFit {
    /// Fitted `P(X >= x | X >= x_min)`.
    pub fn tail_ccdf(&self, x: u64) -> f64 {
        if x <= self.x_min {
            return 1.0;
        }
        hurwitz_zeta(self.exponent, x as f64) / hurwitz_zeta(self.exponent, self.x_min as f64)
    }
}

fn log_likelihood(alpha: f64, sum_ln: f64, n: f64, x_min: f64) -> f64 {
    -alpha * sum_ln - n * hurwitz_zeta(alpha, x_min).ln()
}

/// Discrete maximum-likelihood fit over the observations `>= x_min`. The
/// log-likelihood is concave in the exponent, so a golden-section search
/// over a fixed bracket finds the maximum.
pub fn fit_powerlaw(counts: &[u64], x_min: u64) -> Result<PowerLawFit> {
    if x_min == 0 {
        return Err(Error::Validation("x_min must be at least 1".into()));
    }
    let tail: Vec<u64> = counts.iter().copied().filter(|&c| c >= x_min).collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} observations at or above x_min = {x_min}",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let sum_ln: f64 = tail.iter().map(|&c| (c as f64).ln()).sum();
    if tail.iter().all(|&c| c == x_min) {
        return Err(Error::Numerical("every tail observation equals x_min".into()));
    }
    let xm = x_min as f64;
    let f = |a: f64| -log_likelihood(a, sum_ln, n, xm);
    let exponent = golden_min(f, ALPHA_LOW, ALPHA_HIGH, 1e-10);
    if exponent >= ALPHA_HIGH - 1e-6 || exponent <= ALPHA_LOW + 1e-9 {
        return Err(Error::Numerical(format!("exponent search stopped at the bracket edge ({exponent})")));
    }
    let mut fit = PowerLawFit {
        x_min,
        exponent,
        n_tail: tail.len(),
        ks_distance: 0.0,
    };
    fit.ks_distance = ks_distance(&ccdf(&tail)?, &fit);
    Ok(fit)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Largest gap between an empirical tail CCDF and the fitted one over the
/// empirical support.
pub fn ks_distance(tail: &Ccdf, fit: &PowerLawFit) -> f64 {
    let z0 = hurwitz_zeta(fit.exponent, fit.x_min as f64);
    tail.x
        .iter()
        .zip(&tail.p)
        .map(|(&x, &p)| {
            let model = if x <= fit.x_min { 1.0 } else { hurwitz_zeta(fit.exponent, x as f64) / z0 };
            (p - model).abs()
        })
        .fold(0.0, f64::max)
}

/// Closed-form continuous estimate `1 + n / sum ln(x / x_min)`.
pub fn continuous_mle(values: &[f64], x_min: f64) -> Result<f64> {
    let tail: Vec<f64> = values.iter().copied().filter(|&x| x >= x_min).collect();
    let s: f64 = tail.iter().map(|x| (x / x_min).ln()).sum();
    if tail.is_empty() || s <= 0.0 {
        return Err(Error::InsufficientData("no spread above x_min".into()));
    }
    Ok(1.0 + tail.len() as f64 / s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub x_min: u64,
    pub fit: Option<PowerLawFit>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XminScan {
    pub rows: Vec<ScanRow>,
    /// Row with the smallest KS distance, earliest on ties.
    pub best: Option<usize>,
}

pub fn scan_xmin(counts: &[u64], candidates: &[u64]) -> Result<XminScan> {
    if candidates.is_empty() {
        return Err(Error::Validation("no x_min candidates".into()));
    }
    let rows: Vec<ScanRow> = candidates
        .iter()
        .map(|&x_min| match fit_powerlaw(counts, x_min) {
            Ok(fit) => ScanRow {
                x_min,
                fit: Some(fit),
                error: None,
            },
            Err(e) => ScanRow {
                x_min,
                fit: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in rows.iter().enumerate() {
        if let Some(f) = &r.fit {
            if best.is_none_or(|(_, d)| f.ks_distance < d) {
                best = Some((i, f.ks_distance));
            }
        }
    }
    Ok(XminScan {
        rows,
        best: best.map(|b| b.0),
    })
}

impl XminScan {
    pub fn write_csv(&self, mut w: impl Write, meta: Option<&OutputMeta>) -> Result<()> {
        if let Some(m) = meta {
            m.write_csv_header(&mut w)?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x_min", "exponent", "n_tail", "ks_distance", "best", "error"])?;
        for (i, r) in self.rows.iter().enumerate() {
            let (e, n, ks) = match &r.fit {
                Some(f) => (f.exponent.to_string(), f.n_tail.to_string(), f.ks_distance.to_string()),
                None => ("NA".into(), "NA".into(), "NA".into()),
            };
            wtr.write_record([
                r.x_min.to_string(),
                e,
                n,
                ks,
                (self.best == Some(i)).to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("xmin scan", e))
    }
}

/// `log10` of empirical over fitted `P(X >= T)` on the full sample, where the
/// fitted tail is scaled by the observed fraction at or above `x_min`.
/// `None` when `T` lies outside `[x_min, max(counts)]`.
pub fn threshold_divergence(counts: &[u64], fit: &PowerLawFit, thresholds: &[u64]) -> Result<Vec<Option<f64>>> {
    let emp = ccdf(counts)?;
    let max = *emp.x.last().expect("non-empty");
    let tail_frac = emp.at(fit.x_min);
    Ok(thresholds
        .iter()
        .map(|&t| {
            if t > max || t < fit.x_min || tail_frac == 0.0 {
                return None;
            }
            Some(emp.at(t).log10() - (tail_frac * fit.tail_ccdf(t)).log10())
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub x_min: u64,
    pub exponent: f64,
    pub n_tail: usize,
    pub ks_distance: f64,
    pub divergences: BTreeMap<String, Option<f64>>,
}

impl FitReport {
    pub fn new(fit: &PowerLawFit, thresholds: &[u64], divergences: &[Option<f64>]) -> Self {
        Self {
            x_min: fit.x_min,
            exponent: fit.exponent,
            n_tail: fit.n_tail,
            ks_distance: fit.ks_distance,
            divergences: thresholds.iter().map(|t| t.to_string()).zip(divergences.iter().copied()).collect(),
        }
    }
}
