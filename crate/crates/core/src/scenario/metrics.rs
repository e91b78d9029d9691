//! Metric samples, their CSV forms, empirical distributions and summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::ScenarioError;

pub const INR_CSV_HEADER: &str = "timestamp,sat_id,elevation_deg,inr_db,mode";
pub const RHO_CSV_HEADER: &str = "timestamp,bs_id,rho_t_db,mode";
pub const CDF_CSV_HEADER: &str = "x,cdf";

/// Elevation bins of the elevation study: `[25, 45]`, `(45, 70]`, `(70, 90]`.
pub const ELEVATION_BINS: [(f64, f64); 3] = [(25.0, 45.0), (45.0, 70.0), (70.0, 90.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct InrSample {
    pub timestamp: String,
    pub sat_id: String,
    pub elevation_deg: f64,
    pub inr_db: f64,
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrLossSample {
    pub timestamp: String,
    pub bs_id: usize,
    pub rho_t_db: f64,
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSet {
    pub inr: Vec<InrSample>,
    pub rho: Vec<SnrLossSample>,
}

impl MetricSet {
    /// Mode labels in order of first appearance.
    pub fn modes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in self.inr.iter().map(|s| &s.mode).chain(self.rho.iter().map(|s| &s.mode)) {
            if !out.contains(m) {
                out.push(m.clone());
            }
        }
        out
    }

    pub fn inr_values(&self, mode: &str) -> Vec<f64> {
        self.inr.iter().filter(|s| s.mode == mode).map(|s| s.inr_db).collect()
    }

    pub fn rho_values(&self, mode: &str) -> Vec<f64> {
        self.rho.iter().filter(|s| s.mode == mode).map(|s| s.rho_t_db).collect()
    }

    /// INR values of `mode` with elevation in the bin (first bin closed on
    /// both sides, the others open below).
    pub fn inr_in_elevation_bin(&self, mode: &str, bin: usize) -> Vec<f64> {
        let (lo, hi) = ELEVATION_BINS[bin];
        self.inr
            .iter()
            .filter(|s| s.mode == mode && in_bin(s.elevation_deg, lo, hi, bin == 0))
            .map(|s| s.inr_db)
            .collect()
    }
}

fn in_bin(x: f64, lo: f64, hi: f64, closed_below: bool) -> bool {
    (x > lo || (closed_below && x == lo)) && x <= hi
}

/// Empirical CDF over sorted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self, ScenarioError> {
        if samples.is_empty() {
            return Err(ScenarioError::EmptySamples);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(ScenarioError::Metric("NaN sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `s` with `cdf(s) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let k = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.sorted[k.clamp(1, n) - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `(x, cdf)` at every distinct sample value.
    pub fn table(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let c = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = c,
                _ => out.push((x, c)),
            }
        }
        out
    }
}

/// Histogram density over `[lo, hi)` with `bins` equal bins (the last bin is
/// closed); samples outside are ignored. Returns `(bin_lo, bin_hi, density)`.
pub fn histogram_pdf(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, f64)> {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut total = 0usize;
    for &x in samples {
        if x < lo || x > hi {
            continue;
        }
        let k = (((x - lo) / w) as usize).min(bins - 1);
        counts[k] += 1;
        total += 1;
    }
    (0..bins)
        .map(|k| {
            let d = if total == 0 {
                0.0
            } else {
                counts[k] as f64 / (total as f64 * w)
            };
            (lo + k as f64 * w, lo + (k + 1) as f64 * w, d)
        })
        .collect()
}

/// Fraction of `samples` inside an elevation bin of [`ELEVATION_BINS`].
pub fn elevation_mass(samples: &[f64], bin: usize) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let (lo, hi) = ELEVATION_BINS[bin];
    samples.iter().filter(|&&x| in_bin(x, lo, hi, bin == 0)).count() as f64 / samples.len() as f64
}

pub fn write_inr_csv(samples: &[InrSample]) -> String {
    let mut out = format!("{INR_CSV_HEADER}\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{},{}", s.timestamp, s.sat_id, s.elevation_deg, s.inr_db, s.mode);
    }
    out
}

pub fn write_rho_csv(samples: &[SnrLossSample]) -> String {
    let mut out = format!("{RHO_CSV_HEADER}\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.timestamp, s.bs_id, s.rho_t_db, s.mode);
    }
    out
}

pub fn write_cdf_csv(e: &Ecdf) -> String {
    let mut out = format!("{CDF_CSV_HEADER}\n");
    for (x, c) in e.table() {
        let _ = writeln!(out, "{x},{c}");
    }
    out
}

fn csv_rows<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>, ScenarioError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => {
            return Err(ScenarioError::Csv {
                line: 1,
                msg: format!("expected header '{header}'"),
            })
        }
    }
    let n = header.split(',').count();
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.trim().split(',').collect();
            if f.len() != n {
                return Err(ScenarioError::Csv {
                    line: i + 1,
                    msg: format!("expected {n} fields, found {}", f.len()),
                });
            }
            Ok((i + 1, f))
        })
        .collect()
}

fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, ScenarioError>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| ScenarioError::Csv {
        line,
        msg: format!("'{s}': {e}"),
    })
}

pub fn read_inr_csv(text: &str) -> Result<Vec<InrSample>, ScenarioError> {
    csv_rows(text, INR_CSV_HEADER)?
        .into_iter()
        .map(|(ln, f)| {
            Ok(InrSample {
                timestamp: f[0].to_string(),
                sat_id: f[1].to_string(),
                elevation_deg: parse(ln, f[2])?,
                inr_db: parse(ln, f[3])?,
                mode: f[4].to_string(),
            })
        })
        .collect()
}

pub fn read_rho_csv(text: &str) -> Result<Vec<SnrLossSample>, ScenarioError> {
    csv_rows(text, RHO_CSV_HEADER)?
        .into_iter()
        .map(|(ln, f)| {
            Ok(SnrLossSample {
                timestamp: f[0].to_string(),
                bs_id: parse(ln, f[1])?,
                rho_t_db: parse(ln, f[2])?,
                mode: f[3].to_string(),
            })
        })
        .collect()
}

/// Median and 95th percentile of one labeled sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub mode: String,
    pub n: usize,
    pub median: f64,
    pub p95: f64,
    /// Fraction of samples above −6 dB (INR rows only).
    pub frac_above_minus6: Option<f64>,
}

pub const SUMMARY_CSV_HEADER: &str = "metric,mode,n,median,p95,frac_above_-6db";

/// Everything `analyze` reports, keyed by output file name.
pub fn analyze(metrics: &MetricSet) -> Result<BTreeMap<String, String>, ScenarioError> {
    let mut files = BTreeMap::new();
    let mut rows = Vec::new();
    for mode in metrics.modes() {
        let inr = metrics.inr_values(&mode);
        if !inr.is_empty() {
            let e = Ecdf::new(&inr)?;
            files.insert(format!("cdf_inr_{mode}.csv"), write_cdf_csv(&e));
            rows.push(SummaryRow {
                metric: "inr_db".into(),
                mode: mode.clone(),
                n: e.len(),
                median: e.median(),
                p95: e.quantile(0.95),
                frac_above_minus6: Some(1.0 - e.cdf(-6.0)),
            });
            for bin in 0..ELEVATION_BINS.len() {
                let v = metrics.inr_in_elevation_bin(&mode, bin);
                if v.is_empty() {
                    continue;
                }
                let e = Ecdf::new(&v)?;
                let (lo, hi) = ELEVATION_BINS[bin];
                files.insert(format!("cdf_inr_{mode}_el{lo}-{hi}.csv"), write_cdf_csv(&e));
                rows.push(SummaryRow {
                    metric: format!("inr_db_el{lo}-{hi}"),
                    mode: mode.clone(),
                    n: e.len(),
                    median: e.median(),
                    p95: e.quantile(0.95),
                    frac_above_minus6: Some(1.0 - e.cdf(-6.0)),
                });
            }
        }
        let rho = metrics.rho_values(&mode);
        if !rho.is_empty() {
            let e = Ecdf::new(&rho)?;
            files.insert(format!("cdf_rho_{mode}.csv"), write_cdf_csv(&e));
            rows.push(SummaryRow {
                metric: "rho_t_db".into(),
                mode: mode.clone(),
                n: e.len(),
                median: e.median(),
                p95: e.quantile(0.95),
                frac_above_minus6: None,
            });
        }
    }
    let mut summary = format!("{SUMMARY_CSV_HEADER}\n");
    for r in &rows {
        let frac = r.frac_above_minus6.map_or(String::new(), |f| f.to_string());
        let _ = writeln!(summary, "{},{},{},{},{},{}", r.metric, r.mode, r.n, r.median, r.p95, frac);
    }
    files.insert("summary.csv".into(), summary);

    // elevation distribution of the satellites that entered the INR sum,
    // counted once per (timestamp, satellite)
    let mut seen = std::collections::BTreeSet::new();
    let els: Vec<f64> = metrics
        .inr
        .iter()
        .filter(|s| seen.insert((s.timestamp.clone(), s.sat_id.clone())))
        .map(|s| s.elevation_deg)
        .collect();
    let mut pdf = String::from("bin_lo,bin_hi,density\n");
    for (lo, hi, d) in histogram_pdf(&els, 25.0, 90.0, 13) {
        let _ = writeln!(pdf, "{lo},{hi},{d}");
    }
    files.insert("elevation_pdf.csv".into(), pdf);
    Ok(files)
}
