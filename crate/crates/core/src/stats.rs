//! Point value per ruling, monthly aggregates, CPI comparison and
//! disability-percentage distributions.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::entity::{EntityKind, Extraction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Precondition(format!("month {month} out of range")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn of(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Amounts and percentages feeding the point value of one ruling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PvInputs {
    pub psi_a: Option<f64>,
    pub psi_p: Option<f64>,
    pub pi_a: Option<f64>,
    pub pi_p: Option<f64>,
    pub md_a: Option<f64>,
}

impl PvInputs {
    /// Collect inputs from one document's extractions. Error records and
    /// psychophysical extractions are ignored.
    pub fn from_extractions<'a>(extractions: impl IntoIterator<Item = &'a Extraction>) -> Self {
        let mut p = PvInputs::default();
        for e in extractions.into_iter().filter(|e| !e.is_error()) {
            match e.kind {
                EntityKind::PsychologicalDisability => {
                    p.psi_a = e.amount;
                    p.psi_p = e.percentage;
                }
                EntityKind::PhysicalDisability => {
                    p.pi_a = e.amount;
                    p.pi_p = e.percentage;
                }
                EntityKind::MoralDamage => p.md_a = e.amount,
                EntityKind::PsychophysicalDisability => {}
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointValueRecord {
    pub doc_id: String,
    pub ruling_month: Option<YearMonth>,
    pub pv: f64,
    pub psi_term: Option<f64>,
    pub pi_term: Option<f64>,
    pub inputs: PvInputs,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// A ruling whose inputs allow neither term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoPointValue {
    pub doc_id: String,
    pub warnings: Vec<String>,
}

/// `PSI_a / PSI_p + (PI_a + MD_a) / PI_p`, omitting any term whose
/// percentage is absent or not positive. Moral damage only enters through the
/// physical term.
pub fn point_value(
    doc_id: &str,
    ruling_month: Option<YearMonth>,
    inputs: PvInputs,
) -> std::result::Result<PointValueRecord, NoPointValue> {
    let mut warnings = Vec::new();
    let psi_term = match (inputs.psi_a, inputs.psi_p) {
        (Some(a), Some(p)) if p > 0.0 => Some(a / p),
        (Some(_), Some(p)) => {
            warnings.push(format!("psychological percentage {p} is not positive; term omitted"));
            None
        }
        (Some(_), None) => {
            warnings.push("psychological amount without percentage; term omitted".into());
            None
        }
        (None, _) => None,
    };
    let numerator = match (inputs.pi_a, inputs.md_a) {
        (None, None) => None,
        (a, m) => Some(a.unwrap_or(0.0) + m.unwrap_or(0.0)),
    };
    let pi_term = match (numerator, inputs.pi_p) {
        (Some(n), Some(p)) if p > 0.0 => Some(n / p),
        (Some(_), Some(p)) => {
            warnings.push(format!("physical percentage {p} is not positive; term omitted"));
            None
        }
        (Some(_), None) => {
            warnings.push("physical or moral damage amount without physical percentage; term omitted".into());
            None
        }
        (None, _) => None,
    };
    let pv = match (psi_term, pi_term) {
        (None, None) => {
            return Err(NoPointValue {
                doc_id: doc_id.to_string(),
                warnings,
            })
        }
        (a, b) => a.unwrap_or(0.0) + b.unwrap_or(0.0),
    };
    Ok(PointValueRecord {
        doc_id: doc_id.to_string(),
        ruling_month,
        pv,
        psi_term,
        pi_term,
        inputs,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyStat {
    pub mean: f64,
    pub median: f64,
    pub n: usize,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// Mean, median and count of point values per ruling month. Records without
/// a month are left out.
pub fn monthly_point_value(records: &[PointValueRecord]) -> BTreeMap<YearMonth, MonthlyStat> {
    let mut groups: BTreeMap<YearMonth, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(m) = r.ruling_month {
            groups.entry(m).or_default().push(r.pv);
        }
    }
    groups
        .into_iter()
        .map(|(m, v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let median = median(&v).expect("groups are non-empty");
            (
                m,
                MonthlyStat {
                    mean,
                    median,
                    n: v.len(),
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CpiSeries {
    pub values: BTreeMap<YearMonth, f64>,
}

#[derive(Debug, Deserialize)]
struct CpiRow {
    year: i32,
    month: u32,
    index: f64,
}

impl CpiSeries {
    /// Months must be strictly increasing and values positive.
    pub fn new(points: impl IntoIterator<Item = (YearMonth, f64)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut last: Option<YearMonth> = None;
        for (m, v) in points {
            if last.is_some_and(|l| m <= l) {
                return Err(Error::Precondition(format!(
                    "CPI months not strictly increasing at {m}"
                )));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Precondition(format!("CPI value {v} at {m} is not positive")));
            }
            values.insert(m, v);
            last = Some(m);
        }
        Ok(CpiSeries { values })
    }

    /// CSV with header `year,month,index`.
    pub fn from_csv<R: Read>(reader: R, context: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut points = Vec::new();
        for row in rdr.deserialize::<CpiRow>() {
            let row = row.map_err(|e| Error::Csv {
                context: context.to_string(),
                message: e.to_string(),
            })?;
            points.push((YearMonth::new(row.year, row.month)?, row.index));
        }
        Self::new(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiRowOut {
    pub month: YearMonth,
    pub pv_mean: f64,
    pub cpi: f64,
    pub pv_indexed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiComparison {
    pub rows: Vec<CpiRowOut>,
    pub correlation: Option<f64>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Join monthly mean point values with the CPI. `pv_indexed` is
/// `pv_mean / cpi`, scaled so the first shared month is 1.
pub fn cpi_compare(monthly: &BTreeMap<YearMonth, MonthlyStat>, cpi: &CpiSeries) -> CpiComparison {
    let joined: Vec<(YearMonth, f64, f64)> = monthly
        .iter()
        .filter_map(|(m, s)| cpi.values.get(m).map(|&c| (*m, s.mean, c)))
        .collect();
    let base = joined.first().map(|&(_, pv, c)| pv / c);
    let rows = joined
        .iter()
        .map(|&(month, pv_mean, c)| CpiRowOut {
            month,
            pv_mean,
            cpi: c,
            pv_indexed: match base {
                Some(b) if b != 0.0 => (pv_mean / c) / b,
                _ => f64::NAN,
            },
        })
        .collect();
    let xs: Vec<f64> = joined.iter().map(|j| j.1).collect();
    let ys: Vec<f64> = joined.iter().map(|j| j.2).collect();
    CpiComparison {
        rows,
        correlation: pearson(&xs, &ys),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisabilityDistribution {
    pub histogram: Histogram,
    pub n: usize,
    pub fraction_below_30: f64,
    pub fraction_above_50: f64,
}

pub fn fraction_below(values: &[f64], t: f64) -> f64 {
    values.iter().filter(|&&v| v < t).count() as f64 / values.len() as f64
}

pub fn fraction_above(values: &[f64], t: f64) -> f64 {
    values.iter().filter(|&&v| v > t).count() as f64 / values.len() as f64
}

pub const DEFAULT_BIN_EDGES: [f64; 11] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];

/// Bins are `[a, b)` except the last, which is closed so that 100 is counted.
pub fn histogram(values: &[f64], bin_edges: &[f64]) -> Result<Histogram> {
    if bin_edges.len() < 2 {
        return Err(Error::Precondition("histogram needs at least two bin edges".into()));
    }
    if bin_edges
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::Precondition("bin edges must be strictly ascending".into()));
    }
    let lo = bin_edges[0];
    let hi = bin_edges[bin_edges.len() - 1];
    let mut counts = vec![0usize; bin_edges.len() - 1];
    for &v in values {
        if !(v >= lo && v <= hi) {
            return Err(Error::Precondition(format!("value {v} outside bin range [{lo}, {hi}]")));
        }
        // Index of the last edge <= v, capped at the final bin.
        let i = bin_edges
            .partition_point(|&e| e <= v)
            .saturating_sub(1)
            .min(counts.len() - 1);
        counts[i] += 1;
    }
    let total: usize = counts.iter().sum();
    let fractions = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    Ok(Histogram {
        bin_edges: bin_edges.to_vec(),
        counts,
        fractions,
    })
}

/// Distribution of disability percentages, all of which must lie in (0, 100].
pub fn disability_histogram(percentages: &[f64], bin_edges: &[f64]) -> Result<DisabilityDistribution> {
    if percentages.is_empty() {
        return Err(Error::EmptyInput("no disability percentages"));
    }
    if let Some(v) = percentages.iter().find(|&&v| !(v > 0.0 && v <= 100.0)) {
        return Err(Error::Precondition(format!(
            "disability percentage {v} outside (0, 100]"
        )));
    }
    if bin_edges.first().is_some_and(|&e| e > 0.0) || bin_edges.last().is_some_and(|&e| e < 100.0) {
        return Err(Error::Precondition("bin edges must cover (0, 100]".into()));
    }
    Ok(DisabilityDistribution {
        histogram: histogram(percentages, bin_edges)?,
        n: percentages.len(),
        fraction_below_30: fraction_below(percentages, 30.0),
        fraction_above_50: fraction_above(percentages, 50.0),
    })
}

/// Shortest round-trip formatting used in every CSV artifact.
pub fn fmt_float(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn csv_err(e: impl fmt::Display) -> Error {
    Error::Csv {
        context: "output".into(),
        message: e.to_string(),
    }
}

/// `doc_id,year,month,pv,psi_term,pi_term`
pub fn write_pv_csv<W: Write>(w: W, records: &[PointValueRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["doc_id", "year", "month", "pv", "psi_term", "pi_term"])
        .map_err(csv_err)?;
    for r in records {
        let (y, m) = r
            .ruling_month
            .map(|m| (m.year.to_string(), m.month.to_string()))
            .unwrap_or_default();
        wtr.write_record([r.doc_id.clone(), y, m, fmt_float(r.pv), opt(r.psi_term), opt(r.pi_term)])
            .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)
}

/// `year,month,mean,median,n`
pub fn write_monthly_csv<W: Write>(w: W, monthly: &BTreeMap<YearMonth, MonthlyStat>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["year", "month", "mean", "median", "n"])
        .map_err(csv_err)?;
    for (m, s) in monthly {
        wtr.write_record([
            m.year.to_string(),
            m.month.to_string(),
            fmt_float(s.mean),
            fmt_float(s.median),
            s.n.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)
}

/// `year,month,pv_mean,cpi,pv_indexed`
pub fn write_cpi_csv<W: Write>(w: W, cmp: &CpiComparison) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["year", "month", "pv_mean", "cpi", "pv_indexed"])
        .map_err(csv_err)?;
    for r in &cmp.rows {
        wtr.write_record([
            r.month.year.to_string(),
            r.month.month.to_string(),
            fmt_float(r.pv_mean),
            fmt_float(r.cpi),
            fmt_float(r.pv_indexed),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)
}

/// `bin_start,bin_end,count,fraction`
pub fn write_histogram_csv<W: Write>(w: W, h: &Histogram) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["bin_start", "bin_end", "count", "fraction"])
        .map_err(csv_err)?;
    for (i, c) in h.counts.iter().enumerate() {
        wtr.write_record([
            fmt_float(h.bin_edges[i]),
            fmt_float(h.bin_edges[i + 1]),
            c.to_string(),
            fmt_float(h.fractions[i]),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(csv_err)
}
