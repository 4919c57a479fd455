use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::estimators::Ratios;
use crate::optimizer::{Optimum, Variant};

pub const SUMMARY_HEADER: [&str; 10] =
    ["epsilon", "variant", "levels", "work", "continuous_work", "rmse_bound", "h0", "ratios", "samples", "status"];

/// One row of the work-vs-ε table. `ratios` and `samples` are
/// space-separated lists; `status` is `ok` or the reason for failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub epsilon: f64,
    pub variant: Variant,
    pub levels: Option<usize>,
    pub work: Option<f64>,
    pub continuous_work: Option<f64>,
    pub rmse_bound: Option<f64>,
    pub h0: Option<f64>,
    pub ratios: String,
    pub samples: String,
    pub status: String,
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl SummaryRow {
    pub fn from_optimum(o: &Optimum) -> Self {
        let ratios = match (&o.plan.ratios, o.levels) {
            (_, 0) => String::new(),
            (Ratios::Geometric(r), _) => r.to_string(),
            (Ratios::Free(r), _) => join(r),
        };
        Self {
            epsilon: o.epsilon,
            variant: o.variant,
            levels: Some(o.levels),
            work: Some(o.work),
            continuous_work: Some(o.continuous.work),
            rmse_bound: Some(o.rmse_bound),
            h0: Some(o.plan.h0),
            ratios,
            samples: join(&o.plan.samples),
            status: "ok".into(),
        }
    }

    pub fn failed(epsilon: f64, variant: Variant, status: String) -> Self {
        Self {
            epsilon,
            variant,
            levels: None,
            work: None,
            continuous_work: None,
            rmse_bound: None,
            h0: None,
            ratios: String::new(),
            samples: String::new(),
            status,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(reader: R) -> Result<Vec<SummaryRow>, CliError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(|e| CliError::Config(e.to_string()))?;
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(CliError::Config(format!("unexpected summary header {header:?}")));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(|e| CliError::Config(e.to_string()))
}

/// Works of every `(summary, variant)` series on a common ε grid. The
/// first series is the baseline; `ratios[k][i] = work[0][i] / work[k][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub epsilon: Vec<f64>,
    pub labels: Vec<String>,
    pub work: Vec<Vec<Option<f64>>>,
    pub ratios: Vec<Vec<Option<f64>>>,
}

/// Joins summaries by ε. Every series must cover exactly the same ε values.
pub fn compare(summaries: &[(String, Vec<SummaryRow>)]) -> Result<Comparison, CliError> {
    if summaries.len() < 2 {
        return Err(CliError::Config(format!("compare needs at least 2 summaries, got {}", summaries.len())));
    }
    let mut series: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for (name, rows) in summaries {
        let mut variants: Vec<Variant> = rows.iter().map(|r| r.variant).collect();
        variants.sort();
        variants.dedup();
        for v in variants {
            let mut s: Vec<&SummaryRow> = rows.iter().filter(|r| r.variant == v).collect();
            s.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
            if s.windows(2).any(|w| w[0].epsilon == w[1].epsilon) {
                return Err(CliError::Join(format!("{name}: duplicate ε for variant {}", v.label())));
            }
            series.push((format!("{name}_{}", v.label()), s));
        }
    }
    let epsilon: Vec<f64> = series[0].1.iter().map(|r| r.epsilon).collect();
    for (label, s) in &series[1..] {
        let other: Vec<f64> = s.iter().map(|r| r.epsilon).collect();
        if other.len() != epsilon.len() || other.iter().zip(&epsilon).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Err(CliError::Join(format!(
                "ε grid of {label} {other:?} differs from {} {epsilon:?}",
                series[0].0
            )));
        }
    }
    let work: Vec<Vec<Option<f64>>> =
        series.iter().map(|(_, s)| s.iter().map(|r| if r.is_ok() { r.work } else { None }).collect()).collect();
    let ratios = work
        .iter()
        .map(|w| {
            w.iter()
                .zip(&work[0])
                .map(|(w, base)| match (base, w) {
                    (Some(b), Some(w)) if *w > 0.0 => Some(b / w),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(Comparison { epsilon, labels: series.into_iter().map(|s| s.0).collect(), work, ratios })
}

/// Header `epsilon,work_<label>..,ratio_<label>..`; ratios are baseline over series.
pub fn write_comparison_csv<W: Write>(c: &Comparison, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["epsilon".to_string()];
    header.extend(c.labels.iter().map(|l| format!("work_{l}")));
    header.extend(c.labels.iter().skip(1).map(|l| format!("ratio_{l}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for (i, eps) in c.epsilon.iter().enumerate() {
        let mut rec = vec![format!("{eps:e}")];
        rec.extend(c.work.iter().map(|s| opt(s[i])));
        rec.extend(c.ratios.iter().skip(1).map(|s| opt(s[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
