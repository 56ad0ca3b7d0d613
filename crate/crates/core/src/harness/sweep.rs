use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use thiserror::Error;

use crate::classifier::{evaluate, ClassifierError, EvalReport, FeatureSource, Reduction};

use super::config::{ConfigError, SweepGrid, TrialConfig};

pub const CSV_HEADER: [&str; 10] = [
    "dims",
    "K",
    "aikr",
    "reduction",
    "seed",
    "repeats",
    "word",
    "accuracy",
    "overall",
    "sec_per_inference",
];

/// Value of the `word` column on the per-cell summary row.
pub const ALL_WORDS: &str = "ALL";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv header mismatch: {0:?}")]
    Header(Vec<String>),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub config: TrialConfig,
    pub report: EvalReport,
    /// Seconds since the Unix epoch when the trial finished.
    pub timestamp: u64,
}

impl TrialResult {
    pub fn overall(&self) -> f64 {
        self.report.accuracy()
    }

    pub fn per_word(&self) -> Vec<(String, f64)> {
        (0..self.report.classes.len())
            .map(|i| (self.report.classes[i].clone(), self.report.class_accuracy(i)))
            .collect()
    }

    /// One row per word, then an [`ALL_WORDS`] row.
    pub fn rows(&self) -> Vec<CsvRow> {
        let c = &self.config;
        let overall = self.overall();
        let row = |word: String, accuracy: f64| CsvRow {
            dims: c.dims,
            k: c.examples,
            aikr: c.aikr,
            reduction: c.reduction,
            seed: c.seed,
            repeats: c.repeats,
            word,
            accuracy,
            overall,
            sec_per_inference: self.report.sec_per_inference,
        };
        let mut out: Vec<CsvRow> = self.per_word().into_iter().map(|(w, a)| row(w, a)).collect();
        out.push(row(ALL_WORDS.to_owned(), overall));
        out
    }
}

pub fn run_trial(source: &dyn FeatureSource, cfg: &TrialConfig) -> Result<TrialResult, SweepError> {
    cfg.validate()?;
    let report = evaluate(source, &cfg.eval_config())?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(TrialResult {
        config: cfg.clone(),
        report,
        timestamp,
    })
}

/// Evaluates every grid cell on the thread pool; results come back in
/// grid order.
pub fn run_sweep(source: &dyn FeatureSource, grid: &SweepGrid) -> Result<Vec<TrialResult>, SweepError> {
    let classes = source.classes().to_vec();
    grid.cells(&classes)
        .par_iter()
        .map(|cell| {
            let r = run_trial(source, cell)?;
            log::info!(
                "dims={} K={} aikr={} reduction={} seed={} overall={:.4}",
                cell.dims,
                cell.examples,
                cell.aikr,
                cell.reduction.as_str(),
                cell.seed,
                r.overall()
            );
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub dims: usize,
    pub k: usize,
    pub aikr: usize,
    pub reduction: Reduction,
    pub seed: u64,
    pub repeats: usize,
    pub word: String,
    pub accuracy: f64,
    pub overall: f64,
    pub sec_per_inference: f64,
}

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.dims.to_string(),
            r.k.to_string(),
            r.aikr.to_string(),
            r.reduction.as_str().to_owned(),
            r.seed.to_string(),
            r.repeats.to_string(),
            r.word.clone(),
            format!("{:?}", r.accuracy),
            format!("{:?}", r.overall),
            format!("{:?}", r.sec_per_inference),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, SweepError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(SweepError::Header(header));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| SweepError::Header(vec![format!("row {}: bad {}", rows.len() + 1, CSV_HEADER[i])]);
        macro_rules! num {
            ($i:expr) => {
                field($i).parse().map_err(|_| bad($i))?
            };
        }
        rows.push(CsvRow {
            dims: num!(0),
            k: num!(1),
            aikr: num!(2),
            reduction: field(3).parse().map_err(|_| bad(3))?,
            seed: num!(4),
            repeats: num!(5),
            word: field(6).to_owned(),
            accuracy: num!(7),
            overall: num!(8),
            sec_per_inference: num!(9),
        });
    }
    Ok(rows)
}

/// Whitespace-separated `x overall` pairs for gnuplot, one per summary row.
/// `x` is the column named by `axis` (`dims`, `K` or `aikr`).
pub fn write_plot_data<W: Write>(mut out: W, rows: &[CsvRow], axis: &str) -> std::io::Result<()> {
    writeln!(out, "# {axis} overall")?;
    for r in rows.iter().filter(|r| r.word == ALL_WORDS) {
        let x = match axis {
            "K" => r.k,
            "aikr" => r.aikr,
            _ => r.dims,
        };
        writeln!(out, "{x} {}", r.overall)?;
    }
    Ok(())
}
