//! Trial and sweep configuration, read from `key=value` files.

use std::path::PathBuf;

use thiserror::Error;

use crate::classifier::{EvalConfig, Reduction};
use crate::nal::DEFAULT_CAPACITY;
use crate::nalifier::DEFAULT_THRESHOLD;

use super::dataset::DESK_WORDS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// One experiment cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub classes: Vec<String>,
    /// Training examples per class.
    pub examples: usize,
    pub dims: usize,
    pub seed: u64,
    pub aikr: usize,
    pub reduction: Reduction,
    pub repeats: usize,
    pub shuffle_labels: bool,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.repeats == 0 {
            return Err(ConfigError::Invalid("repeats must be >= 1".into()));
        }
        if self.dims == 0 {
            return Err(ConfigError::Invalid("dims must be >= 1".into()));
        }
        if self.aikr == 0 {
            return Err(ConfigError::Invalid("aikr must be >= 1".into()));
        }
        Ok(())
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            examples: self.examples,
            dims: self.dims,
            seed: self.seed,
            repeats: self.repeats,
            aikr: self.aikr,
            reduction: self.reduction,
            shuffle_labels: self.shuffle_labels,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Cartesian grid of trial settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub data: Option<PathBuf>,
    /// `None` means all 35 words.
    pub classes: Option<Vec<String>>,
    pub dims: Vec<usize>,
    pub examples: Vec<usize>,
    pub aikr: Vec<usize>,
    pub reduction: Vec<Reduction>,
    pub seeds: Vec<u64>,
    pub repeats: usize,
    pub shuffle_labels: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            data: None,
            classes: None,
            dims: vec![4],
            examples: vec![2],
            aikr: vec![DEFAULT_CAPACITY],
            reduction: vec![Reduction::Projection],
            seeds: vec![7],
            repeats: 100,
            shuffle_labels: false,
        }
    }
}

impl SweepGrid {
    /// 10 classes, 30 repeats.
    pub fn desk() -> Self {
        Self {
            classes: Some(DESK_WORDS.iter().map(|w| w.to_string()).collect()),
            repeats: 30,
            ..Self::default()
        }
    }

    /// Cells in a fixed order: dims, then examples, aikr, reduction, seed.
    pub fn cells(&self, classes: &[String]) -> Vec<TrialConfig> {
        let mut out = Vec::new();
        for &dims in &self.dims {
            for &examples in &self.examples {
                for &aikr in &self.aikr {
                    for &reduction in &self.reduction {
                        for &seed in &self.seeds {
                            out.push(TrialConfig {
                                classes: classes.to_vec(),
                                examples,
                                dims,
                                seed,
                                aikr,
                                reduction,
                                repeats: self.repeats,
                                shuffle_labels: self.shuffle_labels,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Parses `key=value` lines. `#` starts a comment. List-valued keys
    /// accept comma lists and inclusive ranges (`2..10`).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut grid = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ConfigError::Line { line: n + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim().replace('-', "_"), value.trim());
            match key.as_str() {
                "data" => grid.data = Some(PathBuf::from(value)),
                "classes" => {
                    grid.classes = Some(value.split(',').map(|s| s.trim().to_owned()).collect())
                }
                "desk" => {
                    if parse_bool(value).map_err(err)? {
                        let desk = Self::desk();
                        grid.classes = desk.classes;
                        grid.repeats = desk.repeats;
                    }
                }
                "dims" => grid.dims = parse_list(value).map_err(err)?,
                "examples" | "k" => grid.examples = parse_list(value).map_err(err)?,
                "aikr" => grid.aikr = parse_list(value).map_err(err)?,
                "seed" | "seeds" => grid.seeds = parse_list(value).map_err(err)?,
                "reduction" => {
                    grid.reduction = value
                        .split(',')
                        .map(|s| s.trim().parse::<Reduction>())
                        .collect::<Result<_, _>>()
                        .map_err(err)?
                }
                "repeats" => {
                    grid.repeats = value
                        .parse()
                        .map_err(|_| err(format!("bad repeats {value:?}")))?
                }
                "shuffle_labels" => grid.shuffle_labels = parse_bool(value).map_err(err)?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if grid.repeats == 0 {
            return Err(ConfigError::Invalid("repeats must be >= 1".into()));
        }
        Ok(grid)
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("bad boolean {v:?}")),
    }
}

fn parse_list<T>(v: &str) -> Result<Vec<T>, String>
where
    T: std::str::FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim) {
        let bad = || format!("bad value {part:?}");
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            for x in a..=b {
                out.push(T::try_from(x).map_err(|_| bad())?);
            }
        } else {
            out.push(part.parse::<T>().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
