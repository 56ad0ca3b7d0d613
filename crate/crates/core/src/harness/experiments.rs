//! Experiments 1 and 2: raw MEL properties fed straight to the reasoner,
//! and the synthetic three-instance test.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::audio::FeatureVector;
use crate::classifier::QUERY_ID;
use crate::encoder::{self, EncodeError, PropertyNaming};
use crate::nal::{Memory, NalError};
use crate::nalifier::{Nalifier, NalifierError};
use crate::narsese::{Sentence, DEFAULT_CONFIDENCE};
use crate::synthetic::{gen_triple, SyntheticError, SyntheticSpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Nalifier(#[from] NalifierError),
    #[error(transparent)]
    Nal(#[from] NalError),
}

pub const LABEL_A: &str = "alpha";
pub const LABEL_B: &str = "beta";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRun {
    pub seed: u64,
    /// Label given to `C`, if any.
    pub answer: Option<String>,
    pub sim_ca: f64,
    pub sim_cb: f64,
}

impl SyntheticRun {
    pub fn success(&self) -> bool {
        self.answer.as_deref() == Some(LABEL_A)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticReport {
    pub runs: Vec<SyntheticRun>,
    pub elapsed: Duration,
}

impl SyntheticReport {
    pub fn success_rate(&self) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().filter(|r| r.success()).count() as f64 / self.runs.len() as f64
    }
}

/// One triple: `A` and `B` are labelled, `C` is asked about both labels.
pub fn run_synthetic_once(spec: &SyntheticSpec) -> Result<SyntheticRun, ExperimentError> {
    let triple = gen_triple(spec)?;
    let mut nalifier = Nalifier::default();
    let mut memory = Memory::default();
    let naming = PropertyNaming::ReducedDim;

    for (id, v, label) in [("A", &triple.a, LABEL_A), ("B", &triple.b, LABEL_B)] {
        let js = encoder::encode_instance(id, v.values(), naming)?;
        for s in nalifier.ingest_instance(id, &js)?.synthesized {
            memory.assert(&s)?;
        }
        memory.assert(&encoder::label_judgment(id, label)?)?;
    }
    let js = encoder::encode_instance("C", triple.c.values(), naming)?;
    for s in nalifier.ingest_instance("C", &js)?.synthesized {
        memory.assert(&s)?;
    }
    let sim = |other: &str| {
        crate::nalifier::similarity(
            nalifier.record("C").expect("closed"),
            nalifier.record(other).expect("closed"),
        )
    };
    let (sim_ca, sim_cb) = (sim("A")?, sim("B")?);

    let labels = [LABEL_A, LABEL_B];
    let questions = labels
        .iter()
        .map(|l| encoder::label_question("C", l))
        .collect::<Result<Vec<_>, _>>()?;
    let answer = memory.answer_best(&questions)?.map(|(i, _)| labels[i].to_owned());
    Ok(SyntheticRun {
        seed: spec.seed,
        answer,
        sim_ca,
        sim_cb,
    })
}

/// Runs `repeats` triples with seeds `spec.seed, spec.seed + 1, ...`.
pub fn run_synthetic_experiment(spec: &SyntheticSpec, repeats: usize) -> Result<SyntheticReport, ExperimentError> {
    let start = Instant::now();
    let runs = (0..repeats as u64)
        .map(|r| {
            run_synthetic_once(&SyntheticSpec {
                seed: spec.seed.wrapping_add(r),
                ..*spec
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SyntheticReport {
        runs,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone)]
pub struct RawOutcome {
    /// Property judgments given to the reasoner.
    pub judgments: usize,
    pub beliefs: usize,
    /// Answer to `<{q} --> word>?` for each training word.
    pub answers: Vec<(String, Option<Sentence>)>,
}

/// Experiment 1: every MEL bin of every example becomes a property
/// judgment asserted to the reasoner directly, with no nalifier. The
/// reasoner has no rule relating shared properties to labels, so no
/// question about the query is answered.
pub fn run_raw_experiment(
    train: &[(&FeatureVector, &str)],
    query: &FeatureVector,
    aikr: usize,
) -> Result<RawOutcome, ExperimentError> {
    let mut memory = Memory::new(aikr)?;
    let mut count = 0;
    let mut words: Vec<&str> = Vec::new();
    for (i, (f, w)) in train.iter().enumerate() {
        let id = format!("t{i}");
        for j in encoder::encode_instance_with(&id, f.values(), PropertyNaming::RawMel, DEFAULT_CONFIDENCE)? {
            memory.assert(&j.to_sentence())?;
            count += 1;
        }
        memory.assert(&encoder::label_judgment(&id, w)?)?;
        if !words.contains(w) {
            words.push(w);
        }
    }
    for j in encoder::encode_instance(QUERY_ID, query.values(), PropertyNaming::RawMel)? {
        memory.assert(&j.to_sentence())?;
        count += 1;
    }
    memory.derive();
    let mut answers = Vec::new();
    for w in words {
        let q = encoder::label_question(QUERY_ID, w)?;
        let a = memory.best_of(&[q])?.map(|(_, j)| j.to_sentence());
        answers.push((w.to_owned(), a));
    }
    Ok(RawOutcome {
        judgments: count,
        beliefs: memory.len(),
        answers,
    })
}
