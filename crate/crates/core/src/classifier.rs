//! Few-shot train/predict orchestration and repeated-trial evaluation.
//!
//! A model is fitted on `K` labelled utterances per class. Every training
//! instance is reduced, calibrated, encoded as property judgments and passed
//! through the nalifier; the similarity links it synthesizes go to the
//! reasoner together with one `<{t_i} --> word>.` judgment per example.
//! Prediction runs the query through copies of that state, so a fitted
//! model never changes.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::audio::{FeatureVector, Frontend, PcmBuffer};
use crate::dimreduce::{self, Calibration, ReduceError, Reducer, StrengthVector};
use crate::encoder::{self, EncodeError, PropertyNaming};
use crate::nal::{Judgment, Memory, NalError, DEFAULT_CAPACITY};
use crate::nalifier::{Nalifier, NalifierError, DEFAULT_THRESHOLD};
use crate::narsese::{self, NarseseError, TruthValue, DEFAULT_CONFIDENCE};

/// The minimum number of examples that lets similarity be exploited.
pub const MIN_EXAMPLES: usize = 2;

pub const QUERY_ID: &str = "q";

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("class {class} has {got} examples, expected {expected}")]
    ClassImbalance {
        class: String,
        got: usize,
        expected: usize,
    },
    #[error("{0} examples per class; at least {MIN_EXAMPLES} are needed")]
    TooFewExamples(usize),
    #[error("class {class} has {got} utterances, {needed} needed")]
    InsufficientData {
        class: String,
        got: usize,
        needed: usize,
    },
    #[error("feature source: {0}")]
    Source(String),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Nalifier(#[from] NalifierError),
    #[error(transparent)]
    Nal(#[from] NalError),
    #[error(transparent)]
    Narsese(#[from] NarseseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reduction {
    Projection,
    Subsample,
}

impl Reduction {
    pub fn as_str(self) -> &'static str {
        match self {
            Reduction::Projection => "projection",
            Reduction::Subsample => "subsample",
        }
    }
}

impl std::str::FromStr for Reduction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "projection" => Ok(Reduction::Projection),
            "subsample" => Ok(Reduction::Subsample),
            other => Err(format!("unknown reduction {other:?} (projection|subsample)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub dims: usize,
    pub seed: u64,
    pub aikr: usize,
    pub reduction: Reduction,
    pub threshold: f64,
    pub confidence: f64,
    /// Keep the Narsese lines fed to the reasoner for dumping.
    pub trace: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dims: 4,
            seed: 7,
            aikr: DEFAULT_CAPACITY,
            reduction: Reduction::Projection,
            threshold: DEFAULT_THRESHOLD,
            confidence: DEFAULT_CONFIDENCE,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Label { word: String, truth: TruthValue },
    Unknown,
}

impl Prediction {
    pub fn word(&self) -> Option<&str> {
        match self {
            Prediction::Label { word, .. } => Some(word),
            Prediction::Unknown => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PredictionDetail {
    pub prediction: Prediction,
    /// Narsese fed to the reasoner for the query, when tracing.
    pub trace: Vec<String>,
    pub derivations: Vec<Judgment>,
}

#[derive(Clone)]
pub struct FewShotModel {
    cfg: ModelConfig,
    frontend: Frontend,
    reducer: Reducer,
    calibration: Calibration,
    nalifier: Nalifier,
    memory: Memory,
    classes: Vec<String>,
    examples_per_class: usize,
    trace: Vec<String>,
}

fn reducer_for(cfg: &ModelConfig) -> Result<Reducer, ReduceError> {
    match cfg.reduction {
        Reduction::Projection => Reducer::projection(cfg.seed, cfg.dims),
        Reduction::Subsample => Reducer::subsample(cfg.seed, cfg.dims),
    }
}

/// Feeds one instance through the nalifier and forwards what it emits.
fn ingest(
    nalifier: &mut Nalifier,
    memory: &mut Memory,
    id: &str,
    strengths: &StrengthVector,
    cfg: &ModelConfig,
    trace: Option<&mut Vec<String>>,
) -> Result<(), ClassifierError> {
    let judgments =
        encoder::encode_instance_with(id, strengths.values(), PropertyNaming::ReducedDim, cfg.confidence)?;
    let outcome = nalifier.ingest_instance(id, &judgments)?;
    for s in &outcome.synthesized {
        memory.assert(s)?;
    }
    if let Some(trace) = trace {
        let fmt = narsese::Format {
            default_confidence: cfg.confidence,
        };
        trace.extend(judgments.iter().map(|j| format!("#suppressed {}", fmt.render(&j.to_sentence()))));
        trace.extend(outcome.synthesized.iter().map(|s| format!("#synth {}", fmt.render(s))));
    }
    Ok(())
}

impl FewShotModel {
    /// Fits on raw utterances.
    pub fn fit(examples: &[(PcmBuffer, String)], cfg: ModelConfig) -> Result<Self, ClassifierError> {
        let frontend = Frontend::default();
        let features: Vec<(FeatureVector, String)> = examples
            .iter()
            .map(|(pcm, w)| (frontend.features(pcm.clone()), w.clone()))
            .collect();
        let refs: Vec<(&FeatureVector, &str)> = features.iter().map(|(f, w)| (f, w.as_str())).collect();
        Self::fit_features(&refs, cfg)
    }

    /// Fits on precomputed feature vectors. Classes are ordered by first
    /// appearance; every class must have the same number of examples.
    pub fn fit_features(
        examples: &[(&FeatureVector, &str)],
        cfg: ModelConfig,
    ) -> Result<Self, ClassifierError> {
        let mut counts: Vec<(String, usize)> = Vec::new();
        for (_, w) in examples {
            match counts.iter_mut().find(|(c, _)| c == w) {
                Some((_, n)) => *n += 1,
                None => counts.push(((*w).to_owned(), 1)),
            }
        }
        let k = counts.first().map_or(0, |(_, n)| *n);
        if k < MIN_EXAMPLES {
            return Err(ClassifierError::TooFewExamples(k));
        }
        if let Some((class, got)) = counts.iter().find(|(_, n)| *n != k) {
            return Err(ClassifierError::ClassImbalance {
                class: class.clone(),
                got: *got,
                expected: k,
            });
        }

        let reducer = reducer_for(&cfg)?;
        let reduced = examples
            .iter()
            .map(|(f, _)| reducer.reduce(f))
            .collect::<Result<Vec<_>, _>>()?;
        let calibration = dimreduce::calibrate(&reduced)?;

        let mut nalifier = Nalifier::new(cfg.threshold, cfg.confidence);
        let mut memory = Memory::new(cfg.aikr)?;
        let mut trace = Vec::new();
        for (i, ((_, word), r)) in examples.iter().zip(&reduced).enumerate() {
            let id = format!("t{i}");
            let strengths = dimreduce::to_unit_interval(r, &calibration)?;
            ingest(
                &mut nalifier,
                &mut memory,
                &id,
                &strengths,
                &cfg,
                cfg.trace.then_some(&mut trace),
            )?;
            let label = encoder::label_judgment(&id, word)?;
            memory.assert(&label)?;
            if cfg.trace {
                trace.push(narsese::Format::default().render_bare(&label));
            }
        }

        Ok(Self {
            cfg,
            frontend: Frontend::default(),
            reducer,
            calibration,
            nalifier,
            memory,
            classes: counts.into_iter().map(|(c, _)| c).collect(),
            examples_per_class: k,
            trace,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn examples_per_class(&self) -> usize {
        self.examples_per_class
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn nalifier(&self) -> &Nalifier {
        &self.nalifier
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn reducer(&self) -> &Reducer {
        &self.reducer
    }

    /// Training-time Narsese, populated when `cfg.trace` is set.
    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    pub fn predict(&self, utterance: &PcmBuffer) -> Result<Prediction, ClassifierError> {
        let features = self.frontend.features(utterance.clone());
        self.predict_features(&features)
    }

    pub fn predict_features(&self, features: &FeatureVector) -> Result<Prediction, ClassifierError> {
        Ok(self.predict_detailed(features)?.prediction)
    }

    /// Asks `<{q} --> w>?` for every class and returns the answer with the
    /// highest expectation, or `Unknown` when no class has one.
    pub fn predict_detailed(&self, features: &FeatureVector) -> Result<PredictionDetail, ClassifierError> {
        let reduced = self.reducer.reduce(features)?;
        let strengths = dimreduce::to_unit_interval(&reduced, &self.calibration)?;
        let mut nalifier = self.nalifier.clone();
        let mut memory = self.memory.clone();
        let mut trace = Vec::new();
        ingest(
            &mut nalifier,
            &mut memory,
            QUERY_ID,
            &strengths,
            &self.cfg,
            self.cfg.trace.then_some(&mut trace),
        )?;
        let questions = self
            .classes
            .iter()
            .map(|w| encoder::label_question(QUERY_ID, w))
            .collect::<Result<Vec<_>, _>>()?;
        if self.cfg.trace {
            trace.extend(questions.iter().map(narsese::render));
        }
        let derived = memory.derive();
        let best = memory.best_of(&questions)?;
        let derivations = if self.cfg.trace { derived } else { Vec::new() };
        let prediction = match best {
            Some((i, j)) => Prediction::Label {
                word: self.classes[i].clone(),
                truth: j.truth,
            },
            None => Prediction::Unknown,
        };
        Ok(PredictionDetail {
            prediction,
            trace,
            derivations,
        })
    }
}

/// Labelled utterances grouped by class, addressed by `(class, item)`.
pub trait FeatureSource: Sync {
    fn classes(&self) -> &[String];
    fn len(&self, class: usize) -> usize;
    fn features(&self, class: usize, item: usize) -> Result<Arc<FeatureVector>, ClassifierError>;
}

/// Feature vectors held in memory.
#[derive(Debug, Clone, Default)]
pub struct InMemorySource {
    classes: Vec<String>,
    items: Vec<Vec<Arc<FeatureVector>>>,
}

impl InMemorySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, class: &str, features: FeatureVector) {
        let idx = match self.classes.iter().position(|c| c == class) {
            Some(i) => i,
            None => {
                self.classes.push(class.to_owned());
                self.items.push(Vec::new());
                self.classes.len() - 1
            }
        };
        self.items[idx].push(Arc::new(features));
    }
}

impl FeatureSource for InMemorySource {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn len(&self, class: usize) -> usize {
        self.items[class].len()
    }

    fn features(&self, class: usize, item: usize) -> Result<Arc<FeatureVector>, ClassifierError> {
        self.items
            .get(class)
            .and_then(|c| c.get(item))
            .cloned()
            .ok_or_else(|| ClassifierError::Source(format!("no item {item} in class {class}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Training examples per class (one more is drawn as the query).
    pub examples: usize,
    pub dims: usize,
    pub seed: u64,
    pub repeats: usize,
    pub aikr: usize,
    pub reduction: Reduction,
    pub shuffle_labels: bool,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            examples: 2,
            dims: 4,
            seed: 7,
            repeats: 100,
            aikr: DEFAULT_CAPACITY,
            reduction: Reduction::Projection,
            shuffle_labels: false,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<String>,
    /// Correct queries per class.
    pub correct: Vec<usize>,
    /// Queries per class (one per repeat).
    pub trials: Vec<usize>,
    /// `confusion[true][predicted]`; the last column counts `Unknown`.
    pub confusion: Vec<Vec<usize>>,
    pub sec_per_inference: f64,
}

impl EvalReport {
    pub fn total_trials(&self) -> usize {
        self.trials.iter().sum()
    }

    pub fn total_correct(&self) -> usize {
        self.correct.iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total_trials();
        if n == 0 {
            0.0
        } else {
            self.total_correct() as f64 / n as f64
        }
    }

    pub fn class_accuracy(&self, class: usize) -> f64 {
        if self.trials[class] == 0 {
            0.0
        } else {
            self.correct[class] as f64 / self.trials[class] as f64
        }
    }
}

/// SplitMix64 step, used to derive independent per-repeat seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One repeat of [`evaluate`].
#[derive(Debug, Clone)]
pub struct RepeatOutcome {
    /// Predicted class index per true class; `None` for Unknown.
    pub predicted: Vec<Option<usize>>,
    pub seconds: f64,
    /// Narsese fed to the reasoner (training, then each query), if traced.
    pub trace: Vec<String>,
    pub derivations: Vec<Judgment>,
}

/// Runs repeat `repeat` of `cfg` on its own; `trace` keeps the Narsese.
pub fn run_repeat(
    source: &dyn FeatureSource,
    cfg: &EvalConfig,
    repeat: usize,
    trace: bool,
) -> Result<RepeatOutcome, ClassifierError> {
    let classes = source.classes();
    let repeat_seed = mix_seed(cfg.seed, repeat as u64);
    let mut rng: ChaCha8Rng = dimreduce::rng(repeat_seed);

    let mut train: Vec<(Arc<FeatureVector>, usize)> = Vec::with_capacity(classes.len() * cfg.examples);
    let mut queries = Vec::with_capacity(classes.len());
    for class in 0..classes.len() {
        let picks = index::sample(&mut rng, source.len(class), cfg.examples + 1).into_vec();
        for &item in &picks[..cfg.examples] {
            train.push((source.features(class, item)?, class));
        }
        queries.push(source.features(class, picks[cfg.examples])?);
    }
    let mut labels: Vec<usize> = train.iter().map(|(_, c)| *c).collect();
    if cfg.shuffle_labels {
        labels.shuffle(&mut rng);
    }
    // Class order in the model follows first appearance; keep it aligned
    // with the source by sorting examples by assigned label.
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    let examples: Vec<(&FeatureVector, &str)> = order
        .iter()
        .map(|&i| (train[i].0.as_ref(), classes[labels[i]].as_str()))
        .collect();

    let model_cfg = ModelConfig {
        dims: cfg.dims,
        seed: mix_seed(repeat_seed, u64::MAX),
        aikr: cfg.aikr,
        reduction: cfg.reduction,
        threshold: cfg.threshold,
        confidence: DEFAULT_CONFIDENCE,
        trace,
    };
    let model = FewShotModel::fit_features(&examples, model_cfg)?;
    let mut out = RepeatOutcome {
        predicted: Vec::with_capacity(queries.len()),
        seconds: 0.0,
        trace: model.trace().to_vec(),
        derivations: Vec::new(),
    };
    let start = Instant::now();
    for q in &queries {
        let detail = model.predict_detailed(q)?;
        let word = detail.prediction.word();
        out.predicted.push(word.and_then(|w| classes.iter().position(|c| c == w)));
        if trace {
            out.trace.extend(detail.trace);
            out.derivations.extend(detail.derivations);
        }
    }
    out.seconds = start.elapsed().as_secs_f64() / queries.len().max(1) as f64;
    Ok(out)
}

/// Repeated few-shot trials. Each repeat draws a fresh matrix and `K + 1`
/// utterances per class without replacement, fits on `K`, and queries the
/// remaining one for every class. Repeats run in parallel and are merged
/// in order; the result depends only on the source and `cfg`.
pub fn evaluate(source: &dyn FeatureSource, cfg: &EvalConfig) -> Result<EvalReport, ClassifierError> {
    if cfg.examples < MIN_EXAMPLES {
        return Err(ClassifierError::TooFewExamples(cfg.examples));
    }
    let classes = source.classes().to_vec();
    for (i, class) in classes.iter().enumerate() {
        if source.len(i) < cfg.examples + 1 {
            return Err(ClassifierError::InsufficientData {
                class: class.clone(),
                got: source.len(i),
                needed: cfg.examples + 1,
            });
        }
    }
    let outcomes = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| run_repeat(source, cfg, r, false))
        .collect::<Result<Vec<_>, _>>()?;

    let n = classes.len();
    let mut report = EvalReport {
        correct: vec![0; n],
        trials: vec![0; n],
        confusion: vec![vec![0; n + 1]; n],
        sec_per_inference: 0.0,
        classes,
    };
    for o in &outcomes {
        for (truth, pred) in o.predicted.iter().enumerate() {
            report.trials[truth] += 1;
            report.confusion[truth][pred.unwrap_or(n)] += 1;
            if *pred == Some(truth) {
                report.correct[truth] += 1;
            }
        }
        report.sec_per_inference += o.seconds;
    }
    report.sec_per_inference /= outcomes.len().max(1) as f64;
    Ok(report)
}
