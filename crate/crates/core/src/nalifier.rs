//! Property-profile preprocessor.
//!
//! Instances accumulate property judgments until closed. Closing compares
//! the instance against every previously closed one in a single pass over
//! dense signed profiles and, if the best score clears the threshold,
//! synthesizes `<{id} <-> {best}>. %s;c%`. Raw property judgments are
//! absorbed here and never forwarded to the reasoner.

use std::collections::HashMap;

use thiserror::Error;

use crate::encoder::{base_property, PropertyJudgment};
use crate::narsese::{NarseseError, Sentence, Statement, Term, TruthValue, DEFAULT_CONFIDENCE};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Marker for a property column an instance does not hold.
const ABSENT: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NalifierError {
    #[error("instance {0} is already closed")]
    InstanceClosed(String),
    #[error("unknown instance {0}")]
    UnknownInstance(String),
    #[error("instance {0} has no properties")]
    EmptyProfile(String),
    #[error(transparent)]
    Narsese(#[from] NarseseError),
}

/// One instance's properties. `signed[col]` holds the property's strength
/// as seen from the positive side (`f` if held, `1 - f` if its `NOT` form is
/// held), [`ABSENT`] otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    id: String,
    profile: HashMap<String, f64>,
    signed: Vec<f64>,
    closed: bool,
}

impl InstanceRecord {
    fn new(id: String) -> Self {
        Self {
            id,
            profile: HashMap::new(),
            signed: Vec::new(),
            closed: false,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Property name (possibly `NOT`-prefixed) to frequency.
    pub fn profile(&self) -> &HashMap<String, f64> {
        &self.profile
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    fn signed_at(&self, col: usize) -> f64 {
        self.signed.get(col).copied().unwrap_or(ABSENT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityResult {
    pub other: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CloseOutcome {
    pub best: Option<SimilarityResult>,
    /// Sentences to forward to the reasoner.
    pub synthesized: Vec<Sentence>,
}

/// `1 - mean |signed(a,p) - signed(b,p)|` over the union of base property
/// names, with absent properties read as 0.5.
pub fn similarity(a: &InstanceRecord, b: &InstanceRecord) -> Result<f64, NalifierError> {
    for r in [a, b] {
        if r.is_empty() {
            return Err(NalifierError::EmptyProfile(r.id.clone()));
        }
    }
    let cols = a.signed.len().max(b.signed.len());
    let mut total = 0.0;
    let mut union = 0usize;
    for col in 0..cols {
        let (x, y) = (a.signed_at(col), b.signed_at(col));
        if x == ABSENT && y == ABSENT {
            continue;
        }
        let x = if x == ABSENT { 0.5 } else { x };
        let y = if y == ABSENT { 0.5 } else { y };
        total += (x - y).abs();
        union += 1;
    }
    Ok((1.0 - total / union as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nalifier {
    threshold: f64,
    confidence: f64,
    columns: HashMap<String, usize>,
    records: Vec<InstanceRecord>,
    by_id: HashMap<String, usize>,
    /// Record indices in the order they were closed.
    closed_order: Vec<usize>,
}

impl Default for Nalifier {
    fn default() -> Self {
        Self::new(DEFAULT_THRESHOLD, DEFAULT_CONFIDENCE)
    }
}

impl Nalifier {
    pub fn new(threshold: f64, confidence: f64) -> Self {
        Self {
            threshold,
            confidence,
            columns: HashMap::new(),
            records: Vec::new(),
            by_id: HashMap::new(),
            closed_order: Vec::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn record(&self, id: &str) -> Option<&InstanceRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.records.iter()
    }

    /// Records one property. A later judgment for the same base property
    /// (either polarity) replaces the earlier one.
    pub fn observe(&mut self, j: &PropertyJudgment) -> Result<(), NalifierError> {
        let idx = match self.by_id.get(&j.instance) {
            Some(&i) => i,
            None => {
                self.records.push(InstanceRecord::new(j.instance.clone()));
                self.by_id.insert(j.instance.clone(), self.records.len() - 1);
                self.records.len() - 1
            }
        };
        if self.records[idx].closed {
            return Err(NalifierError::InstanceClosed(j.instance.clone()));
        }
        let (base, negated) = base_property(&j.property);
        let next_col = self.columns.len();
        let col = *self.columns.entry(base.to_owned()).or_insert(next_col);

        let rec = &mut self.records[idx];
        let counterpart = if negated {
            base.to_owned()
        } else {
            format!("{}{base}", crate::encoder::NOT_PREFIX)
        };
        rec.profile.remove(&counterpart);
        let f = j.truth.frequency();
        rec.profile.insert(j.property.clone(), f);
        if rec.signed.len() <= col {
            rec.signed.resize(col + 1, ABSENT);
        }
        rec.signed[col] = if negated { 1.0 - f } else { f };
        Ok(())
    }

    /// Closes `id` and matches it against every other closed instance.
    /// Ties go to the earliest closed instance.
    pub fn close_instance(&mut self, id: &str) -> Result<CloseOutcome, NalifierError> {
        let &idx = self
            .by_id
            .get(id)
            .ok_or_else(|| NalifierError::UnknownInstance(id.to_owned()))?;
        let rec = &self.records[idx];
        if rec.closed {
            return Err(NalifierError::InstanceClosed(id.to_owned()));
        }
        if rec.is_empty() {
            return Err(NalifierError::EmptyProfile(id.to_owned()));
        }

        let mut best: Option<(usize, f64)> = None;
        for &i in &self.closed_order {
            let s = similarity(rec, &self.records[i])?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        self.records[idx].closed = true;
        self.closed_order.push(idx);

        let mut outcome = CloseOutcome::default();
        if let Some((i, score)) = best.filter(|&(_, s)| s >= self.threshold) {
            let other = self.records[i].id.clone();
            let statement =
                Statement::similarity(Term::instance(id)?, Term::instance(other.clone())?)?;
            outcome.synthesized.push(Sentence::judgment(
                statement,
                TruthValue::new(score, self.confidence)?,
            ));
            outcome.best = Some(SimilarityResult { other, score });
        }
        Ok(outcome)
    }

    /// Observes all judgments of one instance and closes it.
    pub fn ingest_instance(
        &mut self,
        id: &str,
        judgments: &[PropertyJudgment],
    ) -> Result<CloseOutcome, NalifierError> {
        for j in judgments {
            self.observe(j)?;
        }
        self.close_instance(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode_instance, PropertyNaming};

    fn pj(instance: &str, property: &str, f: f64) -> PropertyJudgment {
        PropertyJudgment {
            instance: instance.into(),
            property: property.into(),
            truth: TruthValue::new(f, 0.9).unwrap(),
        }
    }

    #[test]
    fn observe_accumulates_and_overwrites() {
        let mut n = Nalifier::default();
        for k in 0..4 {
            n.observe(&pj("U1", &format!("dim{k}"), 0.7)).unwrap();
        }
        assert_eq!(n.record("U1").unwrap().len(), 4);
        n.observe(&pj("U1", "dim2", 0.9)).unwrap();
        let r = n.record("U1").unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.profile()["dim2"], 0.9);
        n.observe(&pj("U1", "NOTdim2", 0.8)).unwrap();
        let r = n.record("U1").unwrap();
        assert_eq!(r.len(), 4);
        assert!(!r.profile().contains_key("dim2"));
    }

    #[test]
    fn closed_instance_rejects_properties() {
        let mut n = Nalifier::default();
        n.observe(&pj("U1", "dim0", 0.7)).unwrap();
        let out = n.close_instance("U1").unwrap();
        assert_eq!(out, CloseOutcome::default());
        assert_eq!(
            n.observe(&pj("U1", "dim1", 0.7)),
            Err(NalifierError::InstanceClosed("U1".into()))
        );
        assert_eq!(
            n.close_instance("nobody"),
            Err(NalifierError::UnknownInstance("nobody".into()))
        );
    }

    #[test]
    fn identical_profiles_match_fully() {
        let mut n = Nalifier::default();
        let v = [0.1, 0.7, 0.5, 0.93];
        n.ingest_instance("A", &encode_instance("A", &v, PropertyNaming::ReducedDim).unwrap())
            .unwrap();
        let out = n
            .ingest_instance("B", &encode_instance("B", &v, PropertyNaming::ReducedDim).unwrap())
            .unwrap();
        assert_eq!(out.best, Some(SimilarityResult { other: "A".into(), score: 1.0 }));
        assert_eq!(crate::narsese::render(&out.synthesized[0]), "<{B} <-> {A}>. %1.0%");
    }

    #[test]
    fn mirror_profile_scores_zero() {
        let mut n = Nalifier::default();
        for k in 0..8 {
            n.observe(&pj("A", &format!("dim{k}"), 1.0)).unwrap();
            n.observe(&pj("B", &format!("NOTdim{k}"), 1.0)).unwrap();
        }
        let (a, b) = (n.record("A").unwrap(), n.record("B").unwrap());
        assert_eq!(similarity(a, b).unwrap(), 0.0);
        assert_eq!(similarity(a, a).unwrap(), 1.0);
        n.close_instance("A").unwrap();
        // below threshold: nothing synthesized
        let out = n.close_instance("B").unwrap();
        assert!(out.best.is_none() && out.synthesized.is_empty());
    }

    #[test]
    fn absent_properties_read_as_half() {
        let mut n = Nalifier::default();
        n.observe(&pj("A", "dim0", 1.0)).unwrap();
        n.observe(&pj("B", "dim1", 1.0)).unwrap();
        let s = similarity(n.record("A").unwrap(), n.record("B").unwrap()).unwrap();
        assert_eq!(s, 0.5);
    }
}
