//! Minimal non-axiomatic reasoner: a capacity-bounded judgment memory with
//! revision, one-hop analogy across similarity links, and expectation-based
//! answering.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::narsese::{Copula, Sentence, Statement, Term, TruthValue};

/// Default AIKR limit.
pub const DEFAULT_CAPACITY: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NalError {
    #[error("expected a judgment, got a question")]
    NotAJudgment,
    #[error("expected a question, got a judgment")]
    NotAQuestion,
    #[error("capacity must be at least 1")]
    ZeroCapacity,
}

/// Evidence ids, sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Stamp(Vec<u64>);

impl Stamp {
    pub fn single(id: u64) -> Self {
        Stamp(vec![id])
    }

    pub fn ids(&self) -> &[u64] {
        &self.0
    }

    pub fn oldest(&self) -> u64 {
        self.0[0]
    }

    pub fn overlaps(&self, other: &Stamp) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn union(&self, other: &Stamp) -> Stamp {
        let mut ids = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let next = match (self.0.get(i), other.0.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            ids.push(next);
        }
        Stamp(ids)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Judgment {
    pub statement: Statement,
    pub truth: TruthValue,
    pub stamp: Stamp,
}

impl Judgment {
    /// Eviction priority: the truth expectation.
    pub fn priority(&self) -> f64 {
        self.truth.expectation()
    }

    pub fn to_sentence(&self) -> Sentence {
        Sentence::judgment(self.statement.clone(), self.truth)
    }
}

/// Revision of two truths over disjoint evidence.
pub fn revise(a: TruthValue, b: TruthValue) -> TruthValue {
    let w1 = a.confidence() / (1.0 - a.confidence());
    let w2 = b.confidence() / (1.0 - b.confidence());
    let w = w1 + w2;
    TruthValue::derived(
        (w1 * a.frequency() + w2 * b.frequency()) / w,
        w / (w + 1.0),
    )
}

/// From `<A --> L>` and `<C <-> A>` to `<C --> L>`.
pub fn analogy(inheritance: TruthValue, similarity: TruthValue) -> TruthValue {
    TruthValue::derived(
        inheritance.frequency() * similarity.frequency(),
        inheritance.confidence() * similarity.confidence() * similarity.frequency(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Memory {
    beliefs: BTreeMap<Statement, Judgment>,
    capacity: usize,
    next_stamp: u64,
}

impl Default for Memory {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY).expect("nonzero default capacity")
    }
}

impl Memory {
    pub fn new(capacity: usize) -> Result<Self, NalError> {
        if capacity == 0 {
            return Err(NalError::ZeroCapacity);
        }
        Ok(Self {
            beliefs: BTreeMap::new(),
            capacity,
            next_stamp: 1,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn get(&self, statement: &Statement) -> Option<&Judgment> {
        self.beliefs.get(&statement.canonical())
    }

    pub fn judgments(&self) -> impl Iterator<Item = &Judgment> {
        self.beliefs.values()
    }

    /// Adds an input judgment under a fresh evidence id and returns that id.
    pub fn assert(&mut self, sentence: &Sentence) -> Result<u64, NalError> {
        let truth = sentence.truth().ok_or(NalError::NotAJudgment)?;
        let id = self.next_stamp;
        self.next_stamp += 1;
        self.insert(Judgment {
            statement: sentence.statement.clone(),
            truth,
            stamp: Stamp::single(id),
        });
        Ok(id)
    }

    /// Stores a judgment. An existing belief on the same statement is
    /// revised when the evidence is disjoint; otherwise the more confident of
    /// the two is kept.
    pub fn insert(&mut self, mut judgment: Judgment) {
        judgment.statement = judgment.statement.canonical();
        match self.beliefs.get_mut(&judgment.statement) {
            Some(existing) => {
                if !existing.stamp.overlaps(&judgment.stamp) {
                    existing.truth = revise(existing.truth, judgment.truth);
                    existing.stamp = existing.stamp.union(&judgment.stamp);
                } else if judgment.truth.confidence() > existing.truth.confidence() {
                    *existing = judgment;
                }
            }
            None => {
                self.beliefs.insert(judgment.statement.clone(), judgment);
            }
        }
        self.evict_to(self.capacity);
    }

    /// Sets the AIKR limit and evicts until it holds.
    pub fn enforce_capacity(&mut self, limit: usize) -> Result<(), NalError> {
        if limit == 0 {
            return Err(NalError::ZeroCapacity);
        }
        self.capacity = limit;
        self.evict_to(limit);
        Ok(())
    }

    fn evict_to(&mut self, limit: usize) {
        while self.beliefs.len() > limit {
            let victim = self
                .beliefs
                .values()
                .min_by(|a, b| {
                    a.priority()
                        .total_cmp(&b.priority())
                        .then(a.stamp.oldest().cmp(&b.stamp.oldest()))
                })
                .map(|j| j.statement.clone());
            match victim {
                Some(key) => {
                    self.beliefs.remove(&key);
                }
                None => break,
            }
        }
    }

    /// One pass of analogy over a snapshot of memory: every similarity
    /// `<X <-> Y>` combined with every `<Y --> P>` (either side) yields
    /// `<X --> P>`. Pairs with overlapping evidence or zero-confidence
    /// conclusions are skipped. Conclusions are inserted and returned.
    pub fn derive(&mut self) -> Vec<Judgment> {
        let mut by_subject: BTreeMap<&Term, Vec<&Judgment>> = BTreeMap::new();
        let mut links = Vec::new();
        for j in self.beliefs.values() {
            match j.statement.copula {
                Copula::Inheritance => by_subject.entry(&j.statement.subject).or_default().push(j),
                Copula::Similarity => links.push(j),
            }
        }

        let mut conclusions = Vec::new();
        for link in links {
            let (a, b) = (&link.statement.subject, &link.statement.predicate);
            for (from, to) in [(a, b), (b, a)] {
                let Some(premises) = by_subject.get(from) else {
                    continue;
                };
                for premise in premises {
                    if premise.stamp.overlaps(&link.stamp) || &premise.statement.predicate == to {
                        continue;
                    }
                    let truth = analogy(premise.truth, link.truth);
                    if truth.confidence() <= 0.0 {
                        continue;
                    }
                    conclusions.push(Judgment {
                        statement: Statement::inheritance(to.clone(), premise.statement.predicate.clone()),
                        truth,
                        stamp: premise.stamp.union(&link.stamp),
                    });
                }
            }
        }
        for c in &conclusions {
            self.insert(c.clone());
        }
        conclusions
    }

    /// Derives, then returns the belief matching the question, if any.
    pub fn answer(&mut self, question: &Sentence) -> Result<Option<Judgment>, NalError> {
        if !question.is_question() {
            return Err(NalError::NotAQuestion);
        }
        self.derive();
        Ok(self.get(&question.statement).cloned())
    }

    /// Derives once, then picks the question whose answer has the highest
    /// expectation. Ties go to the answer with the oldest evidence.
    pub fn answer_best(
        &mut self,
        questions: &[Sentence],
    ) -> Result<Option<(usize, Judgment)>, NalError> {
        if questions.iter().any(|q| !q.is_question()) {
            return Err(NalError::NotAQuestion);
        }
        self.derive();
        self.best_of(questions)
    }

    /// Like [`Memory::answer_best`] but over current beliefs only.
    pub fn best_of(&self, questions: &[Sentence]) -> Result<Option<(usize, Judgment)>, NalError> {
        if questions.iter().any(|q| !q.is_question()) {
            return Err(NalError::NotAQuestion);
        }
        let best = questions
            .iter()
            .enumerate()
            .filter_map(|(i, q)| self.get(&q.statement).map(|j| (i, j)))
            .max_by(|(_, a), (_, b)| {
                a.truth
                    .expectation()
                    .total_cmp(&b.truth.expectation())
                    .then(b.stamp.oldest().cmp(&a.stamp.oldest()))
            })
            .map(|(i, j)| (i, j.clone()));
        Ok(best)
    }
}
