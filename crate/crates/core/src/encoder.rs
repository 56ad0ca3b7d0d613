//! Strengths to property judgments, and label judgments/questions.

use thiserror::Error;

use crate::audio::N_FRAMES;
use crate::narsese::{NarseseError, Sentence, Statement, Term, TruthValue, DEFAULT_CONFIDENCE};

/// Prefix marking the absence of a property.
pub const NOT_PREFIX: &str = "NOT";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("strength {value} at index {index} outside [0,1]")]
    StrengthOutOfRange { index: usize, value: f64 },
    #[error("empty label")]
    EmptyLabel,
    #[error(transparent)]
    Narsese(#[from] NarseseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyNaming {
    /// `mel<bin>x<frame>` over a bin-major 80x100 grid.
    RawMel,
    /// `dim<k>` over a reduced vector.
    ReducedDim,
}

impl PropertyNaming {
    pub fn name(self, index: usize) -> String {
        match self {
            PropertyNaming::RawMel => format!("mel{}x{}", index / N_FRAMES, index % N_FRAMES),
            PropertyNaming::ReducedDim => format!("dim{index}"),
        }
    }
}

/// `<{instance} --> [property]>. %f;c%` with `f >= 0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyJudgment {
    pub instance: String,
    pub property: String,
    pub truth: TruthValue,
}

impl PropertyJudgment {
    pub fn is_negated(&self) -> bool {
        self.property.starts_with(NOT_PREFIX)
    }

    /// Property name without the `NOT` marker.
    pub fn base_name(&self) -> &str {
        base_property(&self.property).0
    }

    pub fn to_sentence(&self) -> Sentence {
        Sentence::judgment(
            Statement::inheritance(
                Term::Instance(self.instance.clone()),
                Term::Property(self.property.clone()),
            ),
            self.truth,
        )
    }

    /// Recovers a property judgment from its sentence form.
    pub fn from_sentence(s: &Sentence) -> Option<Self> {
        let truth = s.truth()?;
        match (&s.statement.subject, s.statement.copula, &s.statement.predicate) {
            (Term::Instance(i), crate::narsese::Copula::Inheritance, Term::Property(p)) => Some(Self {
                instance: i.clone(),
                property: p.clone(),
                truth,
            }),
            _ => None,
        }
    }
}

/// Splits a property name into its base name and whether it is negated.
pub fn base_property(name: &str) -> (&str, bool) {
    match name.strip_prefix(NOT_PREFIX) {
        Some(base) if !base.is_empty() => (base, true),
        _ => (name, false),
    }
}

/// One judgment per value, in index order. Values below 0.5 become the
/// negated property with frequency `1 - v`; 0.5 itself stays positive.
pub fn encode_instance(
    id: &str,
    strengths: &[f64],
    naming: PropertyNaming,
) -> Result<Vec<PropertyJudgment>, EncodeError> {
    encode_instance_with(id, strengths, naming, DEFAULT_CONFIDENCE)
}

pub fn encode_instance_with(
    id: &str,
    strengths: &[f64],
    naming: PropertyNaming,
    confidence: f64,
) -> Result<Vec<PropertyJudgment>, EncodeError> {
    Term::instance(id)?;
    strengths
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(0.0..=1.0).contains(&value) {
                return Err(EncodeError::StrengthOutOfRange { index, value });
            }
            let (property, frequency) = if value >= 0.5 {
                (naming.name(index), value)
            } else {
                (format!("{NOT_PREFIX}{}", naming.name(index)), 1.0 - value)
            };
            Ok(PropertyJudgment {
                instance: id.to_owned(),
                property,
                truth: TruthValue::new(frequency, confidence)?,
            })
        })
        .collect()
}

/// `<{id} --> label>.` at full frequency and default confidence.
pub fn label_judgment(id: &str, label: &str) -> Result<Sentence, EncodeError> {
    Ok(Sentence::judgment(
        label_statement(id, label)?,
        TruthValue::new(1.0, DEFAULT_CONFIDENCE)?,
    ))
}

/// `<{id} --> label>?`
pub fn label_question(id: &str, label: &str) -> Result<Sentence, EncodeError> {
    Ok(Sentence::question(label_statement(id, label)?))
}

fn label_statement(id: &str, label: &str) -> Result<Statement, EncodeError> {
    if label.is_empty() {
        return Err(EncodeError::EmptyLabel);
    }
    Ok(Statement::inheritance(Term::instance(id)?, Term::atom(label)?))
}
