//! Parser and printer for the Narsese subset used by the pipeline.
//!
//! Supported sentences have the shape
//!
//! ```text
//! <subject copula predicate> punct truth?
//! ```
//!
//! where a term is an atom (`one`), an instance (`{U1}`) or a property
//! (`[mel16x9]`), the copula is `-->` (inheritance) or `<->` (similarity),
//! the punctuation is `.` (judgment) or `?` (question), and judgments may
//! carry a `%f%` or `%f;c%` truth annotation.

use std::fmt;

use thiserror::Error;

/// Confidence given to judgments whose annotation only states a frequency.
pub const DEFAULT_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NarseseError {
    #[error("syntax error at byte {position}: expected {expected}")]
    Syntax {
        position: usize,
        expected: &'static str,
    },
    #[error("truth value out of range: f={frequency}, c={confidence}")]
    TruthOutOfRange { frequency: f64, confidence: f64 },
    #[error("similarity between a term and itself: {0}")]
    ReflexiveSimilarity(String),
    #[error("invalid term name {0:?}")]
    InvalidName(String),
}

/// Frequency/confidence pair.
///
/// Values built through [`TruthValue::new`] satisfy `f in [0,1]` and
/// `c in (0,1)`. Inference rules may produce `c == 0` (no evidence) through
/// [`TruthValue::derived`]; such values are never stored by the reasoner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthValue {
    frequency: f64,
    confidence: f64,
}

impl TruthValue {
    pub fn new(frequency: f64, confidence: f64) -> Result<Self, NarseseError> {
        let f_ok = (0.0..=1.0).contains(&frequency);
        let c_ok = confidence > 0.0 && confidence < 1.0;
        if f_ok && c_ok {
            Ok(Self {
                frequency,
                confidence,
            })
        } else {
            Err(NarseseError::TruthOutOfRange {
                frequency,
                confidence,
            })
        }
    }

    /// Result of a truth function. Clamps into `[0,1] x [0,1)`.
    pub fn derived(frequency: f64, confidence: f64) -> Self {
        Self {
            frequency: frequency.clamp(0.0, 1.0),
            confidence: confidence.clamp(0.0, 1.0 - f64::EPSILON),
        }
    }

    /// `%f%` with the default confidence.
    pub fn with_default_confidence(frequency: f64) -> Result<Self, NarseseError> {
        Self::new(frequency, DEFAULT_CONFIDENCE)
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    /// Truth expectation `c * (f - 0.5) + 0.5`.
    pub fn expectation(&self) -> f64 {
        self.confidence * (self.frequency - 0.5) + 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(String),
    Instance(String),
    Property(String),
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Result<Self, NarseseError> {
        Self::checked(name.into(), Term::Atom)
    }

    pub fn instance(name: impl Into<String>) -> Result<Self, NarseseError> {
        Self::checked(name.into(), Term::Instance)
    }

    pub fn property(name: impl Into<String>) -> Result<Self, NarseseError> {
        Self::checked(name.into(), Term::Property)
    }

    fn checked(name: String, build: fn(String) -> Term) -> Result<Self, NarseseError> {
        if valid_name(&name) {
            Ok(build(name))
        } else {
            Err(NarseseError::InvalidName(name))
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Atom(n) | Term::Instance(n) | Term::Property(n) => n,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(n) => write!(f, "{n}"),
            Term::Instance(n) => write!(f, "{{{n}}}"),
            Term::Property(n) => write!(f, "[{n}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Copula {
    Inheritance,
    Similarity,
}

impl Copula {
    pub fn symbol(self) -> &'static str {
        match self {
            Copula::Inheritance => "-->",
            Copula::Similarity => "<->",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Statement {
    pub subject: Term,
    pub copula: Copula,
    pub predicate: Term,
}

impl Statement {
    pub fn inheritance(subject: Term, predicate: Term) -> Self {
        Self {
            subject,
            copula: Copula::Inheritance,
            predicate,
        }
    }

    pub fn similarity(subject: Term, predicate: Term) -> Result<Self, NarseseError> {
        if subject == predicate {
            return Err(NarseseError::ReflexiveSimilarity(subject.to_string()));
        }
        Ok(Self {
            subject,
            copula: Copula::Similarity,
            predicate,
        })
    }

    /// Similarity is symmetric; this orders its two sides so that
    /// `<a <-> b>` and `<b <-> a>` share one key. Inheritance is unchanged.
    pub fn canonical(&self) -> Statement {
        match self.copula {
            Copula::Similarity if self.predicate < self.subject => Statement {
                subject: self.predicate.clone(),
                copula: Copula::Similarity,
                predicate: self.subject.clone(),
            },
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{} {} {}>",
            self.subject,
            self.copula.symbol(),
            self.predicate
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Punctuation {
    Judgment(TruthValue),
    Question,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub statement: Statement,
    pub punctuation: Punctuation,
}

impl Sentence {
    pub fn judgment(statement: Statement, truth: TruthValue) -> Self {
        Self {
            statement,
            punctuation: Punctuation::Judgment(truth),
        }
    }

    pub fn question(statement: Statement) -> Self {
        Self {
            statement,
            punctuation: Punctuation::Question,
        }
    }

    pub fn truth(&self) -> Option<TruthValue> {
        match self.punctuation {
            Punctuation::Judgment(t) => Some(t),
            Punctuation::Question => None,
        }
    }

    pub fn is_question(&self) -> bool {
        matches!(self.punctuation, Punctuation::Question)
    }
}

/// Text format settings shared by [`Format::parse`] and [`Format::render`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Format {
    pub default_confidence: f64,
}

impl Default for Format {
    fn default() -> Self {
        Self {
            default_confidence: DEFAULT_CONFIDENCE,
        }
    }
}

/// Parses one sentence with the default format.
pub fn parse(text: &str) -> Result<Sentence, NarseseError> {
    Format::default().parse(text)
}

/// Renders one sentence in canonical form with the default format.
pub fn render(sentence: &Sentence) -> String {
    Format::default().render(sentence)
}

impl Format {
    pub fn parse(&self, text: &str) -> Result<Sentence, NarseseError> {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            default_confidence: self.default_confidence,
        }
        .sentence()
    }

    pub fn render(&self, sentence: &Sentence) -> String {
        match sentence.punctuation {
            Punctuation::Question => format!("{}?", sentence.statement),
            Punctuation::Judgment(t) => {
                if t.confidence == self.default_confidence {
                    format!("{}. %{:?}%", sentence.statement, t.frequency)
                } else {
                    format!(
                        "{}. %{:?};{:?}%",
                        sentence.statement, t.frequency, t.confidence
                    )
                }
            }
        }
    }

    /// Renders without any truth annotation, the form used for label
    /// assertions (`f=1`, default confidence).
    pub fn render_bare(&self, sentence: &Sentence) -> String {
        match sentence.punctuation {
            Punctuation::Question => format!("{}?", sentence.statement),
            Punctuation::Judgment(_) => format!("{}.", sentence.statement),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    default_confidence: f64,
}

impl Parser<'_> {
    fn err<T>(&self, expected: &'static str) -> Result<T, NarseseError> {
        Err(NarseseError::Syntax {
            position: self.pos,
            expected,
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8, expected: &'static str) -> Result<(), NarseseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(expected)
        }
    }

    fn sentence(mut self) -> Result<Sentence, NarseseError> {
        self.skip_ws();
        let statement = self.statement()?;
        self.skip_ws();
        let sentence = match self.peek() {
            Some(b'.') => {
                self.pos += 1;
                self.skip_ws();
                let truth = if self.peek() == Some(b'%') {
                    self.truth()?
                } else {
                    TruthValue::new(1.0, self.default_confidence)?
                };
                Sentence::judgment(statement, truth)
            }
            Some(b'?') => {
                self.pos += 1;
                Sentence::question(statement)
            }
            _ => return self.err("'.' or '?'"),
        };
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err("end of input");
        }
        Ok(sentence)
    }

    fn statement(&mut self) -> Result<Statement, NarseseError> {
        self.eat(b'<', "'<'")?;
        self.skip_ws();
        let subject = self.term()?;
        self.skip_ws();
        let copula = self.copula()?;
        self.skip_ws();
        let predicate = self.term()?;
        self.skip_ws();
        self.eat(b'>', "'>'")?;
        match copula {
            Copula::Inheritance => Ok(Statement::inheritance(subject, predicate)),
            Copula::Similarity => Statement::similarity(subject, predicate),
        }
    }

    fn copula(&mut self) -> Result<Copula, NarseseError> {
        let rest = &self.src[self.pos..];
        if rest.starts_with(b"-->") {
            self.pos += 3;
            Ok(Copula::Inheritance)
        } else if rest.starts_with(b"<->") {
            self.pos += 3;
            Ok(Copula::Similarity)
        } else {
            self.err("'-->' or '<->'")
        }
    }

    fn term(&mut self) -> Result<Term, NarseseError> {
        match self.peek() {
            Some(b'{') => {
                self.pos += 1;
                let name = self.name()?;
                self.eat(b'}', "'}'")?;
                Ok(Term::Instance(name))
            }
            Some(b'[') => {
                self.pos += 1;
                let name = self.name()?;
                self.eat(b']', "']'")?;
                Ok(Term::Property(name))
            }
            _ => Ok(Term::Atom(self.name()?)),
        }
    }

    fn name(&mut self) -> Result<String, NarseseError> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return self.err("term name");
        }
        // only ASCII bytes were consumed
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64, NarseseError> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err("number")
            }
        }
    }

    fn truth(&mut self) -> Result<TruthValue, NarseseError> {
        self.eat(b'%', "'%'")?;
        self.skip_ws();
        let frequency = self.number()?;
        self.skip_ws();
        let confidence = if self.peek() == Some(b';') {
            self.pos += 1;
            self.skip_ws();
            let c = self.number()?;
            self.skip_ws();
            c
        } else {
            self.default_confidence
        };
        self.eat(b'%', "'%'")?;
        TruthValue::new(frequency, confidence)
    }
}
