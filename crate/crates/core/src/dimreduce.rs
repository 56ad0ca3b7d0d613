//! Seeded dense random projection, per-trial calibration into `[0,1]`
//! strengths, and the random-subsampling baseline.
//!
//! All randomness comes from ChaCha8 seeded with a 64-bit value via
//! `SeedableRng::seed_from_u64`; matrices are never stored, only regenerated.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::audio::{FeatureVector, FEATURE_LEN};

/// Name of the generator behind every seeded draw, echoed in run output.
pub const PRNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error("output dimension {dim} outside 1..={max}")]
    InvalidDim { dim: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("calibration needs at least one vector")]
    Empty,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major `in_dim x out_dim` matrix with i.i.d. `N(0, 1/out_dim)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    seed: u64,
    in_dim: usize,
    out_dim: usize,
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn generate(seed: u64, in_dim: usize, out_dim: usize) -> Result<Self, ReduceError> {
        if out_dim == 0 || out_dim > in_dim {
            return Err(ReduceError::InvalidDim {
                dim: out_dim,
                max: in_dim,
            });
        }
        let scale = 1.0 / (out_dim as f64).sqrt();
        let mut rng = rng(seed);
        let entries = (0..in_dim * out_dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
            .collect();
        Ok(Self {
            seed,
            in_dim,
            out_dim,
            entries,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.out_dim..(i + 1) * self.out_dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `x^T M` for a raw slice.
    pub fn apply(&self, x: &[f64]) -> Result<ReducedVector, ReduceError> {
        if x.len() != self.in_dim {
            return Err(ReduceError::DimMismatch {
                expected: self.in_dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.out_dim];
        for (xi, row) in x.iter().zip(self.entries.chunks_exact(self.out_dim)) {
            if *xi == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(row) {
                *o += xi * m;
            }
        }
        Ok(ReducedVector(out))
    }
}

/// Projection for 8000-value MEL features.
pub fn generate_projection(seed: u64, out_dim: usize) -> Result<ProjectionMatrix, ReduceError> {
    ProjectionMatrix::generate(seed, FEATURE_LEN, out_dim)
}

pub fn project(vec: &FeatureVector, m: &ProjectionMatrix) -> Result<ReducedVector, ReduceError> {
    m.apply(vec.values())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedVector(pub Vec<f64>);

impl ReducedVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-dimension `(min, max)` over a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    bounds: Vec<(f64, f64)>,
}

impl Calibration {
    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }
}

pub fn calibrate<'a, I>(vectors: I) -> Result<Calibration, ReduceError>
where
    I: IntoIterator<Item = &'a ReducedVector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(ReduceError::Empty)?;
    let mut bounds: Vec<(f64, f64)> = first.0.iter().map(|&v| (v, v)).collect();
    for v in iter {
        if v.len() != bounds.len() {
            return Err(ReduceError::DimMismatch {
                expected: bounds.len(),
                got: v.len(),
            });
        }
        for ((lo, hi), &x) in bounds.iter_mut().zip(&v.0) {
            *lo = lo.min(x);
            *hi = hi.max(x);
        }
    }
    Ok(Calibration { bounds })
}

/// Strengths in `[0,1]`, one per reduced dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthVector(Vec<f64>);

impl StrengthVector {
    /// Returns `None` if any value lies outside `[0,1]`.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
            .then_some(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Min-max maps each dimension, clamping values outside the calibrated
/// range. Degenerate dimensions (`max == min`) map to 0.5.
pub fn to_unit_interval(r: &ReducedVector, c: &Calibration) -> Result<StrengthVector, ReduceError> {
    if r.len() != c.dims() {
        return Err(ReduceError::DimMismatch {
            expected: c.dims(),
            got: r.len(),
        });
    }
    let values = r
        .0
        .iter()
        .zip(&c.bounds)
        .map(|(&x, &(lo, hi))| {
            if hi > lo {
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            }
        })
        .collect();
    Ok(StrengthVector(values))
}

/// The `out_dim` distinct feature indices chosen by `seed`.
pub fn subsample_indices(in_dim: usize, out_dim: usize, seed: u64) -> Result<Vec<usize>, ReduceError> {
    if out_dim == 0 || out_dim > in_dim {
        return Err(ReduceError::InvalidDim {
            dim: out_dim,
            max: in_dim,
        });
    }
    Ok(index::sample(&mut rng(seed), in_dim, out_dim).into_vec())
}

/// Copies `out_dim` randomly chosen feature values.
pub fn subsample(vec: &FeatureVector, out_dim: usize, seed: u64) -> Result<ReducedVector, ReduceError> {
    let idx = subsample_indices(vec.len(), out_dim, seed)?;
    Ok(ReducedVector(idx.iter().map(|&i| vec.values()[i]).collect()))
}

/// How a trial turns 8000 features into `D` reals. Built once per trial so
/// that every utterance in it sees the same matrix or index set.
#[derive(Debug, Clone, PartialEq)]
pub enum Reducer {
    Projection(ProjectionMatrix),
    Subsample(Vec<usize>),
}

impl Reducer {
    pub fn projection(seed: u64, out_dim: usize) -> Result<Self, ReduceError> {
        generate_projection(seed, out_dim).map(Reducer::Projection)
    }

    pub fn subsample(seed: u64, out_dim: usize) -> Result<Self, ReduceError> {
        subsample_indices(FEATURE_LEN, out_dim, seed).map(Reducer::Subsample)
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Reducer::Projection(m) => m.out_dim(),
            Reducer::Subsample(idx) => idx.len(),
        }
    }

    pub fn reduce(&self, vec: &FeatureVector) -> Result<ReducedVector, ReduceError> {
        match self {
            Reducer::Projection(m) => project(vec, m),
            Reducer::Subsample(idx) => {
                let values = vec.values();
                idx.iter()
                    .map(|&i| {
                        values.get(i).copied().ok_or(ReduceError::DimMismatch {
                            expected: FEATURE_LEN,
                            got: values.len(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(ReducedVector)
            }
        }
    }
}
