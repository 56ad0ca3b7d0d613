//! Synthetic instance triples: two labelled instances `A`, `B` and a query
//! `C` built as a noisy copy of `A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dimreduce::StrengthVector;

/// Resampling budget for meeting the separation constraint.
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n_props: usize,
    /// Minimum mean absolute difference between `A` and `B`.
    pub separation: f64,
    /// Standard deviation of the Gaussian perturbation giving `C`.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n_props: usize, noise: f64, seed: u64) -> Self {
        Self {
            n_props,
            separation: 0.2,
            noise,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SyntheticError> {
        if self.n_props == 0 {
            return Err(SyntheticError::InvalidSpec("n_props must be >= 1".into()));
        }
        if !(self.separation > 0.0 && self.separation <= 1.0) {
            return Err(SyntheticError::InvalidSpec(format!(
                "separation {} outside (0,1]",
                self.separation
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(SyntheticError::InvalidSpec(format!("noise {} must be >= 0", self.noise)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub a: StrengthVector,
    pub b: StrengthVector,
    pub c: StrengthVector,
}

pub fn gen_triple(spec: &SyntheticSpec) -> Result<Triple, SyntheticError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_props;
    for _ in 0..MAX_ATTEMPTS {
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let dist = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
        if dist < spec.separation {
            continue;
        }
        let c = if spec.noise > 0.0 {
            let normal = Normal::new(0.0, spec.noise).expect("finite positive std");
            a.iter()
                .map(|&x| (x + normal.sample(&mut rng)).clamp(0.0, 1.0))
                .collect()
        } else {
            a.clone()
        };
        let wrap = |v: Vec<f64>| StrengthVector::new(v).expect("values in [0,1]");
        return Ok(Triple {
            a: wrap(a),
            b: wrap(b),
            c: wrap(c),
        });
    }
    Err(SyntheticError::InvalidSpec(format!(
        "separation {} not reached for n={n} after {MAX_ATTEMPTS} draws",
        spec.separation
    )))
}
