//! Few-shot spoken-word classification with a small non-axiomatic reasoner.

pub mod audio;
pub mod classifier;
pub mod dimreduce;
pub mod encoder;
pub mod harness;
pub mod nal;
pub mod nalifier;
pub mod narsese;
pub mod synthetic;
