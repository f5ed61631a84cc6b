//! Latent factor modeling of traffic trajectory data.
//!
//! A trajectory is a time-ordered sequence of (location, timestamp) pairs
//! recorded for one moving object. This crate turns raw passage records into
//! r-th-order location sequences with discretized time bins, fits a joint
//! mixture over sequences, objects, and time bins with a collapsed Gibbs
//! sampler, and evaluates the fitted factors through coherence scoring and
//! next-location prediction.
//!
//! The pipeline, end to end:
//!
//! * [`corpus`] — record parsing, gap-based segmentation, sequence/time-bin
//!   extraction, vocabularies, and the corpus file format.
//! * [`model`] — configuration, count tables, parameter estimation, the
//!   collapsed joint probability, a generative simulator, and model
//!   persistence.
//! * [`sampler`] — collapsed Gibbs inference and fold-in for held-out
//!   trajectories.
//! * [`eval`] — PMI coherence, factor inspection, next-location prediction,
//!   average precision, and cross-validated evaluation.
//!
//! All randomized paths take an explicit 64-bit seed and use ChaCha8, so
//! results are reproducible across runs and platforms.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod sampler;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
