//! Cross-gender venue preference analysis over location-based check-ins.
//!
//! The pipeline runs from raw check-in records to significance-tested
//! popularity differences and on to regional comparisons:
//!
//! 1. [`model`]: ingest check-ins (CSV or JSONL) and scalar index tables.
//! 2. [`filter`]: restrict to a region and apply the dataset thresholds.
//! 3. [`popularity`]: per-gender popularity and the signed difference `d_s`.
//! 4. [`null_model`]: randomization null model and acceptance range.
//! 5. [`preference`]: Gini coefficient and per-region preference vectors.
//! 6. [`cluster`]: spherical k-means over preference vectors.
//! 7. [`compare`]: Spearman rank comparison against GII/HDI-style indices.
//!
//! [`synth`] generates seeded synthetic data with planted effects, and [`cli`]
//! wires everything into the `gender-venues` command. Runnable examples for
//! each stage live in `examples/`.

pub mod cli;
pub mod cluster;
pub mod compare;
pub mod emit;
pub mod error;
pub mod filter;
pub mod model;
pub mod null_model;
pub mod popularity;
pub mod preference;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
