//! Online multi-source transfer learning for non-stationary data streams.
//!
//! The crate is organised bottom-up:
//!
//! - [`learners`]: Hoeffding trees and the online bagging / boosting ensembles
//!   that learn one concept each.
//! - [`drift`]: DDM and HDDM_A detectors over a binary error stream.
//! - [`mapping`]: decayed class centroids and the scaled-rotation map that
//!   projects target examples into the geometry of another concept.
//! - [`marline`]: the multi-stream model with concept pools, sub-classifier
//!   weighting and the weighted vote.
//! - [`streams`]: synthetic Gaussian drift generators, CSV ingestion and the
//!   interleaving schedule.
//! - [`eval`]: prequential and sliding-window evaluation, multi-run
//!   experiments and grid search.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod error;
pub mod eval;
pub mod learners;
pub mod mapping;
pub mod marline;
pub mod rng;
pub mod streams;

pub use error::{Error, Result};
pub use learners::{Example, Label, LabelDistribution};
