//! Gradient-based spectral outlier filtering around black-box learners.
//!
//! [`sever::run_sever`] alternates fitting a [`learners::Learner`] with
//! removing samples whose centered gradients project strongly onto the top
//! singular direction. Baseline defenses, attacks and a sweep harness sit
//! alongside.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attacks;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod losses;
pub mod seed;
pub mod sever;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use learners::{Learner, LearnerConfig, RidgeLearner, SubgradientLearner};
pub use losses::{LossKind, LossModel};
pub use sever::{run_sever, SeverConfig, SeverOutcome, SeverVariant};
