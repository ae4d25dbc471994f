//! Training, certification and attack of small deep-Q agents on cart-pole.
//!
//! The crate trains agents with the CAMP objective (a TD-trained reference network
//! plus a primary network that imitates it while widening its top-1/runner-up
//! Q-gap), lower-bounds their expected return under ℓ2-bounded observation
//! perturbations with policy smoothing, and measures empirical robustness with
//! budget-carrying PGD/APGD attacks.

// `!(x >= 0.0)` is used on purpose: it rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod certify;
pub mod env;
pub mod error;
pub mod fmt;
pub mod losses;
pub mod nn;
pub mod par;
pub mod replay;
pub mod rng;
pub mod stats;
pub mod trainer;

pub use error::{Error, Result};
