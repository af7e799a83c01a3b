//! Penalized and shrunken logistic regression, with a Monte Carlo harness for
//! studying how much the calibration of these models varies between samples.

pub mod datagen;
pub mod error;
pub mod firth;
pub mod glm;
pub mod harness;
pub mod metrics;
pub mod par;
pub mod penalized;
pub mod rng;
pub mod uniform;

pub use error::{Error, Result};
