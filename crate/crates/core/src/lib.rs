//! Stick-breaking beta processes without `std`.
//!
//! - [`measure`]: round densities of the construction and the Lévy density.
//! - [`construct`]: draws of the process, Bernoulli processes and the IBP.
//! - [`truncation`]: L1 bounds on the error of truncating after `R` rounds.
//! - [`mcmc`]: posterior inference for the weights, rounds and hyperparameters.
//! - [`model`]: the beta-Bernoulli linear-Gaussian factor model.

#![no_std]
extern crate alloc;

pub mod construct;
pub mod diagnostics;
pub mod error;
pub mod mcmc;
pub mod measure;
pub mod model;
pub mod quad;
pub mod special;
pub mod truncation;

pub use error::{Error, Result};
pub use measure::{ProcessParams, RoundIndex};
pub use quad::QuadratureConfig;
