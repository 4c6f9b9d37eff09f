//! Command-line front end for `sbbp-core`: configuration, CSV formats, the
//! synthetic factor-model experiment and the validation suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod validate;
