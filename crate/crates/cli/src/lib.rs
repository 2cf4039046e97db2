//! Experiment harness for the `fsbayes` toolkit: config parsing, model
//! assembly, stage orchestration and artifact emission. The binary in this
//! crate is a thin dispatcher over these modules.

pub mod config;
pub mod error;
pub mod io;
pub mod model;
pub mod recipes;
pub mod runner;
