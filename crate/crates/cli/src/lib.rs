//! Experiment harness around the simulation core: configuration files,
//! the sweep pipeline, result serialization, and codeword files.

pub mod codeword;
pub mod config;
pub mod harness;
