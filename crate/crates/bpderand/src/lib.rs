//! File formats, experiment configuration and orchestration, and the
//! command-line front end for `bpderand-core`.

pub mod config;
pub mod experiment;
pub mod format;
pub mod montecarlo;

pub use bpderand_core as core;
