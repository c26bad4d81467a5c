//! Experiment plumbing: generators, preprocessing, CSV I/O, config and sweeps.

pub mod config;
pub mod csvio;
pub mod defense;
pub mod generators;
pub mod preprocess;
pub mod sweep;
