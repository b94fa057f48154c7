//! Experiment harness and command-line interface for `kshrink`.
//!
//! Each experiment is a pure function of its [`config::ExperimentConfig`]:
//! runners draw every sample from seed-derived streams, collect long-format
//! rows into a [`table::ResultTable`] and the CLI writes `results.csv`,
//! `summary.csv`, `config.resolved` and optional SVG plots.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod runners;
pub mod svg;
pub mod table;
