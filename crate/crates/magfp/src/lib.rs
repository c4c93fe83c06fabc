//! File formats, parallel matching, benchmarking and the command-line
//! driver for magnetic fingerprint positioning. The algorithms themselves
//! live in `magfp_core`, re-exported here as [`core`].

pub use magfp_core as core;

pub mod bench;
pub mod cli;
pub mod config;
pub mod formats;
pub mod parallel;
pub mod reports;
