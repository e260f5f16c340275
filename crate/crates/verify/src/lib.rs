//! Scene files, verification suites, reports and the `verify` command line.

pub mod cli;
pub mod report;
pub mod scene_file;
pub mod suites;

pub use tractor_core;
