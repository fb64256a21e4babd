//! Configuration, experiments, verification suite and command line for
//! `torsionfield-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod verify;
