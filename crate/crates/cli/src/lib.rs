//! File formats, image IO, synthetic data, threading, and the experiment
//! drivers behind the `puzzle-cm` command line tool. The algorithms live in
//! `puzzle-cm-core`; this crate owns everything that touches the filesystem
//! or the clock.

pub mod bench;
pub mod cli;
pub mod error;
pub mod exec;
pub mod formats;
pub mod imgio;
pub mod render;
pub mod synth;
pub mod train_io;

pub use error::{CliError, CliResult};
pub use exec::Threads;
