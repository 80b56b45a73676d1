//! Experiment harness: configuration, instance generation, suites and their
//! on-disk reports.

pub mod cli;
pub mod config;
pub mod instance;
pub mod output;
pub mod stats;
pub mod suites;

pub use config::{resolve, Config, Overrides, ResolvedConfig, RunSettings, Suite};
pub use suites::{run_suite, Check, Summary, SuiteRun};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// The suite ran but a record, check or the pass fraction failed.
    pub const FAILED: u8 = 1;
    /// The configuration could not be read or resolved.
    pub const CONFIG: u8 = 2;
}
