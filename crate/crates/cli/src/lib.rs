//! Batch front end: parse a JSON run configuration, validate it, execute the
//! requested experiment, and serialize the results (CSV/JSON plus a run
//! manifest).

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{validate, Diagnostic, RunConfig};
pub use runner::{run, RunError, RunSummary};

/// Environment variable naming the default output directory.
pub const OUTDIR_ENV: &str = "SPINAHT_OUTDIR";
