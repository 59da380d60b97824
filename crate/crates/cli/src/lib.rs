//! Command-line front end for `scmn-core`.
//!
//! Every invocation is described by a [`RunManifest`]; flags build one, and
//! `scmn run <manifest.json>` replays a saved one.

pub mod args;
mod error;
pub mod manifest;
pub mod run;
pub mod svg;
pub mod table;
pub mod verify;

pub use error::{CliError, Result};
pub use manifest::{Command, Format, RunManifest};
pub use run::{run, Outcome};

/// Environment variable capping worker threads (0 or unset: one per core).
pub const THREADS_ENV: &str = "SCMN_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`].
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
    // A second call in one process keeps the existing pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
