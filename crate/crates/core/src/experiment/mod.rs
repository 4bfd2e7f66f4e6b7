//! Config-driven experiments: runs with audits, sweeps, stability studies and
//! reports, each writing deterministic artifacts into an output directory.

mod config;
mod run;
mod study;

pub use config::{
    apply_env_overrides, load_config, parse_config, AuditName, AuditsConfig, GridConfig, InitialConfig, OutputConfig,
    Preset, RunConfig, SchemeConfig, ENV_PREFIX,
};
pub use run::{run, verify, AuditOutcome, RunSummary, Timings};
pub use study::{report, stability, sweep, SweepDimension, SweepLevel, SweepTable};

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::spectral::snapshot::write_atomic;

/// Version tag written into every summary.
pub const FORMAT_VERSION: &str = "1";

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    write_atomic(path, &bytes)
}
