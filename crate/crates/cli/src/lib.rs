//! Scenario runner for the vnm-core simulator: JSON configs in, CSV/JSON
//! data files, a summary with closed-form checks and a manifest out.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::Path;

pub use config::{validate_config, ConfigError, ScenarioConfig, SCENARIOS};
pub use output::{Check, Manifest};
pub use scenarios::RunError;

/// Runs one scenario, writing every output under `out_dir`.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<Manifest, RunError> {
    let mut out = output::Outputs::new(out_dir)?;
    scenarios::run_scenario(config, &mut out)?;
    Ok(out.finish(config.name(), config)?)
}
