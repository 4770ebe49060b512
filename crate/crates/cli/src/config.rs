//! JSON experiment-configuration ingestion.
//!
//! The schema is the flat key set of `ExperimentConfig`; omitted
//! optional keys take the documented defaults, unknown keys are
//! rejected naming the offending key, and every value is
//! range-checked.

use std::fs;
use std::path::Path;

use lvrlab_core::experiments::ExperimentConfig;

use crate::CliError;

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let config: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
