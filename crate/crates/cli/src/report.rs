//! Bit-stable CSV emission and the run manifest.
//!
//! Floating values are serialized with 17 significant digits so a
//! double-precision value round-trips losslessly; rows are written in
//! ascending key order, making output bytes a pure function of the
//! resolved configuration and seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lvrlab_core::experiments::{
    BlocktimeSweep, DelayRow, ExperimentReport, ReAddSweepRow,
};

use crate::CliError;

/// 17-significant-digit serialization of a double.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance record emitted next to every data file. Digests cover
/// the data files only, so re-running the same configuration
/// reproduces identical digests even though the timestamps differ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_echo: serde_json::Value,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub output_files: Vec<OutputFile>,
}

pub const RETENTION_CSV_HEADER: &str = "path_id,value_protected,value_unprotected,value_hodl,ratio_protected_unprotected,ratio_hodl_unprotected";

pub fn render_retention_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(RETENTION_CSV_HEADER);
    out.push('\n');
    for r in &report.per_path {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.path_id,
            format_float(r.value_protected),
            format_float(r.value_unprotected),
            format_float(r.value_hodl),
            format_float(r.ratio_protected_unprotected),
            format_float(r.ratio_hodl_unprotected),
        ));
    }
    out
}

pub fn render_readd_sweep_csv(rows: &[ReAddSweepRow]) -> String {
    let mut out = String::from("pct,mean_ratio,std_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(r.pct),
            format_float(r.mean_ratio),
            format_float(r.std_error),
        ));
    }
    out
}

pub fn render_blocktime_csv(sweep: &BlocktimeSweep) -> String {
    let mut out = String::from("block_time,arb_profit_per_day,std_error\n");
    for r in &sweep.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.block_time,
            format_float(r.arb_profit_per_day),
            format_float(r.std_error),
        ));
    }
    out
}

pub fn render_delay_csv(rows: &[DelayRow]) -> String {
    let mut out = String::from("delta_blocks,time_ev,std_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.delta_blocks,
            format_float(r.time_ev),
            format_float(r.std_error),
        ));
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes one data file under `out_dir`, returning its manifest entry.
pub fn write_output(out_dir: &Path, name: &str, contents: &str) -> Result<OutputFile, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let path: PathBuf = out_dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(OutputFile {
        path: name.to_string(),
        sha256: sha256_hex(contents.as_bytes()),
    })
}

pub fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_lossless() {
        for v in [1.0579612345678901f64, 3.125e-4, -0.1, 123456.789012345678] {
            let parsed: f64 = format_float(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn digest_matches_rehash() {
        let dir = tempfile::tempdir().unwrap();
        let entry = write_output(dir.path(), "x.csv", "a,b\n1,2\n").unwrap();
        let bytes = fs::read(dir.path().join("x.csv")).unwrap();
        assert_eq!(entry.sha256, sha256_hex(&bytes));
    }
}
