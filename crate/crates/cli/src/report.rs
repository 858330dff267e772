//! JSON run reports. Each carries the tool version and the SHA-256 of the canonical
//! config so a result can be traced to the exact settings that produced it.

use crate::checks::Outcome;
use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const TOOL: &str = "helegraph";
pub const REPORT_SUFFIX: &str = ".report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub pass: bool,
    pub summary: String,
    pub detail: Value,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig, outcome: &Outcome) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash(cfg),
            pass: outcome.pass,
            summary: outcome.line(),
            detail: outcome.detail.clone(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{}{REPORT_SUFFIX}", command.replace(' ', "_"))
    }
}

/// Writes the report and every table of `outcome` under `dir`, returning the paths written.
pub fn emit(dir: &Path, command: &str, cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = Report::new(command, cfg, outcome);
    let path = dir.join(Report::file_name(command));
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    let mut written = vec![path];
    for t in &outcome.tables {
        written.push(t.write(dir)?);
    }
    Ok(written)
}

/// All reports in `dir`, sorted by file name.
pub fn collect(dir: &Path) -> Result<Vec<Report>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(REPORT_SUFFIX)))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}
