//! On-disk layout of a campaign directory:
//!
//! ```text
//! campaign.json          config, config hash, status, run bookkeeping
//! run_<i>.json           full RunRecord of a completed run
//! run_<i>.csv            generation,best_fitness_m,extension_m
//! summary.csv            generation,median,q25,q75
//! final_sample.csv       run_index,best_fitness_m
//! checkpoints/run_<i>.ckpt
//! ```
//!
//! Checkpoints are `sha256:<hex of payload>\n` followed by the JSON payload.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::run::{RunRecord, RunState};
use super::{Campaign, ExperimentError};
use crate::stats::boxplot_data;

pub const CAMPAIGN_FILE: &str = "campaign.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FINAL_SAMPLE_FILE: &str = "final_sample.csv";
pub const EXPORT_JSON_FILE: &str = "campaign_export.json";
pub const BOXPLOT_FILE: &str = "boxplot.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CampaignStatus {
    Running,
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedRun {
    pub run_index: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignMeta {
    pub label: String,
    pub config_hash: String,
    pub status: CampaignStatus,
    pub population_size: usize,
    pub generations: u32,
    pub runs: u32,
    pub completed_runs: Vec<u32>,
    pub failed_runs: Vec<FailedRun>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(ExperimentError::Config(format!("unknown export format {other:?}"))),
        }
    }
}

pub fn run_json_path(dir: &Path, run_index: u32) -> PathBuf {
    dir.join(format!("run_{run_index}.json"))
}

pub fn run_csv_path(dir: &Path, run_index: u32) -> PathBuf {
    dir.join(format!("run_{run_index}.csv"))
}

pub fn checkpoint_path(dir: &Path, run_index: u32) -> PathBuf {
    dir.join("checkpoints").join(format!("run_{run_index}.ckpt"))
}

/// Write via a temporary sibling and rename, so readers never observe a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ExperimentError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| ExperimentError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| ExperimentError::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>, ExperimentError> {
    fs::read(path).map_err(|e| ExperimentError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ExperimentError> {
    Ok(serde_json::from_slice(&read(path)?)?)
}

pub fn write_checkpoint(path: &Path, state: &RunState) -> Result<(), ExperimentError> {
    let payload = serde_json::to_vec(state)?;
    let mut bytes = format!("sha256:{}\n", hex::encode(Sha256::digest(&payload))).into_bytes();
    bytes.extend_from_slice(&payload);
    write_atomic(path, &bytes)
}

/// Load a checkpoint, verifying its content hash and that it belongs to a
/// config with hash `config_hash`.
pub fn read_checkpoint(path: &Path, config_hash: &str) -> Result<RunState, ExperimentError> {
    let bytes = read(path)?;
    let corrupt = || ExperimentError::CorruptCheckpoint(path.to_path_buf());
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(corrupt)?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| corrupt())?;
    let expected = header.strip_prefix("sha256:").ok_or_else(corrupt)?;
    let payload = &bytes[newline + 1..];
    if hex::encode(Sha256::digest(payload)) != expected {
        return Err(corrupt());
    }
    let state: RunState = serde_json::from_slice(payload).map_err(|_| corrupt())?;
    if state.config_hash != config_hash {
        return Err(ExperimentError::ConfigMismatch {
            expected: config_hash.to_string(),
            found: state.config_hash,
        });
    }
    Ok(state)
}

pub fn run_csv(record: &RunRecord) -> String {
    let mut s = String::from("generation,best_fitness_m,extension_m\n");
    for (g, (f, e)) in record.best_fitness.iter().zip(&record.extension).enumerate() {
        writeln!(s, "{g},{f},{e}").unwrap();
    }
    s
}

pub fn write_run(dir: &Path, record: &RunRecord) -> Result<(), ExperimentError> {
    write_atomic(&run_csv_path(dir, record.run_index), run_csv(record).as_bytes())?;
    write_json(&run_json_path(dir, record.run_index), record)
}

pub fn summary_csv(campaign: &Campaign) -> String {
    let mut s = String::from("generation,median,q25,q75\n");
    for (g, m) in campaign.summary.iter().enumerate() {
        writeln!(s, "{g},{},{},{}", m.median, m.q25, m.q75).unwrap();
    }
    s
}

pub fn final_sample_csv(campaign: &Campaign) -> String {
    let mut s = String::from("run_index,best_fitness_m\n");
    for (r, f) in campaign.records.iter().zip(&campaign.final_sample) {
        writeln!(s, "{},{f}", r.run_index).unwrap();
    }
    s
}

pub fn boxplot_csv(campaign: &Campaign) -> Result<String, ExperimentError> {
    let b = boxplot_data(&campaign.final_sample)?;
    let outliers: Vec<String> = b.outliers.iter().map(f64::to_string).collect();
    Ok(format!(
        "experiment,median,q25,q75,whisker_lo,whisker_hi,outliers\n{},{},{},{},{},{},{}\n",
        campaign.config.label(),
        b.median,
        b.q25,
        b.q75,
        b.whisker_lo,
        b.whisker_hi,
        outliers.join(";")
    ))
}

/// Write the derived per-generation and final-generation tables. Nothing is
/// written for a campaign without completed runs.
pub fn write_derived(dir: &Path, campaign: &Campaign) -> Result<(), ExperimentError> {
    if campaign.records.is_empty() {
        return Ok(());
    }
    write_atomic(&dir.join(SUMMARY_FILE), summary_csv(campaign).as_bytes())?;
    write_atomic(&dir.join(FINAL_SAMPLE_FILE), final_sample_csv(campaign).as_bytes())
}

pub fn read_meta(dir: &Path) -> Result<CampaignMeta, ExperimentError> {
    let meta: CampaignMeta = read_json(&dir.join(CAMPAIGN_FILE))?;
    let actual = meta.config.hash();
    if actual != meta.config_hash {
        return Err(ExperimentError::ConfigMismatch {
            expected: meta.config_hash,
            found: actual,
        });
    }
    Ok(meta)
}

/// Load a campaign from its directory: the stored config plus every run
/// whose record file exists.
pub fn load_campaign(dir: &Path) -> Result<Campaign, ExperimentError> {
    let meta = read_meta(dir)?;
    let mut records = Vec::new();
    for i in 0..meta.config.runs {
        let path = run_json_path(dir, i);
        if path.exists() {
            records.push(read_json::<RunRecord>(&path)?);
        }
    }
    let completed: Vec<u32> = records.iter().map(|r| r.run_index).collect();
    let failed = meta
        .failed_runs
        .into_iter()
        .filter(|f| !completed.contains(&f.run_index))
        .collect();
    Campaign::new(meta.config, records, failed)
}

pub fn export(campaign: &Campaign, dir: &Path, format: ExportFormat) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let mut written = Vec::new();
    match format {
        ExportFormat::Csv => {
            for r in &campaign.records {
                let path = run_csv_path(dir, r.run_index);
                write_atomic(&path, run_csv(r).as_bytes())?;
                written.push(path);
            }
            if !campaign.records.is_empty() {
                for (name, text) in [
                    (SUMMARY_FILE, summary_csv(campaign)),
                    (FINAL_SAMPLE_FILE, final_sample_csv(campaign)),
                    (BOXPLOT_FILE, boxplot_csv(campaign)?),
                ] {
                    let path = dir.join(name);
                    write_atomic(&path, text.as_bytes())?;
                    written.push(path);
                }
            }
        }
        ExportFormat::Json => {
            let path = dir.join(EXPORT_JSON_FILE);
            write_json(&path, campaign)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn import_json(path: &Path) -> Result<Campaign, ExperimentError> {
    let campaign: Campaign = read_json(path)?;
    campaign.check_consistent()?;
    Ok(campaign)
}
