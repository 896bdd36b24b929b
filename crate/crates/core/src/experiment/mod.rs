//! Campaigns: many independent evolutionary runs of one configuration,
//! persisted to a directory so they can be resumed, summarised and compared.

mod campaign;
mod config;
mod report;
mod run;
pub mod store;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use campaign::{default_runner, resume_campaign, run_campaign, run_campaign_with};
pub use config::ExperimentConfig;
pub use report::{
    campaign_stats, compare_campaigns, relative_report, write_compare, write_relative, CampaignStats, CompareReport,
    RelativeEntry, RelativeReport,
};
pub use run::{
    advance, derive_seed, evaluate_population, generation_rng, run_from, run_seed, run_single, ChampionEntry,
    RunRecord, RunState, STREAM_INIT, STREAM_REPRODUCTION,
};
pub use store::{load_campaign, CampaignMeta, CampaignStatus, ExportFormat, FailedRun};

use crate::morphology::MorphologyError;
use crate::neat::NeatError;
use crate::rollout::RolloutError;
use crate::stats::{per_generation, StatsError, Summary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid config file")]
    Toml(#[from] toml::de::Error),
    #[error("{}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint {} is corrupt", .0.display())]
    CorruptCheckpoint(PathBuf),
    #[error("config hash mismatch: expected {expected}, found {found}")]
    ConfigMismatch { expected: String, found: String },
    #[error("campaign {label} is incomplete: {completed} of {expected} runs finished")]
    Incomplete {
        label: String,
        completed: usize,
        expected: usize,
    },
    #[error("{} already holds a campaign; use resume", .0.display())]
    AlreadyExists(PathBuf),
    #[error("run {run_index} failed: {message}")]
    RunFailed { run_index: u32, message: String },
    #[error(transparent)]
    Neat(#[from] NeatError),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
}

impl ExperimentError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// The error and all of its sources, joined with `": "`.
pub fn error_chain(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut source = e.source();
    while let Some(cause) = source {
        s.push_str(": ");
        s.push_str(&cause.to_string());
        source = cause.source();
    }
    s
}

/// The completed runs of a campaign and the statistics derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Completed runs in run-index order.
    pub records: Vec<RunRecord>,
    pub failed_runs: Vec<FailedRun>,
    /// Per-generation summary of the best fitness across completed runs.
    pub summary: Vec<Summary>,
    /// Final-generation best fitness of each completed run, aligned with
    /// `records`.
    pub final_sample: Vec<f64>,
}

impl Campaign {
    pub fn new(
        config: ExperimentConfig,
        mut records: Vec<RunRecord>,
        failed_runs: Vec<FailedRun>,
    ) -> Result<Self, ExperimentError> {
        records.sort_by_key(|r| r.run_index);
        let generations = config.generations as usize;
        if let Some(r) = records.iter().find(|r| r.best_fitness.len() != generations) {
            return Err(ExperimentError::Config(format!(
                "run {} has {} generations, expected {generations}",
                r.run_index,
                r.best_fitness.len()
            )));
        }
        let summary = if records.is_empty() {
            Vec::new()
        } else {
            per_generation(&records.iter().map(|r| r.best_fitness.clone()).collect::<Vec<_>>())?
        };
        let final_sample = records.iter().filter_map(RunRecord::final_best).collect();
        Ok(Self {
            config_hash: config.hash(),
            config,
            records,
            failed_runs,
            summary,
            final_sample,
        })
    }

    pub fn label(&self) -> String {
        self.config.label()
    }

    pub fn expected_runs(&self) -> usize {
        self.config.runs as usize
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == self.expected_runs()
    }

    pub fn require_complete(&self) -> Result<(), ExperimentError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(ExperimentError::Incomplete {
                label: self.label(),
                completed: self.records.len(),
                expected: self.expected_runs(),
            })
        }
    }

    /// Check that stored hash and derived statistics match the records.
    pub fn check_consistent(&self) -> Result<(), ExperimentError> {
        let rebuilt = Self::new(self.config.clone(), self.records.clone(), self.failed_runs.clone())?;
        if rebuilt.config_hash != self.config_hash {
            return Err(ExperimentError::ConfigMismatch {
                expected: self.config_hash.clone(),
                found: rebuilt.config_hash,
            });
        }
        if rebuilt != *self {
            return Err(ExperimentError::Config(
                "derived statistics do not match the run records".into(),
            ));
        }
        Ok(())
    }
}
