use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{run_from, RunRecord, RunState};
use super::store::{self, CampaignMeta, CampaignStatus, FailedRun};
use super::{error_chain, Campaign, ExperimentError};

/// Run one evolutionary run, continuing from `checkpoint` if it exists.
pub fn default_runner(
    config: &ExperimentConfig,
    run_index: u32,
    checkpoint: &Path,
) -> Result<RunRecord, ExperimentError> {
    let state = if checkpoint.exists() {
        store::read_checkpoint(checkpoint, &config.hash())?
    } else {
        RunState::fresh(config, run_index)?
    };
    run_from(config, state, Some(checkpoint))
}

/// Start a new campaign in `dir`. `jobs` bounds the worker threads (all
/// cores when `None`); results do not depend on it.
pub fn run_campaign(config: &ExperimentConfig, dir: &Path, jobs: Option<usize>) -> Result<Campaign, ExperimentError> {
    run_campaign_with(config, dir, jobs, &default_runner)
}

/// [`run_campaign`] with a custom per-run executor, e.g. to inject failures.
pub fn run_campaign_with<F>(
    config: &ExperimentConfig,
    dir: &Path,
    jobs: Option<usize>,
    runner: &F,
) -> Result<Campaign, ExperimentError>
where
    F: Fn(&ExperimentConfig, u32, &Path) -> Result<RunRecord, ExperimentError> + Sync,
{
    config.validate()?;
    if dir.join(store::CAMPAIGN_FILE).exists() {
        return Err(ExperimentError::AlreadyExists(dir.to_path_buf()));
    }
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    execute(config, dir, jobs, runner)
}

/// Finish the pending runs of the campaign in `dir`, continuing each from
/// its latest checkpoint.
pub fn resume_campaign(dir: &Path, jobs: Option<usize>) -> Result<Campaign, ExperimentError> {
    let meta = store::read_meta(dir)?;
    execute(&meta.config, dir, jobs, &default_runner)
}

fn completed_runs(config: &ExperimentConfig, dir: &Path) -> Vec<u32> {
    (0..config.runs)
        .filter(|&i| store::run_json_path(dir, i).exists())
        .collect()
}

fn write_meta(
    config: &ExperimentConfig,
    dir: &Path,
    status: CampaignStatus,
    failed_runs: Vec<FailedRun>,
) -> Result<(), ExperimentError> {
    let meta = CampaignMeta {
        label: config.label(),
        config_hash: config.hash(),
        status,
        population_size: config.population_size,
        generations: config.generations,
        runs: config.runs,
        completed_runs: completed_runs(config, dir),
        failed_runs,
        config: config.clone(),
    };
    store::write_json(&dir.join(store::CAMPAIGN_FILE), &meta)
}

fn execute<F>(
    config: &ExperimentConfig,
    dir: &Path,
    jobs: Option<usize>,
    runner: &F,
) -> Result<Campaign, ExperimentError>
where
    F: Fn(&ExperimentConfig, u32, &Path) -> Result<RunRecord, ExperimentError> + Sync,
{
    let done = completed_runs(config, dir);
    let pending: Vec<u32> = (0..config.runs).filter(|i| !done.contains(i)).collect();
    write_meta(config, dir, CampaignStatus::Running, Vec::new())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
    // Every run writes only its own files, so runs never contend.
    let outcomes: Vec<(u32, Result<(), ExperimentError>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let checkpoint = store::checkpoint_path(dir, i);
                let outcome = runner(config, i, &checkpoint).and_then(|record| {
                    if record.run_index != i {
                        return Err(ExperimentError::RunFailed {
                            run_index: i,
                            message: format!("runner returned run {}", record.run_index),
                        });
                    }
                    store::write_run(dir, &record)?;
                    if checkpoint.exists() {
                        fs::remove_file(&checkpoint).map_err(|e| ExperimentError::io(&checkpoint, e))?;
                    }
                    Ok(())
                });
                (i, outcome)
            })
            .collect()
    });

    let failed: Vec<FailedRun> = outcomes
        .into_iter()
        .filter_map(|(run_index, r)| {
            r.err().map(|e| FailedRun {
                run_index,
                error: error_chain(&e),
            })
        })
        .collect();
    let status = if failed.is_empty() {
        CampaignStatus::Complete
    } else {
        CampaignStatus::Incomplete
    };
    write_meta(config, dir, status, failed)?;
    let campaign = store::load_campaign(dir)?;
    store::write_derived(dir, &campaign)?;
    let checkpoints = dir.join("checkpoints");
    if campaign.is_complete() && checkpoints.exists() {
        // Only succeeds once every checkpoint has been removed.
        let _ = fs::remove_dir(&checkpoints);
    }
    Ok(campaign)
}
