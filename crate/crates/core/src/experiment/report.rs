use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::store;
use super::{Campaign, ExperimentError};
use crate::stats::{
    boxplot_data, mann_whitney_two_tailed, max_median_difference, median_and_quartiles, relative_to_best, BoxplotData,
    MwMethod, StatsError, Summary,
};

/// Significance level for comparisons.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub experiment: String,
    pub completed_runs: usize,
    pub expected_runs: usize,
    pub partial: bool,
    pub summary: Vec<Summary>,
    pub final_boxplot: BoxplotData,
}

/// Per-generation and final-generation statistics. Incomplete campaigns are
/// refused unless `allow_partial`, in which case only completed runs count.
pub fn campaign_stats(campaign: &Campaign, allow_partial: bool) -> Result<CampaignStats, ExperimentError> {
    if !allow_partial {
        campaign.require_complete()?;
    }
    if campaign.records.is_empty() {
        return Err(StatsError::Empty.into());
    }
    Ok(CampaignStats {
        experiment: campaign.label(),
        completed_runs: campaign.records.len(),
        expected_runs: campaign.expected_runs(),
        partial: !campaign.is_complete(),
        summary: campaign.summary.clone(),
        final_boxplot: boxplot_data(&campaign.final_sample)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub experiment_a: String,
    pub experiment_b: String,
    pub n_a: usize,
    pub n_b: usize,
    #[serde(rename = "U")]
    pub u: f64,
    pub p: f64,
    pub method: MwMethod,
    pub significant: bool,
    pub boxplot_a: BoxplotData,
    pub boxplot_b: BoxplotData,
}

/// Two-tailed Mann-Whitney U test on the final-generation samples.
pub fn compare_campaigns(a: &Campaign, b: &Campaign) -> Result<CompareReport, ExperimentError> {
    a.require_complete()?;
    b.require_complete()?;
    let mw = mann_whitney_two_tailed(&a.final_sample, &b.final_sample)?;
    Ok(CompareReport {
        experiment_a: a.label(),
        experiment_b: b.label(),
        n_a: a.final_sample.len(),
        n_b: b.final_sample.len(),
        u: mw.u,
        p: mw.p,
        method: mw.method,
        significant: mw.p < ALPHA,
        boxplot_a: boxplot_data(&a.final_sample)?,
        boxplot_b: boxplot_data(&b.final_sample)?,
    })
}

fn method_name(m: MwMethod) -> &'static str {
    match m {
        MwMethod::Exact => "exact",
        MwMethod::NormalApproximation => "normal_approximation",
    }
}

/// Write `compare.csv` and `compare.json` into `dir`.
pub fn write_compare(dir: &Path, reports: &[CompareReport]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut csv = String::from("experiment_a,experiment_b,n_a,n_b,U,p,method,significant\n");
    for r in reports {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.experiment_a,
            r.experiment_b,
            r.n_a,
            r.n_b,
            r.u,
            r.p,
            method_name(r.method),
            r.significant
        )
        .unwrap();
    }
    let csv_path = dir.join("compare.csv");
    let json_path = dir.join("compare.json");
    store::write_atomic(&csv_path, csv.as_bytes())?;
    store::write_json(&json_path, &reports)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEntry {
    pub experiment: String,
    pub n: usize,
    /// Best final-generation fitness of the campaign (m); maps to 100%.
    pub best_final: f64,
    pub summary: Summary,
    pub boxplot: BoxplotData,
    pub values_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeReport {
    pub entries: Vec<RelativeEntry>,
    /// Largest difference between the medians of the entries, in
    /// percentage points.
    pub max_median_difference_pct: f64,
}

/// Express each campaign's final sample relative to its own best run and
/// measure how far apart the medians end up.
pub fn relative_report(campaigns: &[Campaign]) -> Result<RelativeReport, ExperimentError> {
    let mut entries = Vec::with_capacity(campaigns.len());
    for c in campaigns {
        c.require_complete()?;
        let values_pct = relative_to_best(&c.final_sample)?;
        entries.push(RelativeEntry {
            experiment: c.label(),
            n: values_pct.len(),
            best_final: c.final_sample.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            summary: median_and_quartiles(&values_pct)?,
            boxplot: boxplot_data(&values_pct)?,
            values_pct,
        });
    }
    let samples: Vec<Vec<f64>> = entries.iter().map(|e| e.values_pct.clone()).collect();
    Ok(RelativeReport {
        max_median_difference_pct: max_median_difference(&samples)?,
        entries,
    })
}

/// Write `relative.csv` and `relative.json` into `dir`.
pub fn write_relative(dir: &Path, report: &RelativeReport) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut csv = String::from("experiment,n,best_final_m,median_pct,q25_pct,q75_pct,whisker_lo_pct,whisker_hi_pct\n");
    for e in &report.entries {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            e.experiment,
            e.n,
            e.best_final,
            e.summary.median,
            e.summary.q25,
            e.summary.q75,
            e.boxplot.whisker_lo,
            e.boxplot.whisker_hi
        )
        .unwrap();
    }
    let csv_path = dir.join("relative.csv");
    let json_path = dir.join("relative.json");
    store::write_atomic(&csv_path, csv.as_bytes())?;
    store::write_json(&json_path, report)?;
    Ok(vec![csv_path, json_path])
}
