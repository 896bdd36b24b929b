use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use morphogrow::experiment::store::{self, ExportFormat};
use morphogrow::experiment::{
    campaign_stats, compare_campaigns, load_campaign, relative_report, resume_campaign, run_campaign, write_compare,
    write_relative, Campaign, CampaignMeta, ExperimentConfig, RunRecord,
};
use morphogrow::morphology::{MorphKind, MAX_EXTENSION};
use morphogrow::neat::Genome;
use morphogrow::physics::SolverSettings;
use morphogrow::rollout::{evaluate, evaluate_with_trajectory, EpisodeConfig};

#[derive(Parser)]
#[command(
    name = "morphogrow",
    version,
    about = "Evolve walking controllers for legged robots whose legs grow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a configuration with every parameter spelled out.
    Config {
        morphology: MorphKind,
        /// Generation at which the legs reach full length (0: fixed size).
        #[arg(default_value_t = 0)]
        growth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a new campaign.
    Run {
        config: PathBuf,
        /// Campaign directory; defaults to the config's output_dir, then
        /// `results/<label>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
    },
    /// Finish the pending runs of a campaign from their checkpoints.
    Resume {
        dir: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
    },
    /// Per-generation median and quartiles, and the final boxplot.
    Stats {
        dir: PathBuf,
        /// Summarise the completed runs of an incomplete campaign.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Mann-Whitney comparison of two campaigns' final generations.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Directory for compare.csv and compare.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a campaign as CSV tables or a single JSON document.
    Export {
        dir: PathBuf,
        #[arg(long)]
        format: ExportFormat,
        /// Defaults to `<dir>/export`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Final fitness relative to each campaign's best run.
    Relative {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate one genome, or the final champion of a run record.
    Replay {
        genome: PathBuf,
        /// Required unless a campaign.json sits next to a run record.
        #[arg(long)]
        morphology: Option<MorphKind>,
        /// Leg extension in metres; defaults to the run's final extension,
        /// or full length.
        #[arg(long)]
        extension: Option<f64>,
        /// Write `step,body_id,x,y,z,qw,qx,qy,qz` rows for every physics step.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Config {
            morphology,
            growth,
            seed,
        } => {
            let mut config = ExperimentConfig::new(morphology, growth);
            config.master_seed = seed;
            print!("{}", config.to_toml_string());
        }
        Command::Run { config, out, jobs } => {
            let config = ExperimentConfig::load(&config)?;
            let dir = out
                .or_else(|| config.output_dir.clone())
                .unwrap_or_else(|| Path::new("results").join(config.label()));
            let campaign = run_campaign(&config, &dir, jobs.map(usize::from))?;
            report_campaign(&campaign, &dir)?;
        }
        Command::Resume { dir, jobs } => {
            let campaign = resume_campaign(&dir, jobs.map(usize::from))?;
            report_campaign(&campaign, &dir)?;
        }
        Command::Stats { dir, allow_partial } => {
            let campaign = load_campaign(&dir)?;
            let stats = campaign_stats(&campaign, allow_partial)?;
            if stats.partial {
                eprintln!(
                    "warning: partial campaign, {} of {} runs",
                    stats.completed_runs, stats.expected_runs
                );
            }
            println!("# {} ({} runs)", stats.experiment, stats.completed_runs);
            println!("generation,median,q25,q75");
            for (g, s) in stats.summary.iter().enumerate() {
                println!("{g},{},{},{}", s.median, s.q25, s.q75);
            }
            let b = &stats.final_boxplot;
            println!(
                "# final: median {} q25 {} q75 {} whiskers [{}, {}] outliers {:?}",
                b.median, b.q25, b.q75, b.whisker_lo, b.whisker_hi, b.outliers
            );
        }
        Command::Compare { a, b, out } => {
            let report = compare_campaigns(&load_campaign(&a)?, &load_campaign(&b)?)?;
            write_compare(&out, std::slice::from_ref(&report))?;
            println!(
                "{} vs {}: U = {}, p = {} ({:?}), {}",
                report.experiment_a,
                report.experiment_b,
                report.u,
                report.p,
                report.method,
                if report.significant {
                    "significant at 0.05"
                } else {
                    "not significant"
                }
            );
        }
        Command::Export { dir, format, out } => {
            let campaign = load_campaign(&dir)?;
            let out = out.unwrap_or_else(|| dir.join("export"));
            for path in store::export(&campaign, &out, format)? {
                println!("{}", path.display());
            }
        }
        Command::Relative { dirs, out } => {
            let campaigns = dirs.iter().map(|d| load_campaign(d)).collect::<Result<Vec<_>, _>>()?;
            let report = relative_report(&campaigns)?;
            write_relative(&out, &report)?;
            for e in &report.entries {
                println!(
                    "{}: median {:.4}% (q25 {:.4}%, q75 {:.4}%) of best {} m",
                    e.experiment, e.summary.median, e.summary.q25, e.summary.q75, e.best_final
                );
            }
            println!("max median difference: {:.4}%", report.max_median_difference_pct);
        }
        Command::Replay {
            genome,
            morphology,
            extension,
            dump_trajectory,
        } => replay(&genome, morphology, extension, dump_trajectory.as_deref())?,
    }
    Ok(())
}

fn report_campaign(campaign: &Campaign, dir: &Path) -> Result<()> {
    println!(
        "{}: {} of {} runs complete in {}",
        campaign.label(),
        campaign.records.len(),
        campaign.expected_runs(),
        dir.display()
    );
    for f in &campaign.failed_runs {
        eprintln!("run {} failed: {}", f.run_index, f.error);
    }
    if let Some(last) = campaign.summary.last() {
        println!("final generation median best fitness: {} m", last.median);
    }
    if !campaign.failed_runs.is_empty() {
        bail!(
            "{} runs failed; fix the cause and use `resume`",
            campaign.failed_runs.len()
        );
    }
    Ok(())
}

fn replay(path: &Path, morphology: Option<MorphKind>, extension: Option<f64>, dump: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut episode = EpisodeConfig::default();
    let mut physics = SolverSettings::default();
    let mut kind = morphology;
    let mut ext = extension;
    let genome = if let Ok(record) = serde_json::from_str::<RunRecord>(&text) {
        let champion = record
            .champions
            .last()
            .with_context(|| format!("{} holds no champion", path.display()))?;
        let meta_path = path.with_file_name(store::CAMPAIGN_FILE);
        if meta_path.exists() {
            let meta: CampaignMeta = store::read_json(&meta_path)?;
            kind = kind.or(Some(meta.config.morphology));
            ext = ext.or_else(|| record.extension.get(champion.generation as usize).copied());
            episode = meta.config.episode;
            physics = meta.config.physics;
        }
        champion.genome.clone()
    } else {
        serde_json::from_str::<Genome>(&text)
            .with_context(|| format!("{} is neither a genome nor a run record", path.display()))?
    };
    let kind = kind.context("--morphology is required for a bare genome")?;
    let ext = ext.unwrap_or(MAX_EXTENSION);
    let result = match dump {
        Some(out) => {
            let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
            let mut writer = BufWriter::new(file);
            let r = evaluate_with_trajectory(&genome, kind, ext, &episode, &physics, &mut writer)?;
            writer.flush()?;
            r
        }
        None => evaluate(&genome, kind, ext, &episode, &physics)?,
    };
    println!(
        "{kind} at extension {ext} m: fitness {} m{} ({} control ticks, {} physics steps)",
        result.fitness,
        if result.diverged { " (diverged)" } else { "" },
        result.control_ticks,
        result.physics_steps
    );
    Ok(())
}
