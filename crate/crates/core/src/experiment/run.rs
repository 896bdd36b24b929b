use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::store;
use super::ExperimentError;
use crate::neat::{initial_population, next_generation, Genome, InnovationDb, Population};
use crate::rollout::evaluate;

/// RNG stream used to build the initial population.
pub const STREAM_INIT: u64 = 0;
/// RNG stream used for reproduction (selection, crossover, mutation).
pub const STREAM_REPRODUCTION: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive mix of two words.
pub fn derive_seed(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b)
}

pub fn run_seed(master_seed: u64, run_index: u32) -> u64 {
    derive_seed(master_seed, u64::from(run_index))
}

/// Generation-scoped stream: the RNG for (run, generation, stream) depends
/// on nothing else, so checkpoints carry no RNG state and evaluation order
/// cannot leak into the random sequence.
pub fn generation_rng(run_seed: u64, generation: u32, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(run_seed, u64::from(generation)), stream))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionEntry {
    pub generation: u32,
    pub fitness: f64,
    pub genome: Genome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: u32,
    pub seed: u64,
    /// Best fitness of each generation (m), evaluated at that generation's
    /// extension.
    pub best_fitness: Vec<f64>,
    pub extension: Vec<f64>,
    /// Generation champions at every checkpoint and at the final generation.
    pub champions: Vec<ChampionEntry>,
    /// Evaluations that ended in a physics divergence.
    pub diverged_evaluations: u64,
}

impl RunRecord {
    pub fn final_best(&self) -> Option<f64> {
        self.best_fitness.last().copied()
    }
}

/// Resumable state of one run at a generation boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub config_hash: String,
    /// Generation about to be evaluated.
    pub generation: u32,
    pub population: Population,
    pub innovations: InnovationDb,
    pub record: RunRecord,
}

impl RunState {
    pub fn fresh(config: &ExperimentConfig, run_index: u32) -> Result<Self, ExperimentError> {
        let seed = run_seed(config.master_seed, run_index);
        let mut rng = generation_rng(seed, 0, STREAM_INIT);
        let (population, innovations) = initial_population(
            &mut rng,
            config.morphology.actuated_joints(),
            config.population_size,
            &config.neat,
        )?;
        Ok(Self {
            config_hash: config.hash(),
            generation: 0,
            population,
            innovations,
            record: RunRecord {
                run_index,
                seed,
                best_fitness: Vec::new(),
                extension: Vec::new(),
                champions: Vec::new(),
                diverged_evaluations: 0,
            },
        })
    }

    pub fn is_finished(&self, config: &ExperimentConfig) -> bool {
        self.generation >= config.generations
    }
}

/// Fitness of every genome at `extension`, in population order.
pub fn evaluate_population(
    config: &ExperimentConfig,
    genomes: &[Genome],
    extension: f64,
) -> Result<Vec<(f64, bool)>, ExperimentError> {
    genomes
        .par_iter()
        .map(|g| {
            evaluate(g, config.morphology, extension, &config.episode, &config.physics)
                .map(|r| (r.fitness, r.diverged))
                .map_err(ExperimentError::from)
        })
        .collect()
}

/// Evaluate the current generation, record it and breed the next one.
pub fn advance(config: &ExperimentConfig, state: &mut RunState) -> Result<(), ExperimentError> {
    let g = state.generation;
    let extension = config.schedule().extension_at(g);
    let results = evaluate_population(config, &state.population.genomes, extension)?;
    let fitness: Vec<f64> = results.iter().map(|r| r.0).collect();
    let best = (0..fitness.len())
        .min_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)))
        .expect("population is never empty");
    let record = &mut state.record;
    record.best_fitness.push(fitness[best]);
    record.extension.push(extension);
    record.diverged_evaluations += results.iter().filter(|r| r.1).count() as u64;

    let last = g + 1 == config.generations;
    let checkpoint = config.checkpoint_every > 0 && (g + 1).is_multiple_of(config.checkpoint_every);
    if last || checkpoint {
        record.champions.push(ChampionEntry {
            generation: g,
            fitness: fitness[best],
            genome: state.population.genomes[best].clone(),
        });
    }
    if !last {
        let mut rng = generation_rng(record.seed, g, STREAM_REPRODUCTION);
        state.population = next_generation(
            &state.population,
            &fitness,
            &mut rng,
            &mut state.innovations,
            &config.neat,
        )?;
    }
    state.generation = g + 1;
    Ok(())
}

/// Run (or continue) one evolutionary run, writing a checkpoint to
/// `checkpoint` every `checkpoint_every` generations when given.
pub fn run_from(
    config: &ExperimentConfig,
    mut state: RunState,
    checkpoint: Option<&Path>,
) -> Result<RunRecord, ExperimentError> {
    while !state.is_finished(config) {
        advance(config, &mut state)?;
        if let Some(path) = checkpoint {
            if config.checkpoint_every > 0
                && state.generation.is_multiple_of(config.checkpoint_every)
                && !state.is_finished(config)
            {
                store::write_checkpoint(path, &state)?;
            }
        }
    }
    Ok(state.record)
}

/// One complete run without checkpoints. Deterministic in
/// (config, run_index).
pub fn run_single(config: &ExperimentConfig, run_index: u32) -> Result<RunRecord, ExperimentError> {
    run_from(config, RunState::fresh(config, run_index)?, None)
}
