//! NEAT: genomes with historical markings, structural and weight mutation,
//! crossover, speciation by compatibility distance and generational
//! reproduction.
//!
//! All randomness comes from the caller's RNG and every collection is
//! iterated in a fixed order, so a generation is a pure function of
//! (population, fitnesses, rng state, innovation db).

mod genome;
mod innovation;
mod network;
mod population;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use genome::{
    compatibility, crossover, ConnectionGene, Genome, NodeGene, NodeId, NodeRole, BIAS_NODE, FIRST_OUTPUT, INPUT_NODE,
};
pub use innovation::{InnovationDb, Split};
pub use network::{activation, Network};
pub use population::{initial_population, next_generation, speciate, Population, Species};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeatError {
    #[error("expected {expected} fitness values, got {got}")]
    FitnessLength { expected: usize, got: usize },
    #[error("fitness of genome {index} is {value}; must be finite and non-negative")]
    InvalidFitness { index: usize, value: f64 },
    #[error("output count must be positive")]
    NoOutputs,
    #[error("population size must be at least 1")]
    EmptyPopulation,
    #[error("invalid genome: {0}")]
    InvalidGenome(String),
}

/// Evolution parameters. Population size and generation count live in the
/// experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeatParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub compat_threshold: f64,
    /// Per-generation threshold adjustment towards `target_species`.
    pub threshold_step: f64,
    pub min_threshold: f64,
    pub target_species: usize,
    pub weight_mutation_prob: f64,
    /// Given a weight mutation, chance that a gene is perturbed rather
    /// than replaced.
    pub weight_perturb_prob: f64,
    pub weight_perturb_power: f64,
    /// Initial and replacement weights are drawn from `U(−r, r)`.
    pub weight_init_range: f64,
    pub max_weight: f64,
    pub add_connection_prob: f64,
    pub add_node_prob: f64,
    pub crossover_prob: f64,
    pub survival_fraction: f64,
    pub reenable_prob: f64,
    /// Species at least this large keep their champion unchanged.
    pub species_elitism_min_size: usize,
}

impl Default for NeatParams {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 0.4,
            compat_threshold: 3.0,
            threshold_step: 0.1,
            min_threshold: 0.1,
            target_species: 5,
            weight_mutation_prob: 0.8,
            weight_perturb_prob: 0.9,
            weight_perturb_power: 0.5,
            weight_init_range: 1.0,
            max_weight: 8.0,
            add_connection_prob: 0.1,
            add_node_prob: 0.03,
            crossover_prob: 0.75,
            survival_fraction: 0.25,
            reenable_prob: 0.25,
            species_elitism_min_size: 5,
        }
    }
}
