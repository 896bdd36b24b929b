use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::morphology::{GrowthSchedule, MorphKind};
use crate::neat::NeatParams;
use crate::physics::SolverSettings;
use crate::rollout::EpisodeConfig;

/// Everything that determines a campaign's results. Every NEAT, episode and
/// physics parameter has an explicit key so that unstated defaults are
/// visible in the persisted copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in comparison reports; defaults to `<morphology>_G<G>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub morphology: MorphKind,
    /// Generation at which the legs reach full length; 0 is the fixed-size
    /// reference.
    #[serde(default)]
    pub growth_final_generation: u32,
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_generations")]
    pub generations: u32,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default)]
    pub master_seed: u64,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Checkpoint period in generations; 0 disables checkpoints.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: u32,
    #[serde(default)]
    pub neat: NeatParams,
    #[serde(default)]
    pub episode: EpisodeConfig,
    #[serde(default)]
    pub physics: SolverSettings,
}

fn default_population() -> usize {
    50
}

fn default_generations() -> u32 {
    300
}

fn default_runs() -> u32 {
    30
}

fn default_checkpoint_every() -> u32 {
    10
}

impl ExperimentConfig {
    /// Defaults for `morphology` and growth generation `g`.
    pub fn new(morphology: MorphKind, growth_final_generation: u32) -> Self {
        Self {
            name: None,
            morphology,
            growth_final_generation,
            population_size: default_population(),
            generations: default_generations(),
            runs: default_runs(),
            master_seed: 0,
            output_dir: None,
            checkpoint_every: default_checkpoint_every(),
            neat: NeatParams::default(),
            episode: EpisodeConfig::default(),
            physics: SolverSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.population_size == 0 {
            return fail("population_size must be at least 1");
        }
        if self.generations == 0 {
            return fail("generations must be at least 1");
        }
        if self.runs == 0 {
            return fail("runs must be at least 1");
        }
        if self.physics.iterations == 0 {
            return fail("physics.iterations must be at least 1");
        }
        let probabilities = [
            self.neat.weight_mutation_prob,
            self.neat.weight_perturb_prob,
            self.neat.add_connection_prob,
            self.neat.add_node_prob,
            self.neat.crossover_prob,
            self.neat.survival_fraction,
            self.neat.reenable_prob,
        ];
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return fail("NEAT probabilities and fractions must lie in [0, 1]");
        }
        if !(self.neat.compat_threshold > 0.0 && self.neat.compat_threshold.is_finite()) {
            return fail("neat.compat_threshold must be positive and finite");
        }
        self.episode.control_ticks()?;
        self.episode.substeps()?;
        Ok(())
    }

    pub fn schedule(&self) -> GrowthSchedule {
        GrowthSchedule::new(self.growth_final_generation)
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{}_G{}", self.morphology, self.growth_final_generation))
    }

    /// SHA-256 over the canonical JSON of the config without its output
    /// directory.
    pub fn hash(&self) -> String {
        let canonical = Self {
            output_dir: None,
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toml_uses_defaults() {
        let c = ExperimentConfig::from_toml_str("morphology = \"hexapod\"\ngrowth_final_generation = 60\n").unwrap();
        assert_eq!(c.morphology, MorphKind::Hexapod);
        assert_eq!((c.population_size, c.generations, c.runs), (50, 300, 30));
        assert_eq!(c.label(), "hexapod_G60");
        assert_eq!(c.neat, NeatParams::default());
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let mut c = ExperimentConfig::new(MorphKind::Quadruped, 0);
        c.master_seed = 42;
        let text = c.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        let h = c.hash();
        c.output_dir = Some("elsewhere".into());
        assert_eq!(c.hash(), h);
        c.master_seed = 43;
        assert_ne!(c.hash(), h);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml_str("morphology = \"quadruped\"\nruns = 0\n").is_err());
        assert!(ExperimentConfig::from_toml_str("morphology = \"biped\"\n").is_err());
        assert!(ExperimentConfig::from_toml_str("morphology = \"quadruped\"\nbogus = 1\n").is_err());
        assert!(
            ExperimentConfig::from_toml_str("morphology = \"quadruped\"\n[episode]\nphysics_dt = 0.007\n").is_err()
        );
    }
}
