//! Episode evaluation: one genome drives one robot for a fixed number of
//! control ticks, and fitness is the horizontal displacement of the front
//! of the torso.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphology::{build_robot, MorphKind, MorphologyError, RobotModel};
use crate::neat::{Genome, Network};
use crate::physics::{PhysicsError, SolverSettings, World, DEBUG_CSV_HEADER};

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("network has {got} outputs but the {kind} has {expected} revolute joints")]
    OutputMismatch {
        kind: MorphKind,
        expected: usize,
        got: usize,
    },
    #[error("invalid episode timing: {0}")]
    InvalidEpisode(String),
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("trajectory output failed")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub duration: f64,
    pub control_dt: f64,
    pub physics_dt: f64,
    pub input_amplitude: f64,
    /// Angular frequency of the clock input (rad/s).
    pub input_frequency: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            duration: 3.0,
            control_dt: 0.05,
            physics_dt: 0.005,
            input_amplitude: 2.0,
            input_frequency: 1.0,
        }
    }
}

fn whole_ratio(a: f64, b: f64, what: &str) -> Result<usize, RolloutError> {
    let r = a / b;
    let n = r.round();
    if !(b > 0.0 && n >= 1.0 && (r - n).abs() < 1e-9) {
        return Err(RolloutError::InvalidEpisode(format!(
            "{what} = {r} is not a positive whole number"
        )));
    }
    Ok(n as usize)
}

impl EpisodeConfig {
    pub fn control_ticks(&self) -> Result<usize, RolloutError> {
        whole_ratio(self.duration, self.control_dt, "duration / control_dt")
    }

    pub fn substeps(&self) -> Result<usize, RolloutError> {
        whole_ratio(self.control_dt, self.physics_dt, "control_dt / physics_dt")
    }

    pub fn input_signal(&self, t: f64) -> f64 {
        self.input_amplitude * (self.input_frequency * t).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Horizontal displacement of the front marker (m); 0 if diverged.
    pub fitness: f64,
    pub diverged: bool,
    pub start_marker: [f64; 3],
    pub final_marker: [f64; 3],
    pub control_ticks: usize,
    pub physics_steps: u64,
}

/// Clock input with the default amplitude and frequency: `2·sin(t)`.
pub fn input_signal(t: f64) -> f64 {
    EpisodeConfig::default().input_signal(t)
}

/// Network outputs in (−1, 1) to revolute targets in (−π/2, π/2).
pub fn map_outputs(raw: &[f64], kind: MorphKind) -> Result<Vec<f64>, RolloutError> {
    let expected = kind.actuated_joints();
    if raw.len() != expected {
        return Err(RolloutError::OutputMismatch {
            kind,
            expected,
            got: raw.len(),
        });
    }
    Ok(raw.iter().map(|r| r * FRAC_PI_2).collect())
}

/// World position of the midpoint of the torso's +x edge.
pub fn front_marker(world: &World, model: &RobotModel) -> Vector3<f64> {
    world.bodies()[model.torso].to_world(&model.front_marker_local())
}

pub fn evaluate(
    genome: &Genome,
    kind: MorphKind,
    extension: f64,
    episode: &EpisodeConfig,
    physics: &SolverSettings,
) -> Result<EpisodeResult, RolloutError> {
    run_episode(genome, &build_robot(kind, extension)?, episode, physics, None)
}

/// Evaluate on an already built (possibly repositioned) robot.
pub fn evaluate_model(
    genome: &Genome,
    model: &RobotModel,
    episode: &EpisodeConfig,
    physics: &SolverSettings,
) -> Result<EpisodeResult, RolloutError> {
    run_episode(genome, model, episode, physics, None)
}

/// Like [`evaluate`], additionally writing one debug CSV row per body for
/// the spawn state and after every physics step.
pub fn evaluate_with_trajectory(
    genome: &Genome,
    kind: MorphKind,
    extension: f64,
    episode: &EpisodeConfig,
    physics: &SolverSettings,
    out: &mut dyn Write,
) -> Result<EpisodeResult, RolloutError> {
    run_episode(genome, &build_robot(kind, extension)?, episode, physics, Some(out))
}

fn run_episode(
    genome: &Genome,
    model: &RobotModel,
    episode: &EpisodeConfig,
    physics: &SolverSettings,
    mut trace: Option<&mut dyn Write>,
) -> Result<EpisodeResult, RolloutError> {
    let ticks = episode.control_ticks()?;
    let substeps = episode.substeps()?;
    let kind = model.kind;
    let mut network = Network::decode(genome);
    if network.output_count() != kind.actuated_joints() {
        return Err(RolloutError::OutputMismatch {
            kind,
            expected: kind.actuated_joints(),
            got: network.output_count(),
        });
    }
    let mut world = model.instantiate(episode.physics_dt, physics.clone())?;
    let joints = model.revolute_order();
    let start = front_marker(&world, model);
    if let Some(out) = trace.as_deref_mut() {
        writeln!(out, "{DEBUG_CSV_HEADER}")?;
        world.write_debug_rows(out)?;
    }

    let mut diverged = false;
    let mut ticks_done = 0;
    'episode: for tick in 0..ticks {
        let t = tick as f64 * episode.control_dt;
        let raw = network.activate(episode.input_signal(t));
        for (&j, &r) in joints.iter().zip(raw) {
            world.set_joint_target(j, r * FRAC_PI_2)?;
        }
        ticks_done += 1;
        for _ in 0..substeps {
            match world.step() {
                Ok(()) => {}
                Err(PhysicsError::Diverged { .. }) => {
                    diverged = true;
                    break 'episode;
                }
                Err(e) => return Err(e.into()),
            }
            if let Some(out) = trace.as_deref_mut() {
                world.write_debug_rows(out)?;
            }
        }
    }

    let end = front_marker(&world, model);
    let fitness = if diverged { 0.0 } else { (end - start).xy().norm() };
    Ok(EpisodeResult {
        fitness,
        diverged,
        start_marker: start.into(),
        final_marker: end.into(),
        control_ticks: ticks_done,
        physics_steps: world.step_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_signal_examples() {
        assert_eq!(input_signal(0.0), 0.0);
        assert_eq!(input_signal(FRAC_PI_2), 2.0);
        assert!((input_signal(1.0) - 1.682_941_969_615_793).abs() < 1e-15);
    }

    #[test]
    fn map_outputs_examples() {
        let t = map_outputs(&[0.0, 1.0, -1.0, 0.5, 0.0, 0.0, 0.0, 0.0], MorphKind::Quadruped).unwrap();
        assert_eq!(&t[..4], &[0.0, FRAC_PI_2, -FRAC_PI_2, FRAC_PI_2 / 2.0]);
        assert!(matches!(
            map_outputs(&[0.0; 8], MorphKind::Hexapod),
            Err(RolloutError::OutputMismatch {
                expected: 12,
                got: 8,
                ..
            })
        ));
    }

    #[test]
    fn default_timing() {
        let e = EpisodeConfig::default();
        assert_eq!((e.control_ticks().unwrap(), e.substeps().unwrap()), (60, 10));
        let bad = EpisodeConfig { physics_dt: 0.007, ..e };
        assert!(bad.substeps().is_err());
    }
}
