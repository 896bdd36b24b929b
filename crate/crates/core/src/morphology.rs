//! Quadruped, hexapod and octopod models and their leg-growth schedules.
//!
//! Robot frame: torso centered at the origin, long axis along +x (front),
//! left row of legs on +y. Each leg is a chain
//! torso ─hip(rev, vertical)─ coxa ─knee(rev, along x)─ tibia ─slider(prismatic, down)─ foot.
//! The coxa sticks out sideways; tibia and foot hang straight down. At zero
//! extension the foot fully overlaps the tibia, so the leg measures
//! coxa + tibia = 0.10 m and grows to 0.175 m at full stroke.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{BodyId, BodyState, JointId, JointKind, JointSpec, PhysicsError, SolverSettings, World};

pub const TORSO_WIDTH: f64 = 0.15;
pub const TORSO_THICKNESS: f64 = 0.01;
pub const SEGMENT_LENGTH: f64 = 0.05;
pub const SEGMENT_WIDTH: f64 = 0.025;
pub const SEGMENT_THICKNESS: f64 = 0.005;
pub const SEGMENT_MASS: f64 = 0.25;
pub const SEGMENTS_PER_LEG: usize = 3;
/// Center-to-center distance of adjacent legs on one side.
pub const LEG_SPACING: f64 = 0.29;
pub const MAX_EXTENSION: f64 = 0.075;
pub const BASE_LEG_LENGTH: f64 = 2.0 * SEGMENT_LENGTH;

pub const REVOLUTE_LIMIT: f64 = FRAC_PI_2;
pub const REVOLUTE_MAX_TORQUE: f64 = 2.5;
pub const PRISMATIC_MAX_FORCE: f64 = 50.0;
pub const SERVO_P_GAIN: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorphologyError {
    #[error("leg extension {0} m outside [0, {MAX_EXTENSION}]")]
    ExtensionOutOfRange(f64),
    #[error("unknown morphology {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphKind {
    Quadruped,
    Hexapod,
    Octopod,
}

impl MorphKind {
    pub const ALL: [MorphKind; 3] = [MorphKind::Quadruped, MorphKind::Hexapod, MorphKind::Octopod];

    pub fn legs(self) -> usize {
        match self {
            MorphKind::Quadruped => 4,
            MorphKind::Hexapod => 6,
            MorphKind::Octopod => 8,
        }
    }

    pub fn torso_length(self) -> f64 {
        match self {
            MorphKind::Quadruped => 0.30,
            MorphKind::Hexapod => 0.60,
            MorphKind::Octopod => 0.90,
        }
    }

    /// Torso mass scales with torso length from the 2 kg quadruped body.
    pub fn torso_mass(self) -> f64 {
        match self {
            MorphKind::Quadruped => 2.0,
            MorphKind::Hexapod => 4.0,
            MorphKind::Octopod => 6.0,
        }
    }

    /// Network outputs: one per revolute joint.
    pub fn actuated_joints(self) -> usize {
        2 * self.legs()
    }

    pub fn name(self) -> &'static str {
        match self {
            MorphKind::Quadruped => "quadruped",
            MorphKind::Hexapod => "hexapod",
            MorphKind::Octopod => "octopod",
        }
    }
}

impl std::fmt::Display for MorphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MorphKind {
    type Err = MorphologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quadruped" => Ok(MorphKind::Quadruped),
            "hexapod" => Ok(MorphKind::Hexapod),
            "octopod" => Ok(MorphKind::Octopod),
            other => Err(MorphologyError::UnknownKind(other.to_string())),
        }
    }
}

/// Linear leg growth reaching full extension at `final_generation`.
/// `final_generation == 0` is the fixed, fully grown reference morphology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthSchedule {
    pub final_generation: u32,
}

impl GrowthSchedule {
    pub fn new(final_generation: u32) -> Self {
        Self { final_generation }
    }

    pub fn reference() -> Self {
        Self { final_generation: 0 }
    }

    pub fn is_reference(&self) -> bool {
        self.final_generation == 0
    }

    pub fn extension_at(&self, generation: u32) -> f64 {
        extension_at(*self, generation)
    }
}

pub fn extension_at(schedule: GrowthSchedule, generation: u32) -> f64 {
    let g_final = schedule.final_generation;
    if g_final == 0 {
        return MAX_EXTENSION;
    }
    let g = generation.min(g_final);
    if g == g_final {
        return MAX_EXTENSION;
    }
    MAX_EXTENSION * f64::from(g) / f64::from(g_final)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// Body and joint indices of one leg inside a [`RobotModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub side: Side,
    /// Offset of the hip along the torso's long axis.
    pub x: f64,
    pub segments: [BodyId; SEGMENTS_PER_LEG],
    pub hip: JointId,
    pub knee: JointId,
    pub slider: JointId,
}

/// A robot as bodies and joints in the robot frame (torso at the origin),
/// ready to be placed into a [`World`].
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub kind: MorphKind,
    pub extension: f64,
    pub bodies: Vec<BodyState>,
    pub joints: Vec<JointSpec>,
    /// Initial joint position of each joint (slider extension, 0 otherwise).
    pub joint_positions: Vec<f64>,
    /// Left row front-to-back, then right row front-to-back.
    pub legs: Vec<Leg>,
    pub torso: BodyId,
}

impl RobotModel {
    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass).sum()
    }

    /// Revolute joints in network output order: legs as in [`Self::legs`],
    /// hip before knee within each leg.
    pub fn revolute_order(&self) -> Vec<JointId> {
        self.legs.iter().flat_map(|l| [l.hip, l.knee]).collect()
    }

    pub fn prismatic_joints(&self) -> Vec<JointId> {
        self.legs.iter().map(|l| l.slider).collect()
    }

    /// Torso-frame point of the front edge midpoint.
    pub fn front_marker_local(&self) -> Vector3<f64> {
        Vector3::new(self.kind.torso_length() / 2.0, 0.0, 0.0)
    }

    /// Height the torso must be lifted so the lowest vertex of any body
    /// rests exactly on `z = 0`.
    pub fn spawn_height(&self) -> f64 {
        let lowest = self
            .bodies
            .iter()
            .flat_map(|b| b.world_vertices())
            .map(|v| v.z)
            .fold(f64::INFINITY, f64::min);
        -lowest
    }

    /// Place the robot at its spawn height in a fresh world. Body and joint
    /// ids in the world equal those of the model.
    pub fn instantiate(&self, dt: f64, settings: SolverSettings) -> Result<World, MorphologyError> {
        let lift = Vector3::new(0.0, 0.0, self.spawn_height());
        let mut world = World::with_settings(dt, settings);
        for body in &self.bodies {
            let mut b = body.clone();
            b.position += lift;
            world.add_body(b)?;
        }
        for (spec, &q) in self.joints.iter().zip(&self.joint_positions) {
            world.add_joint_at(spec.clone(), q)?;
        }
        Ok(world)
    }
}

/// Joint targets of the resting pose plus the spawn height of the torso.
#[derive(Debug, Clone, PartialEq)]
pub struct RestingPose {
    pub revolute_targets: Vec<f64>,
    pub prismatic_targets: Vec<f64>,
    pub spawn_height: f64,
}

pub fn resting_pose(model: &RobotModel) -> RestingPose {
    RestingPose {
        revolute_targets: vec![0.0; model.kind.actuated_joints()],
        prismatic_targets: vec![model.extension; model.kind.legs()],
        spawn_height: model.spawn_height(),
    }
}

fn hip_offsets(kind: MorphKind) -> Vec<f64> {
    let per_side = kind.legs() / 2;
    let center = (per_side as f64 - 1.0) / 2.0;
    // Front (+x) first.
    (0..per_side).map(|i| (center - i as f64) * LEG_SPACING).collect()
}

pub fn build_robot(kind: MorphKind, extension: f64) -> Result<RobotModel, MorphologyError> {
    if !(0.0..=MAX_EXTENSION).contains(&extension) {
        return Err(MorphologyError::ExtensionOutOfRange(extension));
    }
    let mut bodies = vec![BodyState::new_box(
        Vector3::new(kind.torso_length() / 2.0, TORSO_WIDTH / 2.0, TORSO_THICKNESS / 2.0),
        kind.torso_mass(),
        Vector3::zeros(),
    )];
    let mut joints = Vec::new();
    let mut joint_positions = Vec::new();
    let mut legs = Vec::new();
    let torso = 0;

    let half_w = TORSO_WIDTH / 2.0;
    let coxa_half = Vector3::new(SEGMENT_WIDTH / 2.0, SEGMENT_LENGTH / 2.0, SEGMENT_THICKNESS / 2.0);
    let tibia_half = Vector3::new(SEGMENT_WIDTH / 2.0, SEGMENT_THICKNESS / 2.0, SEGMENT_LENGTH / 2.0);

    for side in [Side::Left, Side::Right] {
        let s = side.sign();
        for x in hip_offsets(kind) {
            let coxa_center = Vector3::new(x, s * (half_w + SEGMENT_LENGTH / 2.0), 0.0);
            let knee_point = Vector3::new(x, s * (half_w + SEGMENT_LENGTH), 0.0);
            let tibia_center = knee_point - Vector3::new(0.0, 0.0, SEGMENT_LENGTH / 2.0);
            let foot_center = tibia_center - Vector3::new(0.0, 0.0, extension);

            let coxa = bodies.len();
            bodies.push(BodyState::new_box(coxa_half, SEGMENT_MASS, coxa_center));
            let tibia = bodies.len();
            bodies.push(BodyState::new_box(tibia_half, SEGMENT_MASS, tibia_center));
            let foot = bodies.len();
            bodies.push(BodyState::new_box(tibia_half, SEGMENT_MASS, foot_center));

            let revolute = |parent: BodyId, child: BodyId, anchor: Vector3<f64>, axis: Vector3<f64>| JointSpec {
                kind: JointKind::Revolute,
                parent,
                child,
                anchor,
                axis,
                limit_lo: -REVOLUTE_LIMIT,
                limit_hi: REVOLUTE_LIMIT,
                p_gain: SERVO_P_GAIN,
                max_effort: REVOLUTE_MAX_TORQUE,
                target: 0.0,
            };
            // Axes are mirrored so a positive command means the same motion
            // (swing backwards, lift outwards) on both sides.
            let hip = joints.len();
            joints.push(revolute(
                torso,
                coxa,
                Vector3::new(x, s * half_w, 0.0),
                Vector3::new(0.0, 0.0, s),
            ));
            joint_positions.push(0.0);
            let knee = joints.len();
            joints.push(revolute(
                coxa,
                tibia,
                knee_point - coxa_center,
                Vector3::new(s, 0.0, 0.0),
            ));
            joint_positions.push(0.0);
            let slider = joints.len();
            joints.push(JointSpec {
                kind: JointKind::Prismatic,
                parent: tibia,
                child: foot,
                anchor: Vector3::zeros(),
                axis: -Vector3::z(),
                limit_lo: 0.0,
                limit_hi: MAX_EXTENSION,
                p_gain: SERVO_P_GAIN,
                max_effort: PRISMATIC_MAX_FORCE,
                target: extension,
            });
            joint_positions.push(extension);

            legs.push(Leg {
                side,
                x,
                segments: [coxa, tibia, foot],
                hip,
                knee,
                slider,
            });
        }
    }

    Ok(RobotModel {
        kind,
        extension,
        bodies,
        joints,
        joint_positions,
        legs,
        torso,
    })
}
