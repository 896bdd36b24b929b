use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Index of a body inside a [`World`](super::World).
pub type BodyId = usize;

/// Box vertex sign pattern, indexed 0..8. Contact warm-start data is keyed
/// by this index, so the order must never change.
pub(crate) const BOX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [1.0, 1.0, 1.0],
];

/// State of one box-shaped rigid body.
///
/// Position is the center of mass, which coincides with the box center.
/// The inertia tensor is expressed in the body frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub mass: f64,
    pub inertia_tensor: Matrix3<f64>,
    pub half_extents: Vector3<f64>,
    /// Fixed bodies have infinite effective mass and never move.
    pub fixed: bool,
}

impl BodyState {
    /// Solid box of uniform density at rest with identity orientation.
    pub fn new_box(half_extents: Vector3<f64>, mass: f64, position: Vector3<f64>) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            mass,
            inertia_tensor: box_inertia(half_extents, mass),
            half_extents,
            fixed: false,
        }
    }

    pub fn new_fixed_box(half_extents: Vector3<f64>, mass: f64, position: Vector3<f64>) -> Self {
        Self {
            fixed: true,
            ..Self::new_box(half_extents, mass, position)
        }
    }

    pub fn with_orientation(mut self, orientation: UnitQuaternion<f64>) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn inverse_mass(&self) -> f64 {
        if self.fixed {
            0.0
        } else {
            1.0 / self.mass
        }
    }

    /// World-frame inverse inertia, `R I⁻¹ Rᵀ`.
    pub fn inverse_inertia_world(&self) -> Matrix3<f64> {
        if self.fixed {
            return Matrix3::zeros();
        }
        let r = self.orientation.to_rotation_matrix();
        let inv = self.inertia_tensor.try_inverse().unwrap_or_else(Matrix3::zeros);
        r.matrix() * inv * r.matrix().transpose()
    }

    pub fn inertia_world(&self) -> Matrix3<f64> {
        let r = self.orientation.to_rotation_matrix();
        r.matrix() * self.inertia_tensor * r.matrix().transpose()
    }

    /// Transform a body-frame point to world frame.
    pub fn to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * local
    }

    pub fn to_local(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (world - self.position)
    }

    /// World-frame velocity of a material point given by its world position.
    pub fn point_velocity(&self, world_point: &Vector3<f64>) -> Vector3<f64> {
        self.linear_velocity + self.angular_velocity.cross(&(world_point - self.position))
    }

    /// The 8 box corners in world frame, ordered as [`BOX_CORNERS`].
    pub fn world_vertices(&self) -> [Vector3<f64>; 8] {
        let mut out = [Vector3::zeros(); 8];
        for (slot, sign) in out.iter_mut().zip(BOX_CORNERS.iter()) {
            let local = Vector3::new(
                sign[0] * self.half_extents.x,
                sign[1] * self.half_extents.y,
                sign[2] * self.half_extents.z,
            );
            *slot = self.to_world(&local);
        }
        out
    }

    pub fn kinetic_energy(&self) -> f64 {
        if self.fixed {
            return 0.0;
        }
        let w = self.angular_velocity;
        0.5 * self.mass * self.linear_velocity.norm_squared() + 0.5 * w.dot(&(self.inertia_world() * w))
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.linear_velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
    }
}

/// Body-frame inertia tensor of a solid box.
pub fn box_inertia(half_extents: Vector3<f64>, mass: f64) -> Matrix3<f64> {
    let (x, y, z) = (2.0 * half_extents.x, 2.0 * half_extents.y, 2.0 * half_extents.z);
    let k = mass / 12.0;
    Matrix3::from_diagonal(&Vector3::new(
        k * (y * y + z * z),
        k * (x * x + z * z),
        k * (x * x + y * y),
    ))
}
