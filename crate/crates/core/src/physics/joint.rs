use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::body::{BodyId, BodyState};

pub type JointId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Actuated joint description. Anchor and axis are given in the parent body
/// frame; limits and target are in radians (revolute) or meters (prismatic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub kind: JointKind,
    pub parent: BodyId,
    pub child: BodyId,
    pub anchor: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub limit_lo: f64,
    pub limit_hi: f64,
    pub p_gain: f64,
    /// N·m for revolute joints, N for prismatic joints.
    pub max_effort: f64,
    pub target: f64,
}

/// Solver-side joint: its [`JointSpec`] plus the child-frame data captured when the
/// joint was attached, and warm-start impulses from the previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub spec: JointSpec,
    pub(crate) axis_parent: Unit<Vector3<f64>>,
    pub(crate) perp_parent: [Vector3<f64>; 2],
    pub(crate) anchor_child: Vector3<f64>,
    /// Child orientation relative to the parent at joint position zero.
    pub(crate) rest_relative: UnitQuaternion<f64>,
    pub(crate) warm: [f64; ROWS_PER_JOINT],
    pub(crate) last_motor_impulse: f64,
}

pub(crate) const ROWS_PER_JOINT: usize = 7;
pub(crate) const ROW_MOTOR: usize = 5;
pub(crate) const ROW_LIMIT: usize = 6;

impl Joint {
    /// Attach a joint whose current position (angle or displacement) is
    /// `position` given the current body poses.
    pub(crate) fn attach(spec: JointSpec, parent: &BodyState, child: &BodyState, position: f64) -> Self {
        let axis_parent = Unit::new_normalize(spec.axis);
        let perp_parent = perpendicular_basis(&axis_parent);
        let anchor_world = parent.to_world(&spec.anchor);
        let axis_world = parent.orientation * axis_parent.into_inner();
        let (anchor_child, rest_relative) = match spec.kind {
            JointKind::Revolute => {
                let twist = UnitQuaternion::from_axis_angle(&axis_parent, position);
                let rel = twist.inverse() * parent.orientation.inverse() * child.orientation;
                (child.to_local(&anchor_world), rel)
            }
            JointKind::Prismatic => {
                let rel = parent.orientation.inverse() * child.orientation;
                (child.to_local(&(anchor_world + axis_world * position)), rel)
            }
        };
        Self {
            spec,
            axis_parent,
            perp_parent,
            anchor_child,
            rest_relative,
            warm: [0.0; ROWS_PER_JOINT],
            last_motor_impulse: 0.0,
        }
    }

    /// Rotation taking the parent's rest-aligned frame onto the child, in
    /// world frame. Identity when the joint is at zero with no misalignment.
    pub(crate) fn relative_error(&self, parent: &BodyState, child: &BodyState) -> UnitQuaternion<f64> {
        child.orientation * self.rest_relative.inverse() * parent.orientation.inverse()
    }

    /// Joint angle (revolute) or displacement along the axis (prismatic).
    pub fn position(&self, parent: &BodyState, child: &BodyState) -> f64 {
        let axis_world = parent.orientation * self.axis_parent.into_inner();
        match self.spec.kind {
            JointKind::Revolute => {
                let q = self.relative_error(parent, child);
                let mut v = q.imag();
                let mut w = q.scalar();
                if w < 0.0 {
                    v = -v;
                    w = -w;
                }
                2.0 * v.dot(&axis_world).atan2(w)
            }
            JointKind::Prismatic => {
                let pa = parent.to_world(&self.spec.anchor);
                let pb = child.to_world(&self.anchor_child);
                (pb - pa).dot(&axis_world)
            }
        }
    }

    /// Anchor point in the child body frame.
    pub fn anchor_child(&self) -> Vector3<f64> {
        self.anchor_child
    }

    /// Motor impulse applied during the last step; bounded by
    /// `max_effort · dt`.
    pub fn last_motor_impulse(&self) -> f64 {
        self.last_motor_impulse
    }
}

/// Two unit vectors completing `axis` to a right-handed orthonormal basis.
pub(crate) fn perpendicular_basis(axis: &Unit<Vector3<f64>>) -> [Vector3<f64>; 2] {
    let a = axis.into_inner();
    let helper = if a.x.abs() < 0.57 { Vector3::x() } else { Vector3::y() };
    let u = a.cross(&helper).normalize();
    let v = a.cross(&u);
    [u, v]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: JointKind) -> JointSpec {
        JointSpec {
            kind,
            parent: 0,
            child: 1,
            anchor: Vector3::new(0.5, 0.0, 0.0),
            axis: Vector3::z(),
            limit_lo: -1.0,
            limit_hi: 1.0,
            p_gain: 0.1,
            max_effort: 1.0,
            target: 0.0,
        }
    }

    #[test]
    fn revolute_position_reads_rotation_about_axis() {
        let parent = BodyState::new_box(Vector3::repeat(0.5), 1.0, Vector3::zeros());
        let child = BodyState::new_box(Vector3::repeat(0.5), 1.0, Vector3::new(1.0, 0.0, 0.0));
        let mut j = Joint::attach(spec(JointKind::Revolute), &parent, &child, 0.0);
        let mut rotated = child.clone();
        rotated.orientation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.3);
        assert!((j.position(&parent, &rotated) - 0.3).abs() < 1e-12);
        j = Joint::attach(spec(JointKind::Revolute), &parent, &rotated, 0.3);
        assert!((j.position(&parent, &rotated) - 0.3).abs() < 1e-12);
        assert!(j.position(&parent, &child).abs() < 1e-12);
    }

    #[test]
    fn prismatic_position_reads_offset() {
        let parent = BodyState::new_box(Vector3::repeat(0.5), 1.0, Vector3::zeros());
        let child = BodyState::new_box(Vector3::repeat(0.5), 1.0, Vector3::new(0.0, 0.0, 0.2));
        let j = Joint::attach(spec(JointKind::Prismatic), &parent, &child, 0.2);
        assert!((j.position(&parent, &child) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_basis_is_orthonormal() {
        for a in [Vector3::x(), Vector3::y(), Vector3::z(), Vector3::new(1.0, 2.0, -3.0)] {
            let axis = Unit::new_normalize(a);
            let [u, v] = perpendicular_basis(&axis);
            assert!(u.dot(&axis).abs() < 1e-12 && v.dot(&axis).abs() < 1e-12);
            assert!(u.dot(&v).abs() < 1e-12);
            assert!((u.norm() - 1.0).abs() < 1e-12 && (v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
