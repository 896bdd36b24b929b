//! Fixed-timestep rigid-body engine for articulated box chains.
//!
//! Bodies are boxes; joints are actuated revolute or prismatic servos;
//! the only collider besides the bodies is the ground plane `z = 0`.
//! Stepping is semi-implicit Euler with a sequential-impulse velocity
//! solver and Baumgarte position feedback. A step is a deterministic
//! function of the world: there is no hashing, threading or allocation
//! order dependence anywhere in the pipeline.

mod body;
mod contact;
mod joint;
mod solver;
mod world;

use thiserror::Error;

pub use body::{box_inertia, BodyId, BodyState};
pub use contact::{ContactPoint, MAX_CONTACTS_PER_BOX};
pub use joint::{Joint, JointId, JointKind, JointSpec};
pub use world::{SolverSettings, World, DEBUG_CSV_HEADER, DIVERGENCE_RADIUS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("simulation diverged at step {step}: body {body} is non-finite or out of bounds")]
    Diverged { body: BodyId, step: u64 },
    #[error("unknown joint id {0}")]
    UnknownJoint(JointId),
    #[error("unknown body id {0}")]
    UnknownBody(BodyId),
    #[error("invalid joint: {0}")]
    InvalidJoint(String),
    #[error("invalid body: {0}")]
    InvalidBody(String),
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use nalgebra::{UnitQuaternion, Vector3};

    use super::*;

    fn unit_box_world() -> (World, BodyId) {
        let mut w = World::new(0.005);
        let id = w
            .add_body(BodyState::new_box(
                Vector3::new(0.1, 0.05, 0.02),
                1.0,
                Vector3::new(0.0, 0.0, 0.02),
            ))
            .unwrap();
        (w, id)
    }

    #[test]
    fn free_fall_velocity_after_twenty_steps() {
        let mut w = World::new(0.005);
        w.add_body(BodyState::new_box(
            Vector3::repeat(0.1),
            1.0,
            Vector3::new(0.0, 0.0, 10.0),
        ))
        .unwrap();
        for _ in 0..20 {
            w.step().unwrap();
        }
        let vz = w.bodies()[0].linear_velocity.z;
        assert!((vz + 0.981).abs() < 1e-12, "vz = {vz}");
    }

    #[test]
    fn resting_box_touching_has_four_contacts() {
        let (w, _) = unit_box_world();
        let c = w.detect_contacts();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|c| c.penetration == 0.0));
    }

    #[test]
    fn elevated_box_has_no_contacts() {
        let (mut w, id) = unit_box_world();
        w.body_mut(id).unwrap().position.z = 1.0;
        assert!(w.detect_contacts().is_empty());
    }

    #[test]
    fn edge_contact_on_tilted_box() {
        let h: Vector3<f64> = Vector3::new(0.1, 0.05, 0.05);
        // 45° about x puts one edge (along x) lowest, at depth h·√2.
        let q = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_4);
        let z: f64 = (h.y * h.y + h.z * h.z).sqrt();
        let mut w = World::new(0.005);
        w.add_body(BodyState::new_box(h, 1.0, Vector3::new(0.0, 0.0, z)).with_orientation(q))
            .unwrap();
        let c = w.detect_contacts();
        assert_eq!(c.len(), 2);
        // Both contacts lie on the same edge, 0.2 m apart along x.
        assert!((c[0].point.x - c[1].point.x).abs() - 0.2 < 1e-12);
    }

    #[test]
    fn deep_box_caps_contact_count() {
        let (mut w, id) = unit_box_world();
        w.body_mut(id).unwrap().position.z = -1.0;
        assert_eq!(w.detect_contacts().len(), MAX_CONTACTS_PER_BOX);
    }

    #[test]
    fn resting_box_stays_put() {
        let (mut w, id) = unit_box_world();
        for _ in 0..200 {
            w.step().unwrap();
        }
        let b = w.body(id).unwrap();
        let max_pen = w.detect_contacts().iter().map(|c| c.penetration).fold(0.0, f64::max);
        assert!(max_pen <= 0.001, "penetration {max_pen}");
        assert!(b.linear_velocity.norm() <= 1e-3);
    }

    #[test]
    fn dropped_box_settles_within_slop() {
        let (mut w, id) = unit_box_world();
        w.body_mut(id).unwrap().position.z = 0.1;
        for _ in 0..400 {
            w.step().unwrap();
        }
        let max_pen = w.detect_contacts().iter().map(|c| c.penetration).fold(0.0, f64::max);
        assert!(max_pen <= 0.001 + 1e-9, "penetration {max_pen}");
        assert!(w.body(id).unwrap().linear_velocity.norm() <= 1e-3);
    }

    #[test]
    fn sliding_box_stops_under_friction() {
        let (mut w, id) = unit_box_world();
        w.body_mut(id).unwrap().linear_velocity = Vector3::new(1.0, 0.0, 0.0);
        for _ in 0..100 {
            w.step().unwrap();
        }
        let b = w.body(id).unwrap();
        // μ = 1: deceleration g, stopping distance v²/2g ≈ 0.051 m.
        assert!(b.linear_velocity.norm() < 1e-3);
        assert!((b.position.x - 1.0 / (2.0 * 9.81)).abs() < 0.01, "x = {}", b.position.x);
    }

    #[test]
    fn quaternions_stay_normalized() {
        let mut w = World::new(0.005);
        w.add_body(
            BodyState::new_box(Vector3::new(0.2, 0.1, 0.05), 1.0, Vector3::new(0.0, 0.0, 0.5))
                .with_orientation(UnitQuaternion::from_euler_angles(0.3, 0.2, 0.1)),
        )
        .unwrap();
        w.body_mut(0).unwrap().angular_velocity = Vector3::new(5.0, -3.0, 7.0);
        for _ in 0..400 {
            w.step().unwrap();
            let q = w.bodies()[0].orientation.quaternion();
            assert!((q.norm() - 1.0).abs() <= 1e-9);
        }
    }

    fn revolute(parent: BodyId, child: BodyId, anchor: Vector3<f64>, axis: Vector3<f64>) -> JointSpec {
        JointSpec {
            kind: JointKind::Revolute,
            parent,
            child,
            anchor,
            axis,
            limit_lo: -FRAC_PI_2,
            limit_hi: FRAC_PI_2,
            p_gain: 0.1,
            max_effort: 2.5,
            target: 0.0,
        }
    }

    #[test]
    fn set_target_clamps_and_validates() {
        let mut w = World::new(0.005);
        let a = w
            .add_body(BodyState::new_fixed_box(Vector3::repeat(0.1), 1.0, Vector3::zeros()))
            .unwrap();
        let b = w
            .add_body(BodyState::new_box(
                Vector3::repeat(0.1),
                1.0,
                Vector3::new(0.2, 0.0, 0.0),
            ))
            .unwrap();
        let j = w
            .add_joint(revolute(a, b, Vector3::new(0.1, 0.0, 0.0), Vector3::z()))
            .unwrap();
        assert_eq!(w.set_joint_target(j, 3.0).unwrap(), FRAC_PI_2);
        assert_eq!(w.set_joint_target(j, -3.0).unwrap(), -FRAC_PI_2);
        assert_eq!(w.set_joint_target(7, 0.0), Err(PhysicsError::UnknownJoint(7)));
    }

    #[test]
    fn zero_error_servo_commands_nothing() {
        let mut w = World::new(0.005);
        w.settings.ground_plane = false;
        w.gravity = Vector3::zeros();
        let a = w
            .add_body(BodyState::new_fixed_box(Vector3::repeat(0.1), 1.0, Vector3::zeros()))
            .unwrap();
        let b = w
            .add_body(BodyState::new_box(
                Vector3::repeat(0.1),
                1.0,
                Vector3::new(0.2, 0.0, 0.0),
            ))
            .unwrap();
        let j = w
            .add_joint(revolute(a, b, Vector3::new(0.1, 0.0, 0.0), Vector3::z()))
            .unwrap();
        assert_eq!(w.commanded_velocity(j).unwrap(), 0.0);
        for _ in 0..100 {
            w.step().unwrap();
        }
        assert!(w.joint_position(j).unwrap().abs() < 1e-12);
    }

    #[test]
    fn invalid_bodies_and_joints_rejected() {
        let mut w = World::new(0.005);
        assert!(w
            .add_body(BodyState::new_box(Vector3::repeat(0.1), 0.0, Vector3::zeros()))
            .is_err());
        let a = w
            .add_body(BodyState::new_box(Vector3::repeat(0.1), 1.0, Vector3::zeros()))
            .unwrap();
        assert_eq!(
            w.add_joint(revolute(a, 5, Vector3::zeros(), Vector3::z())),
            Err(PhysicsError::UnknownBody(5))
        );
        let mut bad = revolute(a, a, Vector3::zeros(), Vector3::z());
        assert!(w.add_joint(bad.clone()).is_err());
        bad.child = a;
        bad.target = 3.0;
        assert!(w.add_joint(bad).is_err());
    }

    #[test]
    fn divergence_is_reported_with_body() {
        let (mut w, id) = unit_box_world();
        w.body_mut(id).unwrap().linear_velocity = Vector3::new(f64::NAN, 0.0, 0.0);
        assert!(matches!(w.step(), Err(PhysicsError::Diverged { body: 0, .. })));
        let (mut w, id) = unit_box_world();
        w.body_mut(id).unwrap().position.x = 150.0;
        assert!(matches!(w.step(), Err(PhysicsError::Diverged { body: 0, .. })));
    }

    #[test]
    fn mechanical_energy_examples() {
        let mut w = World::new(0.005);
        w.add_body(BodyState::new_box(Vector3::repeat(0.1), 1.0, Vector3::zeros()))
            .unwrap();
        assert_eq!(w.mechanical_energy(), 0.0);
        w.body_mut(0).unwrap().position.z = 1.0;
        assert!((w.mechanical_energy() - 9.81).abs() < 1e-12);
        let mut w = World::new(0.005);
        w.add_body(BodyState::new_box(Vector3::repeat(0.1), 2.0, Vector3::zeros()))
            .unwrap();
        w.body_mut(0).unwrap().linear_velocity = Vector3::new(0.6, 0.8, 0.0);
        assert!((w.mechanical_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn debug_rows_have_nine_columns() {
        let (w, _) = unit_box_world();
        let mut buf = Vec::new();
        w.write_debug_rows(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim().split(',').count(), DEBUG_CSV_HEADER.split(',').count());
    }
}
