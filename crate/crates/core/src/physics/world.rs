use std::io::Write;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::body::{BodyId, BodyState};
use super::contact::{box_ground_contacts, ContactPoint};
use super::joint::{Joint, JointId, JointKind, JointSpec, ROWS_PER_JOINT, ROW_LIMIT, ROW_MOTOR};
use super::solver::{self, Bounds, Row, VelocityState, WarmSlot};
use super::PhysicsError;

/// Positions beyond this radius are treated as a diverged simulation.
pub const DIVERGENCE_RADIUS: f64 = 100.0;

/// Limit rows are only generated this close to a limit (rad or m).
const LIMIT_MARGIN: f64 = 0.02;

/// Approach speeds below this do not trigger restitution.
const RESTITUTION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub iterations: usize,
    /// Penetration tolerated without positional correction (m).
    pub contact_slop: f64,
    /// Fraction of positional error corrected per step.
    pub baumgarte: f64,
    pub friction: f64,
    pub restitution: f64,
    pub warm_starting: bool,
    /// Softness of the joint alignment rows (everything but revolute pivots,
    /// motors and limits), relative to each row's effective mass. Keeps
    /// long chains of light segments from limit-cycling under PGS.
    pub softness: f64,
    pub ground_plane: bool,
    /// Time base of the servo law `v = P·(target − q)/servo_dt`. `None`
    /// means the physics step.
    pub servo_dt: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            iterations: 16,
            contact_slop: 0.001,
            baumgarte: 0.2,
            friction: 1.0,
            restitution: 0.0,
            warm_starting: true,
            softness: 0.03,
            ground_plane: true,
            servo_dt: None,
        }
    }
}

/// Contact warm-start impulses for one box: (normal, tangent x, tangent y)
/// per vertex.
type ContactCache = [[f64; 3]; 8];

#[derive(Debug, Clone)]
pub struct World {
    pub gravity: Vector3<f64>,
    pub dt: f64,
    pub settings: SolverSettings,
    bodies: Vec<BodyState>,
    joints: Vec<Joint>,
    contact_cache: Vec<ContactCache>,
    steps: u64,
    rows: Vec<Row>,
    vel: VelocityState,
    contacts: Vec<ContactPoint>,
}

impl World {
    pub fn new(dt: f64) -> Self {
        Self::with_settings(dt, SolverSettings::default())
    }

    pub fn with_settings(dt: f64, settings: SolverSettings) -> Self {
        Self {
            gravity: Vector3::new(0.0, 0.0, -9.81),
            dt,
            settings,
            bodies: Vec::new(),
            joints: Vec::new(),
            contact_cache: Vec::new(),
            steps: 0,
            rows: Vec::new(),
            vel: VelocityState::default(),
            contacts: Vec::new(),
        }
    }

    pub fn add_body(&mut self, body: BodyState) -> Result<BodyId, PhysicsError> {
        if !(body.mass > 0.0 && body.mass.is_finite()) {
            return Err(PhysicsError::InvalidBody("mass must be positive".into()));
        }
        if body.inertia_tensor.cholesky().is_none() {
            return Err(PhysicsError::InvalidBody(
                "inertia tensor must be positive definite".into(),
            ));
        }
        self.bodies.push(body);
        self.contact_cache.push([[0.0; 3]; 8]);
        Ok(self.bodies.len() - 1)
    }

    /// Attach a joint treating the current poses as joint position zero.
    pub fn add_joint(&mut self, spec: JointSpec) -> Result<JointId, PhysicsError> {
        self.add_joint_at(spec, 0.0)
    }

    /// Attach a joint whose current position is `position`.
    pub fn add_joint_at(&mut self, spec: JointSpec, position: f64) -> Result<JointId, PhysicsError> {
        let n = self.bodies.len();
        if spec.parent >= n {
            return Err(PhysicsError::UnknownBody(spec.parent));
        }
        if spec.child >= n {
            return Err(PhysicsError::UnknownBody(spec.child));
        }
        if spec.parent == spec.child {
            return Err(PhysicsError::InvalidJoint("parent and child coincide".into()));
        }
        if !(spec.limit_lo <= spec.target && spec.target <= spec.limit_hi) {
            return Err(PhysicsError::InvalidJoint(
                "target must lie within the joint limits".into(),
            ));
        }
        if spec.max_effort.is_nan() || spec.max_effort <= 0.0 {
            return Err(PhysicsError::InvalidJoint("max_effort must be positive".into()));
        }
        if spec.axis.norm() < 1e-12 {
            return Err(PhysicsError::InvalidJoint("axis must be non-zero".into()));
        }
        let joint = Joint::attach(
            spec.clone(),
            &self.bodies[spec.parent],
            &self.bodies[spec.child],
            position,
        );
        self.joints.push(joint);
        Ok(self.joints.len() - 1)
    }

    /// Set a servo target, clamped to the joint limits. Returns the target
    /// actually stored.
    pub fn set_joint_target(&mut self, id: JointId, target: f64) -> Result<f64, PhysicsError> {
        let joint = self.joints.get_mut(id).ok_or(PhysicsError::UnknownJoint(id))?;
        let clamped = target.clamp(joint.spec.limit_lo, joint.spec.limit_hi);
        joint.spec.target = clamped;
        Ok(clamped)
    }

    pub fn joint_position(&self, id: JointId) -> Result<f64, PhysicsError> {
        let joint = self.joints.get(id).ok_or(PhysicsError::UnknownJoint(id))?;
        Ok(joint.position(&self.bodies[joint.spec.parent], &self.bodies[joint.spec.child]))
    }

    /// Servo velocity the motor of `id` would command at the current state.
    pub fn commanded_velocity(&self, id: JointId) -> Result<f64, PhysicsError> {
        let q = self.joint_position(id)?;
        let spec = &self.joints[id].spec;
        Ok(spec.p_gain * (spec.target - q) / self.servo_dt())
    }

    pub fn body(&self, id: BodyId) -> Option<&BodyState> {
        self.bodies.get(id)
    }

    pub fn body_mut(&mut self, id: BodyId) -> Option<&mut BodyState> {
        self.bodies.get_mut(id)
    }

    pub fn bodies(&self) -> &[BodyState] {
        &self.bodies
    }

    pub fn joint(&self, id: JointId) -> Option<&Joint> {
        self.joints.get(id)
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    fn servo_dt(&self) -> f64 {
        self.settings.servo_dt.unwrap_or(self.dt)
    }

    /// Box-vs-ground contacts for the current state. Link-link contacts are
    /// never generated.
    pub fn detect_contacts(&self) -> Vec<ContactPoint> {
        let mut out = Vec::new();
        self.collect_contacts(&mut out);
        out
    }

    fn collect_contacts(&self, out: &mut Vec<ContactPoint>) {
        out.clear();
        if !self.settings.ground_plane {
            return;
        }
        for (id, body) in self.bodies.iter().enumerate() {
            box_ground_contacts(id, body, self.settings.friction, self.settings.restitution, out);
        }
    }

    /// Kinetic plus gravitational potential energy of all non-fixed bodies,
    /// with zero potential at the ground plane.
    pub fn mechanical_energy(&self) -> f64 {
        self.bodies
            .iter()
            .filter(|b| !b.fixed)
            .map(|b| b.kinetic_energy() - b.mass * self.gravity.dot(&b.position))
            .sum()
    }

    fn check_finite(&self) -> Result<(), PhysicsError> {
        for (id, b) in self.bodies.iter().enumerate() {
            if !b.is_finite() || b.position.norm() > DIVERGENCE_RADIUS {
                return Err(PhysicsError::Diverged {
                    body: id,
                    step: self.steps,
                });
            }
        }
        Ok(())
    }

    /// Advance one symplectic-Euler step of length `dt`.
    pub fn step(&mut self) -> Result<(), PhysicsError> {
        self.check_finite()?;
        let dt = self.dt;

        // Servo commands are computed from the pre-step configuration.
        let servo_dt = self.servo_dt();
        let commands: Vec<f64> = self
            .joints
            .iter()
            .map(|j| {
                let q = j.position(&self.bodies[j.spec.parent], &self.bodies[j.spec.child]);
                j.spec.p_gain * (j.spec.target - q) / servo_dt
            })
            .collect();

        self.vel.v.clear();
        self.vel.w.clear();
        self.vel.inv_mass.clear();
        self.vel.inv_inertia.clear();
        for b in &self.bodies {
            let inv_m = b.inverse_mass();
            let v = if b.fixed {
                Vector3::zeros()
            } else {
                b.linear_velocity + self.gravity * dt
            };
            self.vel.v.push(v);
            self.vel
                .w
                .push(if b.fixed { Vector3::zeros() } else { b.angular_velocity });
            self.vel.inv_mass.push(inv_m);
            self.vel.inv_inertia.push(b.inverse_inertia_world());
        }

        let mut contacts = std::mem::take(&mut self.contacts);
        self.collect_contacts(&mut contacts);

        let mut rows = std::mem::take(&mut self.rows);
        rows.clear();
        for (id, joint) in self.joints.iter().enumerate() {
            self.joint_rows(id, joint, commands[id], &mut rows);
        }
        for c in &contacts {
            self.contact_rows(c, &mut rows);
        }

        if self.settings.warm_starting {
            for row in rows.iter_mut() {
                row.impulse = match row.slot {
                    WarmSlot::Joint { joint, row: r } => self.joints[joint].warm[r],
                    WarmSlot::Contact { body, vertex, row: r } => self.contact_cache[body][vertex][r],
                };
            }
        }

        solver::prepare(&mut rows, &self.vel);
        solver::warm_start(&mut rows, &mut self.vel);
        solver::solve(&mut rows, &mut self.vel, self.settings.iterations.max(1));

        for j in self.joints.iter_mut() {
            j.warm = [0.0; ROWS_PER_JOINT];
            j.last_motor_impulse = 0.0;
        }
        for cache in self.contact_cache.iter_mut() {
            *cache = [[0.0; 3]; 8];
        }
        for row in &rows {
            match row.slot {
                WarmSlot::Joint { joint, row: r } => {
                    self.joints[joint].warm[r] = row.impulse;
                    if r == ROW_MOTOR {
                        let j = &mut self.joints[joint];
                        debug_assert!(
                            row.impulse.abs() <= j.spec.max_effort * dt * (1.0 + 1e-12),
                            "motor impulse exceeds effort clamp"
                        );
                        j.last_motor_impulse = row.impulse;
                    }
                }
                WarmSlot::Contact { body, vertex, row: r } => {
                    self.contact_cache[body][vertex][r] = row.impulse;
                }
            }
        }
        self.rows = rows;
        self.contacts = contacts;

        for (i, b) in self.bodies.iter_mut().enumerate() {
            if b.fixed {
                continue;
            }
            b.linear_velocity = self.vel.v[i];
            b.angular_velocity = self.vel.w[i];
            b.position += b.linear_velocity * dt;
            let spin = UnitQuaternion::from_scaled_axis(b.angular_velocity * dt);
            b.orientation = UnitQuaternion::new_normalize((spin * b.orientation).into_inner());
        }
        self.steps += 1;
        self.check_finite()
    }

    fn joint_rows(&self, id: JointId, joint: &Joint, command: f64, rows: &mut Vec<Row>) {
        let (pa, pb) = (joint.spec.parent, joint.spec.child);
        let parent = &self.bodies[pa];
        let child = &self.bodies[pb];
        let beta = self.settings.baumgarte / self.dt;
        let anchor_a = parent.to_world(&joint.spec.anchor);
        let anchor_b = child.to_world(&joint.anchor_child);
        let r_a = anchor_a - parent.position;
        let r_b = anchor_b - child.position;
        let axis = parent.orientation * joint.axis_parent.into_inner();
        let perps = joint.perp_parent.map(|p| parent.orientation * p);
        // Lock rows follow the parent frame so the row set, and thus the
        // Gauss-Seidel order, rotates with the robot.
        let frame = [Vector3::x(), Vector3::y(), Vector3::z()].map(|e| parent.orientation * e);
        let slot = |row: usize| WarmSlot::Joint { joint: id, row };
        let free = Bounds::Fixed {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        };
        let zero = Vector3::zeros();
        let d = anchor_b - anchor_a;
        let position = joint.position(parent, child);
        let soft = self.settings.softness;

        // Rows acting along `dir` at the joint: angular for revolute joints,
        // linear (sliding) for prismatic ones.
        let drive = |dir: Vector3<f64>| -> (Vector3<f64>, Vector3<f64>, Vector3<f64>, Vector3<f64>) {
            match joint.spec.kind {
                JointKind::Revolute => (zero, -dir, zero, dir),
                JointKind::Prismatic => (-dir, -(r_a + d).cross(&dir), dir, r_b.cross(&dir)),
            }
        };

        let effort = joint.spec.max_effort * self.dt;
        if joint.spec.p_gain > 0.0 {
            let (la, aa, lb, ab) = drive(axis);
            rows.push(Row::new(
                pa,
                Some(pb),
                la,
                aa,
                lb,
                ab,
                command,
                Bounds::Fixed {
                    lo: -effort,
                    hi: effort,
                },
                slot(ROW_MOTOR),
            ));
        }

        let to_lo = position - joint.spec.limit_lo;
        let to_hi = joint.spec.limit_hi - position;
        if to_lo.min(to_hi) < LIMIT_MARGIN {
            let (gap, sign) = if to_lo <= to_hi { (to_lo, 1.0) } else { (to_hi, -1.0) };
            let rhs = if gap >= 0.0 { -gap / self.dt } else { -beta * gap };
            let (la, aa, lb, ab) = drive(axis * sign);
            rows.push(Row::new(
                pa,
                Some(pb),
                la,
                aa,
                lb,
                ab,
                rhs,
                Bounds::Fixed {
                    lo: 0.0,
                    hi: f64::INFINITY,
                },
                slot(ROW_LIMIT),
            ));
        }

        match joint.spec.kind {
            JointKind::Revolute => {
                for (k, e) in frame.into_iter().enumerate() {
                    rows.push(Row::new(
                        pa,
                        Some(pb),
                        -e,
                        -r_a.cross(&e),
                        e,
                        r_b.cross(&e),
                        -beta * d.dot(&e),
                        free,
                        slot(k),
                    ));
                }
                let child_axis = (child.orientation * joint.rest_relative.inverse()) * joint.axis_parent.into_inner();
                let misalign = axis.cross(&child_axis);
                for (k, u) in perps.iter().enumerate() {
                    rows.push(
                        Row::new(
                            pa,
                            Some(pb),
                            zero,
                            -u,
                            zero,
                            *u,
                            -beta * misalign.dot(u),
                            free,
                            slot(3 + k),
                        )
                        .soft(soft),
                    );
                }
            }
            JointKind::Prismatic => {
                let mut q = joint.relative_error(parent, child);
                if q.scalar() < 0.0 {
                    q = UnitQuaternion::new_unchecked(-q.into_inner());
                }
                let err = q.imag() * 2.0;
                for (k, e) in frame.into_iter().enumerate() {
                    rows.push(Row::new(pa, Some(pb), zero, -e, zero, e, -beta * err.dot(&e), free, slot(k)).soft(soft));
                }
                for (k, u) in perps.iter().enumerate() {
                    rows.push(
                        Row::new(
                            pa,
                            Some(pb),
                            -u,
                            -(r_a + d).cross(u),
                            *u,
                            r_b.cross(u),
                            -beta * d.dot(u),
                            free,
                            slot(3 + k),
                        )
                        .soft(soft),
                    );
                }
            }
        }
    }

    fn contact_rows(&self, c: &ContactPoint, rows: &mut Vec<Row>) {
        let body = &self.bodies[c.body];
        let r = c.point - body.position;
        let zero = Vector3::zeros();
        let n = c.normal;
        let mut rhs = self.settings.baumgarte / self.dt * (c.penetration - self.settings.contact_slop).max(0.0);
        if c.restitution > 0.0 {
            let vn = (self.vel.v[c.body] + self.vel.w[c.body].cross(&r)).dot(&n);
            if vn < -RESTITUTION_THRESHOLD {
                rhs = rhs.max(-c.restitution * vn);
            }
        }
        let slot = |row: usize| WarmSlot::Contact {
            body: c.body,
            vertex: c.vertex,
            row,
        };
        let normal_row = rows.len() + 2;
        for (k, t) in [Vector3::x(), Vector3::y()].into_iter().enumerate() {
            rows.push(Row::new(
                c.body,
                None,
                t,
                r.cross(&t),
                zero,
                zero,
                0.0,
                if k == 0 {
                    Bounds::Friction {
                        normal_row,
                        mu: c.friction,
                    }
                } else {
                    Bounds::FrictionPartner
                },
                slot(1 + k),
            ));
        }
        rows.push(Row::new(
            c.body,
            None,
            n,
            r.cross(&n),
            zero,
            zero,
            rhs,
            Bounds::Fixed {
                lo: 0.0,
                hi: f64::INFINITY,
            },
            slot(0),
        ));
    }

    /// One CSV row per body: `step,body_id,x,y,z,qw,qx,qy,qz`.
    pub fn write_debug_rows<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for (id, b) in self.bodies.iter().enumerate() {
            let q = b.orientation.quaternion();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.steps, id, b.position.x, b.position.y, b.position.z, q.w, q.i, q.j, q.k
            )?;
        }
        Ok(())
    }
}

pub const DEBUG_CSV_HEADER: &str = "step,body_id,x,y,z,qw,qx,qy,qz";
