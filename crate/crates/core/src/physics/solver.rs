//! Projected Gauss-Seidel over scalar constraint rows.
//!
//! Every constraint (joint lock, motor, limit, contact normal, friction) is
//! reduced to one row `J·v = rhs` with an accumulated impulse clamped to
//! `[lo, hi]`. The two tangent rows of a contact are the exception: they are
//! solved together as a 2×2 block and clamped to a circular cone, so friction
//! does not depend on the choice of tangent basis. Rows are solved in a
//! fixed order, which makes a step a pure function of the world state.

use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Bounds {
    Fixed {
        lo: f64,
        hi: f64,
    },
    /// First tangent row of a contact. Together with the row that follows
    /// it, `|(λ₁, λ₂)| ≤ μ · λ_normal`, where the normal row is referenced by
    /// index.
    Friction {
        normal_row: usize,
        mu: f64,
    },
    /// Second tangent row; solved as part of the preceding `Friction` row.
    FrictionPartner,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum WarmSlot {
    Joint { joint: usize, row: usize },
    Contact { body: usize, vertex: usize, row: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub a: usize,
    pub b: Option<usize>,
    pub lin_a: Vector3<f64>,
    pub ang_a: Vector3<f64>,
    pub lin_b: Vector3<f64>,
    pub ang_b: Vector3<f64>,
    pub rhs: f64,
    pub bounds: Bounds,
    pub impulse: f64,
    pub slot: WarmSlot,
    /// Compliance relative to the effective mass; 0 for a rigid row.
    pub softness: f64,
    // Filled in by `prepare`.
    dlin_a: Vector3<f64>,
    dang_a: Vector3<f64>,
    dlin_b: Vector3<f64>,
    dang_b: Vector3<f64>,
    eff_mass: f64,
    /// Inverse of the tangent block `[k11 k12; k12 k22]` as (a, b, c) for
    /// `[a b; b c]`; only set on `Friction` rows.
    block_inv: [f64; 3],
}

impl Row {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: usize,
        b: Option<usize>,
        lin_a: Vector3<f64>,
        ang_a: Vector3<f64>,
        lin_b: Vector3<f64>,
        ang_b: Vector3<f64>,
        rhs: f64,
        bounds: Bounds,
        slot: WarmSlot,
    ) -> Self {
        Self {
            a,
            b,
            lin_a,
            ang_a,
            lin_b,
            ang_b,
            rhs,
            bounds,
            impulse: 0.0,
            slot,
            softness: 0.0,
            dlin_a: Vector3::zeros(),
            dang_a: Vector3::zeros(),
            dlin_b: Vector3::zeros(),
            dang_b: Vector3::zeros(),
            eff_mass: 0.0,
            block_inv: [0.0; 3],
        }
    }
}

impl Row {
    pub fn soft(mut self, softness: f64) -> Self {
        self.softness = softness;
        self
    }
}

/// Velocity buffers the solver works on.
#[derive(Debug, Clone, Default)]
pub(crate) struct VelocityState {
    pub v: Vec<Vector3<f64>>,
    pub w: Vec<Vector3<f64>>,
    pub inv_mass: Vec<f64>,
    pub inv_inertia: Vec<Matrix3<f64>>,
}

impl VelocityState {
    fn apply(&mut self, row: &Row, lambda: f64) {
        self.v[row.a] += row.dlin_a * lambda;
        self.w[row.a] += row.dang_a * lambda;
        if let Some(b) = row.b {
            self.v[b] += row.dlin_b * lambda;
            self.w[b] += row.dang_b * lambda;
        }
    }

    fn jv(&self, row: &Row) -> f64 {
        let mut s = row.lin_a.dot(&self.v[row.a]) + row.ang_a.dot(&self.w[row.a]);
        if let Some(b) = row.b {
            s += row.lin_b.dot(&self.v[b]) + row.ang_b.dot(&self.w[b]);
        }
        s
    }
}

/// Compute `M⁻¹Jᵀ` and the effective mass of every row.
pub(crate) fn prepare(rows: &mut [Row], vel: &VelocityState) {
    for row in rows.iter_mut() {
        row.dlin_a = row.lin_a * vel.inv_mass[row.a];
        row.dang_a = vel.inv_inertia[row.a] * row.ang_a;
        let mut k = row.lin_a.dot(&row.dlin_a) + row.ang_a.dot(&row.dang_a);
        if let Some(b) = row.b {
            row.dlin_b = row.lin_b * vel.inv_mass[b];
            row.dang_b = vel.inv_inertia[b] * row.ang_b;
            k += row.lin_b.dot(&row.dlin_b) + row.ang_b.dot(&row.dang_b);
        }
        row.eff_mass = if k > 1e-14 { 1.0 / k } else { 0.0 };
    }
    for i in 0..rows.len() {
        if let Bounds::Friction { .. } = rows[i].bounds {
            let (r1, r2) = (&rows[i], &rows[i + 1]);
            let k11 = coupling(r1, r1);
            let k12 = coupling(r1, r2);
            let k22 = coupling(r2, r2);
            let det = k11 * k22 - k12 * k12;
            rows[i].block_inv = if det > 1e-12 * k11 * k22 && det > 0.0 {
                [k22 / det, -k12 / det, k11 / det]
            } else {
                [0.0; 3]
            };
        }
    }
}

/// `J_p · M⁻¹ · J_qᵀ` for two rows acting on the same bodies; requires
/// `prepare` to have filled `q`.
fn coupling(p: &Row, q: &Row) -> f64 {
    let mut k = p.lin_a.dot(&q.dlin_a) + p.ang_a.dot(&q.dang_a);
    if let (Some(_), Some(_)) = (p.b, q.b) {
        k += p.lin_b.dot(&q.dlin_b) + p.ang_b.dot(&q.dang_b);
    }
    k
}

/// Scale `(x, y)` onto the disc of radius `limit` if it lies outside.
fn clamp_disc(x: f64, y: f64, limit: f64) -> (f64, f64) {
    let norm = x.hypot(y);
    if norm > limit {
        if norm > 0.0 {
            let s = limit.max(0.0) / norm;
            (x * s, y * s)
        } else {
            (0.0, 0.0)
        }
    } else {
        (x, y)
    }
}

/// Apply the rows' initial impulses (warm start), clamped to their bounds.
pub(crate) fn warm_start(rows: &mut [Row], vel: &mut VelocityState) {
    for i in 0..rows.len() {
        match rows[i].bounds {
            Bounds::Fixed { lo, hi } => {
                let lambda = rows[i].impulse.clamp(lo, hi);
                rows[i].impulse = lambda;
                if lambda != 0.0 {
                    vel.apply(&rows[i], lambda);
                }
            }
            Bounds::Friction { normal_row, mu } => {
                let limit = mu * rows[normal_row].impulse.max(0.0);
                let (l1, l2) = clamp_disc(rows[i].impulse, rows[i + 1].impulse, limit);
                rows[i].impulse = l1;
                rows[i + 1].impulse = l2;
                vel.apply(&rows[i], l1);
                vel.apply(&rows[i + 1], l2);
            }
            Bounds::FrictionPartner => {}
        }
    }
}

/// A row with nonzero softness settles at `J·v = rhs − softness·λ/m_eff`
/// (constraint force mixing scaled by the row's effective mass).
pub(crate) fn solve(rows: &mut [Row], vel: &mut VelocityState, iterations: usize) {
    for _ in 0..iterations {
        for i in 0..rows.len() {
            let (lo, hi) = match rows[i].bounds {
                Bounds::Fixed { lo, hi } => (lo, hi),
                Bounds::Friction { normal_row, mu } => {
                    solve_friction(rows, i, mu * rows[normal_row].impulse.max(0.0), vel);
                    continue;
                }
                Bounds::FrictionPartner => continue,
            };
            if rows[i].eff_mass == 0.0 {
                continue;
            }
            let row = &rows[i];
            let residual = row.rhs - vel.jv(row) - row.softness * row.impulse / row.eff_mass;
            let delta = row.eff_mass / (1.0 + row.softness) * residual;
            let old = row.impulse;
            let new = (old + delta).clamp(lo, hi);
            let applied = new - old;
            rows[i].impulse = new;
            if applied != 0.0 {
                vel.apply(&rows[i], applied);
            }
        }
    }
}

fn solve_friction(rows: &mut [Row], i: usize, limit: f64, vel: &mut VelocityState) {
    let [a, b, c] = rows[i].block_inv;
    if a == 0.0 && c == 0.0 {
        return;
    }
    let e1 = rows[i].rhs - vel.jv(&rows[i]);
    let e2 = rows[i + 1].rhs - vel.jv(&rows[i + 1]);
    let (old1, old2) = (rows[i].impulse, rows[i + 1].impulse);
    let (new1, new2) = clamp_disc(old1 + a * e1 + b * e2, old2 + b * e1 + c * e2, limit);
    rows[i].impulse = new1;
    rows[i + 1].impulse = new2;
    if new1 != old1 {
        vel.apply(&rows[i], new1 - old1);
    }
    if new2 != old2 {
        vel.apply(&rows[i + 1], new2 - old2);
    }
}
