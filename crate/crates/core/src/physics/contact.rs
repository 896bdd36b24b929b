use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::body::{BodyId, BodyState};

/// Ground-plane contacts per box are capped at one face's worth.
pub const MAX_CONTACTS_PER_BOX: usize = 4;

/// Vertices this close above the plane still count as touching, so exact
/// resting configurations survive rounding in the vertex transform.
pub(crate) const TOUCH_TOLERANCE: f64 = 1e-9;

/// A box vertex touching or below the ground plane `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub body: BodyId,
    /// Which of the 8 box corners produced this contact.
    pub vertex: usize,
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub penetration: f64,
    pub friction: f64,
    pub restitution: f64,
}

/// Box-vs-ground contacts for one body, deepest first, at most
/// [`MAX_CONTACTS_PER_BOX`].
pub(crate) fn box_ground_contacts(
    id: BodyId,
    body: &BodyState,
    friction: f64,
    restitution: f64,
    out: &mut Vec<ContactPoint>,
) {
    if body.fixed {
        return;
    }
    // Early out on the bounding sphere.
    if body.position.z - body.half_extents.norm() > TOUCH_TOLERANCE {
        return;
    }
    let vertices = body.world_vertices();
    let mut touching: Vec<(usize, f64)> = vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| v.z <= TOUCH_TOLERANCE)
        .map(|(i, v)| (i, v.z))
        .collect();
    touching.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    touching.truncate(MAX_CONTACTS_PER_BOX);
    touching.sort_by_key(|t| t.0);
    for (vertex, z) in touching {
        out.push(ContactPoint {
            body: id,
            vertex,
            point: vertices[vertex],
            normal: Vector3::z(),
            penetration: (-z).max(0.0),
            friction,
            restitution,
        });
    }
}
