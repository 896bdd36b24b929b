use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::innovation::InnovationDb;
use super::{NeatError, NeatParams};

pub type NodeId = u32;

/// Id of the single sensor node.
pub const INPUT_NODE: NodeId = 0;
pub const BIAS_NODE: NodeId = 1;
/// Output `i` has id `FIRST_OUTPUT + i`.
pub const FIRST_OUTPUT: NodeId = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Input,
    Bias,
    Hidden,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// Nodes are sorted by id and connections by innovation number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    #[serde(default)]
    pub species: Option<u32>,
}

impl Genome {
    /// One input, one bias and `outputs` output nodes, with {input, bias}
    /// fully connected to the outputs at weights drawn from `U(−r, r)`.
    pub fn minimal<R: Rng + ?Sized>(outputs: usize, db: &mut InnovationDb, rng: &mut R, weight_range: f64) -> Self {
        let mut nodes = vec![
            NodeGene {
                id: INPUT_NODE,
                role: NodeRole::Input,
            },
            NodeGene {
                id: BIAS_NODE,
                role: NodeRole::Bias,
            },
        ];
        nodes.extend((0..outputs as NodeId).map(|i| NodeGene {
            id: FIRST_OUTPUT + i,
            role: NodeRole::Output,
        }));
        let mut connections = Vec::with_capacity(2 * outputs);
        for from in [INPUT_NODE, BIAS_NODE] {
            for i in 0..outputs as NodeId {
                let to = FIRST_OUTPUT + i;
                connections.push(ConnectionGene {
                    innovation: db.connection(from, to),
                    from,
                    to,
                    weight: uniform(rng, weight_range),
                    enabled: true,
                });
            }
        }
        connections.sort_by_key(|c| c.innovation);
        Self {
            nodes,
            connections,
            species: None,
        }
    }

    pub fn output_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Output).count()
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Hidden).count()
    }

    pub fn has_node(&self, id: NodeId) -> bool {
        self.nodes.binary_search_by_key(&id, |n| n.id).is_ok()
    }

    pub fn connection(&self, innovation: u64) -> Option<&ConnectionGene> {
        self.connections
            .binary_search_by_key(&innovation, |c| c.innovation)
            .ok()
            .map(|i| &self.connections[i])
    }

    /// Structural checks: sorted unique ids, exactly one input and bias,
    /// fixed-node layout, and every connection between existing nodes and
    /// never into a sensor.
    pub fn validate(&self) -> Result<(), NeatError> {
        let bad = |m: String| Err(NeatError::InvalidGenome(m));
        if !self.nodes.windows(2).all(|w| w[0].id < w[1].id) {
            return bad("node ids not strictly increasing".into());
        }
        if !self.connections.windows(2).all(|w| w[0].innovation < w[1].innovation) {
            return bad("innovations not strictly increasing".into());
        }
        let outputs = self.output_count();
        for n in &self.nodes {
            let expected = match n.id {
                INPUT_NODE => NodeRole::Input,
                BIAS_NODE => NodeRole::Bias,
                id if id < FIRST_OUTPUT + outputs as NodeId => NodeRole::Output,
                _ => NodeRole::Hidden,
            };
            if n.role != expected {
                return bad(format!("node {} has role {:?}", n.id, n.role));
            }
        }
        if outputs == 0 || !self.has_node(INPUT_NODE) || !self.has_node(BIAS_NODE) {
            return bad("missing input, bias or outputs".into());
        }
        for c in &self.connections {
            if !self.has_node(c.from) || !self.has_node(c.to) {
                return bad(format!("connection {} references a missing node", c.innovation));
            }
            if c.to == INPUT_NODE || c.to == BIAS_NODE {
                return bad(format!("connection {} feeds a sensor", c.innovation));
            }
            if !c.weight.is_finite() {
                return bad(format!("connection {} has weight {}", c.innovation, c.weight));
            }
        }
        let mut pairs: Vec<(NodeId, NodeId)> = self.connections.iter().map(|c| (c.from, c.to)).collect();
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate endpoint pair".into());
        }
        Ok(())
    }

    /// Apply weight, add-node and add-connection mutations, each with its
    /// own probability.
    pub fn mutate<R: Rng + ?Sized>(&mut self, rng: &mut R, db: &mut InnovationDb, params: &NeatParams) {
        if rng.random_bool(params.weight_mutation_prob) {
            self.mutate_weights(rng, params);
        }
        if rng.random_bool(params.add_node_prob) {
            self.add_node(rng, db);
        }
        if rng.random_bool(params.add_connection_prob) {
            self.add_connection(rng, db, params.weight_init_range);
        }
    }

    pub fn mutate_weights<R: Rng + ?Sized>(&mut self, rng: &mut R, params: &NeatParams) {
        for c in &mut self.connections {
            let w = if rng.random_bool(params.weight_perturb_prob) {
                c.weight + uniform(rng, params.weight_perturb_power)
            } else {
                uniform(rng, params.weight_init_range)
            };
            c.weight = w.clamp(-params.max_weight, params.max_weight);
        }
    }

    /// Connect a random pair of unconnected nodes (recurrent links and
    /// self-loops allowed; sensors are never targets). Returns the new
    /// innovation, or `None` when the genome is fully connected.
    pub fn add_connection<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        db: &mut InnovationDb,
        weight_range: f64,
    ) -> Option<u64> {
        let mut existing: Vec<(NodeId, NodeId)> = self.connections.iter().map(|c| (c.from, c.to)).collect();
        existing.sort_unstable();
        let mut candidates = Vec::new();
        for from in &self.nodes {
            for to in &self.nodes {
                if matches!(to.role, NodeRole::Input | NodeRole::Bias) {
                    continue;
                }
                if existing.binary_search(&(from.id, to.id)).is_err() {
                    candidates.push((from.id, to.id));
                }
            }
        }
        if candidates.is_empty() {
            return None;
        }
        let (from, to) = candidates[rng.random_range(0..candidates.len())];
        let innovation = db.connection(from, to);
        self.insert_connection(ConnectionGene {
            innovation,
            from,
            to,
            weight: uniform(rng, weight_range),
            enabled: true,
        });
        Some(innovation)
    }

    /// Split a random enabled connection `a → b` of weight `w` into
    /// `a → h` (1.0) and `h → b` (w), disabling the original. Returns the
    /// new node, or `None` when no connection can be split.
    pub fn add_node<R: Rng + ?Sized>(&mut self, rng: &mut R, db: &mut InnovationDb) -> Option<NodeId> {
        // A connection whose recorded split node is already present (after
        // being re-enabled by crossover) cannot be split again.
        let candidates: Vec<usize> = (0..self.connections.len())
            .filter(|&i| {
                let c = &self.connections[i];
                c.enabled && db.existing_split(c.innovation).is_none_or(|s| !self.has_node(s.node))
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let i = candidates[rng.random_range(0..candidates.len())];
        let old = self.connections[i];
        self.connections[i].enabled = false;
        let split = db.split(old.innovation, old.from, old.to);
        let pos = self.nodes.partition_point(|n| n.id < split.node);
        self.nodes.insert(
            pos,
            NodeGene {
                id: split.node,
                role: NodeRole::Hidden,
            },
        );
        self.insert_connection(ConnectionGene {
            innovation: split.innovation_in,
            from: old.from,
            to: split.node,
            weight: 1.0,
            enabled: true,
        });
        self.insert_connection(ConnectionGene {
            innovation: split.innovation_out,
            from: split.node,
            to: old.to,
            weight: old.weight,
            enabled: true,
        });
        Some(split.node)
    }

    fn insert_connection(&mut self, c: ConnectionGene) {
        let pos = self.connections.partition_point(|x| x.innovation < c.innovation);
        debug_assert!(self.connections.get(pos).is_none_or(|x| x.innovation != c.innovation));
        self.connections.insert(pos, c);
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: f64) -> f64 {
    if range > 0.0 {
        rng.random_range(-range..range)
    } else {
        0.0
    }
}

/// Genes of two genomes aligned by innovation number.
enum Aligned<'a> {
    Matching(&'a ConnectionGene, &'a ConnectionGene),
    OnlyA(&'a ConnectionGene),
    OnlyB(&'a ConnectionGene),
}

fn align<'a>(a: &'a [ConnectionGene], b: &'a [ConnectionGene], mut f: impl FnMut(Aligned<'a>)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let order = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.innovation.cmp(&y.innovation),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match order {
            Ordering::Equal => {
                f(Aligned::Matching(&a[i], &b[j]));
                i += 1;
                j += 1;
            }
            Ordering::Less => {
                f(Aligned::OnlyA(&a[i]));
                i += 1;
            }
            Ordering::Greater => {
                f(Aligned::OnlyB(&b[j]));
                j += 1;
            }
        }
    }
}

/// `δ = c1·E/N + c2·D/N + c3·W̄`, with N the larger gene count (1 when both
/// genomes have fewer than 20 genes) and W̄ the mean absolute weight
/// difference of matching genes.
pub fn compatibility(g1: &Genome, g2: &Genome, c1: f64, c2: f64, c3: f64) -> f64 {
    let (a, b) = (&g1.connections, &g2.connections);
    let max_a = a.last().map(|c| c.innovation);
    let max_b = b.last().map(|c| c.innovation);
    let (mut excess, mut disjoint, mut matching) = (0usize, 0usize, 0usize);
    let mut weight_diff = 0.0;
    align(a, b, |gene| match gene {
        Aligned::Matching(x, y) => {
            matching += 1;
            weight_diff += (x.weight - y.weight).abs();
        }
        Aligned::OnlyA(x) => {
            if max_b.is_none_or(|m| x.innovation > m) {
                excess += 1;
            } else {
                disjoint += 1;
            }
        }
        Aligned::OnlyB(y) => {
            if max_a.is_none_or(|m| y.innovation > m) {
                excess += 1;
            } else {
                disjoint += 1;
            }
        }
    });
    let larger = a.len().max(b.len());
    let n = if a.len() < 20 && b.len() < 20 {
        1.0
    } else {
        larger as f64
    };
    let w_bar = if matching > 0 {
        weight_diff / matching as f64
    } else {
        0.0
    };
    c1 * excess as f64 / n + c2 * disjoint as f64 / n + c3 * w_bar
}

/// Child of `fitter` and `other`. Matching genes take their weight from a
/// random parent and, if disabled in either parent, are enabled with
/// probability `reenable_prob`. Disjoint and excess genes come from the
/// fitter parent, or from either parent with probability ½ each when
/// `equal_fitness`.
pub fn crossover<R: Rng + ?Sized>(
    fitter: &Genome,
    other: &Genome,
    equal_fitness: bool,
    reenable_prob: f64,
    rng: &mut R,
) -> Genome {
    let mut connections = Vec::with_capacity(fitter.connections.len().max(other.connections.len()));
    align(&fitter.connections, &other.connections, |gene| match gene {
        Aligned::Matching(x, y) => {
            let mut c = if rng.random_bool(0.5) { *x } else { *y };
            c.enabled = if x.enabled && y.enabled {
                true
            } else {
                rng.random_bool(reenable_prob)
            };
            connections.push(c);
        }
        Aligned::OnlyA(x) => {
            if !equal_fitness || rng.random_bool(0.5) {
                connections.push(*x);
            }
        }
        Aligned::OnlyB(y) => {
            if equal_fitness && rng.random_bool(0.5) {
                connections.push(*y);
            }
        }
    });
    let mut nodes: Vec<NodeGene> = fitter
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Hidden)
        .copied()
        .collect();
    for c in &connections {
        for id in [c.from, c.to] {
            if let Err(pos) = nodes.binary_search_by_key(&id, |n| n.id) {
                nodes.insert(
                    pos,
                    NodeGene {
                        id,
                        role: NodeRole::Hidden,
                    },
                );
            }
        }
    }
    Genome {
        nodes,
        connections,
        species: None,
    }
}
