use super::genome::{Genome, NodeRole, BIAS_NODE, INPUT_NODE};

/// Steepened symmetric sigmoid `2/(1 + e^(−4.9x)) − 1`, range (−1, 1).
pub fn activation(x: f64) -> f64 {
    2.0 / (1.0 + (-4.9 * x).exp()) - 1.0
}

/// Decoded phenotype with its activation state. Each call to
/// [`Network::activate`] is one synchronous step: every non-sensor node
/// applies the activation to the weighted sum of the previous step's
/// values, with the sensors holding the current input. A direct
/// input → output path therefore responds in the same step; each hidden
/// layer adds one step of delay.
#[derive(Debug, Clone)]
pub struct Network {
    /// (source index, target index, weight) in innovation order.
    links: Vec<(usize, usize, f64)>,
    input: usize,
    bias: usize,
    outputs: Vec<usize>,
    values: Vec<f64>,
    sums: Vec<f64>,
    out: Vec<f64>,
}

impl Network {
    /// Decode enabled connections only. Node ids map to dense indices in id
    /// order, so the result depends on structure, not on the id values.
    pub fn decode(genome: &Genome) -> Self {
        let index = |id| {
            genome
                .nodes
                .binary_search_by_key(&id, |n| n.id)
                .expect("connection references a missing node")
        };
        let links = genome
            .connections
            .iter()
            .filter(|c| c.enabled)
            .map(|c| (index(c.from), index(c.to), c.weight))
            .collect();
        let outputs: Vec<usize> = genome
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Output)
            .map(|(i, _)| i)
            .collect();
        let n = genome.nodes.len();
        Self {
            links,
            input: index(INPUT_NODE),
            bias: index(BIAS_NODE),
            out: vec![0.0; outputs.len()],
            outputs,
            values: vec![0.0; n],
            sums: vec![0.0; n],
        }
    }

    /// Zero all node activations.
    pub fn reset(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn activate(&mut self, input: f64) -> &[f64] {
        self.values[self.input] = input;
        self.values[self.bias] = 1.0;
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        for &(from, to, w) in &self.links {
            self.sums[to] += w * self.values[from];
        }
        for (i, v) in self.values.iter_mut().enumerate() {
            if i != self.input && i != self.bias {
                *v = activation(self.sums[i]);
            }
        }
        for (o, &i) in self.out.iter_mut().zip(&self.outputs) {
            *o = self.values[i];
        }
        &self.out
    }
}
