use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::genome::NodeId;

/// Result of splitting a connection: the inserted node and the innovation
/// numbers of its incoming and outgoing connections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub node: NodeId,
    pub innovation_in: u64,
    pub innovation_out: u64,
}

/// Run-wide structural history. An endpoint pair always maps to the same
/// innovation number and a connection is always split into the same node,
/// which in particular holds within any single generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovationDb {
    #[serde(with = "pairs")]
    connections: BTreeMap<(NodeId, NodeId), u64>,
    splits: BTreeMap<u64, Split>,
    next_innovation: u64,
    next_node: NodeId,
}

impl InnovationDb {
    /// Empty history for genomes whose fixed nodes occupy ids `0..first_hidden`.
    pub fn new(first_hidden: NodeId) -> Self {
        Self {
            connections: BTreeMap::new(),
            splits: BTreeMap::new(),
            next_innovation: 0,
            next_node: first_hidden,
        }
    }

    pub fn connection(&mut self, from: NodeId, to: NodeId) -> u64 {
        let next = &mut self.next_innovation;
        *self.connections.entry((from, to)).or_insert_with(|| {
            let id = *next;
            *next += 1;
            id
        })
    }

    pub fn lookup(&self, from: NodeId, to: NodeId) -> Option<u64> {
        self.connections.get(&(from, to)).copied()
    }

    /// The split previously recorded for `innovation`, if any.
    pub fn existing_split(&self, innovation: u64) -> Option<Split> {
        self.splits.get(&innovation).copied()
    }

    /// Split connection `innovation` (from → to), allocating a node and two
    /// innovations the first time.
    pub fn split(&mut self, innovation: u64, from: NodeId, to: NodeId) -> Split {
        if let Some(s) = self.splits.get(&innovation) {
            return *s;
        }
        let node = self.next_node;
        self.next_node += 1;
        let s = Split {
            node,
            innovation_in: self.connection(from, node),
            innovation_out: self.connection(node, to),
        };
        self.splits.insert(innovation, s);
        s
    }

    pub fn innovation_count(&self) -> u64 {
        self.next_innovation
    }

    pub fn node_count(&self) -> NodeId {
        self.next_node
    }
}

/// JSON object keys must be strings, so the pair map is stored as a list.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::NodeId;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        from: NodeId,
        to: NodeId,
        innovation: u64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<(NodeId, NodeId), u64>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = map
            .iter()
            .map(|(&(from, to), &innovation)| Entry { from, to, innovation })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(NodeId, NodeId), u64>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| ((e.from, e.to), e.innovation)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_pair_same_innovation() {
        let mut db = InnovationDb::new(4);
        let a = db.connection(0, 2);
        let b = db.connection(1, 2);
        assert_ne!(a, b);
        assert_eq!(db.connection(0, 2), a);
        assert_eq!(db.lookup(1, 2), Some(b));
        assert_eq!(db.lookup(2, 1), None);
    }

    #[test]
    fn split_is_recorded_once() {
        let mut db = InnovationDb::new(4);
        let c = db.connection(0, 2);
        let s = db.split(c, 0, 2);
        assert_eq!(s.node, 4);
        assert_eq!(db.split(c, 0, 2), s);
        assert_eq!(db.node_count(), 5);
        assert_eq!(db.lookup(0, 4), Some(s.innovation_in));
        assert_eq!(db.lookup(4, 2), Some(s.innovation_out));
    }

    #[test]
    fn json_round_trip() {
        let mut db = InnovationDb::new(3);
        let c = db.connection(0, 2);
        db.split(c, 0, 2);
        let text = serde_json::to_string(&db).unwrap();
        assert_eq!(serde_json::from_str::<InnovationDb>(&text).unwrap(), db);
    }
}
