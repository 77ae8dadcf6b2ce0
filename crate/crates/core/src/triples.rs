//! Packed `⟨a, m, n⟩` keys and the flat tables indexed by them.

use rustc_hash::FxHashMap;

use crate::grammar::NtId;
use crate::graph::NodeId;

/// Key spaces up to this many triples use a dense array.
const DENSE_LIMIT: u64 = 1 << 24;

/// Packing of `(nonterminal, source, target)` into `a·|V|² + m·|V| + n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleSpace {
    nodes: u64,
    nonterminals: u64,
}

impl TripleSpace {
    pub fn new(nonterminals: usize, nodes: usize) -> Self {
        TripleSpace { nodes: nodes as u64, nonterminals: nonterminals as u64 }
    }

    pub fn size(&self) -> u64 {
        self.nonterminals * self.nodes * self.nodes
    }

    #[inline]
    pub fn pack(&self, a: NtId, m: NodeId, n: NodeId) -> u64 {
        (a.0 as u64 * self.nodes + m.0 as u64) * self.nodes + n.0 as u64
    }

    #[inline]
    pub fn unpack(&self, key: u64) -> (NtId, NodeId, NodeId) {
        let n = key % self.nodes;
        let rest = key / self.nodes;
        (NtId((rest / self.nodes) as u32), NodeId((rest % self.nodes) as u32), NodeId(n as u32))
    }

    /// Index of the `(nonterminal, node)` adjacency list.
    #[inline]
    pub fn pair(&self, a: NtId, m: NodeId) -> usize {
        (a.0 as u64 * self.nodes + m.0 as u64) as usize
    }

    pub fn pair_count(&self) -> usize {
        (self.nonterminals * self.nodes) as usize
    }
}

/// Map from packed key to a dense slot number.
#[derive(Debug, Clone)]
pub enum SlotMap {
    Dense(Vec<u32>),
    Sparse(FxHashMap<u64, u32>),
}

impl SlotMap {
    const EMPTY: u32 = u32::MAX;

    pub fn for_space(space: &TripleSpace) -> Self {
        if space.size() <= DENSE_LIMIT {
            SlotMap::Dense(vec![Self::EMPTY; space.size() as usize])
        } else {
            SlotMap::Sparse(FxHashMap::default())
        }
    }

    #[inline]
    pub fn get(&self, key: u64) -> Option<u32> {
        match self {
            SlotMap::Dense(v) => match v[key as usize] {
                Self::EMPTY => None,
                s => Some(s),
            },
            SlotMap::Sparse(m) => m.get(&key).copied(),
        }
    }

    #[inline]
    pub fn contains(&self, key: u64) -> bool {
        self.get(key).is_some()
    }

    /// Assigns `slot` to a key that has none yet.
    #[inline]
    pub fn insert(&mut self, key: u64, slot: u32) {
        debug_assert!(slot != Self::EMPTY);
        match self {
            SlotMap::Dense(v) => v[key as usize] = slot,
            SlotMap::Sparse(m) => {
                m.insert(key, slot);
            }
        }
    }
}
