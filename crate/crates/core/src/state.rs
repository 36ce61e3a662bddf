//! Per-node buffers and the neighbor-knowledge set algebra every selection
//! algorithm operates on.
//!
//! For a coding node x with buffer `B_x` and neighbors j with buffers
//! `B_j`, the selectors need three queries:
//!
//! * `missing_for(j)`: the symbols of `B_x` that j lacks,
//! * `recoverers(C)`: neighbors missing exactly one symbol of `C` (they
//!   can immediately decode the XOR of `C`),
//! * `holders(C)`: neighbors already holding every symbol of `C`.
//!
//! Buffers are bit vectors over the run's symbol universe, so all three
//! reduce to word-parallel masking and popcounts.

use crate::bits::BitSet;
use thiserror::Error;

/// Node identifier within one simulation run.
pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("node {0} is not a neighbor")]
    UnknownNeighbor(NodeId),
}

/// A node's recovered-symbol set. Under full decoding this holds only
/// fully decoded symbols, never undecoded innovative rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeBuffer {
    pub node: NodeId,
    pub recovered: BitSet,
}

impl NodeBuffer {
    pub fn new(node: NodeId, n_symbols: usize) -> Self {
        NodeBuffer {
            node,
            recovered: BitSet::zeros(n_symbols),
        }
    }

    pub fn with_symbols(node: NodeId, n_symbols: usize, symbols: &[usize]) -> Self {
        NodeBuffer {
            node,
            recovered: BitSet::from_indices(n_symbols, symbols),
        }
    }
}

/// The coding node's view of each neighbor's recovered set.
///
/// Entries are kept sorted by neighbor id. Under the perfect-feedback
/// model (the only one here) the engine rebuilds the table from ground
/// truth before every selection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeighborTable {
    entries: Vec<(NodeId, BitSet)>,
}

impl NeighborTable {
    pub fn new() -> Self {
        NeighborTable::default()
    }

    /// Builds a table from (neighbor id, recovered set) pairs; sorts by id.
    pub fn from_entries(mut entries: Vec<(NodeId, BitSet)>) -> Self {
        entries.sort_by_key(|(id, _)| *id);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0), "duplicate neighbor id");
        NeighborTable { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &BitSet)> {
        self.entries.iter().map(|(id, set)| (*id, set))
    }

    pub fn get(&self, j: NodeId) -> Option<&BitSet> {
        self.entries
            .binary_search_by_key(&j, |(id, _)| *id)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Positional access for the selection inner loops.
    pub(crate) fn set_at(&self, idx: usize) -> &BitSet {
        &self.entries[idx].1
    }

    pub(crate) fn id_at(&self, idx: usize) -> NodeId {
        self.entries[idx].0
    }

    /// `B̄_j`: symbols of `own` the neighbor j is missing.
    pub fn missing_for(&self, own: &NodeBuffer, j: NodeId) -> Result<BitSet, StateError> {
        let b_j = self.get(j).ok_or(StateError::UnknownNeighbor(j))?;
        let mut missing = own.recovered.clone();
        missing.subtract(b_j);
        Ok(missing)
    }

    /// `R(C)`: neighbors missing exactly one symbol of `C`, ascending ids.
    pub fn recoverers(&self, combined: &BitSet) -> Vec<NodeId> {
        self.entries
            .iter()
            .filter(|(_, b_j)| combined.count_missing_from(b_j) == 1)
            .map(|(id, _)| *id)
            .collect()
    }

    /// `R*(C)`: neighbors holding every symbol of `C`, ascending ids.
    pub fn holders(&self, combined: &BitSet) -> Vec<NodeId> {
        self.entries
            .iter()
            .filter(|(_, b_j)| combined.is_subset_of(b_j))
            .map(|(id, _)| *id)
            .collect()
    }
}
