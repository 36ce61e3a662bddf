//! Shared fixtures for the criterion benchmarks.

use xorcast_core::bits::BitSet;
use xorcast_core::rng::{self, stream_rng};
use xorcast_core::state::{NeighborTable, NodeBuffer};

/// A mid-run single-hop-like neighborhood: the sender holds all `n`
/// symbols, every neighbor holds an independent ~`fill` fraction.
pub fn dense_neighborhood(n: usize, neighbors: usize, fill: f64, seed: u64) -> (NodeBuffer, NeighborTable) {
    let mut rng = stream_rng(seed, 0);
    let own = NodeBuffer {
        node: 0,
        recovered: BitSet::ones_set(n),
    };
    let entries = (0..neighbors)
        .map(|j| {
            let mut set = BitSet::zeros(n);
            for s in 0..n {
                if rng::bernoulli(&mut rng, fill) {
                    set.insert(s);
                }
            }
            (j + 1, set)
        })
        .collect();
    (own, NeighborTable::from_entries(entries))
}
