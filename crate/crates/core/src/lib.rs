//! Core library of the xorcast simulator: GF(2) coded packets, the
//! simple and Gauss-Jordan decoders, the five packet-selection
//! algorithms, scenario topologies, the round-based broadcast engine,
//! and metric aggregation.
//!
//! Everything is deterministic given a seed; see [`rng`] for the draw
//! contract.

pub mod algorithms;
pub mod bits;
pub mod codec;
pub mod engine;
pub mod metrics;
pub mod rng;
pub mod state;
pub mod topology;

pub use algorithms::{DegreeTable, SelectionOutcome};
pub use bits::BitSet;
pub use codec::{CodedPacket, CoefVector, GjDecoder, SymbolId};
pub use engine::{Algorithm, DecoderMode, Scenario, ScenarioConfig, Scheduling};
pub use metrics::{AggregateCurve, RunLog};
pub use state::{NeighborTable, NodeBuffer, NodeId};
pub use topology::Topology;
