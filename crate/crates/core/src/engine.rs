//! Round-based broadcast simulation: scheduling, physical-layer broadcast
//! over an ideal collision-free MAC, independent per-receiver erasures in
//! the single-hop scenario, perfect feedback, and decoder dispatch.
//!
//! Two scenario families:
//!
//! * single-hop: one source holding every symbol broadcasts to its
//!   receivers over independent erasure channels; only the source
//!   transmits, feedback is free and instantaneous.
//! * multi-hop: every node generates one symbol and relays; each node gets
//!   one transmission opportunity per round, links are lossless.
//!
//! Every scheme starts with an uncoded pass over the original symbols; see
//! [`initial_phase`]. A selection that comes back empty is skipped and
//! consumes nothing.
//!
//! RNG streams (all derived from the run seed, see [`crate::rng`]): one
//! per node for selection draws, one for the erasure channel (consumed per
//! receiver in ascending id order per transmission), one for scheduling
//! shuffles, one for topology construction and mobility.

use crate::algorithms::{
    self, AlgorithmError, DegreeTable, SelectionOutcome, SystematicPhase,
};
use crate::bits::BitSet;
use crate::codec::{self, CodedPacket, GjDecoder, SymbolId};
use crate::metrics::{Delivery, NodeLog, RunLog};
use crate::rng::{self, Rng};
use crate::state::{NeighborTable, NodeBuffer, NodeId};
use crate::topology::{self, Topology, TopologyError, MOBILE_ARENA_SCALE};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const TAG_TOPOLOGY: u64 = 1;
const TAG_CHANNEL: u64 = 2;
const TAG_SCHEDULER: u64 = 3;
const TAG_NODE_BASE: u64 = 0x1000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
}

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        concat!("unknown ", stringify!($name), " '{}' (expected one of: {})"),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

str_enum!(Scenario {
    SingleHop => "single_hop",
    Grid => "grid",
    Random => "random",
    Clustered => "clustered",
    Mobile => "mobile",
});

str_enum!(Algorithm {
    SystematicRlnc => "systematic_rlnc",
    Anc => "anc",
    Opportunistic => "opportunistic",
    Greedy => "greedy",
    Equalizing => "equalizing",
});

str_enum!(DecoderMode {
    Simple => "simple",
    Full => "full",
});

str_enum!(Scheduling {
    Sequential => "sequential",
    Random => "random",
});

impl Scenario {
    pub fn is_single_hop(&self) -> bool {
        matches!(self, Scenario::SingleHop)
    }
}

/// Knobs for the multi-hop graph builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyParams {
    /// Expected neighbors per node for the geometric scenarios.
    pub target_degree: f64,
    pub k_clusters: usize,
    pub bridges_per_pair: usize,
    /// Seconds of movement per transmission round.
    pub mobility_dt: f64,
    /// Base arena side for the mobile scenario (meters). Together with the
    /// density-derived radius this sets how fast neighborhoods turn over
    /// relative to transmission rounds; at walking speeds a compact arena
    /// is needed for mobility to mix knowledge within a dissemination run
    /// (the default makes a node's displacement per round comparable to
    /// the communication radius).
    pub mobile_arena_m: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            target_degree: 8.0,
            k_clusters: 10,
            bridges_per_pair: 1,
            mobility_dt: 1.0,
            mobile_arena_m: 20.0,
        }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub decoder: DecoderMode,
    /// Receiver count in single-hop (the source is extra); node count in
    /// multi-hop.
    pub n_nodes: usize,
    pub n_symbols: usize,
    /// Per-receiver erasure probability; single-hop only.
    pub erasure_p: f64,
    pub scheduling: Scheduling,
    /// Truncates every selection to its first `cap` symbols.
    pub degree_cap: Option<usize>,
    pub seed: u64,
    pub max_rounds: usize,
    pub topology: TopologyParams,
    /// Explicit `(r, D(r))` overrides on the default degree table.
    pub degree_overrides: Vec<(usize, usize)>,
    /// Record per-delivery coefficient index lists in the log
    /// (test instrumentation; inflates logs).
    pub record_coefs: bool,
}

impl ScenarioConfig {
    /// Reference-scale defaults for the given combination.
    pub fn preset(scenario: Scenario, algorithm: Algorithm, decoder: DecoderMode) -> Self {
        ScenarioConfig {
            scenario,
            algorithm,
            decoder,
            n_nodes: 100,
            n_symbols: 100,
            erasure_p: if scenario.is_single_hop() { 0.5 } else { 0.0 },
            scheduling: Scheduling::Sequential,
            degree_cap: None,
            seed: 0,
            max_rounds: if scenario.is_single_hop() { 5_000 } else { 2_000 },
            topology: TopologyParams::default(),
            degree_overrides: Vec::new(),
            record_coefs: false,
        }
    }

    /// True when the two configs differ at most in their seed, i.e. they
    /// are samples of the same experiment.
    pub fn same_experiment(&self, other: &ScenarioConfig) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.seed = 0;
        b.seed = 0;
        a == b
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |msg: String| Err(EngineError::InvalidConfig(msg));
        if self.n_nodes == 0 || self.n_symbols == 0 {
            return fail("need at least one node and one symbol".into());
        }
        if !(0.0..=1.0).contains(&self.erasure_p) {
            return fail(format!("erasure probability {} outside [0,1]", self.erasure_p));
        }
        if self.max_rounds == 0 {
            return fail("max_rounds must be positive".into());
        }
        if self.degree_cap == Some(0) {
            return fail("degree cap must be at least 1".into());
        }
        if !self.scenario.is_single_hop() {
            if self.n_symbols != self.n_nodes {
                return fail(format!(
                    "multi-hop runs need one symbol per node (got {} symbols, {} nodes)",
                    self.n_symbols, self.n_nodes
                ));
            }
            if self.erasure_p != 0.0 {
                return fail("multi-hop links are lossless; erasure applies to single_hop only".into());
            }
        }
        if self.scenario == Scenario::Grid {
            let side = (self.n_nodes as f64).sqrt().round() as usize;
            if side * side != self.n_nodes {
                return fail(format!("grid scenario needs a square node count, got {}", self.n_nodes));
            }
        }
        Ok(())
    }
}

/// The uncoded pass every scheme starts with: `(transmitter, symbol)`
/// pairs. Single-hop: the source sends each symbol once, in order.
/// Multi-hop: each node sends its own symbol in its first transmission
/// opportunity.
pub fn initial_phase(config: &ScenarioConfig) -> Vec<(NodeId, SymbolId)> {
    if config.scenario.is_single_hop() {
        (0..config.n_symbols).map(|k| (0, k)).collect()
    } else {
        (0..config.n_nodes).map(|i| (i, i)).collect()
    }
}

struct NodeRuntime {
    buffer: NodeBuffer,
    gj: Option<GjDecoder>,
    rng: Rng,
    tracked: bool,
    sent_initial: bool,
    initial_recovered: u32,
    deliveries: Vec<Delivery>,
    packet_symbols: Vec<Vec<u16>>,
    completed_at: Option<u32>,
}

impl NodeRuntime {
    fn new(
        node: NodeId,
        n_symbols: usize,
        initial: &[SymbolId],
        decoder: DecoderMode,
        tracked: bool,
        seed: u64,
    ) -> Self {
        let buffer = NodeBuffer::with_symbols(node, n_symbols, initial);
        let gj = match decoder {
            DecoderMode::Simple => None,
            DecoderMode::Full => {
                let mut gj = GjDecoder::new(n_symbols);
                for &s in initial {
                    gj.insert(&codec::xor_combine(n_symbols, [s]).expect("unit vector"))
                        .expect("dimensions match");
                }
                Some(gj)
            }
        };
        let initial_recovered = initial.len() as u32;
        let completed_at = (initial.len() == n_symbols).then_some(0);
        NodeRuntime {
            buffer,
            gj,
            rng: rng::stream_rng(seed, TAG_NODE_BASE + node as u64),
            tracked,
            sent_initial: false,
            initial_recovered,
            deliveries: Vec::new(),
            packet_symbols: Vec::new(),
            completed_at,
        }
    }

    fn is_complete(&self, n_symbols: usize) -> bool {
        self.buffer.recovered.count_ones() == n_symbols
    }

    /// Processes one received packet under the configured decoder.
    fn deliver(&mut self, packet: &CodedPacket, mode: DecoderMode, record: bool) {
        let n = packet.coef.len();
        let decoded_new = match mode {
            DecoderMode::Simple => match codec::simple_decode(&self.buffer.recovered, packet) {
                Some(s) => {
                    self.buffer.recovered.insert(s);
                    true
                }
                None => false,
            },
            DecoderMode::Full => {
                let gj = self.gj.as_mut().expect("full decoder present");
                let outcome = gj.insert(packet).expect("dimensions match");
                for &s in &outcome.newly_decoded {
                    self.buffer.recovered.insert(s);
                }
                !outcome.newly_decoded.is_empty()
            }
        };
        self.deliveries.push(Delivery {
            degree: codec::degree(packet) as u32,
            recovered_after: self.buffer.recovered.count_ones() as u32,
            decoded_new,
        });
        if record {
            self.packet_symbols
                .push(packet.coef.ones().map(|s| s as u16).collect());
        }
        if self.completed_at.is_none() && self.is_complete(n) {
            self.completed_at = Some(self.deliveries.len() as u32);
        }
    }

    fn into_log(self) -> NodeLog {
        NodeLog {
            node: self.buffer.node,
            tracked: self.tracked,
            initial_recovered: self.initial_recovered,
            deliveries: self.deliveries,
            completed_at_received: self.completed_at,
            packet_symbols: self.packet_symbols,
        }
    }
}

/// Runs one selection for `tx` against the freshly rebuilt neighbor table
/// and applies the degree cap.
fn select(
    config: &ScenarioConfig,
    node: &mut NodeRuntime,
    table: &NeighborTable,
    degrees: &DegreeTable,
    past_initial_phase: bool,
) -> SelectionOutcome {
    let own = &node.buffer;
    let rng = &mut node.rng;
    let mut outcome = match config.algorithm {
        Algorithm::Opportunistic => algorithms::opportunistic_select(own, table, rng),
        Algorithm::Greedy => algorithms::greedy_select(own, table, rng),
        Algorithm::Equalizing => algorithms::equalizing_select(own, table, rng),
        Algorithm::Anc => algorithms::anc_select(own, table, degrees, rng),
        Algorithm::SystematicRlnc => {
            debug_assert!(past_initial_phase);
            algorithms::systematic_rlnc_select(own, SystematicPhase::Coded, table, rng)
        }
    };
    if let Some(cap) = config.degree_cap {
        if outcome.combined.len() > cap {
            outcome.combined.truncate(cap);
            let coef = BitSet::from_indices(config.n_symbols, &outcome.combined);
            outcome.immediate_recoverers = table.recoverers(&coef);
        }
    }
    outcome
}

/// Round-0 adjacency of the configured scenario, for debugging dumps.
pub fn initial_adjacency(config: &ScenarioConfig) -> Result<topology::Adjacency, EngineError> {
    config.validate()?;
    let mut topo_rng = rng::stream_rng(config.seed, TAG_TOPOLOGY);
    Ok(build_topology(config, &mut topo_rng)?.adjacency().clone())
}

/// Executes one full simulation run.
pub fn run(config: &ScenarioConfig) -> Result<RunLog, EngineError> {
    config.validate()?;
    let mut topo_rng = rng::stream_rng(config.seed, TAG_TOPOLOGY);
    let topology = build_topology(config, &mut topo_rng)?;
    let degrees = DegreeTable::with_overrides(config.n_symbols, &config.degree_overrides)?;
    if config.scenario.is_single_hop() {
        run_single_hop(config, topology, &degrees)
    } else {
        run_multi_hop(config, topology, topo_rng, &degrees)
    }
}

fn build_topology(config: &ScenarioConfig, topo_rng: &mut Rng) -> Result<Topology, EngineError> {
    let params = &config.topology;
    Ok(match config.scenario {
        Scenario::SingleHop => topology::build_star(config.n_nodes),
        Scenario::Grid => {
            let side = (config.n_nodes as f64).sqrt().round() as usize;
            topology::build_grid(side, side)?
        }
        Scenario::Random => {
            topology::build_random_geometric(config.n_nodes, params.target_degree, topo_rng)?
        }
        Scenario::Clustered => {
            topology::build_clustered(
                config.n_nodes,
                params.k_clusters,
                params.bridges_per_pair,
                topo_rng,
            )?
            .topology
        }
        Scenario::Mobile => {
            let n = config.n_nodes as f64;
            let base = params.mobile_arena_m;
            let radius =
                (params.target_degree * base * base / (std::f64::consts::PI * n)).sqrt();
            let side = base * MOBILE_ARENA_SCALE;
            Topology::Mobile(topology::MobilityModel::new(
                config.n_nodes,
                side,
                radius,
                params.mobility_dt,
                topo_rng,
            ))
        }
    })
}

fn run_single_hop(
    config: &ScenarioConfig,
    topology: Topology,
    degrees: &DegreeTable,
) -> Result<RunLog, EngineError> {
    let n = config.n_symbols;
    let mut channel_rng = rng::stream_rng(config.seed, TAG_CHANNEL);
    let all_symbols: Vec<SymbolId> = (0..n).collect();

    // node 0 is the source and is excluded from the metrics
    let mut nodes: Vec<NodeRuntime> = Vec::with_capacity(config.n_nodes + 1);
    nodes.push(NodeRuntime::new(0, n, &all_symbols, config.decoder, false, config.seed));
    for id in 1..=config.n_nodes {
        nodes.push(NodeRuntime::new(id, n, &[], config.decoder, true, config.seed));
    }

    let plan = initial_phase(config);
    let mut plan_cursor = 0usize;
    let mut rounds = 0usize;
    let mut completion_round = None;

    while rounds < config.max_rounds && completion_round.is_none() {
        let combined: Vec<SymbolId> = if plan_cursor < plan.len() {
            let (_, symbol) = plan[plan_cursor];
            plan_cursor += 1;
            vec![symbol]
        } else {
            // perfect feedback: the table always reflects ground truth
            let table = NeighborTable::from_entries(
                (1..=config.n_nodes)
                    .map(|id| (id, nodes[id].buffer.recovered.clone()))
                    .collect(),
            );
            let source = &mut nodes[0];
            let outcome = select(config, source, &table, degrees, true);
            if outcome.is_empty() {
                // nothing useful to send; the opportunity is skipped
                rounds += 1;
                continue;
            }
            outcome.combined
        };

        let packet = codec::xor_combine(n, combined.iter().copied()).expect("nonempty selection");
        // independent erasure per receiver, drawn in ascending id order
        for receiver in &mut nodes[1..] {
            let erased = rng::bernoulli(&mut channel_rng, config.erasure_p);
            if !erased {
                receiver.deliver(&packet, config.decoder, config.record_coefs);
            }
        }
        rounds += 1;
        if nodes[1..].iter().all(|nd| nd.is_complete(n)) {
            completion_round = Some(rounds);
        }
    }

    Ok(assemble_log(config, nodes, Vec::new(), Vec::new(), rounds, completion_round, topology))
}

fn run_multi_hop(
    config: &ScenarioConfig,
    mut topology: Topology,
    mut topo_rng: Rng,
    degrees: &DegreeTable,
) -> Result<RunLog, EngineError> {
    let n = config.n_symbols;
    let mut sched_rng = rng::stream_rng(config.seed, TAG_SCHEDULER);

    let plan = initial_phase(config);
    let mut nodes: Vec<NodeRuntime> = (0..config.n_nodes)
        .map(|id| NodeRuntime::new(id, n, &[plan[id].1], config.decoder, true, config.seed))
        .collect();

    let mut order: Vec<NodeId> = (0..config.n_nodes).collect();
    let mut rounds = 0usize;
    let mut completion_round = None;
    let mut potential_mean = Vec::new();
    let mut potential_raw = Vec::new();

    while rounds < config.max_rounds && completion_round.is_none() {
        if config.scheduling == Scheduling::Random {
            rng::shuffle(&mut sched_rng, &mut order);
        }
        for &tx in &order {
            let neighbors = topology.adjacency().neighbors_of(tx);
            if neighbors.is_empty() {
                continue;
            }
            let combined: Vec<SymbolId> = if !nodes[tx].sent_initial {
                nodes[tx].sent_initial = true;
                vec![plan[tx].1]
            } else {
                let table = NeighborTable::from_entries(
                    neighbors
                        .iter()
                        .map(|&j| (j, nodes[j].buffer.recovered.clone()))
                        .collect(),
                );
                let outcome = select(config, &mut nodes[tx], &table, degrees, true);
                if outcome.is_empty() {
                    continue;
                }
                outcome.combined
            };
            let packet =
                codec::xor_combine(n, combined.iter().copied()).expect("nonempty selection");
            for &rx in neighbors {
                nodes[rx].deliver(&packet, config.decoder, config.record_coefs);
            }
        }

        // end-of-round information-potential sample
        let buffers: Vec<&BitSet> = nodes.iter().map(|nd| &nd.buffer.recovered).collect();
        let adj = topology.adjacency();
        let raw: Vec<Option<f64>> = (0..config.n_nodes)
            .map(|i| crate::metrics::information_potential(adj, &buffers, i).map(|(_, m)| m))
            .collect();
        let present: Vec<f64> = raw.iter().filter_map(|v| *v).collect();
        potential_mean.push(if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        });
        potential_raw.push(raw);

        rounds += 1;
        if nodes.iter().all(|nd| nd.is_complete(n)) {
            completion_round = Some(rounds);
        }
        topology.step(&mut topo_rng);
    }

    Ok(assemble_log(config, nodes, potential_mean, potential_raw, rounds, completion_round, topology))
}

fn assemble_log(
    config: &ScenarioConfig,
    nodes: Vec<NodeRuntime>,
    potential_mean_per_round: Vec<f64>,
    potential_raw_per_round: Vec<Vec<Option<f64>>>,
    rounds_executed: usize,
    completion_round: Option<usize>,
    _topology: Topology,
) -> RunLog {
    let complete = completion_round.is_some();
    RunLog {
        config: config.clone(),
        nodes: nodes.into_iter().map(NodeRuntime::into_log).collect(),
        potential_mean_per_round,
        potential_raw_per_round,
        rounds_executed,
        completion_round,
        complete,
    }
}
