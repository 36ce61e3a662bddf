//! Metric traces and their aggregation across nodes and seeded runs.
//!
//! Four metrics: recovery rate (symbols recovered vs. packets received),
//! average codeword degree, packet delay (received packets that decoded
//! nothing new, counted up to each node's completion), and neighborhood
//! information potential (symbols a neighbor holds that the node lacks).
//!
//! Aggregate curves carry 95% normal-approximation confidence half-widths
//! computed over per-run means; runs are the independent unit, nodes
//! within a run are not.

use crate::bits::BitSet;
use crate::engine::ScenarioConfig;
use crate::state::NodeId;
use crate::topology::Adjacency;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("log set is empty")]
    EmptyLogSet,
    #[error("logs come from different experiment configurations")]
    MixedConfigs,
}

/// One received packet as seen by one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub degree: u32,
    /// Recovered-symbol count after processing this packet.
    pub recovered_after: u32,
    /// Whether the packet immediately yielded at least one new symbol.
    pub decoded_new: bool,
}

/// Per-node trace for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLog {
    pub node: NodeId,
    /// False for nodes excluded from metrics (the single-hop source).
    pub tracked: bool,
    pub initial_recovered: u32,
    pub deliveries: Vec<Delivery>,
    /// Received count at which the node first held every symbol.
    pub completed_at_received: Option<u32>,
    /// Coefficient index lists per delivery; populated only when the run
    /// was configured to record them (test instrumentation).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub packet_symbols: Vec<Vec<u16>>,
}

impl NodeLog {
    /// Recovered count after `received` packets, carrying the last
    /// observation forward past the end of the trace.
    pub fn recovered_at(&self, received: usize) -> u32 {
        if received == 0 || self.deliveries.is_empty() {
            return if received == 0 {
                self.initial_recovered
            } else {
                self.deliveries
                    .last()
                    .map_or(self.initial_recovered, |d| d.recovered_after)
            };
        }
        let idx = received.min(self.deliveries.len());
        self.deliveries[idx - 1].recovered_after
    }

    /// Packets that decoded nothing new, counted up to completion.
    /// `None` when the node never completed (censored).
    pub fn delay(&self) -> Option<u32> {
        let completed = self.completed_at_received? as usize;
        Some(
            self.deliveries[..completed]
                .iter()
                .filter(|d| !d.decoded_new)
                .count() as u32,
        )
    }
}

/// Complete trace of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: ScenarioConfig,
    pub nodes: Vec<NodeLog>,
    /// Mean information potential over non-isolated nodes, one entry per
    /// executed round (multi-hop scenarios only).
    pub potential_mean_per_round: Vec<f64>,
    /// Raw per-node potential samples per round; `None` marks an isolated
    /// node that round.
    pub potential_raw_per_round: Vec<Vec<Option<f64>>>,
    pub rounds_executed: usize,
    /// Round count at which every tracked node had completed.
    pub completion_round: Option<usize>,
    pub complete: bool,
}

impl RunLog {
    pub fn tracked_nodes(&self) -> impl Iterator<Item = &NodeLog> {
        self.nodes.iter().filter(|n| n.tracked)
    }

    /// Received-packet count at which the slowest tracked node completed;
    /// `None` if any tracked node never completed.
    pub fn full_recovery_point(&self) -> Option<u32> {
        self.tracked_nodes()
            .map(|n| n.completed_at_received)
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().max().unwrap_or(0))
    }

    /// Mean per-node completion point over tracked nodes; `None` if any
    /// tracked node never completed.
    pub fn mean_completion_point(&self) -> Option<f64> {
        let points: Option<Vec<u32>> = self
            .tracked_nodes()
            .map(|n| n.completed_at_received)
            .collect();
        points.map(|v| v.iter().map(|&x| x as f64).sum::<f64>() / v.len().max(1) as f64)
    }
}

/// A metric as a function of an integer axis (received packets or round),
/// aggregated over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub x: Vec<u64>,
    pub mean: Vec<f64>,
    /// 95% confidence half-width over per-run means.
    pub ci_half: Vec<f64>,
    /// Total number of (node, run) samples behind each point.
    pub n_samples: Vec<u64>,
}

impl AggregateCurve {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean at the given axis value, if present.
    pub fn mean_at(&self, x: u64) -> Option<f64> {
        self.x.iter().position(|&v| v == x).map(|i| self.mean[i])
    }

    pub fn max_mean(&self) -> f64 {
        self.mean.iter().copied().fold(0.0, f64::max)
    }
}

fn check_homogeneous(logs: &[RunLog]) -> Result<(), MetricsError> {
    if logs.is_empty() {
        return Err(MetricsError::EmptyLogSet);
    }
    let first = &logs[0].config;
    if logs.iter().any(|l| !l.config.same_experiment(first)) {
        return Err(MetricsError::MixedConfigs);
    }
    Ok(())
}

/// Mean and 95% normal-approximation CI half-width over independent
/// samples (one per run); the half-width is 0 with fewer than two.
pub fn mean_ci95(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

/// Recovered symbols as a function of packets received, averaged over all
/// tracked (node, run) samples with last-observation carry-forward.
pub fn recovery_curve(logs: &[RunLog]) -> Result<AggregateCurve, MetricsError> {
    check_homogeneous(logs)?;
    let max_x = logs
        .iter()
        .flat_map(|l| l.tracked_nodes().map(|n| n.deliveries.len()))
        .max()
        .unwrap_or(0);
    let mut x = Vec::with_capacity(max_x + 1);
    let mut mean = Vec::with_capacity(max_x + 1);
    let mut ci = Vec::with_capacity(max_x + 1);
    let mut count = Vec::with_capacity(max_x + 1);
    let mut per_run = vec![0.0; logs.len()];
    for xi in 0..=max_x {
        let mut samples_total = 0u64;
        for (ri, log) in logs.iter().enumerate() {
            let mut sum = 0.0;
            let mut nn = 0usize;
            for node in log.tracked_nodes() {
                sum += node.recovered_at(xi) as f64;
                nn += 1;
            }
            per_run[ri] = if nn > 0 { sum / nn as f64 } else { 0.0 };
            samples_total += nn as u64;
        }
        let (m, c) = mean_ci95(&per_run);
        x.push(xi as u64);
        mean.push(m);
        ci.push(c);
        count.push(samples_total);
    }
    Ok(AggregateCurve {
        x,
        mean,
        ci_half: ci,
        n_samples: count,
    })
}

/// Mean delivered-packet degree at each received-packet count. Points
/// start at `x = 1` (the first delivery); nodes whose trace ended earlier
/// contribute nothing at that x.
pub fn avg_degree_curve(logs: &[RunLog]) -> Result<AggregateCurve, MetricsError> {
    check_homogeneous(logs)?;
    let max_x = logs
        .iter()
        .flat_map(|l| l.tracked_nodes().map(|n| n.deliveries.len()))
        .max()
        .unwrap_or(0);
    let mut x = Vec::new();
    let mut mean = Vec::new();
    let mut ci = Vec::new();
    let mut count = Vec::new();
    for xi in 1..=max_x {
        let mut per_run: Vec<f64> = Vec::with_capacity(logs.len());
        let mut samples_total = 0u64;
        for log in logs {
            let mut sum = 0.0;
            let mut nn = 0usize;
            for node in log.tracked_nodes() {
                if let Some(d) = node.deliveries.get(xi - 1) {
                    sum += d.degree as f64;
                    nn += 1;
                }
            }
            if nn > 0 {
                per_run.push(sum / nn as f64);
                samples_total += nn as u64;
            }
        }
        if per_run.is_empty() {
            continue;
        }
        let (m, c) = mean_ci95(&per_run);
        x.push(xi as u64);
        mean.push(m);
        ci.push(c);
        count.push(samples_total);
    }
    Ok(AggregateCurve {
        x,
        mean,
        ci_half: ci,
        n_samples: count,
    })
}

/// Mean neighborhood information potential per round, aggregated over
/// runs.
pub fn potential_curve(logs: &[RunLog]) -> Result<AggregateCurve, MetricsError> {
    check_homogeneous(logs)?;
    let max_round = logs
        .iter()
        .map(|l| l.potential_mean_per_round.len())
        .max()
        .unwrap_or(0);
    let mut x = Vec::new();
    let mut mean = Vec::new();
    let mut ci = Vec::new();
    let mut count = Vec::new();
    for round in 0..max_round {
        let per_run: Vec<f64> = logs
            .iter()
            .filter_map(|l| l.potential_mean_per_round.get(round).copied())
            .collect();
        if per_run.is_empty() {
            continue;
        }
        let (m, c) = mean_ci95(&per_run);
        x.push(round as u64);
        mean.push(m);
        ci.push(c);
        count.push(per_run.len() as u64);
    }
    Ok(AggregateCurve {
        x,
        mean,
        ci_half: ci,
        n_samples: count,
    })
}

/// Per-node packet delay for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayReport {
    /// `None` marks a censored node (never completed).
    pub per_node: Vec<(NodeId, Option<u32>)>,
    /// Mean over completed nodes.
    pub mean: Option<f64>,
    /// Worst completed node.
    pub max: Option<u32>,
    pub censored: usize,
}

pub fn packet_delay(log: &RunLog) -> DelayReport {
    let per_node: Vec<(NodeId, Option<u32>)> = log
        .tracked_nodes()
        .map(|n| (n.node, n.delay()))
        .collect();
    let completed: Vec<u32> = per_node.iter().filter_map(|(_, d)| *d).collect();
    let censored = per_node.len() - completed.len();
    let mean = if completed.is_empty() {
        None
    } else {
        Some(completed.iter().map(|&d| d as f64).sum::<f64>() / completed.len() as f64)
    };
    DelayReport {
        max: completed.iter().max().copied(),
        per_node,
        mean,
        censored,
    }
}

/// Symbols each neighbor holds that `node` itself lacks: per-neighbor
/// counts and their mean. `None` for an isolated node.
pub fn information_potential(
    adjacency: &Adjacency,
    buffers: &[&BitSet],
    node: NodeId,
) -> Option<(Vec<usize>, f64)> {
    let neighbors = adjacency.neighbors_of(node);
    if neighbors.is_empty() {
        return None;
    }
    let own = buffers[node];
    let counts: Vec<usize> = neighbors
        .iter()
        .map(|&j| buffers[j].count_missing_from(own))
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    Some((counts, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Algorithm, DecoderMode, Scenario, ScenarioConfig, Scheduling};
    use crate::topology;

    fn test_config(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            scenario: Scenario::SingleHop,
            algorithm: Algorithm::Greedy,
            decoder: DecoderMode::Simple,
            n_nodes: 2,
            n_symbols: 4,
            erasure_p: 0.0,
            scheduling: Scheduling::Sequential,
            degree_cap: None,
            seed,
            max_rounds: 100,
            topology: Default::default(),
            degree_overrides: Vec::new(),
            record_coefs: false,
        }
    }

    fn node_log(node: NodeId, initial: u32, trace: &[(u32, u32, bool)], n: u32) -> NodeLog {
        let deliveries: Vec<Delivery> = trace
            .iter()
            .map(|&(degree, recovered_after, decoded_new)| Delivery {
                degree,
                recovered_after,
                decoded_new,
            })
            .collect();
        let completed_at_received = deliveries
            .iter()
            .position(|d| d.recovered_after == n)
            .map(|i| i as u32 + 1)
            .or(if initial == n { Some(0) } else { None });
        NodeLog {
            node,
            tracked: true,
            initial_recovered: initial,
            deliveries,
            completed_at_received,
            packet_symbols: Vec::new(),
        }
    }

    fn run_log(seed: u64, nodes: Vec<NodeLog>) -> RunLog {
        let complete = nodes
            .iter()
            .filter(|n| n.tracked)
            .all(|n| n.completed_at_received.is_some());
        RunLog {
            config: test_config(seed),
            nodes,
            potential_mean_per_round: Vec::new(),
            potential_raw_per_round: Vec::new(),
            rounds_executed: 0,
            completion_round: None,
            complete,
        }
    }

    #[test]
    fn recovery_curve_is_identity_for_lossless_uncoded() {
        // every delivery recovers exactly one new symbol
        let trace: Vec<(u32, u32, bool)> = (1..=4).map(|k| (1, k, true)).collect();
        let log = run_log(0, vec![node_log(1, 0, &trace, 4), node_log(2, 0, &trace, 4)]);
        let curve = recovery_curve(&[log]).unwrap();
        assert_eq!(curve.x, vec![0, 1, 2, 3, 4]);
        assert_eq!(curve.mean, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn recovery_curve_carries_forward_past_completion() {
        let fast = node_log(1, 0, &[(1, 1, true), (1, 2, true)], 2);
        let slow = node_log(2, 0, &[(1, 1, true), (2, 1, false), (1, 2, true)], 2);
        let log = run_log(0, vec![fast, slow]);
        let curve = recovery_curve(&[log]).unwrap();
        assert_eq!(curve.x.len(), 4);
        // at x=3 the fast node contributes its final value 2
        assert_eq!(curve.mean[3], 2.0);
    }

    #[test]
    fn mixed_configs_are_rejected() {
        let a = run_log(0, vec![node_log(1, 0, &[(1, 1, true)], 1)]);
        let mut b = run_log(1, vec![node_log(1, 0, &[(1, 1, true)], 1)]);
        b.config.n_symbols = 7;
        b.config.n_nodes = 7;
        assert_eq!(
            recovery_curve(&[a, b]).unwrap_err(),
            MetricsError::MixedConfigs
        );
    }

    #[test]
    fn seeds_may_differ_within_one_experiment() {
        let a = run_log(0, vec![node_log(1, 0, &[(1, 1, true)], 1)]);
        let b = run_log(1, vec![node_log(1, 0, &[(1, 1, true)], 1)]);
        assert!(recovery_curve(&[a, b]).is_ok());
    }

    #[test]
    fn degree_curve_constant_one_for_uncoded() {
        let trace: Vec<(u32, u32, bool)> = (1..=4).map(|k| (1, k, true)).collect();
        let log = run_log(0, vec![node_log(1, 0, &trace, 4)]);
        let curve = avg_degree_curve(&[log]).unwrap();
        assert_eq!(curve.x, vec![1, 2, 3, 4]);
        assert!(curve.mean.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn delay_counts_only_up_to_completion() {
        // two wasted packets before completion, one after
        let log = node_log(
            1,
            0,
            &[
                (2, 0, false),
                (1, 1, true),
                (3, 1, false),
                (1, 2, true),
                (5, 2, false),
            ],
            2,
        );
        assert_eq!(log.completed_at_received, Some(4));
        assert_eq!(log.delay(), Some(2));
    }

    #[test]
    fn delay_report_censors_incomplete_nodes() {
        let done = node_log(1, 0, &[(1, 1, true)], 1);
        let stuck = node_log(2, 0, &[(2, 0, false)], 1);
        let log = run_log(0, vec![done, stuck]);
        let report = packet_delay(&log);
        assert_eq!(report.censored, 1);
        assert_eq!(report.mean, Some(0.0));
        assert_eq!(report.max, Some(0));
    }

    #[test]
    fn delay_plus_recovered_equals_received_at_completion() {
        // simple-decoder bookkeeping identity
        let log = node_log(
            1,
            1,
            &[(1, 2, true), (2, 2, false), (1, 3, true), (1, 4, true)],
            4,
        );
        let completed = log.completed_at_received.unwrap();
        let recovered_via_rx = 4 - log.initial_recovered;
        assert_eq!(log.delay().unwrap() + recovered_via_rx, completed);
    }

    #[test]
    fn potential_trivial_cases() {
        let topo = topology::build_star(2);
        let full = BitSet::ones_set(4);
        let empty = BitSet::zeros(4);
        // identical buffers everywhere -> 0
        let buffers = [&full, &full, &full];
        let (counts, mean) = information_potential(topo.adjacency(), &buffers, 1).unwrap();
        assert_eq!(counts, vec![0]);
        assert_eq!(mean, 0.0);
        // neighbor holds 4 extra symbols
        let buffers = [&full, &empty, &full];
        let (counts, mean) = information_potential(topo.adjacency(), &buffers, 1).unwrap();
        assert_eq!(counts, vec![4]);
        assert_eq!(mean, 4.0);
        // strict superset with 3 extra symbols counts exactly 3
        let most = BitSet::from_indices(4, &[0]);
        let buffers = [&full, &most, &full];
        let (counts, _) = information_potential(topo.adjacency(), &buffers, 1).unwrap();
        assert_eq!(counts, vec![3]);
    }

    #[test]
    fn potential_is_none_for_isolated_node() {
        let adj = topology::Adjacency::from_edges(3, &[(0, 1)]);
        let full = BitSet::ones_set(4);
        let buffers = [&full, &full, &full];
        assert!(information_potential(&adj, &buffers, 0).is_some());
        assert!(information_potential(&adj, &buffers, 2).is_none());
    }

    #[test]
    fn aggregation_is_linear_in_runs() {
        // aggregating two single-run sets equals aggregating both runs
        let a = run_log(0, vec![node_log(1, 0, &[(1, 1, true), (1, 2, true)], 2)]);
        let b = run_log(
            1,
            vec![node_log(1, 0, &[(2, 0, false), (1, 1, true), (1, 2, true)], 2)],
        );
        let joint = recovery_curve(&[a.clone(), b.clone()]).unwrap();
        let solo_a = recovery_curve(&[a]).unwrap();
        let solo_b = recovery_curve(&[b]).unwrap();
        for (i, &x) in joint.x.iter().enumerate() {
            let va = solo_a.mean_at(x.min(solo_a.x.len() as u64 - 1)).unwrap();
            let vb = solo_b.mean_at(x.min(solo_b.x.len() as u64 - 1)).unwrap();
            assert!((joint.mean[i] - (va + vb) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ci_shrinks_with_more_runs() {
        // alternating traces give nonzero run-to-run variance
        let make = |seed: u64| {
            let trace: Vec<(u32, u32, bool)> = if seed.is_multiple_of(2) {
                vec![(1, 1, true), (1, 2, true)]
            } else {
                vec![(2, 0, false), (1, 1, true)]
            };
            run_log(seed, vec![node_log(1, 0, &trace, 2)])
        };
        let few: Vec<RunLog> = (0..4).map(make).collect();
        let many: Vec<RunLog> = (0..64).map(make).collect();
        let ci_few = recovery_curve(&few).unwrap().ci_half[1];
        let ci_many = recovery_curve(&many).unwrap().ci_half[1];
        assert!(ci_many < ci_few);
        assert!(ci_many > 0.0);
    }
}
