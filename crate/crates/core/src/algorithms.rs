//! The five packet-selection strategies.
//!
//! Each selector maps (own buffer, neighbor table, rng) to the ordered set
//! `C` of symbols to XOR into the next transmission:
//!
//! * `systematic_rlnc`: every symbol once uncoded, then uniformly random
//!   nonzero combinations over the whole buffer.
//! * `anc`: a random subset whose size follows a degree table indexed by
//!   the recovery level (no feedback used).
//! * `opportunistic`: grow `C` randomly while every neighbor that could
//!   decode keeps being able to decode.
//! * `greedy`: grow `C` by the symbol that maximizes the number of
//!   immediately-decoding neighbors, while that number keeps rising.
//! * `equalizing`: repeatedly serve the poorest neighbor that can still
//!   decode the packet built so far.
//!
//! Randomness contract: every "choose uniformly" step assembles its
//! candidates in ascending index order and consumes exactly one
//! [`rng::uniform_index`] draw, including when there is a single
//! candidate. This makes traces reproducible and lets tests script
//! choices.

use crate::bits::BitSet;
use crate::codec::SymbolId;
use crate::rng;
use crate::state::{NeighborTable, NodeBuffer, NodeId};
use rand_core::RngCore;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgorithmError {
    #[error("oracle buffer too large: {0} symbols (limit 20)")]
    BufferTooLarge(usize),
    #[error("invalid degree table entry D({r}) = {d} for universe of {n}")]
    InvalidDegree { r: usize, d: usize, n: usize },
}

/// Result of one selection: the symbols to combine (in selection order,
/// so a degree cap can truncate from the front) and `R(C)` at output time.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectionOutcome {
    pub combined: Vec<SymbolId>,
    pub immediate_recoverers: Vec<NodeId>,
}

impl SelectionOutcome {
    pub fn is_empty(&self) -> bool {
        self.combined.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.combined.len()
    }
}

// ---------------------------------------------------------------------------
// Neighbor-side mask machinery
//
// The selection loops work on per-neighbor miss counts for the running set
// C. Only the classes "misses 0" and "misses 1" matter (a neighbor missing
// two symbols can never return), so two bit masks over neighbor slots are
// enough:
//   zero_miss = R*(C)  (holds all of C)
//   one_miss  = R(C)   (immediately decodes C)
// For a candidate s, |R(C ∪ {s})| = |one_miss ∧ H_s| + |zero_miss ∧ ¬H_s|
// where H_s is the mask of neighbors holding s.
// ---------------------------------------------------------------------------

struct NeighborMasks {
    m: usize,
    stride: usize,
    /// Row per symbol of the sender's buffer: mask of neighbors holding it.
    holders: Vec<u64>,
}

impl NeighborMasks {
    fn build(own: &BitSet, table: &NeighborTable) -> Self {
        let m = table.len();
        let stride = m.div_ceil(64).max(1);
        let mut holders = vec![0u64; own.len() * stride];
        for idx in 0..m {
            let word = 1u64 << (idx % 64);
            let offset = idx / 64;
            for (wi, (a, b)) in own
                .words()
                .iter()
                .zip(table.set_at(idx).words())
                .enumerate()
            {
                let mut w = a & b;
                while w != 0 {
                    let s = wi * 64 + w.trailing_zeros() as usize;
                    holders[s * stride + offset] |= word;
                    w &= w - 1;
                }
            }
        }
        NeighborMasks { m, stride, holders }
    }

    #[inline]
    fn holders_of(&self, s: SymbolId) -> &[u64] {
        &self.holders[s * self.stride..(s + 1) * self.stride]
    }

    fn all_mask(&self) -> Vec<u64> {
        let mut mask = vec![!0u64; self.stride];
        let tail = self.m % 64;
        if tail != 0 {
            *mask.last_mut().unwrap() = (1u64 << tail) - 1;
        }
        if self.m == 0 {
            mask.fill(0);
        }
        mask
    }
}

#[inline]
fn count_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

#[inline]
fn count_andnot(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & !y).count_ones() as usize).sum()
}

#[inline]
fn count(a: &[u64]) -> usize {
    a.iter().map(|x| x.count_ones() as usize).sum()
}

/// |R(C ∪ {s})| given the current miss masks.
#[inline]
fn recoverers_with(masks: &NeighborMasks, zero: &[u64], one: &[u64], s: SymbolId) -> usize {
    let h = masks.holders_of(s);
    count_and(one, h) + count_andnot(zero, h)
}

/// Advances the miss masks after adding `s` to C.
fn add_symbol(masks: &NeighborMasks, zero: &mut [u64], one: &mut [u64], s: SymbolId) {
    let h = masks.holders_of(s);
    for i in 0..zero.len() {
        let joiners = zero[i] & !h[i];
        one[i] = (one[i] & h[i]) | joiners;
        zero[i] &= h[i];
    }
}

fn ids_from_mask(table: &NeighborTable, mask: &[u64]) -> Vec<NodeId> {
    let mut ids = Vec::new();
    for (wi, &w) in mask.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            ids.push(table.id_at(wi * 64 + w.trailing_zeros() as usize));
            w &= w - 1;
        }
    }
    ids
}

/// Uniform pick among the symbols of `candidates` maximizing
/// `|R(C ∪ {s})|`. Returns `(best_count, symbol)`.
fn argmax_recoverers(
    candidates: impl Iterator<Item = SymbolId>,
    masks: &NeighborMasks,
    zero: &[u64],
    one: &[u64],
    rng: &mut impl RngCore,
) -> Option<(usize, SymbolId)> {
    let mut best = 0usize;
    let mut ties: Vec<SymbolId> = Vec::new();
    for s in candidates {
        let rc = recoverers_with(masks, zero, one, s);
        if rc > best || ties.is_empty() {
            best = rc;
            ties.clear();
            ties.push(s);
        } else if rc == best {
            ties.push(s);
        }
    }
    if ties.is_empty() {
        return None;
    }
    let pick = ties[rng::uniform_index(rng, ties.len())];
    Some((best, pick))
}

// ---------------------------------------------------------------------------
// Selectors
// ---------------------------------------------------------------------------

/// Random growth: add random symbols as long as every neighbor that could
/// already decode the packet keeps being able to.
///
/// Draws: one `uniform_index` over the candidate set per added symbol.
pub fn opportunistic_select(
    own: &NodeBuffer,
    table: &NeighborTable,
    rng: &mut impl RngCore,
) -> SelectionOutcome {
    assert!(!table.is_empty(), "selection requires at least one neighbor");
    let masks = NeighborMasks::build(&own.recovered, table);
    let mut zero = masks.all_mask();
    let mut one = vec![0u64; masks.stride];

    // Initial candidates: symbols of the buffer missing at at least one
    // neighbor.
    let mut intersection = table.set_at(0).clone();
    for idx in 1..table.len() {
        intersection.and_with(table.set_at(idx));
    }
    let mut candidates = own.recovered.clone();
    candidates.subtract(&intersection);

    let mut combined = Vec::new();
    while !candidates.is_zero() {
        let k = candidates.count_ones();
        let s_star = candidates.nth_set(rng::uniform_index(rng, k));
        combined.push(s_star);

        let h = masks.holders_of(s_star);
        // Every neighbor already in R(C) holds s_star, so R(C) only grows.
        assert_eq!(count_andnot(&one, h), 0, "R(C) lost a member");
        candidates.remove(s_star);
        // Neighbors that held everything so far and miss s_star join R(C);
        // the candidate set shrinks to symbols they all hold. Symbols no
        // neighbor is missing stay excluded: they would only inflate the
        // degree without letting anyone decode more.
        for i in 0..zero.len() {
            let mut joiners = zero[i] & !h[i];
            one[i] |= joiners;
            zero[i] &= h[i];
            while joiners != 0 {
                let idx = i * 64 + joiners.trailing_zeros() as usize;
                candidates.and_with(table.set_at(idx));
                joiners &= joiners - 1;
            }
        }
    }

    SelectionOutcome {
        combined,
        immediate_recoverers: ids_from_mask(table, &one),
    }
}

/// Rarest-first growth: start from the symbol missed by the most
/// neighbors, keep adding the candidate that maximizes the number of
/// immediately-decoding neighbors, and stop once no candidate strictly
/// increases it, so the count q is strictly increasing over accepted
/// steps. Argmax ties break uniformly (one draw per step).
///
/// Accepting equal-keeping candidates instead would, on strongly
/// correlated neighborhoods, absorb every symbol the whole neighborhood
/// already holds into C (they never decrease the count), inflating the
/// codeword degree toward the buffer size without serving anyone new.
pub fn greedy_select(
    own: &NodeBuffer,
    table: &NeighborTable,
    rng: &mut impl RngCore,
) -> SelectionOutcome {
    assert!(!table.is_empty(), "selection requires at least one neighbor");
    let masks = NeighborMasks::build(&own.recovered, table);
    let mut zero = masks.all_mask();
    let mut one = vec![0u64; masks.stride];

    let mut combined: Vec<SymbolId> = Vec::new();
    let mut c_set = BitSet::zeros(own.recovered.len());
    let mut q = 0usize;
    loop {
        let next = argmax_recoverers(
            own.recovered.ones().filter(|s| !c_set.contains(*s)),
            &masks,
            &zero,
            &one,
            rng,
        );
        let Some((rc, s_star)) = next else { break };
        if combined.is_empty() && rc == 0 {
            // No symbol is missing anywhere; nothing useful to send.
            return SelectionOutcome::default();
        }
        if rc <= q {
            break;
        }
        q = rc;
        combined.push(s_star);
        c_set.insert(s_star);
        add_symbol(&masks, &mut zero, &mut one, s_star);
    }

    debug_assert_eq!(count(&one), q);
    SelectionOutcome {
        combined,
        immediate_recoverers: ids_from_mask(table, &one),
    }
}

/// Poorest-first growth: pick the neighbor with the fewest recovered
/// symbols among those that still hold all of `C`, give it one symbol it
/// is missing (the one most useful to the rest of the neighborhood), and
/// repeat while some symbol is held by all neighbors served so far.
pub fn equalizing_select(
    own: &NodeBuffer,
    table: &NeighborTable,
    rng: &mut impl RngCore,
) -> SelectionOutcome {
    assert!(!table.is_empty(), "selection requires at least one neighbor");
    let masks = NeighborMasks::build(&own.recovered, table);
    let mut zero = masks.all_mask();
    let mut one = vec![0u64; masks.stride];
    let sizes: Vec<usize> = (0..table.len())
        .map(|idx| table.set_at(idx).count_ones())
        .collect();

    // Running intersection of the served neighbors' buffers: only symbols
    // in here can be added without breaking a previously served neighbor.
    let mut pool = own.recovered.clone();
    let mut combined: Vec<SymbolId> = Vec::new();

    // Eligible holders of C that turned out to miss nothing of the pool;
    // they hold everything a future step could add, so skip them for good.
    let mut exhausted = vec![0u64; masks.stride];

    while !pool.is_zero() {
        // Poorest servable neighbor among the holders of C, uniform
        // tie-break. A holder missing nothing of the pool cannot be served
        // without breaking a previously served neighbor; move on to the
        // next-poorest.
        let mut best_size = usize::MAX;
        let mut ties: Vec<usize> = Vec::new();
        for (wi, &w) in zero.iter().enumerate() {
            let mut w = w & !exhausted[wi];
            while w != 0 {
                let idx = wi * 64 + w.trailing_zeros() as usize;
                match sizes[idx].cmp(&best_size) {
                    std::cmp::Ordering::Less => {
                        best_size = sizes[idx];
                        ties.clear();
                        ties.push(idx);
                    }
                    std::cmp::Ordering::Equal => ties.push(idx),
                    std::cmp::Ordering::Greater => {}
                }
                w &= w - 1;
            }
        }
        if ties.is_empty() {
            break;
        }
        let poorest = ties[rng::uniform_index(rng, ties.len())];

        // Symbols we may still add that the chosen neighbor is missing.
        let mut candidates = pool.clone();
        candidates.subtract(table.set_at(poorest));
        if candidates.is_zero() {
            exhausted[poorest / 64] |= 1u64 << (poorest % 64);
            continue;
        }
        let (_, s_star) =
            argmax_recoverers(candidates.ones(), &masks, &zero, &one, rng).expect("nonempty");
        combined.push(s_star);
        pool.and_with(table.set_at(poorest));
        add_symbol(&masks, &mut zero, &mut one, s_star);
    }

    SelectionOutcome {
        combined,
        immediate_recoverers: ids_from_mask(table, &one),
    }
}

/// Degree table `D(r)`: target codeword degree as a function of the
/// recovery level `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    d: Vec<usize>,
}

impl DegreeTable {
    /// Table for a universe of `n` symbols where `D(r)` maximizes the
    /// probability that a uniformly random `d`-subset of the `n` symbols
    /// contains exactly `d - 1` symbols from a recovered set of size `r`
    /// (so the receiver decodes exactly one new symbol). Ties break toward
    /// the smaller degree.
    ///
    /// `P(d) = C(r, d-1) * C(n-r, 1) / C(n, d)` is unimodal in `d`:
    /// `P(d+1) > P(d)` exactly when `d * (n - r) < r + 1`, which gives the
    /// argmax without evaluating any binomials.
    pub fn hypergeometric_argmax(n: usize) -> Self {
        assert!(n >= 1);
        let mut d = vec![1usize; n + 1];
        for (r, slot) in d.iter_mut().enumerate().take(n).skip(1) {
            let cap = (r + 1).min(n);
            let mut best = 1;
            while best < cap && best * (n - r) < r + 1 {
                best += 1;
            }
            *slot = best;
        }
        // r = n leaves P identically zero; the smallest degree wins the tie.
        DegreeTable { d }
    }

    /// Builds a table from the default with explicit `(r, D(r))` overrides.
    pub fn with_overrides(n: usize, pairs: &[(usize, usize)]) -> Result<Self, AlgorithmError> {
        let mut table = Self::hypergeometric_argmax(n);
        for &(r, d) in pairs {
            if r > n || d < 1 || d > n {
                return Err(AlgorithmError::InvalidDegree { r, d, n });
            }
            table.d[r] = d;
        }
        Ok(table)
    }

    pub fn n(&self) -> usize {
        self.d.len() - 1
    }

    pub fn degree_for(&self, r: usize) -> usize {
        self.d[r.min(self.d.len() - 1)]
    }
}

/// Feedback-free selection: a uniformly random subset of the buffer with
/// target size `D(r)`, clamped to what is available.
///
/// `r` is the sender's own recovery level, the usual proxy for how far the
/// neighborhood has progressed. A sender that has recovered the whole
/// universe (the single-source broadcast case) gets no signal from its own
/// buffer, so it instead tunes each packet to one uniformly drawn neighbor
/// (the random-encounter model the degree table was designed for), using
/// that neighbor's recovery level. A fixed aggregate would not do: the
/// neighborhood mean outruns the stragglers' missing counts and they never
/// decode again, while the minimum wastes most transmissions on the
/// already-served majority.
pub fn anc_select(
    own: &NodeBuffer,
    table: &NeighborTable,
    degrees: &DegreeTable,
    rng: &mut impl RngCore,
) -> SelectionOutcome {
    let r_own = own.recovered.count_ones();
    if r_own == 0 {
        return SelectionOutcome::default();
    }
    let n = own.recovered.len();
    let r = if r_own < n || table.is_empty() {
        r_own
    } else {
        table.iter().map(|(_, b)| b.count_ones()).min().unwrap()
    };
    let want = degrees.degree_for(r).min(r_own);

    let ids = own.recovered.to_indices();
    let combined = rng::sample_k(rng, &ids, want);
    let coef = BitSet::from_indices(n, &combined);
    SelectionOutcome {
        immediate_recoverers: table.recoverers(&coef),
        combined,
    }
}

/// Phase of the systematic scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystematicPhase {
    /// Send original symbol `next` uncoded.
    Systematic { next: SymbolId },
    /// Send a uniformly random nonzero combination of the whole buffer.
    Coded,
}

/// Systematic random network coding: every symbol once uncoded, then
/// fair-coin coefficients over all recovered symbols, redrawn if all zero.
///
/// Draws (coded phase): `ceil(r / 64)` raw words per attempt.
pub fn systematic_rlnc_select(
    own: &NodeBuffer,
    phase: SystematicPhase,
    table: &NeighborTable,
    rng: &mut impl RngCore,
) -> SelectionOutcome {
    let n = own.recovered.len();
    let combined = match phase {
        SystematicPhase::Systematic { next } => {
            debug_assert!(own.recovered.contains(next));
            vec![next]
        }
        SystematicPhase::Coded => {
            let ids = own.recovered.to_indices();
            if ids.is_empty() {
                return SelectionOutcome::default();
            }
            let words = ids.len().div_ceil(64);
            let tail = ids.len() % 64;
            loop {
                let mut drawn: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
                if tail != 0 {
                    drawn[words - 1] &= (1u64 << tail) - 1;
                }
                if drawn.iter().any(|&w| w != 0) {
                    break ids
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| drawn[i / 64] >> (i % 64) & 1 == 1)
                        .map(|(_, &s)| s)
                        .collect();
                }
            }
        }
    };
    let coef = BitSet::from_indices(n, &combined);
    SelectionOutcome {
        immediate_recoverers: table.recoverers(&coef),
        combined,
    }
}

/// Exhaustive search over all nonempty subsets of the buffer: the maximum
/// number of immediately-decoding neighbors and every subset achieving it.
/// Test oracle only; the buffer may hold at most 20 symbols.
pub fn ideal_packet_oracle(
    own: &NodeBuffer,
    table: &NeighborTable,
) -> Result<(usize, Vec<Vec<SymbolId>>), AlgorithmError> {
    let symbols = own.recovered.to_indices();
    if symbols.len() > 20 {
        return Err(AlgorithmError::BufferTooLarge(symbols.len()));
    }
    let n = own.recovered.len();
    let mut best = 0usize;
    let mut witnesses: Vec<Vec<SymbolId>> = Vec::new();
    for mask in 1u32..1 << symbols.len() {
        let subset: Vec<SymbolId> = symbols
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &s)| s)
            .collect();
        let rc = table.recoverers(&BitSet::from_indices(n, &subset)).len();
        if rc > best {
            best = rc;
            witnesses = vec![subset];
        } else if rc == best && best > 0 {
            witnesses.push(subset);
        }
    }
    Ok((best, witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::testing::ScriptedRng;
    use crate::state::tests::example_state;

    fn seeded(seed: u64) -> crate::rng::Rng {
        crate::rng::stream_rng(seed, 0)
    }

    fn is_ideal(outcome: &SelectionOutcome) -> bool {
        let mut c = outcome.combined.clone();
        c.sort_unstable();
        outcome.immediate_recoverers.len() == 3 && (c == vec![0, 1] || c == vec![1, 2])
    }

    #[test]
    fn opportunistic_forced_s2_then_s4_is_not_ideal() {
        // Initial candidates are {s1,s2,s3,s4}; feeding index 1 picks s2,
        // then candidates shrink to {s1,s3,s4} and index 2 picks s4.
        let (own, table) = example_state();
        let mut rng = ScriptedRng::new(&[1, 2]);
        let out = opportunistic_select(&own, &table, &mut rng);
        assert_eq!(out.combined, vec![1, 3]);
        assert_eq!(out.immediate_recoverers.len(), 2);
        assert!(rng.exhausted());
    }

    #[test]
    fn opportunistic_single_candidate_loop() {
        // one neighbor missing exactly {s1}
        let own = NodeBuffer::with_symbols(0, 3, &[0, 1, 2]);
        let table = NeighborTable::from_entries(vec![(1, BitSet::from_indices(3, &[1, 2]))]);
        let mut rng = seeded(5);
        let out = opportunistic_select(&own, &table, &mut rng);
        assert_eq!(out.combined, vec![0]);
        assert_eq!(out.immediate_recoverers, vec![1]);
    }

    #[test]
    fn opportunistic_ideal_fraction_near_two_thirds() {
        let (own, table) = example_state();
        let mut rng = seeded(42);
        let trials = 20_000;
        let mut ideal = 0;
        for _ in 0..trials {
            if is_ideal(&opportunistic_select(&own, &table, &mut rng)) {
                ideal += 1;
            }
        }
        let fraction = ideal as f64 / trials as f64;
        assert!(
            (fraction - 2.0 / 3.0).abs() < 0.02,
            "ideal fraction {fraction}"
        );
    }

    #[test]
    fn greedy_forced_first_pick_traces_walkthrough() {
        // First argmax ties on {s1,s3} (two missing neighbors each);
        // index 0 forces s1. Then s2 is the unique argmax (3 recoverers),
        // then both s3 and s4 drop the count below 3 and the loop stops.
        let (own, table) = example_state();
        let mut rng = ScriptedRng::new(&[0, 0, 0]);
        let out = greedy_select(&own, &table, &mut rng);
        assert_eq!(out.combined, vec![0, 1]);
        assert_eq!(out.immediate_recoverers, vec![1, 2, 3]);
    }

    #[test]
    fn greedy_always_ideal_on_example() {
        let (own, table) = example_state();
        let mut rng = seeded(7);
        for _ in 0..2_000 {
            let out = greedy_select(&own, &table, &mut rng);
            assert!(is_ideal(&out), "non-ideal greedy output {out:?}");
        }
    }

    #[test]
    fn greedy_fully_served_neighborhood_sends_nothing() {
        let own = NodeBuffer::with_symbols(0, 4, &[0, 1, 2, 3]);
        let table = NeighborTable::from_entries(vec![
            (1, BitSet::ones_set(4)),
            (2, BitSet::ones_set(4)),
        ]);
        let mut rng = seeded(9);
        let out = greedy_select(&own, &table, &mut rng);
        assert!(out.is_empty());
    }

    #[test]
    fn equalizing_forced_s1_traces_walkthrough() {
        // Poorest neighbor is N2 (unique); candidates {s1,s3,s4} with
        // argmax ties {s1,s3}; index 0 forces s1. Second iteration: only
        // N1 still holds all of C, s2 is forced, then the pool empties.
        let (own, table) = example_state();
        let mut rng = ScriptedRng::new(&[0, 0, 0, 0]);
        let out = equalizing_select(&own, &table, &mut rng);
        assert_eq!(out.combined, vec![0, 1]);
        assert_eq!(out.immediate_recoverers, vec![1, 2, 3]);
    }

    #[test]
    fn equalizing_always_ideal_on_example() {
        let (own, table) = example_state();
        let mut rng = seeded(11);
        for _ in 0..2_000 {
            let out = equalizing_select(&own, &table, &mut rng);
            assert!(is_ideal(&out), "non-ideal equalizing output {out:?}");
        }
    }

    #[test]
    fn equalizing_serves_poorest_with_degree_one() {
        // two neighbors: N1 empty, N2 holds everything
        let own = NodeBuffer::with_symbols(0, 1, &[0]);
        let table = NeighborTable::from_entries(vec![
            (1, BitSet::zeros(1)),
            (2, BitSet::ones_set(1)),
        ]);
        let mut rng = seeded(3);
        let out = equalizing_select(&own, &table, &mut rng);
        assert_eq!(out.combined, vec![0]);
        assert_eq!(out.immediate_recoverers, vec![1]);
    }

    #[test]
    fn degree_table_small_universe_matches_hand_computation() {
        // n=4: P(d) = C(r,d-1)·C(4-r,1)/C(4,d) evaluated by hand
        let t = DegreeTable::hypergeometric_argmax(4);
        assert_eq!(t.degree_for(0), 1);
        assert_eq!(t.degree_for(1), 1);
        assert_eq!(t.degree_for(2), 2);
        assert_eq!(t.degree_for(3), 4);
        assert_eq!(t.degree_for(4), 1);
    }

    #[test]
    fn degree_table_matches_exact_rational_argmax() {
        // Independent oracle: evaluate P(d) = C(r,d-1)*C(n-r,1)/C(n,d)
        // exactly with big rationals and take the smallest argmax.
        use num::BigRational;
        use num::bigint::BigInt;

        fn binomial(n: usize, k: usize) -> BigInt {
            if k > n {
                return BigInt::from(0);
            }
            let mut acc = BigInt::from(1);
            for i in 0..k {
                acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
            }
            acc
        }

        for n in (1usize..=12).chain([100]) {
            let table = DegreeTable::hypergeometric_argmax(n);
            for r in 1..n {
                let cap = (r + 1).min(n);
                let mut best_d = 1;
                let mut best_p = BigRational::from_integer(0.into());
                for d in 1..=cap {
                    let p = BigRational::new(
                        binomial(r, d - 1) * BigInt::from(n - r),
                        binomial(n, d),
                    );
                    if p > best_p {
                        best_p = p;
                        best_d = d;
                    }
                }
                assert_eq!(table.degree_for(r), best_d, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn degree_table_frozen_values_for_n_100() {
        let t = DegreeTable::hypergeometric_argmax(100);
        assert_eq!(t.degree_for(0), 1);
        assert_eq!(t.degree_for(50), 2);
        assert_eq!(t.degree_for(90), 10);
        // With 99 of 100 recovered, combining everything guarantees the
        // receiver misses exactly one symbol: the argmax is the full degree.
        assert_eq!(t.degree_for(99), 100);
    }

    #[test]
    fn degree_table_overrides_validate() {
        let t = DegreeTable::with_overrides(10, &[(3, 5)]).unwrap();
        assert_eq!(t.degree_for(3), 5);
        assert!(DegreeTable::with_overrides(10, &[(3, 0)]).is_err());
        assert!(DegreeTable::with_overrides(10, &[(3, 11)]).is_err());
        assert!(DegreeTable::with_overrides(10, &[(11, 1)]).is_err());
    }

    #[test]
    fn anc_single_symbol_is_forced() {
        let own = NodeBuffer::with_symbols(0, 10, &[4]);
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(10))]);
        let degrees = DegreeTable::hypergeometric_argmax(10);
        let mut rng = seeded(1);
        let out = anc_select(&own, &table, &degrees, &mut rng);
        assert_eq!(out.combined, vec![4]);
    }

    #[test]
    fn anc_degree_follows_table() {
        let own = NodeBuffer::with_symbols(0, 100, &(0..10).collect::<Vec<_>>());
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(100))]);
        let degrees = DegreeTable::with_overrides(100, &[(10, 4)]).unwrap();
        let mut rng = seeded(2);
        for _ in 0..50 {
            let out = anc_select(&own, &table, &degrees, &mut rng);
            assert_eq!(out.degree(), 4);
            assert!(out.combined.iter().all(|&s| s < 10));
        }
    }

    #[test]
    fn anc_clamps_to_available_symbols() {
        let own = NodeBuffer::with_symbols(0, 100, &[1, 2, 3]);
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(100))]);
        let degrees = DegreeTable::with_overrides(100, &[(3, 5)]).unwrap();
        let mut rng = seeded(3);
        let out = anc_select(&own, &table, &degrees, &mut rng);
        assert_eq!(out.degree(), 3);
    }

    #[test]
    fn anc_empty_buffer_sends_nothing() {
        let own = NodeBuffer::new(0, 10);
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(10))]);
        let degrees = DegreeTable::hypergeometric_argmax(10);
        let mut rng = seeded(4);
        assert!(anc_select(&own, &table, &degrees, &mut rng).is_empty());
    }

    #[test]
    fn systematic_phase_returns_step_symbol() {
        let own = NodeBuffer::with_symbols(0, 100, &(0..100).collect::<Vec<_>>());
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(100))]);
        let mut rng = seeded(5);
        for k in [0usize, 17, 99] {
            let out = systematic_rlnc_select(
                &own,
                SystematicPhase::Systematic { next: k },
                &table,
                &mut rng,
            );
            assert_eq!(out.combined, vec![k]);
        }
    }

    #[test]
    fn systematic_coded_degree_is_near_half() {
        let own = NodeBuffer::with_symbols(0, 100, &(0..100).collect::<Vec<_>>());
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(100))]);
        let mut rng = seeded(6);
        let trials = 2_000;
        let total: usize = (0..trials)
            .map(|_| {
                systematic_rlnc_select(&own, SystematicPhase::Coded, &table, &mut rng).degree()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 50.0).abs() < 1.5, "mean coded degree {mean}");
    }

    #[test]
    fn systematic_coded_single_symbol_never_empty() {
        let own = NodeBuffer::with_symbols(0, 100, &[42]);
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(100))]);
        let mut rng = seeded(7);
        for _ in 0..100 {
            let out = systematic_rlnc_select(&own, SystematicPhase::Coded, &table, &mut rng);
            assert_eq!(out.combined, vec![42]);
        }
    }

    #[test]
    fn oracle_finds_both_ideal_packets_in_example() {
        let (own, table) = example_state();
        let (best, mut witnesses) = ideal_packet_oracle(&own, &table).unwrap();
        assert_eq!(best, 3);
        witnesses.sort();
        assert_eq!(witnesses, vec![vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn oracle_trivial_cases() {
        let own = NodeBuffer::with_symbols(0, 1, &[0]);
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(1))]);
        assert_eq!(
            ideal_packet_oracle(&own, &table).unwrap(),
            (1, vec![vec![0]])
        );

        let table_full = NeighborTable::from_entries(vec![(1, BitSet::ones_set(1))]);
        assert_eq!(ideal_packet_oracle(&own, &table_full).unwrap(), (0, vec![]));
    }

    #[test]
    fn oracle_rejects_large_buffers() {
        let own = NodeBuffer::with_symbols(0, 30, &(0..21).collect::<Vec<_>>());
        let table = NeighborTable::from_entries(vec![(1, BitSet::zeros(30))]);
        assert_eq!(
            ideal_packet_oracle(&own, &table).unwrap_err(),
            AlgorithmError::BufferTooLarge(21)
        );
    }

    #[test]
    fn selections_never_leave_the_buffer() {
        let own = NodeBuffer::with_symbols(0, 12, &[0, 2, 4, 6, 8, 10]);
        let table = NeighborTable::from_entries(vec![
            (1, BitSet::from_indices(12, &[0, 1, 2])),
            (2, BitSet::from_indices(12, &[4, 5])),
        ]);
        let degrees = DegreeTable::hypergeometric_argmax(12);
        let mut rng = seeded(8);
        for _ in 0..200 {
            for out in [
                opportunistic_select(&own, &table, &mut rng),
                greedy_select(&own, &table, &mut rng),
                equalizing_select(&own, &table, &mut rng),
                anc_select(&own, &table, &degrees, &mut rng),
                systematic_rlnc_select(&own, SystematicPhase::Coded, &table, &mut rng),
            ] {
                assert!(out.combined.iter().all(|&s| own.recovered.contains(s)));
            }
        }
    }
}
