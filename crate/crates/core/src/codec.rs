//! Coded-packet representation and the two decoders.
//!
//! A coded packet is the XOR of a set of original symbols; its identity is
//! the binary coefficient vector over the run's symbol universe. Two
//! decoding schemes are provided:
//!
//! * [`simple_decode`] recovers a symbol only when the packet combines
//!   exactly one symbol the receiver is missing, and discards everything
//!   else.
//! * [`GjDecoder`] buffers every packet and maintains a reduced
//!   row-echelon-form matrix over GF(2), releasing symbols as their rows
//!   collapse to unit vectors.

use crate::bits::BitSet;
use thiserror::Error;

/// Index of one original information unit in `[0, n)`.
pub type SymbolId = usize;

/// Binary coefficient vector of length `n`, one bit per original symbol.
pub type CoefVector = BitSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("cannot combine an empty symbol set")]
    EmptyCombination,
    #[error("symbol {0} out of range for universe of {1}")]
    SymbolOutOfRange(SymbolId, usize),
    #[error("coefficient length {got} does not match decoder dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
}

/// A coded packet: coefficient vector plus an optional payload.
///
/// Payloads exist so the codec can prove byte-level round trips on itself;
/// the simulator tracks coefficient vectors only, since every metric is a
/// function of which symbols are combined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    pub coef: CoefVector,
    pub payload: Option<Vec<u8>>,
}

impl CodedPacket {
    pub fn from_coef(coef: CoefVector) -> Self {
        CodedPacket { coef, payload: None }
    }
}

/// XORs the given symbols into one packet over a universe of `n_symbols`.
///
/// The symbol set must be nonempty: a degree-0 packet is never transmitted.
pub fn xor_combine<I>(n_symbols: usize, symbol_ids: I) -> Result<CodedPacket, CodecError>
where
    I: IntoIterator<Item = SymbolId>,
{
    let mut coef = BitSet::zeros(n_symbols);
    let mut any = false;
    for id in symbol_ids {
        if id >= n_symbols {
            return Err(CodecError::SymbolOutOfRange(id, n_symbols));
        }
        coef.insert(id);
        any = true;
    }
    if !any {
        return Err(CodecError::EmptyCombination);
    }
    Ok(CodedPacket::from_coef(coef))
}

/// Like [`xor_combine`] but also XORs the referenced payloads together.
/// `originals[i]` is the payload of symbol `i`; all payloads must share one
/// length. Used by codec self-tests.
pub fn xor_combine_payloads(
    originals: &[Vec<u8>],
    symbol_ids: &[SymbolId],
) -> Result<CodedPacket, CodecError> {
    let mut packet = xor_combine(originals.len(), symbol_ids.iter().copied())?;
    let len = originals[symbol_ids[0]].len();
    let mut payload = vec![0u8; len];
    for &id in symbol_ids {
        for (acc, byte) in payload.iter_mut().zip(&originals[id]) {
            *acc ^= byte;
        }
    }
    packet.payload = Some(payload);
    Ok(packet)
}

/// Codeword degree: how many original symbols are combined in the packet.
pub fn degree(packet: &CodedPacket) -> usize {
    packet.coef.count_ones()
}

/// The simple decoding scheme: returns the one symbol the packet would
/// reveal given the already `recovered` set, or `None` when the packet is
/// not immediately decodable (zero or several unknowns) and is discarded.
pub fn simple_decode(recovered: &BitSet, packet: &CodedPacket) -> Option<SymbolId> {
    if packet.coef.count_missing_from(recovered) != 1 {
        return None;
    }
    let mut missing = packet.coef.clone();
    missing.subtract(recovered);
    missing.first_set()
}

/// Outcome of inserting one packet into a [`GjDecoder`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertOutcome {
    /// Whether the packet increased the matrix rank.
    pub innovative: bool,
    /// Symbols whose rows collapsed to unit vectors in this step, ascending.
    pub newly_decoded: Vec<SymbolId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct GjRow {
    coef: CoefVector,
    payload: Option<Vec<u8>>,
    pivot: usize,
}

/// Incremental Gauss-Jordan eliminator over GF(2).
///
/// Rows are kept in reduced row echelon form at all times: sorted by pivot
/// column, and every pivot column has exactly one set bit across the whole
/// matrix. Rank never decreases; a row that becomes a unit vector stays a
/// unit vector, so the decoded set grows monotonically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GjDecoder {
    n: usize,
    rows: Vec<GjRow>,
    decoded: BitSet,
}

impl GjDecoder {
    pub fn new(n_symbols: usize) -> Self {
        GjDecoder {
            n: n_symbols,
            rows: Vec::new(),
            decoded: BitSet::zeros(n_symbols),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Current matrix rank.
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Symbols fully decoded so far (rows that are unit vectors).
    pub fn decoded_set(&self) -> &BitSet {
        &self.decoded
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded.count_ones()
    }

    /// Payload of a decoded symbol, when payload tracking survived.
    pub fn payload_of(&self, symbol: SymbolId) -> Option<&[u8]> {
        if !self.decoded.contains(symbol) {
            return None;
        }
        self.rows
            .iter()
            .find(|r| r.pivot == symbol)
            .and_then(|r| r.payload.as_deref())
    }

    /// Inserts one packet, reducing it against the matrix and restoring
    /// reduced row echelon form.
    pub fn insert(&mut self, packet: &CodedPacket) -> Result<InsertOutcome, CodecError> {
        if packet.coef.len() != self.n {
            return Err(CodecError::DimensionMismatch {
                got: packet.coef.len(),
                want: self.n,
            });
        }

        let mut v = packet.coef.clone();
        let mut pay = packet.payload.clone();
        // Forward reduction: clear every existing pivot column from v.
        for row in &self.rows {
            if v.contains(row.pivot) {
                v.xor_with(&row.coef);
                pay = xor_payload(pay, &row.payload);
            }
        }

        let Some(pivot) = v.first_set() else {
            return Ok(InsertOutcome {
                innovative: false,
                newly_decoded: Vec::new(),
            });
        };

        // Back-substitution: the new pivot column must end up with a single
        // set bit. Rows that shrink to unit vectors decode their pivot.
        let mut newly = Vec::new();
        for row in &mut self.rows {
            if row.coef.contains(pivot) {
                row.coef.xor_with(&v);
                row.payload = xor_payload(row.payload.take(), &pay);
                if row.coef.count_ones() == 1 {
                    debug_assert_eq!(row.coef.first_set(), Some(row.pivot));
                    if !self.decoded.contains(row.pivot) {
                        self.decoded.insert(row.pivot);
                        newly.push(row.pivot);
                    }
                }
            }
        }

        if v.count_ones() == 1 {
            self.decoded.insert(pivot);
            newly.push(pivot);
        }
        let at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(
            at,
            GjRow {
                coef: v,
                payload: pay,
                pivot,
            },
        );

        newly.sort_unstable();
        Ok(InsertOutcome {
            innovative: true,
            newly_decoded: newly,
        })
    }

    /// Checks the reduced-row-echelon-form invariant: used by tests.
    pub fn is_rref(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].pivot < w[1].pivot)
            && self.rows.iter().all(|row| {
                row.coef.contains(row.pivot)
                    && self
                        .rows
                        .iter()
                        .filter(|other| other.coef.contains(row.pivot))
                        .count()
                        == 1
            })
    }
}

fn xor_payload(a: Option<Vec<u8>>, b: &Option<Vec<u8>>) -> Option<Vec<u8>> {
    match (a, b) {
        (Some(mut a), Some(b)) if a.len() == b.len() => {
            for (x, y) in a.iter_mut().zip(b) {
                *x ^= y;
            }
            Some(a)
        }
        _ => None,
    }
}
