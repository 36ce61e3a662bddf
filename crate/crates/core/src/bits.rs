//! Fixed-length packed bit vectors over GF(2).
//!
//! One `BitSet` does double duty throughout the crate: it is the coefficient
//! vector of a coded packet and it is the recovered-symbol set of a node.
//! All the neighborhood predicates (`R(C)`, `R*(C)`) reduce to word-parallel
//! AND/XOR plus popcounts on these vectors.

/// A fixed-length bit vector packed into `u64` words.
///
/// The length is set at construction and never changes. Bits past `len` in
/// the last word are always zero, so popcounts and equality work on whole
/// words. Binary operations panic if the operands have different lengths;
/// callers that take untrusted input (the decoder) check lengths first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

const WORD_BITS: usize = 64;

impl BitSet {
    /// An all-zero set of `len` bits.
    pub fn zeros(len: usize) -> Self {
        BitSet {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    /// An all-one set of `len` bits.
    pub fn ones_set(len: usize) -> Self {
        let mut s = BitSet {
            words: vec![!0u64; len.div_ceil(WORD_BITS)],
            len,
        };
        s.mask_tail();
        s
    }

    /// Builds a set of `len` bits with exactly the given indices set.
    ///
    /// Panics if an index is out of range.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut s = Self::zeros(len);
        for &i in indices {
            s.insert(i);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        self.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        self.words[i / WORD_BITS] &= !(1u64 << (i % WORD_BITS));
    }

    /// Number of set bits.
    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit, if any.
    pub fn first_set(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * WORD_BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// In-place XOR: `self ^= other`.
    #[inline]
    pub fn xor_with(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// In-place AND: `self &= other`.
    #[inline]
    pub fn and_with(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    /// In-place OR: `self |= other`.
    #[inline]
    pub fn or_with(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// In-place difference: `self &= !other`.
    #[inline]
    pub fn subtract(&mut self, other: &BitSet) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    /// `popcount(self & other)` without allocating.
    #[inline]
    pub fn count_and(&self, other: &BitSet) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `popcount(self & !other)` without allocating: how many of `self`'s
    /// bits are missing from `other`.
    #[inline]
    pub fn count_missing_from(&self, other: &BitSet) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    /// True if every set bit of `self` is also set in `other`.
    #[inline]
    pub fn is_subset_of(&self, other: &BitSet) -> bool {
        self.check_len(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Iterates over set-bit indices in ascending order.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            set: self,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Index of the `k`-th set bit (0-based, ascending). Panics if `k` is
    /// not less than `count_ones()`.
    pub fn nth_set(&self, k: usize) -> usize {
        let mut remaining = k;
        for (wi, &w) in self.words.iter().enumerate() {
            let pc = w.count_ones() as usize;
            if remaining < pc {
                let mut w = w;
                for _ in 0..remaining {
                    w &= w - 1; // clear lowest set bit
                }
                return wi * WORD_BITS + w.trailing_zeros() as usize;
            }
            remaining -= pc;
        }
        panic!("nth_set({k}) out of range: only {} bits set", self.count_ones());
    }

    /// Collects the set-bit indices into a vector.
    pub fn to_indices(&self) -> Vec<usize> {
        self.ones().collect()
    }

    /// Raw word storage, for the selection inner loops.
    #[inline]
    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    fn check_len(&self, other: &BitSet) {
        assert_eq!(
            self.len, other.len,
            "length mismatch: {} vs {}",
            self.len, other.len
        );
    }

    fn mask_tail(&mut self) {
        let tail = self.len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

/// Iterator over set-bit indices.
pub struct Ones<'a> {
    set: &'a BitSet,
    word_idx: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * WORD_BITS + bit);
            }
            self.word_idx += 1;
            if self.word_idx >= self.set.words.len() {
                return None;
            }
            self.current = self.set.words[self.word_idx];
        }
    }
}

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitSet[{}; {{", self.len)?;
        for (i, idx) in self.ones().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "}}]")
    }
}
