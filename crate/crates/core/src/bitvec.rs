//! Plain bit vector with rank/select directories.
//!
//! Positions are 1-based: position `p` is the `p`-th bit of the sequence and
//! `rank*(p)` counts over the inclusive prefix `[1..p]`, so `rank*(0) == 0`.
//! A `"10"` occurrence is attributed to the position of its `0`.
//!
//! Directories follow the rank9 layout: every 512-bit superblock stores an
//! absolute count plus seven packed 9-bit word offsets. Select samples the
//! superblock of every 4096-th target bit and finishes with a bounded search.

use thiserror::Error;

const WORD_BITS: usize = 64;
const SUPER_WORDS: usize = 8;
const SUPER_BITS: usize = WORD_BITS * SUPER_WORDS;
const SELECT_SAMPLE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitVecError {
    #[error("position {pos} outside 0..={len}")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("ordinal {ordinal} outside 1..={count}")]
    OrdinalOutOfRange { ordinal: usize, count: usize },
}

/// Rank9-style cumulative counts over a sequence of 64-bit words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct RankDirectory {
    /// `[absolute, packed]` per superblock, plus one trailing superblock.
    entries: Vec<u64>,
}

impl RankDirectory {
    fn build(n_words: usize, word: impl Fn(usize) -> u64) -> Self {
        let n_super = n_words / SUPER_WORDS + 1;
        let mut entries = Vec::with_capacity(2 * n_super);
        let mut total = 0u64;
        for sb in 0..n_super {
            let base = sb * SUPER_WORDS;
            let mut packed = 0u64;
            let mut inner = 0u64;
            for k in 0..SUPER_WORDS {
                if k > 0 {
                    packed |= inner << (9 * (k - 1));
                }
                if base + k < n_words {
                    inner += u64::from(word(base + k).count_ones());
                }
            }
            entries.push(total);
            entries.push(packed);
            total += inner;
        }
        RankDirectory { entries }
    }

    /// Count of set bits in words `[0, wi)`.
    #[inline]
    fn words_before(&self, wi: usize) -> u64 {
        let sb = wi / SUPER_WORDS;
        let k = wi % SUPER_WORDS;
        let abs = self.entries[2 * sb];
        if k == 0 {
            abs
        } else {
            abs + ((self.entries[2 * sb + 1] >> (9 * (k - 1))) & 0x1FF)
        }
    }

    #[inline]
    fn superblock_before(&self, sb: usize) -> u64 {
        self.entries[2 * sb]
    }

    fn n_superblocks(&self) -> usize {
        self.entries.len() / 2
    }

    fn bits(&self) -> u64 {
        (self.entries.len() * 64) as u64
    }
}

/// Bit sequence with constant-time `rank1`, `rank0`, `rank10` and
/// sampled `select1` / `select0`.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    tens: usize,
    rank1: RankDirectory,
    rank10: RankDirectory,
    select1: Vec<u32>,
    select0: Vec<u32>,
}

/// Incremental construction of a [`BitVector`].
#[derive(Debug, Clone, Default)]
pub struct BitVectorBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitVectorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitVectorBuilder { words: Vec::with_capacity(bits.div_ceil(WORD_BITS)), len: 0 }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let off = self.len % WORD_BITS;
        if off == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1u64 << off;
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn build(self) -> BitVector {
        BitVector::from_words(self.words, self.len)
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut b = BitVectorBuilder::new();
        for bit in iter {
            b.push(bit);
        }
        b.build()
    }
}

impl BitVector {
    /// Builds from LSB-first words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(WORD_BITS), 0);
        if !len.is_multiple_of(WORD_BITS) {
            let last = words.len() - 1;
            words[last] &= (1u64 << (len % WORD_BITS)) - 1;
        }
        words.shrink_to_fit();
        let n_words = words.len();
        let rank1 = RankDirectory::build(n_words, |i| words[i]);
        let rank10 = RankDirectory::build(n_words, |i| ten_mask(&words, len, i));
        let ones = rank1.words_before(n_words) as usize;
        let tens = rank10.words_before(n_words) as usize;
        let mut bv = BitVector { words, len, ones, tens, rank1, rank10, select1: Vec::new(), select0: Vec::new() };
        bv.select1 = bv.sample_select(true);
        bv.select0 = bv.sample_select(false);
        bv
    }

    /// Parses a string of `'0'`/`'1'` characters; other characters are skipped.
    pub fn from_bit_str(s: &str) -> Self {
        s.chars()
            .filter_map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect()
    }

    fn sample_select(&self, ones: bool) -> Vec<u32> {
        let total = if ones { self.ones } else { self.len - self.ones };
        let mut samples = Vec::with_capacity(total.div_ceil(SELECT_SAMPLE));
        let mut ordinal = 1usize;
        for sb in 0..self.rank1.n_superblocks() {
            let next = self.count_before_superblock(sb + 1, ones);
            while ordinal <= total && (ordinal as u64) <= next {
                samples.push(sb as u32);
                ordinal += SELECT_SAMPLE;
            }
            if ordinal > total {
                break;
            }
        }
        samples
    }

    /// Targets in superblocks `[0, sb)`; `sb` may be one past the last.
    #[inline]
    fn count_before_superblock(&self, sb: usize, ones: bool) -> u64 {
        let n = self.rank1.n_superblocks();
        let (ones_before, bits_before) = if sb >= n {
            (self.ones as u64, self.len as u64)
        } else {
            (self.rank1.superblock_before(sb), ((sb * SUPER_BITS).min(self.len)) as u64)
        };
        if ones {
            ones_before
        } else {
            bits_before - ones_before
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.ones
    }

    /// Number of `"10"` occurrences in the whole sequence.
    pub fn count_10(&self) -> usize {
        self.tens
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (1..=self.len).map(move |p| self.bit_unchecked(p))
    }

    /// Bits spent on rank/select directories, excluding the raw sequence.
    pub fn support_bits(&self) -> u64 {
        self.rank1.bits() + self.rank10.bits() + 32 * (self.select1.len() + self.select0.len()) as u64
    }

    fn check_pos(&self, p: usize) -> Result<(), BitVecError> {
        if p > self.len {
            Err(BitVecError::PositionOutOfRange { pos: p, len: self.len })
        } else {
            Ok(())
        }
    }

    pub fn get(&self, p: usize) -> Result<bool, BitVecError> {
        if p == 0 || p > self.len {
            return Err(BitVecError::PositionOutOfRange { pos: p, len: self.len });
        }
        Ok(self.bit_unchecked(p))
    }

    pub fn rank1(&self, p: usize) -> Result<usize, BitVecError> {
        self.check_pos(p)?;
        Ok(self.rank1_unchecked(p))
    }

    pub fn rank0(&self, p: usize) -> Result<usize, BitVecError> {
        self.check_pos(p)?;
        Ok(p - self.rank1_unchecked(p))
    }

    pub fn rank10(&self, p: usize) -> Result<usize, BitVecError> {
        self.check_pos(p)?;
        Ok(self.rank10_unchecked(p))
    }

    pub fn select1(&self, i: usize) -> Result<usize, BitVecError> {
        if i == 0 || i > self.ones {
            return Err(BitVecError::OrdinalOutOfRange { ordinal: i, count: self.ones });
        }
        Ok(self.select_unchecked(i, true))
    }

    pub fn select0(&self, i: usize) -> Result<usize, BitVecError> {
        let zeros = self.count_zeros();
        if i == 0 || i > zeros {
            return Err(BitVecError::OrdinalOutOfRange { ordinal: i, count: zeros });
        }
        Ok(self.select_unchecked(i, false))
    }

    #[inline]
    pub(crate) fn bit_unchecked(&self, p: usize) -> bool {
        let i = p - 1;
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    /// Eight bits starting at position `p`, LSB = position `p`. `p - 1` must be
    /// a multiple of 8.
    #[inline]
    pub(crate) fn byte_at(&self, p: usize) -> u8 {
        let i = p - 1;
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) as u8
    }

    #[inline]
    pub(crate) fn rank1_unchecked(&self, p: usize) -> usize {
        let wi = p / WORD_BITS;
        let rem = p % WORD_BITS;
        let mut r = self.rank1.words_before(wi);
        if rem != 0 {
            r += u64::from((self.words[wi] & ((1u64 << rem) - 1)).count_ones());
        }
        r as usize
    }

    #[inline]
    pub(crate) fn rank10_unchecked(&self, p: usize) -> usize {
        let wi = p / WORD_BITS;
        let rem = p % WORD_BITS;
        let mut r = self.rank10.words_before(wi);
        if rem != 0 {
            let m = ten_mask(&self.words, self.len, wi);
            r += u64::from((m & ((1u64 << rem) - 1)).count_ones());
        }
        r as usize
    }

    /// Position of the `i`-th one (or zero); `1 <= i <= count`.
    pub(crate) fn select_unchecked(&self, i: usize, ones: bool) -> usize {
        let samples = if ones { &self.select1 } else { &self.select0 };
        let s = (i - 1) / SELECT_SAMPLE;
        let mut lo = samples[s] as usize;
        let mut hi = match samples.get(s + 1) {
            Some(&x) => x as usize,
            None => self.rank1.n_superblocks() - 1,
        };
        let target = i as u64;
        // largest sb in [lo, hi] with count_before(sb) < target
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.count_before_superblock(mid, ones) < target {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let base_word = lo * SUPER_WORDS;
        let mut k = SUPER_WORDS - 1;
        loop {
            let wi = base_word + k;
            if k == 0 || wi < self.words.len() {
                let ones_before = self.rank1.words_before(wi);
                let in_words = if ones { ones_before } else { (wi * WORD_BITS) as u64 - ones_before };
                if k == 0 || in_words < target {
                    let w = if ones { self.words[wi] } else { !self.words[wi] };
                    let off = select_in_word(w, (target - in_words - 1) as u32);
                    return wi * WORD_BITS + off as usize + 1;
                }
            }
            k -= 1;
        }
    }
}

/// Word `wi` of the `"10"` marker sequence: bit `j` set iff bit `j` is 0 and
/// bit `j - 1` is 1.
#[inline]
fn ten_mask(words: &[u64], len: usize, wi: usize) -> u64 {
    let w = words[wi];
    let carry = if wi == 0 { 0 } else { words[wi - 1] >> 63 };
    let mut m = !w & ((w << 1) | carry);
    let end = (wi + 1) * WORD_BITS;
    if end > len {
        let valid = len - wi * WORD_BITS;
        m &= (1u64 << valid) - 1;
    }
    m
}

/// Offset of the `k`-th (0-based) set bit of `w`.
#[inline]
fn select_in_word(mut w: u64, mut k: u32) -> u32 {
    let mut base = 0;
    loop {
        let c = (w & 0xFF).count_ones();
        if k < c {
            break;
        }
        k -= c;
        w >>= 8;
        base += 8;
    }
    let mut b = w & 0xFF;
    for _ in 0..k {
        b &= b - 1;
    }
    base + b.trailing_zeros()
}
