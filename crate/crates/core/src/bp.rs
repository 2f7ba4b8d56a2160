//! Balanced-parentheses tree navigation.
//!
//! A tree with `n` nodes is a `2n`-bit [`BitVector`] written in pre-order:
//! `1` when a node opens, `0` when it closes. A node is identified by the
//! position of its opening bit; its 1-based pre-order index is `rank1(p)`.
//!
//! Write `E(p) = rank1(p) - rank0(p)` for the excess after position `p`
//! (`E(0) = 0`). Matching parentheses, parents and range minima are all
//! searches over `E`. Those run in `O(log n)` over a min-excess tree whose
//! leaves cover 256-bit blocks; inside a block the scan advances a byte at a
//! time through precomputed per-byte excess tables.

use thiserror::Error;

use crate::bitvec::{BitVecError, BitVector};

const BLOCK_BITS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BpError {
    #[error("bit sequence is not balanced")]
    Unbalanced,
    #[error("bit sequence does not encode a single rooted tree")]
    NotSingleRoot,
    #[error("empty tree")]
    Empty,
    #[error("position {0} is not an opening parenthesis")]
    NotOpen(usize),
    #[error("position {0} is not a closing parenthesis")]
    NotClose(usize),
    #[error("the root has no parent")]
    NoParent,
    #[error("node at position {0} is a leaf")]
    NoChild(usize),
    #[error("range [{0}..{1}] is empty or out of bounds")]
    BadRange(usize, usize),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error(transparent)]
    BitVec(#[from] BitVecError),
}

struct ByteTables {
    excess: [i8; 256],
    min: [i8; 256],
    min_pos: [u8; 256],
}

/// Per-byte excess summaries, bit 0 first.
const BYTES: ByteTables = {
    let mut t = ByteTables { excess: [0; 256], min: [0; 256], min_pos: [0; 256] };
    let mut b = 0;
    while b < 256 {
        let mut e: i8 = 0;
        let mut min: i8 = 9;
        let mut pos: u8 = 0;
        let mut k = 0;
        while k < 8 {
            e += if (b >> k) & 1 == 1 { 1 } else { -1 };
            if e < min {
                min = e;
                pos = k as u8;
            }
            k += 1;
        }
        t.excess[b] = e;
        t.min[b] = min;
        t.min_pos[b] = pos;
        b += 1;
    }
    t
};

/// Complete binary tree of per-block minimum excess, heap layout.
#[derive(Debug, Clone, PartialEq, Eq)]
struct MinTree {
    leaves: usize,
    nodes: Vec<u32>,
}

impl MinTree {
    fn build(block_mins: &[u32]) -> Self {
        let leaves = block_mins.len().next_power_of_two().max(1);
        let mut nodes = vec![u32::MAX; 2 * leaves];
        nodes[leaves..leaves + block_mins.len()].copy_from_slice(block_mins);
        for v in (1..leaves).rev() {
            nodes[v] = nodes[2 * v].min(nodes[2 * v + 1]);
        }
        MinTree { leaves, nodes }
    }

    #[inline]
    fn descend_left(&self, mut v: usize, d: i64) -> usize {
        while v < self.leaves {
            v = if i64::from(self.nodes[2 * v]) <= d { 2 * v } else { 2 * v + 1 };
        }
        v - self.leaves
    }

    #[inline]
    fn descend_right(&self, mut v: usize, d: i64) -> usize {
        while v < self.leaves {
            v = if i64::from(self.nodes[2 * v + 1]) <= d { 2 * v + 1 } else { 2 * v };
        }
        v - self.leaves
    }

    /// First block `>= b` whose minimum is `<= d`.
    fn first_from(&self, b: usize, d: i64) -> Option<usize> {
        if b >= self.leaves {
            return None;
        }
        let mut v = b + self.leaves;
        if i64::from(self.nodes[v]) <= d {
            return Some(b);
        }
        loop {
            if v == 1 {
                return None;
            }
            if v.is_multiple_of(2) && i64::from(self.nodes[v + 1]) <= d {
                return Some(self.descend_left(v + 1, d));
            }
            v /= 2;
        }
    }

    /// Last block `< b` whose minimum is `<= d`.
    fn last_before(&self, b: usize, d: i64) -> Option<usize> {
        let mut v = b + self.leaves;
        loop {
            if v == 1 {
                return None;
            }
            if v % 2 == 1 && i64::from(self.nodes[v - 1]) <= d {
                return Some(self.descend_right(v - 1, d));
            }
            v /= 2;
        }
    }

    /// Minimum over blocks `[lo, hi]`.
    fn range_min(&self, lo: usize, hi: usize) -> u32 {
        let mut l = lo + self.leaves;
        let mut r = hi + self.leaves + 1;
        let mut m = u32::MAX;
        while l < r {
            if l % 2 == 1 {
                m = m.min(self.nodes[l]);
                l += 1;
            }
            if r % 2 == 1 {
                r -= 1;
                m = m.min(self.nodes[r]);
            }
            l /= 2;
            r /= 2;
        }
        m
    }

    fn bits(&self) -> u64 {
        (self.nodes.len() * 32) as u64
    }
}

/// An ordinal tree stored as balanced parentheses with navigation support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpTree {
    bv: BitVector,
    mins: MinTree,
}

impl BpTree {
    /// Wraps a bit vector, checking that it encodes exactly one rooted tree.
    pub fn new(bv: BitVector) -> Result<Self, BpError> {
        if bv.is_empty() {
            return Err(BpError::Empty);
        }
        let n_bits = bv.len();
        let mut block_mins = Vec::with_capacity(n_bits.div_ceil(BLOCK_BITS));
        let mut e: i64 = 0;
        let mut block_min = i64::MAX;
        for p in 1..=n_bits {
            e += if bv.bit_unchecked(p) { 1 } else { -1 };
            if e < 0 {
                return Err(BpError::Unbalanced);
            }
            if e == 0 && p != n_bits {
                return Err(BpError::NotSingleRoot);
            }
            block_min = block_min.min(e);
            if p % BLOCK_BITS == 0 || p == n_bits {
                block_mins.push(block_min as u32);
                block_min = i64::MAX;
            }
        }
        if e != 0 {
            return Err(BpError::Unbalanced);
        }
        let mins = MinTree::build(&block_mins);
        Ok(BpTree { bv, mins })
    }

    pub fn bits(&self) -> &BitVector {
        &self.bv
    }

    pub fn into_bits(self) -> BitVector {
        self.bv
    }

    /// Number of nodes `n`; the sequence has `2n` bits.
    pub fn node_count(&self) -> usize {
        self.bv.len() / 2
    }

    pub fn leaf_count(&self) -> usize {
        self.bv.count_10()
    }

    pub fn internal_count(&self) -> usize {
        self.node_count() - self.leaf_count()
    }

    /// Directory overhead in bits: rank/select plus the min-excess tree.
    pub fn support_bits(&self) -> u64 {
        self.bv.support_bits() + self.mins.bits()
    }

    // ---- checked 1-based API ---------------------------------------------

    fn check_open(&self, p: usize) -> Result<(), BpError> {
        if self.bv.get(p)? {
            Ok(())
        } else {
            Err(BpError::NotOpen(p))
        }
    }

    /// `E(p)`, the excess after position `p`.
    pub fn excess(&self, p: usize) -> Result<i64, BpError> {
        Ok(2 * self.bv.rank1(p)? as i64 - p as i64)
    }

    pub fn find_close(&self, p: usize) -> Result<usize, BpError> {
        self.check_open(p)?;
        Ok(self.find_close_unchecked(p))
    }

    pub fn find_open(&self, q: usize) -> Result<usize, BpError> {
        if self.bv.get(q)? {
            return Err(BpError::NotClose(q));
        }
        Ok(self.find_open_unchecked(q))
    }

    /// Opening position of the parent of the node at `p`.
    pub fn enclose(&self, p: usize) -> Result<usize, BpError> {
        self.check_open(p)?;
        if p == 1 {
            return Err(BpError::NoParent);
        }
        Ok(self.enclose_unchecked(p))
    }

    /// Leftmost position of minimum excess in `[l..r]`.
    pub fn rmq(&self, l: usize, r: usize) -> Result<usize, BpError> {
        if l == 0 || l > r || r > self.bv.len() {
            return Err(BpError::BadRange(l, r));
        }
        Ok(self.rmq_unchecked(l, r))
    }

    pub fn pre_order_map(&self, p: usize) -> Result<usize, BpError> {
        self.check_open(p)?;
        Ok(self.bv.rank1_unchecked(p))
    }

    pub fn pre_order_select(&self, i: usize) -> Result<usize, BpError> {
        if i == 0 || i > self.node_count() {
            return Err(BpError::NodeOutOfRange(i));
        }
        Ok(self.pre_order_select_unchecked(i))
    }

    pub fn post_order_select(&self, i: usize) -> Result<usize, BpError> {
        if i == 0 || i > self.node_count() {
            return Err(BpError::NodeOutOfRange(i));
        }
        Ok(self.post_order_select_unchecked(i))
    }

    pub fn is_leaf(&self, p: usize) -> Result<bool, BpError> {
        self.check_open(p)?;
        Ok(self.is_leaf_unchecked(p))
    }

    pub fn first_child(&self, p: usize) -> Result<usize, BpError> {
        self.check_open(p)?;
        if self.is_leaf_unchecked(p) {
            return Err(BpError::NoChild(p));
        }
        Ok(p + 1)
    }

    pub fn next_sibling(&self, p: usize) -> Result<Option<usize>, BpError> {
        self.check_open(p)?;
        Ok(self.next_sibling_unchecked(p))
    }

    /// Lowest common ancestor of the nodes opening at `l` and `r`.
    pub fn lca(&self, l: usize, r: usize) -> Result<usize, BpError> {
        self.check_open(l)?;
        self.check_open(r)?;
        Ok(self.lca_unchecked(l, r))
    }

    /// Number of nodes in the subtree rooted at `p`.
    pub fn cluster_size(&self, p: usize) -> Result<usize, BpError> {
        self.check_open(p)?;
        Ok(self.cluster_size_unchecked(p))
    }

    /// Number of leaves in the subtree rooted at `p`.
    pub fn num_leaves(&self, p: usize) -> Result<usize, BpError> {
        self.check_open(p)?;
        Ok(self.num_leaves_unchecked(p))
    }

    // ---- unchecked core --------------------------------------------------

    #[inline]
    fn e(&self, p: usize) -> i64 {
        2 * self.bv.rank1_unchecked(p) as i64 - p as i64
    }

    #[inline]
    pub(crate) fn pre_order_map_unchecked(&self, p: usize) -> usize {
        self.bv.rank1_unchecked(p)
    }

    #[inline]
    pub(crate) fn pre_order_select_unchecked(&self, i: usize) -> usize {
        self.bv.select_unchecked(i, true)
    }

    #[inline]
    pub(crate) fn post_order_select_unchecked(&self, i: usize) -> usize {
        self.find_open_unchecked(self.bv.select_unchecked(i, false))
    }

    #[inline]
    pub(crate) fn is_leaf_unchecked(&self, p: usize) -> bool {
        !self.bv.bit_unchecked(p + 1)
    }

    #[inline]
    pub(crate) fn find_close_unchecked(&self, p: usize) -> usize {
        if !self.bv.bit_unchecked(p + 1) {
            return p + 1;
        }
        let d = self.e(p) - 1;
        self.fwd_search(p, d)
    }

    #[inline]
    pub(crate) fn find_open_unchecked(&self, q: usize) -> usize {
        if self.bv.bit_unchecked(q - 1) {
            return q - 1;
        }
        let d = self.e(q);
        self.bwd_search(q, d) + 1
    }

    #[inline]
    pub(crate) fn enclose_unchecked(&self, p: usize) -> usize {
        let d = self.e(p) - 2;
        self.bwd_search(p, d) + 1
    }

    #[inline]
    pub(crate) fn next_sibling_unchecked(&self, p: usize) -> Option<usize> {
        let c = self.find_close_unchecked(p);
        if c < self.bv.len() && self.bv.bit_unchecked(c + 1) {
            Some(c + 1)
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn cluster_size_unchecked(&self, p: usize) -> usize {
        (self.find_close_unchecked(p) - p).div_ceil(2)
    }

    #[inline]
    pub(crate) fn num_leaves_unchecked(&self, p: usize) -> usize {
        self.bv.rank10_unchecked(self.find_close_unchecked(p)) - self.bv.rank10_unchecked(p)
    }

    pub(crate) fn lca_unchecked(&self, l: usize, r: usize) -> usize {
        let (l, r) = if l <= r { (l, r) } else { (r, l) };
        if l == r {
            return l;
        }
        let m = self.rmq_unchecked(l, r);
        if m == l {
            // l encloses r
            return l;
        }
        self.enclose_unchecked(m + 1)
    }

    #[inline]
    fn block_of(p: usize) -> usize {
        (p - 1) / BLOCK_BITS
    }

    #[inline]
    fn block_end(&self, b: usize) -> usize {
        ((b + 1) * BLOCK_BITS).min(self.bv.len())
    }

    /// Smallest `q > p` with `E(q) <= d`, where `E(p) > d`.
    fn fwd_search(&self, p: usize, d: i64) -> usize {
        let b = Self::block_of(p);
        let end = self.block_end(b);
        if p < end {
            if let Some(q) = self.scan_fwd(p + 1, end, self.e(p), d) {
                return q;
            }
        }
        let nb = self.mins.first_from(b + 1, d).expect("balanced sequence always has a match");
        let start = nb * BLOCK_BITS + 1;
        self.scan_fwd(start, self.block_end(nb), self.e(start - 1), d).expect("block minimum guarantees a hit")
    }

    /// Largest `r < q` (`r >= 0`) with `E(r) <= d`, where `d >= 0`.
    fn bwd_search(&self, q: usize, d: i64) -> usize {
        let last = q - 1;
        if last == 0 {
            return 0;
        }
        let b = Self::block_of(last);
        if let Some(r) = self.scan_bwd(b * BLOCK_BITS + 1, last, self.e(last), d) {
            return r;
        }
        match self.mins.last_before(b, d) {
            Some(pb) => {
                let end = self.block_end(pb);
                self.scan_bwd(pb * BLOCK_BITS + 1, end, self.e(end), d).expect("block minimum guarantees a hit")
            }
            None => 0,
        }
    }

    /// First `q` in `[from, to]` with `E(q) <= d`, given `e = E(from - 1)`.
    fn scan_fwd(&self, from: usize, to: usize, mut e: i64, d: i64) -> Option<usize> {
        let mut q = from;
        while q <= to {
            if (q - 1).is_multiple_of(8) && q + 7 <= to {
                let byte = self.bv.byte_at(q) as usize;
                if e + i64::from(BYTES.min[byte]) > d {
                    e += i64::from(BYTES.excess[byte]);
                    q += 8;
                    continue;
                }
            }
            e += if self.bv.bit_unchecked(q) { 1 } else { -1 };
            if e <= d {
                return Some(q);
            }
            q += 1;
        }
        None
    }

    /// Last `r` in `[from, to]` with `E(r) <= d`, given `e = E(to)`.
    fn scan_bwd(&self, from: usize, to: usize, mut e: i64, d: i64) -> Option<usize> {
        let mut r = to;
        loop {
            if r.is_multiple_of(8) && r >= from + 7 {
                // byte covering positions r-7..=r
                let byte = self.bv.byte_at(r - 7) as usize;
                let before = e - i64::from(BYTES.excess[byte]);
                if before + i64::from(BYTES.min[byte]) > d {
                    e = before;
                    r -= 8;
                    if r < from {
                        return None;
                    }
                    continue;
                }
            }
            if e <= d {
                return Some(r);
            }
            e -= if self.bv.bit_unchecked(r) { 1 } else { -1 };
            if r == from {
                return None;
            }
            r -= 1;
        }
    }

    /// Leftmost minimum of `E` over `[from, to]`, given `e = E(from - 1)`.
    fn scan_min(&self, from: usize, to: usize, mut e: i64) -> (i64, usize) {
        let mut best = i64::MAX;
        let mut at = from;
        let mut q = from;
        while q <= to {
            if (q - 1).is_multiple_of(8) && q + 7 <= to {
                let byte = self.bv.byte_at(q) as usize;
                let m = e + i64::from(BYTES.min[byte]);
                if m < best {
                    best = m;
                    at = q + BYTES.min_pos[byte] as usize;
                }
                e += i64::from(BYTES.excess[byte]);
                q += 8;
                continue;
            }
            e += if self.bv.bit_unchecked(q) { 1 } else { -1 };
            if e < best {
                best = e;
                at = q;
            }
            q += 1;
        }
        (best, at)
    }

    pub(crate) fn rmq_unchecked(&self, l: usize, r: usize) -> usize {
        let bl = Self::block_of(l);
        let br = Self::block_of(r);
        if bl == br {
            return self.scan_min(l, r, self.e(l - 1)).1;
        }
        let (mut best, mut at) = self.scan_min(l, self.block_end(bl), self.e(l - 1));
        if bl + 1 < br {
            let m = i64::from(self.mins.range_min(bl + 1, br - 1));
            if m < best {
                let b = self.mins.first_from(bl + 1, m).expect("range minimum exists");
                let start = b * BLOCK_BITS + 1;
                let (v, pos) = self.scan_min(start, self.block_end(b), self.e(start - 1));
                debug_assert_eq!(v, m);
                best = v;
                at = pos;
            }
        }
        let start = br * BLOCK_BITS + 1;
        let (v, pos) = self.scan_min(start, r, self.e(start - 1));
        if v < best {
            at = pos;
        }
        at
    }
}
