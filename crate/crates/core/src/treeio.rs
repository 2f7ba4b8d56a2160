//! Binary serialisation of a parsed tree, and bit accounting.
//!
//! Layout, all scalars little-endian:
//!
//! ```text
//! "SBPT"  version:u8  flags:u8  n:u64
//! bp bits: ceil(2n/8) bytes, position 1 = MSB of the first byte, zero padded
//! label count:u64, then per label: node index (LEB128), byte length (LEB128), UTF-8
//! if flags & 1: n weights as f64, by pre-order index
//! ```

use std::fmt;

use thiserror::Error;

use crate::bitvec::BitVectorBuilder;
use crate::bp::BpTree;
use crate::newick::{LabelTable, ParsedTree, TreePair};

pub const MAGIC: &[u8; 4] = b"SBPT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
const FLAG_WEIGHTS: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("not a packed tree (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u8),
    #[error("unknown flag bits {0:#04x}")]
    BadFlags(u8),
    #[error("truncated input while reading {0}")]
    Truncated(&'static str),
    #[error("nonzero padding bits after the parentheses")]
    NonzeroPadding,
    #[error("parentheses do not form a single rooted tree")]
    Unbalanced,
    #[error("label is not valid UTF-8")]
    BadUtf8,
    #[error("label node index {0} out of order or out of range")]
    BadIndex(u64),
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("length field too large")]
    Overflow,
}

/// Number of bytes holding the parentheses of an `n`-node tree.
pub fn bp_bytes(n: usize) -> usize {
    (2 * n).div_ceil(8)
}

/// Canonical bytes for a tree, its labels and optional weights.
pub fn pack(tree: &BpTree, labels: &LabelTable, weights: Option<&[f64]>) -> Vec<u8> {
    let n = tree.node_count();
    let mut out = Vec::with_capacity(HEADER_LEN + bp_bytes(n) + 8 + labels.len() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(if weights.is_some() { FLAG_WEIGHTS } else { 0 });
    out.extend_from_slice(&(n as u64).to_le_bytes());

    let mut byte = 0u8;
    for (k, bit) in tree.bits().iter().enumerate() {
        byte |= (bit as u8) << (7 - k % 8);
        if k % 8 == 7 {
            out.push(byte);
            byte = 0;
        }
    }
    if !(2 * n).is_multiple_of(8) {
        out.push(byte);
    }

    out.extend_from_slice(&(labels.labelled_count() as u64).to_le_bytes());
    for (i, name) in labels.iter() {
        leb128::write::unsigned(&mut out, i as u64).expect("vec write");
        leb128::write::unsigned(&mut out, name.len() as u64).expect("vec write");
        out.extend_from_slice(name.as_bytes());
    }

    if let Some(w) = weights {
        for x in w {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    rest: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        if self.rest.len() < k {
            return Err(FormatError::Truncated(what));
        }
        let (head, tail) = self.rest.split_at(k);
        self.rest = tail;
        Ok(head)
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn varint(&mut self, what: &'static str) -> Result<u64, FormatError> {
        leb128::read::unsigned(&mut self.rest).map_err(|e| match e {
            leb128::read::Error::Overflow => FormatError::Overflow,
            leb128::read::Error::IoError(_) => FormatError::Truncated(what),
        })
    }
}

/// Inverse of [`pack`].
pub fn unpack(bytes: &[u8]) -> Result<ParsedTree, FormatError> {
    let mut r = Reader { rest: bytes };
    if r.take(4, "magic").map_err(|_| FormatError::BadMagic)? != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let flags = r.take(1, "flags")?[0];
    if flags & !FLAG_WEIGHTS != 0 {
        return Err(FormatError::BadFlags(flags));
    }
    let n = r.u64("node count")?;
    let n = usize::try_from(n).ok().filter(|&n| n <= usize::MAX / 16).ok_or(FormatError::Overflow)?;

    let len = 2 * n;
    let raw = r.take(bp_bytes(n), "parentheses")?;
    let mut b = BitVectorBuilder::with_capacity(len);
    for k in 0..len {
        b.push(raw[k / 8] >> (7 - k % 8) & 1 == 1);
    }
    if len % 8 != 0 && raw[len / 8] & (0xff >> (len % 8)) != 0 {
        return Err(FormatError::NonzeroPadding);
    }
    let tree = BpTree::new(b.build()).map_err(|_| FormatError::Unbalanced)?;

    let count = r.u64("label count")?;
    if count > n as u64 {
        return Err(FormatError::BadIndex(count));
    }
    let mut names: Vec<(usize, String)> = Vec::with_capacity(count as usize);
    let mut last = 0u64;
    for _ in 0..count {
        let i = r.varint("label index")?;
        if i <= last || i > n as u64 {
            return Err(FormatError::BadIndex(i));
        }
        last = i;
        let k = usize::try_from(r.varint("label length")?).map_err(|_| FormatError::Overflow)?;
        let s = std::str::from_utf8(r.take(k, "label")?).map_err(|_| FormatError::BadUtf8)?;
        names.push((i as usize, s.to_string()));
    }
    let labels = LabelTable::from_pairs(n, names.iter().map(|(i, s)| (*i, s.as_str())));

    let weights = if flags & FLAG_WEIGHTS != 0 {
        let raw = r.take(8 * n, "weights")?;
        Some(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    } else {
        None
    };
    if !r.rest.is_empty() {
        return Err(FormatError::TrailingBytes(r.rest.len()));
    }
    Ok(ParsedTree { tree, labels, weights })
}

/// Bit footprint of the succinct representation.
///
/// The per-tree figures cover one parentheses vector, its directories and a
/// 32-bit code map entry per node. `pair_bits` adds the second tree's vector
/// and directories, which is what a distance computation holds in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeReport {
    pub n: u64,
    pub bp_bits: u64,
    pub support_bits: u64,
    pub map_bits: u64,
    pub total_bits: u64,
    /// Day's tables in the worst case, `192n - 64`.
    pub comparison_bits_day: u64,
    pub pair_bits: Option<u64>,
}

impl SizeReport {
    pub fn of_tree(tree: &BpTree) -> Self {
        let n = tree.node_count() as u64;
        let bp_bits = 2 * n;
        let support_bits = tree.support_bits();
        let map_bits = 32 * n;
        SizeReport {
            n,
            bp_bits,
            support_bits,
            map_bits,
            total_bits: bp_bits + support_bits + map_bits,
            comparison_bits_day: day_bits_worst_case(n),
            pair_bits: None,
        }
    }
}

pub fn day_bits_worst_case(n: u64) -> u64 {
    (192 * n).saturating_sub(64)
}

pub fn size_report(pair: &TreePair) -> SizeReport {
    let mut r = SizeReport::of_tree(pair.t1());
    let t2 = pair.t2();
    r.pair_bits = Some(r.total_bits + 2 * t2.node_count() as u64 + t2.support_bits());
    r
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes\t{}", self.n)?;
        writeln!(f, "bp_bits\t{}", self.bp_bits)?;
        writeln!(f, "support_bits\t{}", self.support_bits)?;
        writeln!(f, "map_bits\t{}", self.map_bits)?;
        writeln!(f, "total_bits\t{}", self.total_bits)?;
        if let Some(p) = self.pair_bits {
            writeln!(f, "pair_bits\t{p}")?;
        }
        write!(f, "comparison_bits_day\t{}", self.comparison_bits_day)
    }
}
