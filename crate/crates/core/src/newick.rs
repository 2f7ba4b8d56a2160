//! Single-pass newick parsing straight into balanced parentheses.
//!
//! `(` emits an opening bit, a leaf emits `1 0`, `)` emits a closing bit.
//! Nodes are numbered in pre-order as they are met, which is exactly the
//! `rank1` index of their opening bit. Labels of the first tree go into a
//! transient hash table; labels of the second tree are looked up there to fill
//! the [`CodeMap`]. The table is dropped before [`parse_pair`] returns.
//!
//! Grammar notes: a label is a maximal run of characters other than
//! `( ) , : ;` and whitespace. Weights follow `:` and are decimal literals with
//! optional sign, fraction and exponent. Quoted labels and `[...]` comments are
//! not recognised.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::bitvec::BitVectorBuilder;
use crate::bp::BpTree;

/// Which nodes carry labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelMode {
    /// Only leaves are labelled; internal labels are rejected.
    Leaf,
    /// Every node, internal ones included, is labelled.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("empty tree")]
    EmptyTree,
    #[error("missing ';' terminator")]
    MissingTerminator,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected input after ';'")]
    TrailingInput,
    #[error("malformed weight {0:?}")]
    MalformedWeight(String),
    #[error("leaf without a label")]
    UnlabelledLeaf,
    #[error("internal node without a label in fully labelled mode")]
    UnlabelledNode,
    #[error("internal label {0:?} in leaf-labelled mode")]
    InternalLabel(String),
    #[error("node with a single child in leaf-labelled mode")]
    UnaryNode,
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("label {0:?} does not occur in the other tree")]
    MissingInOtherTree(String),
    #[error("tree has more nodes than a 32-bit index can address")]
    TooLarge,
}

/// A parse failure, with the tree (1 or 2) and byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tree {tree}, offset {offset}: {kind}")]
pub struct ParseError {
    pub tree: u8,
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    /// True when the inputs parse but disagree on their label sets.
    pub fn is_label_mismatch(&self) -> bool {
        matches!(self.kind, ParseErrorKind::MissingInOtherTree(_))
    }
}

/// Node labels of one tree, indexed by 1-based pre-order index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    text: String,
    ends: Vec<u32>,
}

impl LabelTable {
    fn push(&mut self, label: &str) {
        self.text.push_str(label);
        self.ends.push(self.text.len() as u32);
    }

    /// Label of node `i`, or `None` when it is unlabelled or out of range.
    pub fn name(&self, i: usize) -> Option<&str> {
        if i == 0 || i > self.ends.len() {
            return None;
        }
        let start = if i == 1 { 0 } else { self.ends[i - 2] as usize };
        let s = &self.text[start..self.ends[i - 1] as usize];
        (!s.is_empty()).then_some(s)
    }

    /// Index of the node carrying `label`. Linear scan.
    pub fn lookup(&self, label: &str) -> Option<usize> {
        (1..=self.ends.len()).find(|&i| self.name(i) == Some(label))
    }

    /// Number of nodes covered (labelled or not).
    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    /// `(index, label)` for every labelled node.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> + '_ {
        (1..=self.len()).filter_map(move |i| self.name(i).map(|s| (i, s)))
    }

    pub fn labelled_count(&self) -> usize {
        self.iter().count()
    }

    /// Builds a table for `n` nodes from `(index, label)` pairs.
    pub fn from_pairs<'a>(n: usize, pairs: impl IntoIterator<Item = (usize, &'a str)>) -> Self {
        let mut by_index: Vec<&str> = vec![""; n];
        for (i, s) in pairs {
            by_index[i - 1] = s;
        }
        let mut t = LabelTable::default();
        for s in by_index {
            t.push(s);
        }
        t
    }
}

/// Tree-1 pre-order index → tree-2 pre-order index of the same label; `0`
/// marks an unlabelled tree-1 node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap(Vec<u32>);

impl CodeMap {
    /// Tree-2 index for tree-1 node `i`, if node `i` is labelled.
    #[inline]
    pub fn get(&self, i: usize) -> Option<usize> {
        match self.0[i - 1] {
            0 => None,
            j => Some(j as usize),
        }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-node edge weights of both trees plus their grand total.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWeights {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub sum: f64,
}

/// One parsed tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTree {
    pub tree: BpTree,
    pub labels: LabelTable,
    /// Weight of the edge entering each node, by pre-order index − 1.
    pub weights: Option<Vec<f64>>,
}

/// Two trees over the same taxa, ready for distance computation.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePair {
    t1: BpTree,
    t2: BpTree,
    code_map: CodeMap,
    labels: Option<(LabelTable, LabelTable)>,
    weights: Option<PairWeights>,
    mode: LabelMode,
}

impl TreePair {
    pub fn t1(&self) -> &BpTree {
        &self.t1
    }

    pub fn t2(&self) -> &BpTree {
        &self.t2
    }

    pub fn code_map(&self) -> &CodeMap {
        &self.code_map
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn weights(&self) -> Option<&PairWeights> {
        self.weights.as_ref()
    }

    /// Node count of tree 1 (and of tree 2 in fully labelled mode).
    pub fn n(&self) -> usize {
        self.t1.node_count()
    }

    pub fn labels1(&self) -> Option<&LabelTable> {
        self.labels.as_ref().map(|l| &l.0)
    }

    pub fn labels2(&self) -> Option<&LabelTable> {
        self.labels.as_ref().map(|l| &l.1)
    }

    /// Frees the label strings; distances only need the bits and the map.
    pub fn discard_labels(&mut self) {
        self.labels = None;
    }
}

struct Scanned {
    tree: BpTree,
    labels: LabelTable,
    weights: Option<Vec<f64>>,
    weight_sum: f64,
}

fn is_label_char(c: u8) -> bool {
    !matches!(c, b'(' | b')' | b',' | b':' | b';') && !c.is_ascii_whitespace()
}

struct Scanner<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn label(&mut self) -> (&'a str, usize) {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && is_label_char(self.bytes[self.pos]) {
            self.pos += 1;
        }
        (&self.text[start..self.pos], start)
    }

    fn weight(&mut self) -> Result<Option<f64>, (usize, ParseErrorKind)> {
        self.skip_ws();
        if self.peek() != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && matches!(self.bytes[self.pos], b'0'..=b'9' | b'+' | b'-' | b'.' | b'e' | b'E')
        {
            self.pos += 1;
        }
        let lit = &self.text[start..self.pos];
        if !valid_decimal(lit) {
            // include the offending tail, if any, in the message
            let end = self.bytes[self.pos..]
                .iter()
                .position(|&c| !is_label_char(c))
                .map_or(self.bytes.len(), |k| self.pos + k);
            return Err((start, ParseErrorKind::MalformedWeight(self.text[start..end].to_string())));
        }
        match lit.parse::<f64>() {
            Ok(w) if w.is_finite() => Ok(Some(w)),
            _ => Err((start, ParseErrorKind::MalformedWeight(lit.to_string()))),
        }
    }
}

/// `[+-]? (d+ (. d*)? | . d+) ([eE] [+-]? d+)?`
fn valid_decimal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// Scans one newick tree. `on_label(index, label, offset)` sees every label.
fn scan<'a>(
    text: &'a str,
    tree_no: u8,
    mode: LabelMode,
    weighted: bool,
    mut on_label: impl FnMut(u32, &'a str) -> Result<(), ParseErrorKind>,
) -> Result<Scanned, ParseError> {
    let err = |offset: usize, kind: ParseErrorKind| ParseError { tree: tree_no, offset, kind };
    let mut sc = Scanner { text, bytes: text.as_bytes(), pos: 0 };
    sc.skip_ws();
    match sc.peek() {
        None => return Err(err(0, ParseErrorKind::EmptyTree)),
        Some(b';') => return Err(err(sc.pos, ParseErrorKind::EmptyTree)),
        _ => {}
    }

    let mut bits = BitVectorBuilder::with_capacity(text.len());
    // labels by pre-order index - 1; internal ones arrive after their subtree
    let mut names: Vec<&'a str> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut weight_sum = 0.0;
    // (pre-order index, children seen so far)
    let mut stack: Vec<(u32, u32)> = Vec::new();
    let mut index: u32 = 0;

    let mut set_weight = |sc: &mut Scanner<'a>, weights: &mut Vec<f64>, idx: u32| match sc.weight() {
        Ok(Some(w)) => {
            if weighted {
                weights[idx as usize - 1] = w;
                weight_sum += w;
            }
            Ok(())
        }
        Ok(None) => Ok(()),
        Err((off, kind)) => Err(err(off, kind)),
    };

    let mut expect_node = true;
    loop {
        sc.skip_ws();
        let at = sc.pos;
        if expect_node {
            let next_index = index.checked_add(1).ok_or_else(|| err(at, ParseErrorKind::TooLarge))?;
            match sc.peek() {
                Some(b'(') => {
                    sc.pos += 1;
                    index = next_index;
                    if let Some(top) = stack.last_mut() {
                        top.1 += 1;
                    }
                    stack.push((index, 0));
                    bits.push(true);
                    names.push("");
                    if weighted {
                        weights.push(0.0);
                    }
                }
                Some(c) if is_label_char(c) || c == b':' => {
                    index = next_index;
                    if let Some(top) = stack.last_mut() {
                        top.1 += 1;
                    }
                    bits.push(true);
                    bits.push(false);
                    let (label, off) = sc.label();
                    if label.is_empty() {
                        return Err(err(off, ParseErrorKind::UnlabelledLeaf));
                    }
                    names.push(label);
                    on_label(index, label).map_err(|k| err(off, k))?;
                    if weighted {
                        weights.push(0.0);
                    }
                    set_weight(&mut sc, &mut weights, index)?;
                    expect_node = false;
                }
                Some(b',') | Some(b')') | Some(b';') => {
                    return Err(err(at, ParseErrorKind::UnlabelledLeaf));
                }
                Some(_) => {
                    let c = text[at..].chars().next().unwrap();
                    return Err(err(at, ParseErrorKind::UnexpectedChar(c)));
                }
                None => return Err(err(at, ParseErrorKind::Unbalanced)),
            }
        } else {
            match sc.peek() {
                Some(b',') => {
                    if stack.is_empty() {
                        return Err(err(at, ParseErrorKind::UnexpectedChar(',')));
                    }
                    sc.pos += 1;
                    expect_node = true;
                }
                Some(b')') => {
                    let Some((idx, kids)) = stack.pop() else {
                        return Err(err(at, ParseErrorKind::Unbalanced));
                    };
                    sc.pos += 1;
                    if mode == LabelMode::Leaf && kids == 1 {
                        return Err(err(at, ParseErrorKind::UnaryNode));
                    }
                    let (label, off) = sc.label();
                    match (mode, label.is_empty()) {
                        (LabelMode::Leaf, false) => {
                            return Err(err(off, ParseErrorKind::InternalLabel(label.to_string())));
                        }
                        (LabelMode::Full, true) => {
                            return Err(err(off, ParseErrorKind::UnlabelledNode));
                        }
                        (LabelMode::Full, false) => {
                            names[idx as usize - 1] = label;
                            on_label(idx, label).map_err(|k| err(off, k))?;
                        }
                        (LabelMode::Leaf, true) => {}
                    }
                    set_weight(&mut sc, &mut weights, idx)?;
                    bits.push(false);
                }
                Some(b';') => {
                    if !stack.is_empty() {
                        return Err(err(at, ParseErrorKind::Unbalanced));
                    }
                    sc.pos += 1;
                    sc.skip_ws();
                    if sc.pos != sc.bytes.len() {
                        return Err(err(sc.pos, ParseErrorKind::TrailingInput));
                    }
                    break;
                }
                Some(b'(') => return Err(err(at, ParseErrorKind::UnexpectedChar('('))),
                Some(_) => {
                    let c = text[at..].chars().next().unwrap();
                    return Err(err(at, ParseErrorKind::UnexpectedChar(c)));
                }
                None => {
                    let kind =
                        if stack.is_empty() { ParseErrorKind::MissingTerminator } else { ParseErrorKind::Unbalanced };
                    return Err(err(at, kind));
                }
            }
        }
    }

    let mut labels = LabelTable::default();
    for name in names {
        labels.push(name);
    }
    let tree = BpTree::new(bits.build()).map_err(|_| err(text.len(), ParseErrorKind::Unbalanced))?;
    Ok(Scanned { tree, labels, weights: weighted.then_some(weights), weight_sum })
}

/// Parses a single tree.
pub fn parse_tree(text: &str, mode: LabelMode, weighted: bool) -> Result<ParsedTree, ParseError> {
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let s = scan(text, 1, mode, weighted, |_, label| {
        if seen.insert(label, ()).is_some() {
            Err(ParseErrorKind::DuplicateLabel(label.to_string()))
        } else {
            Ok(())
        }
    })?;
    Ok(ParsedTree { tree: s.tree, labels: s.labels, weights: s.weights })
}

/// Parses two trees over the same taxa into a [`TreePair`].
pub fn parse_pair(text1: &str, text2: &str, mode: LabelMode, weighted: bool) -> Result<TreePair, ParseError> {
    let estimate = text1.bytes().filter(|&c| c == b',').count() + 1;
    let estimate = match mode {
        LabelMode::Leaf => estimate,
        LabelMode::Full => 2 * estimate,
    };
    let mut table: HashMap<&str, u32> = HashMap::with_capacity(estimate);

    let s1 = scan(text1, 1, mode, weighted, |idx, label| {
        if table.insert(label, idx).is_some() {
            Err(ParseErrorKind::DuplicateLabel(label.to_string()))
        } else {
            Ok(())
        }
    })?;

    let mut code_map = vec![0u32; s1.tree.node_count()];
    let mut mapped = 0usize;
    let s2 = scan(text2, 2, mode, weighted, |idx, label| {
        let Some(&i1) = table.get(label) else {
            return Err(ParseErrorKind::MissingInOtherTree(label.to_string()));
        };
        let slot = &mut code_map[i1 as usize - 1];
        if *slot != 0 {
            return Err(ParseErrorKind::DuplicateLabel(label.to_string()));
        }
        *slot = idx;
        mapped += 1;
        Ok(())
    })?;
    drop(table);

    if mapped != s1.labels.labelled_count() {
        let (_, missing) =
            s1.labels.iter().find(|&(i, _)| code_map[i - 1] == 0).expect("an unmapped labelled node exists");
        return Err(ParseError {
            tree: 1,
            offset: text1.find(missing).unwrap_or(0),
            kind: ParseErrorKind::MissingInOtherTree(missing.to_string()),
        });
    }

    let weights = match (s1.weights, s2.weights) {
        (Some(w1), Some(w2)) => Some(PairWeights { w1, w2, sum: s1.weight_sum + s2.weight_sum }),
        _ => None,
    };
    Ok(TreePair {
        t1: s1.tree,
        t2: s2.tree,
        code_map: CodeMap(code_map),
        labels: Some((s1.labels, s2.labels)),
        weights,
        mode,
    })
}

/// True if some `)` is directly followed by a label, i.e. the text looks
/// fully labelled.
pub fn has_internal_labels(text: &str) -> bool {
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b')' {
            let mut j = i + 1;
            while j < b.len() && b[j].is_ascii_whitespace() {
                j += 1;
            }
            if j < b.len() && is_label_char(b[j]) {
                return true;
            }
        }
        i += 1;
    }
    false
}

/// Serialises a tree back to newick. Weights, when given, are written for
/// every node except a root whose weight is zero.
pub fn write_newick(tree: &BpTree, labels: &LabelTable, weights: Option<&[f64]>) -> String {
    let bv = tree.bits();
    let len = bv.len();
    let mut out = String::with_capacity(len * 4);
    let mut stack: Vec<usize> = Vec::new();
    let mut index = 0usize;
    let suffix = |out: &mut String, i: usize| {
        out.push_str(labels.name(i).unwrap_or(""));
        if let Some(w) = weights {
            if i != 1 || w[0] != 0.0 {
                let _ = write!(out, ":{}", w[i - 1]);
            }
        }
    };
    let mut p = 1;
    while p <= len {
        if bv.bit_unchecked(p) {
            index += 1;
            if p > 1 && !bv.bit_unchecked(p - 1) {
                out.push(',');
            }
            if p < len && !bv.bit_unchecked(p + 1) {
                suffix(&mut out, index);
                p += 2;
                continue;
            }
            out.push('(');
            stack.push(index);
        } else {
            let i = stack.pop().expect("balanced");
            out.push(')');
            suffix(&mut out, i);
        }
        p += 1;
    }
    out.push(';');
    out
}
