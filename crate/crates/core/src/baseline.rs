//! Reference implementations: Day's linear-time RF and literal cluster-set
//! metrics. Neither touches the succinct navigation operations.

use std::collections::HashMap;

use crate::distance::{Algorithm, Distance, DistanceError, DistanceResult, Metric, OpCounts};
use crate::newick::{LabelMode, TreePair};

/// Day's tables for one pair.
///
/// Tree-1 leaves are renumbered `1..=L` left to right, which turns every
/// tree-1 cluster into an interval `[lo, hi]`. Each interval is stored in one
/// row of `table_lo`/`table_hi`: row `lo` for a root or non-first child, row
/// `hi` for a first child. Without unary nodes no two clusters of two or more
/// leaves share a row.
#[derive(Debug, Clone)]
pub struct DayTables {
    lo: Vec<u32>,
    hi: Vec<u32>,
    leaves: Vec<u32>,
    leaf_no: Vec<u32>,
    table_lo: Vec<u32>,
    table_hi: Vec<u32>,
}

impl DayTables {
    /// Renumbers tree-1 leaves and fills the interval table.
    pub fn build(pair: &TreePair) -> Self {
        let t1 = pair.t1().bits();
        let n = pair.t1().node_count().max(pair.t2().node_count());
        let nleaves = pair.t1().leaf_count();
        let mut d = DayTables {
            lo: vec![0; n],
            hi: vec![0; n],
            leaves: vec![0; n],
            leaf_no: vec![0; n],
            table_lo: vec![0; nleaves + 1],
            table_hi: vec![0; nleaves + 1],
        };
        let code_map = pair.code_map().as_slice();
        let mut stack: Vec<u32> = Vec::new();
        let mut idx = 0u32;
        let mut k = 0u32;
        let mut prev_open = false;
        for bit in t1.iter() {
            if bit {
                idx += 1;
                d.lo[idx as usize - 1] = k + 1;
                stack.push(idx);
            } else {
                let v = stack.pop().expect("balanced");
                if prev_open {
                    k += 1;
                    let j = code_map[v as usize - 1];
                    d.leaf_no[j as usize - 1] = k;
                } else {
                    let lo = d.lo[v as usize - 1];
                    let first_child = stack.last().is_some_and(|&p| v == p + 1);
                    let row = if first_child { k } else { lo } as usize;
                    d.table_lo[row] = lo;
                    d.table_hi[row] = k;
                }
            }
            prev_open = bit;
        }
        d
    }

    /// Scans tree 2 bottom-up and counts clusters of two or more leaves
    /// that also occur in tree 1.
    pub fn count_common(&mut self, pair: &TreePair) -> u64 {
        let t2 = pair.t2().bits();
        let mut stack: Vec<u32> = Vec::new();
        let mut idx = 0u32;
        let mut prev_open = false;
        let mut equal = 0;
        for bit in t2.iter() {
            if bit {
                idx += 1;
                let i = idx as usize - 1;
                self.lo[i] = u32::MAX;
                self.hi[i] = 0;
                self.leaves[i] = 0;
                stack.push(idx);
            } else {
                let v = stack.pop().expect("balanced") as usize - 1;
                if prev_open {
                    let k = self.leaf_no[v];
                    (self.lo[v], self.hi[v], self.leaves[v]) = (k, k, 1);
                } else {
                    let (lo, hi) = (self.lo[v], self.hi[v]);
                    if hi - lo + 1 == self.leaves[v]
                        && ((self.table_lo[lo as usize] == lo && self.table_hi[lo as usize] == hi)
                            || (self.table_lo[hi as usize] == lo && self.table_hi[hi as usize] == hi))
                    {
                        equal += 1;
                    }
                }
                if let Some(&p) = stack.last() {
                    let p = p as usize - 1;
                    self.lo[p] = self.lo[p].min(self.lo[v]);
                    self.hi[p] = self.hi[p].max(self.hi[v]);
                    self.leaves[p] += self.leaves[v];
                }
            }
            prev_open = bit;
        }
        equal
    }

    /// Bits allocated for the tables.
    pub fn bits(&self) -> u64 {
        32 * (self.lo.len() + self.hi.len() + self.leaves.len() + self.leaf_no.len()) as u64
            + 32 * (self.table_lo.len() + self.table_hi.len()) as u64
    }
}

/// RF by Day's algorithm. Leaf-labelled pairs only; no capture.
pub fn day_rf(pair: &TreePair) -> Result<DistanceResult, DistanceError> {
    if pair.mode() != LabelMode::Leaf {
        return Err(DistanceError::ModeMismatch { metric: Metric::Rf, expected: LabelMode::Leaf, actual: pair.mode() });
    }
    let mut tables = DayTables::build(pair);
    let equal = tables.count_common(pair);
    let internal = (pair.t1().internal_count() + pair.t2().internal_count()) as u64;
    Ok(DistanceResult {
        metric: Metric::Rf,
        algorithm: Algorithm::Day,
        distance: Distance::Count(internal - 2 * equal),
        equal_clusters: equal,
        common: None,
        ops: OpCounts::default(),
    })
}

/// Pointer-based tree from an independent recursive-descent parser.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainTree {
    pub nodes: Vec<PlainNode>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlainNode {
    pub label: Option<String>,
    pub weight: f64,
    pub children: Vec<usize>,
}

impl PlainTree {
    /// Node 0 is the root; nodes are stored in pre-order.
    pub fn parse(text: &str) -> Result<PlainTree, String> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut t = PlainTree { nodes: Vec::new() };
        let mut pos = 0;
        t.subtree(&chars, &mut pos)?;
        if chars.get(pos) != Some(&';') || pos + 1 != chars.len() {
            return Err(format!("expected final ';' at {pos}"));
        }
        Ok(t)
    }

    fn subtree(&mut self, c: &[char], pos: &mut usize) -> Result<usize, String> {
        let me = self.nodes.len();
        self.nodes.push(PlainNode::default());
        if c.get(*pos) == Some(&'(') {
            loop {
                *pos += 1;
                let child = self.subtree(c, pos)?;
                self.nodes[me].children.push(child);
                match c.get(*pos) {
                    Some(',') => continue,
                    Some(')') => {
                        *pos += 1;
                        break;
                    }
                    other => return Err(format!("unexpected {other:?} at {pos}")),
                }
            }
        }
        let start = *pos;
        while *pos < c.len() && !"(),:;".contains(c[*pos]) {
            *pos += 1;
        }
        if *pos > start {
            self.nodes[me].label = Some(c[start..*pos].iter().collect());
        }
        if c.get(*pos) == Some(&':') {
            *pos += 1;
            let start = *pos;
            while *pos < c.len() && !"(),:;".contains(c[*pos]) {
                *pos += 1;
            }
            let lit: String = c[start..*pos].iter().collect();
            self.nodes[me].weight = lit.parse().map_err(|_| format!("bad weight {lit:?}"))?;
        }
        Ok(me)
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }
}

/// One label set per node, with the weight of the edge above that node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterSet {
    pub clusters: HashMap<Vec<String>, f64>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn contains(&self, labels: &[&str]) -> bool {
        let mut key: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        key.sort();
        self.clusters.contains_key(&key)
    }
}

/// Sorted label set of every node, by pre-order position. Leaf mode collects
/// leaf labels only; full mode collects the labels of all nodes in the
/// subtree.
pub fn node_clusters(t: &PlainTree, mode: LabelMode) -> Vec<Vec<String>> {
    let mut below: Vec<Vec<String>> = vec![Vec::new(); t.nodes.len()];
    // pre-order storage: children always follow their parent
    for v in (0..t.nodes.len()).rev() {
        let node = &t.nodes[v];
        let mut set: Vec<String> = Vec::new();
        for &c in &node.children {
            set.extend(below[c].iter().cloned());
        }
        if mode == LabelMode::Full || node.children.is_empty() {
            set.extend(node.label.iter().cloned());
        }
        set.sort();
        below[v] = set;
    }
    below
}

/// Every node's cluster with the weight above it.
pub fn naive_clusters(t: &PlainTree, mode: LabelMode) -> ClusterSet {
    let mut cs = ClusterSet::default();
    for (v, set) in node_clusters(t, mode).into_iter().enumerate() {
        cs.clusters.insert(set, t.nodes[v].weight);
    }
    cs
}

/// Symmetric difference size, or its weighted form for weighted metrics.
pub fn naive_distance(cs1: &ClusterSet, cs2: &ClusterSet, metric: Metric) -> f64 {
    if !metric.weighted() {
        let only1 = cs1.clusters.keys().filter(|c| !cs2.clusters.contains_key(*c)).count();
        let only2 = cs2.clusters.keys().filter(|c| !cs1.clusters.contains_key(*c)).count();
        return (only1 + only2) as f64;
    }
    let mut d = 0.0;
    for (c, &w1) in &cs1.clusters {
        match cs2.clusters.get(c) {
            Some(&w2) => d += (w1 - w2).abs(),
            None => d += w1,
        }
    }
    for (c, &w2) in &cs2.clusters {
        if !cs1.clusters.contains_key(c) {
            d += w2;
        }
    }
    d
}
