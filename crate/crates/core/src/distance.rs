//! RF, eRF, wRF and weRF over a [`TreePair`].
//!
//! Every tree-1 cluster is located in tree 2 by folding `lca` over the
//! tree-2 positions of its members. The cluster exists in tree 2 iff the
//! subtree at the folded node has the same size: leaf count for leaf-labelled
//! pairs, node count for fully labelled ones.
//!
//! Two drivers walk tree 1. `Postorder` visits nodes with `post_order_select`
//! and keeps a stack of `(lca, size)` entries; `NextSibling` descends with
//! `first_child`/`next_sibling`. The latter is written with an explicit frame
//! stack so caterpillars of any height are fine.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bp::BpTree;
use crate::newick::{LabelMode, PairWeights, TreePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Rf,
    Erf,
    Wrf,
    Werf,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Rf, Metric::Erf, Metric::Wrf, Metric::Werf];

    /// Labelling the metric expects.
    pub fn mode(self) -> LabelMode {
        match self {
            Metric::Rf | Metric::Wrf => LabelMode::Leaf,
            Metric::Erf | Metric::Werf => LabelMode::Full,
        }
    }

    pub fn weighted(self) -> bool {
        matches!(self, Metric::Wrf | Metric::Werf)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rf => "rf",
            Metric::Erf => "erf",
            Metric::Wrf => "wrf",
            Metric::Werf => "werf",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Which traversal produced a result. `Day` is the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Postorder,
    NextSibling,
    Day,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Postorder => "postorder",
            Algorithm::NextSibling => "nextsibling",
            Algorithm::Day => "day",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Algorithm::Postorder, Algorithm::NextSibling, Algorithm::Day]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// Traversal used by the succinct implementations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Traversal {
    Postorder,
    NextSibling,
}

impl From<Traversal> for Algorithm {
    fn from(t: Traversal) -> Self {
        match t {
            Traversal::Postorder => Algorithm::Postorder,
            Traversal::NextSibling => Algorithm::NextSibling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("{metric} needs a {expected:?}-labelled pair, got {actual:?}")]
    ModeMismatch { metric: Metric, expected: LabelMode, actual: LabelMode },
    #[error("{0} needs edge weights")]
    MissingWeights(Metric),
    #[error("{algorithm} does not support {what}")]
    Unsupported { algorithm: Algorithm, what: &'static str },
}

/// Count of tree operations issued during one distance computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub post_order_select: u64,
    pub pre_order_select: u64,
    pub first_child: u64,
    /// All `next_sibling` calls, including those that find no sibling.
    pub next_sibling: u64,
    pub next_sibling_hits: u64,
    pub lca: u64,
    pub num_leaves: u64,
    pub cluster_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Count(u64),
    Weight(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub metric: Metric,
    pub algorithm: Algorithm,
    /// Symmetric difference size, or the weighted sum.
    pub distance: Distance,
    /// Clusters with two or more members present in both trees.
    pub equal_clusters: u64,
    /// `(tree-1 index, tree-2 index)` of each matched cluster, in tree-1
    /// post-order.
    pub common: Option<Vec<(u32, u32)>>,
    pub ops: OpCounts,
}

impl DistanceResult {
    pub fn raw(&self) -> f64 {
        match self.distance {
            Distance::Count(c) => c as f64,
            Distance::Weight(w) => w,
        }
    }

    /// Half the raw count; `None` for weighted metrics.
    pub fn halved(&self) -> Option<f64> {
        match self.distance {
            Distance::Count(c) => Some(c as f64 / 2.0),
            Distance::Weight(_) => None,
        }
    }

    pub fn count(&self) -> Option<u64> {
        match self.distance {
            Distance::Count(c) => Some(c),
            Distance::Weight(_) => None,
        }
    }
}

pub fn rf_postorder(pair: &TreePair, capture: bool) -> Result<DistanceResult, DistanceError> {
    run(pair, Metric::Rf, Traversal::Postorder, capture)
}

pub fn rf_nextsibling(pair: &TreePair, capture: bool) -> Result<DistanceResult, DistanceError> {
    run(pair, Metric::Rf, Traversal::NextSibling, capture)
}

pub fn erf(pair: &TreePair, traversal: Traversal, capture: bool) -> Result<DistanceResult, DistanceError> {
    run(pair, Metric::Erf, traversal, capture)
}

pub fn wrf(pair: &TreePair, traversal: Traversal, capture: bool) -> Result<DistanceResult, DistanceError> {
    run(pair, Metric::Wrf, traversal, capture)
}

pub fn werf(pair: &TreePair, traversal: Traversal, capture: bool) -> Result<DistanceResult, DistanceError> {
    run(pair, Metric::Werf, traversal, capture)
}

/// Dispatches to a traversal or to the Day baseline. Day handles `Rf`
/// without capture only.
pub fn compute(
    pair: &TreePair,
    metric: Metric,
    algorithm: Algorithm,
    capture: bool,
) -> Result<DistanceResult, DistanceError> {
    match algorithm {
        Algorithm::Postorder => run(pair, metric, Traversal::Postorder, capture),
        Algorithm::NextSibling => run(pair, metric, Traversal::NextSibling, capture),
        Algorithm::Day if metric != Metric::Rf => Err(DistanceError::Unsupported { algorithm, what: metric.name() }),
        Algorithm::Day if capture => Err(DistanceError::Unsupported { algorithm, what: "cluster capture" }),
        Algorithm::Day => crate::baseline::day_rf(pair),
    }
}

/// Any metric with either traversal.
pub fn run(
    pair: &TreePair,
    metric: Metric,
    traversal: Traversal,
    capture: bool,
) -> Result<DistanceResult, DistanceError> {
    if pair.mode() != metric.mode() {
        return Err(DistanceError::ModeMismatch { metric, expected: metric.mode(), actual: pair.mode() });
    }
    let weights =
        if metric.weighted() { Some(pair.weights().ok_or(DistanceError::MissingWeights(metric))?) } else { None };
    let mut eng = Engine::new(pair, weights, capture);
    match traversal {
        Traversal::Postorder => eng.postorder(),
        Traversal::NextSibling => eng.nextsibling(),
    }
    Ok(eng.finish(metric, traversal.into()))
}

struct Engine<'a> {
    t1: &'a BpTree,
    t2: &'a BpTree,
    code_map: &'a [u32],
    full: bool,
    weights: Option<&'a PairWeights>,
    equal: u64,
    singletons: u64,
    // tree-1 share of the weighted sum; tree-2 nodes left unmatched are added at the end
    w_acc: f64,
    matched2: Vec<u64>,
    common: Option<Vec<(u32, u32)>>,
    ops: OpCounts,
}

impl<'a> Engine<'a> {
    fn new(pair: &'a TreePair, weights: Option<&'a PairWeights>, capture: bool) -> Self {
        let n2 = pair.t2().node_count();
        Engine {
            t1: pair.t1(),
            t2: pair.t2(),
            code_map: pair.code_map().as_slice(),
            full: pair.mode() == LabelMode::Full,
            weights,
            equal: 0,
            singletons: 0,
            w_acc: 0.0,
            matched2: if weights.is_some() { vec![0; n2.div_ceil(64)] } else { Vec::new() },
            common: capture.then(Vec::new),
            ops: OpCounts::default(),
        }
    }

    /// Tree-2 position of the node labelled like tree-1 node at `p1`.
    #[inline]
    fn mapped(&mut self, p1: usize) -> (usize, usize) {
        let i1 = self.t1.pre_order_map_unchecked(p1);
        let j = self.code_map[i1 - 1] as usize;
        debug_assert!(j != 0, "unlabelled node at {p1}");
        self.ops.pre_order_select += 1;
        (i1, self.t2.pre_order_select_unchecked(j))
    }

    #[inline]
    fn score(&mut self, i1: usize, i2: Option<usize>) {
        if let Some(w) = self.weights {
            let a = w.w1[i1 - 1];
            match i2 {
                Some(i2) => {
                    self.w_acc += (a - w.w2[i2 - 1]).abs();
                    self.matched2[(i2 - 1) / 64] |= 1 << ((i2 - 1) % 64);
                }
                None => self.w_acc += a,
            }
        }
    }

    #[inline]
    fn leaf(&mut self, p1: usize) -> usize {
        let (i1, pos2) = self.mapped(p1);
        if !self.full || self.t2.is_leaf_unchecked(pos2) {
            self.singletons += 1;
            self.score(i1, Some(self.code_map[i1 - 1] as usize));
        } else {
            self.score(i1, None);
        }
        pos2
    }

    #[inline]
    fn fold(&mut self, acc: usize, v: usize) -> usize {
        if acc == 0 {
            v
        } else {
            self.ops.lca += 1;
            self.t2.lca_unchecked(acc, v)
        }
    }

    /// Starting accumulator for an internal node: its own label in full mode.
    #[inline]
    fn seed(&mut self, p1: usize) -> usize {
        if self.full {
            self.mapped(p1).1
        } else {
            0
        }
    }

    fn close(&mut self, p1: usize, size1: Option<usize>, folded: usize) {
        let matched = if self.full {
            let s1 = size1.unwrap_or_else(|| {
                self.ops.cluster_size += 1;
                self.t1.cluster_size_unchecked(p1)
            });
            self.ops.cluster_size += 1;
            s1 == self.t2.cluster_size_unchecked(folded)
        } else {
            self.ops.num_leaves += 2;
            self.t1.num_leaves_unchecked(p1) == self.t2.num_leaves_unchecked(folded)
        };
        let i1 = self.t1.pre_order_map_unchecked(p1);
        if matched {
            self.equal += 1;
            let i2 = self.t2.pre_order_map_unchecked(folded);
            if let Some(c) = self.common.as_mut() {
                c.push((i1 as u32, i2 as u32));
            }
            self.score(i1, Some(i2));
        } else {
            self.score(i1, None);
        }
    }

    fn postorder(&mut self) {
        let n = self.t1.node_count();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for i in 1..=n {
            self.ops.post_order_select += 1;
            let p = self.t1.post_order_select_unchecked(i);
            if self.t1.is_leaf_unchecked(p) {
                let pos2 = self.leaf(p);
                stack.push((pos2, 1));
                continue;
            }
            self.ops.cluster_size += 1;
            let s = self.t1.cluster_size_unchecked(p);
            let mut acc = self.seed(p);
            let mut need = s - 1;
            while need > 0 {
                let (q, size) = stack.pop().expect("children are on the stack");
                acc = self.fold(acc, q);
                need -= size;
            }
            self.close(p, Some(s), acc);
            stack.push((acc, s));
        }
    }

    fn nextsibling(&mut self) {
        struct Frame {
            pos: usize,
            acc: usize,
            child: usize,
        }
        if self.t1.is_leaf_unchecked(1) {
            self.leaf(1);
            return;
        }
        let mut frames: Vec<Frame> = Vec::new();
        let acc = self.seed(1);
        self.ops.first_child += 1;
        frames.push(Frame { pos: 1, acc, child: 2 });
        loop {
            let c = frames.last().expect("non-empty").child;
            let value = if self.t1.is_leaf_unchecked(c) {
                self.leaf(c)
            } else {
                let acc = self.seed(c);
                self.ops.first_child += 1;
                frames.push(Frame { pos: c, acc, child: c + 1 });
                continue;
            };
            // fold `value` into the parent, closing every frame left without siblings
            let mut value = value;
            loop {
                let top = frames.last_mut().expect("non-empty");
                let (acc, child) = (top.acc, top.child);
                let acc = self.fold(acc, value);
                self.ops.next_sibling += 1;
                match self.t1.next_sibling_unchecked(child) {
                    Some(s) => {
                        self.ops.next_sibling_hits += 1;
                        let top = frames.last_mut().expect("non-empty");
                        top.acc = acc;
                        top.child = s;
                        break;
                    }
                    None => {
                        let done = frames.pop().expect("non-empty");
                        self.close(done.pos, None, acc);
                        if frames.is_empty() {
                            return;
                        }
                        value = acc;
                    }
                }
            }
        }
    }

    fn finish(mut self, metric: Metric, algorithm: Algorithm) -> DistanceResult {
        let distance = match self.weights {
            Some(w) => {
                let mut sum = self.w_acc;
                for (i, &x) in w.w2.iter().enumerate() {
                    if self.matched2[i / 64] >> (i % 64) & 1 == 0 {
                        sum += x;
                    }
                }
                Distance::Weight(sum)
            }
            None => {
                let mut raw = (self.t1.internal_count() + self.t2.internal_count()) as u64 - 2 * self.equal;
                if self.full {
                    raw += (self.t1.leaf_count() + self.t2.leaf_count()) as u64 - 2 * self.singletons;
                }
                Distance::Count(raw)
            }
        };
        DistanceResult {
            metric,
            algorithm,
            distance,
            equal_clusters: self.equal,
            common: self.common.take(),
            ops: self.ops,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_pair;

    fn pair(a: &str, b: &str, mode: LabelMode, weighted: bool) -> TreePair {
        parse_pair(a, b, mode, weighted).unwrap()
    }

    fn both(p: &TreePair, m: Metric) -> (DistanceResult, DistanceResult) {
        let a = run(p, m, Traversal::Postorder, true).unwrap();
        let b = run(p, m, Traversal::NextSibling, true).unwrap();
        assert_eq!(a.distance, b.distance);
        assert_eq!(a.common, b.common);
        (a, b)
    }

    #[test]
    fn figure_pair_rf() {
        let p = pair("(((A,B),C),(D,E,F));", "((D,E,F),(B,(A,C)));", LabelMode::Leaf, false);
        let (r, _) = both(&p, Metric::Rf);
        assert_eq!(r.count(), Some(2));
        assert_eq!(r.halved(), Some(1.0));
        assert_eq!(r.equal_clusters, 3);
        // {A,B,C} → node 6, {D,E,F} → node 2, root → 1
        assert_eq!(r.common, Some(vec![(2, 6), (7, 2), (1, 1)]));
    }

    #[test]
    fn caterpillar_vs_balanced() {
        let p = pair("(((A,B),C),D);", "((A,B),(C,D));", LabelMode::Leaf, false);
        let (r, _) = both(&p, Metric::Rf);
        assert_eq!(r.count(), Some(2));
        assert_eq!(r.halved(), Some(1.0));
    }

    #[test]
    fn fully_labelled_figure() {
        let p = pair("(((B,C)F,D)G,(A,E)H)I;", "((B,(D,C)F)G,(A,E)H)I;", LabelMode::Full, false);
        let (r, _) = both(&p, Metric::Erf);
        assert_eq!(r.count(), Some(2));
        assert_eq!(r.halved(), Some(1.0));
        assert_eq!(r.equal_clusters, 3);
    }

    #[test]
    fn weighted_leaf_example() {
        let p = pair("((A:1,B:2):3,C:4);", "((A:1,C:2):3,B:4);", LabelMode::Leaf, true);
        let (r, _) = both(&p, Metric::Wrf);
        assert_eq!(r.distance, Distance::Weight(10.0));
        assert_eq!(r.halved(), None);
    }

    #[test]
    fn weighted_full_example() {
        let a = "(((B:1,C:1)F:1,D:1)G:1,(A:1,E:1)H:1)I;";
        let b = "((B:1,(D:1,C:1)F:1)G:1,(A:1,E:1)H:1)I;";
        let (r, _) = both(&pair(a, b, LabelMode::Full, true), Metric::Werf);
        assert_eq!(r.distance, Distance::Weight(2.0));
        let b = "((B:1,(D:1,C:1)F:2)G:1,(A:1,E:1)H:1)I;";
        let (r, _) = both(&pair(a, b, LabelMode::Full, true), Metric::Werf);
        assert_eq!(r.distance, Distance::Weight(3.0));
    }

    #[test]
    fn perturbed_leaf_weight() {
        let a = "((A:0.5,B:0.25):1,(C:2,D:0.125):0.75);";
        let b = "((A:0.5,B:0.25):1,(C:2.375,D:0.125):0.75);";
        let (r, _) = both(&pair(a, b, LabelMode::Leaf, true), Metric::Wrf);
        assert_eq!(r.distance, Distance::Weight(0.375));
    }

    #[test]
    fn identity_is_exactly_zero() {
        let s = "((A:0.1,B:0.2):0.3,(C:0.7,D:0.11):0.13);";
        let (r, _) = both(&pair(s, s, LabelMode::Leaf, true), Metric::Wrf);
        assert_eq!(r.distance, Distance::Weight(0.0));
        let (r, _) = both(&pair(s, s, LabelMode::Leaf, true), Metric::Rf);
        assert_eq!(r.count(), Some(0));
    }

    #[test]
    fn single_leaf_and_cherry() {
        let (r, _) = both(&pair("A;", "A;", LabelMode::Leaf, false), Metric::Rf);
        assert_eq!(r.count(), Some(0));
        assert_eq!(r.equal_clusters, 0);
        let (r, _) = both(&pair("(A,B);", "(B,A);", LabelMode::Leaf, false), Metric::Rf);
        assert_eq!((r.count(), r.equal_clusters), (Some(0), 1));
    }

    #[test]
    fn full_mode_leaf_internal_swap() {
        // B is a leaf in tree 1 and the root in tree 2
        let p = pair("(A,B)C;", "(A,C)B;", LabelMode::Full, false);
        let (r, _) = both(&p, Metric::Erf);
        assert_eq!(r.count(), Some(2));
        assert_eq!(r.equal_clusters, 1);
    }

    #[test]
    fn mode_errors() {
        let p = pair("((A,B),C);", "((A,C),B);", LabelMode::Leaf, false);
        assert!(matches!(erf(&p, Traversal::Postorder, false), Err(DistanceError::ModeMismatch { .. })));
        assert_eq!(wrf(&p, Traversal::Postorder, false), Err(DistanceError::MissingWeights(Metric::Wrf)));
        let p = pair("((A,B)X,C)R;", "((A,C)X,B)R;", LabelMode::Full, false);
        assert!(rf_postorder(&p, false).is_err());
    }

    #[test]
    fn deep_caterpillar_both_ways() {
        let n = 20_000;
        let ladder = |order: &mut dyn Iterator<Item = usize>| {
            let mut s = "(".repeat(n - 1);
            s.push_str(&format!("L{}", order.next().unwrap()));
            for i in order {
                s.push_str(&format!(",L{i})"));
            }
            s.push(';');
            s
        };
        let a = ladder(&mut (1..=n));
        let b = ladder(&mut (1..=n).rev());
        let p = pair(&a, &b, LabelMode::Leaf, false);
        let (r, _) = both(&p, Metric::Rf);
        // prefixes against suffixes: only the root is shared
        assert_eq!(r.equal_clusters, 1);
        assert_eq!(r.count(), Some(2 * (n as u64 - 1) - 2));
        assert_eq!(rf_postorder(&pair(&a, &a, LabelMode::Leaf, false), false).unwrap().count(), Some(0));
        assert_eq!(rf_nextsibling(&pair(&a, &a, LabelMode::Leaf, false), false).unwrap().count(), Some(0));
    }

    #[test]
    fn dispatch() {
        let p = pair("((A,B),(C,D));", "((A,C),(B,D));", LabelMode::Leaf, false);
        for a in [Algorithm::Postorder, Algorithm::NextSibling, Algorithm::Day] {
            assert_eq!(compute(&p, Metric::Rf, a, false).unwrap().count(), Some(4));
        }
        assert!(matches!(compute(&p, Metric::Wrf, Algorithm::Day, false), Err(DistanceError::Unsupported { .. })));
        assert!(matches!(compute(&p, Metric::Rf, Algorithm::Day, true), Err(DistanceError::Unsupported { .. })));
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>(), Ok(m));
        }
        assert_eq!("nextsibling".parse::<Algorithm>(), Ok(Algorithm::NextSibling));
        assert!("fast".parse::<Algorithm>().is_err());
    }
}
