//! Seeded random trees in newick form.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arity {
    Binary,
    /// Each split produces 2 to 4 children.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenOptions {
    pub leaves: usize,
    pub seed: u64,
    pub full_labels: bool,
    pub weights: bool,
    pub arity: Arity,
}

impl GenOptions {
    pub fn new(leaves: usize, seed: u64) -> Self {
        GenOptions { leaves, seed, full_labels: false, weights: false, arity: Arity::Binary }
    }
}

struct Shape {
    children: Vec<Vec<u32>>,
}

impl Shape {
    fn preorder(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.children.len());
        let mut stack = vec![0u32];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.children[v as usize].iter().rev());
        }
        out
    }

    fn write(&self, labels: &[String], weights: Option<&[f64]>) -> String {
        let mut out = String::with_capacity(self.children.len() * 12);
        // (node, next child to emit)
        let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let kids = &self.children[v as usize];
            if kids.is_empty() || *next == kids.len() {
                if !kids.is_empty() {
                    out.push(')');
                }
                out.push_str(&labels[v as usize]);
                if let Some(w) = weights {
                    if v != 0 {
                        let _ = write!(out, ":{:.6}", w[v as usize]);
                    }
                }
                stack.pop();
                continue;
            }
            out.push(if *next == 0 { '(' } else { ',' });
            let c = kids[*next];
            *next += 1;
            stack.push((c, 0));
        }
        out.push(';');
        out
    }
}

/// Uniform leaf splitting: start from one leaf and keep replacing a uniformly
/// chosen leaf by an internal node with fresh leaf children until
/// `opts.leaves` leaves exist. Leaves are named `L1..LN` and, with
/// `full_labels`, internal nodes `I1..Ik`, both in shuffled order. Weights are
/// uniform in `[0, 1)` on every edge; the root has none.
pub fn generate(opts: &GenOptions) -> String {
    assert!(opts.leaves >= 1, "need at least one leaf");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut shape = Shape { children: vec![Vec::new()] };
    let mut leaves: Vec<u32> = vec![0];
    let mut count = 1;
    while count < opts.leaves {
        let pick = rng.gen_range(0..leaves.len());
        let v = leaves.swap_remove(pick);
        let k = match opts.arity {
            Arity::Binary => 2,
            Arity::Random => rng.gen_range(2..=4),
        }
        .min(opts.leaves - count + 1);
        for _ in 0..k {
            let c = shape.children.len() as u32;
            shape.children.push(Vec::new());
            shape.children[v as usize].push(c);
            leaves.push(c);
        }
        count += k - 1;
    }

    let order = shape.preorder();
    let n = shape.children.len();
    let mut labels = vec![String::new(); n];
    let (leaf_nodes, inner_nodes): (Vec<u32>, Vec<u32>) =
        order.iter().partition(|&&v| shape.children[v as usize].is_empty());
    let mut ids: Vec<usize> = (1..=leaf_nodes.len()).collect();
    ids.shuffle(&mut rng);
    for (&v, id) in leaf_nodes.iter().zip(ids) {
        labels[v as usize] = format!("L{id}");
    }
    if opts.full_labels {
        let mut ids: Vec<usize> = (1..=inner_nodes.len()).collect();
        ids.shuffle(&mut rng);
        for (&v, id) in inner_nodes.iter().zip(ids) {
            labels[v as usize] = format!("I{id}");
        }
    }
    let weights = opts.weights.then(|| {
        let mut w = vec![0.0; n];
        for &v in &order {
            w[v as usize] = rng.gen::<f64>();
        }
        w
    });
    shape.write(&labels, weights.as_deref())
}

/// Random recursive tree on `n` nodes: node `i` hangs below a uniformly
/// chosen earlier node. Every node is labelled `N1..Nn` in shuffled order, so
/// two such trees of equal size share their label set. Unary nodes occur.
pub fn random_recursive(n: usize, seed: u64, weights: bool) -> String {
    assert!(n >= 1, "need at least one node");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = Shape { children: vec![Vec::new(); n] };
    for i in 1..n {
        let p = rng.gen_range(0..i);
        shape.children[p].push(i as u32);
    }
    let mut ids: Vec<usize> = (1..=n).collect();
    ids.shuffle(&mut rng);
    let labels: Vec<String> = ids.into_iter().map(|id| format!("N{id}")).collect();
    let w: Option<Vec<f64>> = weights.then(|| (0..n).map(|_| rng.gen::<f64>()).collect());
    shape.write(&labels, w.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::{parse_tree, LabelMode};

    #[test]
    fn leaf_count_and_determinism() {
        for arity in [Arity::Binary, Arity::Random] {
            for leaves in [1, 2, 3, 5, 17, 400] {
                let opts = GenOptions { arity, ..GenOptions::new(leaves, 9) };
                let s = generate(&opts);
                assert_eq!(s, generate(&opts));
                let t = parse_tree(&s, LabelMode::Leaf, false).unwrap();
                assert_eq!(t.tree.leaf_count(), leaves);
                if arity == Arity::Binary {
                    assert_eq!(t.tree.node_count(), 2 * leaves - 1);
                }
            }
        }
    }

    #[test]
    fn small_example() {
        let s = generate(&GenOptions::new(5, 1));
        let t = parse_tree(&s, LabelMode::Leaf, false).unwrap();
        let mut names: Vec<&str> = t.labels.iter().map(|(_, s)| s).collect();
        names.sort();
        assert_eq!(names, ["L1", "L2", "L3", "L4", "L5"]);
        assert_ne!(s, generate(&GenOptions::new(5, 2)));
    }

    #[test]
    fn full_labels_and_weights() {
        let opts = GenOptions { full_labels: true, weights: true, ..GenOptions::new(50, 3) };
        let s = generate(&opts);
        let t = parse_tree(&s, LabelMode::Full, true).unwrap();
        assert_eq!(t.labels.labelled_count(), 99);
        let w = t.weights.unwrap();
        assert_eq!(w[0], 0.0);
        assert!(w[1..].iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn root_has_no_weight() {
        let opts = GenOptions { weights: true, ..GenOptions::new(4, 7) };
        let s = generate(&opts);
        assert!(s.ends_with(");"), "{s}");
        assert_eq!(generate(&GenOptions { weights: true, ..GenOptions::new(1, 7) }), "L1;");
    }

    #[test]
    fn recursive_trees_parse_fully_labelled() {
        for seed in 0..20 {
            let s = random_recursive(60, seed, true);
            let t = parse_tree(&s, LabelMode::Full, true).unwrap();
            assert_eq!(t.tree.node_count(), 60);
        }
        assert_eq!(random_recursive(1, 0, false), "N1;");
    }
}
