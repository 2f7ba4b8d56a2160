use bprf::baseline::{day_rf, naive_clusters, naive_distance, node_clusters, PlainTree};
use bprf::distance::{run, Metric, Traversal};
use bprf::gen::{generate, random_recursive, Arity, GenOptions};
use bprf::newick::{parse_pair, LabelMode};

const SEEDS: u64 = 200;

fn leaves_for(seed: u64) -> usize {
    // spread sizes over 2..=512 with a few tiny ones
    [2, 3, 4, 7, 33, 100, 257, 512][seed as usize % 8]
}

fn pair_texts(seed: u64, arity: Arity, full: bool, weights: bool) -> (String, String) {
    if full && arity == Arity::Random {
        let n = leaves_for(seed);
        return (random_recursive(n, 2 * seed, weights), random_recursive(n, 2 * seed + 1, weights));
    }
    let opts = |s| GenOptions { full_labels: full, weights, arity, ..GenOptions::new(leaves_for(seed), s) };
    (generate(&opts(2 * seed)), generate(&opts(2 * seed + 1)))
}

fn oracle(a: &str, b: &str, mode: LabelMode, metric: Metric) -> f64 {
    let c1 = naive_clusters(&PlainTree::parse(a).unwrap(), mode);
    let c2 = naive_clusters(&PlainTree::parse(b).unwrap(), mode);
    naive_distance(&c1, &c2, metric)
}

fn check(metric: Metric, arity: Arity) {
    let mode = metric.mode();
    let full = mode == LabelMode::Full;
    for seed in 0..SEEDS {
        let (a, b) = pair_texts(seed, arity, full, metric.weighted());
        let pair = parse_pair(&a, &b, mode, metric.weighted()).unwrap();
        let expect = oracle(&a, &b, mode, metric);
        let post = run(&pair, metric, Traversal::Postorder, true).unwrap();
        let next = run(&pair, metric, Traversal::NextSibling, true).unwrap();
        if metric.weighted() {
            assert!((post.raw() - expect).abs() <= 1e-9, "{metric} seed {seed}: {} vs {expect}", post.raw());
            assert!((next.raw() - expect).abs() <= 1e-9, "{metric} seed {seed}");
        } else {
            assert_eq!(post.raw(), expect, "{metric} {arity:?} seed {seed}\n{a}\n{b}");
            assert_eq!(next.distance, post.distance, "{metric} seed {seed}");
        }
        assert_eq!(post.common, next.common);
        assert_eq!(post.common.as_ref().unwrap().len() as u64, post.equal_clusters);
        if metric == Metric::Rf {
            assert_eq!(day_rf(&pair).unwrap().distance, post.distance, "day seed {seed}");
        }
    }
}

#[test]
fn rf_binary() {
    check(Metric::Rf, Arity::Binary);
}

#[test]
fn rf_multifurcating() {
    check(Metric::Rf, Arity::Random);
}

#[test]
fn erf_binary() {
    check(Metric::Erf, Arity::Binary);
}

#[test]
fn erf_multifurcating() {
    check(Metric::Erf, Arity::Random);
}

#[test]
fn wrf_binary() {
    check(Metric::Wrf, Arity::Binary);
}

#[test]
fn wrf_multifurcating() {
    check(Metric::Wrf, Arity::Random);
}

#[test]
fn werf_binary() {
    check(Metric::Werf, Arity::Binary);
}

#[test]
fn werf_multifurcating() {
    check(Metric::Werf, Arity::Random);
}

#[test]
fn captured_clusters_agree() {
    for seed in 0..60 {
        for (metric, arity) in [(Metric::Rf, Arity::Random), (Metric::Erf, Arity::Random), (Metric::Erf, Arity::Binary)]
        {
            let mode = metric.mode();
            let (a, b) = pair_texts(seed, arity, mode == LabelMode::Full, false);
            let pair = parse_pair(&a, &b, mode, false).unwrap();
            let c1 = node_clusters(&PlainTree::parse(&a).unwrap(), mode);
            let c2 = node_clusters(&PlainTree::parse(&b).unwrap(), mode);
            let r = run(&pair, metric, Traversal::NextSibling, true).unwrap();
            for (i, j) in r.common.unwrap() {
                assert_eq!(c1[i as usize - 1], c2[j as usize - 1], "seed {seed} ({i},{j})");
            }
        }
    }
}

#[test]
fn day_on_larger_pairs() {
    for seed in 0..5 {
        let opts = |s| GenOptions::new(1000, s);
        let pair = parse_pair(&generate(&opts(seed)), &generate(&opts(seed + 100)), LabelMode::Leaf, false).unwrap();
        let next = run(&pair, Metric::Rf, Traversal::NextSibling, false).unwrap();
        assert_eq!(day_rf(&pair).unwrap().distance, next.distance);
    }
}

#[test]
fn caterpillar_against_mirror() {
    let n = 500;
    let mut a = "(".repeat(n - 1) + "L1";
    let mut b = "(".repeat(n - 1) + &format!("L{n}");
    for i in 2..=n {
        a += &format!(",L{i})");
        b += &format!(",L{})", n + 1 - i);
    }
    a.push(';');
    b.push(';');
    let pair = parse_pair(&a, &b, LabelMode::Leaf, false).unwrap();
    let post = run(&pair, Metric::Rf, Traversal::Postorder, false).unwrap();
    let next = run(&pair, Metric::Rf, Traversal::NextSibling, false).unwrap();
    assert_eq!(post.distance, next.distance);
    assert_eq!(day_rf(&pair).unwrap().distance, post.distance);
    assert_eq!(post.raw(), oracle(&a, &b, LabelMode::Leaf, Metric::Rf));
}

#[test]
fn unit_internal_weights_count_clusters() {
    for seed in 0..40 {
        let (a, b) = pair_texts(seed, Arity::Random, false, false);
        let pair = parse_pair(&a, &b, LabelMode::Leaf, false).unwrap();
        let rf = run(&pair, Metric::Rf, Traversal::Postorder, false).unwrap();
        let weigh = |s: &str| {
            // unit weight above every internal node, zero above leaves
            let mut out = String::new();
            let mut chars = s.chars().peekable();
            while let Some(c) = chars.next() {
                out.push(c);
                if c == ')' && chars.peek() != Some(&';') {
                    out.push_str(":1");
                }
            }
            out
        };
        let wpair = parse_pair(&weigh(&a), &weigh(&b), LabelMode::Leaf, true).unwrap();
        let w = run(&wpair, Metric::Wrf, Traversal::NextSibling, false).unwrap();
        assert_eq!(w.raw(), rf.raw(), "seed {seed}");
    }
}
