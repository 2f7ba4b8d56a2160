//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic;
use std::time::{Duration, Instant};

use bprf::baseline::{day_rf, naive_clusters, naive_distance, PlainTree};
use bprf::distance::{compute, run, Algorithm, Metric, Traversal};
use bprf::gen::{generate, random_recursive, Arity, GenOptions};
use bprf::newick::{parse_pair, LabelMode, LabelTable, TreePair};
use bprf::treeio::{bp_bytes, pack, size_report, unpack, HEADER_LEN};
use bprf_cli::bench::{measure, pair_trees, time_distance};
use bprf_cli::track::{self, TrackingAllocator};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let checks: [(&str, Check); 7] = [
        ("worked-example fixtures", fixtures),
        ("oracle equivalence", oracle_equivalence),
        ("metric properties", metric_properties),
        ("space accounting", space_accounting),
        ("near-linear runtime", runtime_scaling),
        ("memory profile shape", memory_profile),
        ("operation count bounds", operation_counts),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name} [{secs:.2}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name} [{secs:.2}s] {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

const T4: &str = "(((A,B),C),(D,E,F));";
const T5: &str = "((D,E,F),(B,(A,C)));";

fn fixtures() -> Result<String, String> {
    let start = Instant::now();
    let p = parse_pair("(((B,C)F,D)G,(A,E)H)I;", "((B,(D,C)F)G,(A,E)H)I;", LabelMode::Full, false).unwrap();
    for t in [Traversal::Postorder, Traversal::NextSibling] {
        let r = run(&p, Metric::Erf, t, false).unwrap();
        ensure!(r.count() == Some(2), "eRF raw {:?} with {t:?}", r.count());
    }

    let p = parse_pair(T4, T5, LabelMode::Leaf, false).unwrap();
    let labels2 = p.labels2().unwrap();
    let t5 = p.t2();
    let pos = |label: &str| t5.pre_order_select(labels2.lookup(label).unwrap()).unwrap();
    let l = t5.lca(pos("A"), pos("B")).unwrap();
    let node = t5.pre_order_map(l).unwrap();
    ensure!(node == 6, "lca(A, B) in the second tree is node {node}");
    let leaves = t5.num_leaves(l).unwrap();
    ensure!(leaves == 3, "num_leaves at node 6 is {leaves}");
    let t4 = p.t1();
    let leaves = t4.num_leaves(t4.pre_order_select(3).unwrap()).unwrap();
    ensure!(leaves == 2, "num_leaves at node 3 of the first tree is {leaves}");
    let map = p.code_map().as_slice();
    ensure!(map == [0, 0, 0, 9, 7, 10, 0, 3, 4, 5], "code map {map:?}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok("eRF=2, lca node 6 with 3 leaves, node 3 has 2 leaves, code map exact".into())
}

/// Swaps every occurrence of two whole labels.
fn swap_labels(s: &str, x: &str, y: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut token = String::new();
    let flush = |token: &mut String, out: &mut String| {
        out.push_str(if token == x {
            y
        } else if token == y {
            x
        } else {
            token
        });
        token.clear();
    };
    for c in s.chars() {
        if "(),:;".contains(c) {
            flush(&mut token, &mut out);
            out.push(c);
        } else {
            token.push(c);
        }
    }
    flush(&mut token, &mut out);
    out
}

#[derive(Clone, Copy, Debug)]
struct Config {
    arity: Arity,
    full: bool,
    weighted: bool,
}

const CONFIGS: [Config; 8] = {
    let mut out = [Config { arity: Arity::Binary, full: false, weighted: false }; 8];
    let mut i = 0;
    while i < 8 {
        out[i] = Config {
            arity: if i & 1 == 0 { Arity::Binary } else { Arity::Random },
            full: i & 2 != 0,
            weighted: i & 4 != 0,
        };
        i += 1;
    }
    out
};

fn metric_for(c: Config) -> Metric {
    match (c.full, c.weighted) {
        (false, false) => Metric::Rf,
        (true, false) => Metric::Erf,
        (false, true) => Metric::Wrf,
        (true, true) => Metric::Werf,
    }
}

/// Pair `seed` of a configuration. Even seeds give independent trees, odd
/// seeds a tree and a copy with a few labels swapped.
fn random_pair(c: Config, seed: u64) -> (String, String) {
    let leaves = [2, 3, 5, 16, 64, 129, 300, 512][(seed / 2) as usize % 8];
    let one = |s: u64| {
        if c.full && c.arity == Arity::Random {
            random_recursive(leaves, s, c.weighted)
        } else {
            generate(&GenOptions {
                arity: c.arity,
                full_labels: c.full,
                weights: c.weighted,
                ..GenOptions::new(leaves, s)
            })
        }
    };
    let a = one(10_000 + 2 * seed);
    if seed.is_multiple_of(2) {
        return (a, one(10_000 + 2 * seed + 1));
    }
    let prefix = if c.full && c.arity == Arity::Random { "N" } else { "L" };
    let mut b = a.clone();
    for k in 0..3 {
        let x = (seed as usize * 7 + k * 13) % leaves + 1;
        let y = (seed as usize * 11 + k * 5) % leaves + 1;
        b = swap_labels(&b, &format!("{prefix}{x}"), &format!("{prefix}{y}"));
    }
    (a, b)
}

fn oracle(a: &str, b: &str, metric: Metric) -> f64 {
    let c1 = naive_clusters(&PlainTree::parse(a).unwrap(), metric.mode());
    let c2 = naive_clusters(&PlainTree::parse(b).unwrap(), metric.mode());
    naive_distance(&c1, &c2, metric)
}

fn parse(a: &str, b: &str, metric: Metric) -> TreePair {
    parse_pair(a, b, metric.mode(), metric.weighted()).unwrap()
}

fn oracle_equivalence() -> Result<String, String> {
    const PAIRS: u64 = 200;
    let start = Instant::now();
    let mut total = 0;
    let mut partial = 0;
    for c in CONFIGS {
        let metric = metric_for(c);
        for seed in 0..PAIRS {
            let (a, b) = random_pair(c, seed);
            let pair = parse(&a, &b, metric);
            let expect = oracle(&a, &b, metric);
            let post = run(&pair, metric, Traversal::Postorder, false).unwrap();
            let next = run(&pair, metric, Traversal::NextSibling, false).unwrap();
            for (r, name) in [(&post, "postorder"), (&next, "nextsibling")] {
                if metric.weighted() {
                    ensure!(
                        (r.raw() - expect).abs() <= 1e-9,
                        "{metric}/{name} {c:?} seed {seed}: {} vs {expect}",
                        r.raw()
                    );
                } else {
                    ensure!(r.raw() == expect, "{metric}/{name} {c:?} seed {seed}: {} vs {expect}", r.raw());
                }
            }
            if metric == Metric::Rf {
                let day = day_rf(&pair).unwrap();
                ensure!(
                    day.distance == post.distance,
                    "day {c:?} seed {seed}: {:?} vs {:?}",
                    day.distance,
                    post.distance
                );
            }
            if post.equal_clusters > 1 {
                partial += 1;
            }
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{total} pairs over 8 configurations, {partial} with shared non-root clusters"))
}

fn metric_properties() -> Result<String, String> {
    let mut pairs = 0;
    for c in CONFIGS {
        let metric = metric_for(c);
        for seed in 0..60 {
            let (a, b) = random_pair(c, seed);
            for t in [Traversal::Postorder, Traversal::NextSibling] {
                let d = |x: &str, y: &str| run(&parse(x, y, metric), metric, t, false).unwrap().raw();
                let (ab, ba, aa) = (d(&a, &b), d(&b, &a), d(&a, &a));
                ensure!(aa.abs() <= 1e-9, "{metric} identity {aa} {c:?} seed {seed}");
                ensure!(ab >= 0.0, "{metric} negative {ab}");
                ensure!((ab - ba).abs() <= 1e-9, "{metric} asymmetric {ab} vs {ba} {c:?} seed {seed}");
            }
            pairs += 1;
        }
    }
    let mut triples = 0;
    for seed in 0..60u64 {
        let arity = if seed % 2 == 0 { Arity::Binary } else { Arity::Random };
        let leaves = 10 + (seed as usize * 37) % 300;
        let g = |s: u64| generate(&GenOptions { arity, ..GenOptions::new(leaves, s) });
        let a = g(seed);
        let b = if seed % 3 == 0 { g(seed + 500) } else { swap_labels(&a, "L1", &format!("L{leaves}")) };
        let c = if seed % 3 == 1 { g(seed + 900) } else { swap_labels(&b, "L2", "L3") };
        let d =
            |x: &str, y: &str| run(&parse(x, y, Metric::Rf), Metric::Rf, Traversal::Postorder, false).unwrap().raw();
        ensure!(d(&a, &c) <= d(&a, &b) + d(&b, &c), "triangle fails at seed {seed}");
        triples += 1;
    }
    Ok(format!("{pairs} pairs x 2 traversals, {triples} triangle triples"))
}

fn space_accounting() -> Result<String, String> {
    let mut seen = Vec::new();
    let texts = [
        (random_recursive(100_000, 5, false), LabelMode::Full),
        (generate(&GenOptions::new(50_000, 5)), LabelMode::Leaf),
    ];
    for (text, mode) in &texts {
        let pair = parse_pair(text, text, *mode, false).unwrap();
        let n = pair.n() as u64;
        let r = size_report(&pair);
        ensure!(r.bp_bits + r.map_bits == 34 * n, "bp + map = {} for n = {n}", r.bp_bits + r.map_bits);
        ensure!(r.total_bits <= 40 * n, "total {} > 40n for n = {n}", r.total_bits);
        ensure!(r.comparison_bits_day == 192 * n - 64, "day figure {}", r.comparison_bits_day);
        let bytes = pack(pair.t1(), &LabelTable::default(), None);
        ensure!(bytes.len() == HEADER_LEN + bp_bytes(n as usize) + 8, "packed length {}", bytes.len());
        ensure!(bp_bytes(n as usize) as u64 == (2 * n).div_ceil(8), "bp section size");
        ensure!(unpack(&bytes).unwrap().tree == *pair.t1(), "round trip differs");
        seen.push(format!("n={n}: {:.2} bits/node", r.total_bits as f64 / n as f64));
    }
    Ok(seen.join(", "))
}

/// Fastest of `reps` distance runs on one parsed pair.
fn best_time(pair: &TreePair, algorithm: Algorithm, reps: usize) -> f64 {
    (0..reps).map(|_| time_distance(pair, Metric::Rf, algorithm).unwrap().1).fold(f64::INFINITY, f64::min)
}

fn runtime_scaling() -> Result<String, String> {
    const PAIRS: u64 = 5;
    let sizes: Vec<usize> = (1..=10).map(|k| k * 10_000).collect();
    let algos = [Algorithm::Postorder, Algorithm::NextSibling];
    // per algorithm, per size: summed best-of-repeats over the pairs
    let mut totals = vec![vec![0.0f64; sizes.len()]; algos.len()];
    let mut slowest_100k = 0.0f64;
    for (si, &n) in sizes.iter().enumerate() {
        for k in 0..PAIRS {
            let (a, b) = pair_trees(n, 1 + 2 * k, Metric::Rf);
            let pair = parse_pair(&a, &b, LabelMode::Leaf, false).unwrap();
            for (ai, &algo) in algos.iter().enumerate() {
                let t = best_time(&pair, algo, 5);
                totals[ai][si] += t;
                if n == 100_000 {
                    let single = time_distance(&pair, Metric::Rf, algo).unwrap().1;
                    slowest_100k = slowest_100k.max(single);
                }
            }
        }
    }
    let mut detail = Vec::new();
    for (ai, algo) in algos.iter().enumerate() {
        let ratio = totals[ai][9] / totals[ai][0];
        ensure!(ratio <= 13.0, "{algo}: 100k/10k time ratio {ratio:.2}");
        detail.push(format!("{algo} ratio {ratio:.2} ({:.1}ms at 100k)", totals[ai][9] / PAIRS as f64 * 1e3));
    }
    ensure!(slowest_100k < 10.0, "a 100k distance took {slowest_100k:.2}s");
    Ok(detail.join(", "))
}

fn memory_profile() -> Result<String, String> {
    ensure!(track::active(), "tracking allocator not installed");
    let (a, b) = pair_trees(100_000, 7, Metric::Rf);
    let mut detail = Vec::new();
    for algo in [Algorithm::Postorder, Algorithm::NextSibling, Algorithm::Day] {
        let m = measure(&a, &b, Metric::Rf, algo).map_err(|e| e.to_string())?;
        ensure!(
            m.parse_peak > m.distance_peak,
            "{algo}: parse peak {} <= distance peak {}",
            m.parse_peak,
            m.distance_peak
        );
        ensure!(m.after_parse < m.parse_peak, "{algo}: no drop after parsing ({} vs {})", m.after_parse, m.parse_peak);
        detail.push(format!(
            "{algo}: parse peak {:.1} MB, after parse {:.1} MB, distance peak {:.1} MB",
            m.parse_peak as f64 / 1e6,
            m.after_parse as f64 / 1e6,
            m.distance_peak as f64 / 1e6
        ));
    }
    Ok(detail.join("; "))
}

fn operation_counts() -> Result<String, String> {
    let mut cases = 0;
    for seed in 0..20u64 {
        for leaves in [2, 50, 1000, 5000] {
            let arity = if seed % 2 == 0 { Arity::Binary } else { Arity::Random };
            let rf = (
                generate(&GenOptions { arity, ..GenOptions::new(leaves, seed) }),
                generate(&GenOptions { arity, ..GenOptions::new(leaves, seed + 77) }),
            );
            let erf = if seed % 2 == 0 {
                let g = |s| generate(&GenOptions { full_labels: true, ..GenOptions::new(leaves, s) });
                (g(seed), g(seed + 77))
            } else {
                (random_recursive(2 * leaves - 1, seed, false), random_recursive(2 * leaves - 1, seed + 77, false))
            };
            for (metric, (a, b)) in [(Metric::Rf, rf), (Metric::Erf, erf)] {
                let pair = parse(&a, &b, metric);
                let n = pair.n() as u64;
                ensure!(n <= 10_000, "n = {n}");
                let post = compute(&pair, metric, Algorithm::Postorder, false).unwrap().ops;
                let next = compute(&pair, metric, Algorithm::NextSibling, false).unwrap().ops;
                let size_ops = |o: &bprf::distance::OpCounts| o.num_leaves + o.cluster_size;
                ensure!(
                    post.post_order_select == n,
                    "{metric}: {} post-order selects for n = {n}",
                    post.post_order_select
                );
                ensure!(post.lca < n, "{metric}: {} lca calls for n = {n}", post.lca);
                let total = post.post_order_select + post.lca + size_ops(&post);
                ensure!(total <= 5 * n - 4, "{metric} postorder: {total} > 5n - 4 for n = {n}");
                let total = next.lca + next.next_sibling_hits + size_ops(&next);
                ensure!(total <= 3 * n - 3, "{metric} nextsibling: {total} > 3n - 3 for n = {n}");
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} pairs within 5n-4 (postorder) and 3n-3 (nextsibling)"))
}
