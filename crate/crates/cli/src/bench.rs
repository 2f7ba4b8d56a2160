//! Timing and memory measurements over generated tree pairs.
//!
//! Each measurement has two phases. Parsing builds the [`TreePair`] and drops
//! the label table; the distance phase runs one algorithm over the pair.
//! Memory figures come from [`crate::track`] and are relative to the live
//! bytes at the start of the measurement, so they read zero when the tracking
//! allocator is not installed.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use bprf::distance::{compute, Algorithm, DistanceResult, Metric};
use bprf::gen::{generate, GenOptions};
use bprf::newick::{parse_pair, TreePair};

use crate::output;
use crate::track;

pub const CSV_HEADER: [&str; 8] =
    ["n_leaves", "seed", "metric", "algorithm", "parse_seconds", "distance_seconds", "peak_tracked_bytes", "value"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n_leaves: usize,
    pub seed: u64,
    pub metric: Metric,
    pub algorithm: Algorithm,
    pub parse_seconds: f64,
    pub distance_seconds: f64,
    pub peak_tracked_bytes: usize,
    /// Raw count for unweighted metrics, the weighted sum otherwise.
    pub value: f64,
}

impl BenchRecord {
    pub fn fields(&self) -> [String; 8] {
        let value = match self.metric.weighted() {
            true => output::weight(self.value),
            false => format!("{}", self.value as u64),
        };
        [
            self.n_leaves.to_string(),
            self.seed.to_string(),
            self.metric.to_string(),
            self.algorithm.to_string(),
            format!("{:.9}", self.parse_seconds),
            format!("{:.9}", self.distance_seconds),
            self.peak_tracked_bytes.to_string(),
            value,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub parse_seconds: f64,
    pub distance_seconds: f64,
    /// Highest live bytes while parsing.
    pub parse_peak: usize,
    /// Live bytes once parsing is done: the pair itself.
    pub after_parse: usize,
    /// Highest live bytes while computing the distance.
    pub distance_peak: usize,
    pub result: DistanceResult,
}

/// Parses `text1`/`text2` for `metric` and runs `algorithm` once.
pub fn measure(text1: &str, text2: &str, metric: Metric, algorithm: Algorithm) -> Result<Measurement> {
    let base = track::live();
    track::reset_peak();
    let start = Instant::now();
    let mut pair = parse_pair(text1, text2, metric.mode(), metric.weighted())?;
    pair.discard_labels();
    let parse_seconds = start.elapsed().as_secs_f64();
    let parse_peak = track::peak().saturating_sub(base);
    let after_parse = track::live().saturating_sub(base);

    track::reset_peak();
    let (result, distance_seconds) = time_distance(&pair, metric, algorithm)?;
    let distance_peak = track::peak().saturating_sub(base);
    drop(pair);
    Ok(Measurement { parse_seconds, distance_seconds, parse_peak, after_parse, distance_peak, result })
}

/// Runs one distance computation on an already parsed pair.
pub fn time_distance(pair: &TreePair, metric: Metric, algorithm: Algorithm) -> Result<(DistanceResult, f64)> {
    let start = Instant::now();
    let result = compute(pair, metric, algorithm, false)?;
    Ok((result, start.elapsed().as_secs_f64()))
}

/// The two generated trees of pair `seed`: seeds `seed` and `seed + 1`, with
/// labels and weights as `metric` requires.
pub fn pair_trees(n_leaves: usize, seed: u64, metric: Metric) -> (String, String) {
    let opts = |s| GenOptions {
        full_labels: metric.mode() == bprf::newick::LabelMode::Full,
        weights: metric.weighted(),
        ..GenOptions::new(n_leaves, s)
    };
    (generate(&opts(seed)), generate(&opts(seed + 1)))
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub pairs: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub algorithms: Vec<Algorithm>,
}

/// Runs the grid, handing each record to `sink` as soon as it is measured.
/// Pair `k` of a size uses seeds `seed + 2k` and `seed + 2k + 1`. Day is only
/// run for `rf`.
pub fn run(cfg: &BenchConfig, mut sink: impl FnMut(&BenchRecord) -> Result<()>) -> Result<()> {
    for &n in &cfg.sizes {
        for k in 0..cfg.pairs {
            let seed = cfg.seed + 2 * k as u64;
            for &metric in &cfg.metrics {
                let (a, b) = pair_trees(n, seed, metric);
                for &algorithm in &cfg.algorithms {
                    if algorithm == Algorithm::Day && metric != Metric::Rf {
                        continue;
                    }
                    let m = measure(&a, &b, metric, algorithm)
                        .with_context(|| format!("{metric}/{algorithm} at {n} leaves, seed {seed}"))?;
                    sink(&BenchRecord {
                        n_leaves: n,
                        seed,
                        metric,
                        algorithm,
                        parse_seconds: m.parse_seconds,
                        distance_seconds: m.distance_seconds,
                        peak_tracked_bytes: m.parse_peak.max(m.distance_peak),
                        value: m.result.raw(),
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// `"100"`, `"10,20,50"` or `"10000..100000:10000"` (inclusive range with
/// step), mixed freely with commas.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            None => out.push(part.parse().with_context(|| format!("bad size {part:?}"))?),
            Some((lo, rest)) => {
                let (hi, step) = rest.split_once(':').unwrap_or((rest, lo));
                let lo: usize = lo.parse().with_context(|| format!("bad range start in {part:?}"))?;
                let hi: usize = hi.parse().with_context(|| format!("bad range end in {part:?}"))?;
                let step: usize = step.parse().with_context(|| format!("bad step in {part:?}"))?;
                if step == 0 || lo > hi {
                    bail!("empty range {part:?}");
                }
                out.extend((lo..=hi).step_by(step));
            }
        }
    }
    if out.is_empty() || out.contains(&0) {
        bail!("sizes must be a non-empty list of positive leaf counts");
    }
    Ok(out)
}
