use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use bprf::distance::{compute, Algorithm, DistanceError, Metric};
use bprf::gen::{generate, Arity, GenOptions};
use bprf::newick::{has_internal_labels, parse_pair, parse_tree, write_newick, LabelMode, ParseErrorKind};
use bprf::treeio::{pack, unpack, SizeReport};
use bprf_cli::bench::{self, BenchConfig, CSV_HEADER};
use bprf_cli::output;
use bprf_cli::track::TrackingAllocator;
use clap::{Parser, Subcommand, ValueEnum};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Parser)]
#[command(name = "bprf", version, about = "Robinson-Foulds distances on succinct trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Leaf,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArityArg {
    Binary,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between the trees in two newick files
    Dist {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long, default_value = "rf", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, default_value = "postorder", value_parser = parse_algo)]
        algo: Algorithm,
        /// Print the full symmetric difference instead of half of it
        #[arg(long)]
        raw: bool,
        /// Also print one "i<TAB>j" line per cluster found in both trees
        #[arg(long)]
        emit_common: bool,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
    },
    /// Random tree in newick form
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        leaves: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        full_labels: bool,
        #[arg(long)]
        weights: bool,
        #[arg(long, value_enum, default_value = "binary")]
        arity: ArityArg,
    },
    /// Time parse and distance phases over generated pairs, as CSV
    Bench {
        /// e.g. "100", "10,20", "10000..100000:10000"
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 5)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "rf", value_delimiter = ',', value_parser = parse_metric)]
        metrics: Vec<Metric>,
        #[arg(long, default_value = "postorder,nextsibling,day", value_delimiter = ',', value_parser = parse_algo)]
        algos: Vec<Algorithm>,
        /// Output file; stdout when absent
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Serialise a newick tree to the packed binary format
    Pack {
        input: PathBuf,
        output: PathBuf,
        /// Print the bit accounting of the packed tree
        #[arg(long)]
        report: bool,
    },
    /// Turn a packed tree back into newick
    Unpack { input: PathBuf, output: PathBuf },
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse()
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

/// An error with the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure { code, error: error.into() }
}

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_MODE: u8 = 3;
const EXIT_LABELS: u8 = 4;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(|e| fail(EXIT_IO, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).map_err(|e| fail(EXIT_IO, e))
}

fn detect_mode(texts: &[&str]) -> Result<LabelMode, Failure> {
    let labelled = texts.iter().filter(|t| has_internal_labels(t)).count();
    match labelled {
        0 => Ok(LabelMode::Leaf),
        n if n == texts.len() => Ok(LabelMode::Full),
        _ => Err(fail(EXIT_MODE, anyhow::anyhow!("only some inputs carry internal labels; pass --mode"))),
    }
}

fn dist(
    file1: &Path,
    file2: &Path,
    metric: Metric,
    algo: Algorithm,
    raw: bool,
    emit_common: bool,
    mode: ModeArg,
) -> Result<(), Failure> {
    let (a, b) = (read(file1)?, read(file2)?);
    let mode = match mode {
        ModeArg::Auto => detect_mode(&[&a, &b])?,
        ModeArg::Leaf => LabelMode::Leaf,
        ModeArg::Full => LabelMode::Full,
    };
    if mode != metric.mode() {
        return Err(fail(
            EXIT_MODE,
            anyhow::anyhow!("{metric} needs {:?}-labelled trees, input is {mode:?}", metric.mode()),
        ));
    }
    if metric.weighted() && !(a.contains(':') || b.contains(':')) {
        return Err(fail(EXIT_MODE, DistanceError::MissingWeights(metric)));
    }
    let pair = parse_pair(&a, &b, mode, metric.weighted()).map_err(|e| {
        let code = match e.kind {
            _ if e.is_label_mismatch() => EXIT_LABELS,
            ParseErrorKind::InternalLabel(_) | ParseErrorKind::UnlabelledNode => EXIT_MODE,
            _ => EXIT_PARSE,
        };
        fail(code, e)
    })?;
    let r = compute(&pair, metric, algo, emit_common).map_err(|e| fail(EXIT_MODE, e))?;
    let value = match r.count() {
        Some(c) if raw => c.to_string(),
        Some(c) => output::halved(c),
        None => output::weight(r.raw()),
    };
    let mut out = io::stdout().lock();
    let mut text = format!("{value}\n");
    for (i, j) in r.common.iter().flatten() {
        text.push_str(&format!("{i}\t{j}\n"));
    }
    out.write_all(text.as_bytes()).map_err(|e| fail(EXIT_IO, e))
}

fn bench_cmd(cfg: BenchConfig, csv_path: Option<&Path>) -> Result<(), Failure> {
    let sink: Box<dyn Write> = match csv_path {
        Some(p) => Box::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display())).map_err(|e| fail(EXIT_IO, e))?,
        ),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER).map_err(|e| fail(EXIT_IO, e))?;
    bench::run(&cfg, |r| {
        w.write_record(r.fields())?;
        w.flush()?;
        Ok(())
    })
    .map_err(|e| fail(EXIT_IO, e))?;
    w.flush().map_err(|e| fail(EXIT_IO, e))
}

fn pack_cmd(input: &Path, output: &Path, report: bool) -> Result<(), Failure> {
    let text = read(input)?;
    let mode = detect_mode(&[&text])?;
    let t = parse_tree(&text, mode, text.contains(':')).map_err(|e| fail(EXIT_PARSE, e))?;
    write(output, &pack(&t.tree, &t.labels, t.weights.as_deref()))?;
    if report {
        println!("{}", SizeReport::of_tree(&t.tree));
    }
    Ok(())
}

fn unpack_cmd(input: &Path, output: &Path) -> Result<(), Failure> {
    let bytes =
        fs::read(input).with_context(|| format!("reading {}", input.display())).map_err(|e| fail(EXIT_IO, e))?;
    let t = unpack(&bytes).map_err(|e| fail(EXIT_PARSE, e))?;
    let mut text = write_newick(&t.tree, &t.labels, t.weights.as_deref());
    text.push('\n');
    write(output, text.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Dist { file1, file2, metric, algo, raw, emit_common, mode } => {
            dist(&file1, &file2, metric, algo, raw, emit_common, mode)
        }
        Command::Gen { leaves, seed, full_labels, weights, arity } => {
            let arity = match arity {
                ArityArg::Binary => Arity::Binary,
                ArityArg::Random => Arity::Random,
            };
            let opts = GenOptions { leaves: leaves as usize, seed, full_labels, weights, arity };
            println!("{}", generate(&opts));
            Ok(())
        }
        Command::Bench { sizes, pairs, seed, metrics, algos, csv } => match bench::parse_sizes(&sizes) {
            Ok(sizes) => bench_cmd(BenchConfig { sizes, pairs, seed, metrics, algorithms: algos }, csv.as_deref()),
            Err(e) => Err(fail(EXIT_PARSE, e)),
        },
        Command::Pack { input, output, report } => pack_cmd(&input, &output, report),
        Command::Unpack { input, output } => unpack_cmd(&input, &output),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bprf: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
