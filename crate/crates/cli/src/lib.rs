//! Command-line front end: dataset generation, training, identification,
//! Monte Carlo sweeps and closed-form estimates.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qvam_core::format::{read_network, read_patterns, write_network, write_patterns};
use qvam_core::{
    capacity, critical_distortion, error_probability, map_binary, max_output_neurons, op_counts,
    random_patterns, BinaryVector, Dimensions, Engine, ExperimentConfig, HebbNetwork, KeyScheme,
    NoiseModel, NoiseSpec, QPattern, QvamError, Recall, TheoryInput, TrainOptions,
};
use serde::Serialize;
use serde_json::json;

/// Version of every JSON document this tool writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] QvamError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: QvamError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn file(path: &Path) -> impl FnOnce(QvamError) -> CliError + '_ {
        move |source| CliError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "qvam",
    version,
    about = "q-valued vector perceptron associative memory"
)]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, env = "QVAM_THREADS", global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write uniformly random patterns as a QVP1 file.
    Gen(GenArgs),
    /// Train a network from a QVP1 file and write a QVN1 snapshot.
    Train(TrainArgs),
    /// Identify probes against a trained snapshot.
    Identify(IdentifyArgs),
    /// Monte Carlo reliability sweep over distortion levels.
    Sweep(SweepArgs),
    /// Closed-form estimates as JSON.
    Theory(TheoryArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Pattern length N.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: u32,
    /// Number of patterns M.
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// QVP1 pattern file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Key length n (default: fewest digits that index every pattern).
    #[arg(long)]
    pub key_len: Option<usize>,
    /// Keep the self-coupling blocks instead of zeroing them.
    #[arg(long)]
    pub no_diagonal_exclusion: bool,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// QVN1 network snapshot.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Probe file: QVP1, or text with one 0/1 vector per line when --binary-chunk is set.
    #[arg(long)]
    pub probes: PathBuf,
    /// Map binary probes to q = 2^r symbols in chunks of r bits.
    #[arg(long)]
    pub binary_chunk: Option<u32>,
    /// Distort each probe by this fraction before identifying.
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Weights,
    Matrixfree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    /// Exactly round(bN) positions, each moved to a different color.
    DistinctColor,
    /// Each distorted position redrawn from all q colors.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KeysArg {
    /// Key digits are the base-q digits of the pattern index.
    Index,
    /// Digit i is the running sum mod q of the first i index digits.
    Balanced,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, required_unless_present = "input")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "input")]
    pub q: Option<u32>,
    #[arg(long, required_unless_present = "input")]
    pub m: Option<u64>,
    /// Sweep this QVP1 file instead of generated patterns.
    #[arg(long = "in", conflicts_with_all = ["n", "q", "m"])]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub key_len: Option<usize>,
    /// Single distortion level (same as --b-start b --b-end b --steps 1).
    #[arg(long, conflicts_with_all = ["b_start", "b_end", "steps"])]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub b_start: f64,
    #[arg(long, default_value_t = 0.95)]
    pub b_end: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Weights)]
    pub engine: EngineArg,
    #[arg(long, value_enum, default_value_t = NoiseArg::DistinctColor)]
    pub noise: NoiseArg,
    #[arg(long, value_enum, default_value_t = KeysArg::Index)]
    pub keys: KeysArg,
    #[arg(long)]
    pub no_diagonal_exclusion: bool,
    /// Skip the exhaustive-scan operation count (baseline_ops = 0).
    #[arg(long)]
    pub no_baseline: bool,
    /// Also print the operation-count and timing table to stderr.
    #[arg(long, conflicts_with = "input")]
    pub compare: bool,
    /// CSV path (default: stdout). A `<out>.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub q: u32,
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long)]
    pub key_len: Option<usize>,
    /// Target error probability for the capacity estimate.
    #[arg(long, default_value_t = 0.01)]
    pub p0: f64,
}

/// Runs a parsed command line on a pool of `threads` workers.
pub fn run(cli: Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()?;
    pool.install(|| match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Identify(a) => cmd_identify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Theory(a) => cmd_theory(&a),
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(CliError::io(path))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(CliError::io(path))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: impl Write, path: Option<&Path>) -> CliResult<()> {
    w.flush()
        .map_err(CliError::io(path.unwrap_or(Path::new("<stdout>"))))
}

fn load_patterns(path: &Path) -> CliResult<(u32, usize, Vec<QPattern>)> {
    let set = read_patterns(open(path)?).map_err(CliError::file(path))?;
    Ok((set.q, set.pattern_len, set.patterns))
}

pub fn cmd_gen(a: &GenArgs) -> CliResult<()> {
    Dimensions::new(a.n, a.m, a.q)?;
    let patterns = random_patterns(a.n, a.q, a.m, a.seed)?;
    let mut w = create(&a.out)?;
    write_patterns(&mut w, a.q, a.n, &patterns).map_err(CliError::file(&a.out))?;
    finish(w, Some(&a.out))
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let (q, len, patterns) = load_patterns(&a.input)?;
    if patterns.is_empty() {
        return Err(CliError::File {
            path: a.input.clone(),
            source: QvamError::Empty,
        });
    }
    let m = patterns.len() as u64;
    let dims = match a.key_len {
        Some(n) => Dimensions::with_key_len(len, m, q, n)?,
        None => Dimensions::new(len, m, q)?,
    };
    let keys = KeyScheme::Index.assign(&dims)?;
    let options = TrainOptions {
        exclude_diagonal: !a.no_diagonal_exclusion,
    };
    let net = HebbNetwork::train_parallel(&patterns, &keys, options)?;
    let mut w = create(&a.out)?;
    write_network(&mut w, &net).map_err(CliError::file(&a.out))?;
    finish(w, Some(&a.out))?;

    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "pattern_len": dims.pattern_len(),
        "key_len": dims.key_len(),
        "pattern_count": dims.pattern_count(),
        "q": dims.q(),
        "exclude_diagonal": net.exclude_diagonal(),
        "checksum": net.checksum(),
    });
    println!("{summary}");
    Ok(())
}

fn load_probes(a: &IdentifyArgs) -> CliResult<Vec<QPattern>> {
    match a.binary_chunk {
        None => Ok(load_patterns(&a.probes)?.2),
        Some(r) => {
            let text = fs::read_to_string(&a.probes).map_err(CliError::io(&a.probes))?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    let bits = BinaryVector::parse(l).map_err(CliError::file(&a.probes))?;
                    Ok(map_binary(&bits, r)?)
                })
                .collect()
        }
    }
}

#[derive(Serialize)]
struct IdentifyLine<'a> {
    schema_version: u32,
    probe: usize,
    digits: &'a [u32],
    index: u64,
    valid: bool,
    margins: &'a [i64],
}

pub fn cmd_identify(a: &IdentifyArgs) -> CliResult<()> {
    let net = read_network(open(&a.input)?).map_err(CliError::file(&a.input))?;
    let probes = load_probes(a)?;
    if !(0.0..=1.0).contains(&a.b) {
        return Err(QvamError::InvalidDistortion(a.b).into());
    }
    let noise = NoiseSpec::new(a.b, a.seed);
    let mut w = output(a.out.as_deref())?;
    for (k, probe) in probes.iter().enumerate() {
        let probe = if a.b > 0.0 {
            noise.distort(probe, k as u64)
        } else {
            probe.clone()
        };
        let id = net.identify(&probe)?;
        let line = IdentifyLine {
            schema_version: SCHEMA_VERSION,
            probe: k,
            digits: id.key.digits(),
            index: id.index,
            valid: id.valid,
            margins: &id.margins,
        };
        let text = serde_json::to_string(&line).expect("plain structs always serialize");
        writeln!(w, "{text}").map_err(CliError::io(
            a.out.as_deref().unwrap_or(Path::new("<stdout>")),
        ))?;
    }
    finish(w, a.out.as_deref())
}

/// Resolves sweep flags into a configuration and the pattern set it runs on.
pub fn sweep_config(a: &SweepArgs) -> CliResult<(ExperimentConfig, Vec<QPattern>)> {
    let (patterns, len, m, q) = match &a.input {
        Some(path) => {
            let (q, len, patterns) = load_patterns(path)?;
            let m = patterns.len() as u64;
            (Some(patterns), len, m, q)
        }
        None => {
            let missing = || CliError::Usage("--n, --q and --m are required without --in".into());
            (
                None,
                a.n.ok_or_else(missing)?,
                a.m.ok_or_else(missing)?,
                a.q.ok_or_else(missing)?,
            )
        }
    };
    let (b_start, b_end, steps) = match a.b {
        Some(b) => (b, b, 1),
        None => (a.b_start, a.b_end, a.steps),
    };
    let cfg = ExperimentConfig {
        key_len: a.key_len,
        b_start,
        b_end,
        steps,
        trials: a.trials,
        seed: a.seed,
        engine: match a.engine {
            EngineArg::Weights => Engine::Weights,
            EngineArg::Matrixfree => Engine::MatrixFree,
        },
        baseline: !a.no_baseline,
        noise: match a.noise {
            NoiseArg::DistinctColor => NoiseModel::DistinctColor,
            NoiseArg::Uniform => NoiseModel::Uniform,
        },
        keys: match a.keys {
            KeysArg::Index => KeyScheme::Index,
            KeysArg::Balanced => KeyScheme::Balanced,
        },
        exclude_diagonal: !a.no_diagonal_exclusion,
        ..ExperimentConfig::new(len, m, q)
    };
    cfg.validate()?;
    let patterns = match patterns {
        Some(p) => p,
        None => cfg.patterns()?,
    };
    Ok((cfg, patterns))
}

/// Sidecar path for a CSV written to `out`.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let (cfg, patterns) = sweep_config(a)?;
    let harness = cfg.harness(&patterns)?;
    let grid = cfg.grid();
    let points = harness.sweep(&grid, cfg.trials, cfg.seed)?;

    let mut w = output(a.out.as_deref())?;
    qvam_core::experiment::write_csv(&mut w, &points).map_err(CliError::io(
        a.out.as_deref().unwrap_or(Path::new("<stdout>")),
    ))?;
    finish(w, a.out.as_deref())?;

    if let Some(out) = &a.out {
        let meta = json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "qvam",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": cfg.seed,
            "config": cfg,
            "key_len": harness.dims().key_len(),
            "grid": grid,
            "patterns": match &a.input {
                Some(p) => json!({ "source": "file", "path": p }),
                None => json!({ "source": "generated" }),
            },
            "rng": "chacha8, key from splitmix64(seed, domain, point), stream = trial",
            "error_definition": "decoded index differs from the stored index",
            "csv_columns": qvam_core::experiment::CSV_HEADER,
        });
        let path = meta_path(out);
        let mut mw = create(&path)?;
        serde_json::to_writer_pretty(&mut mw, &meta)
            .map_err(io::Error::from)
            .map_err(CliError::io(&path))?;
        writeln!(mw).map_err(CliError::io(&path))?;
        finish(mw, Some(&path))?;
    }

    if a.compare {
        let report = qvam_core::compare_engines(&cfg)?;
        eprint!("{}", report.to_table());
    }
    Ok(())
}

/// Closed-form estimates for the given parameters.
pub fn theory_report(a: &TheoryArgs) -> CliResult<serde_json::Value> {
    let mut t = TheoryInput::new(a.n, a.m, a.q, a.b).with_p0(a.p0);
    if let Some(n) = a.key_len {
        t = t.with_key_len(n);
    }
    let p = error_probability(&t)?;
    let key_len = t.resolved_key_len()?;
    let ne = t.effective_dim();
    let big_n =
        usize::try_from(a.n).map_err(|_| CliError::Usage(format!("N = {} is too large", a.n)))?;
    let ops = op_counts(&Dimensions::with_key_len(big_n, a.m, a.q, key_len)?);
    let n_max = max_output_neurons(ne, a.q).ok();
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "input": t,
        "key_len": key_len,
        "effective_dim": ne,
        "error_probability": p,
        "reliability": 1.0 - p.clamped,
        "capacity": capacity(&t)?,
        "critical_distortion": critical_distortion(a.n as f64, a.m as f64, a.q),
        "output_layer": n_max,
        "op_counts": ops,
    }))
}

pub fn cmd_theory(a: &TheoryArgs) -> CliResult<()> {
    let report = theory_report(a)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("JSON values always serialize")
    );
    Ok(())
}
