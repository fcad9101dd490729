//! Command-line front end. Exit codes: 0 success, 1 runtime data error,
//! 2 configuration or usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};
use std::thread;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::eval::{
    confusion_matrix, evaluate_clips, read_manifest, read_predictions, split_by_actor,
    top_k_accuracy, EvalError, Normalize, PredictionRecord,
};
use crate::fusion::{finish, read_records, FusionEngine};
use crate::population::{
    parse_manifest_line, render_table, social_return, IndividualReturn, InternalisationFn,
};
use crate::stream::{
    format_frame, synth_trace, LineSource, MergeEvent, MergedStream, SourceItem, SynthScriptFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "srf",
    version,
    about = "Social reward fusion engine and evaluation harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse live or recorded perceptor streams into a reward stream.
    Run(RunArgs),
    /// Replay one recorded trace file.
    Replay(ReplayArgs),
    /// Evaluate labeled clips: correlation, stats by label, histograms.
    EvalClips(EvalClipsArgs),
    /// Confusion matrices and top-k accuracy for a prediction file.
    EvalModel(EvalModelArgs),
    /// Partition a prediction file into train/test sides by actor.
    SplitActors(SplitArgs),
    /// Internalised population return from per-individual reward files.
    Population(PopulationArgs),
    /// Generate a synthetic trace from a script.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct StreamBounds {
    /// Tick grid origin in ms (defaults to the first frame's timestamp).
    #[arg(long)]
    pub epoch: Option<u64>,
    /// Emit ticks strictly before this time in ms (defaults to the last frame).
    #[arg(long)]
    pub until: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Accept one TCP connection per registered channel on this address.
    #[arg(long)]
    pub listen: Option<String>,
    /// Number of TCP connections to wait for (defaults to the channel count).
    #[arg(long, requires = "listen")]
    pub connections: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: StreamBounds,
    /// Trace files, or `-` for stdin. Defaults to stdin without --listen.
    pub sources: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: StreamBounds,
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalClipsArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalModelArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub predictions: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub predictions: PathBuf,
}

#[derive(Debug, Args)]
pub struct PopulationArgs {
    /// `identity` or `soft_equity:<scale>`.
    #[arg(long = "f", default_value = "identity")]
    pub function: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub script: PathBuf,
    /// Supplies the taxonomy (defaults to the seven-class taxonomy).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io { .. } => EXIT_DATA,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(io_err(path.display().to_string()))
}

/// Writes `text` to `path`, or to `stdout` when no path is given.
fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p.display().to_string())),
        None => stdout.write_all(text.as_bytes()).map_err(io_err("stdout")),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(
    args: I,
    stdin: Box<dyn Read + Send>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, stdin, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "srf: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(
    command: Command,
    stdin: Box<dyn Read + Send>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match command {
        Command::Run(args) => cmd_run(args, stdin, stdout, stderr),
        Command::Replay(args) => {
            let cfg = RunConfig::load(&args.config)?;
            let source = open(&args.trace)?;
            let out = args.out.or_else(|| cfg.output.samples.clone());
            let sources: Vec<Box<dyn Iterator<Item = SourceItem> + Send>> = vec![Box::new(
                LineSource::new(source, Arc::new(cfg.registry.clone())),
            )];
            stream_rewards(&cfg, sources, &args.bounds, out.as_deref(), stdout, stderr)
        }
        Command::EvalClips(args) => cmd_eval_clips(args, stdout),
        Command::EvalModel(args) => cmd_eval_model(args, stdout),
        Command::SplitActors(args) => cmd_split_actors(args, stdout),
        Command::Population(args) => cmd_population(args, stdout),
        Command::Synth(args) => cmd_synth(args, stdout),
    }
}

fn cmd_run(
    args: RunArgs,
    stdin: Box<dyn Read + Send>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let registry = Arc::new(cfg.registry.clone());
    let mut sources: Vec<Box<dyn Iterator<Item = SourceItem> + Send>> = Vec::new();
    let mut stdin = Some(stdin);
    let paths = if args.sources.is_empty() && args.listen.is_none() {
        vec![PathBuf::from("-")]
    } else {
        args.sources.clone()
    };
    for path in &paths {
        if path.as_os_str() == "-" {
            let input = stdin
                .take()
                .ok_or_else(|| CliError::Usage("stdin given more than once".into()))?;
            sources.push(Box::new(LineSource::new(
                BufReader::new(input),
                registry.clone(),
            )));
        } else {
            sources.push(Box::new(LineSource::new(open(path)?, registry.clone())));
        }
    }
    if let Some(addr) = &args.listen {
        let expected = args.connections.unwrap_or(cfg.registry.len());
        if expected == 0 {
            return Err(CliError::Usage(
                "--listen needs at least one registered channel".into(),
            ));
        }
        let listener = TcpListener::bind(addr).map_err(io_err(format!("bind {addr}")))?;
        let local = listener.local_addr().map_err(io_err("local_addr"))?;
        let _ = writeln!(
            stderr,
            "srf: listening on {local} for {expected} connection(s)"
        );
        let _ = stderr.flush();
        for _ in 0..expected {
            let (stream, peer) = listener.accept().map_err(io_err("accept"))?;
            log::info!("accepted perceptor connection from {peer}");
            let (tx, rx) = mpsc::sync_channel::<SourceItem>(1024);
            let registry = registry.clone();
            thread::spawn(move || {
                for item in LineSource::new(BufReader::new(stream), registry) {
                    if tx.send(item).is_err() {
                        break;
                    }
                }
            });
            sources.push(Box::new(rx.into_iter()));
        }
    }
    let out = args.out.clone().or_else(|| cfg.output.samples.clone());
    stream_rewards(&cfg, sources, &args.bounds, out.as_deref(), stdout, stderr)
}

/// Merges `sources`, drives the engine, and writes `.srfr` lines as ticks
/// are emitted. Rejected frames are logged and counted, never fatal.
fn stream_rewards(
    cfg: &RunConfig,
    sources: Vec<Box<dyn Iterator<Item = SourceItem> + Send>>,
    bounds: &StreamBounds,
    out: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let mut file;
    let sink: &mut dyn Write = match out {
        Some(p) => {
            file = BufWriter::new(File::create(p).map_err(io_err(p.display().to_string()))?);
            &mut file
        }
        None => stdout,
    };
    let mut engine = FusionEngine::new(cfg.fusion.clone(), cfg.registry.clone(), bounds.epoch)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rejected = 0usize;
    let mut last_t = None;
    let write_err = io_err("write samples");
    let write_all =
        |sink: &mut dyn Write, samples: Vec<crate::reward::RewardSample>| -> io::Result<()> {
            for s in &samples {
                writeln!(sink, "{s}")?;
            }
            if !samples.is_empty() {
                sink.flush()?;
            }
            Ok(())
        };
    let mut failure = None;
    for event in MergedStream::new(sources) {
        match event {
            MergeEvent::Skipped(d) => {
                rejected += 1;
                log::warn!("{d}");
            }
            MergeEvent::Frame(frame) => {
                if bounds.until.is_some_and(|u| frame.t >= u) {
                    continue;
                }
                let t = frame.t;
                match engine.push(frame) {
                    Ok(samples) => {
                        last_t = Some(t);
                        if let Err(e) = write_all(sink, samples) {
                            failure = Some(e);
                            break;
                        }
                    }
                    Err(e) => {
                        rejected += 1;
                        log::warn!("{e}");
                    }
                }
            }
        }
    }
    if let Some(e) = failure {
        return Err(write_err(e));
    }
    let mut tail = Vec::new();
    finish(&mut engine, last_t, bounds.until, &mut tail);
    write_all(sink, tail).map_err(io_err("write samples"))?;
    if rejected > 0 {
        let _ = writeln!(stderr, "srf: skipped {rejected} invalid frame(s)");
    }
    Ok(())
}

fn cmd_eval_clips(args: EvalClipsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let bins = args.bins.unwrap_or(cfg.eval.histogram_bins);
    if bins == 0 {
        return Err(CliError::Usage("--bins must be > 0".into()));
    }
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let clips =
        read_manifest(open(&args.manifest)?, base).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = evaluate_clips(&clips, &cfg.fusion, &cfg.registry, bins)?;
    let out = args.out.or_else(|| cfg.output.report.clone());
    emit(&report.render(), out.as_deref(), stdout)
}

fn load_optional(path: Option<&Path>) -> Result<RunConfig, CliError> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn load_predictions(path: &Path, cfg: &RunConfig) -> Result<Vec<PredictionRecord>, CliError> {
    let preds = read_predictions(open(path)?, &cfg.taxonomy)?;
    if preds.is_empty() {
        return Err(EvalError::EmptyPredictions.into());
    }
    Ok(preds)
}

fn cmd_eval_model(args: EvalModelArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_optional(args.config.as_deref())?;
    let preds = load_predictions(&args.predictions, &cfg)?;
    let k = cfg.taxonomy.len();
    let labels = cfg.taxonomy.labels();
    let m = confusion_matrix(&preds, k);
    let mut out = String::new();
    for (title, norm) in [
        ("confusion_counts", Normalize::Counts),
        ("confusion_row_normalized", Normalize::Row),
    ] {
        let _ = writeln!(out, "# {title}\ntrue\\pred|{}", labels.join("|"));
        for (label, row) in labels.iter().zip(m.values(norm)) {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "{label}|{}", cells.join("|"));
        }
        out.push('\n');
    }
    let all = top_k_accuracy(&preds, k, k)?;
    let fraction = args.test_fraction.unwrap_or(cfg.eval.test_fraction);
    let seed = args.seed.unwrap_or(cfg.eval.seed);
    let split = match split_by_actor(&preds, fraction, seed) {
        Ok(s) => Some((
            top_k_accuracy(&s.train, k, k)?,
            top_k_accuracy(&s.test, k, k)?,
        )),
        Err(EvalError::TooFewActors(_)) => None,
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    out.push_str("# top_k_accuracy\nk|all|train|test\n");
    for (i, (kk, acc)) in all.iter().enumerate() {
        let (train, test) = match &split {
            Some((tr, te)) => (tr[i].1.to_string(), te[i].1.to_string()),
            None => ("na".to_string(), "na".to_string()),
        };
        let _ = writeln!(out, "{kk}|{acc}|{train}|{test}");
    }
    emit(&out, args.out.as_deref(), stdout)
}

fn cmd_split_actors(args: SplitArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_optional(args.config.as_deref())?;
    let preds = load_predictions(&args.predictions, &cfg)?;
    let fraction = args.test_fraction.unwrap_or(cfg.eval.test_fraction);
    let seed = args.seed.unwrap_or(cfg.eval.seed);
    let split = split_by_actor(&preds, fraction, seed).map_err(|e| match e {
        EvalError::InvalidFraction(_) => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    emit(&split.to_string(), args.out.as_deref(), stdout)
}

fn cmd_population(args: PopulationArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let f: InternalisationFn = args
        .function
        .parse()
        .map_err(|e: crate::population::PopulationError| CliError::Usage(e.to_string()))?;
    let base = args
        .manifest
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let mut returns = Vec::new();
    for (i, line) in open(&args.manifest)?.lines().enumerate() {
        let line = line.map_err(io_err(args.manifest.display().to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, path) = parse_manifest_line(&line)
            .map_err(|e| CliError::Usage(format!("line {}: {e}", i + 1)))?;
        let path = base.join(path);
        let records = read_records(open(&path)?)
            .map_err(|(line, e)| CliError::Data(format!("{} line {line}: {e}", path.display())))?;
        returns.push(IndividualReturn {
            individual_id: id,
            ret: social_return(&records),
        });
    }
    emit(&render_table(&returns, &f), args.out.as_deref(), stdout)
}

fn cmd_synth(args: SynthArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_optional(args.config.as_deref())?;
    let mut text = String::new();
    open(&args.script)?
        .read_to_string(&mut text)
        .map_err(io_err(args.script.display().to_string()))?;
    let script = SynthScriptFile::parse(&text)
        .and_then(|s| s.to_script(&cfg.taxonomy))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let frames = synth_trace(&script, cfg.taxonomy.len(), args.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = String::new();
    for f in &frames {
        out.push_str(&format_frame(f));
        out.push('\n');
    }
    emit(&out, args.out.as_deref(), stdout)
}
