//! `hiermol` command-line interface.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime error. Failures
//! print one JSON object on stderr.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "hiermol",
    version,
    about = "Hierarchical molecular graph toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable), e.g. `--set lr=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Malformed-line policy for input files: skip or abort.
    #[arg(long = "on-error", global = true)]
    on_error: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Keep the largest fragment, filter by size and valence, canonicalize.
    Clean(CleanArgs),
    /// Segment molecules into motifs and report the hierarchy.
    Segment(SegmentArgs),
    /// Pretrain the encoder on a SMILES or molecule-text pair file.
    Pretrain(PretrainArgs),
    /// Segment and encode molecules into a features file.
    Embed(EmbedArgs),
    /// Project and reduce features into tokens (JSON lines).
    Reduce(ReduceArgs),
    /// Project and reduce features into one binary token file per molecule.
    ExportTokens(ExportArgs),
    /// Train the projector contrastively on molecule-text pairs.
    AlignProjector(AlignArgs),
    /// Score predicted molecules against references.
    EvalMol(EvalMolArgs),
    /// Score predicted captions against references.
    EvalText(EvalArgs),
    /// Run the gradient, pooling, segmentation and canonicalization suites.
    Selfcheck,
}

#[derive(Args, Debug)]
struct CleanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Also write rejected lines as `line<TAB>reason<TAB>input`.
    #[arg(long)]
    rejects: Option<PathBuf>,
    #[arg(long = "min-heavy-atoms")]
    min_heavy_atoms: Option<usize>,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// JSON-lines output; stdout summary only when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    rules: Option<String>,
}

#[derive(Args, Debug)]
struct PretrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Treat the input as `smiles<TAB>description` pairs.
    #[arg(long)]
    pairs: bool,
    /// Precomputed text vectors, one per pair record.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    /// Per-step loss log (JSON lines).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    features: PathBuf,
    /// Trained projector; a seeded fresh projector of width `d_llm` otherwise.
    #[arg(long)]
    projector: Option<PathBuf>,
    /// none, hier, all, node, motif or graph.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "d-llm")]
    d_llm: Option<usize>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    project: ProjectArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    project: ProjectArgs,
    #[arg(long = "output-dir")]
    output_dir: PathBuf,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long = "d-llm")]
    d_llm: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Per-line records (JSON lines).
    #[arg(long)]
    records: Option<PathBuf>,
    /// Summary table (CSV).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalMolArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// smiles or selfies.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    fn emit(&self) {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        eprintln!("{}", serde_json::json!({ "error": kind, "message": msg }));
    }
}

pub fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn build_config(g: &Global, overrides: &[(&str, String)]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text).map_err(validation)?;
    }
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| validation(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim()).map_err(validation)?;
    }
    let mut flags: Vec<(&str, String)> = Vec::new();
    if let Some(s) = g.seed {
        flags.push(("seed", s.to_string()));
    }
    if let Some(w) = g.workers {
        flags.push(("workers", w.to_string()));
    }
    if let Some(p) = &g.on_error {
        flags.push(("on_error", p.clone()));
    }
    for (k, v) in flags.iter().chain(overrides) {
        cfg.set(k, v).map_err(validation)?;
    }
    cfg.validate().map_err(validation)?;
    Ok(cfg)
}

fn some<T: ToString>(key: &'static str, v: &Option<T>) -> Option<(&'static str, String)> {
    v.as_ref().map(|x| (key, x.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides: Vec<(&str, String)> = match &cli.command {
        Command::Clean(a) => vec![some("min_heavy_atoms", &a.min_heavy_atoms)],
        Command::Segment(a) => vec![some("rules", &a.rules)],
        Command::Reduce(ReduceArgs { project: p, .. })
        | Command::ExportTokens(ExportArgs { project: p, .. }) => {
            vec![some("reduction", &p.mode), some("d_llm", &p.d_llm)]
        }
        Command::AlignProjector(a) => vec![some("d_llm", &a.d_llm), some("align_steps", &a.steps)],
        Command::EvalMol(a) => vec![some("format", &a.format)],
        _ => vec![],
    }
    .into_iter()
    .flatten()
    .collect();
    let cfg = build_config(&cli.global, &overrides)?;
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(runtime)?;
    }
    match cli.command {
        Command::Clean(a) => commands::clean(&cfg, &a.input, &a.output, a.rejects.as_deref()),
        Command::Segment(a) => commands::segment(&cfg, &a.input, a.output.as_deref()),
        Command::Pretrain(a) => commands::pretrain(
            &cfg,
            &a.input,
            a.pairs,
            a.sidecar.as_deref(),
            &a.output,
            a.log.as_deref(),
        ),
        Command::Embed(a) => commands::embed(&cfg, &a.checkpoint, &a.input, &a.output),
        Command::Reduce(a) => commands::reduce(
            &cfg,
            &a.project.features,
            a.project.projector.as_deref(),
            &a.output,
        ),
        Command::ExportTokens(a) => commands::export_tokens(
            &cfg,
            &a.project.features,
            a.project.projector.as_deref(),
            &a.output_dir,
        ),
        Command::AlignProjector(a) => commands::align(
            &cfg,
            &a.checkpoint,
            &a.pairs,
            a.sidecar.as_deref(),
            &a.output,
        ),
        Command::EvalMol(a) => commands::eval(
            hiermol::metrics::TaskMode::Molecule(cfg.format),
            &a.eval.pred,
            &a.eval.gt,
            a.eval.records.as_deref(),
            a.eval.summary.as_deref(),
        ),
        Command::EvalText(a) => commands::eval(
            hiermol::metrics::TaskMode::Text,
            &a.pred,
            &a.gt,
            a.records.as_deref(),
            a.summary.as_deref(),
        ),
        Command::Selfcheck => commands::selfcheck(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            CliError::Validation(
                msg.lines()
                    .next()
                    .unwrap_or("invalid arguments")
                    .to_string(),
            )
            .emit();
            eprint!("{msg}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.emit();
            ExitCode::from(e.code())
        }
    }
}
