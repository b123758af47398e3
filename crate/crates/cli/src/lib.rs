//! `condgan` subcommands: prepare, label, train, generate, evaluate.
//!
//! Exit codes: 0 on success, 2 for bad arguments, configs or fixtures,
//! 3 when something fails at run time. Every command leaves a `run.json`
//! next to its outputs recording the arguments and the resolved settings.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

/// `println!` that tolerates a closed stdout, as when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

mod commands;
pub mod record;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "condgan", version, about = "Class-conditional progressive style-based GAN toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Midpoints of per-image object words in a word-vector table.
    Words,
    /// Image features (bundled toy extractor or `--embeddings` vectors).
    Features,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a directory of images, drop text logos, build the resolution pyramid.
    Prepare(PrepareArgs),
    /// Cluster the kept images into K synthetic classes.
    Label(LabelArgs),
    /// Train a model on a prepared (and, unless unconditional, labeled) dataset.
    Train(TrainArgs),
    /// Render a sample grid from a checkpoint, one row per class.
    Generate(GenerateArgs),
    /// FID, IS and per-class diversity against the dataset, plus optional ψ sweep grids.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PrepareArgs {
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long = "max-res", value_name = "N")]
    pub max_res: u32,
    #[arg(long = "min-chars", value_name = "K", default_value_t = condgan::dataset::DEFAULT_MIN_CHARS)]
    pub min_chars: usize,
    /// JSON `{id|path|stem: detected text}` standing in for an OCR model.
    #[arg(long = "ocr-fixture", value_name = "FILE")]
    pub ocr_fixture: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replace an existing dataset at `--out`.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LabelArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = condgan::labels::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON `{id|path|stem: [words]}` (words method).
    #[arg(long, value_name = "FILE")]
    pub words: Option<PathBuf>,
    /// Word-vector table `word<TAB>v1 v2 …` for the words method, or JSON
    /// `{id|path|stem: [values]}` feature vectors for the features method.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Experiment config; omitted keys take their defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Checkpoint directory to continue from; its config is used.
    #[arg(long, value_name = "CKPT")]
    pub resume: Option<PathBuf>,
    /// Ignore labels and train with no class-conditions.
    #[arg(long)]
    pub unconditional: bool,
    /// Overrides `seed` from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `train.max_steps`.
    #[arg(long = "max-steps")]
    pub max_steps: Option<u64>,
    /// Overrides `train.total_images`.
    #[arg(long = "total-images")]
    pub total_images: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_name = "CKPT")]
    pub ckpt: PathBuf,
    /// A class index or `all`.
    #[arg(long, default_value = "all")]
    pub class: ClassArg,
    /// Samples per row.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub psi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output PNG.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "CKPT")]
    pub ckpt: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated ψ values; one grid each.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<f64>,
    /// Samples per class row in sweep grids.
    #[arg(long = "sweep-samples", default_value_t = 8)]
    pub sweep_samples: usize,
    /// Report directory (default: the checkpoint directory).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassArg {
    All,
    One(usize),
}

impl std::str::FromStr for ClassArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(ClassArg::All);
        }
        s.parse().map(ClassArg::One).map_err(|_| format!("expected a class index or `all`, got {s:?}"))
    }
}

impl Serialize for ClassArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for ClassArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassArg::All => f.write_str("all"),
            ClassArg::One(k) => write!(f, "{k}"),
        }
    }
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<condgan::Error> for Failure {
    fn from(e: condgan::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

pub fn run(cli: Cli, argv: &[String]) -> Result<(), Failure> {
    match &cli.command {
        Command::Prepare(a) => commands::prepare::run(a, argv),
        Command::Label(a) => commands::label::run(a, argv),
        Command::Train(a) => commands::train::run(a, argv),
        Command::Generate(a) => commands::generate::run(a, argv),
        Command::Evaluate(a) => commands::evaluate::run(a, argv),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}
