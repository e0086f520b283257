//! The `dualsys` command line: generation, checking and filtering experiments
//! with JSON outputs and a run manifest next to every output file.

mod babi;
mod clutrr;
mod gscan;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use manifest::{sha256_file, OutputRecord, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "dualsys", version, about = "Propose, extract, check, resample")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Generate bAbI stories with the guess-and-check loop.
    GenerateBabi(GenerateArgs),
    /// Generate CLUTRR-style kinship stories with the guess-and-check loop.
    GenerateClutrr(GenerateArgs),
    /// Answer the questions of a bAbI file and score them against its gold answers.
    QaBabi(QaArgs),
    /// Check each line (and each `|||` alternative) of a kinship story file.
    CheckClutrr(CheckArgs),
    /// Write ground-truth simulator stories in bAbI text format.
    SimulateBabi(SimulateArgs),
    /// Write seeded gSCAN-style scenes.
    GenGscanScenes(SceneArgs),
    /// Run the budgeted action filter over a scene file.
    GscanFilter(FilterArgs),
    /// Re-run the command recorded in a manifest and compare output hashes.
    #[serde(skip)]
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProposerKind {
    Template,
    Http,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 50)]
    pub stories: usize,
    /// Candidates sampled per line before the line is marked as an error.
    #[arg(long, default_value_t = 10)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub max_lines: usize,
    #[arg(long, value_enum, default_value_t = ProposerKind::Template)]
    pub proposer: ProposerKind,
    /// Template proposer: probability of ignoring the story so far.
    #[arg(long, default_value_t = 1.0)]
    pub fault_rate: f64,
    /// Template proposer (bAbI): probability that a line is a question.
    #[arg(long, default_value_t = 0.25)]
    pub question_prob: f64,
    /// HTTP proposer base URL; falls back to DUALSYS_PROPOSER_URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    /// Stop a story at the first line that exhausts its budget.
    #[arg(long)]
    pub stop_on_error: bool,
    /// JSONL traces; stats go to `<out>.stats.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CheckArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub stories: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub questions: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SceneArgs {
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub grid_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    /// `oracle`, `noisy:EPS` or `scripted:PATH`.
    #[arg(long, default_value = "noisy:0.3")]
    pub proposer: String,
    /// `oracle` or `noisy:P`.
    #[arg(long, default_value = "oracle")]
    pub target: String,
    #[arg(long, default_value_t = 50)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluate samples only, without the greedy candidate first.
    #[arg(long)]
    pub no_greedy_first: bool,
    /// Per-episode JSONL; the table goes to `<out>.table.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the outputs here instead of the recorded location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs (exit 2).
    Config(String),
    /// The proposal source failed (exit 3).
    Proposal(String),
    /// Writing outputs failed (exit 1).
    Io(String),
    /// A rerun produced different bytes (exit 1).
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Proposal(_) => 3,
            CliError::Io(_) | CliError::Mismatch(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Proposal(m) => write!(f, "proposal source failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Mismatch(m) => write!(f, "rerun differs: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub(crate) fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("records serialize");
    s.push('\n');
    s
}

pub(crate) fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

/// Files a command read and wrote, for the manifest.
#[derive(Debug, Default)]
pub(crate) struct Io {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenerateBabi(_) => "generate-babi",
            Command::GenerateClutrr(_) => "generate-clutrr",
            Command::QaBabi(_) => "qa-babi",
            Command::CheckClutrr(_) => "check-clutrr",
            Command::SimulateBabi(_) => "simulate-babi",
            Command::GenGscanScenes(_) => "gen-gscan-scenes",
            Command::GscanFilter(_) => "gscan-filter",
            Command::Rerun(_) => "rerun",
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::GenerateBabi(a) | Command::GenerateClutrr(a) => Some(a.seed),
            Command::SimulateBabi(a) => Some(a.seed),
            Command::GenGscanScenes(a) => Some(a.seed),
            Command::GscanFilter(a) => Some(a.seed),
            _ => None,
        }
    }

    /// The primary output path, where the manifest is anchored.
    fn out(&self) -> Option<&Path> {
        match self {
            Command::GenerateBabi(a) | Command::GenerateClutrr(a) => Some(&a.out),
            Command::QaBabi(a) => a.out.as_deref(),
            Command::CheckClutrr(a) => a.out.as_deref(),
            Command::SimulateBabi(a) => Some(&a.out),
            Command::GenGscanScenes(a) => Some(&a.out),
            Command::GscanFilter(a) => Some(&a.out),
            Command::Rerun(_) => None,
        }
    }

    fn with_out(mut self, out: PathBuf) -> Command {
        match &mut self {
            Command::GenerateBabi(a) | Command::GenerateClutrr(a) => a.out = out,
            Command::QaBabi(a) => a.out = Some(out),
            Command::CheckClutrr(a) => a.out = Some(out),
            Command::SimulateBabi(a) => a.out = out,
            Command::GenGscanScenes(a) => a.out = out,
            Command::GscanFilter(a) => a.out = out,
            Command::Rerun(_) => {}
        }
        self
    }
}

pub(crate) fn timeout(secs: u64) -> Duration {
    Duration::from_secs(secs.max(1))
}

/// Run one command, write its manifest and return the manifest.
pub fn execute(command: &Command) -> CliResult<Option<RunManifest>> {
    if let Command::Rerun(args) = command {
        rerun(args)?;
        return Ok(None);
    }
    let io = match command {
        Command::GenerateBabi(a) => babi::generate(a)?,
        Command::GenerateClutrr(a) => clutrr::generate(a)?,
        Command::QaBabi(a) => babi::qa(a)?,
        Command::CheckClutrr(a) => clutrr::check(a)?,
        Command::SimulateBabi(a) => babi::simulate(a)?,
        Command::GenGscanScenes(a) => gscan::scenes(a)?,
        Command::GscanFilter(a) => gscan::filter(a)?,
        Command::Rerun(_) => unreachable!("handled above"),
    };
    let Some(out) = command.out() else {
        return Ok(None);
    };
    let manifest = RunManifest::new(command.name(), command, command.seed(), &io)?;
    write_output(&sidecar(out, ".manifest.json"), to_json_pretty(&manifest).as_bytes())?;
    Ok(Some(manifest))
}

fn rerun(args: &RerunArgs) -> CliResult<()> {
    let recorded = RunManifest::load(&args.manifest)?;
    let mut command: Command = serde_json::from_value(recorded.config.clone())
        .map_err(|e| CliError::Config(format!("manifest config: {e}")))?;
    if let Some(out) = &args.out {
        command = command.with_out(out.clone());
    }
    let fresh = execute(&command)?.ok_or_else(|| CliError::Config("recorded command has no outputs".into()))?;
    if fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::Mismatch("different number of outputs".into()));
    }
    for (old, new) in recorded.outputs.iter().zip(&fresh.outputs) {
        if old.sha256 != new.sha256 {
            return Err(CliError::Mismatch(format!("{} vs {}", old.path, new.path)));
        }
        println!("identical {} {}", new.sha256, new.path);
    }
    Ok(())
}

/// Entry point shared by the binary and tests.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli.command) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dualsys: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
