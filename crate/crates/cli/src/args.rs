use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use privmine_core::anonymize::Strategy;
use privmine_core::clustering::ClusterMethod;
use privmine_core::similarity::Measure;

#[derive(Debug, Parser)]
#[command(
    name = "privmine",
    version,
    about = "Privacy-preserving process mining on event logs"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discover a directly-follows model, optionally simplified.
    Discover(DiscoverArgs),
    /// Produce a protected log.
    Anonymize(AnonymizeArgs),
    /// Score protected logs against the original.
    Evaluate(EvaluateArgs),
    /// Simulate a re-identification attack on a protected log.
    Attack(AttackArgs),
    /// Write a seeded synthetic log.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Xes,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Xes => "xes",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Event log to read.
    #[arg(long)]
    pub input: PathBuf,

    /// Input format; guessed from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    #[arg(long, default_value = "case_id")]
    pub case_column: String,
    #[arg(long, default_value = "activity")]
    pub activity_column: String,
    #[arg(long, default_value = "timestamp")]
    pub timestamp_column: String,
    #[arg(long, default_value = "resource")]
    pub resource_column: String,
    #[arg(long, default_value = "event_id")]
    pub event_id_column: String,

    /// Treat the `unknown` resource as an individual.
    #[arg(long)]
    pub include_unknown: bool,
}

#[derive(Debug, Clone, Args)]
pub struct KeyArgs {
    /// Environment variable holding the pseudonym key.
    #[arg(long, default_value = "PRIVMINE_KEY")]
    pub key_env: String,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 2 {
        Ok(v)
    } else {
        Err(format!("k must be at least 2, got {v}"))
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

fn strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn clustering(s: &str) -> Result<ClusterMethod, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Args)]
pub struct DiscoverArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Output directory for model.dot, model.json and metrics.json.
    #[arg(long)]
    pub out: PathBuf,

    /// Skip Miner length of skip; 0 gives the plain directly-follows graph.
    #[arg(long, default_value_t = 0)]
    pub los: usize,

    /// Drop edges with weight below this value.
    #[arg(long, value_parser = unit_interval)]
    pub alpha: Option<f64>,

    /// Drop activities present in fewer than this share of traces.
    #[arg(long, value_parser = unit_interval)]
    pub beta: Option<f64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnonymizeMethod {
    Upppm,
    Kpppm,
    Pseudonymize,
}

#[derive(Debug, Args)]
pub struct AnonymizeArgs {
    #[arg(value_enum)]
    pub method: AnonymizeMethod,

    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub key: KeyArgs,

    /// Output directory for the protected log and audit.json.
    #[arg(long)]
    pub out: PathBuf,

    /// Format of the protected log; defaults to the input format.
    #[arg(long, value_enum)]
    pub output_format: Option<Format>,

    #[arg(long, value_parser = at_least_two)]
    pub k: Option<usize>,

    #[arg(long, value_parser = strategy, default_value = "s2")]
    pub strategy: Strategy,

    #[arg(long, value_parser = clustering, default_value = "mdav")]
    pub clustering: ClusterMethod,

    #[arg(long, value_parser = measure, default_value = "veo")]
    pub measure: Measure,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Also write the encrypted identity-to-pseudonym map.
    #[arg(long)]
    pub emit_map: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentMethod {
    Upppm,
    Kpppm,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Original event log.
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub key: KeyArgs,

    /// Score this protected log instead of running the anonymizer.
    #[arg(long)]
    pub protected: Option<PathBuf>,

    /// Encrypted pseudonym map linking the protected log to identities.
    #[arg(long, requires = "protected")]
    pub map: Option<PathBuf>,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value = "upppm")]
    pub method: ExperimentMethod,

    /// One or more values, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = at_least_two, default_value = "2")]
    pub k: Vec<usize>,

    #[arg(long, value_delimiter = ',', value_parser = strategy, default_value = "s2")]
    pub strategy: Vec<Strategy>,

    #[arg(long, value_delimiter = ',', value_parser = clustering, default_value = "mdav")]
    pub clustering: Vec<ClusterMethod>,

    #[arg(long, value_delimiter = ',', value_parser = measure, default_value = "veo")]
    pub measure: Vec<Measure>,

    #[arg(long, value_parser = at_least_one, default_value = "5")]
    pub runs: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackMode {
    Distribution,
    Modelling,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Original event log, standing in for the attacker's observations.
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub key: KeyArgs,

    #[arg(long)]
    pub protected: PathBuf,

    /// Encrypted pseudonym map used to score the attack.
    #[arg(long)]
    pub map: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub attack: AttackMode,

    #[arg(long, value_parser = measure, default_value = "veo")]
    pub measure: Measure,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value = "xes")]
    pub format: Format,

    #[arg(long, default_value_t = 60)]
    pub individuals: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
