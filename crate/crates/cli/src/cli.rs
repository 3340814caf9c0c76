use std::path::PathBuf;

use cascade_core::exposure::PopularityMode;
use cascade_core::sim::ModelKind;
use cascade_core::stats::correlation::CorrelationMethod;
use cascade_core::stats::popularity::PopularityMeasure;
use cascade_core::stats::powerlaw::DEFAULT_MAX_ALPHA;
use cascade_core::time::TimeUnit;
use cascade_core::TieRule;
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::commands::DensityOf;

/// Maps a fixed set of names onto a serde enum with the same lowercase names.
fn choice<T>(names: &'static [&'static str]) -> impl TypedValueParser<Value = T>
where
    T: DeserializeOwned + Clone + Send + Sync + 'static,
{
    PossibleValuesParser::new(names.iter().copied())
        .map(|s: String| serde_json::from_value(serde_json::Value::String(s)).expect("listed names deserialise"))
}

#[derive(Debug, Parser)]
#[command(
    name = "cascade",
    version,
    about = "Adoption thresholds, tag popularity and diffusion simulation for timestamped tag logs",
    long_about = None
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read adoption and follow CSV files into a binary snapshot
    Ingest(IngestArgs),
    /// Exposure at every first usage and per-user thresholds
    Thresholds(ThresholdsArgs),
    /// Fit a discrete power law to tag popularity
    FitPowerlaw(FitArgs),
    /// Adoption curve of one tag
    Curve(CurveArgs),
    /// Correlation between tag popularity and exposure at adoption
    Correlate(CorrelateArgs),
    /// Run a diffusion model on a generated or ingested graph
    Simulate(SimulateArgs),
    /// Re-measure exposure on simulated runs and compare with planted thresholds
    Recover(RecoverArgs),
    /// Run several stages from a JSON configuration
    Pipeline(PipelineArgs),
    /// Summary counts of a snapshot
    Stats(StatsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Thresholds(_) => "thresholds",
            Command::FitPowerlaw(_) => "fit-powerlaw",
            Command::Curve(_) => "curve",
            Command::Correlate(_) => "correlate",
            Command::Simulate(_) => "simulate",
            Command::Recover(_) => "recover",
            Command::Pipeline(_) => "pipeline",
            Command::Stats(_) => "stats",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArg {
    /// Also write the run report to this file
    #[arg(long, value_name = "JSON")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Adoption events: user,tag,timestamp
    #[arg(long, value_name = "CSV")]
    pub adoptions: PathBuf,
    /// Follow edges: src,dst[,since]; src observes dst
    #[arg(long, value_name = "CSV")]
    pub follows: Option<PathBuf>,
    /// Snapshot to write
    #[arg(long, value_name = "SNAPSHOT")]
    pub out: PathBuf,
    /// Read each follow row as dst observes src
    #[arg(long)]
    pub reverse_edges: bool,
    /// Keep only reciprocated follow edges
    #[arg(long)]
    pub mutual_only: bool,
    /// Fail on the first unreadable row instead of dropping it
    #[arg(long)]
    pub strict: bool,
    /// Unit of integer timestamps
    #[arg(long, default_value = "seconds", value_parser = choice::<TimeUnit>(&["seconds", "millis"]))]
    pub time_unit: TimeUnit,
    /// Overwrite an existing file at --out
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct ExposureArgs {
    /// Whether alters adopting at the same instant count as exposure
    #[arg(long, default_value = "strict", value_parser = choice::<TieRule>(&["strict", "inclusive"]))]
    pub ties: TieRule,
    /// What tag popularity at adoption counts
    #[arg(long, default_value = "adopters", value_parser = choice::<PopularityMode>(&["adopters", "usages"]))]
    pub popularity: PopularityMode,
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    pub snapshot: PathBuf,
    /// Per-adoption exposure records
    #[arg(long, value_name = "TSV")]
    pub out: Option<PathBuf>,
    /// Per-user mean thresholds
    #[arg(long, value_name = "TSV")]
    pub per_user: Option<PathBuf>,
    /// Smoothed threshold density
    #[arg(long, value_name = "TSV")]
    pub density: Option<PathBuf>,
    /// Values behind the density
    #[arg(long, default_value = "users", value_parser = choice::<DensityOf>(&["users", "adoptions"]))]
    pub density_of: DensityOf,
    /// Kernel bandwidth; Silverman's rule when absent
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[command(flatten)]
    pub exposure: ExposureArgs,
    /// Also write the run report to this file
    #[arg(long, visible_alias = "report", value_name = "JSON")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value = "adopters", value_parser = choice::<PopularityMeasure>(&["adopters", "usages"]))]
    pub measure: PopularityMeasure,
    /// Bootstrap replicates for the goodness-of-fit p-value; 0 skips it
    #[arg(long, default_value_t = 100)]
    pub bootstrap: usize,
    /// Root seed; random (and reported) when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fixed lower cutoff instead of the scan
    #[arg(long)]
    pub xmin: Option<u64>,
    /// Largest exponent considered
    #[arg(long, default_value_t = DEFAULT_MAX_ALPHA, conflicts_with = "no_alpha_cap")]
    pub max_alpha: f64,
    /// Search the exponent without an upper cap
    #[arg(long)]
    pub no_alpha_cap: bool,
    /// Rank-frequency table
    #[arg(long, value_name = "TSV")]
    pub out: Option<PathBuf>,
    /// Popularity histogram
    #[arg(long, value_name = "TSV")]
    pub histogram: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    pub snapshot: PathBuf,
    #[arg(long)]
    pub tag: String,
    /// Bucket width: plain seconds or a suffixed duration such as 30m, 1h, 7d
    #[arg(long, default_value = "1d")]
    pub bucket: String,
    #[arg(long, value_name = "TSV")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    pub snapshot: PathBuf,
    /// Logarithmic popularity bins
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long, default_value = "spearman", value_parser = choice::<CorrelationMethod>(&["spearman", "pearson"]))]
    pub method: CorrelationMethod,
    #[command(flatten)]
    pub exposure: ExposureArgs,
    /// Binned means
    #[arg(long, value_name = "TSV")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = choice::<ModelKind>(&["threshold", "cascade", "learning"]))]
    pub model: ModelKind,
    /// Graph, seeds and model parameters
    #[arg(long, value_name = "JSON")]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Root seed; random (and reported) when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the runs and their manifest
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Directory written by `simulate`
    pub runs: PathBuf,
    /// Per-adopter margins
    #[arg(long, value_name = "TSV")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    pub config: PathBuf,
    /// Overrides the configuration's seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub report: ReportArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub snapshot: PathBuf,
    #[command(flatten)]
    pub report: ReportArg,
}
