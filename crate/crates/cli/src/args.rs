use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ioht", version, about = "Sensor data reduction and differential privacy experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic trace or population as CSV
    #[command(subcommand)]
    Gen(GenCommand),
    /// Filter one trace and report savings and accuracy
    Infer(InferArgs),
    /// Savings and accuracy across a grid of variance rates
    VrSweep(VrSweepArgs),
    /// Plaintext and ciphertext sizes across a grid of savings levels
    SizeSweep(SizeSweepArgs),
    /// Answer a noisy statistical query over a population
    Dp(DpArgs),
    /// Noise added to a population across a grid of epsilon values
    EpsilonSweep(EpsilonSweepArgs),
    /// Run both tiers end to end
    Pipeline(PipelineArgs),
    /// Render a CSV of columns as an SVG chart
    Chart(ChartArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    Trace {
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    Population {
        /// Number of people
        #[arg(long, default_value_t = 130)]
        people: usize,
        #[arg(long, default_value_t = 5)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Directory for CSV/JSON/SVG artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print machine-readable JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, default_value = "heart-rate")]
    pub kind: String,
    /// Number of samples
    #[arg(long, default_value_t = 1420)]
    pub n: usize,
    /// Seconds between samples
    #[arg(long, default_value_t = 60)]
    pub period: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 70.0)]
    pub baseline: f64,
    /// Amplitude of the daily sinusoid
    #[arg(long, default_value_t = 8.0)]
    pub drift: f64,
    /// Innovation scale of the AR(1) noise
    #[arg(long, default_value_t = 1.5)]
    pub noise: f64,
}

#[derive(Args, Debug, Clone)]
pub struct TraceArgs {
    /// `t,value` CSV; a synthetic trace is generated when omitted
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Unit of the input CSV (defaults to the kind's usual unit)
    #[arg(long)]
    pub unit: Option<String>,
    #[command(flatten)]
    pub synth: SynthArgs,
}

#[derive(Args, Debug, Clone)]
pub struct PopulationArgs {
    /// `id,gender,body_temperature,heart_rate` CSV; generated when omitted
    #[arg(long)]
    pub population: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TempScaleArg::Celsius)]
    pub temperature_scale: TempScaleArg,
    /// Size of the generated population
    #[arg(long, default_value_t = 130)]
    pub people: usize,
    #[arg(long, default_value_t = 5)]
    pub population_seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TempScaleArg {
    Celsius,
    Fahrenheit,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconArg {
    Linear,
    StepHold,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Variance rate as a fraction (0.025 = 2.5%)
    #[arg(long, default_value_t = 0.025)]
    pub vr: f64,
    /// Transmit every k-th sample unconditionally
    #[arg(long)]
    pub beacon: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReconArg::Linear)]
    pub recon: ReconArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VrSweepArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Comma-separated variance rates
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.025, 0.05, 0.10, 0.20])]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub beacon: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReconArg::Linear)]
    pub recon: ReconArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SizeSweepArgs {
    /// Comma-separated savings percentages
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 51.3, 78.5, 89.7, 98.8])]
    pub grid: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DpArgs {
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sensitivity: f64,
    #[arg(long, default_value = "mean")]
    pub query: String,
    #[arg(long, default_value = "heart_rate")]
    pub field: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct EpsilonSweepArgs {
    /// Comma-separated epsilon values
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0])]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sensitivity: f64,
    #[arg(long, default_value = "heart_rate")]
    pub field: String,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Pipeline configuration JSON; flags below override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long)]
    pub vr: Option<f64>,
    #[arg(long)]
    pub beacon: Option<usize>,
    #[arg(long)]
    pub suite: Option<String>,
    /// Cipher key as hex
    #[arg(long)]
    pub key: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub sensitivity: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Master seed for the query noise streams
    #[arg(long = "master-seed")]
    pub master_seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum StyleArg {
    Line,
    Points,
}

#[derive(Args, Debug)]
pub struct ChartArgs {
    /// CSV whose first column is x and remaining columns are series
    #[arg(long)]
    pub input: PathBuf,
    /// Directory to write the SVG into
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// File name of the SVG
    #[arg(long, default_value = "chart.svg")]
    pub name: String,
    #[arg(long, value_enum, default_value_t = StyleArg::Line)]
    pub style: StyleArg,
    #[arg(long, default_value = "")]
    pub title: String,
}
