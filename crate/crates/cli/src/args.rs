use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sprayopt", version, about = "HVOF process-parameter optimization")]
pub struct Cli {
    /// Model registry document replacing the built-in models.
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print model predictions at one parameter setting.
    Predict(PredictArgs),
    /// Run an optimizer on a built-in or configured problem.
    Optimize(OptimizeArgs),
    /// Keep the non-dominated rows of a CSV file.
    Pareto(ParetoArgs),
    /// Compare model predictions with the published solution table.
    Validate(ValidateArgs),
    /// Write a built-in problem definition or the model registry as JSON.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct Setting {
    /// Powder feed rate (g/min).
    #[arg(long, allow_negative_numbers = true)]
    pub pfr: f64,
    /// Stand-off distance (mm).
    #[arg(long, allow_negative_numbers = true)]
    pub sod: f64,
    /// Fuel-to-oxygen ratio.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Coating velocity (m/min).
    #[arg(long, allow_negative_numbers = true)]
    pub cv: f64,
    /// Total gas flow (nl/m).
    #[arg(long, allow_negative_numbers = true)]
    pub tgf: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Predict every registered model.
    #[arg(long, conflicts_with = "model")]
    pub all: bool,
    /// Model to predict; repeat for several.
    #[arg(long, required_unless_present = "all")]
    pub model: Vec<String>,
    #[command(flatten)]
    pub setting: Setting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Nsga2,
    WeightedSum,
    Desirability,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nsga2 => "nsga2",
            Method::WeightedSum => "weighted-sum",
            Method::Desirability => "desirability",
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Built-in problem: I, II or III.
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub problem: Option<String>,
    /// Problem definition document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Method,
    /// NSGA-II population size.
    #[arg(long)]
    pub pop: Option<usize>,
    /// NSGA-II generations.
    #[arg(long)]
    pub gens: Option<usize>,
    #[arg(long, env = "SPRAYOPT_SEED")]
    pub seed: Option<u64>,
    /// Weight-lattice step for the weighted-sum sweep.
    #[arg(long)]
    pub step: Option<f64>,
    /// SQP starts per weight vector.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Nelder–Mead restarts for desirability.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Output path (CSV for front methods, JSON for desirability).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write SVG scatter plots of the front.
    #[arg(long)]
    pub svg: bool,
    /// Print per-generation records as JSON lines on stderr.
    #[arg(long)]
    pub progress: bool,
    /// Record wall-clock time in the summary and manifest.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Objective columns with senses, e.g. `hardness:max,efficiency:max`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub objectives: Vec<String>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Replace every gating tolerance with this relative value.
    #[arg(long)]
    pub strict: Option<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Problem,
    Registry,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum, default_value = "problem")]
    pub what: ExportKind,
    /// Built-in problem to export.
    #[arg(long, required_if_eq("what", "problem"))]
    pub problem: Option<String>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
