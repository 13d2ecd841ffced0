use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "freeprob",
    version,
    about = "Free probability workbench: cumulants, free convolution, random walks and random matrices",
    args_override_self = true
)]
pub struct Cli {
    /// Flat key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Master seed for Monte Carlo runs.
    #[arg(long, global = true, env = "FREEPROB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Classical and free cumulants of a moment sequence.
    Cumulants(CumulantsArgs),
    /// Free additive convolution of two laws.
    Freeconv(FreeconvArgs),
    /// Closed walks on the free group F_d.
    Kesten(KestenArgs),
    /// Recurrence diagnostics for simple random walk on Z^d.
    Polya(PolyaArgs),
    /// Burgers-equation residuals along the semicircular flow.
    Flow(FlowArgs),
    /// Monte Carlo asymptotic-freeness experiments.
    Rmt(RmtArgs),
    /// Genus expansion of GUE trace moments.
    Wick(WickArgs),
    /// Weingarten function expansion via monotone factorizations.
    Weingarten(WeingartenArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct CumulantsArgs {
    /// Moments m_1, m_2, … as integers, decimals or p/q.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["moments_file", "law"])]
    pub moments: Option<Vec<String>>,

    /// File of moments separated by commas or whitespace.
    #[arg(long, conflicts_with = "law")]
    pub moments_file: Option<PathBuf>,

    /// Named law, e.g. semicircle:2, bernoulli, mp:1:1.
    #[arg(long)]
    pub law: Option<String>,

    /// Number of moments taken from a named law.
    #[arg(long, default_value_t = 8)]
    pub order: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Moment,
    Analytic,
    Both,
}

#[derive(Args, Debug, Serialize)]
pub struct FreeconvArgs {
    #[arg(long, conflicts_with = "moments_x")]
    pub law_x: Option<String>,

    #[arg(long, conflicts_with = "moments_y")]
    pub law_y: Option<String>,

    /// Moment file for X (moment route only).
    #[arg(long)]
    pub moments_x: Option<PathBuf>,

    #[arg(long)]
    pub moments_y: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Route::Both)]
    pub route: Route,

    /// Number of moments reported.
    #[arg(long, default_value_t = 6)]
    pub order: usize,

    #[arg(long, default_value_t = 1001)]
    pub grid_size: usize,

    /// Distance from the real axis used for Stieltjes inversion.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,

    /// Inversion interval as `a,b`.
    #[arg(long, allow_hyphen_values = true)]
    pub support: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct KestenArgs {
    #[arg(long)]
    pub d: usize,

    #[arg(long, default_value_t = 16)]
    pub nmax: usize,

    /// Evaluate the loop generating function at `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct PolyaArgs {
    #[arg(long)]
    pub d: usize,

    #[arg(long, default_value_t = 2000)]
    pub nmax: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct FlowArgs {
    /// Initial law of the flow.
    #[arg(long, default_value = "point:0")]
    pub law: String,

    /// Semicircle radius at which the residual is evaluated.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,

    /// Evaluation point `re,im`.
    #[arg(long, default_value = "0,2", allow_hyphen_values = true)]
    pub z: String,

    /// Finite-difference steps.
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.02,0.01,0.005")]
    pub h: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    GueGue,
    GueDeterministic,
    RotatedDiagonal,
}

#[derive(Args, Debug, Serialize)]
pub struct RmtArgs {
    #[arg(long, value_enum, default_value_t = ExperimentName::GueGue)]
    pub kind: ExperimentName,

    /// Matrix size N.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    #[arg(long, default_value_t = 200)]
    pub trials: usize,

    /// Highest moment order checked.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,

    /// Law of the deterministic diagonal for gue_deterministic.
    #[arg(long, default_value = "bernoulli")]
    pub law: String,

    /// Estimate a single word instead, e.g. `1212` or `11*`.
    #[arg(long)]
    pub word: Option<String>,

    /// Ensembles referenced by the word's digits.
    #[arg(long, value_delimiter = ',', default_value = "gue,gue")]
    pub ensembles: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct WickArgs {
    #[arg(long)]
    pub n: usize,

    /// Also evaluate at this matrix size.
    #[arg(long)]
    pub dim: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct WeingartenArgs {
    /// Permutation as 1-based images `2,1,3` or cycles `(1 2)(3)`.
    #[arg(long)]
    pub perm: String,

    /// Size of the symmetric group when cycles omit fixed points.
    #[arg(long)]
    pub size: Option<usize>,

    /// Truncation order R; defaults to |π| + 10.
    #[arg(long)]
    pub order: Option<usize>,

    /// Matrix sizes at which to evaluate the expansion.
    #[arg(long, value_delimiter = ',')]
    pub dim: Vec<u64>,
}
