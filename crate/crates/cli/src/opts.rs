use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "robin",
    version,
    about = "Binarize images with nonuniform background and heavy noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Binarize one image; writes the mask, background and subtracted-image
    /// visualizations, and a JSON sidecar with the run diagnostics
    Binarize(BinarizeArgs),
    /// Run methods over a dataset manifest and report the metric suite
    Evaluate(EvaluateArgs),
    /// Generate the deterministic ten-scene synthetic evaluation suite
    Synth(SynthArgs),
    /// Pair inputs with ground truths by filename convention and write a
    /// manifest for review (no evaluation)
    Pair(PairArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Method {
    Proposed,
    Otsu,
    Niblack,
    Sauvola,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Proposed => "proposed",
            Method::Otsu => "otsu",
            Method::Niblack => "niblack",
            Method::Sauvola => "sauvola",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum FitScale {
    /// Normalized [0, 1] intensities (default)
    Unit,
    /// Raw 0..255 intensities, the strict-literal regime for δ = 1.346
    Raw,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum MaskFormat {
    Pbm,
    Png,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Settings accepted only by the proposed method.
#[derive(Args, Clone)]
pub struct ProposedOpts {
    /// Huber cutoff δ; defaults to 1.346 on the raw scale and 1.346/255 on
    /// the unit scale
    #[arg(long)]
    pub delta: Option<f64>,
    /// Comma-separated smoothness penalty grid
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Maximum number of boosting stages (rank-one terms)
    #[arg(long)]
    pub max_stages: Option<usize>,
    /// Maximum reweighted iterations per stage fit
    #[arg(long)]
    pub max_irls_iters: Option<usize>,
    /// Inner convergence tolerance on the fitted-surface change
    #[arg(long)]
    pub tol_inner: Option<f64>,
    /// Stage-stopping tolerance on the newest term's energy
    #[arg(long)]
    pub tol_stage: Option<f64>,
    /// Intensity scale the fit runs on
    #[arg(long, value_enum)]
    pub fit_scale: Option<FitScale>,
    /// Cap on exact unique-value threshold candidates
    #[arg(long)]
    pub candidate_cap: Option<usize>,
}

impl ProposedOpts {
    /// Names of the flags explicitly set, for method-mismatch diagnostics.
    pub fn set_flags(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.delta.is_some() {
            out.push("--delta");
        }
        if self.lambda_grid.is_some() {
            out.push("--lambda-grid");
        }
        if self.max_stages.is_some() {
            out.push("--max-stages");
        }
        if self.max_irls_iters.is_some() {
            out.push("--max-irls-iters");
        }
        if self.tol_inner.is_some() {
            out.push("--tol-inner");
        }
        if self.tol_stage.is_some() {
            out.push("--tol-stage");
        }
        if self.fit_scale.is_some() {
            out.push("--fit-scale");
        }
        if self.candidate_cap.is_some() {
            out.push("--candidate-cap");
        }
        out
    }
}

/// Settings accepted only by the windowed baselines.
#[derive(Args, Clone)]
pub struct WindowOpts {
    /// Window size for niblack/sauvola (odd, >= 3)
    #[arg(long)]
    pub window: Option<usize>,
    /// Niblack's k constant
    #[arg(long, allow_negative_numbers = true)]
    pub k: Option<f64>,
}

#[derive(Args)]
pub struct BinarizeArgs {
    /// Input image (binary PGM or PNG)
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Proposed)]
    pub method: Method,
    /// Invert intensities first (for light-on-dark foregrounds)
    #[arg(long)]
    pub invert: bool,
    #[arg(long, value_enum, default_value_t = MaskFormat::Pbm)]
    pub mask_format: MaskFormat,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub proposed: ProposedOpts,
    #[command(flatten)]
    pub windowed: WindowOpts,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Dataset manifest (JSON with id/input/ground_truth entries)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Methods to evaluate (one report per method)
    #[arg(long, value_delimiter = ',', default_values_t = vec![Method::Proposed])]
    pub methods: Vec<Method>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub report: ReportFormat,
    /// Worker threads for per-image work; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory for report files
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Zero the seconds column for byte-reproducible reports
    #[arg(long)]
    pub no_timing: bool,
    /// Invert intensities of every input
    #[arg(long)]
    pub invert: bool,
    #[command(flatten)]
    pub proposed: ProposedOpts,
    #[command(flatten)]
    pub windowed: WindowOpts,
}

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory for the scenes and their manifest
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed; every file is a pure function of it
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args)]
pub struct PairArgs {
    /// Directory of input images
    #[arg(long)]
    pub inputs: PathBuf,
    /// Directory of ground-truth masks
    #[arg(long)]
    pub truths: PathBuf,
    /// Manifest file to write for review
    #[arg(long)]
    pub out: PathBuf,
}
