use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "specfuse", version, about = "Fuse spectral image datasets, score interpolation fidelity and train pixel classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resample every dataset of a manifest onto one common grid.
    Fuse(FuseArgs),
    /// Score a cube against another cube or grid.
    Metrics(MetricsArgs),
    /// Compute the NDVI map of a cube.
    Ndvi(NdviArgs),
    /// Emit plot-ready data for pixels or whole-image surfaces.
    Plot(PlotArgs),
    /// Train the pixel classifier on a sample table.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a sample table.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// linear | quadratic | cubic | pchip
    #[arg(long)]
    pub method: String,
    /// Spline boundary for `cubic`: notaknot | natural
    #[arg(long, default_value = "notaknot")]
    pub boundary: String,
    /// Explicit grid START:STEP:STOP instead of the reference dataset's wavelengths.
    #[arg(long)]
    pub grid: Option<String>,
    /// Upper wavelength limit in nm.
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Min-max scale each dataset to [0, 1] before resampling.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Cmse,
    Surface,
    MseNdvi,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Cmse => "cmse",
            Metric::Surface => "surface",
            Metric::MseNdvi => "mse-ndvi",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Normalization {
    Span,
    Raw,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference cube.
    #[arg(long)]
    pub cube: PathBuf,
    /// For cmse, the cube whose grid is the forward target; otherwise the
    /// interpolated cube compared with the reference.
    #[arg(long)]
    pub against: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Interpolation method (required for cmse).
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, default_value = "notaknot")]
    pub boundary: String,
    /// Surface normalization.
    #[arg(long, value_enum, default_value = "span")]
    pub normalization: Normalization,
    #[arg(long, default_value_t = 665.0)]
    pub red_nm: f64,
    #[arg(long, default_value_t = 830.0)]
    pub nir_nm: f64,
    /// Dataset name for the report; defaults to the cube's file stem.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NdviArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long, default_value_t = 665.0)]
    pub red_nm: f64,
    #[arg(long, default_value_t = 830.0)]
    pub nir_nm: f64,
    /// Write the full map as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKindArg {
    Pixel2d,
    Surface3d,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKindArg,
    /// Pixel as ROW,COL; repeatable (pixel2d).
    #[arg(long = "pixel")]
    pub pixels: Vec<String>,
    /// Add one series per method, resampled onto --grid (pixel2d).
    #[arg(long = "method")]
    pub methods: Vec<String>,
    #[arg(long, default_value = "notaknot")]
    pub boundary: String,
    /// START:STEP:STOP target grid for --method series.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "mean")]
    pub reduction: Reduction,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: PlotFormat,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_data: PathBuf,
    /// 66 | 103 | custom:H1,H2,...
    #[arg(long)]
    pub arch: String,
    #[arg(long, default_value_t = 150)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 2048)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
