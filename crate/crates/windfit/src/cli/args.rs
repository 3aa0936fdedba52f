//! Clap argument definitions for the `windfit` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::denoise::DenoiseMode;
use crate::noisefit::FitMethod;
use crate::wpt::{NodeId, WaveletKind};

#[derive(Debug, Parser)]
#[command(
    name = "windfit",
    version,
    about = "Wind-robust acoustic event detection and denoising",
    long_about = "Estimates transient broadband noise by fitting log-log spectrum models to \
wavelet packet subband energies, stabilizes the background by log-scale spectral subtraction, \
and detects or denoises against chi-square calibrated thresholds."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect acoustic events in WAV files
    Detect(DetectArgs),
    /// Denoise WAV files by adaptive wavelet shrinkage
    Denoise(DenoiseArgs),
    /// Export per-window subband spectra, fits and AICc tables
    Spectra(SpectraArgs),
    /// Generate synthetic noise/signal fixtures with a ground-truth manifest
    Synth(SynthArgs),
    /// Score denoising (SNR / SI-SDR) and optionally detections
    Eval(EvalArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonAnalysisArgs {
    /// Config file with key = value lines; flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Wavelet: sym8 or dmey
    #[arg(long)]
    pub wavelet: Option<WaveletKind>,
    /// Decomposition depth J (leaf bands = Nyquist / 2^J)
    #[arg(long)]
    pub depth: Option<usize>,
    /// Analysis window in seconds
    #[arg(long)]
    pub window: Option<f64>,
    /// Polynomial degree of the log-log spectrum model
    #[arg(long)]
    pub degree: Option<usize>,
    /// Lower edge of the fitted band in Hz
    #[arg(long)]
    pub band_low: Option<f64>,
    /// Upper edge of the fitted band in Hz
    #[arg(long)]
    pub band_high: Option<f64>,
    /// Fit method: ols or qr
    #[arg(long)]
    pub method: Option<FitMethod>,
    /// Quantile for qr fits
    #[arg(long)]
    pub tau: Option<f64>,
    /// Additive bias on interpolated log-energies
    #[arg(long)]
    pub bias_adjust: Option<f64>,
    /// Output directory
    #[arg(long, default_value = "windfit-out")]
    pub out_dir: PathBuf,
    /// Worker threads for multi-file runs (0 = automatic)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Input WAV files
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Target node(s) "level:index", e.g. 5:9 (repeatable)
    #[arg(long = "target-node")]
    pub target_node: Vec<NodeId>,
    /// Per-window false-alarm rate
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Minimum segment duration in seconds
    #[arg(long)]
    pub min_duration: Option<f64>,
    /// Maximum gap merged between active runs, seconds
    #[arg(long)]
    pub max_gap: Option<f64>,
    /// Multiplier on the chi-square threshold
    #[arg(long)]
    pub threshold_scale: Option<f64>,
    /// Run the unadjusted stationary-noise baseline instead
    #[arg(long)]
    pub no_adjust: bool,
    #[command(flatten)]
    pub common: CommonAnalysisArgs,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Input WAV files
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Threshold mode: constant_mad, adaptive_ols or adaptive_qr
    #[arg(long)]
    pub mode: Option<DenoiseMode>,
    /// Threshold multiplier lambda
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub common: CommonAnalysisArgs,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    /// Input WAV files
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Highest polynomial degree in the sweep
    #[arg(long)]
    pub max_degree: Option<usize>,
    /// Also export a Daniell-smoothed periodogram
    #[arg(long)]
    pub periodogram: bool,
    /// Smoothing kernel width in bins (odd)
    #[arg(long)]
    pub smooth_bins: Option<usize>,
    #[command(flatten)]
    pub common: CommonAnalysisArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthesis spec file (key = value)
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the spectral exponent alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Override the generator seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Base name for outputs (defaults to the spec file stem)
    #[arg(long)]
    pub name: Option<String>,
    /// Output directory
    #[arg(long, default_value = "windfit-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Clean reference WAV file(s)
    #[arg(long, required = true, num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// Noisy WAV file(s), aligned with the references
    #[arg(long, required = true, num_args = 1..)]
    pub noisy: Vec<PathBuf>,
    /// Denoised WAV file(s), aligned with the references
    #[arg(long, required = true, num_args = 1..)]
    pub denoised: Vec<PathBuf>,
    /// Group label per file triple (e.g. "calls_0db_qr"); enables grouped
    /// aggregates in the report
    #[arg(long)]
    pub label: Vec<String>,
    /// Detections CSV to score (needs --truth)
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Ground-truth manifest JSON (from synth)
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "windfit-out")]
    pub out_dir: PathBuf,
}
