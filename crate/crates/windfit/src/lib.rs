//! Wind-robust acoustic event detection and denoising.
//!
//! Transient broadband noise (wind gusts and similar) defeats energy
//! detectors calibrated on stationary backgrounds. This crate estimates the
//! short-term noise level by fitting polynomial log-log spectrum models to
//! wavelet packet subband energies, divides it out on log scale so background
//! energies follow a fixed chi-square law, and detects events against
//! chi-square calibrated thresholds. The same noise estimate drives adaptive
//! wavelet shrinkage for restoring clean audio.
//!
//! Modules:
//! - [`wpt`]: orthonormal wavelet packet transform with frequency-ordered nodes
//! - [`noisefit`]: OLS / quantile-regression spectrum fits and interpolation
//! - [`adjust`]: log-scale (and comparison power-scale) spectral subtraction
//! - [`detect`]: chi-square thresholded segment detection and the full pipeline
//! - [`denoise`]: soft-threshold wavelet shrinkage with per-window noise SDs
//! - [`synth`]: seeded generators for 1/f noise, gusts, tones and mixtures
//! - [`metrics`]: SNR, SI-SDR, detection scoring, chi-square distribution
//! - [`cli`]: subcommand implementations behind the `windfit` binary

pub mod adjust;
pub mod audio;
pub mod cli;
pub mod denoise;
pub mod detect;
pub mod error;
pub mod metrics;
pub mod noisefit;
pub mod synth;
pub mod wpt;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
