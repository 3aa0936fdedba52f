//! Spectral subtraction of the estimated noise level from target-node
//! energies.
//!
//! Log-scale subtraction divides the observed energy by the estimated noise
//! power and floors at 1; with an accurate estimate the background then
//! follows a fixed chi-square law regardless of the noise strength, so one
//! threshold controls the false-alarm rate everywhere. Power-scale
//! subtraction (the classical form) is provided for comparison: it leaves a
//! censored distribution whose tail still depends on the noise strength.

use crate::error::{Error, Result};
use crate::noisefit::NoiseEstimate;
use crate::wpt::{NodeId, SubbandEnergyFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtractionMode {
    LogSubtraction,
    PowerSubtraction,
}

impl std::fmt::Display for SubtractionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SubtractionMode::LogSubtraction => write!(f, "log_subtraction"),
            SubtractionMode::PowerSubtraction => write!(f, "power_subtraction"),
        }
    }
}

/// max(1, energy / exp(noise_log_power)).
pub fn log_spectral_subtract(energy: f64, noise_log_power: f64) -> f64 {
    (energy / noise_log_power.exp()).max(1.0)
}

/// The unfloored ratio, for diagnostic export where sub-threshold behaviour
/// matters.
pub fn log_spectral_ratio(energy: f64, noise_log_power: f64) -> f64 {
    energy / noise_log_power.exp()
}

/// max(0, energy - noise_power).
pub fn power_spectral_subtract(energy: f64, noise_power: f64) -> f64 {
    (energy - noise_power).max(0.0)
}

/// Per-window adjusted energies of one target node.
#[derive(Debug, Clone)]
pub struct AdjustedSeries {
    pub node: NodeId,
    pub mode: SubtractionMode,
    /// Whether the rectifying floor was applied.
    pub floored: bool,
    pub sample_rate: u32,
    pub window_starts: Vec<f64>,
    pub window_ends: Vec<f64>,
    /// Raw mean node energy per window.
    pub raw_energy: Vec<f64>,
    /// Noise power estimate (linear) per window.
    pub noise_power: Vec<f64>,
    /// Adjusted energy per window.
    pub values: Vec<f64>,
    /// Coefficients averaged per window (degrees of freedom of the windowed
    /// statistic).
    pub n_coeffs: Vec<usize>,
}

impl AdjustedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Element-wise subtraction over aligned frames and estimates.
///
/// `frames[i]` and `estimates[i]` must describe the same window; estimates
/// must be for `node`.
pub fn adjust_target_series(
    frames: &[SubbandEnergyFrame],
    estimates: &[NoiseEstimate],
    node: NodeId,
    mode: SubtractionMode,
) -> Result<AdjustedSeries> {
    adjust_target_series_with(frames, estimates, node, mode, true)
}

/// As [`adjust_target_series`], with control over the rectifying floor.
pub fn adjust_target_series_with(
    frames: &[SubbandEnergyFrame],
    estimates: &[NoiseEstimate],
    node: NodeId,
    mode: SubtractionMode,
    apply_floor: bool,
) -> Result<AdjustedSeries> {
    if frames.len() != estimates.len() {
        return Err(Error::MisalignedWindows { index: frames.len().min(estimates.len()) });
    }
    let mut out = AdjustedSeries {
        node,
        mode,
        floored: apply_floor,
        sample_rate: frames.first().map_or(0, |f| f.sample_rate),
        window_starts: Vec::with_capacity(frames.len()),
        window_ends: Vec::with_capacity(frames.len()),
        raw_energy: Vec::with_capacity(frames.len()),
        noise_power: Vec::with_capacity(frames.len()),
        values: Vec::with_capacity(frames.len()),
        n_coeffs: Vec::with_capacity(frames.len()),
    };
    for (i, (frame, est)) in frames.iter().zip(estimates).enumerate() {
        if (frame.window_start - est.window_start).abs() > 1e-9 || est.node != node {
            return Err(Error::MisalignedWindows { index: i });
        }
        if node.level != frame.level || node.index > frame.node_count() {
            return Err(Error::InvalidNode { level: node.level, index: node.index });
        }
        let raw = frame.log_energy[node.index - 1].exp();
        let noise = est.log_power.exp();
        let adjusted = match (mode, apply_floor) {
            (SubtractionMode::LogSubtraction, true) => log_spectral_subtract(raw, est.log_power),
            (SubtractionMode::LogSubtraction, false) => log_spectral_ratio(raw, est.log_power),
            (SubtractionMode::PowerSubtraction, true) => power_spectral_subtract(raw, noise),
            (SubtractionMode::PowerSubtraction, false) => raw - noise,
        };
        out.window_starts.push(frame.window_start);
        out.window_ends.push(frame.window_end());
        out.raw_energy.push(raw);
        out.noise_power.push(noise);
        out.values.push(adjusted);
        out.n_coeffs.push(frame.n_coeffs);
    }
    Ok(out)
}
