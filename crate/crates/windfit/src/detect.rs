//! Chi-square calibrated detection of acoustic events as intervals of
//! elevated adjusted energy in the target node(s).
//!
//! The per-window statistic is the windowed sum of adjusted squared
//! coefficients (df * mean adjusted energy), tested against the chi-square
//! quantile with matched degrees of freedom. After log-scale subtraction the
//! background statistic is chi-square distributed whatever the noise
//! strength, so the false-alarm rate per window is alpha by construction.
//!
//! [`run_pipeline`] chains the whole workflow: wavelet packet transform,
//! windowed node energies, per-window spectrum fit excluding the target
//! nodes, noise interpolation, log spectral subtraction, and segment
//! assembly. Long inputs are processed in bounded-memory chunks aligned to
//! the analysis window grid with one window of transform context on each
//! side.

use std::collections::BTreeMap;

use crate::adjust::{
    adjust_target_series_with, AdjustedSeries, SubtractionMode,
};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::metrics::chi2_quantile;
use crate::noisefit::{
    fit_frame, interpolate_noise, noise_log_offset, FitConfig, NoiseEstimate,
};
use crate::wpt::{
    windowed_node_energies_chunked, NodeId, SubbandEnergyFrame, Wavelet, MIN_WINDOW_COEFFS,
};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DetectorConfig {
    /// Per-window false-alarm rate under the calibrated background model.
    pub alpha: f64,
    /// Segments shorter than this are discarded (seconds).
    pub min_duration: f64,
    /// Active runs closer than this are merged (seconds).
    pub max_gap: f64,
    /// Analysis window in seconds, shared between detection and fitting.
    pub window: f64,
    /// Leaf node(s) watched for events.
    pub target_nodes: Vec<NodeId>,
    /// Multiplier on the chi-square quantile threshold.
    pub threshold_scale: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        // 0.1 s windows, min_duration of two windows, gap merge of one window
        DetectorConfig {
            alpha: 0.01,
            min_duration: 0.2,
            max_gap: 0.1,
            window: 0.1,
            target_nodes: Vec::new(),
            threshold_scale: 1.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(Error::Config(format!("alpha {} not in (0,1)", self.alpha)));
        }
        if self.min_duration < 0.0 {
            return Err(Error::Config("min_duration must be >= 0".into()));
        }
        if self.max_gap < 0.0 {
            return Err(Error::Config("max_gap must be >= 0".into()));
        }
        if self.window.is_nan() || self.window <= 0.0 {
            return Err(Error::Config("window must be positive".into()));
        }
        if self.threshold_scale.is_nan() || self.threshold_scale <= 0.0 {
            return Err(Error::Config("threshold_scale must be positive".into()));
        }
        Ok(())
    }
}

/// A detected event.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectionSegment {
    pub start: f64,
    pub end: f64,
    pub peak_adjusted_energy: f64,
    pub mean_adjusted_energy: f64,
    pub node: NodeId,
}

/// Threshold lambda with P(chi2_df > lambda) = alpha.
pub fn threshold_for_alpha(alpha: f64, df: u32) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} not in (0,1)")));
    }
    chi2_quantile(1.0 - alpha, df)
}

/// Mark windows whose windowed statistic exceeds the scaled chi-square
/// threshold, merge runs separated by gaps up to `max_gap`, and drop segments
/// shorter than `min_duration`.
pub fn detect_segments(
    series: &AdjustedSeries,
    cfg: &DetectorConfig,
) -> Result<Vec<DetectionSegment>> {
    cfg.validate()?;
    if series.is_empty() {
        return Err(Error::EmptyInput("detect_segments needs a non-empty series".into()));
    }
    let mut thresholds: BTreeMap<usize, f64> = BTreeMap::new();
    let active: Vec<bool> = series
        .values
        .iter()
        .zip(&series.n_coeffs)
        .map(|(&v, &df)| {
            let thr = *thresholds
                .entry(df)
                .or_insert_with(|| threshold_for_alpha(cfg.alpha, df as u32).expect("alpha checked"));
            df as f64 * v > cfg.threshold_scale * thr
        })
        .collect();

    // maximal active runs as window index ranges
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < active.len() {
        if active[i] {
            let start = i;
            while i < active.len() && active[i] {
                i += 1;
            }
            runs.push((start, i - 1));
        } else {
            i += 1;
        }
    }

    // merge runs separated by no more than max_gap seconds
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(last) if series.window_starts[run.0] - series.window_ends[last.1] <= cfg.max_gap + 1e-9 => {
                last.1 = run.1;
            }
            _ => merged.push(run),
        }
    }

    let mut segments = Vec::new();
    for (a, b) in merged {
        let start = series.window_starts[a];
        let end = series.window_ends[b];
        if end - start + 1e-9 < cfg.min_duration {
            continue;
        }
        let span = &series.values[a..=b];
        let peak = span.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = span.iter().sum::<f64>() / span.len() as f64;
        segments.push(DetectionSegment {
            start,
            end,
            peak_adjusted_energy: peak,
            mean_adjusted_energy: mean,
            node: series.node,
        });
    }
    Ok(segments)
}

/// Per-target intermediate results of the detection pipeline.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub segments: Vec<DetectionSegment>,
    /// One adjusted series per target node, in `target_nodes` order.
    pub series: Vec<AdjustedSeries>,
}

/// The full wind-robust detection pipeline with per-window noise fits.
pub fn run_pipeline(
    x: &AudioBuffer,
    wavelet: &Wavelet,
    depth: usize,
    fit_cfg: &FitConfig,
    det_cfg: &DetectorConfig,
) -> Result<Vec<DetectionSegment>> {
    Ok(run_pipeline_full(x, wavelet, depth, fit_cfg, det_cfg, true)?.segments)
}

/// The unadjusted baseline: the same detector with a single global noise
/// level per target, estimated from the median window energy (the stationary
/// assumption). Used for A/B comparison of the wind adjustment.
pub fn run_pipeline_baseline(
    x: &AudioBuffer,
    wavelet: &Wavelet,
    depth: usize,
    fit_cfg: &FitConfig,
    det_cfg: &DetectorConfig,
) -> Result<Vec<DetectionSegment>> {
    Ok(run_pipeline_full(x, wavelet, depth, fit_cfg, det_cfg, false)?.segments)
}

/// Pipeline with access to the intermediate adjusted series.
///
/// `adjusted = false` replaces the per-window interpolated noise estimates
/// with one global median-calibrated level per target node.
pub fn run_pipeline_full(
    x: &AudioBuffer,
    wavelet: &Wavelet,
    depth: usize,
    fit_cfg: &FitConfig,
    det_cfg: &DetectorConfig,
    adjusted: bool,
) -> Result<PipelineOutput> {
    fit_cfg.validate()?;
    det_cfg.validate()?;
    if det_cfg.target_nodes.is_empty() {
        return Err(Error::Config("at least one target node is required".into()));
    }
    for t in &det_cfg.target_nodes {
        if t.level != depth {
            return Err(Error::Config(format!(
                "target node {t} is not at the decomposition depth {depth}"
            )));
        }
    }

    let sr = x.sample_rate();
    let n_w = (det_cfg.window * sr as f64 / (1u64 << depth) as f64).round() as usize;
    if n_w < MIN_WINDOW_COEFFS {
        return Err(Error::WindowTooShort { got: n_w, min: MIN_WINDOW_COEFFS });
    }
    let win_samples = n_w << depth;

    // inputs too short for a single transform or half a window detect nothing
    let min_transform = wavelet.len() << depth;
    if x.len() < min_transform || 2 * x.len() < win_samples {
        return Ok(PipelineOutput { segments: Vec::new(), series: Vec::new() });
    }

    // target nodes are always excluded from the fit
    let mut eff_fit = fit_cfg.clone();
    for t in &det_cfg.target_nodes {
        if !eff_fit.exclude_nodes.contains(t) {
            eff_fit.exclude_nodes.push(*t);
        }
    }

    let frames = windowed_node_energies_chunked(x, wavelet, depth, det_cfg.window)?;
    if frames.is_empty() {
        return Ok(PipelineOutput { segments: Vec::new(), series: Vec::new() });
    }

    let targets = &det_cfg.target_nodes;
    let estimates: Vec<Vec<NoiseEstimate>> = if adjusted {
        let mut per_target: Vec<Vec<NoiseEstimate>> =
            vec![Vec::with_capacity(frames.len()); targets.len()];
        for frame in &frames {
            let fit = fit_frame(frame, &eff_fit)?;
            let offset = noise_log_offset(eff_fit.method, eff_fit.tau, frame.n_coeffs);
            for (ti, t) in targets.iter().enumerate() {
                let mut est = interpolate_noise(&fit, *t, sr, &eff_fit);
                est.log_power -= offset;
                per_target[ti].push(est);
            }
        }
        per_target
    } else {
        global_median_estimates(&frames, targets, n_w)?
    };

    let mut series = Vec::with_capacity(targets.len());
    for (ti, t) in targets.iter().enumerate() {
        series.push(adjust_target_series_with(
            &frames,
            &estimates[ti],
            *t,
            SubtractionMode::LogSubtraction,
            true,
        )?);
    }

    let segments = if series.len() == 1 {
        detect_segments(&series[0], det_cfg)?
    } else {
        detect_multi(&series, det_cfg)?
    };
    Ok(PipelineOutput { segments, series })
}

/// One constant noise level per target from the median window energy,
/// calibrated by the median of the windowed chi-square statistic.
fn global_median_estimates(
    frames: &[SubbandEnergyFrame],
    targets: &[NodeId],
    n_w: usize,
) -> Result<Vec<Vec<NoiseEstimate>>> {
    let mut out = Vec::with_capacity(targets.len());
    for t in targets {
        let mut raws: Vec<f64> = frames
            .iter()
            .filter(|f| f.n_coeffs == n_w)
            .map(|f| f.log_energy[t.index - 1].exp())
            .collect();
        if raws.is_empty() {
            raws = frames.iter().map(|f| f.log_energy[t.index - 1].exp()).collect();
        }
        raws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = raws[raws.len() / 2];
        let chi_med = chi2_quantile(0.5, n_w as u32)? / n_w as f64;
        let level = (median / chi_med).max(f64::MIN_POSITIVE).ln();
        out.push(
            frames
                .iter()
                .map(|f| NoiseEstimate {
                    node: *t,
                    log_power: level,
                    window_start: f.window_start,
                    method: crate::noisefit::FitMethod::Ols,
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Multi-target detection: the statistic pools all target nodes per window
/// (sum of windowed sums, chi-square with pooled df); segments are labelled
/// with the target contributing the highest mean adjusted energy.
fn detect_multi(series: &[AdjustedSeries], cfg: &DetectorConfig) -> Result<Vec<DetectionSegment>> {
    let len = series[0].len();
    for s in series {
        if s.len() != len {
            return Err(Error::MisalignedWindows { index: s.len().min(len) });
        }
    }
    let pooled = AdjustedSeries {
        node: series[0].node,
        mode: series[0].mode,
        floored: series[0].floored,
        sample_rate: series[0].sample_rate,
        window_starts: series[0].window_starts.clone(),
        window_ends: series[0].window_ends.clone(),
        raw_energy: vec![0.0; len],
        noise_power: vec![0.0; len],
        values: (0..len)
            .map(|i| {
                series.iter().map(|s| s.values[i] * s.n_coeffs[i] as f64).sum::<f64>()
                    / series.iter().map(|s| s.n_coeffs[i] as f64).sum::<f64>()
            })
            .collect(),
        n_coeffs: (0..len)
            .map(|i| series.iter().map(|s| s.n_coeffs[i]).sum())
            .collect(),
    };
    let mut segments = detect_segments(&pooled, cfg)?;
    for seg in &mut segments {
        // relabel with the strongest contributing target
        let (mut best, mut best_mean) = (series[0].node, f64::NEG_INFINITY);
        for s in series {
            let vals: Vec<f64> = s
                .window_starts
                .iter()
                .zip(&s.values)
                .filter(|(t, _)| **t >= seg.start - 1e-9 && **t < seg.end)
                .map(|(_, v)| *v)
                .collect();
            if !vals.is_empty() {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                if mean > best_mean {
                    best_mean = mean;
                    best = s.node;
                }
            }
        }
        seg.node = best;
    }
    Ok(segments)
}
