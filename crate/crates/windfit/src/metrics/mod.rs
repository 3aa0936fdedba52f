//! Evaluation measures and statistical utilities: SNR, SI-SDR, event-level
//! detection scoring, and chi-squared distribution functions.

mod chi2;

pub use chi2::{
    chi2_cdf, chi2_quantile, digamma, ln_gamma, log_mean_chi2_offset, reg_lower_gamma, trigamma,
    LOG_CHI2_1_MEAN, LOG_CHI2_1_VAR,
};

use crate::audio::AudioBuffer;
use crate::detect::DetectionSegment;
use crate::error::{Error, Result};

/// dB values are clamped to this magnitude to keep reports finite.
pub const DB_CAP: f64 = 120.0;

fn capped_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        return -DB_CAP;
    }
    (10.0 * ratio.log10()).clamp(-DB_CAP, DB_CAP)
}

/// Signal-to-noise ratio in dB: 10 log10( Σx² / Σ(x - x̂)² ).
pub fn snr_db(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "length mismatch: reference {} vs estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.sample_rate() != estimate.sample_rate() {
        return Err(Error::invalid("sample rate mismatch"));
    }
    let sig: f64 = reference.energy();
    let err: f64 = reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(capped_db(sig / err.max(1e-12)))
}

/// Scale-invariant SDR in dB: the estimate is projected onto the reference
/// (s = ⟨x̂,x⟩/⟨x,x⟩) and the ratio ‖s·x‖²/‖s·x − x̂‖² is reported.
pub fn si_sdr_db(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "length mismatch: reference {} vs estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    let xx = reference.energy();
    if xx <= 0.0 {
        return Err(Error::invalid("si_sdr requires a nonzero reference"));
    }
    let xy: f64 = reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(x, y)| x * y)
        .sum();
    let s = xy / xx;
    let target = s * s * xx;
    let dist: f64 = reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(x, y)| {
            let d = s * x - y;
            d * d
        })
        .sum();
    Ok(capped_db(target / dist.max(1e-12)))
}

/// Detection scoring result. A found segment counts as a true positive when
/// its overlap with a truth segment is at least half the shorter of the two;
/// matching is greedy one-to-one in start-time order.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub false_positives_per_hour: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Set when `found` was empty and precision = 1 is reported by convention.
    pub empty_found: bool,
}

pub fn score_detections(
    found: &[DetectionSegment],
    truth: &[(f64, f64)],
    total_duration: f64,
) -> Result<DetectionScore> {
    if total_duration <= 0.0 {
        return Err(Error::invalid("total_duration must be positive"));
    }
    let mut truth_used = vec![false; truth.len()];
    let mut tp = 0usize;
    for seg in found {
        let mut hit = None;
        for (i, &(ts, te)) in truth.iter().enumerate() {
            if truth_used[i] {
                continue;
            }
            let overlap = seg.end.min(te) - seg.start.max(ts);
            let shorter = (seg.end - seg.start).min(te - ts);
            if overlap >= 0.5 * shorter && overlap > 0.0 {
                hit = Some(i);
                break;
            }
        }
        if let Some(i) = hit {
            truth_used[i] = true;
            tp += 1;
        }
    }
    let fp = found.len() - tp;
    let fnn = truth.len() - tp;
    let empty_found = found.is_empty();
    let precision = if empty_found { 1.0 } else { tp as f64 / found.len() as f64 };
    let recall = if truth.is_empty() { 1.0 } else { tp as f64 / truth.len() as f64 };
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(DetectionScore {
        precision,
        recall,
        f_score,
        false_positives_per_hour: fp as f64 / (total_duration / 3600.0),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fnn,
        empty_found,
    })
}

/// Per-file denoising evaluation row. `group` is a free-form label (source
/// type, SNR, method, ...) used for grouped aggregates in plot-ready tables.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EvalRow {
    pub file: String,
    pub group: String,
    pub snr_noisy_db: f64,
    pub snr_denoised_db: f64,
    pub snr_improvement_db: f64,
    pub si_sdr_noisy_db: f64,
    pub si_sdr_denoised_db: f64,
    pub si_sdr_improvement_db: f64,
}

impl EvalRow {
    pub fn compute(
        file: impl Into<String>,
        reference: &AudioBuffer,
        noisy: &AudioBuffer,
        denoised: &AudioBuffer,
    ) -> Result<Self> {
        let snr_noisy_db = snr_db(reference, noisy)?;
        let snr_denoised_db = snr_db(reference, denoised)?;
        let si_sdr_noisy_db = si_sdr_db(reference, noisy)?;
        let si_sdr_denoised_db = si_sdr_db(reference, denoised)?;
        Ok(EvalRow {
            file: file.into(),
            group: String::new(),
            snr_noisy_db,
            snr_denoised_db,
            snr_improvement_db: snr_denoised_db - snr_noisy_db,
            si_sdr_noisy_db,
            si_sdr_denoised_db,
            si_sdr_improvement_db: si_sdr_denoised_db - si_sdr_noisy_db,
        })
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = group.into();
        self
    }
}

/// Aggregate over a set of evaluation rows: mean and standard error.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EvalAggregate {
    pub group: String,
    pub n: usize,
    pub snr_improvement_mean_db: f64,
    pub snr_improvement_se_db: f64,
    pub si_sdr_improvement_mean_db: f64,
    pub si_sdr_improvement_se_db: f64,
}

/// Evaluation report: per-file rows, the overall aggregate, and one aggregate
/// per group label when labels are present.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregate: EvalAggregate,
    pub groups: Vec<EvalAggregate>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

fn aggregate_of<'a, I: Iterator<Item = &'a EvalRow> + Clone>(group: &str, rows: I) -> EvalAggregate {
    let snr: Vec<f64> = rows.clone().map(|r| r.snr_improvement_db).collect();
    let sisdr: Vec<f64> = rows.map(|r| r.si_sdr_improvement_db).collect();
    let (sm, sse) = mean_se(&snr);
    let (im, ise) = mean_se(&sisdr);
    EvalAggregate {
        group: group.to_string(),
        n: snr.len(),
        snr_improvement_mean_db: sm,
        snr_improvement_se_db: sse,
        si_sdr_improvement_mean_db: im,
        si_sdr_improvement_se_db: ise,
    }
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let aggregate = aggregate_of("", rows.iter());
        // group labels in first-appearance order
        let mut labels: Vec<&str> = Vec::new();
        for r in &rows {
            if !r.group.is_empty() && !labels.contains(&r.group.as_str()) {
                labels.push(&r.group);
            }
        }
        let groups = labels
            .iter()
            .map(|g| aggregate_of(g, rows.iter().filter(|r| r.group == *g)))
            .collect();
        EvalReport { aggregate, groups, rows }
    }
}
