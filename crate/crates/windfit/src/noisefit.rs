//! Short-term log-log spectrum models fitted to per-window subband energies.
//!
//! The noise level in a target node is interpolated from a polynomial
//! regression of log node energy on log centre frequency over the other
//! nodes, fitted either by least squares or by quantile regression. Quantile
//! fits track a low quantile of the energy distribution and so stay on the
//! noise floor when a fraction of nodes carry foreground signal.
//!
//! Fits are computed in a centred-and-scaled log-frequency basis to keep the
//! normal equations well conditioned at higher degrees; reported coefficients
//! are in the raw basis [1, log f, (log f)^2, ...] (natural log).

use crate::error::{Error, Result};
use crate::metrics::{chi2_quantile, log_mean_chi2_offset};
use crate::wpt::{NodeId, SubbandEnergyFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Ols,
    Qr,
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitMethod::Ols => write!(f, "ols"),
            FitMethod::Qr => write!(f, "qr"),
        }
    }
}

impl std::str::FromStr for FitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(FitMethod::Ols),
            "qr" | "quantile" => Ok(FitMethod::Qr),
            other => Err(Error::invalid(format!("unknown fit method '{other}' (ols|qr)"))),
        }
    }
}

/// IRLS parameters for the quantile fit.
const QR_MAX_ITER: usize = 200;
const QR_TOL: f64 = 1e-8;
const QR_HUBER_EPS: f64 = 1e-6;

/// SSE floor guarding the AICc log-likelihood for perfect fits.
const SSE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    /// Polynomial degree of the log-log model.
    pub degree: usize,
    /// Node centre frequencies (Hz) included in the fit.
    pub fit_band: (f64, f64),
    pub method: FitMethod,
    /// Quantile for QR fits.
    pub tau: f64,
    /// Additive constant applied to interpolated log-energies.
    pub bias_adjust: f64,
    /// Target node(s) excluded from the regression sum.
    pub exclude_nodes: Vec<NodeId>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            degree: 3,
            fit_band: (150.0, 6000.0),
            method: FitMethod::Ols,
            tau: 0.2,
            bias_adjust: 0.0,
            exclude_nodes: Vec::new(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::Config("fit degree must be >= 1".into()));
        }
        if !(0.0 < self.tau && self.tau < 0.5) {
            return Err(Error::Config(format!("tau {} not in (0, 0.5)", self.tau)));
        }
        if !(self.fit_band.0 >= 0.0 && self.fit_band.1 > self.fit_band.0) {
            return Err(Error::Config("fit band must satisfy 0 <= low < high".into()));
        }
        Ok(())
    }
}

/// A fitted spectrum model for one window.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectrumFit {
    /// Coefficients over powers of log f (natural log), length degree+1.
    pub beta: Vec<f64>,
    pub method: FitMethod,
    pub degree: usize,
    pub n_points: usize,
    pub sse: f64,
    pub aicc: f64,
    pub window_start: f64,
    /// Set when sse hit the floor used in the AICc likelihood.
    pub perfect_fit: bool,
    /// IRLS convergence flag; always true for OLS.
    pub converged: bool,
    pub iterations: usize,
}

impl SpectrumFit {
    /// Evaluate the fitted polynomial at frequency `f` (Hz).
    pub fn value_at(&self, f: f64) -> f64 {
        let t = f.ln();
        let mut acc = 0.0;
        for &b in self.beta.iter().rev() {
            acc = acc * t + b;
        }
        acc
    }
}

/// Interpolated noise level at one node.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NoiseEstimate {
    pub node: NodeId,
    /// log of mean squared coefficient attributed to noise.
    pub log_power: f64,
    pub window_start: f64,
    pub method: FitMethod,
}

/// Regression row [1, log f, (log f)^2, ..., (log f)^degree], natural log.
pub fn design_row(f: f64, degree: usize) -> Result<Vec<f64>> {
    if f.is_nan() || f <= 0.0 {
        return Err(Error::invalid(format!("design_row requires f > 0, got {f}")));
    }
    let t = f.ln();
    let mut row = Vec::with_capacity(degree + 1);
    let mut p = 1.0;
    for _ in 0..=degree {
        row.push(p);
        p *= t;
    }
    Ok(row)
}

/// Points entering the fit: (log f, y) pairs for in-band, non-excluded nodes.
fn included_points(frame: &SubbandEnergyFrame, cfg: &FitConfig) -> Vec<(f64, f64)> {
    frame
        .centre_frequencies
        .iter()
        .zip(&frame.log_energy)
        .enumerate()
        .filter(|(i, (cf, _))| {
            **cf > 0.0
                && **cf >= cfg.fit_band.0
                && **cf <= cfg.fit_band.1
                && !cfg
                    .exclude_nodes
                    .iter()
                    .any(|n| n.level == frame.level && n.index == i + 1)
        })
        .map(|(_, (cf, y))| (cf.ln(), *y))
        .collect()
}

/// Solve the small SPD system A x = b by Gaussian elimination with partial
/// pivoting. A is (d+1)x(d+1) with d <= 14 in practice.
#[allow(clippy::needless_range_loop)]
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() < 1e-300 {
            return Err(Error::RankDeficient { n_points: n, degree: n.saturating_sub(1) });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Weighted least squares in an arbitrary basis: rows basis(t_i), weights w_i.
#[allow(clippy::needless_range_loop)]
fn weighted_ls(basis: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let p = basis[0].len();
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for ((row, &yi), &wi) in basis.iter().zip(y).zip(w) {
        for a in 0..p {
            let ra = wi * row[a];
            atb[a] += ra * yi;
            for b in a..p {
                ata[a][b] += ra * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            ata[a][b] = ata[b][a];
        }
    }
    solve_linear(ata, atb)
}

/// Internal centred/scaled basis for conditioning.
struct ScaledBasis {
    rows: Vec<Vec<f64>>,
    mean: f64,
    scale: f64,
}

fn scaled_basis(ts: &[f64], degree: usize) -> ScaledBasis {
    let n = ts.len() as f64;
    let mean = ts.iter().sum::<f64>() / n;
    let var = ts.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let rows = ts
        .iter()
        .map(|&t| {
            let u = (t - mean) / scale;
            let mut row = Vec::with_capacity(degree + 1);
            let mut p = 1.0;
            for _ in 0..=degree {
                row.push(p);
                p *= u;
            }
            row
        })
        .collect();
    ScaledBasis { rows, mean, scale }
}

/// Convert coefficients over ((t - mean)/scale)^m to coefficients over t^m.
fn to_raw_basis(beta_scaled: &[f64], mean: f64, scale: f64) -> Vec<f64> {
    let d = beta_scaled.len() - 1;
    let mut raw = vec![0.0; d + 1];
    // binomial expansion of b_m ((t - mean)/scale)^m
    for (m, &bm) in beta_scaled.iter().enumerate() {
        let mut binom = 1.0f64; // C(m, k)
        for (k, r) in raw.iter_mut().enumerate().take(m + 1) {
            *r += bm * binom * (-mean).powi((m - k) as i32) / scale.powi(m as i32);
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
    }
    raw
}

fn check_points(pts: &[(f64, f64)], degree: usize) -> Result<()> {
    if pts.len() <= degree + 1 {
        return Err(Error::RankDeficient { n_points: pts.len(), degree });
    }
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < degree + 1 {
        return Err(Error::RankDeficient { n_points: distinct.len(), degree });
    }
    Ok(())
}

fn aicc_value(n_points: usize, degree: usize, sse: f64) -> (f64, bool) {
    let n = n_points as f64;
    let k = (degree + 2) as f64; // coefficients + variance
    let perfect = sse < SSE_FLOOR;
    if n <= k + 1.0 {
        // the correction term degenerates; such fits are never preferable
        return (f64::INFINITY, perfect);
    }
    let sse_f = sse.max(SSE_FLOOR);
    // Gaussian log-likelihood at the MLE variance sse/n
    let log_l = -0.5 * n * ((2.0 * std::f64::consts::PI * sse_f / n).ln() + 1.0);
    (-2.0 * log_l + 2.0 * k * n / (n - k - 1.0), perfect)
}

#[allow(clippy::too_many_arguments)]
fn build_fit(
    pts: &[(f64, f64)],
    cfg: &FitConfig,
    method: FitMethod,
    window_start: f64,
    beta_scaled: Vec<f64>,
    sb: &ScaledBasis,
    converged: bool,
    iterations: usize,
) -> SpectrumFit {
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let sse: f64 = sb
        .rows
        .iter()
        .zip(&y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta_scaled).map(|(r, b)| r * b).sum();
            (yi - fit) * (yi - fit)
        })
        .sum();
    let (aicc, perfect_fit) = aicc_value(pts.len(), cfg.degree, sse);
    SpectrumFit {
        beta: to_raw_basis(&beta_scaled, sb.mean, sb.scale),
        method,
        degree: cfg.degree,
        n_points: pts.len(),
        sse,
        aicc,
        window_start,
        perfect_fit,
        converged,
        iterations,
    }
}

/// Exact least-squares polynomial fit of log node energy on log centre
/// frequency over the included nodes.
pub fn fit_ols(frame: &SubbandEnergyFrame, cfg: &FitConfig) -> Result<SpectrumFit> {
    let pts = included_points(frame, cfg);
    check_points(&pts, cfg.degree)?;
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let sb = scaled_basis(&ts, cfg.degree);
    let w = vec![1.0; pts.len()];
    let beta_scaled = weighted_ls(&sb.rows, &y, &w)?;
    Ok(build_fit(&pts, cfg, FitMethod::Ols, frame.window_start, beta_scaled, &sb, true, 0))
}

/// Quantile regression fit: minimizer of the check loss at cfg.tau, solved by
/// iteratively reweighted least squares with Huberized weights. Convergence
/// failure is reported through the `converged` flag, with the last iterate.
pub fn fit_quantile(frame: &SubbandEnergyFrame, cfg: &FitConfig) -> Result<SpectrumFit> {
    if !(0.0 < cfg.tau && cfg.tau < 1.0) {
        return Err(Error::invalid(format!("tau {} not in (0,1)", cfg.tau)));
    }
    let pts = included_points(frame, cfg);
    check_points(&pts, cfg.degree)?;
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let sb = scaled_basis(&ts, cfg.degree);

    // start from the OLS solution
    let mut beta = weighted_ls(&sb.rows, &y, &vec![1.0; pts.len()])?;
    let mut converged = false;
    let mut iterations = 0;
    let mut w = vec![0.0; pts.len()];
    for it in 1..=QR_MAX_ITER {
        iterations = it;
        for (i, row) in sb.rows.iter().enumerate() {
            let fit: f64 = row.iter().zip(&beta).map(|(r, b)| r * b).sum();
            let r = y[i] - fit;
            let loss_w = if r >= 0.0 { cfg.tau } else { 1.0 - cfg.tau };
            w[i] = loss_w / r.abs().max(QR_HUBER_EPS);
        }
        let next = weighted_ls(&sb.rows, &y, &w)?;
        let delta = next
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = next;
        if delta < QR_TOL {
            converged = true;
            break;
        }
    }
    Ok(build_fit(&pts, cfg, FitMethod::Qr, frame.window_start, beta, &sb, converged, iterations))
}

/// Fit a frame with the method selected in the config.
pub fn fit_frame(frame: &SubbandEnergyFrame, cfg: &FitConfig) -> Result<SpectrumFit> {
    match cfg.method {
        FitMethod::Ols => fit_ols(frame, cfg),
        FitMethod::Qr => fit_quantile(frame, cfg),
    }
}

/// Interpolate the fitted model at a node's centre frequency:
/// log_power = design_row(f) . beta + bias_adjust.
pub fn interpolate_noise(
    fit: &SpectrumFit,
    node: NodeId,
    sample_rate: u32,
    cfg: &FitConfig,
) -> NoiseEstimate {
    let f = crate::wpt::node_centre_frequency(node, sample_rate);
    NoiseEstimate {
        node,
        log_power: fit.value_at(f) + cfg.bias_adjust,
        window_start: fit.window_start,
        method: fit.method,
    }
}

/// Small-sample corrected Akaike criterion of a fit:
/// -2 log L + 2kn/(n-k-1) with k = degree + 2 and the Gaussian likelihood at
/// the MLE variance sse/n.
pub fn aicc(fit: &SpectrumFit) -> Result<f64> {
    let k = fit.degree + 2;
    if fit.n_points <= k + 1 {
        return Err(Error::invalid(format!(
            "aicc undefined: n = {} <= k + 1 = {}",
            fit.n_points,
            k + 1
        )));
    }
    Ok(aicc_value(fit.n_points, fit.degree, fit.sse).0)
}

/// The additive offset between a fitted log-mean-energy level and the log of
/// the underlying noise power, used when converting fits to linear power.
///
/// Window energies are means of `df` squared coefficients, so their logs sit
/// below the log of the true power: by E[log(chi2_df/df)] for a mean-tracking
/// OLS fit, and by log of the tau-quantile of chi2_df/df for a QR fit.
pub fn noise_log_offset(method: FitMethod, tau: f64, df: usize) -> f64 {
    match method {
        FitMethod::Ols => log_mean_chi2_offset(df),
        FitMethod::Qr => {
            let q = chi2_quantile(tau, df as u32).expect("tau validated upstream");
            (q / df as f64).ln()
        }
    }
}

/// Degree minimizing the mean AICc of OLS fits across frames.
pub fn select_degree(
    frames: &[SubbandEnergyFrame],
    degrees: std::ops::RangeInclusive<usize>,
    cfg: &FitConfig,
) -> Result<usize> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("select_degree needs at least one frame".into()));
    }
    if degrees.is_empty() {
        return Err(Error::EmptyInput("empty degree range".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for d in degrees {
        let dcfg = FitConfig { degree: d, ..cfg.clone() };
        let mut total = 0.0;
        for frame in frames {
            total += fit_ols(frame, &dcfg)?.aicc;
        }
        let mean = total / frames.len() as f64;
        if best.is_none_or(|(b, _)| mean < b) {
            best = Some((mean, d));
        }
    }
    Ok(best.expect("nonempty range").1)
}

/// A one-sided power spectrum for comparison plots.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

/// Periodogram ordinates |X_k|^2 / n convolved with a flat kernel of
/// `smooth_bins` bins (Daniell smoothing, edges truncated).
pub fn smoothed_periodogram(x: &crate::audio::AudioBuffer, smooth_bins: usize) -> Result<Spectrum> {
    if smooth_bins.is_multiple_of(2) {
        return Err(Error::invalid("smooth_bins must be odd"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::EmptyInput("periodogram needs at least 2 samples".into()));
    }
    let mut planner = realfft::RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf = x.samples().to_vec();
    let mut spec = fft.make_output_vec();
    fft.process(&mut buf, &mut spec).expect("fft sizes match");
    let raw: Vec<f64> = spec.iter().map(|c| c.norm_sqr() / n as f64).collect();

    let half = smooth_bins / 2;
    let m = raw.len();
    let mut power = Vec::with_capacity(m);
    for i in 0..m {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(m);
        power.push(raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
    }
    let df = x.sample_rate() as f64 / n as f64;
    Ok(Spectrum {
        frequencies: (0..m).map(|k| k as f64 * df).collect(),
        power,
    })
}
