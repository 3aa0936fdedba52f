//! C ABI for the windfit library.
//!
//! Conventions:
//! - every fallible function returns a [`WfStatus`]; results go to out
//!   pointers which are written only on `WF_STATUS_OK`;
//! - buffers are borrowed from the caller and never retained;
//! - detection results are returned through an opaque [`WfSegmentList`]
//!   handle that must be released with [`wf_segment_list_free`];
//! - on failure a thread-local message is available from
//!   [`wf_last_error_message`] until the next call on the same thread;
//! - all entry points catch panics and map them to `WF_STATUS_PROCESSING_ERROR`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use windfit::audio::AudioBuffer;
use windfit::denoise::{denoise_file, DenoiseConfig, DenoiseMode};
use windfit::detect::{run_pipeline_full, DetectionSegment, DetectorConfig};
use windfit::noisefit::{FitConfig, FitMethod};
use windfit::wpt::{NodeId, Wavelet, WaveletKind};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ProcessingError = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfWavelet {
    Sym8 = 0,
    Dmey = 1,
}

impl From<WfWavelet> for WaveletKind {
    fn from(w: WfWavelet) -> Self {
        match w {
            WfWavelet::Sym8 => WaveletKind::Sym8,
            WfWavelet::Dmey => WaveletKind::Dmey,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfFitMethod {
    Ols = 0,
    Qr = 1,
}

impl From<WfFitMethod> for FitMethod {
    fn from(m: WfFitMethod) -> Self {
        match m {
            WfFitMethod::Ols => FitMethod::Ols,
            WfFitMethod::Qr => FitMethod::Qr,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfDenoiseMode {
    ConstantMad = 0,
    AdaptiveOls = 1,
    AdaptiveQr = 2,
}

impl From<WfDenoiseMode> for DenoiseMode {
    fn from(m: WfDenoiseMode) -> Self {
        match m {
            WfDenoiseMode::ConstantMad => DenoiseMode::ConstantMad,
            WfDenoiseMode::AdaptiveOls => DenoiseMode::AdaptiveOls,
            WfDenoiseMode::AdaptiveQr => DenoiseMode::AdaptiveQr,
        }
    }
}

/// Detection pipeline settings. Obtain defaults from
/// [`wf_detect_config_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WfDetectConfig {
    pub wavelet: WfWavelet,
    /// Decomposition depth J; leaf bands are Nyquist / 2^J wide.
    pub depth: u32,
    /// Analysis window in seconds, shared by detection and fitting.
    pub window_s: f64,
    pub fit_degree: u32,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub fit_method: WfFitMethod,
    pub tau: f64,
    pub bias_adjust: f64,
    pub alpha: f64,
    pub min_duration_s: f64,
    pub max_gap_s: f64,
    pub threshold_scale: f64,
    /// Target node (level, frequency-ordered 1-based index).
    pub target_level: u32,
    pub target_index: u32,
    /// Nonzero runs the unadjusted stationary baseline instead.
    pub no_adjust: u8,
}

/// One detected event.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WfSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub peak_adjusted_energy: f64,
    pub mean_adjusted_energy: f64,
    pub node_level: u32,
    pub node_index: u32,
}

/// Opaque list of detection segments.
pub struct WfSegmentList {
    segments: Vec<DetectionSegment>,
}

/// Denoiser settings. Obtain defaults from [`wf_denoise_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WfDenoiseConfig {
    pub wavelet: WfWavelet,
    pub depth: u32,
    pub mode: WfDenoiseMode,
    /// Threshold multiplier; 3 for the constant baseline, 1 adaptive.
    pub lambda: f64,
    pub window_s: f64,
    pub fit_degree: u32,
    pub tau: f64,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the next
/// windfit call on the same thread.
#[no_mangle]
pub extern "C" fn wf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// CDF of the chi-squared distribution with df degrees of freedom.
/// Returns NaN on invalid df.
#[no_mangle]
pub extern "C" fn wf_chi2_cdf(x: f64, df: u32) -> f64 {
    if df == 0 {
        return f64::NAN;
    }
    windfit::metrics::chi2_cdf(x, df)
}

/// Inverse CDF of chi-squared; p must lie in (0,1).
///
/// # Safety
/// `out` must be null or a valid pointer to a writable double.
#[no_mangle]
pub unsafe extern "C" fn wf_chi2_quantile(p: f64, df: u32, out: *mut f64) -> WfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return WfStatus::NullPointer;
    }
    if df == 0 {
        set_error("df must be >= 1");
        return WfStatus::InvalidArgument;
    }
    match windfit::metrics::chi2_quantile(p, df) {
        Ok(v) => {
            unsafe { *out = v };
            WfStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            WfStatus::InvalidArgument
        }
    }
}

unsafe fn buffers_from_raw(
    reference: *const f64,
    estimate: *const f64,
    len: usize,
    sample_rate: u32,
) -> Result<(AudioBuffer, AudioBuffer), WfStatus> {
    if reference.is_null() || estimate.is_null() {
        set_error("sample pointer is null");
        return Err(WfStatus::NullPointer);
    }
    let r = std::slice::from_raw_parts(reference, len).to_vec();
    let e = std::slice::from_raw_parts(estimate, len).to_vec();
    match (AudioBuffer::new(r, sample_rate), AudioBuffer::new(e, sample_rate)) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => {
            set_error("sample rate must be positive");
            Err(WfStatus::InvalidArgument)
        }
    }
}

/// SNR of `estimate` against `reference` in dB (capped at +-120).
///
/// # Safety
/// `reference` and `estimate` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_snr_db(
    reference: *const f64,
    estimate: *const f64,
    len: usize,
    out: *mut f64,
) -> WfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return WfStatus::NullPointer;
    }
    let (r, e) = match buffers_from_raw(reference, estimate, len, 48000) {
        Ok(v) => v,
        Err(s) => return s,
    };
    match windfit::metrics::snr_db(&r, &e) {
        Ok(v) => {
            *out = v;
            WfStatus::Ok
        }
        Err(err) => {
            set_error(&err.to_string());
            WfStatus::InvalidArgument
        }
    }
}

/// Scale-invariant SDR of `estimate` against `reference` in dB.
///
/// # Safety
/// `reference` and `estimate` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_si_sdr_db(
    reference: *const f64,
    estimate: *const f64,
    len: usize,
    out: *mut f64,
) -> WfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return WfStatus::NullPointer;
    }
    let (r, e) = match buffers_from_raw(reference, estimate, len, 48000) {
        Ok(v) => v,
        Err(s) => return s,
    };
    match windfit::metrics::si_sdr_db(&r, &e) {
        Ok(v) => {
            *out = v;
            WfStatus::Ok
        }
        Err(err) => {
            set_error(&err.to_string());
            WfStatus::InvalidArgument
        }
    }
}

/// Defaults: sym8, depth 5, 0.1 s windows, cubic OLS fit over 150-6000 Hz,
/// alpha 0.01, target node (5,9) (2000-2250 Hz at a 16 kHz rate).
///
/// # Safety
/// `out` must be null or a valid pointer to a writable config struct.
#[no_mangle]
pub unsafe extern "C" fn wf_detect_config_default(out: *mut WfDetectConfig) -> WfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return WfStatus::NullPointer;
    }
    unsafe {
        *out = WfDetectConfig {
            wavelet: WfWavelet::Sym8,
            depth: 5,
            window_s: 0.1,
            fit_degree: 3,
            band_low_hz: 150.0,
            band_high_hz: 6000.0,
            fit_method: WfFitMethod::Ols,
            tau: 0.2,
            bias_adjust: 0.0,
            alpha: 0.01,
            min_duration_s: 0.2,
            max_gap_s: 0.1,
            threshold_scale: 1.0,
            target_level: 5,
            target_index: 9,
            no_adjust: 0,
        };
    }
    WfStatus::Ok
}

/// Defaults for one denoise mode (lambda 3 constant, 1 adaptive).
///
/// # Safety
/// `out` must be null or a valid pointer to a writable config struct.
#[no_mangle]
pub unsafe extern "C" fn wf_denoise_config_default(
    mode: WfDenoiseMode,
    out: *mut WfDenoiseConfig,
) -> WfStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return WfStatus::NullPointer;
    }
    let lambda = match mode {
        WfDenoiseMode::ConstantMad => 3.0,
        _ => 1.0,
    };
    unsafe {
        *out = WfDenoiseConfig {
            wavelet: WfWavelet::Sym8,
            depth: 5,
            mode,
            lambda,
            window_s: 0.1,
            fit_degree: 3,
            tau: 0.2,
        };
    }
    WfStatus::Ok
}

fn status_from(e: &windfit::Error) -> WfStatus {
    set_error(&e.to_string());
    match e {
        windfit::Error::Config(_) | windfit::Error::InvalidArgument(_) => WfStatus::InvalidArgument,
        _ => WfStatus::ProcessingError,
    }
}

/// Run the wind-robust detection pipeline over a mono buffer.
///
/// On success `*out` owns the segment list; release it with
/// [`wf_segment_list_free`].
///
/// # Safety
/// `samples` must point to `len` readable doubles; `cfg` and `out` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wf_detect(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    cfg: *const WfDetectConfig,
    out: *mut *mut WfSegmentList,
) -> WfStatus {
    if samples.is_null() || cfg.is_null() || out.is_null() {
        set_error("null pointer argument");
        return WfStatus::NullPointer;
    }
    let cfg = *cfg;
    let data = std::slice::from_raw_parts(samples, len).to_vec();
    let result = catch_unwind(AssertUnwindSafe(move || -> Result<Vec<DetectionSegment>, windfit::Error> {
        let buffer = AudioBuffer::new(data, sample_rate)?;
        let target = NodeId::new(cfg.target_level as usize, cfg.target_index as usize)?;
        let fit = FitConfig {
            degree: cfg.fit_degree as usize,
            fit_band: (cfg.band_low_hz, cfg.band_high_hz),
            method: cfg.fit_method.into(),
            tau: cfg.tau,
            bias_adjust: cfg.bias_adjust,
            exclude_nodes: Vec::new(),
        };
        let det = DetectorConfig {
            alpha: cfg.alpha,
            min_duration: cfg.min_duration_s,
            max_gap: cfg.max_gap_s,
            window: cfg.window_s,
            target_nodes: vec![target],
            threshold_scale: cfg.threshold_scale,
        };
        let wavelet = Wavelet::new(cfg.wavelet.into());
        Ok(run_pipeline_full(&buffer, &wavelet, cfg.depth as usize, &fit, &det, cfg.no_adjust == 0)?
            .segments)
    }));
    match result {
        Ok(Ok(segments)) => {
            *out = Box::into_raw(Box::new(WfSegmentList { segments }));
            WfStatus::Ok
        }
        Ok(Err(e)) => status_from(&e),
        Err(_) => {
            set_error("panic inside wf_detect");
            WfStatus::ProcessingError
        }
    }
}

/// Number of segments in a list. Null lists have length 0.
///
/// # Safety
/// `list` must be null or a pointer obtained from [`wf_detect`].
#[no_mangle]
pub unsafe extern "C" fn wf_segment_list_len(list: *const WfSegmentList) -> usize {
    if list.is_null() {
        return 0;
    }
    unsafe { (*list).segments.len() }
}

/// Copy segment `index` into `*out`.
///
/// # Safety
/// `list` must be null or a pointer obtained from [`wf_detect`]; `out` must
/// be null or a valid pointer to a writable segment struct.
#[no_mangle]
pub unsafe extern "C" fn wf_segment_list_get(
    list: *const WfSegmentList,
    index: usize,
    out: *mut WfSegment,
) -> WfStatus {
    if list.is_null() || out.is_null() {
        set_error("null pointer argument");
        return WfStatus::NullPointer;
    }
    let segments = unsafe { &(*list).segments };
    let Some(seg) = segments.get(index) else {
        set_error("segment index out of range");
        return WfStatus::InvalidArgument;
    };
    unsafe {
        *out = WfSegment {
            start_s: seg.start,
            end_s: seg.end,
            peak_adjusted_energy: seg.peak_adjusted_energy,
            mean_adjusted_energy: seg.mean_adjusted_energy,
            node_level: seg.node.level as u32,
            node_index: seg.node.index as u32,
        };
    }
    WfStatus::Ok
}

/// Release a segment list. Null is a no-op.
///
/// # Safety
/// `list` must be null or a pointer obtained from [`wf_detect`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wf_segment_list_free(list: *mut WfSegmentList) {
    if !list.is_null() {
        drop(unsafe { Box::from_raw(list) });
    }
}

/// Denoise a mono buffer by adaptive wavelet shrinkage. Writes `len` samples
/// to `out_samples` and the anti-clipping gain (1.0 when none) to `out_gain`
/// if non-null.
///
/// # Safety
/// `samples` must point to `len` readable doubles and `out_samples` to `len`
/// writable doubles; `cfg` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_denoise(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    cfg: *const WfDenoiseConfig,
    out_samples: *mut f64,
    out_gain: *mut f64,
) -> WfStatus {
    if samples.is_null() || cfg.is_null() || out_samples.is_null() {
        set_error("null pointer argument");
        return WfStatus::NullPointer;
    }
    let cfg = *cfg;
    let data = std::slice::from_raw_parts(samples, len).to_vec();
    let result = catch_unwind(AssertUnwindSafe(
        move || -> Result<windfit::denoise::DenoiseOutput, windfit::Error> {
            let buffer = AudioBuffer::new(data, sample_rate)?;
            let mut dcfg = DenoiseConfig::new(cfg.mode.into());
            dcfg.lambda = cfg.lambda;
            dcfg.window = cfg.window_s;
            dcfg.fit.degree = cfg.fit_degree as usize;
            dcfg.fit.tau = cfg.tau;
            let wavelet = Wavelet::new(cfg.wavelet.into());
            denoise_file(&buffer, &wavelet, cfg.depth as usize, &dcfg)
        },
    ));
    match result {
        Ok(Ok(out)) => {
            let produced = out.audio.samples();
            debug_assert_eq!(produced.len(), len);
            std::ptr::copy_nonoverlapping(produced.as_ptr(), out_samples, produced.len().min(len));
            if !out_gain.is_null() {
                *out_gain = out.gain;
            }
            WfStatus::Ok
        }
        Ok(Err(e)) => status_from(&e),
        Err(_) => {
            set_error("panic inside wf_denoise");
            WfStatus::ProcessingError
        }
    }
}
