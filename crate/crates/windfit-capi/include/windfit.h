#ifndef WINDFIT_H
#define WINDFIT_H

/* Generated by cbindgen from windfit-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum {
  WF_STATUS_OK = 0,
  WF_STATUS_NULL_POINTER = 1,
  WF_STATUS_INVALID_ARGUMENT = 2,
  WF_STATUS_PROCESSING_ERROR = 3,
} WfStatus;

typedef enum {
  WF_WAVELET_SYM8 = 0,
  WF_WAVELET_DMEY = 1,
} WfWavelet;

typedef enum {
  WF_FIT_METHOD_OLS = 0,
  WF_FIT_METHOD_QR = 1,
} WfFitMethod;

typedef enum {
  WF_DENOISE_MODE_CONSTANT_MAD = 0,
  WF_DENOISE_MODE_ADAPTIVE_OLS = 1,
  WF_DENOISE_MODE_ADAPTIVE_QR = 2,
} WfDenoiseMode;

/**
 * Opaque list of detection segments.
 */
typedef struct WfSegmentList WfSegmentList;

/**
 * Detection pipeline settings. Obtain defaults from
 * [`wf_detect_config_default`] and override fields as needed.
 */
typedef struct {
  WfWavelet wavelet;
  /**
   * Decomposition depth J; leaf bands are Nyquist / 2^J wide.
   */
  uint32_t depth;
  /**
   * Analysis window in seconds, shared by detection and fitting.
   */
  double window_s;
  uint32_t fit_degree;
  double band_low_hz;
  double band_high_hz;
  WfFitMethod fit_method;
  double tau;
  double bias_adjust;
  double alpha;
  double min_duration_s;
  double max_gap_s;
  double threshold_scale;
  /**
   * Target node (level, frequency-ordered 1-based index).
   */
  uint32_t target_level;
  uint32_t target_index;
  /**
   * Nonzero runs the unadjusted stationary baseline instead.
   */
  uint8_t no_adjust;
} WfDetectConfig;

/**
 * Denoiser settings. Obtain defaults from [`wf_denoise_config_default`].
 */
typedef struct {
  WfWavelet wavelet;
  uint32_t depth;
  WfDenoiseMode mode;
  /**
   * Threshold multiplier; 3 for the constant baseline, 1 adaptive.
   */
  double lambda;
  double window_s;
  uint32_t fit_degree;
  double tau;
} WfDenoiseConfig;

/**
 * One detected event.
 */
typedef struct {
  double start_s;
  double end_s;
  double peak_adjusted_energy;
  double mean_adjusted_energy;
  uint32_t node_level;
  uint32_t node_index;
} WfSegment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wf_version(void);

/**
 * Message for the most recent failure on this thread. Valid until the next
 * windfit call on the same thread.
 */
const char *wf_last_error_message(void);

/**
 * CDF of the chi-squared distribution with df degrees of freedom.
 * Returns NaN on invalid df.
 */
double wf_chi2_cdf(double x, uint32_t df);

/**
 * Inverse CDF of chi-squared; p must lie in (0,1).
 *
 * # Safety
 * `out` must be null or a valid pointer to a writable double.
 */
WfStatus wf_chi2_quantile(double p, uint32_t df, double *out);

/**
 * SNR of `estimate` against `reference` in dB (capped at +-120).
 *
 * # Safety
 * `reference` and `estimate` must point to `len` readable doubles.
 */
WfStatus wf_snr_db(const double *reference, const double *estimate, uintptr_t len, double *out);

/**
 * Scale-invariant SDR of `estimate` against `reference` in dB.
 *
 * # Safety
 * `reference` and `estimate` must point to `len` readable doubles.
 */
WfStatus wf_si_sdr_db(const double *reference, const double *estimate, uintptr_t len, double *out);

/**
 * Defaults: sym8, depth 5, 0.1 s windows, cubic OLS fit over 150-6000 Hz,
 * alpha 0.01, target node (5,9) (2000-2250 Hz at a 16 kHz rate).
 *
 * # Safety
 * `out` must be null or a valid pointer to a writable config struct.
 */
WfStatus wf_detect_config_default(WfDetectConfig *out);

/**
 * Defaults for one denoise mode (lambda 3 constant, 1 adaptive).
 *
 * # Safety
 * `out` must be null or a valid pointer to a writable config struct.
 */
WfStatus wf_denoise_config_default(WfDenoiseMode mode, WfDenoiseConfig *out);

/**
 * Run the wind-robust detection pipeline over a mono buffer.
 *
 * On success `*out` owns the segment list; release it with
 * [`wf_segment_list_free`].
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `cfg` and `out` must be
 * valid pointers.
 */
WfStatus wf_detect(const double *samples,
                   uintptr_t len,
                   uint32_t sample_rate,
                   const WfDetectConfig *cfg,
                   WfSegmentList **out);

/**
 * Number of segments in a list. Null lists have length 0.
 *
 * # Safety
 * `list` must be null or a pointer obtained from [`wf_detect`].
 */
uintptr_t wf_segment_list_len(const WfSegmentList *list);

/**
 * Copy segment `index` into `*out`.
 *
 * # Safety
 * `list` must be null or a pointer obtained from [`wf_detect`]; `out` must
 * be null or a valid pointer to a writable segment struct.
 */
WfStatus wf_segment_list_get(const WfSegmentList *list, uintptr_t index, WfSegment *out);

/**
 * Release a segment list. Null is a no-op.
 *
 * # Safety
 * `list` must be null or a pointer obtained from [`wf_detect`], not yet freed.
 */
void wf_segment_list_free(WfSegmentList *list);

/**
 * Denoise a mono buffer by adaptive wavelet shrinkage. Writes `len` samples
 * to `out_samples` and the anti-clipping gain (1.0 when none) to `out_gain`
 * if non-null.
 *
 * # Safety
 * `samples` must point to `len` readable doubles and `out_samples` to `len`
 * writable doubles; `cfg` must be a valid pointer.
 */
WfStatus wf_denoise(const double *samples,
                    uintptr_t len,
                    uint32_t sample_rate,
                    const WfDenoiseConfig *cfg,
                    double *out_samples,
                    double *out_gain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WINDFIT_H */
