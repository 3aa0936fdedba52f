//! Subcommand implementations behind the `windfit` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::adjust::AdjustedSeries;
use crate::audio::{read_wav, write_wav, AudioBuffer, WavFormat};
use crate::cli::config::{
    parse_node_list, resolve, resolve_opt, EffectiveConfig, KvFile,
};
use crate::cli::provenance::{file_digest, InputDigest, Provenance};
use crate::denoise::{denoise_file, DenoiseConfig, DenoiseMode};
use crate::detect::{run_pipeline_full, DetectionSegment, DetectorConfig};
use crate::error::{Error, Result};
use crate::metrics::{score_detections, DetectionScore, EvalReport, EvalRow};
use crate::noisefit::{
    fit_ols, fit_quantile, select_degree, smoothed_periodogram, FitConfig, FitMethod,
};
use crate::synth::{
    add_at, chirp, gen_onef_noise, harmonic_call, mix_gain, tone, GroundTruthManifest, GustSpec,
    MixSpec, NoiseSpec, SignalInterval,
};
use crate::wpt::{windowed_node_energies_chunked, NodeId, Wavelet, WaveletKind};

use super::args::{DetectArgs, DenoiseArgs, EvalArgs, SpectraArgs, SynthArgs};

const DETECT_KEYS: &[&str] = &[
    "wavelet",
    "depth",
    "window",
    "degree",
    "band-low",
    "band-high",
    "method",
    "tau",
    "bias-adjust",
    "alpha",
    "min-duration",
    "max-gap",
    "threshold-scale",
    "target-nodes",
    "no-adjust",
];
const DENOISE_KEYS: &[&str] = &[
    "wavelet",
    "depth",
    "window",
    "degree",
    "band-low",
    "band-high",
    "method",
    "tau",
    "bias-adjust",
    "mode",
    "lambda",
];
const SPECTRA_KEYS: &[&str] = &[
    "wavelet",
    "depth",
    "window",
    "degree",
    "band-low",
    "band-high",
    "method",
    "tau",
    "bias-adjust",
    "max-degree",
    "periodogram",
    "smooth-bins",
];
const SYNTH_KEYS: &[&str] = &[
    "alpha",
    "base-power",
    "duration",
    "sample-rate",
    "seed",
    "gusts",
    "signals",
    "snr-db",
];

fn load_config(path: &Option<PathBuf>) -> Result<KvFile> {
    match path {
        Some(p) => KvFile::read(p),
        None => Ok(KvFile::default()),
    }
}

fn out_path(out_dir: &Path, input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    out_dir.join(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

fn input_digests(paths: &[PathBuf]) -> Result<Vec<InputDigest>> {
    paths
        .iter()
        .map(|p| {
            Ok(InputDigest { path: p.to_string_lossy().to_string(), digest: file_digest(p)? })
        })
        .collect()
}

fn with_pool<F, T>(jobs: usize, f: F) -> Result<T>
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn node_str(n: NodeId) -> String {
    format!("{}:{}", n.level, n.index)
}

fn fmt_f(v: f64) -> String {
    // shortest round-trip representation keeps CSV bit-stable
    format!("{v}")
}

/// Shared analysis parameters resolved from flags, config file, and defaults.
struct AnalysisSettings {
    wavelet: WaveletKind,
    depth: usize,
    window: f64,
    fit: FitConfig,
}

fn resolve_analysis(
    kv: &KvFile,
    common: &super::args::CommonAnalysisArgs,
    default_window: f64,
) -> Result<AnalysisSettings> {
    let settings = AnalysisSettings {
        wavelet: resolve(kv, "wavelet", common.wavelet, WaveletKind::Sym8)?,
        depth: resolve(kv, "depth", common.depth, 5)?,
        window: resolve(kv, "window", common.window, default_window)?,
        fit: FitConfig {
            degree: resolve(kv, "degree", common.degree, 3)?,
            fit_band: (
                resolve(kv, "band-low", common.band_low, 150.0)?,
                resolve(kv, "band-high", common.band_high, 6000.0)?,
            ),
            method: resolve(kv, "method", common.method, FitMethod::Ols)?,
            tau: resolve(kv, "tau", common.tau, 0.2)?,
            bias_adjust: resolve(kv, "bias-adjust", common.bias_adjust, 0.0)?,
            exclude_nodes: Vec::new(),
        },
    };
    settings.fit.validate()?;
    if settings.depth == 0 || settings.depth > crate::wpt::MAX_DEPTH {
        return Err(Error::Config(format!("depth {} out of range 1..=14", settings.depth)));
    }
    Ok(settings)
}

fn push_analysis(eff: &mut EffectiveConfig, s: &AnalysisSettings) {
    eff.push("wavelet", s.wavelet);
    eff.push("depth", s.depth);
    eff.push("window", s.window);
    eff.push("degree", s.fit.degree);
    eff.push("band-low", s.fit.fit_band.0);
    eff.push("band-high", s.fit.fit_band.1);
    eff.push("method", s.fit.method);
    eff.push("tau", s.fit.tau);
    eff.push("bias-adjust", s.fit.bias_adjust);
}

// ---------------------------------------------------------------- detect ---

pub fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let kv = load_config(&args.common.config)?;
    kv.check_schema(DETECT_KEYS)?;
    let s = resolve_analysis(&kv, &args.common, 0.1)?;
    let target_nodes = match (&args.target_node, kv.get("target-nodes")) {
        (flags, _) if !flags.is_empty() => flags.clone(),
        (_, Some(s)) => parse_node_list(s)?,
        (_, None) => Vec::new(),
    };
    if target_nodes.is_empty() {
        return Err(Error::Config(
            "at least one target node is required (--target-node j:k)".into(),
        ));
    }
    let no_adjust = args.no_adjust || kv.get("no-adjust").map(|v| v == "true") == Some(true);
    let det = DetectorConfig {
        alpha: resolve(&kv, "alpha", args.alpha, 0.01)?,
        min_duration: resolve(&kv, "min-duration", args.min_duration, 2.0 * s.window)?,
        max_gap: resolve(&kv, "max-gap", args.max_gap, s.window)?,
        window: s.window,
        target_nodes: target_nodes.clone(),
        threshold_scale: resolve(&kv, "threshold-scale", args.threshold_scale, 1.0)?,
    };
    det.validate()?;

    let mut eff = EffectiveConfig::default();
    eff.push("command", "detect");
    push_analysis(&mut eff, &s);
    eff.push("alpha", det.alpha);
    eff.push("min-duration", det.min_duration);
    eff.push("max-gap", det.max_gap);
    eff.push("threshold-scale", det.threshold_scale);
    eff.push(
        "target-nodes",
        target_nodes.iter().map(|n| node_str(*n)).collect::<Vec<_>>().join(","),
    );
    eff.push("no-adjust", no_adjust);

    ensure_out_dir(&args.common.out_dir)?;
    let prov = Provenance::new(&eff.canonical(), input_digests(&args.inputs)?, None);

    let results: Vec<Result<(PathBuf, usize)>> = with_pool(args.common.jobs, || {
        args.inputs
            .par_iter()
            .map(|input| -> Result<(PathBuf, usize)> {
                let contents = read_wav(input)?;
                if contents.downmixed {
                    eprintln!(
                        "warning: {} has {} channels; averaged to mono",
                        input.display(),
                        contents.source_channels
                    );
                }
                let wavelet = Wavelet::new(s.wavelet);
                let out = run_pipeline_full(
                    &contents.buffer,
                    &wavelet,
                    s.depth,
                    &s.fit,
                    &det,
                    !no_adjust,
                )?;
                write_detect_outputs(&args.common.out_dir, input, &out.segments, &out.series, &prov, &eff)?;
                Ok((input.clone(), out.segments.len()))
            })
            .collect()
    })?;

    for r in results {
        let (input, n) = r?;
        println!("{}: {} segment(s)", input.display(), n);
    }
    Ok(())
}

fn write_detect_outputs(
    out_dir: &Path,
    input: &Path,
    segments: &[DetectionSegment],
    series: &[AdjustedSeries],
    prov: &Provenance,
    eff: &EffectiveConfig,
) -> Result<()> {
    let mut csv = prov.csv_comment_lines();
    csv.push_str("file,start_s,end_s,peak,mean,node\n");
    for seg in segments {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            input.display(),
            fmt_f(seg.start),
            fmt_f(seg.end),
            fmt_f(seg.peak_adjusted_energy),
            fmt_f(seg.mean_adjusted_energy),
            node_str(seg.node)
        );
    }
    write_text(&out_path(out_dir, input, ".detections.csv"), &csv)?;

    // per-window adjusted series for diagnostics
    let mut adj = prov.csv_comment_lines();
    adj.push_str("node,window_start,raw_energy,noise_estimate,adjusted\n");
    for s in series {
        for i in 0..s.len() {
            let _ = writeln!(
                adj,
                "{},{},{},{},{}",
                node_str(s.node),
                fmt_f(s.window_starts[i]),
                fmt_f(s.raw_energy[i]),
                fmt_f(s.noise_power[i]),
                fmt_f(s.values[i])
            );
        }
    }
    write_text(&out_path(out_dir, input, ".adjusted.csv"), &adj)?;

    let json = serde_json::json!({
        "provenance": prov,
        "config": eff.to_json(),
        "file": input.to_string_lossy(),
        "segments": segments,
    });
    write_text(
        &out_path(out_dir, input, ".detections.json"),
        &format!("{:#}\n", json),
    )
}

// --------------------------------------------------------------- denoise ---

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<()> {
    let kv = load_config(&args.common.config)?;
    kv.check_schema(DENOISE_KEYS)?;
    let s = resolve_analysis(&kv, &args.common, 0.1)?;
    let mode = resolve(&kv, "mode", args.mode, DenoiseMode::AdaptiveQr)?;
    let mut cfg = DenoiseConfig::new(mode);
    cfg.window = s.window;
    cfg.fit.degree = s.fit.degree;
    cfg.fit.tau = s.fit.tau;
    cfg.fit.bias_adjust = s.fit.bias_adjust;
    if let Some(lambda) = resolve_opt(&kv, "lambda", args.lambda)? {
        cfg.lambda = lambda;
    }
    cfg.validate()?;

    let mut eff = EffectiveConfig::default();
    eff.push("command", "denoise");
    push_analysis(&mut eff, &s);
    eff.push("mode", mode);
    eff.push("lambda", cfg.lambda);

    ensure_out_dir(&args.common.out_dir)?;
    let prov = Provenance::new(&eff.canonical(), input_digests(&args.inputs)?, None);

    let results: Vec<Result<PathBuf>> = with_pool(args.common.jobs, || {
        args.inputs
            .par_iter()
            .map(|input| -> Result<PathBuf> {
                let contents = read_wav(input)?;
                if contents.downmixed {
                    eprintln!(
                        "warning: {} has {} channels; averaged to mono",
                        input.display(),
                        contents.source_channels
                    );
                }
                let wavelet = Wavelet::new(s.wavelet);
                let out = denoise_file(&contents.buffer, &wavelet, s.depth, &cfg)?;
                let wav_path = out_path(&args.common.out_dir, input, ".denoised.wav");
                write_wav(&wav_path, &out.audio, contents.format)?;
                let sidecar = serde_json::json!({
                    "provenance": prov,
                    "config": eff.to_json(),
                    "file": input.to_string_lossy(),
                    "gain": out.gain,
                    "window_sigmas": out.window_sigmas,
                });
                write_text(
                    &out_path(&args.common.out_dir, input, ".denoise.json"),
                    &format!("{:#}\n", sidecar),
                )?;
                Ok(wav_path)
            })
            .collect()
    })?;

    for r in results {
        println!("wrote {}", r?.display());
    }
    Ok(())
}

// --------------------------------------------------------------- spectra ---

pub fn cmd_spectra(args: &SpectraArgs) -> Result<()> {
    let kv = load_config(&args.common.config)?;
    kv.check_schema(SPECTRA_KEYS)?;
    let s = resolve_analysis(&kv, &args.common, 0.1)?;
    let max_degree: usize = resolve(&kv, "max-degree", args.max_degree, 6)?;
    if max_degree == 0 {
        return Err(Error::Config("max-degree must be >= 1".into()));
    }
    let periodogram =
        args.periodogram || kv.get("periodogram").map(|v| v == "true") == Some(true);
    let smooth_bins: usize = resolve(&kv, "smooth-bins", args.smooth_bins, 7)?;

    let mut eff = EffectiveConfig::default();
    eff.push("command", "spectra");
    push_analysis(&mut eff, &s);
    eff.push("max-degree", max_degree);
    eff.push("periodogram", periodogram);
    eff.push("smooth-bins", smooth_bins);

    ensure_out_dir(&args.common.out_dir)?;
    let prov = Provenance::new(&eff.canonical(), input_digests(&args.inputs)?, None);

    let results: Vec<Result<PathBuf>> = with_pool(args.common.jobs, || {
        args.inputs
            .par_iter()
            .map(|input| -> Result<PathBuf> {
                let contents = read_wav(input)?;
                let wavelet = Wavelet::new(s.wavelet);
                let frames =
                    windowed_node_energies_chunked(&contents.buffer, &wavelet, s.depth, s.window)?;

                let mut energies = prov.csv_comment_lines();
                energies.push_str("window_start,node,centre_hz,log_energy\n");
                for f in &frames {
                    for (i, (&cf, &le)) in
                        f.centre_frequencies.iter().zip(&f.log_energy).enumerate()
                    {
                        let _ = writeln!(
                            energies,
                            "{},{}:{},{},{}",
                            fmt_f(f.window_start),
                            f.level,
                            i + 1,
                            fmt_f(cf),
                            fmt_f(le)
                        );
                    }
                }
                write_text(&out_path(&args.common.out_dir, input, ".energies.csv"), &energies)?;

                let max_beta = max_degree + 1;
                let mut fits = prov.csv_comment_lines();
                let beta_cols: Vec<String> = (0..max_beta).map(|i| format!("beta{i}")).collect();
                let _ = writeln!(fits, "window_start,method,degree,{},sse,aicc", beta_cols.join(","));
                for frame in &frames {
                    for degree in 1..=max_degree {
                        let cfg = FitConfig { degree, ..s.fit.clone() };
                        for method in [FitMethod::Ols, FitMethod::Qr] {
                            let fit = match method {
                                FitMethod::Ols => fit_ols(frame, &cfg)?,
                                FitMethod::Qr => fit_quantile(frame, &cfg)?,
                            };
                            let mut betas: Vec<String> =
                                fit.beta.iter().map(|b| fmt_f(*b)).collect();
                            betas.resize(max_beta, String::new());
                            let _ = writeln!(
                                fits,
                                "{},{},{},{},{},{}",
                                fmt_f(fit.window_start),
                                method,
                                degree,
                                betas.join(","),
                                fmt_f(fit.sse),
                                fmt_f(fit.aicc)
                            );
                        }
                    }
                }
                write_text(&out_path(&args.common.out_dir, input, ".fits.csv"), &fits)?;

                // mean OLS AICc per degree plus the selected degree
                let mut aicc_csv = prov.csv_comment_lines();
                aicc_csv.push_str("degree,mean_aicc\n");
                for degree in 1..=max_degree {
                    let cfg = FitConfig { degree, ..s.fit.clone() };
                    let mean = frames
                        .iter()
                        .map(|f| fit_ols(f, &cfg).map(|fit| fit.aicc))
                        .sum::<Result<f64>>()?
                        / frames.len() as f64;
                    let _ = writeln!(aicc_csv, "{},{}", degree, fmt_f(mean));
                }
                let best = select_degree(&frames, 1..=max_degree, &s.fit)?;
                let _ = writeln!(aicc_csv, "# selected_degree={best}");
                write_text(&out_path(&args.common.out_dir, input, ".aicc.csv"), &aicc_csv)?;

                if periodogram {
                    let sp = smoothed_periodogram(&contents.buffer, smooth_bins)?;
                    let mut pg = prov.csv_comment_lines();
                    pg.push_str("frequency_hz,power\n");
                    for (f, p) in sp.frequencies.iter().zip(&sp.power) {
                        let _ = writeln!(pg, "{},{}", fmt_f(*f), fmt_f(*p));
                    }
                    write_text(&out_path(&args.common.out_dir, input, ".periodogram.csv"), &pg)?;
                }
                Ok(input.clone())
            })
            .collect()
    })?;

    for r in results {
        println!("analysed {}", r?.display());
    }
    Ok(())
}

// ----------------------------------------------------------------- synth ---

fn parse_gusts(s: &str) -> Result<Vec<GustSpec>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!(
                    "gust '{p}' must be start:duration:gain_db"
                )));
            }
            Ok(GustSpec {
                start: crate::cli::config::parse_value("gust start", parts[0])?,
                duration: crate::cli::config::parse_value("gust duration", parts[1])?,
                gain_db: crate::cli::config::parse_value("gust gain_db", parts[2])?,
            })
        })
        .collect()
}

enum SignalSpec {
    Tone { freq: f64, amp: f64, start: f64, duration: f64 },
    Chirp { f0: f64, f1: f64, amp: f64, start: f64, duration: f64 },
    Call { f0: f64, harmonics: usize, amp: f64, start: f64, duration: f64 },
}

impl SignalSpec {
    fn interval(&self) -> (f64, f64, String) {
        match self {
            SignalSpec::Tone { freq, start, duration, .. } => {
                (*start, start + duration, format!("tone_{freq}"))
            }
            SignalSpec::Chirp { f0, f1, start, duration, .. } => {
                (*start, start + duration, format!("chirp_{f0}_{f1}"))
            }
            SignalSpec::Call { f0, start, duration, .. } => {
                (*start, start + duration, format!("call_{f0}"))
            }
        }
    }

    fn render(&self, sample_rate: u32) -> AudioBuffer {
        match self {
            SignalSpec::Tone { freq, amp, duration, .. } => tone(*freq, *amp, *duration, sample_rate),
            SignalSpec::Chirp { f0, f1, amp, duration, .. } => {
                chirp(*f0, *f1, *amp, *duration, sample_rate)
            }
            SignalSpec::Call { f0, harmonics, amp, duration, .. } => {
                harmonic_call(*f0, *harmonics, *amp, *duration, sample_rate)
            }
        }
    }

    fn start(&self) -> f64 {
        match self {
            SignalSpec::Tone { start, .. }
            | SignalSpec::Chirp { start, .. }
            | SignalSpec::Call { start, .. } => *start,
        }
    }
}

fn parse_signals(s: &str) -> Result<Vec<SignalSpec>> {
    use crate::cli::config::parse_value as pv;
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.trim().split(':').collect();
            match parts.first().copied() {
                Some("tone") if parts.len() == 5 => Ok(SignalSpec::Tone {
                    freq: pv("tone freq", parts[1])?,
                    amp: pv("tone amp", parts[2])?,
                    start: pv("tone start", parts[3])?,
                    duration: pv("tone duration", parts[4])?,
                }),
                Some("chirp") if parts.len() == 6 => Ok(SignalSpec::Chirp {
                    f0: pv("chirp f0", parts[1])?,
                    f1: pv("chirp f1", parts[2])?,
                    amp: pv("chirp amp", parts[3])?,
                    start: pv("chirp start", parts[4])?,
                    duration: pv("chirp duration", parts[5])?,
                }),
                Some("call") if parts.len() == 6 => Ok(SignalSpec::Call {
                    f0: pv("call f0", parts[1])?,
                    harmonics: pv("call harmonics", parts[2])?,
                    amp: pv("call amp", parts[3])?,
                    start: pv("call start", parts[4])?,
                    duration: pv("call duration", parts[5])?,
                }),
                _ => Err(Error::Config(format!(
                    "signal '{p}' must be tone:freq:amp:start:dur, chirp:f0:f1:amp:start:dur or call:f0:harmonics:amp:start:dur"
                ))),
            }
        })
        .collect()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let kv = KvFile::read(&args.spec)?;
    kv.check_schema(SYNTH_KEYS)?;
    let spec = NoiseSpec {
        alpha: resolve(&kv, "alpha", args.alpha, 2.0)?,
        base_power: resolve(&kv, "base-power", None, 1e-4)?,
        gusts: match kv.get("gusts") {
            Some(g) => parse_gusts(g)?,
            None => Vec::new(),
        },
        seed: resolve(&kv, "seed", args.seed, 0)?,
        duration: resolve(&kv, "duration", None, 10.0)?,
        sample_rate: resolve(&kv, "sample-rate", None, 16000)?,
    };
    let signals = match kv.get("signals") {
        Some(s) => parse_signals(s)?,
        None => Vec::new(),
    };
    let snr_db: Option<f64> = resolve_opt(&kv, "snr-db", None)?;

    let mut eff = EffectiveConfig::default();
    eff.push("command", "synth");
    eff.push("alpha", spec.alpha);
    eff.push("base-power", spec.base_power);
    eff.push("duration", spec.duration);
    eff.push("sample-rate", spec.sample_rate);
    eff.push("seed", spec.seed);
    if let Some(g) = kv.get("gusts") {
        eff.push("gusts", g);
    }
    if let Some(s) = kv.get("signals") {
        eff.push("signals", s);
    }
    if let Some(v) = snr_db {
        eff.push("snr-db", v);
    }

    ensure_out_dir(&args.out_dir)?;
    let name = args
        .name
        .clone()
        .or_else(|| args.spec.file_stem().map(|s| s.to_string_lossy().to_string()))
        .unwrap_or_else(|| "synth".to_string());

    let noise = gen_onef_noise(&spec)?;
    let mut manifest = GroundTruthManifest {
        sample_rate: spec.sample_rate,
        duration: spec.duration,
        seed: spec.seed,
        alpha: spec.alpha,
        base_power: spec.base_power,
        gusts: spec.gusts.clone(),
        signals: Vec::new(),
        snr_db,
    };

    let mix = if signals.is_empty() {
        noise.clone()
    } else {
        let mut clean =
            AudioBuffer::new(vec![0.0; noise.len()], spec.sample_rate)?;
        for sig in &signals {
            let rendered = sig.render(spec.sample_rate);
            let offset = (sig.start() * spec.sample_rate as f64).round() as usize;
            add_at(&mut clean, &rendered, offset)?;
            let (a, b, label) = sig.interval();
            manifest.signals.push(SignalInterval { start: a, end: b, label });
        }
        let gain = match snr_db {
            Some(snr) => mix_gain(&MixSpec { snr_db: snr, signal: &clean, noise: &noise, offset: 0 })?,
            None => 1.0,
        };
        let scaled =
            AudioBuffer::new(clean.samples().iter().map(|v| gain * v).collect(), spec.sample_rate)?;
        write_wav(&args.out_dir.join(format!("{name}.clean.wav")), &scaled, WavFormat::Float32)?;
        let mut m = noise.clone();
        add_at(&mut m, &scaled, 0)?;
        m
    };

    write_wav(&args.out_dir.join(format!("{name}.wav")), &mix, WavFormat::Float32)?;

    let prov = Provenance::new(
        &eff.canonical(),
        vec![InputDigest {
            path: args.spec.to_string_lossy().to_string(),
            digest: file_digest(&args.spec)?,
        }],
        Some(spec.seed),
    );
    let json = serde_json::json!({
        "provenance": prov,
        "config": eff.to_json(),
        "manifest": manifest,
    });
    write_text(&args.out_dir.join(format!("{name}.manifest.json")), &format!("{:#}\n", json))?;
    println!("wrote {}", args.out_dir.join(format!("{name}.wav")).display());
    Ok(())
}

// ------------------------------------------------------------------ eval ---

/// Detections CSV parser (the format written by `detect`).
pub fn read_detections_csv(path: &Path) -> Result<Vec<DetectionSegment>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("file,") || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Config(format!("bad detections row: '{line}'")));
        }
        let node = crate::cli::config::parse_node(cols[5])?;
        out.push(DetectionSegment {
            start: crate::cli::config::parse_value("start_s", cols[1])?,
            end: crate::cli::config::parse_value("end_s", cols[2])?,
            peak_adjusted_energy: crate::cli::config::parse_value("peak", cols[3])?,
            mean_adjusted_energy: crate::cli::config::parse_value("mean", cols[4])?,
            node,
        });
    }
    Ok(out)
}

fn read_manifest(path: &Path) -> Result<GroundTruthManifest> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("bad manifest {}: {e}", path.display())))?;
    let m = v.get("manifest").cloned().unwrap_or(v);
    serde_json::from_value(m)
        .map_err(|e| Error::Config(format!("bad manifest {}: {e}", path.display())))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    if args.reference.len() != args.noisy.len() || args.noisy.len() != args.denoised.len() {
        return Err(Error::Config(format!(
            "reference/noisy/denoised lists must have equal lengths ({}/{}/{})",
            args.reference.len(),
            args.noisy.len(),
            args.denoised.len()
        )));
    }

    let mut eff = EffectiveConfig::default();
    eff.push("command", "eval");
    eff.push("n_files", args.reference.len());

    ensure_out_dir(&args.out_dir)?;
    let mut all_inputs = args.reference.clone();
    all_inputs.extend(args.noisy.clone());
    all_inputs.extend(args.denoised.clone());
    let prov = Provenance::new(&eff.canonical(), input_digests(&all_inputs)?, None);

    if !args.label.is_empty() && args.label.len() != args.reference.len() {
        return Err(Error::Config(format!(
            "--label count {} does not match the {} file triples",
            args.label.len(),
            args.reference.len()
        )));
    }
    let mut rows = Vec::new();
    for (i, ((r, n), d)) in args.reference.iter().zip(&args.noisy).zip(&args.denoised).enumerate()
    {
        let reference = read_wav(r)?.buffer;
        let noisy = read_wav(n)?.buffer;
        let denoised = read_wav(d)?.buffer;
        let mut row = EvalRow::compute(
            d.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default(),
            &reference,
            &noisy,
            &denoised,
        )?;
        if let Some(label) = args.label.get(i) {
            row = row.with_group(label);
        }
        rows.push(row);
    }
    let report = EvalReport::from_rows(rows);

    let score: Option<DetectionScore> = match (&args.detections, &args.truth) {
        (Some(det_path), Some(truth_path)) => {
            let found = read_detections_csv(det_path)?;
            let manifest = read_manifest(truth_path)?;
            let truth: Vec<(f64, f64)> =
                manifest.signals.iter().map(|s| (s.start, s.end)).collect();
            Some(score_detections(&found, &truth, manifest.duration)?)
        }
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "detection scoring needs both --detections and --truth".into(),
            ))
        }
    };

    let mut csv = prov.csv_comment_lines();
    csv.push_str("file,group,snr_noisy_db,snr_denoised_db,snr_improvement_db,si_sdr_noisy_db,si_sdr_denoised_db,si_sdr_improvement_db\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.file,
            r.group,
            fmt_f(r.snr_noisy_db),
            fmt_f(r.snr_denoised_db),
            fmt_f(r.snr_improvement_db),
            fmt_f(r.si_sdr_noisy_db),
            fmt_f(r.si_sdr_denoised_db),
            fmt_f(r.si_sdr_improvement_db)
        );
    }
    for agg in std::iter::once(&report.aggregate).chain(&report.groups) {
        let _ = writeln!(
            csv,
            "# aggregate group={} n={} snr_improvement_mean_db={} snr_improvement_se_db={} si_sdr_improvement_mean_db={} si_sdr_improvement_se_db={}",
            if agg.group.is_empty() { "(all)" } else { &agg.group },
            agg.n,
            fmt_f(agg.snr_improvement_mean_db),
            fmt_f(agg.snr_improvement_se_db),
            fmt_f(agg.si_sdr_improvement_mean_db),
            fmt_f(agg.si_sdr_improvement_se_db)
        );
    }
    write_text(&args.out_dir.join("eval.csv"), &csv)?;

    let json = serde_json::json!({
        "provenance": prov,
        "config": eff.to_json(),
        "report": report,
        "detection_score": score,
    });
    write_text(&args.out_dir.join("eval.json"), &format!("{:#}\n", json))?;
    println!(
        "eval: n={} mean snr improvement {:.2} dB, mean si-sdr improvement {:.2} dB",
        report.aggregate.n,
        report.aggregate.snr_improvement_mean_db,
        report.aggregate.si_sdr_improvement_mean_db
    );
    Ok(())
}
