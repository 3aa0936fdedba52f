//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with the measured quantities (visible under `--nocapture`).
//!
//! Run with: cargo test --test acceptance -- --nocapture

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use windfit::adjust::{log_spectral_subtract, power_spectral_subtract};
use windfit::audio::AudioBuffer;
use windfit::denoise::{denoise_file, DenoiseConfig, DenoiseMode};
use windfit::detect::{run_pipeline_full, DetectorConfig};
use windfit::metrics::{
    chi2_cdf, chi2_quantile, score_detections, si_sdr_db, snr_db, LOG_CHI2_1_MEAN, LOG_CHI2_1_VAR,
};
use windfit::noisefit::{
    fit_ols, fit_quantile, select_degree, FitConfig, FitMethod,
};
use windfit::synth::{
    add_at, gen_onef_noise, harmonic_call, mix_at_snr, tone, GustSpec, MixSpec, NoiseSpec,
};
use windfit::wpt::{
    windowed_node_energies, wpt_forward, wpt_inverse, NodeId, SubbandEnergyFrame, Wavelet,
    WaveletKind,
};

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Frame builder for synthetic per-node energies at 16 kHz, level 5.
fn frame_from(log_energy: Vec<f64>) -> SubbandEnergyFrame {
    let nodes = log_energy.len();
    SubbandEnergyFrame {
        window_start: 0.0,
        level: 5,
        n_coeffs: 1,
        sample_rate: 16000,
        centre_frequencies: (0..nodes)
            .map(|i| 8000.0 * (i as f64 + 0.5) / nodes as f64)
            .collect(),
        log_energy,
    }
}

#[test]
fn criterion_01_wpt_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let lengths = [1usize << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16];
    let mut worst_pr = 0.0f64;
    let mut worst_energy = 0.0f64;
    for trial in 0..50 {
        let kind = if trial % 2 == 0 { WaveletKind::Sym8 } else { WaveletKind::Dmey };
        let wavelet = Wavelet::new(kind);
        let depth = 3 + trial % 6; // 3..=8
        let min_len = wavelet.len() << depth;
        let len = loop {
            let l = lengths[(rng.random::<u32>() as usize) % lengths.len()];
            if l >= min_len {
                break l;
            }
        };
        let x: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let buf = AudioBuffer::new(x, 16000).unwrap();
        let tree = wpt_forward(&buf, &wavelet, depth).unwrap();
        for level in 1..=depth {
            let e = tree.level_energy(level).unwrap();
            worst_energy = worst_energy.max(((e - buf.energy()) / buf.energy()).abs());
        }
        let back = wpt_inverse(&tree).unwrap();
        worst_pr = worst_pr.max(rel_l2(back.samples(), buf.samples()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(worst_pr < 1e-8, "worst reconstruction error {worst_pr:.3e}");
    assert!(worst_energy < 1e-6, "worst energy deviation {worst_energy:.3e}");
    assert!(elapsed < 30.0, "round-trip sweep took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 01 PASS - WPT round trip: worst rel L2 {worst_pr:.2e}, worst energy dev {worst_energy:.2e}, {elapsed:.1} s"
    );
}

#[test]
fn criterion_02_log_chi2_moments() {
    let mut rng = ChaCha12Rng::seed_from_u64(102);
    let n = 100_000;
    let logs: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (z * z).ln()
        })
        .collect();
    let mean = logs.iter().sum::<f64>() / n as f64;
    let var = logs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    assert!((mean - LOG_CHI2_1_MEAN).abs() < 0.02, "mean {mean} vs {LOG_CHI2_1_MEAN}");
    assert!((var - LOG_CHI2_1_VAR).abs() < 0.1, "var {var} vs {LOG_CHI2_1_VAR}");
    println!(
        "ACCEPTANCE 02 PASS - log-chi2 moments at n=1e5: mean {mean:.4} (target {LOG_CHI2_1_MEAN:.4}), var {var:.3} (target {LOG_CHI2_1_VAR:.3})"
    );
}

#[test]
fn criterion_03_spectral_slope_recovery() {
    let start = Instant::now();
    let wavelet = Wavelet::dmey();
    let cfg = FitConfig { degree: 1, ..FitConfig::default() };
    let mut report = String::new();
    for (i, &alpha) in [0.5, 1.0, 2.0].iter().enumerate() {
        let spec = NoiseSpec {
            alpha,
            base_power: 1.0,
            gusts: vec![],
            seed: 300 + i as u64,
            duration: 20.0,
            sample_rate: 16000,
        };
        let x = gen_onef_noise(&spec).unwrap();
        let tree = wpt_forward(&x, &wavelet, 5).unwrap();
        let frames = windowed_node_energies(&tree, 0.1).unwrap();
        assert!(frames.len() >= 200, "need 200 windows, got {}", frames.len());
        let mean_slope = frames
            .iter()
            .take(200)
            .map(|f| fit_ols(f, &cfg).unwrap().beta[1])
            .sum::<f64>()
            / 200.0;
        assert!(
            (mean_slope + alpha).abs() < 0.1,
            "alpha {alpha}: recovered slope {mean_slope}"
        );
        report.push_str(&format!("alpha {alpha} -> {:.3}; ", -mean_slope));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "slope recovery took {elapsed:.1} s");
    println!("ACCEPTANCE 03 PASS - spectral slope recovery: {report}{elapsed:.1} s");
}

#[test]
fn criterion_04_subtraction_tail_probabilities() {
    let n = 100_000;
    let lambda = 3.84f64;
    let mut report = String::new();
    for (i, &c) in [1.0f64, 3.0, 5.0].iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(400 + i as u64);
        let mut pow_hits = 0usize;
        let mut log_hits = 0usize;
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let e = c * z * z;
            if power_spectral_subtract(e, c) > lambda {
                pow_hits += 1;
            }
            if log_spectral_subtract(e, c.ln()) > lambda {
                log_hits += 1;
            }
        }
        let pow_rate = pow_hits as f64 / n as f64;
        let log_rate = log_hits as f64 / n as f64;
        let expect = 1.0 - chi2_cdf((lambda + c) / c, 1);
        assert!(
            (pow_rate - expect).abs() < 0.01,
            "c={c}: power exceedance {pow_rate} vs closed form {expect}"
        );
        assert!(
            (log_rate - 0.05).abs() < 0.01,
            "c={c}: log exceedance {log_rate} vs 0.05"
        );
        report.push_str(&format!(
            "c={c}: power {pow_rate:.3}/{expect:.3}, log {log_rate:.3}; "
        ));
    }
    println!("ACCEPTANCE 04 PASS - subtraction tails at lambda=3.84: {report}");
}

#[test]
fn criterion_05_contaminated_quantile_line() {
    let tau = 0.2;
    let (c, alpha) = (3.0f64, 1.5f64);
    let mut report = String::new();
    for (i, &eps) in [0.1f64, 0.3].iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(500 + i as u64);
        let mut cfg = FitConfig {
            degree: 1,
            fit_band: (0.0, f64::INFINITY),
            method: FitMethod::Qr,
            tau,
            ..FitConfig::default()
        };
        cfg.bias_adjust = 0.0;
        let windows = 500;
        let probes = [500.0f64, 1500.0, 3000.0, 6000.0];
        let mut sums = [0.0f64; 4];
        for _ in 0..windows {
            let frame = frame_from(
                (0..32)
                    .map(|k| {
                        let f = 8000.0 * (k as f64 + 0.5) / 32.0;
                        let z: f64 = rng.sample(StandardNormal);
                        let mut v = (c * f.powf(-alpha) * z * z).ln();
                        if rng.random::<f64>() < eps {
                            v += 20.0; // loud contamination
                        }
                        v
                    })
                    .collect(),
            );
            let fit = fit_quantile(&frame, &cfg).unwrap();
            for (s, &f) in sums.iter_mut().zip(&probes) {
                *s += fit.value_at(f);
            }
        }
        let q_clean = chi2_quantile(tau / (1.0 - eps), 1).unwrap().ln();
        let mut worst = 0.0f64;
        for (s, &f) in sums.iter().zip(&probes) {
            let mean = s / windows as f64;
            let expect = c.ln() - alpha * f.ln() + q_clean;
            worst = worst.max((mean - expect).abs());
        }
        assert!(worst < 0.1, "eps={eps}: worst line deviation {worst}");
        report.push_str(&format!("eps={eps}: worst dev {worst:.3}; "));
    }
    println!(
        "ACCEPTANCE 05 PASS - contaminated QR tracks the tau/(1-eps) clean quantile line: {report}"
    );
}

#[test]
fn criterion_06_aicc_degree_selection() {
    let mut rng = ChaCha12Rng::seed_from_u64(600);
    let cfg = FitConfig { fit_band: (0.0, f64::INFINITY), ..FitConfig::default() };
    let cubic = |t: f64| 6.0 - 2.0 * t + 0.1 * (t - 7.0) * (t - 7.0) * (t - 6.0);
    let linear = |t: f64| 6.0 - 2.0 * t;
    let mut run = |truth: &dyn Fn(f64) -> f64, want: usize| -> usize {
        let mut hits = 0;
        for _ in 0..100 {
            let frames: Vec<SubbandEnergyFrame> = (0..10)
                .map(|_| {
                    frame_from(
                        (0..32)
                            .map(|k| {
                                let f = 8000.0 * (k as f64 + 0.5) / 32.0;
                                truth(f.ln()) + 0.1 * rng.sample::<f64, _>(StandardNormal)
                            })
                            .collect(),
                    )
                })
                .collect();
            if select_degree(&frames, 1..=6, &cfg).unwrap() == want {
                hits += 1;
            }
        }
        hits
    };
    let cubic_hits = run(&cubic, 3);
    let linear_hits = run(&linear, 1);
    assert!(cubic_hits >= 90, "cubic truth selected degree 3 in {cubic_hits}/100");
    assert!(linear_hits >= 90, "linear truth selected degree 1 in {linear_hits}/100");
    println!(
        "ACCEPTANCE 06 PASS - AICc degree selection: cubic->3 in {cubic_hits}/100, linear->1 in {linear_hits}/100"
    );
}

#[test]
fn criterion_07_detector_calibration_and_wind_robustness() {
    let start = Instant::now();
    let sr = 16000u32;
    let target = NodeId::new(5, 9).unwrap();
    let det = DetectorConfig {
        alpha: 0.01,
        min_duration: 0.0,
        max_gap: 0.0,
        window: 0.1,
        target_nodes: vec![target],
        threshold_scale: 1.0,
    };
    let fit = FitConfig::default();
    let wavelet = Wavelet::sym8();

    // ten minutes of gust-only audio: gusts up to +15 dB covering ~30%
    let gusts: Vec<GustSpec> = (0..60)
        .map(|i| GustSpec {
            start: 4.0 + 10.0 * i as f64,
            duration: 3.0,
            gain_db: 9.0 + 6.0 * ((i % 3) as f64 / 2.0),
        })
        .collect();
    let noise = gen_onef_noise(&NoiseSpec {
        alpha: 2.0,
        base_power: 1e-4,
        gusts: gusts.clone(),
        seed: 700,
        duration: 600.0,
        sample_rate: sr,
    })
    .unwrap();

    let adjusted = run_pipeline_full(&noise, &wavelet, 5, &fit, &det, true).unwrap();
    let baseline = run_pipeline_full(&noise, &wavelet, 5, &fit, &det, false).unwrap();
    let fp_windows = |segs: &[windfit::detect::DetectionSegment]| -> f64 {
        segs.iter().map(|s| (s.end - s.start) / det.window).sum::<f64>().round()
    };
    let fp_adj = fp_windows(&adjusted.segments);
    let fp_base = fp_windows(&baseline.segments);
    assert!(
        fp_base >= 5.0 * fp_adj.max(1.0),
        "unadjusted FP windows {fp_base} not >= 5x adjusted {fp_adj}"
    );

    // mixtures: tone bursts at +10 dB in-band SNR between the gusts
    let mut mix = noise.clone();
    // noise power in the target band during quiet stretches
    let probe = wpt_forward(
        &AudioBuffer::new(mix.samples()[0..(2 * sr as usize)].to_vec(), sr).unwrap(),
        &wavelet,
        5,
    )
    .unwrap();
    let node_series = probe.node(target).unwrap();
    let band_power = node_series.iter().map(|c| c * c).sum::<f64>() / node_series.len() as f64;
    // +10 dB in-band: tone power in the node = 10x band noise power;
    // a sine of amplitude A in one node has coefficient power ~ A^2/2 * 2^J
    let amp = (10.0 * band_power * 2.0 / (1 << 5) as f64).sqrt() * (1 << 5) as f64 / 4.0_f64.sqrt();
    let f = windfit::wpt::node_centre_frequency(target, sr);
    let mut truth = Vec::new();
    for i in 0..40 {
        let at = 1.0 + 15.0 * i as f64;
        let burst = tone(f, amp, 1.0, sr);
        add_at(&mut mix, &burst, (at * sr as f64) as usize).unwrap();
        truth.push((at, at + 1.0));
    }
    let det_mix = DetectorConfig {
        min_duration: 0.3,
        max_gap: 0.2,
        ..det.clone()
    };
    let found = run_pipeline_full(&mix, &wavelet, 5, &fit, &det_mix, true).unwrap();
    let score = score_detections(&found.segments, &truth, 600.0).unwrap();
    assert!(score.recall >= 0.9, "adjusted recall {}", score.recall);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "criterion took {elapsed:.1} s on 2x10 min of audio");
    println!(
        "ACCEPTANCE 07 PASS - wind robustness: FP windows unadjusted {fp_base} vs adjusted {fp_adj} (>=5x), burst recall {:.3}, {elapsed:.1} s",
        score.recall
    );
}

#[test]
fn criterion_08_denoising_ordering() {
    let sr = 16000u32;
    let wavelet = Wavelet::sym8();
    let mut snr_impr = [Vec::new(), Vec::new(), Vec::new()]; // mad, ols, qr
    let mut sisdr_impr = [Vec::new(), Vec::new(), Vec::new()];
    let modes = [DenoiseMode::ConstantMad, DenoiseMode::AdaptiveOls, DenoiseMode::AdaptiveQr];

    let mut trial = 0u64;
    for &snr in &[12.0f64, 0.0, -12.0] {
        for rep in 0..7 {
            trial += 1;
            // gust-dominated noise: strong gusts cover ~40% of the clip
            let noise = gen_onef_noise(&NoiseSpec {
                alpha: 2.0,
                base_power: 2e-5,
                gusts: vec![
                    GustSpec { start: 1.0, duration: 2.5, gain_db: 15.0 },
                    GustSpec { start: 6.0, duration: 2.0, gain_db: 12.0 },
                ],
                seed: 800 + trial,
                duration: 10.0,
                sample_rate: sr,
            })
            .unwrap();
            // rich foreground: harmonic call plus an overlapping chirp
            let mut clean = AudioBuffer::new(vec![0.0; noise.len()], sr).unwrap();
            let call = harmonic_call(900.0 + 120.0 * rep as f64, 5, 0.3, 4.0, sr);
            add_at(&mut clean, &call, (2.5 * sr as f64) as usize).unwrap();
            let sweep = windfit::synth::chirp(1500.0, 3500.0, 0.2, 2.0, sr);
            add_at(&mut clean, &sweep, (5.5 * sr as f64) as usize).unwrap();

            let gain =
                windfit::synth::mix_gain(&MixSpec { snr_db: snr, signal: &clean, noise: &noise, offset: 0 })
                    .unwrap();
            let reference =
                AudioBuffer::new(clean.samples().iter().map(|v| gain * v).collect(), sr).unwrap();
            let mix = mix_at_snr(&MixSpec { snr_db: snr, signal: &clean, noise: &noise, offset: 0 })
                .unwrap();

            for (mi, &mode) in modes.iter().enumerate() {
                let out = denoise_file(&mix, &wavelet, 5, &DenoiseConfig::new(mode)).unwrap();
                let before = snr_db(&reference, &mix).unwrap();
                let after = snr_db(&reference, &out.audio).unwrap();
                snr_impr[mi].push(after - before);
                let before = si_sdr_db(&reference, &mix).unwrap();
                let after = si_sdr_db(&reference, &out.audio).unwrap();
                sisdr_impr[mi].push(after - before);
            }
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mad_snr, ols_snr, qr_snr) =
        (mean(&snr_impr[0]), mean(&snr_impr[1]), mean(&snr_impr[2]));
    let (mad_si, ols_si, qr_si) =
        (mean(&sisdr_impr[0]), mean(&sisdr_impr[1]), mean(&sisdr_impr[2]));
    assert!(snr_impr[0].len() >= 20, "need >= 20 mixtures");
    assert!(qr_snr >= ols_snr, "SNR ordering: qr {qr_snr} < ols {ols_snr}");
    assert!(
        ols_snr > mad_snr + 3.0,
        "SNR gap: ols {ols_snr} vs constant {mad_snr} + 3 dB"
    );
    assert!(qr_si >= ols_si, "SI-SDR ordering: qr {qr_si} < ols {ols_si}");
    assert!(
        ols_si > mad_si + 3.0,
        "SI-SDR gap: ols {ols_si} vs constant {mad_si} + 3 dB"
    );
    println!(
        "ACCEPTANCE 08 PASS - denoising ordering over {} mixtures: SNR impr (dB) constant {mad_snr:.2} < ols {ols_snr:.2} <= qr {qr_snr:.2}; SI-SDR impr constant {mad_si:.2} < ols {ols_si:.2} <= qr {qr_si:.2}",
        snr_impr[0].len()
    );
}

#[test]
fn criterion_09_chi2_quantile_table() {
    let q95 = chi2_quantile(0.95, 1).unwrap();
    assert!((q95 - 3.8415).abs() < 1e-3, "q(0.95,1) = {q95}");
    let mut worst = 0.0f64;
    for df in 1..=64u32 {
        for &p in &[1e-6, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.95, 0.99, 0.9999, 1.0 - 1e-6] {
            let x = chi2_quantile(p, df).unwrap();
            worst = worst.max((chi2_cdf(x, df) - p).abs());
        }
    }
    assert!(worst < 1e-8, "worst inverse consistency {worst:.2e}");
    println!(
        "ACCEPTANCE 09 PASS - chi2 quantiles: q(0.95,1) = {q95:.5}, worst CDF/quantile inverse residual {worst:.1e} over df 1..=64"
    );
}

#[test]
fn criterion_10_subcommand_determinism() {
    use std::process::Command;
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("fx.spec"),
        "alpha = 2\nbase-power = 0.0001\nduration = 10\nsample-rate = 16000\nseed = 11\n\
         gusts = 2:1.5:14\nsignals = tone:2125:0.08:5:1\n",
    )
    .unwrap();

    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_windfit"))
            .args(args)
            .current_dir(d)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "windfit {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let mut checked = 0;
    let mut run_twice = |args: &[&str], artifacts: &[&str]| {
        run(args);
        let first: Vec<Vec<u8>> =
            artifacts.iter().map(|p| std::fs::read(d.join(p)).unwrap()).collect();
        run(args);
        for (p, snap) in artifacts.iter().zip(first) {
            assert_eq!(snap, std::fs::read(d.join(p)).unwrap(), "artifact differs: {p}");
            checked += 1;
        }
    };

    run_twice(
        &["synth", "--spec", "fx.spec", "--out-dir", "."],
        &["fx.wav", "fx.clean.wav", "fx.manifest.json"],
    );
    run_twice(
        &["detect", "fx.wav", "--target-node", "5:9", "--out-dir", "det"],
        &["det/fx.detections.csv", "det/fx.detections.json", "det/fx.adjusted.csv"],
    );
    run_twice(
        &["denoise", "fx.wav", "--mode", "adaptive_qr", "--out-dir", "den"],
        &["den/fx.denoised.wav", "den/fx.denoise.json"],
    );
    run_twice(
        &["spectra", "fx.wav", "--periodogram", "--out-dir", "sp"],
        &["sp/fx.energies.csv", "sp/fx.fits.csv", "sp/fx.aicc.csv", "sp/fx.periodogram.csv"],
    );
    run_twice(
        &[
            "eval",
            "--reference",
            "fx.clean.wav",
            "--noisy",
            "fx.wav",
            "--denoised",
            "den/fx.denoised.wav",
            "--out-dir",
            "ev",
        ],
        &["ev/eval.csv", "ev/eval.json"],
    );
    println!(
        "ACCEPTANCE 10 PASS - determinism: {checked} artifacts byte-identical across repeated runs of all five subcommands"
    );
}
