//! Property tests of the core invariants.

use proptest::prelude::*;

use windfit::adjust::{log_spectral_subtract, power_spectral_subtract};
use windfit::audio::AudioBuffer;
use windfit::cli::config::{EffectiveConfig, KvFile};
use windfit::denoise::soft_threshold;
use windfit::metrics::{chi2_cdf, chi2_quantile, si_sdr_db};
use windfit::noisefit::design_row;
use windfit::synth::{mix_at_snr, mix_gain, tone, MixSpec, NoiseSpec};
use windfit::wpt::{wpt_forward, wpt_inverse, Wavelet, WaveletKind};

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().max(1e-300);
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wpt_round_trip_any_length(
        len in 2048usize..6000,
        depth in 1usize..=5,
        seed in any::<u64>(),
        sym in any::<bool>(),
    ) {
        let kind = if sym { WaveletKind::Sym8 } else { WaveletKind::Dmey };
        let wavelet = Wavelet::new(kind);
        prop_assume!(len >= wavelet.len() << depth);
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let buf = AudioBuffer::new(x, 16000).unwrap();
        let tree = wpt_forward(&buf, &wavelet, depth).unwrap();
        let back = wpt_inverse(&tree).unwrap();
        prop_assert_eq!(back.len(), buf.len());
        prop_assert!(rel_l2(back.samples(), buf.samples()) < 1e-8);
        // energy conservation holds exactly for block-aligned lengths
        if len % (1 << depth) == 0 {
            for level in 1..=depth {
                let e = tree.level_energy(level).unwrap();
                prop_assert!(((e - buf.energy()) / buf.energy()).abs() < 1e-6);
            }
        }
    }
}

proptest! {
    #[test]
    fn soft_threshold_is_a_shrinkage(c in -1e3f64..1e3, sigma in 0.0f64..100.0, lambda in 0.0f64..10.0) {
        let out = soft_threshold(c, sigma, lambda);
        prop_assert!(out.abs() <= c.abs() + 1e-12);
        prop_assert!(out == 0.0 || out.signum() == c.signum());
        // identity at lambda = 0
        prop_assert_eq!(soft_threshold(c, sigma, 0.0), c);
    }

    #[test]
    fn subtraction_floors_and_monotonicity(
        e1 in 0.0f64..1e6,
        delta in 0.0f64..1e6,
        noise_log in -20.0f64..20.0,
    ) {
        let e2 = e1 + delta;
        let l1 = log_spectral_subtract(e1, noise_log);
        let l2 = log_spectral_subtract(e2, noise_log);
        prop_assert!(l1 >= 1.0);
        prop_assert!(l2 >= l1);
        let noise = noise_log.exp();
        let p1 = power_spectral_subtract(e1, noise);
        let p2 = power_spectral_subtract(e2, noise);
        prop_assert!(p1 >= 0.0);
        prop_assert!(p2 >= p1);
    }

    #[test]
    fn matched_thresholds_agree(e in 0.0f64..1e4, c in 1e-3f64..1e3, lambda in 1e-3f64..100.0) {
        // log mode at 1 + lambda/c flags exactly when power mode flags at lambda
        let log_hit = log_spectral_subtract(e, c.ln()) > 1.0 + lambda / c;
        let pow_hit = power_spectral_subtract(e, c) > lambda;
        prop_assert_eq!(log_hit, pow_hit);
    }

    #[test]
    fn chi2_quantile_cdf_inverse(p in 1e-6f64..=0.999999, df in 1u32..=64) {
        let x = chi2_quantile(p, df).unwrap();
        prop_assert!((chi2_cdf(x, df) - p).abs() < 1e-8);
    }

    #[test]
    fn design_row_matches_horner(f in 1e-2f64..1e5, degree in 1usize..=6) {
        let row = design_row(f, degree).unwrap();
        prop_assert_eq!(row.len(), degree + 1);
        let t = f.ln();
        let mut p = 1.0;
        for (k, &v) in row.iter().enumerate() {
            prop_assert!((v - p).abs() <= 1e-12 * p.abs().max(1.0), "power {}", k);
            p *= t;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn si_sdr_scale_invariant(scale in prop::sample::select(vec![-100.0, -1.0, -1e-3, 1e-3, 0.5, 7.3, 250.0]), seed in any::<u64>()) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..512).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let xb = AudioBuffer::new(x, 16000).unwrap();
        let yb = AudioBuffer::new(y.clone(), 16000).unwrap();
        let ys = AudioBuffer::new(y.iter().map(|v| scale * v).collect(), 16000).unwrap();
        let a = si_sdr_db(&xb, &yb).unwrap();
        let b = si_sdr_db(&xb, &ys).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn mix_round_trip(snr in -24.0f64..24.0, seed in any::<u64>()) {
        let noise = windfit::synth::gen_onef_noise(&NoiseSpec {
            alpha: 1.0,
            base_power: 1.0,
            gusts: vec![],
            seed,
            duration: 0.5,
            sample_rate: 16000,
        }).unwrap();
        let sig = tone(1000.0, 0.5, 0.5, 16000);
        let ms = MixSpec { snr_db: snr, signal: &sig, noise: &noise, offset: 0 };
        let g = mix_gain(&ms).unwrap();
        let mix = mix_at_snr(&ms).unwrap();
        prop_assert_eq!(mix.len(), noise.len());
        let measured = 10.0 * (g * g * sig.energy() / noise.energy()).log10();
        prop_assert!((measured - snr).abs() < 1e-6);
    }

    #[test]
    fn config_round_trips_through_file_form(
        pairs in prop::collection::vec(("[a-z][a-z0-9-]{0,12}", "[A-Za-z0-9.:,_-]{1,16}"), 1..8)
    ) {
        let mut eff = EffectiveConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (k, v) in &pairs {
            if seen.insert(k.clone()) {
                eff.push(k, v);
            }
        }
        let kv = KvFile::parse(&eff.canonical()).unwrap();
        for (k, v) in &eff.0 {
            prop_assert_eq!(kv.get(k), Some(v.as_str()));
        }
    }
}
