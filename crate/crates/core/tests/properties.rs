mod common;

use audiozoom_core::blockthresh::{
    apply_block_threshold, attenuation_factor, block_snr, enumerate_partitions,
    BlockThresholdParams, Region, VarianceMap,
};
use audiozoom_core::conv::fft_convolve;
use audiozoom_core::gjbf::{fdaf_gjbf, select_filter_length, GjbfConfig};
use audiozoom_core::metrics::{mse_db, osinr_db, shadow_gain_decompose};
use audiozoom_core::mpdr::{estimate_covariance, mpdr_weights, BinCovariance};
use audiozoom_core::simulate::{
    steering_vector, synthesize_mixture, ArrayGeometry, EchoTap, MixtureSpec, SourceSpec,
};
use audiozoom_core::stft::{istft_samples, stft_samples};
use audiozoom_core::{AudioBuffer, Complex64, Spectrogram, StftParams, Window};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FS: u32 = 16000;

fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn cnormal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_spectrogram(seed: u64, frame_length: usize, frames: usize) -> Spectrogram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = StftParams::new(frame_length, frame_length / 2, Window::SqrtHann).unwrap();
    let mut s = Spectrogram::zeros(p, FS, frames, frame_length / 2 * (frames + 1));
    for c in s.data_mut() {
        *c = cnormal(&mut rng);
    }
    s
}

fn random_variance(seed: u64, like: &Spectrogram) -> VarianceMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..like.data().len())
        .map(|_| {
            // occasional exact zeros exercise the floor
            if rng.random_bool(0.05) {
                0.0
            } else {
                rng.random_range(0.0..4.0)
            }
        })
        .collect();
    VarianceMap::new(like.bins(), like.frames(), v).unwrap()
}

fn cola_params() -> impl Strategy<Value = StftParams> {
    (
        5u32..10,
        prop::sample::select(vec![2usize, 4]),
        prop::sample::select(vec![Window::Hann, Window::SqrtHann]),
    )
        .prop_map(|(log_n, div, window)| {
            let n = 1usize << log_n;
            StftParams::new(n, n / div, window).unwrap()
        })
}

fn random_psd(rng: &mut ChaCha8Rng) -> BinCovariance {
    let a = [[cnormal(rng), cnormal(rng)], [cnormal(rng), cnormal(rng)]];
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * a[j][0].conj() + a[i][1] * a[j][1].conj();
        }
    }
    BinCovariance {
        matrix: m,
        bin: 0,
        frames: 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stft_round_trip(params in cola_params(), seed in any::<u64>(), extra in 0usize..700) {
        let x = gaussian(seed, params.frame_length() * 2 + extra);
        let y = istft_samples(&stft_samples(&x, FS, params).unwrap()).unwrap();
        for n in params.interior(x.len()) {
            prop_assert!((x[n] - y[n]).abs() <= 1e-9);
        }
    }

    #[test]
    fn stft_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let p = StftParams::new(128, 64, Window::SqrtHann).unwrap();
        let x = gaussian(seed, 1000);
        let y = gaussian(seed ^ 0x5555, 1000);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (sx, sy, sm) = (
            stft_samples(&x, FS, p).unwrap(),
            stft_samples(&y, FS, p).unwrap(),
            stft_samples(&mix, FS, p).unwrap(),
        );
        let peak = sm.data().iter().map(|c| c.norm()).fold(1.0, f64::max);
        for ((m, u), v) in sm.data().iter().zip(sx.data()).zip(sy.data()) {
            prop_assert!((m - (u * a + v * b)).norm() <= 1e-12 * peak);
        }
    }

    #[test]
    fn fft_convolution_matches_direct(
        x in prop::collection::vec(-1.0f64..1.0, 1..300),
        h in prop::collection::vec(-1.0f64..1.0, 1..60),
    ) {
        let fast = fft_convolve(&x, &h).unwrap();
        let mut direct = vec![0.0; x.len() + h.len() - 1];
        for (i, xi) in x.iter().enumerate() {
            for (j, hj) in h.iter().enumerate() {
                direct[i + j] += xi * hj;
            }
        }
        let scale = direct.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let err = fast.iter().zip(&direct).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-9 * scale);
    }

    #[test]
    fn steering_entries_have_unit_modulus(
        spacing in 0.01f64..0.5,
        azimuth in 0.0f64..180.0,
        f in 0.0f64..24000.0,
    ) {
        let g = ArrayGeometry::pair(spacing).unwrap();
        for d in steering_vector(&g, azimuth, f) {
            prop_assert!((d.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mixture_is_the_exact_sum_of_its_images(
        seed in any::<u64>(),
        interferers in 0usize..3,
        noise in prop::option::of(0.0f64..40.0),
        echo in any::<bool>(),
        sir in -10.0f64..10.0,
    ) {
        let g = ArrayGeometry::pair(0.1).unwrap();
        let mono = |s: u64| AudioBuffer::mono(gaussian(s, 2000), FS).unwrap();
        let spec = MixtureSpec {
            target: SourceSpec::target(mono(seed), 90.0),
            interferers: (0..interferers)
                .map(|i| SourceSpec::interference(mono(seed.wrapping_add(i as u64 + 1)), 30.0 + 40.0 * i as f64))
                .collect(),
            sir_db: sir,
            sensor_noise_snr_db: noise,
            echo: if echo { vec![EchoTap { delay_s: 0.003, gain: 0.4 }] } else { Vec::new() },
        };
        let m = synthesize_mixture(&spec, &g, seed).unwrap();
        for ch in 0..2 {
            for n in 0..m.mixture.len() {
                let mut sum = m.target_image.channel(ch)[n];
                for img in &m.interferer_images {
                    sum += img.channel(ch)[n];
                }
                sum += m.noise_image.channel(ch)[n];
                prop_assert_eq!(sum, m.mixture.channel(ch)[n]);
            }
        }
    }

    #[test]
    fn covariance_is_hermitian_psd(seed in any::<u64>()) {
        let p = StftParams::new(64, 32, Window::SqrtHann).unwrap();
        let a = stft_samples(&gaussian(seed, 800), FS, p).unwrap();
        let b = stft_samples(&gaussian(seed ^ 1, 800), FS, p).unwrap();
        for c in estimate_covariance(&a, &b).unwrap() {
            prop_assert_eq!(c.matrix[0][1], c.matrix[1][0].conj());
            prop_assert_eq!(c.matrix[0][0].im, 0.0);
            prop_assert_eq!(c.matrix[1][1].im, 0.0);
            let [lo, _] = c.eigenvalues();
            prop_assert!(lo >= -1e-12 * c.trace());
        }
    }

    #[test]
    fn mpdr_minimizes_power_under_the_constraint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = random_psd(&mut rng);
        let d = [Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, rng.random_range(0.0..6.3))];
        let w = mpdr_weights(&cov, &d, 0.0).unwrap();
        let response = w[0].conj() * d[0] + w[1].conj() * d[1];
        prop_assert!((response - 1.0).norm() <= 1e-9);
        let best = cov.quadratic_form(&w);
        let b = [d[0], -d[1]];
        for _ in 0..1000 {
            let c = cnormal(&mut rng) * 10f64.powf(rng.random_range(-4.0..1.0));
            let cand = [w[0] + c * b[0], w[1] + c * b[1]];
            prop_assert!(cov.quadratic_form(&cand) >= best * (1.0 - 1e-12));
        }
    }

    #[test]
    fn loading_moves_weights_towards_matched_filter(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = random_psd(&mut rng);
        let d = [Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, rng.random_range(0.0..6.3))];
        let matched = [d[0] * 0.5, d[1] * 0.5];
        let mut alpha = 1e-3 * cov.trace();
        let mut prev = f64::INFINITY;
        for _ in 0..=10 {
            let w = mpdr_weights(&cov, &d, alpha).unwrap();
            let dist = ((w[0] - matched[0]).norm_sqr() + (w[1] - matched[1]).norm_sqr()).sqrt();
            prop_assert!(dist <= prev);
            prev = dist;
            alpha *= 2.0;
        }
    }

    #[test]
    fn attenuation_is_monotone_into_unit_interval(a in 0.0f64..1e7, b in 0.0f64..1e7) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fa, fb) = (attenuation_factor(lo), attenuation_factor(hi));
        prop_assert!(fa <= fb);
        prop_assert!((0.0..1.0).contains(&fa) && (0.0..1.0).contains(&fb));
    }

    #[test]
    fn tilings_are_exact_partitions(p in 1usize..33, q in 1usize..33, h in 0u32..7) {
        if let Ok(tilings) = enumerate_partitions(p, q, h) {
            for t in tilings {
                let mut count = vec![0u8; p * q];
                for r in t.sub_blocks(0, 0) {
                    prop_assert_eq!(r.cells(), t.sub_frames * t.sub_bins);
                    for f in r.frame0..r.frame0 + r.frames {
                        for k in r.bin0..r.bin0 + r.bins {
                            count[f * q + k] += 1;
                        }
                    }
                }
                prop_assert!(count.iter().all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn block_snr_matches_brute_force(seed in any::<u64>(), v in 0u32..5) {
        let z = random_spectrogram(seed, 64, 16);
        let s2 = random_variance(seed ^ 7, &z);
        let tilings = enumerate_partitions(8, 16, 4).unwrap();
        let t = tilings.iter().find(|t| t.v == v).unwrap();
        let region = Region::new(8, 16, 8, 16);
        let got = block_snr(&z, &s2, region, t, 0.0);
        let mut i = 0;
        for f0 in (8..16).step_by(t.sub_frames) {
            for k0 in (16..32).step_by(t.sub_bins) {
                let (mut zs, mut ss, mut n) = (0.0, 0.0, 0.0);
                for f in f0..f0 + t.sub_frames {
                    for k in k0..k0 + t.sub_bins {
                        zs += z.get(k, f).norm_sqr();
                        ss += s2.get(k, f);
                        n += 1.0;
                    }
                }
                let expected = if ss / n <= 0.0 { 1e6 } else { (zs / ss - 1.0).max(0.0) };
                prop_assert!((got[i] - expected).abs() <= 1e-12 * expected.max(1.0));
                i += 1;
            }
        }
        prop_assert_eq!(i, got.len());
    }

    #[test]
    fn post_filter_contracts_and_is_idempotent_in_direction(
        seed in any::<u64>(),
        frames in 1usize..40,
        threshold in 0.0f64..4.0,
    ) {
        let z = random_spectrogram(seed, 64, frames);
        let s2 = random_variance(seed ^ 11, &z);
        let params = BlockThresholdParams { threshold, ..Default::default() };
        let once = apply_block_threshold(&z, &s2, &params).unwrap();
        for (s, z) in once.output.data().iter().zip(z.data()) {
            prop_assert!(s.norm() <= z.norm());
        }
        let twice = apply_block_threshold(&once.output, &s2, &params).unwrap();
        for (t, s) in twice.output.data().iter().zip(once.output.data()) {
            prop_assert!(t.norm() <= s.norm());
        }
    }

    #[test]
    fn shadow_gains_reconstruct_the_filtered_mixture(seed in any::<u64>()) {
        let t = random_spectrogram(seed, 64, 10);
        let r = random_spectrogram(seed ^ 3, 64, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
        let gains: Vec<f64> = (0..t.data().len()).map(|_| rng.random_range(0.0..=1.0)).collect();
        let (tf, rf) = shadow_gain_decompose(&gains, &t, &r).unwrap();
        for (i, (a, b)) in tf.data().iter().zip(rf.data()).enumerate() {
            let z = t.data()[i] + r.data()[i];
            prop_assert!((a + b - z * gains[i]).norm() <= 1e-12 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn osinr_is_antisymmetric(seed in any::<u64>(), n in 1usize..500, scale in 1e-3f64..1e3) {
        let x = AudioBuffer::mono(gaussian(seed, n), FS).unwrap();
        let y = AudioBuffer::mono(gaussian(seed ^ 5, n).iter().map(|v| v * scale).collect(), FS).unwrap();
        let sum = osinr_db(&x, &y).unwrap() + osinr_db(&y, &x).unwrap();
        prop_assert!(sum.abs() <= 1e-9);
    }

    #[test]
    fn mse_ignores_delay_and_positive_scale(seed in any::<u64>(), lag in 0usize..40, gain in 0.01f64..100.0) {
        let s = gaussian(seed, 3000);
        let noisy: Vec<f64> = s.iter().zip(gaussian(seed ^ 13, 3000)).map(|(a, b)| a + 0.3 * b).collect();
        let base = mse_db(&noisy, &s, 64).unwrap();
        let mut shifted = vec![0.0; lag];
        shifted.extend(noisy[..3000 - lag].iter().map(|v| v * gain));
        // compare against the same overlap so only alignment can differ
        let reference_overlap = mse_db(&noisy[..3000 - lag], &s[..3000 - lag], 64).unwrap();
        let moved = mse_db(&shifted, &s, 64).unwrap();
        prop_assert!((moved - reference_overlap).abs() <= 1e-9, "{} vs {}", moved, reference_overlap);
        prop_assert!((base - reference_overlap).abs() < 0.5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fdaf_tracks_block_lms(seed in any::<u64>(), taps in 2usize..17, mu in 0.001f64..0.02) {
        let config = GjbfConfig {
            step_size: mu,
            normalized: false,
            ..GjbfConfig::with_length(taps)
        };
        let blocks = 10;
        let delay = config.alignment();
        let len = blocks * taps - delay;
        let a = gaussian(seed, len);
        let b = gaussian(seed ^ 17, len);
        let out = fdaf_gjbf(
            &AudioBuffer::mono(a.clone(), FS).unwrap(),
            &AudioBuffer::mono(b.clone(), FS).unwrap(),
            &config,
        ).unwrap();
        let u: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let d: Vec<f64> = (0..blocks * taps)
            .map(|n| n.checked_sub(delay).map(|m| 0.5 * (a[m] + b[m])).unwrap_or(0.0))
            .collect();
        let oracle = common::block_lms(&u, &d, taps, blocks, mu);
        for (j, w) in oracle[..blocks].iter().enumerate() {
            prop_assert!(common::relative_error(&out.trajectory.taps(j).unwrap(), w) <= 1e-6);
        }
        prop_assert!(common::relative_error(&out.final_state.taps, &oracle[blocks]) <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn adaptation_reduces_output_power(seed in any::<u64>(), azimuth in 20.0f64..70.0) {
        let g = ArrayGeometry::pair(0.1).unwrap();
        let spec = MixtureSpec {
            target: SourceSpec::target(AudioBuffer::mono(gaussian(seed, 32000), FS).unwrap(), azimuth),
            interferers: Vec::new(),
            sir_db: 0.0,
            sensor_noise_snr_db: None,
            echo: Vec::new(),
        };
        let x = synthesize_mixture(&spec, &g, seed).unwrap().mixture;
        let out = fdaf_gjbf(&x.extract(0), &x.extract(1), &GjbfConfig::with_length(64)).unwrap();
        let z = out.z.channel(0);
        let half = z.len() / 2;
        let first: f64 = z[..half].iter().map(|v| v * v).sum();
        let second: f64 = z[half..].iter().map(|v| v * v).sum();
        prop_assert!(second <= first);
    }

    #[test]
    fn sweep_ignores_candidate_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ArrayGeometry::pair(0.1).unwrap();
        let spec = MixtureSpec {
            target: SourceSpec::target(AudioBuffer::mono(gaussian(seed, 8000), FS).unwrap(), 90.0),
            interferers: vec![SourceSpec::interference(
                AudioBuffer::mono(gaussian(seed ^ 1, 8000), FS).unwrap(),
                60.0,
            )],
            sir_db: 0.0,
            sensor_noise_snr_db: Some(30.0),
            echo: Vec::new(),
        };
        let x = synthesize_mixture(&spec, &g, seed).unwrap().mixture;
        let (a, b) = (x.extract(0), x.extract(1));
        let mut candidates = vec![16usize, 32, 48, 64];
        let p = StftParams::new(256, 128, Window::SqrtHann).unwrap();
        let forward = select_filter_length(&a, &b, &candidates, &GjbfConfig::default(), p).unwrap();
        for i in (1..candidates.len()).rev() {
            candidates.swap(i, rng.random_range(0..=i));
        }
        let shuffled = select_filter_length(&a, &b, &candidates, &GjbfConfig::default(), p).unwrap();
        prop_assert_eq!(forward.best_length, shuffled.best_length);
        let mut c1 = forward.curve.clone();
        let mut c2 = shuffled.curve.clone();
        c1.sort_by_key(|p| p.length);
        c2.sort_by_key(|p| p.length);
        prop_assert_eq!(c1, c2);
    }
}
