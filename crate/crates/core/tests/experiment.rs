use twophoton::*;

const A: f64 = 0.45e-3;

fn bench_optics() -> OpticalConfig {
    OpticalConfig::new(800e-9, 0.5).unwrap()
}

fn positions(half: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * half / step).round() as usize;
    (0..=n)
        .map(|i| -half + 2.0 * half * i as f64 / n as f64)
        .collect()
}

fn airy_at(pattern: AiryPattern, cfg: &OpticalConfig) -> impl Fn(TransverseVector) -> f64 {
    let s = pattern.argument_scale(A, cfg);
    move |r: TransverseVector| airy_kernel(s * r.norm()).unwrap()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

#[test]
fn poisson_moments_match_mean() {
    for (mean, seed) in [(3.7, 1), (120.0, 2), (2000.0, 3)] {
        let model = DetectorModel {
            pinhole_radius: 0.0,
            pair_flux: mean,
            dwell_time: 1.0,
            singles_rate: 0.0,
            rng_seed: seed,
            ..DetectorModel::default()
        };
        let xs = vec![0.0; 10_000];
        let recs = simulate_scan(&xs, &model, |_| 1.0, 0.0).unwrap();
        let counts: Vec<f64> = recs.iter().map(|r| r.coincidences as f64).collect();
        let (m, v) = mean_var(&counts);
        let n = counts.len() as f64;
        let se_mean = (mean / n).sqrt();
        // variance of the sample variance for Poisson: (μ + 2μ²·n/(n−1)) / n
        let se_var = ((mean + 2.0 * mean * mean) / n).sqrt();
        assert!((m - mean).abs() < 3.0 * se_mean, "mean {m} vs {mean}");
        assert!((v - mean).abs() < 3.0 * se_var, "variance {v} vs {mean}");
    }
}

#[test]
fn identical_seeds_reproduce_counts() {
    let cfg = bench_optics();
    let model = DetectorModel {
        rng_seed: 11,
        ..DetectorModel::default()
    };
    let xs = positions(600e-6, 10e-6);
    let f = airy_at(AiryPattern::QuantumAiry, &cfg);
    let a = simulate_scan(&xs, &model, &f, 0.0).unwrap();
    let b = simulate_scan(&xs, &model, &f, 0.0).unwrap();
    assert_eq!(a, b);
    let other = DetectorModel {
        rng_seed: 12,
        ..model
    };
    assert_ne!(a, simulate_scan(&xs, &other, &f, 0.0).unwrap());
}

#[test]
fn small_pinhole_approaches_point_detector() {
    let cfg = bench_optics();
    let f = airy_at(AiryPattern::QuantumAiry, &cfg);
    let zero = AiryPattern::QuantumAiry.first_zero(A, &cfg);
    let point = DetectorModel {
        pinhole_radius: 0.0,
        singles_rate: 0.0,
        ..DetectorModel::default()
    };
    let tiny = DetectorModel {
        pinhole_radius: zero / 100.0,
        ..point
    };
    for x in [0.0, 0.3 * zero, 0.5 * zero, 1.6 * zero] {
        let p = expected_counts(x, &point, &f, 0.0);
        let t = expected_counts(x, &tiny, &f, 0.0);
        let scale = point.peak_counts();
        assert!((p - t).abs() <= 1e-3 * scale, "x={x}: {p} vs {t}");
    }
}

#[test]
fn noiseless_fit_recovers_parameters() {
    let cfg = bench_optics();
    let (amp, offset, bg) = (1800.0, 10e-6, 3.5);
    for pattern in [AiryPattern::QuantumAiry, AiryPattern::ClassicalAiry] {
        let s = pattern.argument_scale(A, &cfg);
        let half = 2.5 * pattern.first_zero(A, &cfg);
        let xs = positions(half, half / 60.0);
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| amp * airy_kernel(s * (x - offset)).unwrap() + bg)
            .collect();
        let fit = fit_samples(&xs, &ys, A, &cfg, pattern, &FitOptions::default()).unwrap();
        assert!((fit.amplitude / amp - 1.0).abs() < 1e-6);
        assert!((fit.center_offset - offset).abs() < 1e-6 * pattern.first_zero(A, &cfg));
        assert!((fit.background - bg).abs() < 1e-6 * amp);
        let zero = offset + pattern.first_zero(A, &cfg);
        assert!((fit.first_zero_estimate / zero - 1.0).abs() < 1e-6);
        assert!(fit.reduced_chi_square < 1e-6);
    }
}

#[test]
fn noisy_fit_statistics_are_consistent() {
    let cfg = bench_optics();
    let f = airy_at(AiryPattern::QuantumAiry, &cfg);
    let xs = positions(600e-6, 10e-6);
    let truth = AiryPattern::QuantumAiry.first_zero(A, &cfg);
    let mut chis = Vec::new();
    let mut covered = 0;
    let runs = 200;
    for seed in 0..runs {
        let model = DetectorModel {
            rng_seed: seed,
            ..DetectorModel::default()
        };
        let recs = simulate_scan(&xs, &model, &f, 0.0).unwrap();
        let fit = fit_profile(&recs, A, &cfg, AiryPattern::QuantumAiry).unwrap();
        chis.push(fit.reduced_chi_square);
        if (fit.first_zero_estimate - truth).abs() <= fit.first_zero_uncertainty {
            covered += 1;
        }
    }
    chis.sort_by(f64::total_cmp);
    let median = 0.5 * (chis[99] + chis[100]);
    assert!((0.8..=1.3).contains(&median), "median {median}");
    let coverage = covered as f64 / runs as f64;
    assert!((coverage - 0.68).abs() <= 0.07, "coverage {coverage}");
}

#[test]
fn single_scan_chi_square_is_acceptable() {
    let cfg = bench_optics();
    let f = airy_at(AiryPattern::QuantumAiry, &cfg);
    let recs = simulate_scan(
        &positions(600e-6, 10e-6),
        &DetectorModel {
            rng_seed: 7,
            ..DetectorModel::default()
        },
        &f,
        0.0,
    )
    .unwrap();
    let fit = fit_profile(&recs, A, &cfg, AiryPattern::QuantumAiry).unwrap();
    assert!(
        (0.5..=2.0).contains(&fit.reduced_chi_square),
        "{}",
        fit.reduced_chi_square
    );
}

#[test]
fn wrong_model_is_rejected_by_chi_square() {
    let cfg = bench_optics();
    let f = airy_at(AiryPattern::QuantumAiry, &cfg);
    let xs = positions(600e-6, 10e-6);
    let recs = simulate_scan(
        &xs,
        &DetectorModel {
            rng_seed: 4,
            ..DetectorModel::default()
        },
        &f,
        0.0,
    )
    .unwrap();
    let good = fit_profile(&recs, A, &cfg, AiryPattern::QuantumAiry).unwrap();
    match fit_profile(&recs, A, &cfg, AiryPattern::ClassicalAiry) {
        Ok(bad) => assert!(bad.reduced_chi_square > 10.0 * good.reduced_chi_square.max(1.0)),
        Err(Error::InsufficientData(_)) | Err(Error::FitDiverged { .. }) => {}
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn fitted_zero_ratio_is_two() {
    let cfg = bench_optics();
    let mut fits = Vec::new();
    for (pattern, half, step) in [
        (AiryPattern::ClassicalAiry, 1200e-6, 20e-6),
        (AiryPattern::QuantumAiry, 600e-6, 10e-6),
    ] {
        let recs = simulate_scan(
            &positions(half, step),
            &DetectorModel {
                rng_seed: 21,
                ..DetectorModel::default()
            },
            airy_at(pattern, &cfg),
            0.0,
        )
        .unwrap();
        fits.push(fit_profile(&recs, A, &cfg, pattern).unwrap());
    }
    let (c, q) = (&fits[0], &fits[1]);
    let ratio = c.first_zero_estimate / q.first_zero_estimate;
    let sigma = ratio
        * ((c.first_zero_uncertainty / c.first_zero_estimate).powi(2)
            + (q.first_zero_uncertainty / q.first_zero_estimate).powi(2))
        .sqrt();
    assert!((ratio - 2.0).abs() <= 3.0 * sigma, "{ratio} ± {sigma}");
}

#[test]
fn scan_must_reach_first_zero() {
    let cfg = bench_optics();
    let xs = positions(100e-6, 5e-6);
    let ys: Vec<f64> = xs.iter().map(|_| 100.0).collect();
    assert!(matches!(
        fit_samples(
            &xs,
            &ys,
            A,
            &cfg,
            AiryPattern::QuantumAiry,
            &FitOptions::default()
        ),
        Err(Error::InsufficientData(_))
    ));
}
