use possfuse::simulator::{
    generate_labeled_measurements, generate_measurements, generate_truth, ScenarioConfig,
    SensorConfig,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn long_scenario(steps: usize) -> ScenarioConfig {
    ScenarioConfig {
        steps,
        birth_step: 1,
        death_step: steps,
        psd: 0.0,
        initial_state: [30.0, 0.0, 30.0, 0.0],
        ..ScenarioConfig::default()
    }
}

#[test]
fn detection_frequency_matches_pd() {
    let cfg = long_scenario(10_000);
    let truth = generate_truth(&cfg, 11);
    let sensor = SensorConfig {
        pd_true: 0.8,
        noise_var: 2.0,
        clutter_rate: 0.0,
        seed_stream: None,
    };
    let scans = generate_measurements(&truth, &sensor, &cfg.region, 12);
    let detected = scans.iter().filter(|s| !s.is_empty()).count() as f64 / 10_000.0;
    assert!((detected - 0.8).abs() <= 0.02, "{detected}");
}

#[test]
fn clutter_is_poisson_rate_and_uniform() {
    let cfg = long_scenario(10_000);
    let truth = vec![None; 10_000];
    let sensor = SensorConfig {
        pd_true: 0.8,
        noise_var: 2.0,
        clutter_rate: 4.0,
        seed_stream: None,
    };
    let scans = generate_labeled_measurements(&truth, &sensor, &cfg.region, 13);
    let total: usize = scans.iter().map(|s| s.scan.len()).sum();
    let mean = total as f64 / 10_000.0;
    assert!((mean - 4.0).abs() <= 0.2, "{mean}");
    assert!(scans.iter().all(|s| s.is_clutter.iter().all(|&c| c)));

    let mut counts = [0usize; 36];
    for s in &scans {
        for z in &s.scan.points {
            assert!(cfg.region.contains(z[0], z[1]));
            let i = ((z[0] / 10.0) as usize).min(5);
            let j = ((z[1] / 10.0) as usize).min(5);
            counts[i * 6 + j] += 1;
        }
    }
    let expected = total as f64 / 36.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(35.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn truth_follows_the_scenario() {
    let cfg = ScenarioConfig::default();
    let truth = generate_truth(&cfg, 3);
    assert_eq!(truth.len(), cfg.steps);
    for (k, x) in truth.iter().enumerate() {
        let step = k + 1;
        let alive = step >= cfg.birth_step && step <= cfg.death_step;
        assert_eq!(x.is_some(), alive, "step {step}");
        if let Some(x) = x {
            assert!(cfg.region.contains(x[0], x[2]), "step {step}: {x}");
        }
    }
    let first = truth[cfg.birth_step - 1].as_ref().unwrap();
    assert_eq!(first.as_slice(), &cfg.initial_state);
}

#[test]
fn same_seed_same_scans_different_seed_different_scans() {
    let cfg = ScenarioConfig::default();
    let truth = generate_truth(&cfg, 3);
    let sensor = &cfg.sensors[0];
    let a = generate_measurements(&truth, sensor, &cfg.region, 7);
    let b = generate_measurements(&truth, sensor, &cfg.region, 7);
    let c = generate_measurements(&truth, sensor, &cfg.region, 8);
    assert_eq!(a, b);
    assert_ne!(a, c);
}
