use possfuse::experiment::{
    run_fusion_dependent, run_fusion_independent, run_single, ExperimentConfig, RunOptions,
};

fn small(runs: usize) -> ExperimentConfig {
    ExperimentConfig {
        runs,
        ..ExperimentConfig::default()
    }
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(1).collect()
}

#[test]
fn single_is_deterministic_and_has_one_row_per_step_and_sensor() {
    let cfg = small(1);
    let a = run_single(&cfg, RunOptions::default()).unwrap();
    let b = run_single(&cfg, RunOptions::default()).unwrap();
    assert_eq!(a.ospa_csv(), b.ospa_csv());
    assert_eq!(a.trace_csv(), b.trace_csv());

    let csv = a.ospa_csv();
    assert_eq!(csv.lines().next().unwrap(), "step,series,mean_ospa,runs");
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 50 * 2);
    assert_eq!(rows.iter().filter(|r| r.contains(",sensor1,")).count(), 50);
}

#[test]
fn different_seeds_give_different_results() {
    let a = run_single(&small(2), RunOptions::default()).unwrap();
    let mut cfg = small(2);
    cfg.master_seed = 99;
    let b = run_single(&cfg, RunOptions::default()).unwrap();
    assert_ne!(a.ospa_csv(), b.ospa_csv());
}

#[test]
fn near_ideal_conditions_track_tightly() {
    let mut cfg = small(20);
    for s in &mut cfg.scenario.sensors {
        s.pd_true = 1.0;
        s.clutter_rate = 0.0;
        s.noise_var = 0.1;
    }
    cfg.filter.clutter_rate = Some(0.01);
    cfg.filter.detection_interval = [0.99, 1.0];
    let out = run_single(&cfg, RunOptions::default()).unwrap();
    let s = out.aggregate.series("sensor1").unwrap();
    for k in 5..50 {
        assert!(s.mean_ospa[k] < 1.0, "step {}: {}", k + 1, s.mean_ospa[k]);
    }
}

#[test]
fn independent_fusion_reports_four_series() {
    let out = run_fusion_independent(&small(3), RunOptions::default()).unwrap();
    let names: Vec<&str> = out.aggregate.series.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["sensor1", "sensor2", "centralized", "chernoff"]);
    assert_eq!(data_rows(&out.ospa_csv()).len(), 50 * 4);
}

#[test]
fn identical_sensor_streams_give_identical_local_series() {
    let mut cfg = small(4);
    let first = cfg.scenario.sensors[0].clone();
    cfg.scenario.sensors = vec![first.clone(), first];
    for s in &mut cfg.scenario.sensors {
        s.seed_stream = Some(0);
    }
    let out = run_fusion_independent(&cfg, RunOptions::default()).unwrap();
    let a = out.aggregate.series("sensor1").unwrap();
    let b = out.aggregate.series("sensor2").unwrap();
    assert_eq!(a.mean_ospa, b.mean_ospa);
    assert_eq!(a.mean_trace, b.mean_trace);
}

#[test]
fn dependent_fusion_trace_relations() {
    let out = run_fusion_dependent(&small(20), RunOptions::default()).unwrap();
    let agg = &out.aggregate;
    let single = agg.series("single").unwrap();
    let chernoff = agg.series("chernoff").unwrap();
    let independent = agg.series("independent").unwrap();
    for k in 10..50 {
        let (s, c, i) = (
            single.mean_trace[k].unwrap(),
            chernoff.mean_trace[k].unwrap(),
            independent.mean_trace[k].unwrap(),
        );
        assert!(i < c, "step {}: independent {i} chernoff {c}", k + 1);
        assert!((c - s).abs() / s < 0.1, "step {}: chernoff {c} single {s}", k + 1);
    }
}

#[test]
fn write_to_creates_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_single(
        &small(1),
        RunOptions {
            threads: Some(1),
            dump_scans: true,
        },
    )
    .unwrap();
    let files = out.write_to(&dir.path().join("nested")).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["ospa.csv", "trace.csv", "presence.csv", "scans.csv"]);
    let scans = std::fs::read_to_string(&files[3]).unwrap();
    assert_eq!(scans.lines().next().unwrap(), "run,step,sensor,x_km,y_km,is_clutter");
    assert!(scans.lines().skip(1).any(|l| l.ends_with(",false")));
    assert_eq!(std::fs::read_to_string(&files[0]).unwrap(), out.ospa_csv());
}

#[test]
fn too_few_sensors_is_a_config_error() {
    let mut cfg = small(1);
    cfg.scenario.sensors.truncate(1);
    let err = run_fusion_independent(&cfg, RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("scenario.sensors"), "{err}");
}
