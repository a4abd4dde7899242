//! Monte Carlo drivers for the single-sensor, independent-sensor and
//! dependent-sensor experiments, and their CSV outputs.
//!
//! Runs are distributed over a rayon pool; per-run seeds derive only from the
//! master seed and the run index, and results are folded in run order, so the
//! output bytes do not depend on the pool size.

mod config;
mod output;

pub use config::{
    BirthParams, ExperimentConfig, FilterConfig, FusionConfig, FusionMode, MetricsConfig,
    SensorFilter,
};
pub use output::{ExperimentOutput, ScanDumpRow};

use rayon::prelude::*;

use crate::bernoulli::{extract, reduce, BernoulliPossState, Cycle, Scan};
use crate::error::{Error, Result};
use crate::fusion::{fuse_chernoff, fuse_independent, select_omega, FusionResult};
use crate::metrics::{aggregate, RunRecord, SeriesRecord, StepRecord};
use crate::possibility::GaussianMaxMixture;
use crate::simulator::{
    build_birth_mixture, generate_labeled_measurements, generate_truth, mix_seed, LabeledScan,
};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "POSSFUSE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Single,
    FuseIndependent,
    FuseDependent,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::FuseIndependent => "fuse-independent",
            ExperimentKind::FuseDependent => "fuse-dependent",
        }
    }
}

/// Knobs that affect how, not what, an experiment computes.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker count; `None` uses all cores. Either way capped by `POSSFUSE_THREADS`.
    pub threads: Option<usize>,
    /// Keep truth-labeled scans for a `scans.csv` dump.
    pub dump_scans: bool,
}

pub fn worker_count(requested: Option<usize>) -> usize {
    let base = requested
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    cap.map_or(base, |c| base.min(c))
}

/// Initial state: total ignorance about presence, spatial possibility spread
/// over the whole region.
pub fn initial_state(filter: &SensorFilter) -> BernoulliPossState {
    BernoulliPossState::ignorant(GaussianMaxMixture::single(filter.birth.region_component()))
}

/// Runs one filter over a scan sequence, returning every predicted and updated
/// (reduced) state. Birth at step `k` is built from the scan at step `k - 1`.
pub fn run_filter(filter: &SensorFilter, scans: &[Scan]) -> Result<Vec<Cycle>> {
    let mut state = initial_state(filter);
    let mut out = Vec::with_capacity(scans.len());
    let mut previous = Scan::empty(0);
    for (k, scan) in scans.iter().enumerate() {
        let step = k + 1;
        let birth = build_birth_mixture(&previous, &filter.birth).map_err(|e| e.at(0, step))?;
        let cycle = filter
            .model
            .step(&state, &birth, scan)
            .map_err(|e| e.at(0, step))?;
        state = cycle.updated.clone();
        out.push(cycle);
        previous = scan.clone();
    }
    Ok(out)
}

/// Fuses two posteriors and reduces the fused mixture with `filter`'s settings.
pub fn fuse_and_reduce(
    fused: Result<FusionResult>,
    filter: &SensorFilter,
) -> Result<BernoulliPossState> {
    let fused = fused?;
    let reduced = reduce(fused.state.spatial(), &filter.model.reduction)?;
    Ok(fused.state.with_spatial(reduced))
}

fn step_record(state: &BernoulliPossState) -> StepRecord {
    StepRecord {
        estimate: extract(state),
        q_absent: state.q_absent(),
        q_present: state.q_present(),
        components: state.spatial().len(),
    }
}

fn series(name: &str, states: &[BernoulliPossState]) -> SeriesRecord {
    SeriesRecord {
        name: name.to_string(),
        steps: states.iter().map(step_record).collect(),
    }
}

struct RunResult {
    record: RunRecord,
    scans: Vec<(usize, Vec<LabeledScan>)>,
}

fn with_run<T>(run: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Run { step, source, .. } => Error::Run { run, step, source },
        e => e.at(run, 0),
    })
}

fn run_once(
    config: &ExperimentConfig,
    kind: ExperimentKind,
    run: usize,
    dump: bool,
) -> Result<RunResult> {
    let scenario = &config.scenario;
    let run_seed = mix_seed(config.master_seed, run as u64);
    let truth = generate_truth(scenario, mix_seed(run_seed, 0));
    let truth_pos: Vec<Option<[f64; 2]>> =
        truth.iter().map(|x| x.as_ref().map(|x| [x[0], x[2]])).collect();

    let sensors: Vec<usize> = match kind {
        ExperimentKind::Single => (0..scenario.sensors.len()).collect(),
        ExperimentKind::FuseIndependent => vec![0, 1],
        ExperimentKind::FuseDependent => vec![0],
    };
    let mut labeled = Vec::with_capacity(sensors.len());
    let mut posteriors = Vec::with_capacity(sensors.len());
    for &i in &sensors {
        let sensor = &scenario.sensors[i];
        let scans = generate_labeled_measurements(
            &truth,
            sensor,
            &scenario.region,
            scenario.sensor_seed(run_seed, i),
        );
        let plain: Vec<Scan> = scans.iter().map(|l| l.scan.clone()).collect();
        let filter = config.filter_for(sensor)?;
        let cycles = with_run(run, run_filter(&filter, &plain))?;
        posteriors.push(cycles.into_iter().map(|c| c.updated).collect::<Vec<_>>());
        labeled.push((i, scans));
    }

    let mut out_series = Vec::new();
    match kind {
        ExperimentKind::Single => {
            for (&i, states) in sensors.iter().zip(&posteriors) {
                out_series.push(series(&format!("sensor{}", i + 1), states));
            }
        }
        ExperimentKind::FuseIndependent => {
            out_series.push(series("sensor1", &posteriors[0]));
            out_series.push(series("sensor2", &posteriors[1]));
            let reducer = config.filter_for(&scenario.sensors[0])?;
            let (centralized, chernoff) =
                fuse_series(config, &reducer, &posteriors[0], &posteriors[1], run)?;
            if let Some(c) = centralized {
                out_series.push(series("centralized", &c));
            }
            if let Some(c) = chernoff {
                out_series.push(series("chernoff", &c));
            }
        }
        ExperimentKind::FuseDependent => {
            // both filters see the same stream with identical models, so their
            // posteriors coincide; the second is recomputed rather than copied
            let sensor = &scenario.sensors[0];
            let filter = config.filter_for(sensor)?;
            let plain: Vec<Scan> = labeled[0].1.iter().map(|l| l.scan.clone()).collect();
            let twin: Vec<BernoulliPossState> = with_run(run, run_filter(&filter, &plain))?
                .into_iter()
                .map(|c| c.updated)
                .collect();
            out_series.push(series("single", &posteriors[0]));
            let (independent, chernoff) =
                fuse_series(config, &filter, &posteriors[0], &twin, run)?;
            if let Some(c) = chernoff {
                out_series.push(series("chernoff", &c));
            }
            if let Some(c) = independent {
                out_series.push(series("independent", &c));
            }
        }
    }

    Ok(RunResult {
        record: RunRecord {
            truth: truth_pos,
            series: out_series,
        },
        scans: if dump { labeled } else { Vec::new() },
    })
}

type Fused = Option<Vec<BernoulliPossState>>;

fn fuse_series(
    config: &ExperimentConfig,
    reducer: &SensorFilter,
    a: &[BernoulliPossState],
    b: &[BernoulliPossState],
    run: usize,
) -> Result<(Fused, Fused)> {
    let mode = config.fusion.mode;
    let mut independent = mode.independent().then(Vec::new);
    let mut chernoff = mode.chernoff().then(Vec::new);
    for (k, (sa, sb)) in a.iter().zip(b).enumerate() {
        let at = |e: Error| e.at(run, k + 1);
        if let Some(out) = independent.as_mut() {
            out.push(fuse_and_reduce(fuse_independent(sa, sb), reducer).map_err(at)?);
        }
        if let Some(out) = chernoff.as_mut() {
            let omega = select_omega(sa, sb, config.fusion.omega_strategy).map_err(at)?;
            out.push(fuse_and_reduce(fuse_chernoff(sa, sb, omega), reducer).map_err(at)?);
        }
    }
    Ok((independent, chernoff))
}

/// Runs an experiment end to end and aggregates per-step means.
pub fn run_experiment(
    config: &ExperimentConfig,
    kind: ExperimentKind,
    options: RunOptions,
) -> Result<ExperimentOutput> {
    config.validate()?;
    let needed = match kind {
        ExperimentKind::Single | ExperimentKind::FuseDependent => 1,
        ExperimentKind::FuseIndependent => 2,
    };
    if config.scenario.sensors.len() < needed {
        return Err(Error::Config(format!(
            "at `scenario.sensors`: {} needs {needed} sensor(s), found {}",
            kind.name(),
            config.scenario.sensors.len()
        )));
    }
    if kind == ExperimentKind::FuseIndependent && config.scenario.sensors.len() != 2 {
        return Err(Error::Config(
            "at `scenario.sensors`: fusion of exactly two sensors is supported".into(),
        ));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(options.threads))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let results: Vec<RunResult> = pool.install(|| {
        (0..config.runs)
            .into_par_iter()
            .map(|run| run_once(config, kind, run, options.dump_scans))
            .collect::<Result<Vec<_>>>()
    })?;

    let records: Vec<RunRecord> = results.iter().map(|r| r.record.clone()).collect();
    let aggregate = aggregate(&records, &config.metrics.ospa, config.metrics.trace)?;
    let scans = options.dump_scans.then(|| {
        results
            .iter()
            .enumerate()
            .flat_map(|(run, r)| output::scan_rows(run, &r.scans))
            .collect()
    });
    Ok(ExperimentOutput {
        kind,
        aggregate,
        scans,
    })
}

pub fn run_single(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentOutput> {
    run_experiment(config, ExperimentKind::Single, options)
}

pub fn run_fusion_independent(
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<ExperimentOutput> {
    run_experiment(config, ExperimentKind::FuseIndependent, options)
}

pub fn run_fusion_dependent(
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<ExperimentOutput> {
    run_experiment(config, ExperimentKind::FuseDependent, options)
}
