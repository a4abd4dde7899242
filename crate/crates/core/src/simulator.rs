//! Ground truth, cluttered sensor scans and measurement-driven birth for the
//! two-sensor single-target scenario.
//!
//! Every generator is a pure function of its configuration and seed. Each
//! purpose (truth, detection draws, measurement noise, clutter, ordering) uses
//! its own ChaCha stream, so e.g. changing the clutter rate leaves the
//! trajectory and the detection pattern untouched.

use nalgebra::Cholesky;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bernoulli::{cv_process_noise, cv_transition, point, position_observation, Region};
pub use crate::bernoulli::Scan;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::possibility::{GaussianMaxMixture, GaussianPossibility, WeightedComponent};

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Truth = 0,
    Detection = 1,
    Noise = 2,
    Clutter = 3,
    Order = 4,
}

fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer, used to derive independent per-run / per-sensor seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// True probability of detecting an existing target.
    pub pd_true: f64,
    /// Measurement noise variance per axis (km²).
    pub noise_var: f64,
    /// Mean clutter count per scan.
    pub clutter_rate: f64,
    /// Overrides the sensor index when deriving this sensor's random seed;
    /// two sensors with the same value see identical scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_stream: Option<u64>,
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pd_true) {
            return Err(Error::Config(format!("pd_true {} not in [0, 1]", self.pd_true)));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Config(format!("noise_var {} must be >= 0", self.noise_var)));
        }
        if !(self.clutter_rate >= 0.0 && self.clutter_rate.is_finite()) {
            return Err(Error::Config(format!(
                "clutter_rate {} must be >= 0",
                self.clutter_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub region: Region,
    pub steps: usize,
    /// Sampling interval (s).
    pub dt: f64,
    /// Process-noise power spectral density.
    pub psd: f64,
    /// `[x, ẋ, y, ẏ]` at `birth_step` (km, km/s).
    pub initial_state: [f64; 4],
    pub birth_step: usize,
    pub death_step: usize,
    pub sensors: Vec<SensorConfig>,
    /// Probabilistic birth / survival figures; carried for reference only.
    pub p_birth: f64,
    pub p_survive: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            region: Region::default(),
            steps: 50,
            dt: 2.0,
            psd: 1e-5,
            initial_state: [10.0, 0.3, 55.0, -0.35],
            birth_step: 1,
            death_step: 50,
            sensors: vec![
                SensorConfig {
                    pd_true: 0.8,
                    noise_var: 2.0,
                    clutter_rate: 4.0,
                    seed_stream: None,
                },
                SensorConfig {
                    pd_true: 0.6,
                    noise_var: 2.0,
                    clutter_rate: 4.0,
                    seed_stream: None,
                },
            ],
            p_birth: 0.05,
            p_survive: 0.99,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        if !(1 <= self.birth_step && self.birth_step <= self.death_step && self.death_step <= self.steps)
        {
            return Err(Error::Config(format!(
                "need 1 <= birth_step ({}) <= death_step ({}) <= steps ({})",
                self.birth_step, self.death_step, self.steps
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt {} must be positive", self.dt)));
        }
        if !(self.psd >= 0.0 && self.psd.is_finite()) {
            return Err(Error::Config(format!("psd {} must be >= 0", self.psd)));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial_state must be finite".into()));
        }
        for s in &self.sensors {
            s.validate()?;
        }
        Ok(())
    }

    /// Seed for sensor `index` within a run seeded by `run_seed`.
    pub fn sensor_seed(&self, run_seed: u64, index: usize) -> u64 {
        let stream = self.sensors[index].seed_stream.unwrap_or(index as u64);
        mix_seed(run_seed, 1 + stream)
    }
}

/// Target state at steps `1..=steps` (index `k - 1`), `None` when absent.
pub fn generate_truth(cfg: &ScenarioConfig, seed: u64) -> Vec<Option<Vector>> {
    let mut rng = rng_for(seed, Stream::Truth);
    let f = cv_transition(cfg.dt);
    let noise = (cfg.psd > 0.0)
        .then(|| Cholesky::new(cv_process_noise(cfg.dt, cfg.psd)))
        .flatten()
        .map(|c| c.l());
    let mut out = Vec::with_capacity(cfg.steps);
    let mut x = Vector::from_row_slice(&cfg.initial_state);
    for k in 1..=cfg.steps {
        if k < cfg.birth_step || k > cfg.death_step {
            out.push(None);
            continue;
        }
        if k > cfg.birth_step {
            x = &f * &x;
            if let Some(l) = &noise {
                let w = Vector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
                x += l * w;
            }
        }
        out.push(Some(x.clone()));
    }
    out
}

/// A scan with per-point clutter labels, for debugging dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScan {
    pub scan: Scan,
    pub is_clutter: Vec<bool>,
}

pub fn generate_labeled_measurements(
    truth: &[Option<Vector>],
    sensor: &SensorConfig,
    region: &Region,
    seed: u64,
) -> Vec<LabeledScan> {
    let mut detect_rng = rng_for(seed, Stream::Detection);
    let mut noise_rng = rng_for(seed, Stream::Noise);
    let mut clutter_rng = rng_for(seed, Stream::Clutter);
    let mut order_rng = rng_for(seed, Stream::Order);
    let poisson = (sensor.clutter_rate > 0.0)
        .then(|| Poisson::new(sensor.clutter_rate).expect("positive rate"));
    let h = position_observation();
    let sd = sensor.noise_var.sqrt();

    truth
        .iter()
        .enumerate()
        .map(|(idx, state)| {
            let detected = detect_rng.random::<f64>() < sensor.pd_true;
            let nx: f64 = noise_rng.sample(StandardNormal);
            let ny: f64 = noise_rng.sample(StandardNormal);
            let mut points: Vec<(Vector, bool)> = Vec::new();
            if let (Some(x), true) = (state, detected) {
                let z = &h * x;
                points.push((point(z[0] + sd * nx, z[1] + sd * ny), false));
            }
            let count = poisson
                .as_ref()
                .map_or(0, |p| p.sample(&mut clutter_rng) as usize);
            for _ in 0..count {
                let cx = clutter_rng.random_range(region.x_min..region.x_max);
                let cy = clutter_rng.random_range(region.y_min..region.y_max);
                points.push((point(cx, cy), true));
            }
            points.shuffle(&mut order_rng);
            let (points, is_clutter) = points.into_iter().unzip();
            LabeledScan {
                scan: Scan::new(idx + 1, points),
                is_clutter,
            }
        })
        .collect()
}

pub fn generate_measurements(
    truth: &[Option<Vector>],
    sensor: &SensorConfig,
    region: &Region,
    seed: u64,
) -> Vec<Scan> {
    generate_labeled_measurements(truth, sensor, region, seed)
        .into_iter()
        .map(|l| l.scan)
        .collect()
}

/// Birth component spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthConfig {
    /// Position variance of each measurement-seeded component (km²).
    pub position_var: f64,
    /// Velocity variance of each component ((km/s)²).
    pub velocity_var: f64,
    /// Region covered by the fallback component when the previous scan is empty.
    pub region: Region,
}

impl BirthConfig {
    /// Component with zero velocity centered on the region, spanning it.
    pub fn region_component(&self) -> GaussianPossibility {
        let (cx, cy) = self.region.center();
        let hx = 0.5 * (self.region.x_max - self.region.x_min);
        let hy = 0.5 * (self.region.y_max - self.region.y_min);
        let cov = Matrix::from_diagonal(&Vector::from_row_slice(&[
            hx * hx,
            self.velocity_var,
            hy * hy,
            self.velocity_var,
        ]));
        GaussianPossibility::new(Vector::from_row_slice(&[cx, 0.0, cy, 0.0]), cov)
            .expect("positive diagonal")
    }
}

/// One unit-weight component per point of the previous scan, or a single
/// region-covering component when that scan is empty.
pub fn build_birth_mixture(previous: &Scan, cfg: &BirthConfig) -> Result<GaussianMaxMixture> {
    if previous.is_empty() {
        return Ok(GaussianMaxMixture::single(cfg.region_component()));
    }
    let cov = Matrix::from_diagonal(&Vector::from_row_slice(&[
        cfg.position_var,
        cfg.velocity_var,
        cfg.position_var,
        cfg.velocity_var,
    ]));
    let components = previous
        .points
        .iter()
        .map(|z| {
            let mean = Vector::from_row_slice(&[z[0], 0.0, z[1], 0.0]);
            WeightedComponent::new(1.0, GaussianPossibility::new(mean, cov.clone())?)
        })
        .collect::<Result<Vec<_>>>()?;
    GaussianMaxMixture::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn birth_cfg() -> BirthConfig {
        BirthConfig {
            position_var: 3.0,
            velocity_var: 0.25,
            region: Region::default(),
        }
    }

    #[test]
    fn truth_starts_at_initial_state() {
        let cfg = ScenarioConfig::default();
        let t = generate_truth(&cfg, 7);
        assert_eq!(t.len(), 50);
        assert_eq!(t[0].as_ref().unwrap().as_slice(), &[10.0, 0.3, 55.0, -0.35]);
        assert!(t.iter().all(Option::is_some));
    }

    #[test]
    fn zero_noise_truth_is_a_line() {
        let cfg = ScenarioConfig {
            psd: 0.0,
            ..ScenarioConfig::default()
        };
        let t = generate_truth(&cfg, 3);
        for (i, x) in t.iter().enumerate() {
            let x = x.as_ref().unwrap();
            let elapsed = 2.0 * i as f64;
            assert!((x[0] - (10.0 + 0.3 * elapsed)).abs() < 1e-12);
            assert!((x[2] - (55.0 - 0.35 * elapsed)).abs() < 1e-12);
            assert_eq!((x[1], x[3]), (0.3, -0.35));
        }
    }

    #[test]
    fn truth_is_absent_outside_lifetime() {
        let cfg = ScenarioConfig {
            birth_step: 5,
            death_step: 20,
            ..ScenarioConfig::default()
        };
        let t = generate_truth(&cfg, 1);
        assert!(t[..4].iter().all(Option::is_none));
        assert!(t[4..20].iter().all(Option::is_some));
        assert!(t[20..].iter().all(Option::is_none));
        assert_eq!(t[4].as_ref().unwrap().as_slice(), &cfg.initial_state);
    }

    #[test]
    fn generators_are_deterministic() {
        let cfg = ScenarioConfig::default();
        assert_eq!(generate_truth(&cfg, 11), generate_truth(&cfg, 11));
        assert_ne!(generate_truth(&cfg, 11), generate_truth(&cfg, 12));
        let t = generate_truth(&cfg, 11);
        let a = generate_measurements(&t, &cfg.sensors[0], &cfg.region, 5);
        let b = generate_measurements(&t, &cfg.sensors[0], &cfg.region, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_perfect_sensor_reports_truth() {
        let cfg = ScenarioConfig::default();
        let t = generate_truth(&cfg, 2);
        let sensor = SensorConfig {
            pd_true: 1.0,
            noise_var: 0.0,
            clutter_rate: 0.0,
            seed_stream: None,
        };
        let scans = generate_measurements(&t, &sensor, &cfg.region, 9);
        for (scan, x) in scans.iter().zip(&t) {
            let x = x.as_ref().unwrap();
            assert_eq!(scan.points, vec![point(x[0], x[2])]);
        }
    }

    #[test]
    fn absent_target_gives_clutter_only() {
        let cfg = ScenarioConfig::default();
        let truth = vec![None; 200];
        let labeled = generate_labeled_measurements(&truth, &cfg.sensors[0], &cfg.region, 4);
        for l in &labeled {
            assert!(l.is_clutter.iter().all(|&c| c));
            assert!(l.scan.points.iter().all(|z| cfg.region.contains(z[0], z[1])));
        }
    }

    #[test]
    fn clutter_rate_does_not_perturb_detections() {
        let cfg = ScenarioConfig::default();
        let t = generate_truth(&cfg, 2);
        let mut s = cfg.sensors[0].clone();
        let a = generate_labeled_measurements(&t, &s, &cfg.region, 9);
        s.clutter_rate = 10.0;
        let b = generate_labeled_measurements(&t, &s, &cfg.region, 9);
        let target = |l: &LabeledScan| {
            l.scan
                .points
                .iter()
                .zip(&l.is_clutter)
                .find(|(_, &c)| !c)
                .map(|(z, _)| z.clone())
        };
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(target(x), target(y));
        }
    }

    #[test]
    fn birth_examples() {
        let b = build_birth_mixture(&Scan::new(1, vec![point(10.0, 55.0)]), &birth_cfg()).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.components()[0].mean().as_slice(), &[10.0, 0.0, 55.0, 0.0]);

        let b = build_birth_mixture(&Scan::empty(1), &birth_cfg()).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.components()[0].mean().as_slice(), &[30.0, 0.0, 30.0, 0.0]);
        assert_eq!(b.components()[0].covariance()[(0, 0)], 900.0);

        let pts = vec![point(1.0, 2.0), point(3.0, 4.0), point(5.0, 6.0)];
        let b = build_birth_mixture(&Scan::new(1, pts), &birth_cfg()).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.weights().all(|w| w == 1.0));
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig {
            birth_step: 10,
            death_step: 5,
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig {
            death_step: 60,
            ..ScenarioConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
