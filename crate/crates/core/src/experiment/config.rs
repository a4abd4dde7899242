use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bernoulli::{
    probability_interval_to_possibility, BernoulliGmf, MeasurementModel, MotionModel,
    ReductionConfig, TransitionPossibilityMatrix,
};
use crate::error::{Error, Result};
use crate::fusion::OmegaStrategy;
use crate::metrics::{OspaParams, TraceKind};
use crate::simulator::{BirthConfig, ScenarioConfig, SensorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthParams {
    /// Position variance of measurement-seeded components; defaults to the
    /// sensor noise variance plus 1 km².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_var: Option<f64>,
    pub velocity_var: f64,
}

impl Default for BirthParams {
    fn default() -> Self {
        Self {
            position_var: None,
            velocity_var: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    /// Interval `[lo, hi]` known to contain the detection probability.
    pub detection_interval: [f64; 2],
    pub transition: TransitionPossibilityMatrix,
    pub reduction: ReductionConfig,
    pub birth: BirthParams,
    /// Clutter rate assumed by the filter; defaults to the sensor's true rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter_rate: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            detection_interval: [0.5, 1.0],
            transition: TransitionPossibilityMatrix::default(),
            reduction: ReductionConfig::default(),
            birth: BirthParams::default(),
            clutter_rate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    Chernoff,
    Independent,
    #[default]
    Both,
}

impl FusionMode {
    pub fn chernoff(self) -> bool {
        matches!(self, FusionMode::Chernoff | FusionMode::Both)
    }

    pub fn independent(self) -> bool {
        matches!(self, FusionMode::Independent | FusionMode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    pub mode: FusionMode,
    pub omega_strategy: OmegaStrategy,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub ospa: OspaParams,
    pub trace: TraceKind,
}

/// Full parameterization of one experiment invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub filter: FilterConfig,
    pub fusion: FusionConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    pub runs: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            filter: FilterConfig::default(),
            fusion: FusionConfig::default(),
            metrics: MetricsConfig::default(),
            runs: 200,
            master_seed: 1,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document; errors name the offending field path.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |field: &'static str| move |e: Error| Error::Config(format!("at `{field}`: {e}"));
        self.scenario.validate().map_err(ctx("scenario"))?;
        let [lo, hi] = self.filter.detection_interval;
        probability_interval_to_possibility(lo, hi).map_err(ctx("filter.detection_interval"))?;
        self.filter.reduction.validate().map_err(ctx("filter.reduction"))?;
        if !(self.filter.birth.velocity_var > 0.0) {
            return Err(Error::Config("at `filter.birth.velocity_var`: must be positive".into()));
        }
        if let Some(v) = self.filter.birth.position_var {
            if !(v > 0.0) {
                return Err(Error::Config("at `filter.birth.position_var`: must be positive".into()));
            }
        }
        self.fusion.omega_strategy.validate().map_err(ctx("fusion.omega_strategy"))?;
        self.metrics.ospa.validate().map_err(ctx("metrics.ospa"))?;
        if self.runs == 0 {
            return Err(Error::Config("at `runs`: must be at least 1".into()));
        }
        for (i, s) in self.scenario.sensors.iter().enumerate() {
            self.filter_for(s)
                .map_err(|e| Error::Config(format!("at `scenario.sensors[{i}]`: {e}")))?;
        }
        Ok(())
    }

    /// Filter models matched to one sensor.
    pub fn filter_for(&self, sensor: &SensorConfig) -> Result<SensorFilter> {
        let [lo, hi] = self.filter.detection_interval;
        let clutter_rate = self.filter.clutter_rate.unwrap_or(sensor.clutter_rate);
        if !(clutter_rate > 0.0) {
            return Err(Error::Config(
                "filter clutter rate must be positive; set filter.clutter_rate when the sensor has none"
                    .into(),
            ));
        }
        if !(sensor.noise_var > 0.0) {
            return Err(Error::Config("filter needs a positive noise_var".into()));
        }
        let model = BernoulliGmf {
            motion: MotionModel::constant_velocity(self.scenario.dt, self.scenario.psd)?,
            transition: self.filter.transition,
            measurement: MeasurementModel::position(
                sensor.noise_var,
                clutter_rate,
                self.scenario.region,
            )?,
            detection: probability_interval_to_possibility(lo, hi)?,
            reduction: self.filter.reduction,
        };
        let birth = BirthConfig {
            position_var: self.filter.birth.position_var.unwrap_or(sensor.noise_var + 1.0),
            velocity_var: self.filter.birth.velocity_var,
            region: self.scenario.region,
        };
        Ok(SensorFilter { model, birth })
    }
}

/// A filter's models together with its birth construction.
#[derive(Debug, Clone)]
pub struct SensorFilter {
    pub model: BernoulliGmf,
    pub birth: BirthConfig,
}
