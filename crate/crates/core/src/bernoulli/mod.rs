//! Bernoulli Gaussian-max filter: possibilistic presence/absence recursion with
//! a Gaussian-max spatial mixture.

mod filter;
mod model;
mod reduce;

pub use filter::{
    compute_theta, extract, predict, update, BernoulliPossState, Estimate, WEIGHT_FLOOR,
};
pub use model::{
    cv_process_noise, cv_transition, point, position_observation,
    probability_interval_to_possibility, DetectionPossibility, MeasurementModel, MotionModel,
    ReductionConfig, Region, Scan, TransitionPossibilityMatrix,
};
pub use reduce::reduce;

use crate::error::Result;
use crate::possibility::GaussianMaxMixture;

/// The fixed models of one filter, bundled for running the full recursion.
#[derive(Debug, Clone)]
pub struct BernoulliGmf {
    pub motion: MotionModel,
    pub transition: TransitionPossibilityMatrix,
    pub measurement: MeasurementModel,
    pub detection: DetectionPossibility,
    pub reduction: ReductionConfig,
}

/// Intermediate states of one filter cycle.
#[derive(Debug, Clone)]
pub struct Cycle {
    pub predicted: BernoulliPossState,
    pub updated: BernoulliPossState,
}

impl BernoulliGmf {
    /// Predict with `birth`, update with `scan`, then reduce the posterior mixture.
    pub fn step(
        &self,
        state: &BernoulliPossState,
        birth: &GaussianMaxMixture,
        scan: &Scan,
    ) -> Result<Cycle> {
        let predicted = predict(state, &self.motion, &self.transition, birth)?;
        let updated = update(&predicted, scan, &self.measurement, &self.detection)?;
        let reduced = reduce(updated.spatial(), &self.reduction)?;
        Ok(Cycle {
            predicted,
            updated: updated.with_spatial(reduced),
        })
    }
}
