//! Chernoff and independent-product fusion of two Bernoulli possibilistic states.
//!
//! Fusing the spatial mixtures pairs every component of one input with every
//! component of the other; because a power of a max is the max of the powers
//! and a product of Gaussian possibility functions is again one (up to a
//! weight), the fused mixture is the exact normalized pointwise product. No
//! moment-matching approximation is involved.
//!
//! The fused mixture is returned unreduced. Callers that fuse repeatedly should
//! pass it through [`crate::bernoulli::reduce`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{BernoulliPossState, WEIGHT_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::check_dim;
use crate::possibility::{powered_product, GaussianMaxMixture, GaussianPossibility};

/// Output of a fusion rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub state: BernoulliPossState,
    /// Largest of the absence and presence numerators (R for Chernoff, G for
    /// the independent product).
    pub normalizer: f64,
    /// Supremum of the unnormalized fused spatial mixture (its largest cross weight).
    pub alpha: f64,
    pub log_normalizer: f64,
    pub log_alpha: f64,
}

impl FusionResult {
    fn passthrough(state: &BernoulliPossState) -> Self {
        Self {
            state: state.clone(),
            normalizer: 1.0,
            alpha: 1.0,
            log_normalizer: 0.0,
            log_alpha: 0.0,
        }
    }
}

fn weighted_log(e: f64, v: f64) -> f64 {
    // 0 · ln 0 never occurs: exponents here are strictly positive
    e * v.ln()
}

fn fuse_with_exponents(
    a: &BernoulliPossState,
    ea: f64,
    b: &BernoulliPossState,
    eb: f64,
) -> Result<FusionResult> {
    check_dim(a.dim(), b.dim())?;
    let mut entries: Vec<(f64, GaussianPossibility)> =
        Vec::with_capacity(a.spatial().len() * b.spatial().len());
    for cb in b.spatial().components() {
        for ca in a.spatial().components() {
            entries.push(powered_product(ca, ea, cb, eb)?);
        }
    }
    let log_alpha = entries
        .iter()
        .map(|(lw, _)| *lw)
        .fold(f64::NEG_INFINITY, f64::max);
    let spatial = GaussianMaxMixture::from_log_weights(entries, WEIGHT_FLOOR)?;

    let log_absent = weighted_log(ea, a.q_absent()) + weighted_log(eb, b.q_absent());
    let log_present =
        weighted_log(ea, a.q_present()) + weighted_log(eb, b.q_present()) + log_alpha;
    let log_normalizer = log_absent.max(log_present);
    if log_normalizer == f64::NEG_INFINITY {
        return Err(Error::TotalConflict);
    }
    let ratio = |l: f64| {
        if l == log_normalizer {
            1.0
        } else {
            (l - log_normalizer).exp()
        }
    };
    let state = BernoulliPossState::new(ratio(log_absent), ratio(log_present), spatial)?;
    Ok(FusionResult {
        state,
        normalizer: log_normalizer.exp(),
        alpha: log_alpha.exp(),
        log_normalizer,
        log_alpha,
    })
}

/// Chernoff fusion `f_a^(1-ω) f_b^ω / sup`. At `ω = 0` (resp. 1) the first
/// (resp. second) input is returned unchanged.
pub fn fuse_chernoff(
    a: &BernoulliPossState,
    b: &BernoulliPossState,
    omega: f64,
) -> Result<FusionResult> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidOmega(omega));
    }
    check_dim(a.dim(), b.dim())?;
    if omega == 0.0 {
        return Ok(FusionResult::passthrough(a));
    }
    if omega == 1.0 {
        return Ok(FusionResult::passthrough(b));
    }
    fuse_with_exponents(a, 1.0 - omega, b, omega)
}

/// Normalized product `f_a f_b / sup`, valid for conditionally independent sources.
pub fn fuse_independent(a: &BernoulliPossState, b: &BernoulliPossState) -> Result<FusionResult> {
    fuse_with_exponents(a, 1.0, b, 1.0)
}

/// How the Chernoff exponent ω is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaStrategy {
    Fixed(f64),
    /// Grid search minimizing the trace of the fused top-component covariance.
    MinTrace,
}

impl Default for OmegaStrategy {
    fn default() -> Self {
        OmegaStrategy::Fixed(0.5)
    }
}

impl OmegaStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OmegaStrategy::Fixed(v) if !(0.0..=1.0).contains(&v) => Err(Error::InvalidOmega(v)),
            _ => Ok(()),
        }
    }
}

/// The grid `{0.05, 0.10, ..., 0.95}` searched by [`OmegaStrategy::MinTrace`].
pub fn default_omega_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

pub fn select_omega(
    a: &BernoulliPossState,
    b: &BernoulliPossState,
    strategy: OmegaStrategy,
) -> Result<f64> {
    match strategy {
        OmegaStrategy::Fixed(v) => {
            strategy.validate()?;
            Ok(v)
        }
        OmegaStrategy::MinTrace => min_trace_omega(a, b, &default_omega_grid()),
    }
}

/// Grid point minimizing the fused top-component covariance trace; among
/// (relative 1e-12) ties the point nearest 0.5 wins.
pub fn min_trace_omega(a: &BernoulliPossState, b: &BernoulliPossState, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Config("empty omega grid".into()));
    }
    let traces: Vec<f64> = grid
        .par_iter()
        .map(|&w| {
            let fused = fuse_chernoff(a, b, w)?;
            let spatial = fused.state.spatial();
            Ok(spatial.components()[spatial.argmax()].covariance().trace())
        })
        .collect::<Result<_>>()?;
    let best = traces.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * best.abs().max(f64::MIN_POSITIVE);
    let mut chosen = None::<f64>;
    for (&w, &t) in grid.iter().zip(&traces) {
        if t - best <= tol {
            chosen = match chosen {
                Some(c) if (c - 0.5).abs() <= (w - 0.5).abs() => Some(c),
                _ => Some(w),
            };
        }
    }
    Ok(chosen.expect("nonempty grid has a minimum"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};
    use crate::possibility::WeightedComponent;

    fn single(q0: f64, q1: f64, mean: f64, var: f64) -> BernoulliPossState {
        let g = GaussianPossibility::new(
            Vector::from_element(1, mean),
            Matrix::from_element(1, 1, var),
        )
        .unwrap();
        BernoulliPossState::new(q0, q1, GaussianMaxMixture::single(g)).unwrap()
    }

    #[test]
    fn chernoff_hand_example() {
        let a = single(0.5, 1.0, 0.0, 1.0);
        let b = single(0.5, 1.0, 2.0, 1.0);
        let r = fuse_chernoff(&a, &b, 0.5).unwrap();
        let top = &r.state.spatial().components()[0];
        assert!((top.mean()[0] - 1.0).abs() < 1e-14);
        assert!((top.covariance()[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((r.alpha - (-0.5f64).exp()).abs() < 1e-15);
        assert!((r.state.q_absent() - 0.5 / (-0.5f64).exp()).abs() < 1e-14);
        assert!((r.state.q_absent() - 0.8244).abs() < 1e-4);
        assert_eq!(r.state.q_present(), 1.0);
    }

    #[test]
    fn endpoints_return_inputs() {
        let a = single(0.5, 1.0, 0.0, 1.0);
        let b = single(1.0, 0.2, 3.0, 2.0);
        assert_eq!(fuse_chernoff(&a, &b, 0.0).unwrap().state, a);
        assert_eq!(fuse_chernoff(&a, &b, 1.0).unwrap().state, b);
        assert_eq!(fuse_chernoff(&a, &b, 1.5), Err(Error::InvalidOmega(1.5)));
        assert!(fuse_chernoff(&a, &b, f64::NAN).is_err());
    }

    #[test]
    fn independent_hand_example() {
        let a = single(0.5, 1.0, 3.0, 2.0);
        let r = fuse_independent(&a, &a).unwrap();
        let top = &r.state.spatial().components()[0];
        assert!((top.covariance()[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.state.q_absent(), 0.25);
        assert_eq!(r.state.q_present(), 1.0);
    }

    #[test]
    fn absence_dominates_when_sources_disagree() {
        let a = single(1.0, 1e-3, 0.0, 1.0);
        let b = single(0.5, 1.0, 100.0, 1.0);
        let r = fuse_independent(&a, &b).unwrap();
        assert_eq!(r.state.q_absent(), 1.0);
        assert!(r.state.q_present() < 1e-100);
    }

    #[test]
    fn total_conflict_is_reported() {
        let a = single(0.0, 1.0, 0.0, 1.0);
        let b = single(1.0, 0.0, 0.0, 1.0);
        assert_eq!(fuse_independent(&a, &b), Err(Error::TotalConflict));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = single(1.0, 1.0, 0.0, 1.0);
        let g = GaussianPossibility::new(Vector::zeros(2), Matrix::identity(2, 2)).unwrap();
        let b = BernoulliPossState::new(1.0, 1.0, GaussianMaxMixture::single(g)).unwrap();
        assert!(matches!(
            fuse_chernoff(&a, &b, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(fuse_independent(&a, &b).is_err());
    }

    #[test]
    fn cross_component_order_is_column_major() {
        let comps = |means: &[f64]| {
            GaussianMaxMixture::new(
                means
                    .iter()
                    .map(|&m| {
                        let g = GaussianPossibility::new(
                            Vector::from_element(1, m),
                            Matrix::from_element(1, 1, 1.0),
                        )
                        .unwrap();
                        WeightedComponent::new(1.0, g).unwrap()
                    })
                    .collect(),
            )
            .unwrap()
        };
        let a = BernoulliPossState::new(1.0, 1.0, comps(&[0.0, 1.0])).unwrap();
        let b = BernoulliPossState::new(1.0, 1.0, comps(&[10.0, 11.0])).unwrap();
        let r = fuse_independent(&a, &b).unwrap();
        let means: Vec<f64> = r.state.spatial().components().iter().map(|c| c.mean()[0]).collect();
        for (got, want) in means.iter().zip([5.0, 5.5, 5.5, 6.0]) {
            assert!((got - want).abs() < 1e-12, "{means:?}");
        }
    }

    #[test]
    fn omega_selection() {
        let a = single(1.0, 1.0, 0.0, 1.0);
        let b = single(1.0, 1.0, 0.0, 4.0);
        assert_eq!(select_omega(&a, &b, OmegaStrategy::Fixed(0.5)).unwrap(), 0.5);
        assert!(select_omega(&a, &b, OmegaStrategy::Fixed(2.0)).is_err());
        assert_eq!(select_omega(&a, &a, OmegaStrategy::MinTrace).unwrap(), 0.5);
        assert_eq!(select_omega(&a, &b, OmegaStrategy::MinTrace).unwrap(), 0.05);
        assert!(min_trace_omega(&a, &b, &[]).is_err());
    }

    #[test]
    fn strategy_serde() {
        let s: OmegaStrategy = serde_json::from_str(r#"{"fixed": 0.3}"#).unwrap();
        assert_eq!(s, OmegaStrategy::Fixed(0.3));
        let s: OmegaStrategy = serde_json::from_str(r#""min_trace""#).unwrap();
        assert_eq!(s, OmegaStrategy::MinTrace);
    }
}
