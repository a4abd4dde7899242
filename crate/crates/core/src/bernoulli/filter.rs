use crate::error::{Error, Result};
use crate::linalg::{self, check_dim, Matrix, Vector};
use crate::possibility::{GaussianMaxMixture, GaussianPossibility, NORMALIZATION_TOL};

use super::model::{DetectionPossibility, MeasurementModel, MotionModel, Scan, TransitionPossibilityMatrix};

/// Detection components whose normalized weight falls below this are dropped.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// Posterior of a possibly-absent single target: absence / presence
/// possibilities and the spatial Gaussian-max mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliPossState {
    q_absent: f64,
    q_present: f64,
    spatial: GaussianMaxMixture,
}

impl BernoulliPossState {
    pub fn new(q_absent: f64, q_present: f64, spatial: GaussianMaxMixture) -> Result<Self> {
        for (name, v) in [("q_absent", q_absent), ("q_present", q_present)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidPossibility { name, value: v });
            }
        }
        let top = q_absent.max(q_present);
        if (top - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPossibility {
                name: "max(q_absent, q_present)",
                value: top,
            });
        }
        if !spatial.is_normalized() {
            return Err(Error::InvalidPossibility {
                name: "spatial supremum",
                value: spatial.supremum(),
            });
        }
        Ok(Self {
            q_absent,
            q_present,
            spatial,
        })
    }

    /// Total ignorance about presence (`q⁰ = q¹ = 1`) with the given spatial mixture.
    pub fn ignorant(spatial: GaussianMaxMixture) -> Self {
        Self {
            q_absent: 1.0,
            q_present: 1.0,
            spatial: spatial.normalize(),
        }
    }

    pub fn q_absent(&self) -> f64 {
        self.q_absent
    }

    pub fn q_present(&self) -> f64 {
        self.q_present
    }

    pub fn spatial(&self) -> &GaussianMaxMixture {
        &self.spatial
    }

    pub fn dim(&self) -> usize {
        self.spatial.dim()
    }

    pub fn with_spatial(&self, spatial: GaussianMaxMixture) -> Self {
        Self {
            q_absent: self.q_absent,
            q_present: self.q_present,
            spatial: spatial.normalize(),
        }
    }

    /// Both normalization invariants hold within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.q_absent.max(self.q_present) - 1.0).abs() <= tol
            && (self.spatial.supremum() - 1.0).abs() <= tol
    }
}

/// Divides the pair by its maximum so the larger entry is exactly 1.
pub(crate) fn normalize_pair(a: f64, b: f64) -> (f64, f64) {
    if a >= b {
        (1.0, if a == b { 1.0 } else { b / a })
    } else {
        (a / b, 1.0)
    }
}

/// Prediction of presence/absence and of the spatial mixture.
pub fn predict(
    state: &BernoulliPossState,
    motion: &MotionModel,
    phi: &TransitionPossibilityMatrix,
    birth: &GaussianMaxMixture,
) -> Result<BernoulliPossState> {
    check_dim(state.dim(), motion.dim())?;
    check_dim(state.dim(), birth.dim())?;
    let q0 = state.q_absent;
    let q1 = state.q_present;

    let birth_scale = phi.tau01 * q0;
    let survive_scale = phi.tau11 * q1;
    let q0_pred = (phi.tau00 * q0).max(phi.tau10 * q1);
    let q1_pred = birth_scale.max(survive_scale);

    let f = motion.f();
    let ft = f.transpose();
    let mut entries: Vec<(f64, GaussianPossibility)> =
        Vec::with_capacity(birth.len() + state.spatial.len());

    let survive_active = survive_scale > 0.0 || q1_pred == 0.0;
    if survive_active {
        let log_scale = if q1_pred > 0.0 {
            survive_scale.ln() - q1_pred.ln()
        } else {
            0.0
        };
        for c in state.spatial.components() {
            let mean = f * c.mean();
            let cov = motion.q() + f * c.covariance() * &ft;
            entries.push((log_scale + c.weight().ln(), GaussianPossibility::new(mean, cov)?));
        }
    }
    if birth_scale > 0.0 {
        let log_scale = birth_scale.ln() - q1_pred.ln();
        for c in birth.components() {
            entries.push((log_scale + c.weight().ln(), c.gaussian().clone()));
        }
    }
    let spatial = GaussianMaxMixture::from_log_weights(entries, 0.0)?;
    let (q_absent, q_present) = normalize_pair(q0_pred, q1_pred);
    Ok(BernoulliPossState {
        q_absent,
        q_present,
        spatial,
    })
}

/// Per-component innovation quantities `η = Hm`, `S = HPHᵀ + R`, `K = PHᵀS⁻¹`.
struct Innovation {
    predicted: Vector,
    s_inv: Matrix,
    gain: Matrix,
    covariance: Matrix,
}

impl Innovation {
    fn new(g: &GaussianPossibility, meas: &MeasurementModel) -> Result<Self> {
        let h = meas.h();
        let ph_t = g.covariance() * h.transpose();
        let s = h * &ph_t + meas.r();
        let s_inv = linalg::spd_inverse(&s)
            .ok_or_else(|| Error::NotPositiveDefinite("innovation covariance".into()))?;
        let gain = &ph_t * &s_inv;
        let covariance = g.covariance() - &gain * ph_t.transpose();
        Ok(Self {
            predicted: h * g.mean(),
            s_inv,
            gain,
            covariance,
        })
    }

    fn log_likelihood(&self, z: &Vector) -> f64 {
        let d = z - &self.predicted;
        -0.5 * (&self.s_inv * &d).dot(&d).max(0.0)
    }
}

/// Log weights (before division by θ) of every detection hypothesis, indexed by
/// component then measurement.
fn detection_log_weights(
    pred: &BernoulliPossState,
    scan: &Scan,
    meas: &MeasurementModel,
    det: &DetectionPossibility,
    innovations: &[Innovation],
) -> Vec<Vec<f64>> {
    let base = det.d_detect.ln() + meas.clutter_ratio().ln();
    pred.spatial
        .components()
        .iter()
        .zip(innovations)
        .map(|(c, inn)| {
            let lw = base + c.weight().ln();
            scan.points.iter().map(|z| lw + inn.log_likelihood(z)).collect()
        })
        .collect()
}

fn innovations(pred: &BernoulliPossState, meas: &MeasurementModel) -> Result<Vec<Innovation>> {
    check_dim(pred.dim(), meas.state_dim())?;
    pred.spatial
        .components()
        .iter()
        .map(|c| Innovation::new(c.gaussian(), meas))
        .collect()
}

fn log_theta(det: &DetectionPossibility, detection: &[Vec<f64>]) -> f64 {
    detection
        .iter()
        .flatten()
        .copied()
        .fold(det.d_nondetect.ln(), f64::max)
}

fn check_scan(scan: &Scan, meas: &MeasurementModel) -> Result<()> {
    for z in &scan.points {
        check_dim(meas.measurement_dim(), z.len())?;
    }
    Ok(())
}

/// The update normalizer
/// `θ = max{d⁰, d¹ max_z [max_i wᵢ sup_x N̄(z; Hx, R) N̄(x; mᵢ, Pᵢ)] / (λ c(z))}`.
pub fn compute_theta(
    pred: &BernoulliPossState,
    scan: &Scan,
    meas: &MeasurementModel,
    det: &DetectionPossibility,
) -> Result<f64> {
    check_scan(scan, meas)?;
    let inn = innovations(pred, meas)?;
    Ok(log_theta(det, &detection_log_weights(pred, scan, meas, det, &inn)).exp())
}

/// Measurement update. The posterior mixture holds one non-detection component
/// per predicted component and one detection component per
/// (component, measurement) pair, all divided by θ.
pub fn update(
    pred: &BernoulliPossState,
    scan: &Scan,
    meas: &MeasurementModel,
    det: &DetectionPossibility,
) -> Result<BernoulliPossState> {
    check_scan(scan, meas)?;
    let inn = innovations(pred, meas)?;
    let detection = detection_log_weights(pred, scan, meas, det, &inn);
    let log_theta = log_theta(det, &detection);

    let n = pred.spatial.len();
    let mut entries: Vec<(f64, GaussianPossibility)> = Vec::with_capacity(n * (scan.len() + 1));
    let nd = det.d_nondetect.ln() - log_theta;
    for c in pred.spatial.components() {
        entries.push((nd + c.weight().ln(), c.gaussian().clone()));
    }
    for ((c, i), row) in pred.spatial.components().iter().zip(&inn).zip(&detection) {
        let mut posterior: Option<GaussianPossibility> = None;
        for (z, lw) in scan.points.iter().zip(row) {
            let lw = lw - log_theta;
            if lw.exp() < WEIGHT_FLOOR {
                continue;
            }
            let template = match &posterior {
                Some(g) => g,
                None => posterior.insert(GaussianPossibility::new(
                    c.mean().clone(),
                    i.covariance.clone(),
                )?),
            };
            let mean = c.mean() + &i.gain * (z - &i.predicted);
            entries.push((lw, template.with_mean(mean)?));
        }
    }
    let spatial = GaussianMaxMixture::from_log_weights(entries, WEIGHT_FLOOR)?;

    let theta = log_theta.exp();
    let (q_absent, q_present) = normalize_pair(pred.q_absent, theta * pred.q_present);
    Ok(BernoulliPossState {
        q_absent,
        q_present,
        spatial,
    })
}

/// Point estimate reported by [`extract`].
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub mean: Vector,
    pub covariance: Matrix,
}

impl Estimate {
    /// Measurement-space position `(x, y)` of a `[x, ẋ, y, ẏ]` state.
    pub fn position(&self) -> [f64; 2] {
        [self.mean[0], self.mean[2]]
    }
}

/// Mean and covariance of the heaviest component when presence is strictly
/// more possible than absence.
pub fn extract(state: &BernoulliPossState) -> Option<Estimate> {
    if state.q_present <= state.q_absent {
        return None;
    }
    let top = &state.spatial.components()[state.spatial.argmax()];
    Some(Estimate {
        mean: top.mean().clone(),
        covariance: top.covariance().clone(),
    })
}
