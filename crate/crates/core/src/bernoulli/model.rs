use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidPossibility { name, value })
    }
}

fn check_row_max(name: &'static str, a: f64, b: f64) -> Result<()> {
    let m = a.max(b);
    if (m - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPossibility { name, value: m });
    }
    Ok(())
}

/// Two-state possibilistic Markov chain for target absence (0) / presence (1).
///
/// `tau_ij` is the possibility of moving from state `i` to state `j`; each row
/// has maximum 1. Serialized as the row-major matrix `[[τ00, τ01], [τ10, τ11]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct TransitionPossibilityMatrix {
    pub tau00: f64,
    pub tau01: f64,
    pub tau10: f64,
    pub tau11: f64,
}

impl TransitionPossibilityMatrix {
    pub fn new(tau00: f64, tau01: f64, tau10: f64, tau11: f64) -> Result<Self> {
        check_unit("tau00", tau00)?;
        check_unit("tau01", tau01)?;
        check_unit("tau10", tau10)?;
        check_unit("tau11", tau11)?;
        check_row_max("max(tau00, tau01)", tau00, tau01)?;
        check_row_max("max(tau10, tau11)", tau10, tau11)?;
        Ok(Self {
            tau00,
            tau01,
            tau10,
            tau11,
        })
    }
}

impl Default for TransitionPossibilityMatrix {
    fn default() -> Self {
        Self {
            tau00: 1.0,
            tau01: 0.01,
            tau10: 0.01,
            tau11: 1.0,
        }
    }
}

impl TryFrom<[[f64; 2]; 2]> for TransitionPossibilityMatrix {
    type Error = Error;

    fn try_from(m: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }
}

impl From<TransitionPossibilityMatrix> for [[f64; 2]; 2] {
    fn from(t: TransitionPossibilityMatrix) -> Self {
        [[t.tau00, t.tau01], [t.tau10, t.tau11]]
    }
}

/// Binary possibility assignment over {not detected, detected}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPossibility {
    pub d_nondetect: f64,
    pub d_detect: f64,
}

impl DetectionPossibility {
    pub fn new(d_nondetect: f64, d_detect: f64) -> Result<Self> {
        for (name, v) in [("d_nondetect", d_nondetect), ("d_detect", d_detect)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidPossibility { name, value: v });
            }
        }
        check_row_max("max(d_nondetect, d_detect)", d_nondetect, d_detect)?;
        Ok(Self {
            d_nondetect,
            d_detect,
        })
    }
}

/// Converts a detection probability known only to lie in `[lo, hi]` into a
/// possibility assignment: `d¹ = hi`, `d⁰ = 1 - lo`, then both divided by their
/// maximum.
pub fn probability_interval_to_possibility(lo: f64, hi: f64) -> Result<DetectionPossibility> {
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let d1 = hi;
    let d0 = 1.0 - lo;
    let top = d0.max(d1);
    if top <= 0.0 {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let scale = |v: f64| if v == top { 1.0 } else { v / top };
    DetectionPossibility::new(scale(d0), scale(d1)).map_err(|_| Error::InvalidInterval { lo, hi })
}

/// Linear motion `x_k = F x_{k-1}` with process-deviation matrix `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    f: Matrix,
    q: Matrix,
}

impl MotionModel {
    pub fn new(f: Matrix, q: Matrix) -> Result<Self> {
        if !f.is_square() {
            return Err(Error::Config("transition matrix must be square".into()));
        }
        linalg::check_dim(f.nrows(), q.nrows())?;
        let q = linalg::validated_psd(&q)?;
        Ok(Self { f, q })
    }

    /// Nearly-constant-velocity model on the state `[x, ẋ, y, ẏ]`.
    pub fn constant_velocity(dt: f64, psd: f64) -> Result<Self> {
        Self::new(cv_transition(dt), cv_process_noise(dt, psd))
    }

    pub fn f(&self) -> &Matrix {
        &self.f
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }
}

pub fn cv_transition(dt: f64) -> Matrix {
    #[rustfmt::skip]
    let f = Matrix::from_row_slice(4, 4, &[
        1.0, dt,  0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, dt,
        0.0, 0.0, 0.0, 1.0,
    ]);
    f
}

pub fn cv_process_noise(dt: f64, psd: f64) -> Matrix {
    let a = dt.powi(3) / 3.0;
    let b = dt.powi(2) / 2.0;
    #[rustfmt::skip]
    let q = Matrix::from_row_slice(4, 4, &[
        a,   b,   0.0, 0.0,
        b,   dt,  0.0, 0.0,
        0.0, 0.0, a,   b,
        0.0, 0.0, b,   dt,
    ]);
    q * psd
}

/// Axis-aligned rectangle in measurement space (km).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("empty region {self:?}")))
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }
}

impl Default for Region {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 60.0,
            y_min: 0.0,
            y_max: 60.0,
        }
    }
}

/// Linear-Gaussian point measurements with Poisson clutter uniform over `region`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    h: Matrix,
    r: Matrix,
    clutter_rate: f64,
    region: Region,
}

impl MeasurementModel {
    pub fn new(h: Matrix, r: Matrix, clutter_rate: f64, region: Region) -> Result<Self> {
        linalg::check_dim(h.nrows(), r.nrows())?;
        let r = linalg::validated_covariance(&r)?;
        if !(clutter_rate > 0.0 && clutter_rate.is_finite()) {
            return Err(Error::Config(format!(
                "clutter rate must be positive, got {clutter_rate}"
            )));
        }
        region.validate()?;
        Ok(Self {
            h,
            r,
            clutter_rate,
            region,
        })
    }

    /// Position-only observation of `[x, ẋ, y, ẏ]` with noise `noise_var · I`.
    pub fn position(noise_var: f64, clutter_rate: f64, region: Region) -> Result<Self> {
        Self::new(
            position_observation(),
            Matrix::identity(2, 2) * noise_var,
            clutter_rate,
            region,
        )
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn clutter_rate(&self) -> f64 {
        self.clutter_rate
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Uniform clutter spatial density `c(z) = 1 / area`.
    pub fn clutter_density(&self) -> f64 {
        1.0 / self.region.area()
    }

    /// `1 / (λ c(z))`, the factor a detection hypothesis gains over clutter.
    pub fn clutter_ratio(&self) -> f64 {
        1.0 / (self.clutter_rate * self.clutter_density())
    }

    pub fn measurement_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }
}

pub fn position_observation() -> Matrix {
    #[rustfmt::skip]
    let h = Matrix::from_row_slice(2, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
    ]);
    h
}

/// Prune / merge / cap settings for mixture reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionConfig {
    pub prune_ratio: f64,
    pub merge_mahalanobis: f64,
    pub max_components: usize,
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.prune_ratio) {
            return Err(Error::Config(format!(
                "prune_ratio must be in [0, 1), got {}",
                self.prune_ratio
            )));
        }
        if !(self.merge_mahalanobis > 0.0) {
            return Err(Error::Config(format!(
                "merge_mahalanobis must be positive, got {}",
                self.merge_mahalanobis
            )));
        }
        if self.max_components == 0 {
            return Err(Error::Config("max_components must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            prune_ratio: 1e-3,
            merge_mahalanobis: 2.0,
            max_components: 100,
        }
    }
}

/// The finite set of point measurements one sensor reports at one time step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scan {
    pub time_index: usize,
    pub points: Vec<Vector>,
}

impl Scan {
    pub fn new(time_index: usize, points: Vec<Vector>) -> Self {
        Self { time_index, points }
    }

    pub fn empty(time_index: usize) -> Self {
        Self {
            time_index,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Converts a 2-D point to a measurement vector.
pub fn point(x: f64, y: f64) -> Vector {
    Vector::from_vec(vec![x, y])
}
