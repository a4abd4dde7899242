//! Gaussian possibility functions and Gaussian-max mixtures.
//!
//! A Gaussian possibility function is `exp(-½ (x-μ)ᵀ P⁻¹ (x-μ))`: Gaussian in
//! shape but sup-normalized, so it equals 1 at its mean and carries no
//! determinant prefactor. A Gaussian-max mixture is the pointwise maximum of
//! weighted Gaussian possibility functions.
//!
//! All types here are immutable values; every operation returns a new value.

use crate::error::{Error, Result};
use crate::linalg::{self, check_dim, Matrix, Vector};

/// Gaussian possibility function with a validated covariance and cached precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPossibility {
    mean: Vector,
    covariance: Matrix,
    precision: Matrix,
}

impl GaussianPossibility {
    pub fn new(mean: Vector, covariance: Matrix) -> Result<Self> {
        check_dim(mean.len(), covariance.nrows())?;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite mean".into()));
        }
        let covariance = linalg::validated_covariance(&covariance)?;
        let precision = linalg::spd_inverse(&covariance)
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        Ok(Self {
            mean,
            covariance,
            precision,
        })
    }

    /// Builds from a precision matrix and an information vector `Λ m`, the form
    /// in which fused components are naturally produced.
    fn from_information(precision: Matrix, information: Vector) -> Result<Self> {
        let precision = linalg::symmetrized(&precision)?;
        let chol = precision.clone().cholesky().ok_or(Error::SingularPrecision)?;
        let mean = chol.solve(&information);
        let covariance = chol.inverse();
        Self::new(mean, covariance)
    }

    /// Same shape, different location.
    pub fn with_mean(&self, mean: Vector) -> Result<Self> {
        check_dim(self.dim(), mean.len())?;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite mean".into()));
        }
        Ok(Self {
            mean,
            covariance: self.covariance.clone(),
            precision: self.precision.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn precision(&self) -> &Matrix {
        &self.precision
    }

    /// `(x-μ)ᵀ P⁻¹ (x-μ)`; panics only on dimension mismatch, which `eval` checks.
    pub(crate) fn mahalanobis_sq_unchecked(&self, x: &Vector) -> f64 {
        let d = x - &self.mean;
        (&self.precision * &d).dot(&d).max(0.0)
    }

    /// Natural log of the possibility value at `x`.
    pub fn log_eval(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(-0.5 * self.mahalanobis_sq_unchecked(x))
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        self.log_eval(x).map(f64::exp)
    }

    /// The possibility function raised to the power `a`: covariance `P / a`.
    fn powered(&self, a: f64) -> Self {
        Self {
            mean: self.mean.clone(),
            covariance: &self.covariance / a,
            precision: &self.precision * a,
        }
    }
}

/// Free-function form of [`GaussianPossibility::eval`].
pub fn eval_gaussian(g: &GaussianPossibility, x: &Vector) -> Result<f64> {
    g.eval(x)
}

/// A Gaussian possibility function scaled by a weight in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedComponent {
    weight: f64,
    gaussian: GaussianPossibility,
}

impl WeightedComponent {
    pub fn new(weight: f64, gaussian: GaussianPossibility) -> Result<Self> {
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidWeight(weight));
        }
        Ok(Self { weight, gaussian })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn gaussian(&self) -> &GaussianPossibility {
        &self.gaussian
    }

    pub fn mean(&self) -> &Vector {
        self.gaussian.mean()
    }

    pub fn covariance(&self) -> &Matrix {
        self.gaussian.covariance()
    }

    pub fn dim(&self) -> usize {
        self.gaussian.dim()
    }

    pub fn log_eval(&self, x: &Vector) -> Result<f64> {
        Ok(self.weight.ln() + self.gaussian.log_eval(x)?)
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        Ok(self.weight * self.gaussian.eval(x)?)
    }

    pub(crate) fn with_weight_unchecked(&self, weight: f64) -> Self {
        Self {
            weight,
            gaussian: self.gaussian.clone(),
        }
    }
}

/// Nonempty pointwise maximum of weighted Gaussian possibility functions of a
/// common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMaxMixture {
    components: Vec<WeightedComponent>,
}

/// Tolerance on `max weight == 1` for a mixture to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

impl GaussianMaxMixture {
    pub fn new(components: Vec<WeightedComponent>) -> Result<Self> {
        let first = components.first().ok_or(Error::EmptyMixture)?;
        let dim = first.dim();
        for c in &components {
            check_dim(dim, c.dim())?;
        }
        Ok(Self { components })
    }

    pub fn single(gaussian: GaussianPossibility) -> Self {
        Self {
            components: vec![WeightedComponent {
                weight: 1.0,
                gaussian,
            }],
        }
    }

    /// Builds a normalized mixture from `(log weight, gaussian)` pairs.
    ///
    /// Weights are rescaled by the largest one in log space; components whose
    /// rescaled weight falls below `floor` are dropped.
    pub(crate) fn from_log_weights(
        entries: Vec<(f64, GaussianPossibility)>,
        floor: f64,
    ) -> Result<Self> {
        let log_max = entries
            .iter()
            .map(|(lw, _)| *lw)
            .fold(f64::NEG_INFINITY, f64::max);
        if !log_max.is_finite() {
            return Err(Error::EmptyMixture);
        }
        let components = entries
            .into_iter()
            .filter_map(|(lw, gaussian)| {
                let w = if lw == log_max { 1.0 } else { (lw - log_max).exp() };
                (w >= floor && w > 0.0).then_some(WeightedComponent { weight: w, gaussian })
            })
            .collect();
        Self::new(components)
    }

    pub fn components(&self) -> &[WeightedComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().map(|c| c.weight)
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self
            .components
            .iter()
            .map(|c| c.weight * (-0.5 * c.gaussian.mahalanobis_sq_unchecked(x)).exp())
            .fold(0.0, f64::max))
    }

    /// Natural log of the mixture value, stable when every term underflows.
    pub fn log_eval(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self
            .components
            .iter()
            .map(|c| c.weight.ln() - 0.5 * c.gaussian.mahalanobis_sq_unchecked(x))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Supremum over the whole space: each weighted term peaks at its own mean
    /// with value equal to its weight, so this is the largest weight.
    pub fn supremum(&self) -> f64 {
        self.weights().fold(0.0, f64::max)
    }

    /// Index of the first component carrying the largest weight.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.components.iter().enumerate() {
            if c.weight > self.components[best].weight {
                best = i;
            }
        }
        best
    }

    pub fn is_normalized(&self) -> bool {
        (self.supremum() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Divides every weight by the supremum so the largest becomes exactly 1.
    pub fn normalize(&self) -> Self {
        let top = self.argmax();
        let sup = self.components[top].weight;
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = if i == top || c.weight == sup {
                    1.0
                } else {
                    c.weight / sup
                };
                c.with_weight_unchecked(w)
            })
            .collect();
        Self { components }
    }

    /// The mixture raised pointwise to the power `a ∈ (0, 1]`.
    pub fn power(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidExponent(a));
        }
        if a == 1.0 {
            return Ok(self.clone());
        }
        let components = self
            .components
            .iter()
            .map(|c| WeightedComponent {
                weight: (a * c.weight.ln()).exp(),
                gaussian: c.gaussian.powered(a),
            })
            .collect();
        Ok(Self { components })
    }
}

pub fn eval_mixture(m: &GaussianMaxMixture, x: &Vector) -> Result<f64> {
    m.eval(x)
}

pub fn supremum(m: &GaussianMaxMixture) -> f64 {
    m.supremum()
}

pub fn normalize(m: &GaussianMaxMixture) -> GaussianMaxMixture {
    m.normalize()
}

pub fn mixture_power(m: &GaussianMaxMixture, a: f64) -> Result<GaussianMaxMixture> {
    m.power(a)
}

/// Product `(w₁N̄₁)^e₁ (w₂N̄₂)^e₂` of two weighted components, returned as a log
/// weight and a Gaussian possibility function.
///
/// Completing the square gives precision `e₁Λ₁ + e₂Λ₂`, mean from the summed
/// information vectors, and weight `w₁^e₁ w₂^e₂ N̄(m₁ - m₂; 0, P₁/e₁ + P₂/e₂)`.
pub(crate) fn powered_product(
    c1: &WeightedComponent,
    e1: f64,
    c2: &WeightedComponent,
    e2: f64,
) -> Result<(f64, GaussianPossibility)> {
    check_dim(c1.dim(), c2.dim())?;
    let g1 = &c1.gaussian;
    let g2 = &c2.gaussian;
    let precision = g1.precision() * e1 + g2.precision() * e2;
    let information = g1.precision() * g1.mean() * e1 + g2.precision() * g2.mean() * e2;
    let fused = GaussianPossibility::from_information(precision, information)?;

    let diff = g1.mean() - g2.mean();
    let spread = g1.covariance() / e1 + g2.covariance() / e2;
    let d2 = linalg::mahalanobis_sq(&diff, &spread).ok_or(Error::SingularPrecision)?;
    let log_weight = e1 * c1.weight.ln() + e2 * c2.weight.ln() - 0.5 * d2;
    Ok((log_weight, fused))
}

fn component_from_log(log_weight: f64, gaussian: GaussianPossibility) -> Result<WeightedComponent> {
    let weight = log_weight.exp().min(1.0);
    if weight <= 0.0 {
        return Err(Error::WeightUnderflow);
    }
    WeightedComponent::new(weight, gaussian)
}

/// Chernoff combination `(w₁N̄₁)^(1-ω) (w₂N̄₂)^ω` of two components, `ω ∈ (0, 1)`.
pub fn chernoff_component_fusion(
    c1: &WeightedComponent,
    c2: &WeightedComponent,
    omega: f64,
) -> Result<WeightedComponent> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::InvalidOmega(omega));
    }
    let (lw, g) = powered_product(c1, 1.0 - omega, c2, omega)?;
    component_from_log(lw, g)
}

/// Plain product `w₁N̄₁ · w₂N̄₂` of two components.
pub fn independent_component_fusion(
    c1: &WeightedComponent,
    c2: &WeightedComponent,
) -> Result<WeightedComponent> {
    let (lw, g) = powered_product(c1, 1.0, c2, 1.0)?;
    component_from_log(lw, g)
}

/// Log of `sup_x N̄(z; Hx, R) · N̄(x; m, P)`, which is `log N̄(z; Hm, HPHᵀ + R)`.
pub fn log_sup_linear_gaussian_product(
    z: &Vector,
    h: &Matrix,
    r: &Matrix,
    prior: &GaussianPossibility,
) -> Result<f64> {
    check_dim(prior.dim(), h.ncols())?;
    check_dim(h.nrows(), z.len())?;
    check_dim(z.len(), r.nrows())?;
    check_dim(z.len(), r.ncols())?;
    let s = h * prior.covariance() * h.transpose() + r;
    let innovation = z - h * prior.mean();
    let d2 = linalg::mahalanobis_sq(&innovation, &s)
        .ok_or_else(|| Error::NotPositiveDefinite("innovation covariance".into()))?;
    Ok(-0.5 * d2)
}

pub fn sup_linear_gaussian_product(
    z: &Vector,
    h: &Matrix,
    r: &Matrix,
    prior: &GaussianPossibility,
) -> Result<f64> {
    log_sup_linear_gaussian_product(z, h, r, prior).map(f64::exp)
}
