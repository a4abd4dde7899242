//! Brute-force numerical references.
//!
//! Nothing here uses the closed-form fusion or supremum formulas: suprema come
//! from numerical maximization and pointwise values from evaluating the input
//! mixtures directly. The CLI `selftest` and the acceptance suite compare the
//! closed forms against these routines.

use rand::Rng;

use crate::bernoulli::BernoulliPossState;
use crate::error::Result;
use crate::fusion::{fuse_chernoff, fuse_independent};
use crate::linalg::{Matrix, Vector};
use crate::possibility::{GaussianMaxMixture, GaussianPossibility, WeightedComponent};

/// Maximizes `f` over the box `[lo, hi]` by a dense grid followed by repeated
/// zoomed grids around the best `starts` grid points. Returns the best value
/// and its location.
pub fn grid_maximize<F>(f: F, lo: &[f64], hi: &[f64], n: usize, levels: usize, starts: usize) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64,
{
    assert!(n >= 3 && lo.len() == hi.len() && !lo.is_empty());
    let dim = lo.len();
    let lattice = |center: &[f64], half: &[f64]| -> Vec<Vec<f64>> {
        let total = n.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                (0..dim)
                    .map(|d| {
                        let i = idx % n;
                        idx /= n;
                        center[d] - half[d] + 2.0 * half[d] * i as f64 / (n - 1) as f64
                    })
                    .collect()
            })
            .collect()
    };
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mut coarse: Vec<(f64, Vec<f64>)> = lattice(&center, &half)
        .into_iter()
        .map(|p| (f(&p), p))
        .collect();
    coarse.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best = coarse[0].clone();
    for (value, point) in coarse.into_iter().take(starts.max(1)) {
        let mut local = (value, point);
        let mut h: Vec<f64> = half.iter().map(|w| 2.0 * w / (n - 1) as f64).collect();
        for _ in 0..levels {
            for p in lattice(&local.1, &h) {
                let v = f(&p);
                if v > local.0 {
                    local = (v, p);
                }
            }
            h.iter_mut().for_each(|w| *w *= 2.0 / (n - 1) as f64);
        }
        if local.0 > best.0 {
            best = local;
        }
    }
    best
}

/// Maximizes a function whose logarithm is an exact concave quadratic, by
/// Newton iterations on finite-difference derivatives.
fn newton_max_log_quadratic<F>(log_f: F, start: &Vector) -> f64
where
    F: Fn(&Vector) -> f64,
{
    let dim = start.len();
    let mut x = start.clone();
    for _ in 0..4 {
        let h = 1e-2 * (1.0 + x.amax());
        let mut grad = Vector::zeros(dim);
        let mut hess = Matrix::zeros(dim, dim);
        let f0 = log_f(&x);
        for i in 0..dim {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let (fp, fm) = (log_f(&xp), log_f(&xm));
            grad[i] = (fp - fm) / (2.0 * h);
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let shift = |si: f64, sj: f64| {
                    let mut y = x.clone();
                    y[i] += si * h;
                    y[j] += sj * h;
                    log_f(&y)
                };
                let v = (shift(1.0, 1.0) - shift(1.0, -1.0) - shift(-1.0, 1.0) + shift(-1.0, -1.0))
                    / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        match (-hess).lu().solve(&grad) {
            Some(step) => x += step,
            None => break,
        }
    }
    log_f(&x)
}

/// Log of `sup_x [s₁(x)]^e₁ [s₂(x)]^e₂`, found numerically pair by pair.
pub fn log_sup_powered_product(s1: &GaussianMaxMixture, e1: f64, s2: &GaussianMaxMixture, e2: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for a in s1.components() {
        for b in s2.components() {
            let log_f = |x: &Vector| e1 * a.log_eval(x).unwrap() + e2 * b.log_eval(x).unwrap();
            let start = (a.mean() + b.mean()) * 0.5;
            best = best.max(newton_max_log_quadratic(log_f, &start));
        }
    }
    best
}

/// Axis-aligned box covering every component mean of both mixtures, padded by
/// `pad` standard deviations of the widest component.
pub fn covering_box(mixtures: &[&GaussianMaxMixture], pad: f64) -> (Vec<f64>, Vec<f64>) {
    let dim = mixtures[0].dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut sd = 0.0_f64;
    for m in mixtures {
        for c in m.components() {
            for d in 0..dim {
                lo[d] = lo[d].min(c.mean()[d]);
                hi[d] = hi[d].max(c.mean()[d]);
                sd = sd.max(c.covariance()[(d, d)].sqrt());
            }
        }
    }
    for d in 0..dim {
        lo[d] -= pad * sd;
        hi[d] += pad * sd;
    }
    (lo, hi)
}

/// Regular grid with `n` points per axis over a box.
pub fn grid_points(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vector> {
    let dim = lo.len();
    (0..n.pow(dim as u32))
        .map(|mut idx| {
            Vector::from_iterator(
                dim,
                (0..dim).map(|d| {
                    let i = idx % n;
                    idx /= n;
                    lo[d] + (hi[d] - lo[d]) * i as f64 / (n - 1) as f64
                }),
            )
        })
        .collect()
}

/// Largest absolute pointwise gap between a fused spatial mixture and the
/// brute-force normalized product `s₁^e₁ s₂^e₂ / sup`.
pub fn max_pointwise_gap(
    fused: &GaussianMaxMixture,
    s1: &GaussianMaxMixture,
    e1: f64,
    s2: &GaussianMaxMixture,
    e2: f64,
    points: &[Vector],
) -> f64 {
    let log_sup = log_sup_powered_product(s1, e1, s2, e2);
    points
        .iter()
        .map(|x| {
            let reference =
                (e1 * s1.log_eval(x).unwrap() + e2 * s2.log_eval(x).unwrap() - log_sup).exp();
            (fused.eval(x).unwrap() - reference).abs()
        })
        .fold(0.0, f64::max)
}

/// Random SPD matrix with eigenvalues in `[lo, hi]`.
pub fn random_spd<R: Rng>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> Matrix {
    let eig = Vector::from_fn(dim, |_, _| rng.random_range(lo..hi));
    let raw = Matrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let q = raw.qr().q();
    &q * Matrix::from_diagonal(&eig) * q.transpose()
}

/// Random normalized mixture with `1..=max_components` components, means in
/// `[-3, 3]^dim` and covariance eigenvalues in `[0.2, 2]`.
pub fn random_mixture<R: Rng>(rng: &mut R, dim: usize, max_components: usize) -> GaussianMaxMixture {
    let n = rng.random_range(1..=max_components);
    let comps = (0..n)
        .map(|i| {
            let w = if i == 0 { 1.0 } else { rng.random_range(0.05..1.0) };
            let mean = Vector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0));
            let g = GaussianPossibility::new(mean, random_spd(rng, dim, 0.2, 2.0)).unwrap();
            WeightedComponent::new(w, g).unwrap()
        })
        .collect();
    GaussianMaxMixture::new(comps).unwrap()
}

/// Random valid Bernoulli state: one of the two presence possibilities is 1.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize, max_components: usize) -> BernoulliPossState {
    let other = rng.random_range(0.01..1.0);
    let (q0, q1) = if rng.random_bool(0.5) { (other, 1.0) } else { (1.0, other) };
    BernoulliPossState::new(q0, q1, random_mixture(rng, dim, max_components)).unwrap()
}

/// Outcome of [`fusion_exactness_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub cases: usize,
    pub points_checked: usize,
    pub max_chernoff_gap: f64,
    pub max_independent_gap: f64,
    /// Largest `|log α - log sup|` between closed-form and numerical suprema.
    pub max_log_sup_gap: f64,
}

/// Random 1-D and 2-D state pairs fused at each `omega`, compared pointwise
/// with the brute-force normalized product. Half the pairs are 1-D.
pub fn fusion_exactness_suite<R: Rng>(rng: &mut R, pairs: usize, omegas: &[f64]) -> Result<ExactnessReport> {
    let mut report = ExactnessReport {
        cases: 0,
        points_checked: 0,
        max_chernoff_gap: 0.0,
        max_independent_gap: 0.0,
        max_log_sup_gap: 0.0,
    };
    for p in 0..pairs {
        let dim = if p % 2 == 0 { 1 } else { 2 };
        let a = random_state(rng, dim, 4);
        let b = random_state(rng, dim, 4);
        let (lo, hi) = covering_box(&[a.spatial(), b.spatial()], 3.0);
        let points = grid_points(&lo, &hi, if dim == 1 { 401 } else { 41 });
        for &omega in omegas {
            let fused = fuse_chernoff(&a, &b, omega)?;
            let gap = max_pointwise_gap(
                fused.state.spatial(),
                a.spatial(),
                1.0 - omega,
                b.spatial(),
                omega,
                &points,
            );
            let log_sup = log_sup_powered_product(a.spatial(), 1.0 - omega, b.spatial(), omega);
            report.max_log_sup_gap = report.max_log_sup_gap.max((fused.log_alpha - log_sup).abs());
            report.max_chernoff_gap = report.max_chernoff_gap.max(gap);
            report.cases += 1;
            report.points_checked += points.len();
        }
        let fused = fuse_independent(&a, &b)?;
        let gap = max_pointwise_gap(fused.state.spatial(), a.spatial(), 1.0, b.spatial(), 1.0, &points);
        report.max_independent_gap = report.max_independent_gap.max(gap);
    }
    Ok(report)
}

/// OSPA by enumerating every injective assignment of the smaller set into the
/// larger one.
pub fn ospa_by_permutation(x: &[Vec<f64>], y: &[Vec<f64>], cutoff: f64, order: f64) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let d = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
            .min(cutoff)
            .powf(order)
    };
    fn search(
        row: usize,
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
        small: &[Vec<f64>],
        large: &[Vec<f64>],
        d: &dyn Fn(&[f64], &[f64]) -> f64,
    ) {
        if row == small.len() {
            *best = best.min(acc);
            return;
        }
        for col in 0..large.len() {
            if !used[col] {
                used[col] = true;
                search(row + 1, used, acc + d(&small[row], &large[col]), best, small, large, d);
                used[col] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    search(0, &mut vec![false; n], 0.0, &mut best, small, large, &d);
    let card = cutoff.powf(order) * (n - small.len()) as f64;
    ((best + card) / n as f64).powf(1.0 / order)
}
