use crate::error::Result;
use crate::linalg::{Matrix, Vector};
use crate::possibility::{GaussianMaxMixture, GaussianPossibility, WeightedComponent};

use super::model::ReductionConfig;

/// Prune, merge and cap a Gaussian-max mixture.
///
/// Components below `prune_ratio` times the largest weight are dropped. The
/// survivors are visited in descending weight order; each unvisited leader
/// absorbs every remaining component within `merge_mahalanobis` of it (measured
/// with the leader's covariance). A merged component keeps the leader's weight
/// (the maximum of the cluster) and the weight-proportional moment-matched mean
/// and covariance. At most `max_components` clusters are kept.
pub fn reduce(m: &GaussianMaxMixture, cfg: &ReductionConfig) -> Result<GaussianMaxMixture> {
    let sup = m.supremum();
    let threshold = cfg.prune_ratio * sup;
    let mut order: Vec<usize> = (0..m.len())
        .filter(|&i| m.components()[i].weight() >= threshold)
        .collect();
    order.sort_by(|&a, &b| {
        m.components()[b]
            .weight()
            .total_cmp(&m.components()[a].weight())
    });

    let gate = cfg.merge_mahalanobis * cfg.merge_mahalanobis;
    let mut taken = vec![false; m.len()];
    let mut out: Vec<WeightedComponent> = Vec::new();
    for (pos, &leader) in order.iter().enumerate() {
        if out.len() == cfg.max_components {
            break;
        }
        if taken[leader] {
            continue;
        }
        taken[leader] = true;
        let lead = &m.components()[leader];
        let mut cluster = vec![leader];
        for &other in &order[pos + 1..] {
            if taken[other] {
                continue;
            }
            let d2 = lead
                .gaussian()
                .mahalanobis_sq_unchecked(m.components()[other].mean());
            if d2 <= gate {
                taken[other] = true;
                cluster.push(other);
            }
        }
        if cluster.len() == 1 {
            out.push(lead.clone());
        } else {
            let members: Vec<&WeightedComponent> =
                cluster.iter().map(|&i| &m.components()[i]).collect();
            out.push(WeightedComponent::new(lead.weight(), moment_merge(&members)?)?);
        }
    }
    Ok(GaussianMaxMixture::new(out)?.normalize())
}

fn moment_merge(members: &[&WeightedComponent]) -> Result<GaussianPossibility> {
    let dim = members[0].dim();
    let total: f64 = members.iter().map(|c| c.weight()).sum();
    let mut mean = Vector::zeros(dim);
    for c in members {
        mean += c.mean() * (c.weight() / total);
    }
    let mut cov = Matrix::zeros(dim, dim);
    for c in members {
        let d = c.mean() - &mean;
        cov += (c.covariance() + &d * d.transpose()) * (c.weight() / total);
    }
    GaussianPossibility::new(mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(w: f64, mean: &[f64], var: f64) -> WeightedComponent {
        let g = GaussianPossibility::new(
            Vector::from_row_slice(mean),
            Matrix::identity(mean.len(), mean.len()) * var,
        )
        .unwrap();
        WeightedComponent::new(w, g).unwrap()
    }

    #[test]
    fn prunes_insignificant() {
        let m = GaussianMaxMixture::new(vec![comp(1.0, &[0.0], 1.0), comp(1e-6, &[50.0], 1.0)])
            .unwrap();
        let r = reduce(&m, &ReductionConfig::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.components()[0], m.components()[0]);
    }

    #[test]
    fn merges_duplicates() {
        let c = comp(1.0, &[3.0, -1.0], 2.0);
        let m = GaussianMaxMixture::new(vec![c.clone(), c.clone()]).unwrap();
        let r = reduce(&m, &ReductionConfig::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.components()[0].weight(), 1.0);
        assert_eq!(r.components()[0].mean(), c.mean());
        assert!((r.components()[0].covariance() - c.covariance()).amax() < 1e-15);
    }

    #[test]
    fn merge_keeps_max_weight_and_moments() {
        let m = GaussianMaxMixture::new(vec![comp(0.5, &[1.0], 1.0), comp(1.0, &[0.0], 1.0)])
            .unwrap();
        let r = reduce(&m, &ReductionConfig::default()).unwrap();
        assert_eq!(r.len(), 1);
        let c = &r.components()[0];
        assert_eq!(c.weight(), 1.0);
        assert!((c.mean()[0] - 1.0 / 3.0).abs() < 1e-15);
        // (1·(1 + 1/9) + 0.5·(1 + 4/9)) / 1.5
        assert!((c.covariance()[(0, 0)] - (1.0 + 2.0 / 9.0)).abs() < 1e-14);
    }

    #[test]
    fn caps_by_descending_weight() {
        let comps: Vec<WeightedComponent> = (0..150)
            .map(|i| comp(1.0 - i as f64 * 0.005, &[i as f64 * 100.0], 1.0))
            .rev()
            .collect();
        let m = GaussianMaxMixture::new(comps).unwrap();
        let r = reduce(&m, &ReductionConfig::default()).unwrap();
        assert_eq!(r.len(), 100);
        let mut expected: Vec<f64> = m.weights().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        expected.truncate(100);
        let got: Vec<f64> = r.weights().collect();
        assert_eq!(got, expected);
        assert_eq!(r.supremum(), 1.0);
    }

    #[test]
    fn renormalizes_unnormalized_input() {
        let m = GaussianMaxMixture::new(vec![comp(0.5, &[0.0], 1.0), comp(0.25, &[10.0], 1.0)])
            .unwrap();
        let r = reduce(&m, &ReductionConfig::default()).unwrap();
        assert_eq!(r.weights().collect::<Vec<_>>(), vec![1.0, 0.5]);
    }
}
