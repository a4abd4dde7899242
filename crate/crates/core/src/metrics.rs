//! OSPA scoring, covariance size, and Monte Carlo aggregation.

use serde::{Deserialize, Serialize};

use crate::bernoulli::Estimate;
use crate::error::{Error, Result};

/// OSPA cutoff `c` and order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OspaParams {
    pub cutoff: f64,
    pub order: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            cutoff: 10.0,
            order: 1.0,
        }
    }
}

impl OspaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Config(format!("OSPA cutoff {} must be positive", self.cutoff)));
        }
        if !(self.order >= 1.0 && self.order.is_finite()) {
            return Err(Error::Config(format!("OSPA order {} must be >= 1", self.order)));
        }
        Ok(())
    }
}

/// Largest column count [`min_cost_assignment`] accepts.
pub const MAX_ASSIGNMENT: usize = 16;

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`)
/// by dynamic programming over column subsets. Returns the cost and, for each
/// row, its column.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if cost.iter().any(|r| r.len() != cols) {
        return Err(Error::Config("ragged cost matrix".into()));
    }
    if rows > cols {
        return Err(Error::Config(format!("{rows} rows exceed {cols} columns")));
    }
    if cols > MAX_ASSIGNMENT {
        return Err(Error::Config(format!(
            "assignment of {cols} columns exceeds the supported {MAX_ASSIGNMENT}"
        )));
    }
    let states = 1usize << cols;
    // best[mask]: cheapest way to place the first popcount(mask) rows on `mask`
    let mut best = vec![f64::INFINITY; states];
    let mut choice = vec![usize::MAX; states];
    best[0] = 0.0;
    for mask in 0..states {
        let row = mask.count_ones() as usize;
        if row >= rows || !best[mask].is_finite() {
            continue;
        }
        for col in 0..cols {
            let bit = 1 << col;
            if mask & bit != 0 {
                continue;
            }
            let next = mask | bit;
            let c = best[mask] + cost[row][col];
            if c < best[next] {
                best[next] = c;
                choice[next] = col;
            }
        }
    }
    let (mut mask, total) = (0..states)
        .filter(|m| m.count_ones() as usize == rows)
        .map(|m| (m, best[m]))
        .fold((0, f64::INFINITY), |acc, (m, c)| if c < acc.1 { (m, c) } else { acc });
    if rows == 0 {
        return Ok((0.0, Vec::new()));
    }
    let mut assignment = vec![0; rows];
    for row in (0..rows).rev() {
        let col = choice[mask];
        assignment[row] = col;
        mask &= !(1 << col);
    }
    Ok((total, assignment))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// OSPA distance between two finite point sets.
pub fn ospa<P: AsRef<[f64]>>(x: &[P], y: &[P], params: &OspaParams) -> Result<f64> {
    params.validate()?;
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return Ok(0.0);
    }
    let c = params.cutoff;
    let p = params.order;
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| {
            large
                .iter()
                .map(|b| distance(a.as_ref(), b.as_ref()).min(c).powf(p))
                .collect()
        })
        .collect();
    let localization = if m == 0 {
        0.0
    } else {
        min_cost_assignment(&cost)?.0
    };
    let cardinality = c.powf(p) * (n - m) as f64;
    Ok(((localization + cardinality) / n as f64).powf(1.0 / p).min(c))
}

/// OSPA between at most one estimate and at most one truth position.
pub fn ospa_single(truth: Option<[f64; 2]>, estimate: Option<[f64; 2]>, params: &OspaParams) -> Result<f64> {
    let x: Vec<[f64; 2]> = truth.into_iter().collect();
    let y: Vec<[f64; 2]> = estimate.into_iter().collect();
    ospa(&x, &y, params)
}

/// Which part of the 4-D covariance is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    #[default]
    Full,
    /// Only the `x` and `y` position variances.
    Position,
}

pub fn covariance_trace(estimate: Option<&Estimate>, kind: TraceKind) -> Result<f64> {
    let e = estimate.ok_or(Error::AbsentEstimate)?;
    Ok(match kind {
        TraceKind::Full => e.covariance.trace(),
        TraceKind::Position => e.covariance[(0, 0)] + e.covariance[(2, 2)],
    })
}

/// One filter's (or fuser's) outputs at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub estimate: Option<Estimate>,
    pub q_absent: f64,
    pub q_present: f64,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub name: String,
    pub steps: Vec<StepRecord>,
}

/// Everything recorded in one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// True target position per step.
    pub truth: Vec<Option<[f64; 2]>>,
    pub series: Vec<SeriesRecord>,
}

/// Per-step means over runs for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub name: String,
    pub mean_ospa: Vec<f64>,
    /// Mean trace over runs reporting an estimate; `None` when no run did.
    pub mean_trace: Vec<Option<f64>>,
    pub present_count: Vec<usize>,
    pub mean_q_absent: Vec<f64>,
    pub mean_q_present: Vec<f64>,
    pub mean_components: Vec<f64>,
}

impl SeriesSummary {
    /// Mean OSPA over the inclusive 1-based step range.
    pub fn mean_ospa_over(&self, first: usize, last: usize) -> f64 {
        let s = &self.mean_ospa[first - 1..last];
        s.iter().sum::<f64>() / s.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub steps: usize,
    pub series: Vec<SeriesSummary>,
}

impl Aggregate {
    pub fn series(&self, name: &str) -> Option<&SeriesSummary> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Per-step arithmetic means across runs, folded in record order.
pub fn aggregate(records: &[RunRecord], params: &OspaParams, trace: TraceKind) -> Result<Aggregate> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("no run records to aggregate".into()))?;
    let steps = first.truth.len();
    for r in records {
        let shape_ok = r.truth.len() == steps
            && r.series.len() == first.series.len()
            && r.series
                .iter()
                .zip(&first.series)
                .all(|(a, b)| a.name == b.name && a.steps.len() == steps);
        if !shape_ok {
            return Err(Error::Config("run records differ in shape".into()));
        }
    }
    let runs = records.len();
    let n = runs as f64;
    let series = first
        .series
        .iter()
        .enumerate()
        .map(|(si, template)| {
            let mut ospa_sum = vec![0.0; steps];
            let mut trace_sum = vec![0.0; steps];
            let mut present = vec![0usize; steps];
            let mut q0_sum = vec![0.0; steps];
            let mut q1_sum = vec![0.0; steps];
            let mut comp_sum = vec![0.0; steps];
            for r in records {
                for (k, step) in r.series[si].steps.iter().enumerate() {
                    let est = step.estimate.as_ref();
                    ospa_sum[k] += ospa_single(r.truth[k], est.map(Estimate::position), params)?;
                    if est.is_some() {
                        trace_sum[k] += covariance_trace(est, trace)?;
                        present[k] += 1;
                    }
                    q0_sum[k] += step.q_absent;
                    q1_sum[k] += step.q_present;
                    comp_sum[k] += step.components as f64;
                }
            }
            Ok(SeriesSummary {
                name: template.name.clone(),
                mean_ospa: ospa_sum.iter().map(|s| s / n).collect(),
                mean_trace: trace_sum
                    .iter()
                    .zip(&present)
                    .map(|(s, &c)| (c > 0).then(|| s / c as f64))
                    .collect(),
                present_count: present,
                mean_q_absent: q0_sum.iter().map(|s| s / n).collect(),
                mean_q_present: q1_sum.iter().map(|s| s / n).collect(),
                mean_components: comp_sum.iter().map(|s| s / n).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Aggregate {
        runs,
        steps,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};

    fn p() -> OspaParams {
        OspaParams::default()
    }

    #[test]
    fn ospa_examples() {
        let empty: Vec<[f64; 2]> = vec![];
        assert_eq!(ospa(&empty, &empty, &p()).unwrap(), 0.0);
        assert_eq!(ospa(&[[1.0, 2.0]], &empty, &p()).unwrap(), 10.0);
        assert_eq!(ospa(&[[0.0]], &[[3.0]], &p()).unwrap(), 3.0);
        assert_eq!(ospa(&[[0.0]], &[[30.0]], &p()).unwrap(), 10.0);
    }

    #[test]
    fn ospa_rejects_bad_params() {
        let bad = OspaParams {
            cutoff: 0.0,
            order: 1.0,
        };
        assert!(ospa(&[[0.0]], &[[1.0]], &bad).is_err());
        let bad = OspaParams {
            cutoff: 1.0,
            order: 0.5,
        };
        assert!(ospa(&[[0.0]], &[[1.0]], &bad).is_err());
    }

    #[test]
    fn ospa_mixed_cardinality_order_two() {
        // one pair at distance 3, one unmatched point: ((9 + 100) / 2)^(1/2)
        let params = OspaParams {
            cutoff: 10.0,
            order: 2.0,
        };
        let v = ospa(&[[0.0, 0.0]], &[[3.0, 0.0], [50.0, 50.0]], &params).unwrap();
        assert!((v - (109.0f64 / 2.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn assignment_small_cases() {
        let (c, a) = min_cost_assignment(&[vec![4.0, 1.0], vec![2.0, 8.0]]).unwrap();
        assert_eq!((c, a), (3.0, vec![1, 0]));
        let (c, a) = min_cost_assignment(&[vec![5.0, 1.0, 3.0]]).unwrap();
        assert_eq!((c, a), (1.0, vec![1]));
        assert!(min_cost_assignment(&[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn trace_examples() {
        let e = Estimate {
            mean: Vector::zeros(4),
            covariance: Matrix::identity(4, 4),
        };
        assert_eq!(covariance_trace(Some(&e), TraceKind::Full).unwrap(), 4.0);
        let e = Estimate {
            mean: Vector::zeros(4),
            covariance: Matrix::from_diagonal(&Vector::from_row_slice(&[1.0, 2.0, 3.0, 4.0])),
        };
        assert_eq!(covariance_trace(Some(&e), TraceKind::Full).unwrap(), 10.0);
        assert_eq!(covariance_trace(Some(&e), TraceKind::Position).unwrap(), 4.0);
        assert_eq!(covariance_trace(None, TraceKind::Full), Err(Error::AbsentEstimate));
    }

    fn record(truth_x: f64, est_x: Option<f64>) -> RunRecord {
        RunRecord {
            truth: vec![Some([truth_x, 0.0]); 2],
            series: vec![SeriesRecord {
                name: "a".into(),
                steps: vec![
                    StepRecord {
                        estimate: est_x.map(|x| Estimate {
                            mean: Vector::from_row_slice(&[x, 0.0, 0.0, 0.0]),
                            covariance: Matrix::identity(4, 4) * (1.0 + x.abs()),
                        }),
                        q_absent: 0.1,
                        q_present: 1.0,
                        components: 3,
                    };
                    2
                ],
            }],
        }
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[record(0.0, Some(2.0))], &p(), TraceKind::Full).unwrap();
        let s = one.series("a").unwrap();
        assert_eq!(s.mean_ospa, vec![2.0, 2.0]);
        assert_eq!(s.mean_trace, vec![Some(12.0), Some(12.0)]);

        let two = aggregate(
            &[record(0.0, Some(2.0)), record(0.0, None)],
            &p(),
            TraceKind::Full,
        )
        .unwrap();
        let s = two.series("a").unwrap();
        assert_eq!(s.mean_ospa, vec![6.0, 6.0]);
        assert_eq!(s.present_count, vec![1, 1]);
        assert_eq!(s.mean_trace, vec![Some(12.0), Some(12.0)]);

        let none = aggregate(&[record(0.0, None)], &p(), TraceKind::Full).unwrap();
        assert_eq!(none.series[0].mean_trace, vec![None, None]);
        assert!(aggregate(&[], &p(), TraceKind::Full).is_err());
    }

    #[test]
    fn aggregate_rejects_ragged_records() {
        let mut r = record(0.0, Some(1.0));
        r.truth.pop();
        assert!(aggregate(&[record(0.0, Some(1.0)), r], &p(), TraceKind::Full).is_err());
    }
}
