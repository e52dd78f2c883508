//! Regret, cumulative capacity violation, normalized metrics and log-log
//! slope fits.

use crate::error::{Error, Result};
use crate::lp_oracle::LpStatus;

/// One simulated period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    /// U_t.
    pub system_cost: f64,
    /// U_t* from the LP oracle, when solved for this period.
    pub oracle_cost: Option<f64>,
    pub oracle_status: Option<LpStatus>,
    /// Exact integral optimum, when the instance is small enough.
    pub oracle_ip_cost: Option<f64>,
    pub flows: Vec<u64>,
    /// Tolls posted in this period.
    pub tolls: Vec<f64>,
    pub total_travel_time: f64,
    pub toll_revenue: f64,
    pub routed_users: u64,
    pub outside_users: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub policy: String,
    pub seed: u64,
    pub capacities: Vec<f64>,
    pub periods: Vec<PeriodRecord>,
    /// τ^(T+1), the tolls the policy would post next.
    pub final_tolls: Vec<f64>,
    /// Capacity-feasible minimum total travel time per period, if known.
    pub min_travel_time: Option<f64>,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.periods.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// (Σ_t (x^t − c))₊ per edge.
    pub vector: Vec<f64>,
    pub l2: f64,
    pub linf: f64,
    /// Edge attaining the L∞ norm (lowest id on ties).
    pub argmax: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub regret: f64,
    pub violation: Violation,
    pub oracle_total: f64,
    /// R_T / Σ_t U_t*.
    pub normalized_regret: f64,
    /// ‖v‖∞ / (T · c_argmax).
    pub normalized_violation: f64,
    pub mean_travel_time: f64,
    /// Mean travel time over the capacity-feasible minimum.
    pub normalized_travel_time: Option<f64>,
}

fn oracle_estimate(trace: &RunTrace) -> Result<(f64, usize)> {
    let solved: Vec<f64> = trace.periods.iter().filter_map(|p| p.oracle_cost).collect();
    if solved.is_empty() {
        return Err(Error::InvalidArgument("trace has no oracle costs".into()));
    }
    let t = trace.periods.len();
    let total = if solved.len() == t {
        solved.iter().sum()
    } else {
        t as f64 * solved.iter().sum::<f64>() / solved.len() as f64
    };
    Ok((total, solved.len()))
}

/// Σ_t U_t* (extrapolated as T times the sampled mean when the oracle was
/// only solved on a subset of periods).
pub fn oracle_total(trace: &RunTrace) -> Result<f64> {
    oracle_estimate(trace).map(|(v, _)| v)
}

/// R_T = Σ_t U_t − Σ_t U_t*. Negative values are possible when capacity
/// violations let users take cheaper routes than the capacity-feasible
/// optimum.
pub fn regret(trace: &RunTrace) -> Result<f64> {
    let achieved: f64 = trace.periods.iter().map(|p| p.system_cost).sum();
    Ok(achieved - oracle_total(trace)?)
}

/// Cumulative violation vector and its norms.
pub fn violation(trace: &RunTrace) -> Violation {
    let mut cum = vec![0.0; trace.capacities.len()];
    for p in &trace.periods {
        for (e, (&x, &c)) in p.flows.iter().zip(&trace.capacities).enumerate() {
            cum[e] += x as f64 - c;
        }
    }
    let vector: Vec<f64> = cum.into_iter().map(|v| v.max(0.0)).collect();
    let l2 = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut argmax = 0;
    for (e, &v) in vector.iter().enumerate() {
        if v > vector[argmax] {
            argmax = e;
        }
    }
    let linf = vector.get(argmax).copied().unwrap_or(0.0);
    Violation { vector, l2, linf, argmax }
}

pub fn normalized_metrics(trace: &RunTrace) -> Result<MetricReport> {
    let t = trace.horizon();
    if t == 0 {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let oracle_total = oracle_total(trace)?;
    if !(oracle_total > 0.0) {
        return Err(Error::InvalidArgument(format!("oracle total cost {oracle_total} is not positive")));
    }
    let regret = regret(trace)?;
    let violation = violation(trace);
    let cap = trace.capacities[violation.argmax];
    let mean_travel_time = trace.periods.iter().map(|p| p.total_travel_time).sum::<f64>() / t as f64;
    let normalized_travel_time = match trace.min_travel_time {
        Some(m) if m > 0.0 => Some(mean_travel_time / m),
        Some(m) => return Err(Error::InvalidArgument(format!("minimum travel time {m} is not positive"))),
        None => None,
    };
    Ok(MetricReport {
        regret,
        normalized_regret: regret / oracle_total,
        normalized_violation: violation.linf / (t as f64 * cap),
        violation,
        oracle_total,
        mean_travel_time,
        normalized_travel_time,
    })
}

/// |E| (|U| + max c)² / 2 · √T.
pub fn regret_bound(edges: usize, users: u64, max_capacity: f64, horizon: usize) -> f64 {
    let a = users as f64 + max_capacity;
    edges as f64 * a * a / 2.0 * (horizon as f64).sqrt()
}

/// |E| (max λ + max c + |U|) · √T.
pub fn violation_bound(edges: usize, max_outside_cost: f64, max_capacity: f64, users: u64, horizon: usize) -> f64 {
    edges as f64 * (max_outside_cost + max_capacity + users as f64) * (horizon as f64).sqrt()
}

/// Largest componentwise excess of Σ_t (x^t − c) over τ^(T+1)/γ; nonpositive
/// when the telescoping bound holds.
pub fn telescoping_gap(trace: &RunTrace, step: f64) -> f64 {
    let mut cum = vec![0.0; trace.capacities.len()];
    for p in &trace.periods {
        for (e, (&x, &c)) in p.flows.iter().zip(&trace.capacities).enumerate() {
            cum[e] += x as f64 - c;
        }
    }
    cum.iter()
        .zip(&trace.final_tolls)
        .map(|(s, t)| s - t / step)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual in log10 units.
    pub rmse: f64,
}

/// Least-squares line through (log10 T, log10 value).
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", points.len())));
    }
    for &(t, v) in points {
        if !(t > 0.0) || !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("nonpositive point ({t}, {v})")));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all horizons equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rmse = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SlopeFit { slope, intercept, rmse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(flows: &[u64], costs: &[(f64, f64)], cap: f64) -> RunTrace {
        RunTrace {
            policy: "test".into(),
            seed: 0,
            capacities: vec![cap],
            periods: flows
                .iter()
                .zip(costs)
                .map(|(&x, &(u, us))| PeriodRecord {
                    system_cost: u,
                    oracle_cost: Some(us),
                    oracle_status: Some(LpStatus::Optimal),
                    oracle_ip_cost: None,
                    flows: vec![x],
                    tolls: vec![0.0],
                    total_travel_time: x as f64,
                    toll_revenue: 0.0,
                    routed_users: x,
                    outside_users: 0,
                })
                .collect(),
            final_tolls: vec![0.0],
            min_travel_time: None,
        }
    }

    #[test]
    fn regret_cases() {
        let t = trace(&[1, 1, 1], &[(2.0, 2.0); 3], 1.0);
        assert_eq!(regret(&t).unwrap(), 0.0);
        let t = trace(&[1; 4], &[(3.5, 3.0); 4], 1.0);
        assert_eq!(regret(&t).unwrap(), 2.0);
        let t = trace(&[2], &[(2.0, 3.0)], 1.0);
        assert_eq!(regret(&t).unwrap(), -1.0);
        let rep = normalized_metrics(&trace(&[1; 10], &[(1.1, 1.0); 10], 1.0)).unwrap();
        assert!((rep.normalized_regret - 0.1).abs() < 1e-12);
    }

    #[test]
    fn violation_cases() {
        let v = violation(&trace(&[0, 1, 0], &[(0.0, 0.0); 3], 1.0));
        assert_eq!(v.linf, 0.0);
        let v = violation(&trace(&[2; 7], &[(0.0, 0.0); 7], 1.0));
        assert_eq!(v.linf, 7.0);
        assert_eq!(v.l2, 7.0);
    }

    #[test]
    fn subsampled_oracle_extrapolates() {
        let mut t = trace(&[1; 4], &[(3.0, 2.0); 4], 1.0);
        t.periods[1].oracle_cost = None;
        t.periods[3].oracle_cost = None;
        assert_eq!(oracle_total(&t).unwrap(), 8.0);
        for p in &mut t.periods {
            p.oracle_cost = None;
        }
        assert!(regret(&t).is_err());
    }

    #[test]
    fn slopes() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&t: &f64| (t, t.sqrt())).collect();
        let fit = loglog_slope(&pts).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12 && fit.rmse < 1e-12);
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&t: &f64| (t, 3.0 * t)).collect();
        assert!((loglog_slope(&pts).unwrap().slope - 1.0).abs() < 1e-12);
        assert!(loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(loglog_slope(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }
}
