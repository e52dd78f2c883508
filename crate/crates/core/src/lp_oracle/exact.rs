//! Exhaustive integral optimum for tiny instances.

use crate::equilibrium::Choice;
use crate::error::{Error, Result};
use crate::network::{enumerate_paths, Network};
use crate::population::Commodity;

const MAX_ASSIGNMENTS: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralOptimum {
    pub cost: f64,
    /// One entry per user after expanding commodities by demand.
    pub choices: Vec<Choice>,
    pub users: Vec<Commodity>,
    pub flows: Vec<u64>,
}

impl IntegralOptimum {
    pub fn travel_time(&self) -> f64 {
        self.choices.iter().filter_map(Choice::path).map(|p| p.latency()).sum()
    }
}

/// Minimum-cost capacity-feasible integral assignment, found by enumerating
/// every combination of (simple path or outside option) per user. `None`
/// when no feasible assignment exists. Ties keep the first assignment in
/// enumeration order (paths by increasing latency, outside option last).
pub fn brute_force_optimum(net: &Network, users: &[Commodity], path_limit: usize) -> Result<Option<IntegralOptimum>> {
    let singles: Vec<Commodity> = users
        .iter()
        .flat_map(|u| std::iter::repeat_n(Commodity { demand: 1, ..u.clone() }, u.demand as usize))
        .collect();
    let mut options: Vec<Vec<Choice>> = Vec::with_capacity(singles.len());
    let mut combos: u64 = 1;
    for u in &singles {
        let set = enumerate_paths(net, u.origin, u.destination, path_limit)?;
        if !set.exhaustive {
            return Err(Error::InvalidArgument(format!(
                "more than {path_limit} paths between {} and {}",
                u.origin, u.destination
            )));
        }
        let mut opts: Vec<Choice> = set.paths.into_iter().map(Choice::Path).collect();
        if u.outside_cost.is_some() {
            opts.push(Choice::Outside);
        }
        if opts.is_empty() {
            return Ok(None);
        }
        combos = combos.saturating_mul(opts.len() as u64);
        options.push(opts);
    }
    if combos > MAX_ASSIGNMENTS {
        return Err(Error::InvalidArgument(format!("{combos} assignments exceed the brute-force limit")));
    }
    let caps = net.capacities();
    let cost_of = |i: usize, c: &Choice| match c {
        Choice::Path(p) => singles[i].vot * p.latency(),
        Choice::Outside => singles[i].outside_cost.unwrap_or(0.0),
    };
    let mut idx = vec![0usize; singles.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut flows = vec![0u64; net.edge_count()];
    loop {
        flows.iter_mut().for_each(|f| *f = 0);
        let mut cost = 0.0;
        for (i, &k) in idx.iter().enumerate() {
            let c = &options[i][k];
            if let Choice::Path(p) = c {
                for &e in p.edges() {
                    flows[e] += 1;
                }
            }
            cost += cost_of(i, c);
        }
        let feasible = flows.iter().zip(&caps).all(|(&x, &c)| x as f64 <= c + 1e-9);
        if feasible && best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, idx.clone()));
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == idx.len() {
                return Ok(best.map(|(cost, idx)| {
                    let choices: Vec<Choice> = idx.iter().enumerate().map(|(i, &k)| options[i][k].clone()).collect();
                    let mut flows = vec![0u64; net.edge_count()];
                    for c in &choices {
                        if let Choice::Path(p) = c {
                            for &e in p.edges() {
                                flows[e] += 1;
                            }
                        }
                    }
                    IntegralOptimum { cost, choices, users: singles.clone(), flows }
                }));
            }
            idx[i] += 1;
            if idx[i] < options[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_edge_type_one() {
        let net = Network::parallel(&[1.0], &[1.0]).unwrap();
        let users = vec![Commodity { origin: 0, destination: 1, vot: 1.0, outside_cost: Some(2.0), demand: 2 }];
        let opt = brute_force_optimum(&net, &users, 10).unwrap().unwrap();
        assert_eq!(opt.cost, 3.0);
        assert_eq!(opt.flows, vec![1]);
    }

    #[test]
    fn infeasible_without_outside() {
        let net = Network::parallel(&[1.0], &[1.0]).unwrap();
        let users = vec![Commodity::single(0, 1, 1.0, None); 2];
        assert!(brute_force_optimum(&net, &users, 10).unwrap().is_none());
    }
}
