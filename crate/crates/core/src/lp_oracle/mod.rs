//! Complete-information benchmark: the fractional system-optimum LP over
//! path flows, its dual tolls, and the toll-only dual objective.
//!
//! Primal (flows `y` counted in users, identical users merged):
//!
//! ```text
//! min  Σ_k Σ_P v_k l_P y_{P,k} + Σ_k λ_k y_{o,k}
//! s.t. Σ_P y_{P,k} + y_{o,k} = d_k      (dual μ_k)
//!      Σ_k Σ_{P∋e} y_{P,k} ≤ c_e        (dual τ_e ≥ 0)
//! ```
//!
//! Solved by column generation: a restricted master over generated paths,
//! priced by a shortest path under `v_k l_e + τ_e`.

mod exact;
mod simplex;

pub use exact::{brute_force_optimum, IntegralOptimum};

use std::collections::HashMap;

use simplex::{ColKind, Column, Master, Outcome};

use crate::equilibrium::{cheapest_paths, compute_equilibrium_batched, TollVector};
use crate::error::{Error, Result};
use crate::network::{EdgeId, Network, Path};
use crate::population::Commodity;

#[derive(Debug, Clone)]
pub struct LpInstance<'a> {
    pub net: &'a Network,
    pub users: Vec<Commodity>,
    pub capacities: Vec<f64>,
}

impl<'a> LpInstance<'a> {
    /// Instance on the network's own capacities.
    pub fn new(net: &'a Network, users: Vec<Commodity>) -> Result<Self> {
        Self::with_capacities(net, users, net.capacities())
    }

    pub fn with_capacities(net: &'a Network, users: Vec<Commodity>, capacities: Vec<f64>) -> Result<Self> {
        if capacities.len() != net.edge_count() {
            return Err(Error::DimensionMismatch { expected: net.edge_count(), got: capacities.len() });
        }
        if let Some((index, &value)) = capacities.iter().enumerate().find(|(_, &c)| !(c >= 0.0)) {
            return Err(Error::Negative { index, value });
        }
        for (index, u) in users.iter().enumerate() {
            net.check_node(u.origin)?;
            net.check_node(u.destination)?;
            if u.origin == u.destination {
                return Err(Error::SelfTrip(u.origin));
            }
            if !(u.vot >= 0.0) {
                return Err(Error::Negative { index, value: u.vot });
            }
            if let Some(l) = u.outside_cost {
                if !(l >= 0.0) {
                    return Err(Error::Negative { index, value: l });
                }
            }
        }
        Ok(LpInstance { net, users, capacities })
    }

    pub fn total_users(&self) -> f64 {
        self.users.iter().map(|u| u.demand as f64).sum()
    }

    /// Σ_k d_k min(min_P (v_k l_P + τ_P), λ_k) − Σ_e τ_e c_e.
    pub fn dual_objective(&self, tolls: &TollVector) -> Result<f64> {
        let rec = compute_equilibrium_batched(self.net, &self.users, tolls)?;
        Ok(rec.total_user_cost() - tolls.dot(&self.capacities))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Simplex pivots allowed per solve.
    pub max_iterations: usize,
    /// Pricing rounds allowed per solve.
    pub max_rounds: usize,
    /// Columns enter when their reduced cost is below `-rc_tol`.
    pub rc_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_iterations: 200_000, max_rounds: 10_000, rc_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFlow {
    pub commodity: usize,
    pub path: Path,
    /// Users of the commodity on this path (between 0 and its demand).
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// U*, the primal objective.
    pub objective: f64,
    /// Σ_k d_k μ_k − Σ_e τ_e c_e at the returned duals.
    pub dual_value: f64,
    pub tolls: TollVector,
    /// μ per commodity; every user of the commodity shares it.
    pub mu: Vec<f64>,
    pub path_flows: Vec<PathFlow>,
    /// Users of each commodity on the outside option.
    pub outside_flows: Vec<f64>,
    pub edge_flows: Vec<f64>,
    /// Σ_P l_P y_P over all path flows.
    pub travel_time: f64,
    pub iterations: usize,
    pub columns: usize,
}

impl LpSolution {
    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_value).abs()
    }

    /// True when every path and outside flow is within `tol` of an integer.
    pub fn is_integral(&self, tol: f64) -> bool {
        let near = |v: f64| (v - v.round()).abs() <= tol;
        self.path_flows.iter().all(|p| near(p.flow)) && self.outside_flows.iter().all(|&v| near(v))
    }

    /// Plain-text diagnostic: objective, per-edge toll/flow/slack, per-user μ.
    pub fn report(&self, capacities: &[f64]) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "status {:?}", self.status);
        let _ = writeln!(s, "objective {:.6}", self.objective);
        let _ = writeln!(s, "dual {:.6}", self.dual_value);
        let _ = writeln!(s, "edge toll flow slack");
        for (e, (&x, &c)) in self.edge_flows.iter().zip(capacities).enumerate() {
            let _ = writeln!(s, "{e} {:.6} {:.6} {:.6}", self.tolls[e], x, c - x);
        }
        let _ = writeln!(s, "user mu");
        for (k, mu) in self.mu.iter().enumerate() {
            let _ = writeln!(s, "{k} {mu:.6}");
        }
        s
    }
}

struct State {
    master: Master,
    latency: Vec<f64>,
    index: HashMap<(usize, Vec<EdgeId>), usize>,
    artificial: Vec<usize>,
}

fn big_m(inst: &LpInstance) -> f64 {
    let lsum: f64 = inst.net.edges().iter().map(|e| e.latency).sum();
    let vmax = inst.users.iter().map(|u| u.vot).fold(0.0, f64::max);
    let lmax = inst.users.iter().filter_map(|u| u.outside_cost).fold(0.0, f64::max);
    2.0 * (1.0 + inst.total_users()) * (1.0 + vmax) * (1.0 + lsum) + lmax + 1.0
}

fn queries(inst: &LpInstance) -> Vec<(usize, usize, f64)> {
    inst.users.iter().map(|u| (u.origin, u.destination, u.vot)).collect()
}

fn path_column(set: usize, path: &Path, vot: f64) -> Column {
    Column { kind: ColKind::Path, set, edges: path.edges().to_vec(), cost: vot * path.latency() }
}

impl State {
    /// Crash start: each commodity on its untolled cheapest path when it is
    /// no dearer than the outside option and fits in the residual capacity.
    fn build(inst: &LpInstance, m_cost: f64) -> Result<State> {
        let net = inst.net;
        let mut master = Master::new(inst.capacities.clone());
        let mut latency = vec![0.0; net.edge_count()];
        let mut index = HashMap::new();
        let mut artificial = Vec::new();
        let mut residual = inst.capacities.clone();
        let paths = cheapest_paths(net, &queries(inst), &vec![0.0; net.edge_count()]);
        for ((k, u), path) in inst.users.iter().enumerate().zip(paths) {
            let (fallback_kind, fallback_cost) = match u.outside_cost {
                Some(l) => (ColKind::Outside, l),
                None if path.is_none() => return Err(Error::Unreachable(u.origin, u.destination)),
                None => (ColKind::Artificial, m_cost),
            };
            let fallback = Column { kind: fallback_kind, set: k, edges: vec![], cost: fallback_cost };
            let d = u.demand as f64;
            match path {
                Some(p) if u.vot * p.latency() <= fallback_cost && p.edges().iter().all(|&e| residual[e] >= d) => {
                    for &e in p.edges() {
                        residual[e] -= d;
                    }
                    let set = master.add_set(d, path_column(k, &p, u.vot));
                    latency.push(p.latency());
                    index.insert((set, p.edges().to_vec()), latency.len() - 1);
                    let j = master.add_column(fallback);
                    latency.push(0.0);
                    if fallback_kind == ColKind::Artificial {
                        artificial.push(j);
                    }
                }
                other => {
                    let set = master.add_set(d, fallback);
                    latency.push(0.0);
                    if fallback_kind == ColKind::Artificial {
                        artificial.push(latency.len() - 1);
                    }
                    if let Some(p) = other {
                        let j = master.add_column(path_column(set, &p, u.vot));
                        latency.push(p.latency());
                        index.insert((set, p.edges().to_vec()), j);
                    }
                }
            }
        }
        debug_assert_eq!(latency.len(), master.cols.len());
        master.refresh();
        Ok(State { master, latency, index, artificial })
    }

    fn reprice(&mut self, inst: &LpInstance, m_cost: f64) {
        for j in 0..self.master.cols.len() {
            let col = &self.master.cols[j];
            let cost = match col.kind {
                ColKind::Slack(_) => continue,
                ColKind::Path => inst.users[col.set].vot * self.latency[j],
                ColKind::Outside => inst.users[col.set].outside_cost.unwrap_or(m_cost),
                ColKind::Artificial => m_cost,
            };
            self.master.set_cost(j, cost);
        }
        self.master.refresh();
    }

    fn run(&mut self, inst: &LpInstance, opts: &LpOptions) -> Result<LpStatus> {
        let net = inst.net;
        self.master.iterations = 0;
        let queries = queries(inst);
        for _ in 0..opts.max_rounds {
            if self.master.optimize(opts.max_iterations, opts.rc_tol)? == Outcome::IterationLimit {
                return Ok(LpStatus::IterationLimit);
            }
            let tolls: Vec<f64> = self.master.pi().iter().map(|&p| (-p).max(0.0)).collect();
            let mut added = 0;
            let paths = cheapest_paths(net, &queries, &tolls);
            for ((k, u), p) in inst.users.iter().enumerate().zip(paths) {
                let Some(p) = p else { continue };
                let rc = p.cost(u.vot, &tolls) - self.master.mu()[k];
                if rc < -opts.rc_tol && !self.index.contains_key(&(k, p.edges().to_vec())) {
                    let j = self.master.add_column(path_column(k, &p, u.vot));
                    self.latency.push(p.latency());
                    self.index.insert((k, p.edges().to_vec()), j);
                    added += 1;
                }
            }
            if added == 0 {
                return Ok(LpStatus::Optimal);
            }
        }
        Ok(LpStatus::IterationLimit)
    }

    fn extract(&self, inst: &LpInstance, status: LpStatus) -> Result<LpSolution> {
        let net = inst.net;
        let mp = &self.master;
        for &j in &self.artificial {
            if mp.value(j) > 1e-7 {
                return Err(Error::Infeasible(format!(
                    "commodity {} cannot be routed within capacity",
                    mp.cols[j].set
                )));
            }
        }
        let tolls = TollVector::project(&mp.pi().iter().map(|&p| -p).collect::<Vec<_>>());
        let mut path_flows = Vec::new();
        let mut outside_flows = vec![0.0; inst.users.len()];
        let mut edge_flows = vec![0.0; net.edge_count()];
        let mut travel_time = 0.0;
        for (j, col) in mp.cols.iter().enumerate() {
            let v = mp.value(j);
            if v <= 1e-12 {
                continue;
            }
            match col.kind {
                ColKind::Slack(_) => {}
                ColKind::Path => {
                    for &e in &col.edges {
                        edge_flows[e] += v;
                    }
                    travel_time += v * self.latency[j];
                    path_flows.push(PathFlow { commodity: col.set, path: Path::from_valid(net, col.edges.clone()), flow: v });
                }
                ColKind::Outside | ColKind::Artificial => outside_flows[col.set] += v,
            }
        }
        let mu = mp.mu().to_vec();
        let dual_value = inst.users.iter().zip(&mu).map(|(u, m)| u.demand as f64 * m).sum::<f64>()
            - tolls.dot(&inst.capacities);
        Ok(LpSolution {
            status,
            objective: mp.objective(),
            dual_value,
            tolls,
            mu,
            path_flows,
            outside_flows,
            edge_flows,
            travel_time,
            iterations: mp.iterations,
            columns: mp.cols.len() - net.edge_count(),
        })
    }
}

/// Solves the LP relaxation with default options.
pub fn solve_lp(inst: &LpInstance) -> Result<LpSolution> {
    solve_lp_with(inst, &LpOptions::default())
}

pub fn solve_lp_with(inst: &LpInstance, opts: &LpOptions) -> Result<LpSolution> {
    LpSolver::new(*opts).solve(inst)
}

/// Reusable solver. Consecutive instances that differ only in values of
/// time restart from the previous optimal basis and column pool, which is
/// still primal feasible because demands and capacities are unchanged.
#[derive(Default)]
pub struct LpSolver {
    opts: LpOptions,
    warm: Option<(Signature, State)>,
}

type Signature = (usize, Vec<(usize, usize, u32, Option<u64>)>, Vec<u64>);

fn signature(inst: &LpInstance) -> Signature {
    (
        inst.net.edge_count(),
        inst.users.iter().map(|u| (u.origin, u.destination, u.demand, u.outside_cost.map(f64::to_bits))).collect(),
        inst.capacities.iter().map(|c| c.to_bits()).collect(),
    )
}

impl LpSolver {
    pub fn new(opts: LpOptions) -> Self {
        LpSolver { opts, warm: None }
    }

    pub fn solve(&mut self, inst: &LpInstance) -> Result<LpSolution> {
        let m_cost = big_m(inst);
        let sig = signature(inst);
        let mut state = match self.warm.take() {
            Some((s, mut state)) if s == sig => {
                state.reprice(inst, m_cost);
                state
            }
            _ => State::build(inst, m_cost)?,
        };
        let status = state.run(inst, &self.opts)?;
        let sol = state.extract(inst, status);
        self.warm = Some((sig, state));
        sol
    }
}

/// Toll-only dual: Σ_u min(min_P (v_u l_P + τ_P), λ_u) − Σ_e τ_e c_e
/// on the network's capacities.
pub fn dual_objective(net: &Network, users: &[Commodity], tolls: &TollVector) -> Result<f64> {
    LpInstance::new(net, users.to_vec())?.dual_objective(tolls)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketClearingReport {
    /// |τ_e (c_e − x_e)| per edge.
    pub slackness: Vec<f64>,
    /// max(0, x_e − c_e) per edge.
    pub excess: Vec<f64>,
    /// |μ_k − min(cheapest path under τ, λ_k)| per commodity.
    pub user_residuals: Vec<f64>,
    pub duality_gap: f64,
}

impl MarketClearingReport {
    pub fn max_slackness(&self) -> f64 {
        self.slackness.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_excess(&self) -> f64 {
        self.excess.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_user_residual(&self) -> f64 {
        self.user_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_slackness() <= tol && self.max_excess() <= tol && self.max_user_residual() <= tol
    }
}

/// Complementary slackness and per-user optimality of an LP solution.
pub fn check_market_clearing(inst: &LpInstance, sol: &LpSolution) -> Result<MarketClearingReport> {
    let slackness = sol
        .edge_flows
        .iter()
        .zip(&inst.capacities)
        .enumerate()
        .map(|(e, (&x, &c))| (sol.tolls[e] * (c - x)).abs())
        .collect();
    let excess = sol.edge_flows.iter().zip(&inst.capacities).map(|(&x, &c)| (x - c).max(0.0)).collect();
    let rec = compute_equilibrium_batched(inst.net, &inst.users, &sol.tolls)?;
    let user_residuals = rec.costs.iter().zip(&sol.mu).map(|(c, m)| (c - m).abs()).collect();
    Ok(MarketClearingReport { slackness, excess, user_residuals, duality_gap: sol.duality_gap() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// γ_k = scale / √k.
    InvSqrt(f64),
}

impl StepSchedule {
    fn at(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Constant(g) => g,
            StepSchedule::InvSqrt(a) => a / (k as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientResult {
    /// Iterate with the largest dual objective seen.
    pub best: TollVector,
    pub best_value: f64,
    /// Running average of the iterates.
    pub averaged: TollVector,
    pub averaged_value: f64,
    pub iterations: usize,
}

/// Offline projected supergradient ascent on the toll-only dual,
/// τ ← (τ − γ_k (c − x(τ)))₊, starting from τ = 0 on a fixed user sample.
pub fn subgradient_solve(inst: &LpInstance, iters: usize, schedule: StepSchedule) -> Result<SubgradientResult> {
    if iters == 0 {
        return Err(Error::InvalidArgument("subgradient iterations must be at least 1".into()));
    }
    let m = inst.net.edge_count();
    let mut tau = TollVector::zeros(m);
    let mut sum = vec![0.0; m];
    let mut best = tau.clone();
    let mut best_value = f64::NEG_INFINITY;
    for k in 1..=iters {
        let rec = compute_equilibrium_batched(inst.net, &inst.users, &tau)?;
        let value = rec.total_user_cost() - tau.dot(&inst.capacities);
        if value > best_value {
            best_value = value;
            best = tau.clone();
        }
        let g = schedule.at(k);
        let raw: Vec<f64> = (0..m)
            .map(|e| tau[e] - g * (inst.capacities[e] - rec.flows[e] as f64))
            .collect();
        tau = TollVector::project(&raw);
        for (s, &t) in sum.iter_mut().zip(tau.as_slice()) {
            *s += t;
        }
    }
    let averaged = TollVector::project(&sum.iter().map(|s| s / iters as f64).collect::<Vec<_>>());
    let averaged_value = inst.dual_objective(&averaged)?;
    let final_value = inst.dual_objective(&tau)?;
    if final_value > best_value {
        best_value = final_value;
        best = tau;
    }
    if averaged_value > best_value {
        best_value = averaged_value;
        best = averaged.clone();
    }
    Ok(SubgradientResult { best, best_value, averaged, averaged_value, iterations: iters })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_edge() -> Network {
        Network::parallel(&[1.0], &[1.0]).unwrap()
    }

    #[test]
    fn type_one_period() {
        let net = one_edge();
        let users = vec![Commodity::single(0, 1, 1.0, Some(2.0)); 2];
        let inst = LpInstance::new(&net, users).unwrap();
        let sol = solve_lp(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!((sol.edge_flows[0] - 1.0).abs() < 1e-12);
        assert!(sol.duality_gap() < 1e-9);
        let rep = check_market_clearing(&inst, &sol).unwrap();
        assert!(rep.passes(1e-9), "{rep:?}");
    }

    #[test]
    fn merged_users_match_singles() {
        let net = one_edge();
        let merged = vec![Commodity { origin: 0, destination: 1, vot: 1.0, outside_cost: Some(2.0), demand: 2 }];
        let inst = LpInstance::new(&net, merged).unwrap();
        assert!((solve_lp(&inst).unwrap().objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn uncapacitated_tolls_vanish() {
        let net = Network::parallel(&[1.0, 2.0, 3.0], &[100.0; 3]).unwrap();
        let users = vec![Commodity::single(0, 1, 5.0, Some(50.0)); 4];
        let inst = LpInstance::new(&net, users).unwrap();
        let sol = solve_lp(&inst).unwrap();
        assert!((sol.objective - 20.0).abs() < 1e-12);
        assert!(sol.tolls.as_slice().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn zero_outside_costs() {
        let net = Network::parallel(&[1.0, 2.0], &[5.0, 5.0]).unwrap();
        let users = vec![Commodity::single(0, 1, 3.0, Some(0.0)); 3];
        let sol = solve_lp(&LpInstance::new(&net, users).unwrap()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.path_flows.is_empty());
    }

    #[test]
    fn dual_objective_direct() {
        let net = one_edge();
        let users = vec![Commodity::single(0, 1, 1.0, Some(2.0))];
        let v = dual_objective(&net, &users, &TollVector::new(vec![0.5]).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn infeasible_without_outside() {
        let net = one_edge();
        let users = vec![Commodity::single(0, 1, 1.0, None); 2];
        assert!(matches!(solve_lp(&LpInstance::new(&net, users).unwrap()), Err(Error::Infeasible(_))));
        let users = vec![Commodity::single(0, 1, 1.0, None)];
        let sol = solve_lp(&LpInstance::new(&net, users).unwrap()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warm_start_matches_cold() {
        let net = Network::from_edges(
            4,
            [(0, 1, 1.0, 2.0), (1, 3, 1.0, 2.0), (0, 2, 1.5, 3.0), (2, 3, 1.0, 1.0), (0, 3, 4.0, 1.0)],
        )
        .unwrap();
        let mut solver = LpSolver::new(LpOptions::default());
        for step in 0..10 {
            let vots = [3.0 + step as f64, 9.0 - 0.5 * step as f64, 1.0 + 0.3 * step as f64];
            let users: Vec<Commodity> = vots
                .iter()
                .map(|&v| Commodity { origin: 0, destination: 3, vot: v, outside_cost: Some(30.0), demand: 2 })
                .collect();
            let inst = LpInstance::new(&net, users).unwrap();
            let warm = solver.solve(&inst).unwrap();
            let cold = solve_lp(&inst).unwrap();
            assert!((warm.objective - cold.objective).abs() < 1e-9);
            assert!(warm.duality_gap() < 1e-9);
        }
    }
}
