//! Experiment generators and the simulation loop.
//!
//! A [`Scenario`] bundles a network, a calibrated population, the static
//! benchmark tolls and a per-period oracle cache for one seed.
//! [`run_experiment`] drives a toll policy through `T` periods of sampling,
//! equilibrium routing and toll updates.

mod config;

pub use config::{PolicyName, ScenarioConfig, ScenarioKind, StepName, StepRule, DATA_DIR_ENV};

use std::collections::HashMap;

use rand::Rng;

use crate::equilibrium::{compute_equilibrium_batched, TollVector};
use crate::error::{Error, Result};
use crate::lp_oracle::{brute_force_optimum, solve_lp, LpInstance, LpSolution, LpSolver, LpStatus};
use crate::metrics::{PeriodRecord, RunTrace};
use crate::network::{load_tntp_with, Network, TntpOptions};
use crate::population::{MeanVot, PopulationModel, UserGroup, UserType};
use crate::rng::{keyed, Purpose};
use crate::toller::{TollPolicy, TollerState};
use crate::vcg::Counterexample;

/// Largest per-period population for which the exact oracle is attempted.
const EXACT_ORACLE_USERS: u64 = 8;

/// Per-period complete-information benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    /// U_t* of the LP relaxation.
    pub cost: f64,
    pub status: LpStatus,
    /// Integral optimum, when computed.
    pub ip_cost: Option<f64>,
}

#[derive(Default)]
struct Oracle {
    solver: LpSolver,
    cache: HashMap<u64, OracleValue>,
    exact: bool,
}

pub struct Scenario {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub net: Network,
    pub population: PopulationModel,
    /// Group-mean LP tolls (no outside option) used to set λ; `None` when λ
    /// is given.
    pub calibration_tolls: Option<TollVector>,
    pub population_mean: LpSolution,
    pub user_mean: LpSolution,
    /// Capacity-feasible minimum total travel time per period, hours.
    pub min_travel_time: Option<f64>,
    oracle: Oracle,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("kind", &self.kind)
            .field("seed", &self.seed)
            .field("edges", &self.net.edge_count())
            .field("users", &self.population.total_users())
            .finish_non_exhaustive()
    }
}

impl Scenario {
    /// Wraps a network and population: calibrates λ when `calibrate`, then
    /// solves the two mean-VoT LPs and the minimum travel-time LP.
    pub fn assemble(
        kind: ScenarioKind,
        seed: u64,
        net: Network,
        population: PopulationModel,
        outside_factor: Option<f64>,
    ) -> Result<Self> {
        let (population, calibration_tolls) = match outside_factor {
            Some(factor) => {
                let users = population.mean_commodities(MeanVot::Group, false)?;
                let sol = solve_lp(&LpInstance::new(&net, users)?)?;
                (population.calibrate_outside_option(&net, &sol.tolls, factor)?, Some(sol.tolls))
            }
            None => (population, None),
        };
        let population_mean = solve_lp(&LpInstance::new(&net, population.mean_commodities(MeanVot::Population, true)?)?)?;
        let user_mean = solve_lp(&LpInstance::new(&net, population.mean_commodities(MeanVot::Group, true)?)?)?;
        let mut unit = population.mean_commodities(MeanVot::Group, true)?;
        for c in &mut unit {
            c.vot = 1.0;
        }
        let ttt = solve_lp(&LpInstance::new(&net, unit)?)?.travel_time;
        Ok(Scenario {
            kind,
            seed,
            net,
            population,
            calibration_tolls,
            population_mean,
            user_mean,
            min_travel_time: (ttt > 0.0).then_some(ttt),
            oracle: Oracle::default(),
        })
    }

    /// Builds the scenario `cfg.kind` for one seed.
    pub fn build(cfg: &ScenarioConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut s = match cfg.kind {
            ScenarioKind::SiouxFalls => build_sioux_falls(cfg, seed)?,
            ScenarioKind::LowerBound => build_lower_bound(seed)?,
            ScenarioKind::ParallelSynth => build_parallel_synth(cfg, seed)?,
            ScenarioKind::Counterexample => build_counterexample(cfg, seed)?,
        };
        s.oracle.exact = cfg.exact_oracle;
        Ok(s)
    }

    /// Enables the exact integral oracle alongside the LP.
    pub fn set_exact_oracle(&mut self, on: bool) {
        self.oracle.exact = on;
    }

    /// U_t* for period `t`, cached across runs on this scenario.
    pub fn oracle(&mut self, t: u64) -> Result<OracleValue> {
        if let Some(v) = self.oracle.cache.get(&t) {
            return Ok(*v);
        }
        let users = self.population.sample_commodities(t)?;
        let sol = self.oracle.solver.solve(&LpInstance::new(&self.net, users.clone())?)?;
        let ip_cost = if self.oracle.exact && self.population.total_users() <= EXACT_ORACLE_USERS {
            brute_force_optimum(&self.net, &users, 256)?.map(|o| o.cost)
        } else {
            None
        };
        let v = OracleValue { cost: sol.objective, status: sol.status, ip_cost };
        self.oracle.cache.insert(t, v);
        Ok(v)
    }

    /// Largest λ any user can carry.
    pub fn max_outside_cost(&self) -> Result<f64> {
        self.population.max_outside_cost()
    }

    /// max λ + max c + |U|.
    pub fn toll_bound(&self) -> Result<f64> {
        Ok(crate::toller::toll_bound(self.max_outside_cost()?, self.net.max_capacity(), self.population.total_users()))
    }

    /// The policy `name` configured for a run of length `horizon`.
    pub fn policy(&self, cfg: &ScenarioConfig, name: PolicyName, horizon: u64) -> Result<TollerState> {
        let m = self.net.edge_count();
        match name {
            PolicyName::OnlineGradient => TollerState::online_gradient(m, cfg.step(horizon)?),
            PolicyName::Reactive => TollerState::reactive(m, cfg.reactive_increment),
            PolicyName::PopulationMean => {
                TollerState::static_benchmark(name.as_str(), self.population_mean.tolls.clone(), cfg.static_noise, self.seed)
            }
            PolicyName::UserMean => {
                TollerState::static_benchmark(name.as_str(), self.user_mean.tolls.clone(), cfg.static_noise, self.seed)
            }
        }
    }
}

/// Sioux Falls with demand scaled by `demand_scale`, μ_g ~ U[mean_vot_range]
/// and λ set from the group-mean LP tolls.
pub fn build_sioux_falls(cfg: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    let dir = cfg.resolve_data_dir();
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    };
    let (net, demand) = load_tntp_with(
        &read(&cfg.net_file)?,
        &read(&cfg.trips_file)?,
        &TntpOptions { free_flow_time_scale: cfg.time_unit_hours },
    )?;
    let net = net.scale_capacities(cfg.capacity_scale)?;
    let mut pop = PopulationModel::from_demand(&demand, cfg.demand_scale, cfg.vot_spread, cfg.od_resample_prob, seed)?
        .with_vot_sharing(cfg.vot_sharing);
    let [lo, hi] = cfg.mean_vot_range;
    pop.sample_mean_vots(lo, hi)?;
    Scenario::assemble(ScenarioKind::SiouxFalls, seed, net, pop, Some(cfg.outside_factor))
}

/// One edge (c = 1, l = 1), two users per period, both of type I
/// (v = 1, λ = 2) or both of type II (v = 0, λ = 0) with equal odds.
pub fn build_lower_bound(seed: u64) -> Result<Scenario> {
    let net = Network::parallel(&[1.0], &[1.0])?;
    let types = vec![
        UserType { prob: 0.5, vot: 1.0, outside_cost: 2.0 },
        UserType { prob: 0.5, vot: 0.0, outside_cost: 0.0 },
    ];
    let pop = PopulationModel::shared_type((0, 1), 2, types, seed)?;
    Scenario::assemble(ScenarioKind::LowerBound, seed, net, pop, None)
}

/// Random parallel network: latencies U[0.1, 1] hours sorted, integral
/// capacities in 1..=3 topped up so every user fits, one single-user group
/// per user.
pub fn build_parallel_synth(cfg: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    let mut rng = keyed(seed, Purpose::Instance, 0, 0);
    let mut lats: Vec<f64> = (0..cfg.synth_edges).map(|_| rng.gen_range(0.1..1.0)).collect();
    lats.sort_by(f64::total_cmp);
    let mut caps: Vec<f64> = (0..cfg.synth_edges).map(|_| rng.gen_range(1..=3) as f64).collect();
    let room: f64 = caps.iter().sum();
    let users = cfg.synth_users as f64;
    if room < users {
        *caps.last_mut().expect("at least one edge") += users - room;
    }
    let net = Network::parallel(&lats, &caps)?;
    let groups = (0..cfg.synth_users as usize).map(|id| single_group(id, (0, 1), 1.0, cfg.vot_spread)).collect();
    let mut pop = PopulationModel::new(groups, vec![(0, 1)], seed)?;
    let [lo, hi] = cfg.mean_vot_range;
    pop.sample_mean_vots(lo, hi)?;
    Scenario::assemble(ScenarioKind::ParallelSynth, seed, net, pop, Some(cfg.outside_factor))
}

/// The six-node VCG counterexample with its two users (VoT 10 and 1).
pub fn build_counterexample(cfg: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    let cx = Counterexample::new();
    let groups = cx
        .users
        .iter()
        .enumerate()
        .map(|(id, u)| single_group(id, (u.origin, u.destination), u.vot, cfg.vot_spread))
        .collect();
    let pop = PopulationModel::new(groups, vec![(0, 5)], seed)?;
    Scenario::assemble(ScenarioKind::Counterexample, seed, cx.net, pop, Some(cfg.outside_factor))
}

fn single_group(id: usize, od: (usize, usize), mean_vot: f64, spread: f64) -> UserGroup {
    UserGroup { id, od, demand: 1, mean_vot, vot_spread: spread, od_resample_prob: 0.0, outside_cost: None }
}

/// Runs `policy` for `horizon` periods. Each period routes the sampled
/// users under the positive part of the posted tolls, records the raw
/// posted tolls, feeds (c, x^t) back to the policy, and on every
/// `oracle_every`-th period (starting with the first) records U_t*.
pub fn run_experiment(
    scenario: &mut Scenario,
    policy: &mut dyn TollPolicy,
    horizon: u64,
    oracle_every: u64,
) -> Result<RunTrace> {
    if horizon == 0 || oracle_every == 0 {
        return Err(Error::InvalidArgument("horizon and oracle_every must be positive".into()));
    }
    let caps = scenario.net.capacities();
    let mut periods = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let posted = policy.current().to_vec();
        if posted.len() != caps.len() {
            return Err(Error::DimensionMismatch { expected: caps.len(), got: posted.len() });
        }
        let users = scenario.population.sample_commodities(t)?;
        let rec = compute_equilibrium_batched(&scenario.net, &users, &TollVector::project(&posted))?;
        policy.update(&caps, &rec.flows_f64())?;
        let oracle = if (t - 1) % oracle_every == 0 { Some(scenario.oracle(t)?) } else { None };
        periods.push(PeriodRecord {
            system_cost: rec.system_cost,
            oracle_cost: oracle.map(|o| o.cost),
            oracle_status: oracle.map(|o| o.status),
            oracle_ip_cost: oracle.and_then(|o| o.ip_cost),
            flows: rec.flows,
            tolls: posted,
            total_travel_time: rec.total_travel_time,
            toll_revenue: rec.toll_revenue,
            routed_users: rec.routed_users,
            outside_users: rec.outside_users,
        });
    }
    Ok(RunTrace {
        policy: policy.name().to_string(),
        seed: scenario.seed,
        capacities: caps,
        periods,
        final_tolls: policy.current().to_vec(),
        min_travel_time: scenario.min_travel_time,
    })
}

/// Every configured policy on every seed at each horizon; traces are
/// ordered by seed, then horizon, then policy.
pub fn run_config(cfg: &ScenarioConfig, horizons: &[u64]) -> Result<Vec<RunTrace>> {
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let mut scenario = Scenario::build(cfg, seed)?;
        for &h in horizons {
            for &name in &cfg.policies {
                let mut policy = scenario.policy(cfg, name, h)?;
                out.push(run_experiment(&mut scenario, &mut policy, h, cfg.oracle_every)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower_bound_cfg(h: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(ScenarioKind::LowerBound, h);
        cfg.exact_oracle = true;
        cfg
    }

    #[test]
    fn lower_bound_oracle() {
        let cfg = lower_bound_cfg(50);
        let mut s = Scenario::build(&cfg, 3).unwrap();
        for t in 1..=50 {
            let users = s.population.sample_commodities(t).unwrap();
            let o = s.oracle(t).unwrap();
            if users[0].vot == 1.0 {
                assert!((o.cost - 3.0).abs() < 1e-9);
                assert_eq!(o.ip_cost, Some(3.0));
            } else {
                assert_eq!(o.cost, 0.0);
                assert_eq!(o.ip_cost, Some(0.0));
            }
        }
    }

    #[test]
    fn first_period_is_untolled() {
        let cfg = lower_bound_cfg(1);
        let mut s = Scenario::build(&cfg, 5).unwrap();
        let mut p = s.policy(&cfg, PolicyName::OnlineGradient, 1).unwrap();
        let tr = run_experiment(&mut s, &mut p, 1, 1).unwrap();
        let users = s.population.sample_commodities(1).unwrap();
        let untolled = compute_equilibrium_batched(&s.net, &users, &TollVector::zeros(1)).unwrap();
        assert_eq!(tr.periods[0].flows, untolled.flows);
        assert_eq!(tr.periods[0].tolls, vec![0.0]);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::ParallelSynth, 40);
        cfg.policies = vec![PolicyName::OnlineGradient, PolicyName::Reactive, PolicyName::UserMean];
        cfg.seeds = vec![2, 9];
        let a = run_config(&cfg, &[40]).unwrap();
        let b = run_config(&cfg, &[40]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn counterexample_builds() {
        let cfg = ScenarioConfig::new(ScenarioKind::Counterexample, 10);
        let s = Scenario::build(&cfg, 1).unwrap();
        assert_eq!(s.net.edge_count(), 7);
        // Untolled, both users want P1; λ is 1.5× the LP-toll cheapest cost.
        assert!(s.max_outside_cost().unwrap() > 10.0);
    }
}
