//! The acceptance suite as library code, shared by `tollsim verify` and the
//! integration tests.
//!
//! Each criterion returns a [`CriterionResult`]. The simulation-based ones
//! take a [`PolicyFactory`] so a deliberately broken toll rule can be run
//! through the same checks.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{compute_equilibrium_batched, Choice};
use crate::error::{Error, Result};
use crate::lp_oracle::{brute_force_optimum, check_market_clearing, solve_lp, subgradient_solve, LpInstance, StepSchedule};
use crate::metrics::{loglog_slope, normalized_metrics, regret, regret_bound, violation, violation_bound, RunTrace, SlopeFit};
use crate::network::Network;
use crate::population::Commodity;
use crate::scenarios::{build_lower_bound, run_experiment, PolicyName, Scenario, ScenarioConfig, ScenarioKind, StepName, StepRule};
use crate::toller::TollPolicy;
use crate::vcg::{check_vcg_equilibrium, vcg_payment_general, vcg_payments_parallel, Counterexample, ParallelInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Fewer seeds and shorter horizons; minutes rather than a quarter hour.
    Fast,
    /// The stated sizes.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    /// `PASS  1 violation scaling: ...`
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {:>2} {}: {} ({:.1}s)", self.id, self.name, self.detail, self.seconds)
    }
}

fn outcome(id: u8, name: &'static str, start: Instant, passed: bool, detail: String) -> CriterionResult {
    CriterionResult { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Builds the policy under test for a scenario, its config and a horizon.
pub type PolicyFactory<'a> = dyn Fn(&Scenario, &ScenarioConfig, u64) -> Result<Box<dyn TollPolicy>> + 'a;

/// The projected dual-gradient policy as configured.
pub fn online_gradient(s: &Scenario, cfg: &ScenarioConfig, horizon: u64) -> Result<Box<dyn TollPolicy>> {
    Ok(Box::new(s.policy(cfg, PolicyName::OnlineGradient, horizon)?))
}

/// Reduced Sioux Falls used by the scaling and benchmark criteria: demand
/// ×0.1, capacity ×0.2, γ = 0.01/√T dollars, 10% O-D resampling.
pub fn reduced_sioux_falls(horizon: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ScenarioKind::SiouxFalls, horizon);
    cfg.demand_scale = 0.1;
    cfg.capacity_scale = 0.2;
    cfg.step = Some(StepRule::Named(StepName::InvSqrt));
    cfg.step_scale = 0.01;
    cfg.od_resample_prob = 0.1;
    cfg.oracle_every = 250;
    cfg.seeds = (1..=10).collect();
    cfg
}

/// Per-run quantities checked against the a priori bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCheck {
    pub label: String,
    pub seed: u64,
    pub horizon: u64,
    pub step: f64,
    pub regret: f64,
    pub regret_bound: f64,
    pub violation_l2: f64,
    pub violation_bound: f64,
    /// Extremes of every posted toll, including τ^(T+1).
    pub toll_min: f64,
    pub toll_max: f64,
    pub toll_bound: f64,
}

impl RunCheck {
    pub fn from_trace(label: &str, scenario: &Scenario, trace: &RunTrace, step: f64) -> Result<Self> {
        let t = trace.horizon();
        let users = scenario.population.total_users();
        let cmax = scenario.net.max_capacity();
        let lmax = scenario.max_outside_cost()?;
        let m = scenario.net.edge_count();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for tolls in trace.periods.iter().map(|p| &p.tolls).chain(std::iter::once(&trace.final_tolls)) {
            for &v in tolls {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok(RunCheck {
            label: label.to_string(),
            seed: trace.seed,
            horizon: t as u64,
            step,
            regret: regret(trace)?,
            regret_bound: regret_bound(m, users, cmax, t),
            violation_l2: violation(trace).l2,
            violation_bound: violation_bound(m, lmax, cmax, users, t),
            toll_min: lo,
            toll_max: hi,
            toll_bound: scenario.toll_bound()?,
        })
    }

    pub fn within_regret_bounds(&self) -> bool {
        self.regret <= self.regret_bound && self.violation_l2 <= self.violation_bound
    }

    pub fn tolls_bounded(&self) -> bool {
        self.toll_min >= 0.0 && self.toll_max <= self.toll_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// (T, mean L∞ cumulative violation across seeds).
    pub points: Vec<(f64, f64)>,
    pub fit: Option<SlopeFit>,
    pub checks: Vec<RunCheck>,
}

/// Runs the policy from `factory` on every seed of `cfg` at each horizon,
/// sharing one scenario (and its oracle cache) per seed.
pub fn violation_sweep(cfg: &ScenarioConfig, horizons: &[u64], factory: &PolicyFactory) -> Result<SweepOutcome> {
    let mut sums = vec![0.0; horizons.len()];
    let mut checks = Vec::new();
    for &seed in &cfg.seeds {
        let mut scenario = Scenario::build(cfg, seed)?;
        for (i, &h) in horizons.iter().enumerate() {
            let mut policy = factory(&scenario, cfg, h)?;
            let trace = run_experiment(&mut scenario, policy.as_mut(), h, cfg.oracle_every)?;
            sums[i] += violation(&trace).linf;
            checks.push(RunCheck::from_trace("sioux_falls", &scenario, &trace, cfg.step(h)?)?);
        }
    }
    let n = cfg.seeds.len() as f64;
    let points: Vec<(f64, f64)> = horizons.iter().zip(&sums).map(|(&h, &s)| (h as f64, s / n)).collect();
    let fit = loglog_slope(&points).ok();
    Ok(SweepOutcome { points, fit, checks })
}

/// Runs on the one-edge lower-bound instance with γ = 1/√T.
pub fn lower_bound_runs(horizons: &[u64], seeds: &[u64], factory: &PolicyFactory) -> Result<Vec<RunCheck>> {
    let mut out = Vec::new();
    for &seed in seeds {
        let mut cfg = ScenarioConfig::new(ScenarioKind::LowerBound, 1);
        cfg.seeds = vec![seed];
        let mut scenario = Scenario::build(&cfg, seed)?;
        for &h in horizons {
            let mut policy = factory(&scenario, &cfg, h)?;
            let trace = run_experiment(&mut scenario, policy.as_mut(), h, 1)?;
            out.push(RunCheck::from_trace("lower_bound", &scenario, &trace, cfg.step(h)?)?);
        }
    }
    Ok(out)
}

fn sweep_size(scale: Scale) -> (Vec<u64>, Vec<u64>) {
    match scale {
        Scale::Full => (vec![100, 200, 500, 1000, 2000, 5000], (1..=10).collect()),
        Scale::Fast => (vec![100, 200, 500, 1000], vec![1, 2]),
    }
}

fn lower_bound_size(scale: Scale) -> (Vec<u64>, Vec<u64>) {
    match scale {
        Scale::Full => (vec![100, 1000, 10_000], (1..=5).collect()),
        Scale::Fast => (vec![100, 1000], vec![1, 2]),
    }
}

/// Slope of mean L∞ violation in [0.35, 0.65] with RMSE < 0.1.
pub fn criterion_1(sweep: &SweepOutcome, start: Instant) -> CriterionResult {
    let name = "violation grows like sqrt(T)";
    match sweep.fit {
        Some(fit) => {
            let passed = (0.35..=0.65).contains(&fit.slope) && fit.rmse < 0.1;
            let pts: Vec<String> = sweep.points.iter().map(|(t, v)| format!("{t}:{v:.1}")).collect();
            let detail = format!("slope {:.4}, rmse {:.4}, mean linf [{}]", fit.slope, fit.rmse, pts.join(" "));
            outcome(1, name, start, passed, detail)
        }
        None => outcome(1, name, start, false, format!("no slope fit for points {:?}", sweep.points)),
    }
}

/// R_T and ‖v‖₂ under their bounds on every run.
pub fn criterion_2(checks: &[RunCheck], start: Instant) -> CriterionResult {
    let bad: Vec<&RunCheck> = checks.iter().filter(|c| !c.within_regret_bounds()).collect();
    let worst_r = checks.iter().map(|c| c.regret / c.regret_bound).fold(f64::NEG_INFINITY, f64::max);
    let worst_v = checks.iter().map(|c| c.violation_l2 / c.violation_bound).fold(f64::NEG_INFINITY, f64::max);
    let mut detail = format!(
        "{} runs, {} violations, max regret/bound {worst_r:.3e}, max l2/bound {worst_v:.3e}",
        checks.len(),
        bad.len()
    );
    if let Some(c) = bad.first() {
        detail.push_str(&format!("; first: {} seed {} T {}", c.label, c.seed, c.horizon));
    }
    outcome(2, "regret and violation bounds", start, bad.is_empty() && !checks.is_empty(), detail)
}

/// 0 ≤ τ_e ≤ max λ + max c + |U| in every period of every run with γ ≤ 1.
pub fn criterion_3(checks: &[RunCheck], start: Instant) -> CriterionResult {
    let eligible: Vec<&RunCheck> = checks.iter().filter(|c| c.step <= 1.0).collect();
    let bad: Vec<&&RunCheck> = eligible.iter().filter(|c| !c.tolls_bounded()).collect();
    let lo = eligible.iter().map(|c| c.toll_min).fold(f64::INFINITY, f64::min);
    let ratio = eligible.iter().map(|c| c.toll_max / c.toll_bound).fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "{} runs, {} violations, min toll {lo:.6}, max toll/bound {ratio:.3e}",
        eligible.len(),
        bad.len()
    );
    outcome(3, "toll boundedness", start, bad.is_empty() && !eligible.is_empty(), detail)
}

/// Runs the criterion-1 sweep and the lower-bound runs once and scores
/// criteria 1 to 3 on them.
pub fn simulation_criteria(scale: Scale, factory: &PolicyFactory) -> Result<[CriterionResult; 3]> {
    let start = Instant::now();
    let (horizons, seeds) = sweep_size(scale);
    let mut cfg = reduced_sioux_falls(horizons[0]);
    cfg.seeds = seeds;
    let sweep = violation_sweep(&cfg, &horizons, factory)?;
    let c1 = criterion_1(&sweep, start);
    let (lb_h, lb_s) = lower_bound_size(scale);
    let mut checks = sweep.checks;
    checks.extend(lower_bound_runs(&lb_h, &lb_s, factory)?);
    Ok([c1, criterion_2(&checks, start), criterion_3(&checks, start)])
}

/// A random instance with at most 4 nodes, 6 edges and 4 unit users, each
/// with an outside option so the LP is always feasible.
pub fn random_small_instance(rng: &mut ChaCha8Rng) -> Result<(Network, Vec<Commodity>)> {
    let n = rng.gen_range(2..=4);
    let m = rng.gen_range(1..=6);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let tail = rng.gen_range(0..n);
        let head = (tail + rng.gen_range(1..n)) % n;
        let latency = (rng.gen_range(0.1..2.0f64) * 100.0).round() / 100.0;
        edges.push((tail, head, latency, rng.gen_range(1..=3) as f64));
    }
    let net = Network::from_edges(n, edges)?;
    let k = rng.gen_range(1..=4);
    let users = (0..k)
        .map(|_| {
            let o = rng.gen_range(0..n);
            let d = (o + rng.gen_range(1..n)) % n;
            let vot = (rng.gen_range(0.5..10.0f64) * 10.0).round() / 10.0;
            let lambda = (rng.gen_range(0.5..20.0f64) * 10.0).round() / 10.0;
            Commodity::single(o, d, vot, Some(lambda))
        })
        .collect();
    Ok((net, users))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// LP duality, complementary slackness, and the integral optimum being an
/// equilibrium under τ* whenever the LP optimum is integral.
pub fn criterion_4(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let count = match scale {
        Scale::Full => 200,
        Scale::Fast => 50,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let (mut worst_gap, mut worst_cs) = (0.0f64, 0.0f64);
    let (mut integral, mut matched) = (0, 0);
    let mut failures = Vec::new();
    for i in 0..count {
        let (net, users) = random_small_instance(&mut rng)?;
        let inst = LpInstance::new(&net, users.clone())?;
        let sol = solve_lp(&inst)?;
        let gap = sol.duality_gap() / sol.objective.abs().max(1.0);
        let mc = check_market_clearing(&inst, &sol)?;
        let cs = mc.max_slackness().max(mc.max_excess()).max(mc.max_user_residual());
        worst_gap = worst_gap.max(gap);
        worst_cs = worst_cs.max(cs);
        if gap > 1e-6 || cs > 1e-6 {
            failures.push(format!("#{i} gap {gap:.2e} cs {cs:.2e}"));
        }
        if !sol.is_integral(1e-9) {
            continue;
        }
        integral += 1;
        let Some(ip) = brute_force_optimum(&net, &users, 256)? else {
            failures.push(format!("#{i} integral LP but no feasible assignment"));
            continue;
        };
        // The optimum is an equilibrium under τ* when every user's assigned
        // option costs no more than its best response.
        let best = compute_equilibrium_batched(&net, &users, &sol.tolls)?;
        let is_eq = ip.users.iter().zip(&ip.choices).zip(&best.costs).all(|((u, c), &b)| {
            let own = match c {
                Choice::Path(p) => p.cost(u.vot, sol.tolls.as_slice()),
                Choice::Outside => u.outside_cost.unwrap_or(f64::INFINITY),
            };
            own <= b + 1e-9 * b.abs().max(1.0)
        });
        if is_eq && rel(ip.cost, sol.objective) <= 1e-9 {
            matched += 1;
        } else {
            failures.push(format!("#{i} ip {} lp {} equilibrium {is_eq}", ip.cost, sol.objective));
        }
    }
    let detail = format!(
        "{count} instances, max rel gap {worst_gap:.2e}, max cs residual {worst_cs:.2e}, integral {integral}, matched {matched}{}",
        failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
    );
    Ok(outcome(4, "market clearing", start, failures.is_empty() && integral > 0, detail))
}

/// 2·E[(S₁ − T)₊] where S₁ = 2·Bin(T, 1/2), the expected excess of type-I
/// users over the T units of capacity.
pub fn lower_bound_gap_exact(horizon: u64) -> f64 {
    let t = horizon as i64;
    // ln C(T, k) 2^-T accumulated in log space to avoid underflow.
    let mut ln_pmf = -(horizon as f64) * std::f64::consts::LN_2;
    let mut sum = 0.0;
    for k in 0..=t {
        if k > 0 {
            ln_pmf += ((t - k + 1) as f64).ln() - (k as f64).ln();
        }
        let excess = 2 * k - t;
        if excess > 0 {
            sum += excess as f64 * ln_pmf.exp();
        }
    }
    2.0 * sum
}

/// Monte Carlo 2·(S₁ − T)₊ averaged over `seeds` seeds, from the
/// lower-bound scenario's own draws.
pub fn lower_bound_gap_estimate(horizon: u64, seeds: u64) -> Result<f64> {
    let mut total = 0.0;
    for seed in 1..=seeds {
        let s = build_lower_bound(seed)?;
        let mut type_one = 0u64;
        for t in 1..=horizon {
            for c in s.population.sample_commodities(t)? {
                if c.vot > 0.0 {
                    type_one += c.demand as u64;
                }
            }
        }
        total += 2.0 * (type_one as f64 - horizon as f64).max(0.0);
    }
    Ok(total / seeds as f64)
}

/// The sampled gap fits slope 0.5 ± 0.05 over T ∈ {10², 10³, 10⁴}.
pub fn criterion_5(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let seeds = match scale {
        Scale::Full => 1000,
        Scale::Fast => 200,
    };
    let horizons = [100u64, 1000, 10_000];
    let mut pts = Vec::new();
    let mut exact = Vec::new();
    for &h in &horizons {
        pts.push((h as f64, lower_bound_gap_estimate(h, seeds)?));
        exact.push((h as f64, lower_bound_gap_exact(h)));
    }
    let fit = loglog_slope(&pts)?;
    let exact_fit = loglog_slope(&exact)?;
    let shown: Vec<String> = pts.iter().zip(&exact).map(|(p, e)| format!("{}:{:.2}/{:.2}", p.0, p.1, e.1)).collect();
    let detail = format!(
        "{seeds} seeds, slope {:.4} (exact {:.4}), sampled/exact [{}]",
        fit.slope,
        exact_fit.slope,
        shown.join(" ")
    );
    Ok(outcome(5, "lower bound sqrt(T)", start, (fit.slope - 0.5).abs() <= 0.05, detail))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BenchmarkRow {
    pub normalized_regret: f64,
    pub normalized_violation: f64,
    pub normalized_travel_time: f64,
}

/// Seed-averaged normalized metrics per policy, in `policies` order.
pub fn benchmark_table(cfg: &ScenarioConfig, policies: &[PolicyName]) -> Result<Vec<BenchmarkRow>> {
    let mut rows = vec![BenchmarkRow::default(); policies.len()];
    let n = cfg.seeds.len() as f64;
    for &seed in &cfg.seeds {
        let mut scenario = Scenario::build(cfg, seed)?;
        for (row, &name) in rows.iter_mut().zip(policies) {
            let mut policy = scenario.policy(cfg, name, cfg.horizon)?;
            let trace = run_experiment(&mut scenario, &mut policy, cfg.horizon, cfg.oracle_every)?;
            let rep = normalized_metrics(&trace)?;
            let ntt = rep
                .normalized_travel_time
                .ok_or_else(|| Error::InvalidArgument("scenario has no minimum travel time".into()))?;
            row.normalized_regret += rep.normalized_regret / n;
            row.normalized_violation += rep.normalized_violation / n;
            row.normalized_travel_time += ntt / n;
        }
    }
    Ok(rows)
}

/// The gradient policy beats both static benchmarks on normalized regret and the
/// reactive one on normalized L∞ violation, with travel time within 10% of
/// the capacity-feasible minimum.
pub fn criterion_6(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut cfg = reduced_sioux_falls(2000);
    cfg.oracle_every = 50;
    if scale == Scale::Fast {
        cfg.horizon = 500;
        cfg.oracle_every = 25;
        cfg.seeds = vec![1, 2];
    }
    let policies = [PolicyName::OnlineGradient, PolicyName::Reactive, PolicyName::PopulationMean, PolicyName::UserMean];
    let rows = benchmark_table(&cfg, &policies)?;
    let [og, re, pm, um] = [rows[0], rows[1], rows[2], rows[3]];
    let regret_ok = og.normalized_regret <= pm.normalized_regret && og.normalized_regret <= um.normalized_regret;
    let violation_ok = og.normalized_violation <= re.normalized_violation;
    let travel_ok = (og.normalized_travel_time - 1.0).abs() <= 0.1;
    let table: Vec<String> = policies
        .iter()
        .zip(&rows)
        .map(|(p, r)| {
            format!(
                "{} nreg {:.5} nviol {:.5} ntt {:.4}",
                p.as_str(),
                r.normalized_regret,
                r.normalized_violation,
                r.normalized_travel_time
            )
        })
        .collect();
    let detail = format!(
        "T {} seeds {}: regret {} violation {} travel {}; {}",
        cfg.horizon,
        cfg.seeds.len(),
        ok(regret_ok),
        ok(violation_ok),
        ok(travel_ok),
        table.join("; ")
    );
    Ok(outcome(6, "benchmark ordering", start, regret_ok && violation_ok && travel_ok, detail))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

/// A random parallel instance: 1 to 4 edges with sorted latencies, 1 to 5
/// users with sorted VoTs, capacities topped up so everyone fits. Latencies
/// and VoTs are distinct so the optimal assignment, and with it each user's
/// payment, is unique.
pub fn random_parallel_instance(rng: &mut ChaCha8Rng) -> Result<ParallelInstance> {
    let m = rng.gen_range(1..=4);
    let lats = distinct_sorted(rng, m, 0.1, 3.0);
    let mut caps: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=2)).collect();
    let users = rng.gen_range(1..=5);
    let room: u32 = caps.iter().sum();
    if room < users {
        caps[m - 1] += users - room;
    }
    let mut vots = distinct_sorted(rng, users as usize, 0.5, 20.0);
    vots.reverse();
    ParallelInstance::new(lats, caps, vots)
}

/// `n` distinct two-decimal values in [lo, hi), ascending.
fn distinct_sorted(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(n);
    while out.len() < n {
        let v = (rng.gen_range(lo..hi) * 100.0).round() / 100.0;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Closed-form parallel VCG payments against the general externality
/// formula, their edge-toll structure, and the counterexample.
pub fn criterion_7(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let count = match scale {
        Scale::Full => 100,
        Scale::Fast => 30,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..count {
        let inst = random_parallel_instance(&mut rng)?;
        let pay = vcg_payments_parallel(&inst)?;
        let net = inst.network()?;
        let users = inst.users();
        for u in 0..users.len() {
            let general = vcg_payment_general(&net, &users, u)?;
            let d = (general - pay.payments[u]).abs();
            worst = worst.max(d);
            if d > 1e-9 {
                failures.push(format!("#{i} user {u}: parallel {} general {general}", pay.payments[u]));
            }
        }
        for (u, &e) in pay.assignment.iter().enumerate() {
            if pay.payments[u] != pay.tolls[e] {
                failures.push(format!("#{i} user {u} pays {} but edge {e} charges {}", pay.payments[u], pay.tolls[e]));
            }
        }
        if let Some(&last) = pay.assignment.iter().max() {
            if pay.tolls[last] != 0.0 {
                failures.push(format!("#{i} last used edge charges {}", pay.tolls[last]));
            }
        }
        if !check_vcg_equilibrium(&net, &users, &pay.tolls)?.is_equilibrium {
            failures.push(format!("#{i} VCG tolls are not an equilibrium"));
        }
    }
    let cx = Counterexample::new();
    let rep = check_vcg_equilibrium(&cx.net, &cx.users, &cx.decomposed_tolls())?;
    let low_deviates = rep.deviations.iter().any(|d| d.user == 1 && d.saving > 0.0);
    if !low_deviates {
        failures.push("counterexample: no profitable deviation for the low-VoT user".into());
    }
    let detail = format!(
        "{count} instances, max |parallel - general| {worst:.1e}, counterexample low-VoT deviation {}{}",
        low_deviates,
        failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
    );
    Ok(outcome(7, "VCG payments", start, failures.is_empty(), detail))
}

/// Offline supergradient ascent reaches the LP optimum and the toll-only
/// dual at τ* equals U*.
pub fn criterion_8(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let count = match scale {
        Scale::Full => 50,
        Scale::Fast => 20,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let (mut worst_sub, mut worst_dual) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for i in 0..count {
        let (net, users) = random_small_instance(&mut rng)?;
        let inst = LpInstance::new(&net, users)?;
        let sol = solve_lp(&inst)?;
        let sub = subgradient_solve(&inst, 20_000, StepSchedule::InvSqrt(1.0))?;
        let sub_err = (sub.best_value - sol.dual_value).abs() / (sol.objective.abs() + 1.0);
        let dual_err = rel(inst.dual_objective(&sol.tolls)?, sol.objective);
        worst_sub = worst_sub.max(sub_err);
        worst_dual = worst_dual.max(dual_err);
        if sub_err > 1e-3 || dual_err > 1e-6 {
            failures.push(format!("#{i} subgradient {sub_err:.2e} dual {dual_err:.2e}"));
        }
    }
    let detail = format!(
        "{count} instances, max subgradient error {worst_sub:.2e}, max strong-duality error {worst_dual:.2e}{}",
        failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
    );
    Ok(outcome(8, "solver cross-check", start, failures.is_empty(), detail))
}

/// Every criterion in order. An error inside a criterion is reported as a
/// failure of that criterion.
pub fn run_all(scale: Scale, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let mut push = |r: CriterionResult, out: &mut Vec<CriterionResult>| {
        report(&r);
        out.push(r);
    };
    let start = Instant::now();
    match simulation_criteria(scale, &online_gradient) {
        Ok(rs) => rs.into_iter().for_each(|r| push(r, &mut out)),
        Err(e) => {
            for (id, name) in [(1, "violation grows like sqrt(T)"), (2, "regret and violation bounds"), (3, "toll boundedness")] {
                push(outcome(id, name, start, false, format!("error: {e}")), &mut out);
            }
        }
    }
    let rest: [(u8, &'static str, fn(Scale) -> Result<CriterionResult>); 5] = [
        (4, "market clearing", criterion_4),
        (5, "lower bound sqrt(T)", criterion_5),
        (6, "benchmark ordering", criterion_6),
        (7, "VCG payments", criterion_7),
        (8, "solver cross-check", criterion_8),
    ];
    for (id, name, f) in rest {
        let start = Instant::now();
        let r = f(scale).unwrap_or_else(|e| outcome(id, name, start, false, format!("error: {e}")));
        push(r, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gap_small_cases() {
        // T = 1: S₁ ∈ {0, 2}, excess 1 with probability 1/2.
        assert!((lower_bound_gap_exact(1) - 1.0).abs() < 1e-12);
        // T = 2: S₁ = 4 w.p. 1/4 gives excess 2.
        assert!((lower_bound_gap_exact(2) - 1.0).abs() < 1e-12);
        // Large T approaches 2·√(T/(2π)).
        let t = 10_000.0f64;
        let approx = 2.0 * (t / (2.0 * std::f64::consts::PI)).sqrt();
        assert!((lower_bound_gap_exact(10_000) / approx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn random_instances_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (net, users) = random_small_instance(&mut rng).unwrap();
            assert!(net.node_count() <= 4 && net.edge_count() <= 6 && users.len() <= 4);
        }
    }
}
