//! VCG payments: the closed form on parallel networks, the general
//! externality formula via exact optima, and an equilibrium check for
//! candidate edge-toll decompositions.

use crate::equilibrium::{Choice, TollVector};
use crate::error::{Error, Result};
use crate::lp_oracle::{brute_force_optimum, IntegralOptimum};
use crate::network::{enumerate_paths, Network, Path};
use crate::population::Commodity;

const PATH_LIMIT: usize = 10_000;

/// Parallel edges sorted by latency, users sorted by value of time, no
/// outside option.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelInstance {
    latencies: Vec<f64>,
    capacities: Vec<u32>,
    vots: Vec<f64>,
}

impl ParallelInstance {
    pub fn new(latencies: Vec<f64>, capacities: Vec<u32>, vots: Vec<f64>) -> Result<Self> {
        if latencies.len() != capacities.len() || latencies.is_empty() {
            return Err(Error::DimensionMismatch { expected: latencies.len(), got: capacities.len() });
        }
        if latencies.windows(2).any(|w| w[0] > w[1]) || latencies.iter().any(|&l| !(l >= 0.0)) {
            return Err(Error::InvalidArgument("latencies must be nonnegative and nondecreasing".into()));
        }
        if vots.windows(2).any(|w| w[0] < w[1]) || vots.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument("values of time must be nonnegative and nonincreasing".into()));
        }
        if capacities.contains(&0) {
            return Err(Error::InvalidArgument("capacities must be positive".into()));
        }
        let room: u64 = capacities.iter().map(|&c| c as u64).sum();
        if room < vots.len() as u64 {
            return Err(Error::Infeasible(format!("{} users exceed total capacity {room}", vots.len())));
        }
        Ok(ParallelInstance { latencies, capacities, vots })
    }

    pub fn latencies(&self) -> &[f64] {
        &self.latencies
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn vots(&self) -> &[f64] {
        &self.vots
    }

    pub fn network(&self) -> Result<Network> {
        let caps: Vec<f64> = self.capacities.iter().map(|&c| c as f64).collect();
        Network::parallel(&self.latencies, &caps)
    }

    pub fn users(&self) -> Vec<Commodity> {
        self.vots.iter().map(|&v| Commodity::single(0, 1, v, None)).collect()
    }

    /// Edge of each user under the greedy fill (fastest edge first, highest
    /// VoT first).
    pub fn greedy_assignment(&self) -> Vec<usize> {
        let mut edge = 0;
        let mut used = 0;
        self.vots
            .iter()
            .map(|_| {
                while used == self.capacities[edge] {
                    edge += 1;
                    used = 0;
                }
                used += 1;
                edge
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPayments {
    pub assignment: Vec<usize>,
    pub payments: Vec<f64>,
    /// Per-edge toll equal to the payment of its users; zero on unused edges.
    pub tolls: TollVector,
}

/// p_u = Σ_{e ≤ e' < M} v_{ē'} (l_{e'+1} − l_{e'}), where ē' is the first
/// user on edge e'+1 and M the last used edge.
pub fn vcg_payments_parallel(inst: &ParallelInstance) -> Result<ParallelPayments> {
    let assignment = inst.greedy_assignment();
    let m = inst.latencies.len();
    let Some(&last) = assignment.last() else {
        return Ok(ParallelPayments { assignment, payments: vec![], tolls: TollVector::zeros(m) });
    };
    let mut first_user = vec![usize::MAX; m];
    for (u, &e) in assignment.iter().enumerate().rev() {
        first_user[e] = u;
    }
    // Suffix sums: edge_pay[e] = Σ_{e ≤ e' < last} v_{first(e'+1)} (l_{e'+1} − l_{e'}).
    let mut edge_pay = vec![0.0; m];
    for e in (0..last).rev() {
        let v = inst.vots[first_user[e + 1]];
        edge_pay[e] = edge_pay[e + 1] + v * (inst.latencies[e + 1] - inst.latencies[e]);
    }
    let payments = assignment.iter().map(|&e| edge_pay[e]).collect();
    let tolls = TollVector::project(&edge_pay);
    Ok(ParallelPayments { assignment, payments, tolls })
}

fn weighted_travel(opt: &IntegralOptimum, skip: Option<usize>) -> Vec<f64> {
    opt.users
        .iter()
        .zip(&opt.choices)
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, (u, c))| c.path().map_or(0.0, |p| u.vot * p.latency()))
        .collect()
}

/// Externality of user `u` on everyone else:
/// Σ_{ū≠u} v_ū (l_{P*_ū(with u)} − l_{P*_ū(without u)}), from exact optima,
/// i.e. (U*(v) − v_u l_{P*_u}) − U*(v₋ᵤ). Users are single travellers
/// without outside options.
pub fn vcg_payment_general(net: &Network, users: &[Commodity], u: usize) -> Result<f64> {
    if u >= users.len() {
        return Err(Error::InvalidArgument(format!("user {u} out of range")));
    }
    if users.iter().any(|c| c.demand != 1) {
        return Err(Error::InvalidArgument("users must have unit demand".into()));
    }
    let with = brute_force_optimum(net, users, PATH_LIMIT)?
        .ok_or_else(|| Error::Infeasible("no capacity-feasible assignment".into()))?;
    let mut others = users.to_vec();
    others.remove(u);
    let without = brute_force_optimum(net, &others, PATH_LIMIT)?
        .ok_or_else(|| Error::Infeasible("no capacity-feasible assignment without the user".into()))?;
    let others_with = weighted_travel(&with, Some(u));
    let others_without = weighted_travel(&without, None);
    Ok(others_with.iter().zip(&others_without).map(|(a, b)| a - b).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub user: usize,
    pub from: Path,
    pub to: Path,
    /// Cost on `from` minus cost on `to` under the tolls.
    pub saving: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VcgEquilibriumReport {
    pub is_equilibrium: bool,
    /// First user (in input order) with a strictly cheaper path.
    pub deviation: Option<Deviation>,
    /// Cheapest strictly better path of every user that has one.
    pub deviations: Vec<Deviation>,
    /// System-optimal path of every user.
    pub assignment: Vec<Path>,
}

/// Checks whether the system-optimal assignment is an equilibrium under
/// `tolls`: reports the first user with a strictly cheaper path. Users are
/// single travellers without outside options.
pub fn check_vcg_equilibrium(net: &Network, users: &[Commodity], tolls: &TollVector) -> Result<VcgEquilibriumReport> {
    let opt = brute_force_optimum(net, users, PATH_LIMIT)?
        .ok_or_else(|| Error::Infeasible("no capacity-feasible assignment".into()))?;
    check_assignment(net, &opt, tolls)
}

fn check_assignment(net: &Network, opt: &IntegralOptimum, tolls: &TollVector) -> Result<VcgEquilibriumReport> {
    let mut assignment = Vec::with_capacity(opt.users.len());
    let mut deviations = Vec::new();
    for (i, (u, choice)) in opt.users.iter().zip(&opt.choices).enumerate() {
        let Choice::Path(current) = choice else {
            return Err(Error::InvalidArgument("users must not have outside options".into()));
        };
        assignment.push(current.clone());
        let here = current.cost(u.vot, tolls.as_slice());
        let set = enumerate_paths(net, u.origin, u.destination, PATH_LIMIT)?;
        let mut best: Option<Deviation> = None;
        for p in set.paths {
            let saving = here - p.cost(u.vot, tolls.as_slice());
            if saving > 1e-9 && best.as_ref().is_none_or(|b| saving > b.saving) {
                best = Some(Deviation { user: i, from: current.clone(), to: p, saving });
            }
        }
        deviations.extend(best);
    }
    Ok(VcgEquilibriumReport {
        is_equilibrium: deviations.is_empty(),
        deviation: deviations.first().cloned(),
        deviations,
        assignment,
    })
}

/// Six-node single O-D network with three routes sharing bottleneck edges,
/// on which VCG payments admit no edge-toll decomposition.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub net: Network,
    /// High-VoT user first, low-VoT user second; both travel v1 → v6.
    pub users: Vec<Commodity>,
    /// P1 = e1 e2 e3, P2 = e4 e5 e3, P3 = e1 e6 e7.
    pub paths: [Path; 3],
}

impl Counterexample {
    /// Latencies give l_P1 = 1, l_P2 = 2, l_P3 = 3; e1 and e3 have capacity
    /// 1, the rest 3; values of time 10 and 1.
    pub fn new() -> Self {
        // Edge ids 0..7 correspond to e1..e7.
        let net = Network::from_edges(
            6,
            [
                (0, 1, 0.5, 1.0),
                (1, 2, 0.25, 3.0),
                (2, 5, 0.25, 1.0),
                (0, 3, 1.0, 3.0),
                (3, 2, 0.75, 3.0),
                (1, 4, 1.25, 3.0),
                (4, 5, 1.25, 3.0),
            ],
        )
        .expect("fixture network is valid");
        let paths = [
            Path::new(&net, vec![0, 1, 2]).expect("P1"),
            Path::new(&net, vec![3, 4, 2]).expect("P2"),
            Path::new(&net, vec![0, 5, 6]).expect("P3"),
        ];
        let users = vec![Commodity::single(0, 5, 10.0, None), Commodity::single(0, 5, 1.0, None)];
        Counterexample { net, users, paths }
    }

    /// Each user's VCG payment charged on the bottleneck edge of its own
    /// optimal route: the low-VoT user (on P3) pays v_high (l_P2 − l_P1) on
    /// e1, the high-VoT user (on P2) pays v_low (l_P3 − l_P1) on e3.
    pub fn decomposed_tolls(&self) -> TollVector {
        let l: Vec<f64> = self.paths.iter().map(|p| p.latency()).collect();
        let (hi, lo) = (self.users[0].vot, self.users[1].vot);
        let mut t = vec![0.0; self.net.edge_count()];
        t[0] = hi * (l[1] - l[0]);
        t[2] = lo * (l[2] - l[0]);
        TollVector::new(t).expect("nonnegative")
    }

    /// The opposite orientation: τ_e1 = v_low (l_P3 − l_P1),
    /// τ_e3 = v_high (l_P2 − l_P1).
    pub fn swapped_tolls(&self) -> TollVector {
        let l: Vec<f64> = self.paths.iter().map(|p| p.latency()).collect();
        let (hi, lo) = (self.users[0].vot, self.users[1].vot);
        let mut t = vec![0.0; self.net.edge_count()];
        t[0] = lo * (l[2] - l[0]);
        t[2] = hi * (l[1] - l[0]);
        TollVector::new(t).expect("nonnegative")
    }
}

impl Default for Counterexample {
    fn default() -> Self {
        Self::new()
    }
}
