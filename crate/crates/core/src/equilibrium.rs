//! Best responses of myopic users to posted tolls, and the induced flows.
//!
//! Routing is atomic and capacity-blind: every user takes a cheapest path
//! under `vot * latency + toll`, or the outside option when that is strictly
//! cheaper. A tie between the best path and the outside option goes to the
//! path.

use crate::error::{Error, Result};
use crate::network::{validate_costs, Network, Path, ShortestPathTree};
use crate::population::{Commodity, UserDraw};

/// Nonnegative per-edge tolls in dollars, indexed by edge id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TollVector(Vec<f64>);

impl TollVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Negative { index, value });
            }
        }
        Ok(TollVector(values))
    }

    pub fn zeros(edges: usize) -> Self {
        TollVector(vec![0.0; edges])
    }

    /// Componentwise positive part of `raw`.
    pub fn project(raw: &[f64]) -> Self {
        TollVector(raw.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Σ_e τ_e y_e.
    pub fn dot(&self, y: &[f64]) -> f64 {
        self.0.iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<usize> for TollVector {
    type Output = f64;
    fn index(&self, e: usize) -> &f64 {
        &self.0[e]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    Path(Path),
    Outside,
}

impl Choice {
    pub fn path(&self) -> Option<&Path> {
        match self {
            Choice::Path(p) => Some(p),
            Choice::Outside => None,
        }
    }
}

/// Outcome of one period. Entries are users for [`compute_equilibrium`] and
/// commodities for [`compute_equilibrium_batched`]; `counts` gives the users
/// behind each entry and `costs` the per-user cost.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentRecord {
    pub period: u64,
    pub choices: Vec<Choice>,
    pub costs: Vec<f64>,
    pub counts: Vec<u32>,
    /// x_e: number of users whose path contains e.
    pub flows: Vec<u64>,
    /// U_t: VoT-weighted travel time plus outside-option costs.
    pub system_cost: f64,
    /// Hours travelled by routed users.
    pub total_travel_time: f64,
    pub toll_revenue: f64,
    pub routed_users: u64,
    pub outside_users: u64,
}

impl AssignmentRecord {
    fn empty(edges: usize) -> Self {
        AssignmentRecord { flows: vec![0; edges], ..Default::default() }
    }

    pub fn flows_f64(&self) -> Vec<f64> {
        self.flows.iter().map(|&x| x as f64).collect()
    }

    /// Σ_u cost_u, the right side of U_t + τ·x = Σ_u min(best path, λ_u).
    pub fn total_user_cost(&self) -> f64 {
        self.costs.iter().zip(&self.counts).map(|(c, &n)| c * n as f64).sum()
    }

    fn push(&mut self, choice: Choice, cost: f64, vot: f64, outside: Option<f64>, count: u32, tolls: &[f64]) {
        let n = count as f64;
        match &choice {
            Choice::Path(p) => {
                for &e in p.edges() {
                    self.flows[e] += count as u64;
                }
                self.system_cost += n * vot * p.latency();
                self.total_travel_time += n * p.latency();
                self.toll_revenue += n * p.toll(tolls);
                self.routed_users += count as u64;
            }
            Choice::Outside => {
                self.system_cost += n * outside.unwrap_or(0.0);
                self.outside_users += count as u64;
            }
        }
        self.choices.push(choice);
        self.costs.push(cost);
        self.counts.push(count);
    }
}

fn respond(net: &Network, c: &Commodity, tolls: &[f64], costs: &mut Vec<f64>) -> Result<(Choice, f64)> {
    net.check_node(c.origin)?;
    net.check_node(c.destination)?;
    if c.origin == c.destination {
        return Err(Error::SelfTrip(c.origin));
    }
    costs.clear();
    costs.extend(net.edges().iter().zip(tolls).map(|(e, &t)| c.vot * e.latency + t));
    let tree = ShortestPathTree::compute(net, c.origin, costs);
    let best = tree.path_to(c.destination).map(|p| {
        let cost = p.cost(c.vot, tolls);
        (p, cost)
    });
    decide(c, best)
}

fn check_tolls(net: &Network, tolls: &TollVector) -> Result<()> {
    validate_costs(net, tolls.as_slice())
}

/// Cheapest option for one user: a path under `vot * l_e + τ_e`, or the
/// outside option when strictly cheaper.
pub fn best_response(net: &Network, draw: &UserDraw, tolls: &TollVector) -> Result<(Choice, f64)> {
    check_tolls(net, tolls)?;
    respond(net, &Commodity::from(draw), tolls.as_slice(), &mut Vec::new())
}

/// Independent best responses of every user and the induced edge flows.
pub fn compute_equilibrium(net: &Network, draws: &[UserDraw], tolls: &TollVector) -> Result<AssignmentRecord> {
    check_tolls(net, tolls)?;
    let mut rec = AssignmentRecord::empty(net.edge_count());
    let mut scratch = Vec::new();
    for d in draws {
        let (choice, cost) = respond(net, &Commodity::from(d), tolls.as_slice(), &mut scratch)?;
        rec.push(choice, cost, d.vot, Some(d.outside_cost), 1, tolls.as_slice());
    }
    Ok(rec)
}

/// As [`compute_equilibrium`], for aggregated commodities. Commodities without
/// an outside option must be routable.
///
/// Shortest-path trees are shared across commodities with a common origin.
/// Path costs are linear in the VoT, so when the trees at two VoTs agree and
/// neither saw an exact tie, every VoT in between has that same tree and each
/// of its paths is the unique optimum. The distinct VoTs of an origin are
/// bisected on that test, which needs far fewer searches than one per
/// commodity.
pub fn compute_equilibrium_batched(net: &Network, commodities: &[Commodity], tolls: &TollVector) -> Result<AssignmentRecord> {
    check_tolls(net, tolls)?;
    for c in commodities {
        net.check_node(c.origin)?;
        net.check_node(c.destination)?;
        if c.origin == c.destination {
            return Err(Error::SelfTrip(c.origin));
        }
        if !(c.vot >= 0.0) || !c.vot.is_finite() {
            return Err(Error::InvalidArgument(format!("value of time {} must be finite and nonnegative", c.vot)));
        }
    }
    let tolls = tolls.as_slice();
    let queries: Vec<(usize, usize, f64)> = commodities.iter().map(|c| (c.origin, c.destination, c.vot)).collect();
    let paths = cheapest_paths(net, &queries, tolls);
    let mut rec = AssignmentRecord::empty(net.edge_count());
    for (c, p) in commodities.iter().zip(paths) {
        let (choice, cost) = decide(
            c,
            p.map(|p| {
                let cost = p.cost(c.vot, tolls);
                (p, cost)
            }),
        )?;
        rec.push(choice, cost, c.vot, c.outside_cost, c.demand, tolls);
    }
    Ok(rec)
}

/// Tie-broken cheapest path under `vot * l_e + τ_e` for each
/// `(origin, destination, vot)` query; the same paths as one
/// [`ShortestPathTree`] per query. Inputs are assumed validated.
///
/// Searches are shared across queries with a common origin. The chosen path
/// is the lexicographically smallest optimal one and path costs are linear in
/// the VoT, so when it agrees at two VoTs it is also the choice at every VoT
/// in between: a path tight inside the interval is tight at both ends. The
/// distinct VoTs of an origin are bisected on that test.
pub(crate) fn cheapest_paths(net: &Network, queries: &[(usize, usize, f64)], tolls: &[f64]) -> Vec<Option<Path>> {
    let mut by_origin: Vec<Vec<usize>> = vec![Vec::new(); net.node_count()];
    for (i, q) in queries.iter().enumerate() {
        by_origin[q.0].push(i);
    }
    let mut out: Vec<Option<Path>> = vec![None; queries.len()];
    for (origin, members) in by_origin.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut vots: Vec<f64> = members.iter().map(|&i| queries[i].2).collect();
        vots.sort_by(f64::total_cmp);
        vots.dedup();
        // (destination, VoT index, query), so each destination's queries form
        // a run sorted by VoT.
        let mut items: Vec<(usize, usize, usize)> = members
            .iter()
            .map(|&i| {
                let k = vots.binary_search_by(|v| v.total_cmp(&queries[i].2)).expect("vot present");
                (queries[i].1, k, i)
            })
            .collect();
        items.sort_unstable();
        let mut b = Bisection { net, origin, tolls, vots: &vots, trees: (0..vots.len()).map(|_| None).collect() };
        for run in items.chunk_by(|x, y| x.0 == y.0) {
            let dest = run[0].0;
            if dest == origin {
                continue;
            }
            b.solve(0, vots.len() - 1, dest, run, &mut out);
        }
    }
    out
}

fn decide(c: &Commodity, best: Option<(Path, f64)>) -> Result<(Choice, f64)> {
    match (best, c.outside_cost) {
        (Some((_, cost)), Some(lambda)) if cost > lambda => Ok((Choice::Outside, lambda)),
        (Some((p, cost)), _) => Ok((Choice::Path(p), cost)),
        (None, Some(lambda)) => Ok((Choice::Outside, lambda)),
        (None, None) => Err(Error::Unreachable(c.origin, c.destination)),
    }
}

struct Bisection<'a> {
    net: &'a Network,
    origin: usize,
    tolls: &'a [f64],
    vots: &'a [f64],
    /// Search per distinct VoT, with the paths extracted from it so far.
    trees: Vec<Option<(ShortestPathTree<'a>, Vec<Option<Option<Path>>>)>>,
}

impl Bisection<'_> {
    fn path(&mut self, k: usize, dest: usize) -> &Option<Path> {
        let net = self.net;
        let (tree, paths) = self.trees[k].get_or_insert_with(|| {
            let vot = self.vots[k];
            let costs = net.edges().iter().zip(self.tolls).map(|(e, &t)| vot * e.latency + t).collect();
            (ShortestPathTree::compute_owned(net, self.origin, costs), vec![None; net.node_count()])
        });
        paths[dest].get_or_insert_with(|| tree.path_to(dest))
    }

    fn same_path(&mut self, a: usize, b: usize, dest: usize) -> bool {
        self.path(a, dest);
        self.path(b, dest);
        let cached = |k: usize| &self.trees[k].as_ref().expect("searched").1[dest];
        cached(a) == cached(b)
    }

    /// Answers `items` (destination, VoT index in `[lo, hi]`, query),
    /// sorted by VoT index.
    fn solve(&mut self, lo: usize, hi: usize, dest: usize, items: &[(usize, usize, usize)], out: &mut [Option<Path>]) {
        if items.is_empty() {
            return;
        }
        if self.same_path(lo, hi, dest) {
            let p = self.path(lo, dest).clone();
            for &(_, _, i) in items {
                out[i] = p.clone();
            }
            return;
        }
        if hi <= lo + 1 {
            for &(_, k, i) in items {
                out[i] = self.path(k, dest).clone();
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let split = items.partition_point(|x| x.1 <= mid);
        self.solve(lo, mid, dest, &items[..split], out);
        self.solve(mid, hi, dest, &items[split..], out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(vot: f64, lambda: f64) -> UserDraw {
        UserDraw { group: 0, origin: 0, destination: 1, vot, outside_cost: lambda }
    }

    #[test]
    fn parallel_best_responses() {
        let net = Network::parallel(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let (c, cost) = best_response(&net, &draw(1.0, 10.0), &TollVector::zeros(2)).unwrap();
        assert_eq!(c.path().unwrap().edges(), &[0]);
        assert_eq!(cost, 1.0);
        let tolls = TollVector::new(vec![1.5, 0.0]).unwrap();
        let (c, cost) = best_response(&net, &draw(1.0, 10.0), &tolls).unwrap();
        assert_eq!(c.path().unwrap().edges(), &[1]);
        assert_eq!(cost, 2.0);
        let (c, cost) = best_response(&net, &draw(1.0, 0.5), &TollVector::zeros(2)).unwrap();
        assert_eq!(c, Choice::Outside);
        assert_eq!(cost, 0.5);
    }

    #[test]
    fn tie_with_outside_goes_to_path() {
        let net = Network::parallel(&[1.0], &[1.0]).unwrap();
        let (c, _) = best_response(&net, &draw(2.0, 2.0), &TollVector::zeros(1)).unwrap();
        assert!(c.path().is_some());
        let (c, _) = best_response(&net, &draw(2.0, 2.0 - 1e-9), &TollVector::zeros(1)).unwrap();
        assert_eq!(c, Choice::Outside);
        let (c, _) = best_response(&net, &draw(2.0, 2.0 + 1e-9), &TollVector::zeros(1)).unwrap();
        assert!(c.path().is_some());
    }

    #[test]
    fn one_edge_instance() {
        let net = Network::parallel(&[1.0], &[1.0]).unwrap();
        let users = vec![draw(1.0, 2.0), draw(1.0, 2.0)];
        let rec = compute_equilibrium(&net, &users, &TollVector::zeros(1)).unwrap();
        assert_eq!(rec.flows, vec![2]);
        assert_eq!(rec.system_cost, 2.0);
        let rec = compute_equilibrium(&net, &users, &TollVector::new(vec![1.5]).unwrap()).unwrap();
        assert_eq!(rec.flows, vec![0]);
        assert_eq!(rec.system_cost, 4.0);
        let rec = compute_equilibrium(&net, &[], &TollVector::zeros(1)).unwrap();
        assert_eq!(rec.flows, vec![0]);
        assert_eq!(rec.system_cost, 0.0);
    }

    #[test]
    fn rejects_bad_tolls() {
        assert!(TollVector::new(vec![0.0, -1.0]).is_err());
        let net = Network::parallel(&[1.0], &[1.0]).unwrap();
        assert!(best_response(&net, &draw(1.0, 1.0), &TollVector::zeros(2)).is_err());
    }

    #[test]
    fn unreachable_without_outside_is_an_error() {
        let net = Network::from_edges(2, [(1, 0, 1.0, 1.0)]).unwrap();
        let c = Commodity::single(0, 1, 1.0, None);
        assert!(compute_equilibrium_batched(&net, &[c], &TollVector::zeros(1)).is_err());
        let rec = compute_equilibrium(&net, &[draw(1.0, 3.0)], &TollVector::zeros(1)).unwrap();
        assert_eq!(rec.choices, vec![Choice::Outside]);
        assert_eq!(rec.system_cost, 3.0);
    }

    #[test]
    fn shared_trees_match_one_search_per_commodity() {
        use crate::rng::{keyed, uniform, Purpose};
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
        let net_text = std::fs::read_to_string(format!("{dir}/SiouxFalls_net.tntp")).unwrap();
        let trips_text = std::fs::read_to_string(format!("{dir}/SiouxFalls_trips.tntp")).unwrap();
        let (net, _) = crate::network::load_tntp(&net_text, &trips_text).unwrap();
        let mut rng = keyed(11, Purpose::Instance, 0, 0);
        let n = net.node_count();
        for round in 0..6 {
            let tolls: Vec<f64> = (0..net.edge_count())
                .map(|e| if round == 0 || e % 3 == 0 { 0.0 } else { uniform(&mut rng, 0.0, 20.0) })
                .collect();
            let tolls = TollVector::new(tolls).unwrap();
            let mut cs = Vec::new();
            for k in 0..600 {
                let o = (uniform(&mut rng, 0.0, n as f64) as usize).min(n - 1);
                let d = (o + 1 + k % (n - 1)) % n;
                let vot = match k % 11 {
                    0 => 10.0,
                    1 => 0.0,
                    2 => (k % 5) as f64 * 7.5,
                    _ => uniform(&mut rng, 0.0, 100.0),
                };
                let outside = if k % 5 == 0 { None } else { Some(uniform(&mut rng, 0.0, 400.0)) };
                cs.push(Commodity { origin: o, destination: d, vot, outside_cost: outside, demand: 1 + k as u32 % 3 });
            }
            let shared = compute_equilibrium_batched(&net, &cs, &tolls).unwrap();
            let mut direct = AssignmentRecord::empty(net.edge_count());
            let mut scratch = Vec::new();
            for c in &cs {
                let (choice, cost) = respond(&net, c, tolls.as_slice(), &mut scratch).unwrap();
                direct.push(choice, cost, c.vot, c.outside_cost, c.demand, tolls.as_slice());
            }
            assert_eq!(shared, direct, "round {round}");
        }
    }
}
