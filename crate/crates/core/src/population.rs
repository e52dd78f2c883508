//! User groups and the per-period i.i.d. draws of trips, values of time and
//! outside options.

use std::collections::BTreeMap;

use crate::equilibrium::TollVector;
use crate::error::{Error, Result};
use crate::network::{shortest_path, DemandTable, Network, NodeId};
use crate::rng::{keyed, uniform, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct UserGroup {
    pub id: usize,
    pub od: (NodeId, NodeId),
    /// Users per period.
    pub demand: u32,
    /// μ_g in $/hr.
    pub mean_vot: f64,
    pub vot_spread: f64,
    pub od_resample_prob: f64,
    /// λ in dollars; `None` until calibrated.
    pub outside_cost: Option<f64>,
}

impl UserGroup {
    fn validate(&self) -> Result<()> {
        if !(self.mean_vot > 0.0) {
            return Err(Error::InvalidArgument(format!("group {}: mean VoT {} must be positive", self.id, self.mean_vot)));
        }
        if !(0.0..1.0).contains(&self.vot_spread) {
            return Err(Error::InvalidArgument(format!("group {}: VoT spread {} outside [0, 1)", self.id, self.vot_spread)));
        }
        if !(0.0..=1.0).contains(&self.od_resample_prob) {
            return Err(Error::InvalidArgument(format!("group {}: resample probability {}", self.id, self.od_resample_prob)));
        }
        if self.demand == 0 {
            return Err(Error::InvalidArgument(format!("group {}: zero demand", self.id)));
        }
        if self.od.0 == self.od.1 {
            return Err(Error::SelfTrip(self.od.0));
        }
        Ok(())
    }
}

/// One user's realized trip in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDraw {
    pub group: usize,
    pub origin: NodeId,
    pub destination: NodeId,
    pub vot: f64,
    pub outside_cost: f64,
}

/// `demand` identical users: same trip, VoT and outside option. An absent
/// outside option means the user must be routed.
#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub origin: NodeId,
    pub destination: NodeId,
    pub vot: f64,
    pub outside_cost: Option<f64>,
    pub demand: u32,
}

impl Commodity {
    pub fn single(origin: NodeId, destination: NodeId, vot: f64, outside_cost: Option<f64>) -> Self {
        Commodity { origin, destination, vot, outside_cost, demand: 1 }
    }
}

impl From<&UserDraw> for Commodity {
    fn from(d: &UserDraw) -> Self {
        Commodity::single(d.origin, d.destination, d.vot, Some(d.outside_cost))
    }
}

/// How values of time are realized within a group each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotSharing {
    /// One draw per group per period, shared by all of its users.
    #[default]
    PerGroup,
    /// An independent draw for every user.
    PerUser,
}

/// A user type in a shared-type population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserType {
    pub prob: f64,
    pub vot: f64,
    pub outside_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Sampling {
    Independent(VotSharing),
    /// Each period one type is drawn and every user takes it.
    SharedType(Vec<UserType>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    groups: Vec<UserGroup>,
    seed: u64,
    od_universe: Vec<(NodeId, NodeId)>,
    sampling: Sampling,
    offsets: Vec<u64>,
}

/// Which mean-VoT instance to build for the static benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanVot {
    /// Demand-weighted mean over all users.
    Population,
    /// Each group's own μ_g.
    Group,
}

impl PopulationModel {
    pub fn new(groups: Vec<UserGroup>, od_universe: Vec<(NodeId, NodeId)>, seed: u64) -> Result<Self> {
        for g in &groups {
            g.validate()?;
        }
        if groups.iter().any(|g| g.od_resample_prob > 0.0) && od_universe.is_empty() {
            return Err(Error::InvalidArgument("O-D resampling needs a nonempty O-D universe".into()));
        }
        let mut offsets = Vec::with_capacity(groups.len());
        let mut acc = 0u64;
        for g in &groups {
            offsets.push(acc);
            acc += g.demand as u64;
        }
        Ok(PopulationModel { groups, seed, od_universe, sampling: Sampling::Independent(VotSharing::PerGroup), offsets })
    }

    /// Groups built from a base demand table scaled by `scale` and rounded
    /// half-up; groups that round to zero are dropped. μ_g starts at 1 until
    /// [`PopulationModel::sample_mean_vots`] is called.
    pub fn from_demand(
        table: &DemandTable,
        scale: f64,
        vot_spread: f64,
        od_resample_prob: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument(format!("demand scale {scale} must be positive")));
        }
        let mut groups = Vec::new();
        for (&od, &base) in table {
            let demand = (scale * base + 0.5).floor();
            if demand >= 1.0 {
                groups.push(UserGroup {
                    id: groups.len(),
                    od,
                    demand: demand as u32,
                    mean_vot: 1.0,
                    vot_spread,
                    od_resample_prob,
                    outside_cost: None,
                });
            }
        }
        let universe = table.iter().filter(|(_, &v)| v > 0.0).map(|(&k, _)| k).collect();
        Self::new(groups, universe, seed)
    }

    /// `users` travellers on one O-D pair who all share the type drawn for
    /// the period.
    pub fn shared_type(od: (NodeId, NodeId), users: u32, types: Vec<UserType>, seed: u64) -> Result<Self> {
        let total: f64 = types.iter().map(|t| t.prob).sum();
        if types.is_empty() || (total - 1.0).abs() > 1e-12 || types.iter().any(|t| t.prob < 0.0) {
            return Err(Error::InvalidArgument("type probabilities must be nonnegative and sum to 1".into()));
        }
        let mean: f64 = types.iter().map(|t| t.prob * t.vot).sum();
        let group = UserGroup {
            id: 0,
            od,
            demand: users,
            mean_vot: mean.max(f64::MIN_POSITIVE),
            vot_spread: 0.0,
            od_resample_prob: 0.0,
            outside_cost: Some(types.iter().map(|t| t.prob * t.outside_cost).sum()),
        };
        let mut model = Self::new(vec![group], Vec::new(), seed)?;
        model.sampling = Sampling::SharedType(types);
        Ok(model)
    }

    pub fn with_vot_sharing(mut self, sharing: VotSharing) -> Self {
        if let Sampling::Independent(_) = self.sampling {
            self.sampling = Sampling::Independent(sharing);
        }
        self
    }

    pub fn groups(&self) -> &[UserGroup] {
        &self.groups
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn od_universe(&self) -> &[(NodeId, NodeId)] {
        &self.od_universe
    }

    pub fn total_users(&self) -> u64 {
        self.groups.iter().map(|g| g.demand as u64).sum()
    }

    /// Largest outside-option cost any user can draw.
    pub fn max_outside_cost(&self) -> Result<f64> {
        match &self.sampling {
            Sampling::SharedType(types) => Ok(types.iter().map(|t| t.outside_cost).fold(0.0, f64::max)),
            Sampling::Independent(_) => self.groups.iter().try_fold(0.0f64, |m, g| {
                g.outside_cost.map(|l| m.max(l)).ok_or(Error::Uncalibrated(g.id))
            }),
        }
    }

    /// Draws μ_g ~ Uniform[lo, hi] for every group.
    pub fn sample_mean_vots(&mut self, lo: f64, hi: f64) -> Result<()> {
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!("mean VoT range [{lo}, {hi}]")));
        }
        let mut rng = keyed(self.seed, Purpose::MeanVot, 0, 0);
        for g in &mut self.groups {
            g.mean_vot = uniform(&mut rng, lo, hi);
        }
        Ok(())
    }

    pub fn set_mean_vots(&mut self, vots: &[f64]) -> Result<()> {
        if vots.len() != self.groups.len() {
            return Err(Error::DimensionMismatch { expected: self.groups.len(), got: vots.len() });
        }
        for (g, &v) in self.groups.iter_mut().zip(vots) {
            g.mean_vot = v;
            g.validate()?;
        }
        Ok(())
    }

    /// λ_g = factor × min_P (μ_g l_P + τ_P) at each group's default O-D pair.
    pub fn calibrate_outside_option(&self, net: &Network, tolls: &TollVector, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidArgument(format!("outside-option factor {factor} must be positive")));
        }
        let mut out = self.clone();
        for g in &mut out.groups {
            let costs = net.generalized_costs(g.mean_vot, tolls.as_slice());
            let (_, cost) = shortest_path(net, g.od.0, g.od.1, &costs)?.ok_or(Error::Unreachable(g.od.0, g.od.1))?;
            g.outside_cost = Some(factor * cost);
        }
        Ok(out)
    }

    pub fn set_outside_costs(&mut self, costs: &[f64]) -> Result<()> {
        if costs.len() != self.groups.len() {
            return Err(Error::DimensionMismatch { expected: self.groups.len(), got: costs.len() });
        }
        for (g, &c) in self.groups.iter_mut().zip(costs) {
            if !(c >= 0.0) {
                return Err(Error::Negative { index: g.id, value: c });
            }
            g.outside_cost = Some(c);
        }
        Ok(())
    }

    /// One commodity per group at its default O-D pair with a mean VoT.
    /// `with_outside` keeps calibrated outside options; without it every
    /// user must be routed.
    pub fn mean_commodities(&self, mean: MeanVot, with_outside: bool) -> Result<Vec<Commodity>> {
        let users = self.total_users() as f64;
        let pop_mean = self.groups.iter().map(|g| g.demand as f64 * g.mean_vot).sum::<f64>() / users;
        self.groups
            .iter()
            .map(|g| {
                let outside_cost = if with_outside { Some(g.outside_cost.ok_or(Error::Uncalibrated(g.id))?) } else { None };
                Ok(Commodity {
                    origin: g.od.0,
                    destination: g.od.1,
                    vot: match mean {
                        MeanVot::Population => pop_mean,
                        MeanVot::Group => g.mean_vot,
                    },
                    outside_cost,
                    demand: g.demand,
                })
            })
            .collect()
    }

    fn check_calibrated(&self) -> Result<()> {
        match self.groups.iter().find(|g| g.outside_cost.is_none()) {
            Some(g) => Err(Error::Uncalibrated(g.id)),
            None => Ok(()),
        }
    }

    /// Visits the O-D pair of every user of group `g` in period `t`, in
    /// user order. Each user independently moves to a uniform pair of the
    /// universe with the group's resample probability; the gaps between
    /// movers are drawn as geometric variables.
    fn group_trips(&self, g: usize, t: u64, mut visit: impl FnMut((NodeId, NodeId))) {
        let group = &self.groups[g];
        let p = group.od_resample_prob;
        let demand = group.demand as u64;
        if p == 0.0 {
            for _ in 0..demand {
                visit(group.od);
            }
            return;
        }
        // At most 2 * demand + 1 draws of two words each.
        let mut rng = keyed(self.seed, Purpose::OdResample, t, 4 * (self.offsets[g] + g as u64) as u128);
        let n = self.od_universe.len();
        let log_stay = (1.0 - p).ln();
        let mut user = 0u64;
        while user < demand {
            let gap = if p == 1.0 {
                0
            } else {
                let u = 1.0 - uniform(&mut rng, 0.0, 1.0);
                let gap = (u.ln() / log_stay).floor();
                if gap >= (demand - user) as f64 { demand - user } else { gap as u64 }
            };
            for _ in 0..gap {
                visit(group.od);
            }
            user += gap;
            if user < demand {
                let pick = uniform(&mut rng, 0.0, 1.0);
                visit(self.od_universe[((pick * n as f64) as usize).min(n - 1)]);
                user += 1;
            }
        }
    }

    fn group_vot(&self, g: usize, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        let group = &self.groups[g];
        let s = group.vot_spread;
        uniform(rng, (1.0 - s) * group.mean_vot, (1.0 + s) * group.mean_vot)
    }

    fn shared_type_of(&self, types: &[UserType], t: u64) -> UserType {
        let mut rng = keyed(self.seed, Purpose::Vot, t, 0);
        let u = uniform(&mut rng, 0.0, 1.0);
        let mut acc = 0.0;
        for ty in types {
            acc += ty.prob;
            if u < acc {
                return *ty;
            }
        }
        *types.last().unwrap()
    }

    /// One draw per user for period `t`, reproducible from `(seed, t)`.
    pub fn sample_period(&self, t: u64) -> Result<Vec<UserDraw>> {
        let mut out = Vec::with_capacity(self.total_users() as usize);
        match &self.sampling {
            Sampling::SharedType(types) => {
                let ty = self.shared_type_of(types, t);
                let g = &self.groups[0];
                for _ in 0..g.demand {
                    out.push(UserDraw { group: 0, origin: g.od.0, destination: g.od.1, vot: ty.vot, outside_cost: ty.outside_cost });
                }
            }
            Sampling::Independent(sharing) => {
                self.check_calibrated()?;
                let mut vot_rng = keyed(self.seed, Purpose::Vot, t, 0);
                for (gi, group) in self.groups.iter().enumerate() {
                    let lambda = group.outside_cost.unwrap();
                    let shared = match sharing {
                        VotSharing::PerGroup => Some(self.group_vot(gi, &mut vot_rng)),
                        VotSharing::PerUser => None,
                    };
                    let mut per_user = keyed(self.seed, Purpose::Vot, t, 2 * self.offsets[gi] as u128 + 2 * self.groups.len() as u128);
                    self.group_trips(gi, t, |(o, d)| {
                        let vot = shared.unwrap_or_else(|| self.group_vot(gi, &mut per_user));
                        out.push(UserDraw { group: gi, origin: o, destination: d, vot, outside_cost: lambda });
                    });
                }
            }
        }
        Ok(out)
    }

    /// The draws of period `t` merged into commodities of identical users.
    /// Same realization as [`PopulationModel::sample_period`].
    pub fn sample_commodities(&self, t: u64) -> Result<Vec<Commodity>> {
        match &self.sampling {
            Sampling::Independent(VotSharing::PerGroup) => {
                self.check_calibrated()?;
                let mut vot_rng = keyed(self.seed, Purpose::Vot, t, 0);
                let mut out = Vec::with_capacity(self.groups.len());
                for (gi, group) in self.groups.iter().enumerate() {
                    let vot = self.group_vot(gi, &mut vot_rng);
                    let lambda = group.outside_cost;
                    let mut default_count = 0u32;
                    let mut moved: BTreeMap<(NodeId, NodeId), u32> = BTreeMap::new();
                    self.group_trips(gi, t, |od| {
                        if od == group.od {
                            default_count += 1;
                        } else {
                            *moved.entry(od).or_insert(0) += 1;
                        }
                    });
                    if default_count > 0 {
                        out.push(Commodity { origin: group.od.0, destination: group.od.1, vot, outside_cost: lambda, demand: default_count });
                    }
                    for ((o, d), n) in moved {
                        out.push(Commodity { origin: o, destination: d, vot, outside_cost: lambda, demand: n });
                    }
                }
                Ok(out)
            }
            Sampling::SharedType(types) => {
                let ty = self.shared_type_of(types, t);
                let g = &self.groups[0];
                Ok(vec![Commodity { origin: g.od.0, destination: g.od.1, vot: ty.vot, outside_cost: Some(ty.outside_cost), demand: g.demand }])
            }
            Sampling::Independent(VotSharing::PerUser) => {
                Ok(self.sample_period(t)?.iter().map(Commodity::from).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> DemandTable {
        let mut t = DemandTable::new();
        t.insert((0, 1), 10.0);
        t.insert((1, 2), 25.0);
        t.insert((2, 0), 4.0);
        t
    }

    fn calibrated(spread: f64, resample: f64, seed: u64) -> PopulationModel {
        let mut m = PopulationModel::from_demand(&table(), 1.0, spread, resample, seed).unwrap();
        m.set_mean_vots(&[50.0, 20.0, 80.0]).unwrap();
        m.set_outside_costs(&[100.0, 100.0, 100.0]).unwrap();
        m
    }

    #[test]
    fn demand_rounds_half_up() {
        let m = PopulationModel::from_demand(&table(), 0.1, 0.2, 0.0, 1).unwrap();
        let demands: Vec<u32> = m.groups().iter().map(|g| g.demand).collect();
        assert_eq!(demands, vec![1, 3]);
        assert!(PopulationModel::from_demand(&table(), 0.0, 0.2, 0.0, 1).is_err());
    }

    #[test]
    fn degenerate_draws() {
        let m = calibrated(0.0, 0.0, 3);
        let draws = m.sample_period(5).unwrap();
        assert_eq!(draws.len() as u64, m.total_users());
        for d in &draws {
            let g = &m.groups()[d.group];
            assert_eq!(d.vot, g.mean_vot);
            assert_eq!((d.origin, d.destination), g.od);
        }
    }

    #[test]
    fn vot_within_band() {
        let m = calibrated(0.2, 0.0, 9).with_vot_sharing(VotSharing::PerUser);
        for t in 0..50 {
            for d in m.sample_period(t).unwrap() {
                if d.group == 0 {
                    assert!((40.0..=60.0).contains(&d.vot));
                }
            }
        }
    }

    #[test]
    fn uncalibrated_errors() {
        let m = PopulationModel::from_demand(&table(), 1.0, 0.2, 0.0, 1).unwrap();
        assert!(matches!(m.sample_period(0), Err(Error::Uncalibrated(0))));
    }

    #[test]
    fn commodities_match_draws() {
        let m = calibrated(0.2, 0.3, 4);
        for t in 0..20 {
            let draws = m.sample_period(t).unwrap();
            let comms = m.sample_commodities(t).unwrap();
            let total: u32 = comms.iter().map(|c| c.demand).sum();
            assert_eq!(total as usize, draws.len());
            let mut a: BTreeMap<(NodeId, NodeId, u64), u32> = BTreeMap::new();
            for d in &draws {
                *a.entry((d.origin, d.destination, d.vot.to_bits())).or_insert(0) += 1;
            }
            let mut b: BTreeMap<(NodeId, NodeId, u64), u32> = BTreeMap::new();
            for c in &comms {
                *b.entry((c.origin, c.destination, c.vot.to_bits())).or_insert(0) += c.demand;
            }
            assert_eq!(a, b);
        }
    }

    #[test]
    fn calibration_formula() {
        let net = Network::from_edges(2, [(0, 1, 1.0, 5.0)]).unwrap();
        let mut t = DemandTable::new();
        t.insert((0, 1), 3.0);
        let mut m = PopulationModel::from_demand(&t, 1.0, 0.0, 0.0, 0).unwrap();
        m.set_mean_vots(&[10.0]).unwrap();
        let c = m.calibrate_outside_option(&net, &TollVector::zeros(1), 1.5).unwrap();
        assert_eq!(c.groups()[0].outside_cost, Some(15.0));
        let c = m.calibrate_outside_option(&net, &TollVector::new(vec![2.0]).unwrap(), 1.0).unwrap();
        assert_eq!(c.groups()[0].outside_cost, Some(12.0));
        let bad = Network::from_edges(2, [(1, 0, 1.0, 5.0)]).unwrap();
        assert!(matches!(m.calibrate_outside_option(&bad, &TollVector::zeros(1), 1.5), Err(Error::Unreachable(0, 1))));
    }

    #[test]
    fn shared_type_population() {
        let types = vec![
            UserType { prob: 0.5, vot: 1.0, outside_cost: 2.0 },
            UserType { prob: 0.5, vot: 0.0, outside_cost: 0.0 },
        ];
        let m = PopulationModel::shared_type((0, 1), 2, types, 11).unwrap();
        let mut type_one = 0;
        for t in 0..2000 {
            let d = m.sample_period(t).unwrap();
            assert_eq!(d.len(), 2);
            assert_eq!(d[0], d[1]);
            if d[0].vot == 1.0 {
                type_one += 1;
            }
        }
        assert!((900..1100).contains(&type_one));
    }

    #[test]
    fn resample_frequency() {
        // Moved users land on each of the 4 pairs with probability p/4, so a
        // user keeps the home pair with probability 1 - 3p/4.
        let universe = vec![(0, 1), (0, 2), (1, 2), (2, 0)];
        for (p, seed) in [(0.3, 1), (0.05, 2), (0.9, 3), (1.0, 4)] {
            let group = UserGroup { id: 0, od: (0, 1), demand: 20_000, mean_vot: 10.0, vot_spread: 0.0, od_resample_prob: p, outside_cost: Some(1.0) };
            let m = PopulationModel::new(vec![group], universe.clone(), seed).unwrap();
            let mut counts = BTreeMap::new();
            for d in m.sample_period(0).unwrap() {
                *counts.entry((d.origin, d.destination)).or_insert(0u32) += 1;
            }
            let n = 20_000.0;
            for (k, &od) in universe.iter().enumerate() {
                let expect = if k == 0 { 1.0 - 0.75 * p } else { p / 4.0 };
                let sd = (n * expect * (1.0 - expect)).sqrt().max(1.0);
                let got = *counts.get(&od).unwrap_or(&0) as f64;
                assert!((got - n * expect).abs() < 5.0 * sd, "p {p} pair {od:?}: {got} vs {}", n * expect);
            }
        }
    }
}
