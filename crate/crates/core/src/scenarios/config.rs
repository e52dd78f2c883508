//! Declarative experiment configuration, read from TOML.
//!
//! ```toml
//! kind = "sioux_falls"
//! horizon = 2000
//! seeds = [1, 2, 3]
//! policies = ["online_gradient", "reactive", "population_mean", "user_mean"]
//! step = "inv_sqrt"        # or a fixed γ such as 5e-4
//! demand_scale = 0.1
//! capacity_scale = 0.2
//! ```
//!
//! Every other key has a default; see [`ScenarioConfig`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::VotSharing;
use crate::toller::recommended_step;

/// Environment variable naming the default directory for TNTP files.
pub const DATA_DIR_ENV: &str = "TOLLSIM_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SiouxFalls,
    LowerBound,
    ParallelSynth,
    Counterexample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    OnlineGradient,
    Reactive,
    /// Static LP tolls for the population-mean VoT instance.
    PopulationMean,
    /// Static LP tolls for the per-group mean VoT instance.
    UserMean,
}

impl PolicyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyName::OnlineGradient => "online_gradient",
            PolicyName::Reactive => "reactive",
            PolicyName::PopulationMean => "population_mean",
            PolicyName::UserMean => "user_mean",
        }
    }
}

/// γ for the online policy: `"inv_sqrt"` for κ/√T (κ = `step_scale`) or a
/// fixed number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepRule {
    Fixed(f64),
    Named(StepName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepName {
    InvSqrt,
}

impl StepRule {
    pub fn step(&self, horizon: u64, scale: f64) -> Result<f64> {
        match *self {
            StepRule::Fixed(g) => Ok(g),
            StepRule::Named(StepName::InvSqrt) => Ok(scale * recommended_step(horizon)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyName>,
    /// Defaults to 5e-4 on Sioux Falls and 1/√T elsewhere.
    #[serde(default)]
    pub step: Option<StepRule>,
    /// κ in γ = κ/√T. With tolls in dollars, 0.01 is one cent per vehicle
    /// of excess per √T.
    #[serde(default = "one")]
    pub step_scale: f64,
    /// δ of the reactive policy, dollars.
    #[serde(default = "default_increment")]
    pub reactive_increment: f64,
    /// Half-width h of the static-toll noise, dollars.
    #[serde(default = "default_noise")]
    pub static_noise: f64,
    #[serde(default = "default_demand_scale")]
    pub demand_scale: f64,
    #[serde(default = "one")]
    pub capacity_scale: f64,
    /// Hours per unit of the TNTP free-flow time column.
    #[serde(default = "default_time_unit")]
    pub time_unit_hours: f64,
    #[serde(default = "default_spread")]
    pub vot_spread: f64,
    #[serde(default = "default_spread")]
    pub od_resample_prob: f64,
    /// One VoT draw per group per period, or one per user.
    #[serde(default)]
    pub vot_sharing: VotSharing,
    #[serde(default = "default_outside_factor")]
    pub outside_factor: f64,
    /// Range of the per-group mean VoT draw, $/hr.
    #[serde(default = "default_vot_range")]
    pub mean_vot_range: [f64; 2],
    /// Solve the per-period oracle every k-th period.
    #[serde(default = "one_u64")]
    pub oracle_every: u64,
    /// Also compute the exact integral optimum each period (tiny instances).
    #[serde(default)]
    pub exact_oracle: bool,
    /// Parallel-synthetic size.
    #[serde(default = "default_synth_edges")]
    pub synth_edges: usize,
    #[serde(default = "default_synth_users")]
    pub synth_users: u32,
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    #[serde(default = "default_net_file")]
    pub net_file: String,
    #[serde(default = "default_trips_file")]
    pub trips_file: String,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_policies() -> Vec<PolicyName> {
    vec![PolicyName::OnlineGradient]
}
fn default_increment() -> f64 {
    0.1
}
fn default_noise() -> f64 {
    5e-4
}
fn default_demand_scale() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn default_time_unit() -> f64 {
    1.0 / 60.0
}
fn default_spread() -> f64 {
    0.2
}
fn default_outside_factor() -> f64 {
    1.5
}
fn default_vot_range() -> [f64; 2] {
    [5.0, 100.0]
}
fn default_synth_edges() -> usize {
    4
}
fn default_synth_users() -> u32 {
    6
}
fn default_net_file() -> String {
    "SiouxFalls_net.tntp".into()
}
fn default_trips_file() -> String {
    "SiouxFalls_trips.tntp".into()
}

impl ScenarioConfig {
    /// Defaults for `kind` at horizon `horizon`.
    pub fn new(kind: ScenarioKind, horizon: u64) -> Self {
        ScenarioConfig {
            kind,
            horizon,
            seeds: default_seeds(),
            policies: default_policies(),
            step: None,
            step_scale: 1.0,
            reactive_increment: default_increment(),
            static_noise: default_noise(),
            demand_scale: default_demand_scale(),
            capacity_scale: 1.0,
            time_unit_hours: default_time_unit(),
            vot_spread: default_spread(),
            od_resample_prob: default_spread(),
            vot_sharing: VotSharing::default(),
            outside_factor: default_outside_factor(),
            mean_vot_range: default_vot_range(),
            oracle_every: 1,
            exact_oracle: false,
            synth_edges: default_synth_edges(),
            synth_users: default_synth_users(),
            data_dir: None,
            net_file: default_net_file(),
            trips_file: default_trips_file(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        if !(self.demand_scale > 0.0) {
            return bad(format!("demand_scale {} must be positive", self.demand_scale));
        }
        if !(self.capacity_scale > 0.0) {
            return bad(format!("capacity_scale {} must be positive", self.capacity_scale));
        }
        if !(self.time_unit_hours > 0.0) {
            return bad(format!("time_unit_hours {} must be positive", self.time_unit_hours));
        }
        if !(0.0..1.0).contains(&self.vot_spread) {
            return bad(format!("vot_spread {} outside [0, 1)", self.vot_spread));
        }
        if !(0.0..=1.0).contains(&self.od_resample_prob) {
            return bad(format!("od_resample_prob {} outside [0, 1]", self.od_resample_prob));
        }
        if !(self.outside_factor > 0.0) {
            return bad(format!("outside_factor {} must be positive", self.outside_factor));
        }
        let [lo, hi] = self.mean_vot_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("mean_vot_range [{lo}, {hi}]"));
        }
        if !(self.reactive_increment > 0.0) {
            return bad(format!("reactive_increment {} must be positive", self.reactive_increment));
        }
        if !(self.static_noise >= 0.0) {
            return bad(format!("static_noise {} must be nonnegative", self.static_noise));
        }
        if self.oracle_every == 0 {
            return bad("oracle_every must be at least 1".into());
        }
        if !(self.step_scale > 0.0) {
            return bad(format!("step_scale {} must be positive", self.step_scale));
        }
        if let Some(StepRule::Fixed(g)) = self.step {
            if !(g > 0.0) {
                return bad(format!("step {g} must be positive"));
            }
        }
        if self.kind == ScenarioKind::ParallelSynth && (self.synth_edges == 0 || self.synth_users == 0) {
            return bad("parallel synthetic scenario needs edges and users".into());
        }
        Ok(())
    }

    /// γ for horizon `horizon`.
    pub fn step(&self, horizon: u64) -> Result<f64> {
        self.step_rule().step(horizon, self.step_scale)
    }

    pub fn step_rule(&self) -> StepRule {
        self.step.unwrap_or(match self.kind {
            ScenarioKind::SiouxFalls => StepRule::Fixed(5e-4),
            _ => StepRule::Named(StepName::InvSqrt),
        })
    }

    /// Directory holding the TNTP files: `data_dir`, else `$TOLLSIM_DATA_DIR`,
    /// else the data bundled with the crate.
    pub fn resolve_data_dir(&self) -> PathBuf {
        if let Some(d) = &self.data_dir {
            return d.clone();
        }
        match std::env::var_os(DATA_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ScenarioConfig::from_toml("kind = \"lower_bound\"\nhorizon = 10\n").unwrap();
        assert_eq!(cfg.demand_scale, 0.5);
        assert_eq!(cfg.step(100).unwrap(), 0.1);
        let sf = ScenarioConfig::new(ScenarioKind::SiouxFalls, 10);
        assert_eq!(sf.step(10_000).unwrap(), 5e-4);
    }

    #[test]
    fn step_forms() {
        let a = ScenarioConfig::from_toml("kind = \"sioux_falls\"\nhorizon = 4\nstep = \"inv_sqrt\"\n").unwrap();
        assert_eq!(a.step(4).unwrap(), 0.5);
        let b = ScenarioConfig::from_toml("kind = \"lower_bound\"\nhorizon = 4\nstep = 0.25\nstep_scale = 0.1\n").unwrap();
        assert_eq!(b.step(4).unwrap(), 0.25);
        let c = ScenarioConfig::from_toml("kind = \"sioux_falls\"\nhorizon = 100\nstep = \"inv_sqrt\"\nstep_scale = 0.01\n").unwrap();
        assert!((c.step(100).unwrap() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "kind = \"sioux_falls\"\nhorizon = 5\ndemand_scale = 0.0\n",
            "kind = \"sioux_falls\"\nhorizon = 0\n",
            "kind = \"sioux_falls\"\nhorizon = 5\nseeds = []\n",
            "kind = \"nowhere\"\nhorizon = 5\n",
            "kind = \"sioux_falls\"\nhorizon = 5\nbogus = 1\n",
        ] {
            assert!(matches!(ScenarioConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ScenarioConfig::new(ScenarioKind::ParallelSynth, 30);
        cfg.seeds = vec![3, 4];
        cfg.step = Some(StepRule::Fixed(0.01));
        cfg.policies = vec![PolicyName::Reactive, PolicyName::UserMean];
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
