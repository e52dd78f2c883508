//! The CSV bundle written by `run` and `sweep`.
//!
//! Per run directory `<policy>_s<seed>_T<horizon>/`:
//!
//! | file        | columns                                                                 |
//! |-------------|-------------------------------------------------------------------------|
//! | `trace.csv` | `t, system_cost, oracle_cost, oracle_status, total_travel_time, toll_revenue, routed_users, outside_users` |
//! | `tolls.csv` | `t, tau_0 .. tau_{m-1}` (posted tolls, raw)                              |
//! | `flows.csv` | `t, x_0 .. x_{m-1}`                                                     |
//!
//! Top level: `summary.csv` (one row per run, [`SUMMARY_COLUMNS`]),
//! `slopes.csv` for sweeps ([`SLOPE_COLUMNS`]) and `metadata.toml`.
//! Money, times and tolls carry 6 decimals; counts and flows are integers.
//! Empty fields mean "not available".

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_oracle::LpStatus;
use crate::metrics::{normalized_metrics, regret, violation, RunTrace};
use crate::scenarios::ScenarioConfig;

pub const TRACE_COLUMNS: [&str; 8] = [
    "t",
    "system_cost",
    "oracle_cost",
    "oracle_status",
    "total_travel_time",
    "toll_revenue",
    "routed_users",
    "outside_users",
];

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "policy",
    "seed",
    "horizon",
    "step",
    "regret",
    "normalized_regret",
    "violation_linf",
    "violation_l2",
    "violation_argmax",
    "normalized_violation",
    "mean_travel_time",
    "normalized_travel_time",
    "regret_bound",
    "violation_bound",
    "max_toll",
];

pub const SLOPE_COLUMNS: [&str; 10] = [
    "policy",
    "horizon",
    "runs",
    "mean_violation_linf",
    "mean_regret",
    "violation_slope",
    "violation_intercept",
    "violation_rmse",
    "regret_slope",
    "regret_rmse",
];

fn money(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_money(v: Option<f64>) -> String {
    v.map(money).unwrap_or_default()
}

fn status_str(s: LpStatus) -> &'static str {
    match s {
        LpStatus::Optimal => "optimal",
        LpStatus::IterationLimit => "iteration_limit",
    }
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(f))
}

fn flush(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn run_dir_name(policy: &str, seed: u64, horizon: usize) -> String {
    format!("{policy}_s{seed}_T{horizon}")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    pub system_cost: f64,
    pub oracle_cost: Option<f64>,
    pub oracle_status: Option<String>,
    pub total_travel_time: f64,
    pub toll_revenue: f64,
    pub routed_users: u64,
    pub outside_users: u64,
}

/// Writes `trace.csv`, `tolls.csv` and `flows.csv` for one run into `dir`.
pub fn write_run(dir: &Path, trace: &RunTrace) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m = trace.capacities.len();

    let path = dir.join("trace.csv");
    let mut w = create(&path)?;
    w.write_record(TRACE_COLUMNS)?;
    for (i, p) in trace.periods.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            money(p.system_cost),
            opt_money(p.oracle_cost),
            p.oracle_status.map(status_str).unwrap_or_default().to_string(),
            money(p.total_travel_time),
            money(p.toll_revenue),
            p.routed_users.to_string(),
            p.outside_users.to_string(),
        ])?;
    }
    flush(w, &path)?;

    let path = dir.join("tolls.csv");
    let mut w = create(&path)?;
    w.write_record(std::iter::once("t".to_string()).chain((0..m).map(|e| format!("tau_{e}"))))?;
    for (i, p) in trace.periods.iter().enumerate() {
        w.write_record(std::iter::once((i + 1).to_string()).chain(p.tolls.iter().map(|&v| money(v))))?;
    }
    flush(w, &path)?;

    let path = dir.join("flows.csv");
    let mut w = create(&path)?;
    w.write_record(std::iter::once("t".to_string()).chain((0..m).map(|e| format!("x_{e}"))))?;
    for (i, p) in trace.periods.iter().enumerate() {
        w.write_record(std::iter::once((i + 1).to_string()).chain(p.flows.iter().map(|x| x.to_string())))?;
    }
    flush(w, &path)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = reader(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Rows of a wide `t, col_0 .. col_{m-1}` file (tolls or flows).
pub fn read_matrix(path: &Path) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut r = reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("{}: bad number {s:?}: {e}", path.display())))
        };
        let t = rec
            .get(0)
            .unwrap_or_default()
            .parse::<u64>()
            .map_err(|e| Error::Config(format!("{}: bad period: {e}", path.display())))?;
        let vals = rec.iter().skip(1).map(parse).collect::<Result<Vec<f64>>>()?;
        out.push((t, vals));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub seed: u64,
    pub horizon: u64,
    pub step: Option<f64>,
    pub regret: Option<f64>,
    pub normalized_regret: Option<f64>,
    pub violation_linf: f64,
    pub violation_l2: f64,
    pub violation_argmax: usize,
    pub normalized_violation: f64,
    pub mean_travel_time: f64,
    pub normalized_travel_time: Option<f64>,
    pub regret_bound: f64,
    pub violation_bound: f64,
    pub max_toll: f64,
}

impl SummaryRow {
    /// Metrics of `trace`. Regret needs at least one oracle period; the
    /// normalized forms also need a positive oracle total.
    pub fn from_trace(trace: &RunTrace, step: Option<f64>, regret_bound: f64, violation_bound: f64) -> Self {
        let t = trace.horizon();
        let v = violation(trace);
        let report = normalized_metrics(trace).ok();
        let mean_travel_time = trace.periods.iter().map(|p| p.total_travel_time).sum::<f64>() / t.max(1) as f64;
        let max_toll = trace.periods.iter().flat_map(|p| p.tolls.iter().copied()).fold(0.0, f64::max);
        SummaryRow {
            policy: trace.policy.clone(),
            seed: trace.seed,
            horizon: t as u64,
            step,
            regret: regret(trace).ok(),
            normalized_regret: report.as_ref().map(|r| r.normalized_regret),
            normalized_violation: v.linf / (t.max(1) as f64 * trace.capacities.get(v.argmax).copied().unwrap_or(1.0)),
            violation_linf: v.linf,
            violation_l2: v.l2,
            violation_argmax: v.argmax,
            mean_travel_time,
            normalized_travel_time: report.and_then(|r| r.normalized_travel_time),
            regret_bound,
            violation_bound,
            max_toll,
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.policy.clone(),
            self.seed.to_string(),
            self.horizon.to_string(),
            self.step.map(|s| format!("{s:e}")).unwrap_or_default(),
            opt_money(self.regret),
            self.normalized_regret.map(|v| format!("{v:.9}")).unwrap_or_default(),
            money(self.violation_linf),
            money(self.violation_l2),
            self.violation_argmax.to_string(),
            format!("{:.9}", self.normalized_violation),
            money(self.mean_travel_time),
            self.normalized_travel_time.map(|v| format!("{v:.9}")).unwrap_or_default(),
            money(self.regret_bound),
            money(self.violation_bound),
            money(self.max_toll),
        ]
    }
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    flush(w, path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = reader(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub policy: String,
    pub horizon: u64,
    pub runs: usize,
    pub mean_violation_linf: f64,
    pub mean_regret: Option<f64>,
    pub violation_slope: Option<f64>,
    pub violation_intercept: Option<f64>,
    pub violation_rmse: Option<f64>,
    pub regret_slope: Option<f64>,
    pub regret_rmse: Option<f64>,
}

fn opt4(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_slopes(path: &Path, rows: &[SlopeRow]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(SLOPE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            r.horizon.to_string(),
            r.runs.to_string(),
            money(r.mean_violation_linf),
            opt_money(r.mean_regret),
            opt4(r.violation_slope),
            opt4(r.violation_intercept),
            opt4(r.violation_rmse),
            opt4(r.regret_slope),
            opt4(r.regret_rmse),
        ])?;
    }
    flush(w, path)
}

pub fn read_slopes(path: &Path) -> Result<Vec<SlopeRow>> {
    let mut r = reader(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// `metadata.toml`: what was run and with which software.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub software: String,
    pub version: String,
    pub command: String,
    pub horizons: Vec<u64>,
    pub seeds: Vec<u64>,
    pub config: ScenarioConfig,
}

impl Metadata {
    pub fn new(command: &str, horizons: &[u64], config: &ScenarioConfig) -> Self {
        Metadata {
            software: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            horizons: horizons.to_vec(),
            seeds: config.seeds.clone(),
            config: config.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Paths of a bundle rooted at `out`.
pub struct Bundle {
    pub root: PathBuf,
}

impl Bundle {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Bundle { root: root.to_path_buf() })
    }

    pub fn run_dir(&self, trace: &RunTrace) -> PathBuf {
        self.root.join(run_dir_name(&trace.policy, trace.seed, trace.horizon()))
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }

    pub fn slopes(&self) -> PathBuf {
        self.root.join("slopes.csv")
    }

    pub fn metadata(&self) -> PathBuf {
        self.root.join("metadata.toml")
    }
}
