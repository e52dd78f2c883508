//! Command-line front end: `run`, `sweep` and `verify`.
//!
//! Exit codes are [`EXIT_OK`], [`EXIT_FAILED`] (a criterion failed) and
//! [`EXIT_USAGE`] (bad arguments, unreadable config, IO errors).

pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::metrics::{loglog_slope, regret_bound, violation_bound, RunTrace};
use crate::scenarios::{run_experiment, PolicyName, Scenario, ScenarioConfig};
use crate::verify::{run_all, Scale};
use output::{write_run, write_slopes, write_summary, Bundle, Metadata, SlopeRow, SummaryRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tollsim", version, about = "Online congestion tolls from aggregate edge flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured policy and seed at the config horizon.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run each horizon and fit log-log slopes of violation and regret.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, at least three.
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Verify {
        /// Fewer seeds and shorter horizons.
        #[arg(long)]
        fast: bool,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Sweep { config, horizons, out } => cmd_sweep(&config, &horizons, &out),
        Command::Verify { fast } => cmd_verify(if fast { Scale::Fast } else { Scale::Full }),
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("tollsim: {e}");
    EXIT_USAGE
}

/// Loads a config. A relative `data_dir` is taken relative to the config
/// file; the returned echo keeps it as written.
fn load_config(path: &Path) -> Result<(ScenarioConfig, ScenarioConfig)> {
    let echo = ScenarioConfig::load(path)?;
    let mut cfg = echo.clone();
    if let Some(d) = &cfg.data_dir {
        if d.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.data_dir = Some(base.join(d));
        }
    }
    Ok((echo, cfg))
}

/// One finished run with the bounds that belong to its scenario.
struct RunResult {
    trace: RunTrace,
    summary: SummaryRow,
}

fn run_grid(cfg: &ScenarioConfig, horizons: &[u64]) -> Result<Vec<RunResult>> {
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        let mut scenario = Scenario::build(cfg, seed)?;
        let m = scenario.net.edge_count();
        let users = scenario.population.total_users();
        let cmax = scenario.net.max_capacity();
        let lmax = scenario.max_outside_cost()?;
        for &h in horizons {
            for &name in &cfg.policies {
                let mut policy = scenario.policy(cfg, name, h)?;
                let trace = run_experiment(&mut scenario, &mut policy, h, cfg.oracle_every)?;
                let step = (name == PolicyName::OnlineGradient).then_some(policy.step());
                let summary = SummaryRow::from_trace(
                    &trace,
                    step,
                    regret_bound(m, users, cmax, h as usize),
                    violation_bound(m, lmax, cmax, users, h as usize),
                );
                out.push(RunResult { trace, summary });
            }
        }
    }
    Ok(out)
}

fn print_table(rows: &[SummaryRow]) {
    println!(
        "{:<16} {:>6} {:>7} {:>16} {:>12} {:>14} {:>12} {:>10}",
        "policy", "seed", "T", "regret", "norm_regret", "viol_linf", "norm_viol", "norm_ttt"
    );
    let opt = |v: Option<f64>, p: usize| v.map(|x| format!("{x:.p$}")).unwrap_or_else(|| "-".into());
    for r in rows {
        println!(
            "{:<16} {:>6} {:>7} {:>16} {:>12} {:>14.3} {:>12.6} {:>10}",
            r.policy,
            r.seed,
            r.horizon,
            opt(r.regret, 3),
            opt(r.normalized_regret, 6),
            r.violation_linf,
            r.normalized_violation,
            opt(r.normalized_travel_time, 4)
        );
    }
}

fn write_bundle(bundle: &Bundle, results: &[RunResult]) -> Result<Vec<SummaryRow>> {
    for r in results {
        write_run(&bundle.run_dir(&r.trace), &r.trace)?;
    }
    let rows: Vec<SummaryRow> = results.iter().map(|r| r.summary.clone()).collect();
    write_summary(&bundle.summary(), &rows)?;
    Ok(rows)
}

pub fn cmd_run(config: &Path, out: &Path) -> i32 {
    let go = || -> Result<()> {
        let (echo, cfg) = load_config(config)?;
        let bundle = Bundle::create(out)?;
        let horizons = [cfg.horizon];
        let results = run_grid(&cfg, &horizons)?;
        let rows = write_bundle(&bundle, &results)?;
        Metadata::new("run", &horizons, &echo).write(&bundle.metadata())?;
        print_table(&rows);
        Ok(())
    };
    go().map_or_else(|e| report_error(&e), |_| EXIT_OK)
}

/// Mean L∞ violation and mean regret per (policy, horizon), with log-log
/// fits across horizons. The regret fit uses the horizons whose mean regret
/// is positive and is left empty when fewer than three are.
pub fn slope_rows(rows: &[SummaryRow], policies: &[PolicyName], horizons: &[u64]) -> Vec<SlopeRow> {
    let mut out = Vec::new();
    for &p in policies {
        let mut block = Vec::new();
        for &h in horizons {
            let runs: Vec<&SummaryRow> = rows.iter().filter(|r| r.policy == p.as_str() && r.horizon == h).collect();
            let n = runs.len().max(1) as f64;
            let linf = runs.iter().map(|r| r.violation_linf).sum::<f64>() / n;
            let regret = runs.iter().map(|r| r.regret).sum::<Option<f64>>().map(|s| s / n);
            block.push(SlopeRow {
                policy: p.as_str().into(),
                horizon: h,
                runs: runs.len(),
                mean_violation_linf: linf,
                mean_regret: regret,
                violation_slope: None,
                violation_intercept: None,
                violation_rmse: None,
                regret_slope: None,
                regret_rmse: None,
            });
        }
        let vpts: Vec<(f64, f64)> = block.iter().map(|r| (r.horizon as f64, r.mean_violation_linf)).collect();
        let rpts: Vec<(f64, f64)> = block
            .iter()
            .filter_map(|r| r.mean_regret.filter(|&v| v > 0.0).map(|v| (r.horizon as f64, v)))
            .collect();
        let vfit = loglog_slope(&vpts).ok();
        let rfit = loglog_slope(&rpts).ok();
        for r in &mut block {
            r.violation_slope = vfit.map(|f| f.slope);
            r.violation_intercept = vfit.map(|f| f.intercept);
            r.violation_rmse = vfit.map(|f| f.rmse);
            r.regret_slope = rfit.map(|f| f.slope);
            r.regret_rmse = rfit.map(|f| f.rmse);
        }
        out.extend(block);
    }
    out
}

pub fn cmd_sweep(config: &Path, horizons: &[u64], out: &Path) -> i32 {
    let go = || -> Result<()> {
        let mut hs = horizons.to_vec();
        hs.sort_unstable();
        hs.dedup();
        if hs.len() < 3 || hs[0] == 0 {
            return Err(Error::Config(format!("sweep needs at least 3 distinct positive horizons, got {horizons:?}")));
        }
        let (echo, cfg) = load_config(config)?;
        let bundle = Bundle::create(out)?;
        let results = run_grid(&cfg, &hs)?;
        let rows = write_bundle(&bundle, &results)?;
        let slopes = slope_rows(&rows, &cfg.policies, &hs);
        write_slopes(&bundle.slopes(), &slopes)?;
        Metadata::new("sweep", &hs, &echo).write(&bundle.metadata())?;
        print_table(&rows);
        for s in slopes.iter().filter(|s| s.horizon == hs[0]) {
            let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            println!(
                "{}: violation slope {} (rmse {}), regret slope {} (rmse {})",
                s.policy,
                f(s.violation_slope),
                f(s.violation_rmse),
                f(s.regret_slope),
                f(s.regret_rmse)
            );
        }
        Ok(())
    };
    go().map_or_else(|e| report_error(&e), |_| EXIT_OK)
}

pub fn cmd_verify(scale: Scale) -> i32 {
    let results = run_all(scale, |r| println!("{}", r.line()));
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}
