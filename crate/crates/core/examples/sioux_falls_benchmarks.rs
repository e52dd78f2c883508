//! The gradient policy against the reactive and static-toll benchmarks on
//! reduced Sioux Falls. Pass a horizon to go longer (default 200).

use tollsim::scenarios::PolicyName;
use tollsim::verify::{benchmark_table, reduced_sioux_falls};

pub fn run_example_with(horizon: u64, seeds: Vec<u64>) -> tollsim::Result<()> {
    let mut cfg = reduced_sioux_falls(horizon);
    cfg.seeds = seeds;
    cfg.oracle_every = (horizon / 10).max(1);
    let policies = [PolicyName::OnlineGradient, PolicyName::Reactive, PolicyName::PopulationMean, PolicyName::UserMean];
    let rows = benchmark_table(&cfg, &policies)?;
    println!("T = {horizon}, {} seed(s)", cfg.seeds.len());
    println!("{:<16} {:>12} {:>12} {:>10}", "policy", "norm regret", "norm viol", "norm TTT");
    for (p, r) in policies.iter().zip(&rows) {
        println!(
            "{:<16} {:>12.5} {:>12.5} {:>10.4}",
            p.as_str(),
            r.normalized_regret,
            r.normalized_violation,
            r.normalized_travel_time
        );
    }
    Ok(())
}

pub fn run_example() -> tollsim::Result<()> {
    run_example_with(60, vec![1])
}

fn main() {
    let horizon = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    if let Err(e) = run_example_with(horizon, vec![1, 2]) {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
