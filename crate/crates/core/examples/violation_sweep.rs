//! Cumulative capacity violation of the gradient policy against T on
//! reduced Sioux Falls, with the log-log slope. Expect about 0.5.

use tollsim::verify::{online_gradient, reduced_sioux_falls, violation_sweep};

pub fn run_example_with(horizons: &[u64], seeds: Vec<u64>) -> tollsim::Result<()> {
    let mut cfg = reduced_sioux_falls(horizons[0]);
    cfg.seeds = seeds;
    cfg.oracle_every = 1000;
    let sweep = violation_sweep(&cfg, horizons, &online_gradient)?;
    for (t, v) in &sweep.points {
        println!("T {t:>6}: mean L-inf violation {v:>10.1} veh");
    }
    if let Some(fit) = sweep.fit {
        println!("slope {:.3}, rmse {:.4}", fit.slope, fit.rmse);
    }
    Ok(())
}

pub fn run_example() -> tollsim::Result<()> {
    run_example_with(&[25, 50, 100], vec![1])
}

fn main() {
    if let Err(e) = run_example_with(&[100, 200, 500, 1000], vec![1, 2]) {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
