//! Solve the system-optimum LP on a small network, read off the dual tolls,
//! and check that they clear the market: slack edges are free, no edge is
//! over capacity and every user is on a cheapest option.

use tollsim::lp_oracle::{check_market_clearing, solve_lp, LpInstance};
use tollsim::{compute_equilibrium_batched, Commodity, Network, TollVector};

pub fn run_example() -> tollsim::Result<()> {
    // Two routes from 0 to 2: a fast one through node 1 with room for two
    // vehicles, and a slow direct link.
    let net = Network::from_edges(3, [(0, 1, 0.25, 2.0), (1, 2, 0.25, 2.0), (0, 2, 1.0, 10.0)])?;
    let users = vec![
        Commodity::single(0, 2, 30.0, Some(60.0)),
        Commodity::single(0, 2, 20.0, Some(60.0)),
        Commodity::single(0, 2, 12.0, Some(60.0)),
        Commodity::single(0, 2, 8.0, Some(5.0)),
    ];
    let inst = LpInstance::new(&net, users.clone())?;
    let sol = solve_lp(&inst)?;
    println!("U* = {:.4}, dual = {:.4}", sol.objective, sol.dual_value);
    println!("tolls {:?}", sol.tolls.as_slice());

    let report = check_market_clearing(&inst, &sol)?;
    println!(
        "slackness {:.1e}, excess {:.1e}, user residual {:.1e}",
        report.max_slackness(),
        report.max_excess(),
        report.max_user_residual()
    );

    // The LP tolls sit at the edge of the clearing interval, so the marginal
    // user (v = 12) is exactly indifferent and the optimum is one of its
    // equilibria. A capacity-blind tie-break sends that user onto the full
    // route; a one-cent nudge makes the clearing assignment the only one.
    for (label, tolls) in [("LP tolls", sol.tolls.clone()), ("nudged", TollVector::new(vec![sol.tolls[0] + 0.01, 0.0, 0.0])?)] {
        let eq = compute_equilibrium_batched(&net, &users, &tolls)?;
        println!("{label}: flows {:?} against capacities {:?}", eq.flows, net.capacities());
        for (u, c) in users.iter().zip(&eq.choices) {
            let what = c.path().map(|p| format!("edges {:?}", p.edges())).unwrap_or_else(|| "stays home".into());
            println!("  v = {:>4}: {what}", u.vot);
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
