//! The one-edge instance where no online policy can beat √T: the expected
//! excess of type-I users over capacity, exactly and by simulation, and
//! what the gradient policy actually achieves there.

use tollsim::metrics::{regret, violation};
use tollsim::scenarios::{build_lower_bound, run_experiment, PolicyName, ScenarioConfig, ScenarioKind};
use tollsim::verify::{lower_bound_gap_estimate, lower_bound_gap_exact};

pub fn run_example() -> tollsim::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "T", "exact gap", "sampled", "R_T", "V_T");
    for t in [100u64, 400, 1600] {
        let exact = lower_bound_gap_exact(t);
        let sampled = lower_bound_gap_estimate(t, 200)?;
        let cfg = ScenarioConfig::new(ScenarioKind::LowerBound, t);
        let mut s = build_lower_bound(7)?;
        let mut policy = s.policy(&cfg, PolicyName::OnlineGradient, t)?;
        let trace = run_experiment(&mut s, &mut policy, t, 1)?;
        println!(
            "{t:>6} {exact:>10.3} {sampled:>10.3} {:>10.3} {:>10.3}",
            regret(&trace)?,
            violation(&trace).linf
        );
    }
    // R_T is negative here: letting both type-I users through is cheaper
    // than the capacity-feasible optimum. The price is V_T.
    // Quadrupling T doubles the gap.
    println!("gap ratio 1600/400 = {:.3}", lower_bound_gap_exact(1600) / lower_bound_gap_exact(400));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
