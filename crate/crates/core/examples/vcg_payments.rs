//! VCG payments on a parallel network, where they become edge tolls, and
//! the six-node network where no edge-toll decomposition works.

use tollsim::vcg::{check_vcg_equilibrium, vcg_payment_general, vcg_payments_parallel, Counterexample, ParallelInstance};

pub fn run_example() -> tollsim::Result<()> {
    let inst = ParallelInstance::new(vec![1.0, 1.5, 3.0], vec![1, 2, 2], vec![20.0, 12.0, 9.0, 4.0])?;
    let pay = vcg_payments_parallel(&inst)?;
    let net = inst.network()?;
    for (u, (&e, &p)) in pay.assignment.iter().zip(&pay.payments).enumerate() {
        let general = vcg_payment_general(&net, &inst.users(), u)?;
        println!("user {u} (v = {:>4}) on edge {e}: pays {p:.2} (externality {general:.2})", inst.vots()[u]);
    }
    println!("edge tolls {:?}", pay.tolls.as_slice());
    println!("equilibrium under them: {}", check_vcg_equilibrium(&net, &inst.users(), &pay.tolls)?.is_equilibrium);

    let cx = Counterexample::new();
    let rep = check_vcg_equilibrium(&cx.net, &cx.users, &cx.decomposed_tolls())?;
    for d in &rep.deviations {
        println!(
            "counterexample: user {} saves {:.2} by leaving edges {:?} for {:?}",
            d.user,
            d.saving,
            d.from.edges(),
            d.to.edges()
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
