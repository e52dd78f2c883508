//! Acceptance criteria 1 to 8 at their stated sizes and tolerances.
//!
//! Runs without the libtest harness so every criterion line reaches the
//! terminal. Exits nonzero if any criterion fails. Expect about a quarter of
//! an hour on one core, most of it in the Sioux Falls sweep and benchmarks.

use std::time::Instant;

use tollsim::verify::{run_all, Scale};

fn main() {
    let start = Instant::now();
    println!("acceptance: full scale");
    let results = run_all(Scale::Full, |r| println!("{}", r.line()));
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
