//! Deliberately broken toll rules must be caught by the acceptance checks.

use tollsim::scenarios::{Scenario, ScenarioConfig};
use tollsim::verify::{online_gradient, simulation_criteria, Scale};
use tollsim::{Result, TollPolicy};

/// The gradient step with the projection onto τ ≥ 0 removed.
struct Unprojected {
    tolls: Vec<f64>,
    step: f64,
}

/// The gradient step with the sign of γ flipped.
struct Flipped {
    tolls: Vec<f64>,
    step: f64,
}

impl TollPolicy for Unprojected {
    fn name(&self) -> &str {
        "unprojected"
    }
    fn current(&self) -> &[f64] {
        &self.tolls
    }
    fn update(&mut self, c: &[f64], x: &[f64]) -> Result<()> {
        for ((t, c), x) in self.tolls.iter_mut().zip(c).zip(x) {
            *t -= self.step * (c - x);
        }
        Ok(())
    }
}

impl TollPolicy for Flipped {
    fn name(&self) -> &str {
        "flipped"
    }
    fn current(&self) -> &[f64] {
        &self.tolls
    }
    fn update(&mut self, c: &[f64], x: &[f64]) -> Result<()> {
        for ((t, c), x) in self.tolls.iter_mut().zip(c).zip(x) {
            *t = (*t + self.step * (c - x)).max(0.0);
        }
        Ok(())
    }
}

fn unprojected(s: &Scenario, cfg: &ScenarioConfig, h: u64) -> Result<Box<dyn TollPolicy>> {
    Ok(Box::new(Unprojected { tolls: vec![0.0; s.net.edge_count()], step: cfg.step(h)? }))
}

fn flipped(s: &Scenario, cfg: &ScenarioConfig, h: u64) -> Result<Box<dyn TollPolicy>> {
    Ok(Box::new(Flipped { tolls: vec![0.0; s.net.edge_count()], step: cfg.step(h)? }))
}

#[test]
fn correct_policy_passes_fast_checks() {
    let [c1, c2, c3] = simulation_criteria(Scale::Fast, &online_gradient).unwrap();
    for c in [&c1, &c2, &c3] {
        println!("{}", c.line());
        assert!(c.passed, "{}", c.line());
    }
}

#[test]
fn removing_the_projection_breaks_boundedness() {
    let [_, _, c3] = simulation_criteria(Scale::Fast, &unprojected).unwrap();
    println!("{}", c3.line());
    assert!(!c3.passed);
}

#[test]
fn flipping_the_step_breaks_the_violation_slope() {
    let [c1, _, _] = simulation_criteria(Scale::Fast, &flipped).unwrap();
    println!("{}", c1.line());
    assert!(!c1.passed);
}
