//! Toll-setting policies: the projected dual-gradient update, the reactive
//! benchmark, and static LP tolls with per-period tie-breaking noise.

use rand::Rng;

use crate::equilibrium::TollVector;
use crate::error::{Error, Result};
use crate::rng::{keyed, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    OnlineGradient,
    Reactive,
    Static,
}

/// Anything that posts tolls each period and learns from observed flows.
///
/// `current` returns the tolls for the coming period as raw values; the
/// simulation routes under their positive part and records them as posted,
/// so an update that loses nonnegativity stays visible in the trace.
pub trait TollPolicy {
    fn name(&self) -> &str;
    fn current(&self) -> &[f64];
    fn update(&mut self, capacities: &[f64], flows: &[f64]) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct TollerState {
    name: String,
    kind: PolicyKind,
    tolls: TollVector,
    /// γ in $/vehicle.
    step: f64,
    /// δ in dollars.
    increment: f64,
    period: u64,
    trajectory: Vec<TollVector>,
    base: TollVector,
    noise: f64,
    seed: u64,
}

/// 1/√T.
pub fn recommended_step(horizon: u64) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    Ok(1.0 / (horizon as f64).sqrt())
}

/// max_u λ_u + max_e c_e + |U|, the a priori cap on gradient tolls when γ ≤ 1.
pub fn toll_bound(max_outside_cost: f64, max_capacity: f64, users: u64) -> f64 {
    max_outside_cost + max_capacity + users as f64
}

/// `lp_tolls` plus i.i.d. Uniform[−h, h] noise per edge, clipped at zero.
pub fn static_tolls<R: Rng>(lp_tolls: &TollVector, noise_halfwidth: f64, rng: &mut R) -> TollVector {
    if noise_halfwidth == 0.0 {
        return lp_tolls.clone();
    }
    let raw: Vec<f64> = lp_tolls
        .as_slice()
        .iter()
        .map(|&t| t + noise_halfwidth * (2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    TollVector::project(&raw)
}

fn check_dims(expected: usize, capacities: &[f64], flows: &[f64]) -> Result<()> {
    for got in [capacities.len(), flows.len()] {
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
    }
    Ok(())
}

impl TollerState {
    /// Algorithm-1 tolls starting from zero.
    pub fn online_gradient(edges: usize, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!("step size {step} must be positive")));
        }
        Ok(Self::blank("online_gradient", PolicyKind::OnlineGradient, TollVector::zeros(edges), step, 0.0))
    }

    /// Reactive ±δ updates starting from zero.
    pub fn reactive(edges: usize, increment: f64) -> Result<Self> {
        if !(increment > 0.0) || !increment.is_finite() {
            return Err(Error::InvalidArgument(format!("increment {increment} must be positive")));
        }
        Ok(Self::blank("reactive", PolicyKind::Reactive, TollVector::zeros(edges), 0.0, increment))
    }

    /// Fixed `base` tolls with fresh noise each period, keyed by `(seed, t)`.
    pub fn static_benchmark(name: &str, base: TollVector, noise_halfwidth: f64, seed: u64) -> Result<Self> {
        if !(noise_halfwidth >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise half-width {noise_halfwidth}")));
        }
        let mut s = Self::blank(name, PolicyKind::Static, base.clone(), 0.0, 0.0);
        s.base = base;
        s.noise = noise_halfwidth;
        s.seed = seed;
        s.tolls = s.static_draw(1);
        s.trajectory = vec![s.tolls.clone()];
        Ok(s)
    }

    fn blank(name: &str, kind: PolicyKind, tolls: TollVector, step: f64, increment: f64) -> Self {
        TollerState {
            name: name.to_string(),
            kind,
            trajectory: vec![tolls.clone()],
            base: TollVector::zeros(tolls.len()),
            tolls,
            step,
            increment,
            period: 1,
            noise: 0.0,
            seed: 0,
        }
    }

    fn static_draw(&self, t: u64) -> TollVector {
        let mut rng = keyed(self.seed, Purpose::TollNoise, t, 0);
        static_tolls(&self.base, self.noise, &mut rng)
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn tolls(&self) -> &TollVector {
        &self.tolls
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Index of the period whose tolls are current (starts at 1).
    pub fn period(&self) -> u64 {
        self.period
    }

    /// Tolls posted in periods 1, 2, …, including the current one.
    pub fn trajectory(&self) -> &[TollVector] {
        &self.trajectory
    }

    fn advance(&mut self, next: TollVector) -> &TollVector {
        self.tolls = next;
        self.period += 1;
        self.trajectory.push(self.tolls.clone());
        &self.tolls
    }

    /// τ ← max(0, τ − γ(c − x)).
    pub fn gradient_update(&mut self, capacities: &[f64], flows: &[f64]) -> Result<&TollVector> {
        if self.kind != PolicyKind::OnlineGradient {
            return Err(Error::InvalidArgument(format!("{:?} policy cannot take a gradient step", self.kind)));
        }
        check_dims(self.tolls.len(), capacities, flows)?;
        let g = self.step;
        let raw: Vec<f64> = self
            .tolls
            .as_slice()
            .iter()
            .zip(capacities.iter().zip(flows))
            .map(|(&t, (&c, &x))| t - g * (c - x))
            .collect();
        Ok(self.advance(TollVector::project(&raw)))
    }

    /// +δ on congested edges, −δ (floored at zero) on slack edges, unchanged
    /// at exact capacity.
    pub fn reactive_update(&mut self, capacities: &[f64], flows: &[f64]) -> Result<&TollVector> {
        if self.kind != PolicyKind::Reactive {
            return Err(Error::InvalidArgument(format!("{:?} policy cannot take a reactive step", self.kind)));
        }
        check_dims(self.tolls.len(), capacities, flows)?;
        let d = self.increment;
        let next: Vec<f64> = self
            .tolls
            .as_slice()
            .iter()
            .zip(capacities.iter().zip(flows))
            .map(|(&t, (&c, &x))| {
                if x > c {
                    t + d
                } else if x < c {
                    (t - d).max(0.0)
                } else {
                    t
                }
            })
            .collect();
        Ok(self.advance(TollVector::project(&next)))
    }

    /// Dispatches to the update matching the policy kind.
    pub fn observe(&mut self, capacities: &[f64], flows: &[f64]) -> Result<&TollVector> {
        match self.kind {
            PolicyKind::OnlineGradient => self.gradient_update(capacities, flows),
            PolicyKind::Reactive => self.reactive_update(capacities, flows),
            PolicyKind::Static => {
                check_dims(self.tolls.len(), capacities, flows)?;
                let next = self.static_draw(self.period + 1);
                Ok(self.advance(next))
            }
        }
    }
}

impl TollPolicy for TollerState {
    fn name(&self) -> &str {
        &self.name
    }

    fn current(&self) -> &[f64] {
        self.tolls.as_slice()
    }

    fn update(&mut self, capacities: &[f64], flows: &[f64]) -> Result<()> {
        self.observe(capacities, flows).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_from(tau: f64, step: f64) -> TollerState {
        let mut s = TollerState::online_gradient(1, step).unwrap();
        s.tolls = TollVector::new(vec![tau]).unwrap();
        s
    }

    #[test]
    fn gradient_examples() {
        let mut s = gradient_from(1.0, 0.5);
        assert_eq!(s.gradient_update(&[2.0], &[4.0]).unwrap().as_slice(), &[2.0]);
        let mut s = gradient_from(0.3, 1.0);
        assert_eq!(s.gradient_update(&[5.0], &[2.0]).unwrap().as_slice(), &[0.0]);
        let mut s = gradient_from(0.7, 0.1);
        assert_eq!(s.gradient_update(&[3.0], &[3.0]).unwrap().as_slice(), &[0.7]);
        assert!(s.gradient_update(&[3.0, 1.0], &[3.0]).is_err());
        assert!(s.reactive_update(&[3.0], &[3.0]).is_err());
        assert_eq!(s.trajectory().len(), 2);
    }

    #[test]
    fn reactive_examples() {
        let mut s = TollerState::reactive(1, 0.1).unwrap();
        s.tolls = TollVector::new(vec![0.5]).unwrap();
        assert!((s.reactive_update(&[5.0], &[10.0]).unwrap()[0] - 0.6).abs() < 1e-15);
        s.tolls = TollVector::new(vec![0.05]).unwrap();
        assert_eq!(s.reactive_update(&[5.0], &[1.0]).unwrap()[0], 0.0);
        s.tolls = TollVector::new(vec![0.3]).unwrap();
        assert_eq!(s.reactive_update(&[5.0], &[5.0]).unwrap()[0], 0.3);
    }

    #[test]
    fn steps() {
        assert_eq!(recommended_step(100).unwrap(), 0.1);
        assert_eq!(recommended_step(10_000).unwrap(), 0.01);
        assert!(recommended_step(0).is_err());
    }

    #[test]
    fn static_noise() {
        let base = TollVector::new(vec![0.0, 1.0]).unwrap();
        let mut exact = TollerState::static_benchmark("s", base.clone(), 0.0, 1).unwrap();
        for _ in 0..5 {
            assert_eq!(exact.observe(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), &base);
        }
        let mut noisy = TollerState::static_benchmark("s", base, 5e-4, 1).unwrap();
        for _ in 0..200 {
            let t = noisy.observe(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
            assert!((0.0..=5e-4).contains(&t[0]));
            assert!((t[1] - 1.0).abs() <= 5e-4);
        }
        let replay = TollerState::static_benchmark("s", TollVector::new(vec![0.0, 1.0]).unwrap(), 5e-4, 1).unwrap();
        assert_eq!(replay.trajectory()[0], noisy.trajectory()[0]);
    }
}
