//! Sampled trajectories shared by both solvers, plus time grids.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dissipation::SampledPath;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// States on a time grid. Entry `k` describes the step `(t_{k-1}, t_k]`:
/// `x_k = x_{k-1} + (t_k - t_{k-1}) v_k`. Entry 0 holds the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct Trajectory<S> {
    pub times: Vec<S>,
    pub states: Vec<Vec<S>>,
    pub velocities: Vec<Vec<S>>,
    /// Dissipation spent on each step.
    pub step_dissipation: Vec<S>,
    /// Viscous work `h ⟨V v_k, v_k⟩` on each step (without the `ε` factor).
    pub step_viscous: Vec<S>,
    pub energies: Vec<S>,
    pub kinetic: Vec<S>,
    pub balance_residual: Vec<S>,
}

impl<S: Real> Trajectory<S> {
    pub(crate) fn start(t0: S, x0: Vec<S>, v0: Vec<S>, energy: S, kinetic: S) -> Self {
        Self {
            times: vec![t0],
            states: vec![x0],
            velocities: vec![v0],
            step_dissipation: vec![S::zero()],
            step_viscous: vec![S::zero()],
            energies: vec![energy],
            kinetic: vec![kinetic],
            balance_residual: vec![S::zero()],
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(&mut self, t: S, x: Vec<S>, v: Vec<S>, dissipation: S, viscous: S, energy: S, kinetic: S) {
        self.times.push(t);
        self.states.push(x);
        self.velocities.push(v);
        self.step_dissipation.push(dissipation);
        self.step_viscous.push(viscous);
        self.energies.push(energy);
        self.kinetic.push(kinetic);
        self.balance_residual.push(S::zero());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn final_state(&self) -> &[S] {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn total_dissipation(&self) -> S {
        self.step_dissipation.iter().copied().sum()
    }

    /// Piecewise-linear interpolant through the states.
    pub fn linear_path(&self) -> LinearPath<'_, S> {
        LinearPath { traj: self }
    }

    /// Right-continuous piecewise-constant interpolant: `x(τ) = x_{k-1}` on
    /// `[t_{k-1}, t_k)`.
    pub fn step_path(&self) -> StepPath<'_, S> {
        StepPath { traj: self }
    }

    /// Index of the last grid time `≤ t`.
    pub fn index_at(&self, t: S) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// CSV with columns `t, x_1..x_n, v_1..v_n, E, kinetic, R_step, balance_residual`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x_{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",v_{i}");
        }
        out.push_str(",E,kinetic,R_step,balance_residual\n");
        for k in 0..self.len() {
            let _ = write!(out, "{}", self.times[k]);
            for x in self.states[k].iter().chain(&self.velocities[k]) {
                let _ = write!(out, ",{x}");
            }
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                self.energies[k], self.kinetic[k], self.step_dissipation[k], self.balance_residual[k]
            );
        }
        out
    }
}

/// See [`Trajectory::linear_path`].
pub struct LinearPath<'a, S> {
    traj: &'a Trajectory<S>,
}

impl<S: Real> SampledPath<S> for LinearPath<'_, S> {
    fn state_at(&self, t: S) -> Vec<S> {
        let tr = self.traj;
        let k = tr.index_at(t);
        if k + 1 >= tr.len() || t <= tr.times[0] {
            return tr.states[k].clone();
        }
        let (a, b) = (tr.times[k], tr.times[k + 1]);
        let w = (t - a) / (b - a);
        tr.states[k].iter().zip(&tr.states[k + 1]).map(|(&p, &q)| p + w * (q - p)).collect()
    }

    fn knots(&self, s: S, t: S) -> Vec<S> {
        self.traj.times.iter().copied().filter(|&k| k > s && k < t).collect()
    }
}

/// See [`Trajectory::step_path`].
pub struct StepPath<'a, S> {
    traj: &'a Trajectory<S>,
}

impl<S: Real> SampledPath<S> for StepPath<'_, S> {
    fn state_at(&self, t: S) -> Vec<S> {
        self.traj.states[self.traj.index_at(t)].clone()
    }

    fn knots(&self, s: S, t: S) -> Vec<S> {
        self.traj.times.iter().copied().filter(|&k| k > s && k < t).collect()
    }
}

/// Grid on `[0, horizon]` containing every breakpoint, with each interval
/// between consecutive breakpoints split into equal steps no longer than `h`.
pub fn time_grid<S: Real>(horizon: S, h: S, breakpoints: &[S]) -> Result<Vec<S>> {
    if !(h > S::zero()) || !h.is_finite() {
        return Err(Error::Domain(format!("time step must be positive, got {h}")));
    }
    if !(horizon >= S::zero()) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be nonnegative, got {horizon}")));
    }
    let mut knots = vec![S::zero()];
    knots.extend(breakpoints.iter().copied().filter(|&b| b > S::zero() && b < horizon));
    if horizon > S::zero() {
        knots.push(horizon);
    }
    let mut grid = vec![S::zero()];
    let slack = S::one() - S::lit(1e-9);
    for w in knots.windows(2) {
        let len = w[1] - w[0];
        let pieces = (len / h * slack).ceil().max(S::one());
        let count = pieces.to_usize().ok_or_else(|| Error::Domain("too many time steps".into()))?;
        for j in 1..count {
            grid.push(w[0] + len * S::lit(j as f64) / pieces);
        }
        grid.push(w[1]);
    }
    Ok(grid)
}

/// Simulation that stopped early: the steps completed so far and the cause.
#[derive(Debug)]
pub struct RunFailure<S> {
    pub partial: Trajectory<S>,
    pub error: Error,
}

impl<S: Real> std::fmt::Display for RunFailure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.partial.times.last().copied().unwrap_or(S::zero());
        write!(f, "run stopped after t = {t}: {}", self.error)
    }
}

impl<S: Real> std::error::Error for RunFailure<S> {}

impl<S: Real> From<RunFailure<S>> for Error {
    fn from(f: RunFailure<S>) -> Self {
        let t = f.partial.times.last().copied().unwrap_or(S::zero());
        match f.error {
            Error::Numerical { message, residual } => {
                Error::Numerical { message: format!("{message} (after t = {t})"), residual }
            }
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_breakpoints() {
        let g = time_grid(1.0f64, 0.3, &[0.5]).unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.contains(&0.5));
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-15));
    }

    #[test]
    fn grid_uniform_when_divisible() {
        let g = time_grid(1.0f64, 1e-3, &[]).unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g[500] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_grid() {
        assert_eq!(time_grid(0.0f64, 0.1, &[]).unwrap(), vec![0.0]);
    }

    #[test]
    fn paths_interpolate() {
        let mut tr = Trajectory::start(0.0f64, vec![0.0], vec![0.0], 0.0, 0.0);
        tr.push(1.0, vec![2.0], vec![2.0], 0.0, 0.0, 0.0, 0.0);
        assert_eq!(tr.linear_path().state_at(0.25), vec![0.5]);
        assert_eq!(tr.step_path().state_at(0.25), vec![0.0]);
        assert_eq!(tr.step_path().state_at(1.0), vec![2.0]);
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,x_1,v_1,E,kinetic,R_step,balance_residual\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
