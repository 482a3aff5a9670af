//! Semi-implicit time stepping for `ε²Mẍ + εVẋ + ∂ᵥR(t, ẋ) + DₓE(t, x) ∋ 0`.
//!
//! Each step solves for the new velocity with the elastic force frozen at
//! the previous position:
//!
//! ```text
//! ε²M (v_k - v_{k-1})/h + εV v_k + ∂ᵥR(t_k, v_k) + DₓE(t_k, x_{k-1}) ∋ 0,
//! x_k = x_{k-1} + h v_k.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{minimize_composite, CompositeProblem, QuadraticPart, SolverOptions};
use crate::linalg::norm;
use crate::model::{validate_model, ModelSpec};
use crate::scalar::Real;
use crate::trajectory::{time_grid, RunFailure, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct DynamicConfig<S> {
    pub epsilon: S,
    /// Largest step; the grid is refined so that it contains every loading
    /// and friction breakpoint.
    pub step: S,
    pub initial_position: Vec<S>,
    pub initial_velocity: Vec<S>,
    #[serde(default = "default_tol")]
    pub tol: S,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol<S: Real>() -> S {
    S::default_tol()
}

fn default_max_iter() -> usize {
    100_000
}

impl<S: Real> DynamicConfig<S> {
    pub fn new(epsilon: S, step: S, initial_position: Vec<S>, initial_velocity: Vec<S>) -> Self {
        Self { epsilon, step, initial_position, initial_velocity, tol: default_tol(), max_iter: default_max_iter() }
    }

    pub fn solver_options(&self) -> SolverOptions<S> {
        SolverOptions { tol: self.tol, max_iter: self.max_iter }
    }

    /// `h = min(h_max, ε/50)`, enough to resolve oscillations of period `~2πε`.
    pub fn step_rule(epsilon: S, h_max: S) -> S {
        h_max.min(epsilon / S::lit(50.0))
    }

    fn check(&self, model: &ModelSpec<S>) -> Result<()> {
        let n = model.dimension;
        if !(self.epsilon > S::zero()) {
            return Err(Error::Domain(format!("ε must be positive, got {}", self.epsilon)));
        }
        if self.initial_position.len() != n || self.initial_velocity.len() != n {
            return Err(Error::Structural("initial data has the wrong dimension".into()));
        }
        if self.initial_position.iter().chain(&self.initial_velocity).any(|x| !x.is_finite()) {
            return Err(Error::Domain("initial data must be finite".into()));
        }
        if !model.cone().contains(&self.initial_velocity) {
            return Err(Error::Validation("initial velocity lies outside the velocity cone".into()));
        }
        Ok(())
    }
}

/// `(ε²/2) ⟨M v, v⟩`
pub fn kinetic_energy<S: Real>(model: &ModelSpec<S>, epsilon: S, v: &[S]) -> S {
    S::lit(0.5) * epsilon * epsilon * model.mass.quad_form(v)
}

/// One velocity update on `(t_k - h, t_k]`.
pub fn step_dynamic<S: Real>(
    model: &ModelSpec<S>,
    config: &DynamicConfig<S>,
    t_k: S,
    h: S,
    x_prev: &[S],
    v_prev: &[S],
) -> Result<Vec<S>> {
    let eps = config.epsilon;
    let inertia = eps * eps / h;
    let q = model.mass.scale(inertia).add(&model.viscosity.symmetric_part().scale(eps));
    let mv = model.mass.mul_vec(v_prev);
    let b = model.grad_e(t_k, x_prev).iter().zip(&mv).map(|(&g, &m)| g - inertia * m).collect();
    let problem = CompositeProblem { smooth: QuadraticPart { q, b }, dissipation: &model.dissipation, time: t_k, scale: S::one() };
    Ok(minimize_composite(&problem, v_prev, &config.solver_options())?.v)
}

/// Full dynamic run on `[0, T]`.
pub fn simulate_dynamic<S: Real>(model: &ModelSpec<S>, config: &DynamicConfig<S>) -> Result<Trajectory<S>, RunFailure<S>> {
    let eps = config.epsilon;
    let x0 = config.initial_position.clone();
    let v0 = config.initial_velocity.clone();
    let fail = |partial: Trajectory<S>, error: Error| RunFailure { partial, error };
    let mut traj = Trajectory::start(S::zero(), x0.clone(), v0.clone(), model.eval_e(S::zero(), &x0), kinetic_energy(model, eps, &v0));
    let preflight = || -> Result<Vec<S>> {
        let report = validate_model(model)?;
        if !report.passed {
            let labels: Vec<_> = report.violations.iter().map(|v| format!("{}: {}", v.label, v.detail)).collect();
            return Err(Error::Validation(labels.join("; ")));
        }
        config.check(model)?;
        time_grid(model.horizon, config.step, &model.breakpoints())
    };
    let grid = match preflight() {
        Ok(g) => g,
        Err(e) => return Err(fail(traj, e)),
    };
    if let Some(limit) = stable_step_estimate(model, eps, &traj.states[0]) {
        if config.step > limit {
            log::warn!("step {} exceeds the explicit-energy stability estimate {limit}; expect growing oscillations", config.step);
        }
    }
    let mut x = x0;
    let mut v = v0;
    for w in grid.windows(2) {
        let (t_prev, t_k) = (w[0], w[1]);
        let h = t_k - t_prev;
        let v_new = match step_dynamic(model, config, t_k, h, &x, &v) {
            Ok(v) => v,
            Err(e) => return Err(fail(traj, e)),
        };
        let x_new: Vec<S> = x.iter().zip(&v_new).map(|(&a, &b)| a + h * b).collect();
        let diss = h * model.eval_r(t_k, &v_new);
        let visc = h * model.viscosity.quad_form(&v_new);
        let energy = model.eval_e(t_k, &x_new);
        if !diss.is_finite() || !energy.is_finite() || x_new.iter().any(|c| !c.is_finite()) {
            return Err(fail(traj, Error::numerical(format!("non-finite state at t = {t_k}"), f64::NAN)));
        }
        traj.push(t_k, x_new.clone(), v_new.clone(), diss, visc, energy, kinetic_energy(model, eps, &v_new));
        x = x_new;
        v = v_new;
    }
    traj.balance_residual = energy_balance_residual(&traj, model, eps);
    Ok(traj)
}

/// `2ε √(λ_min(M) / λ_max(D²E))` at `t = 0`: the energy enters each step
/// explicitly, so larger steps amplify oscillations of frequency `ω/ε`.
pub fn stable_step_estimate<S: Real>(model: &ModelSpec<S>, epsilon: S, x: &[S]) -> Option<S> {
    let stiff = model.energy.hessian_e(&model.shape_map, S::zero(), x).symmetric_part().symmetric_eigen().max();
    let soft = model.mass.symmetric_part().symmetric_eigen().min();
    (stiff > S::zero() && soft > S::zero()).then(|| S::lit(2.0) * epsilon * (soft / stiff).sqrt())
}

/// Discrete energy balance at each grid time:
/// `kinetic + E + Σ h R + ε Σ h⟨Vv, v⟩ - kinetic₀ - E₀ - ∫ ∂ₜE`,
/// with `∫ ∂ₜE` taken along the piecewise-linear path.
pub fn energy_balance_residual<S: Real>(traj: &Trajectory<S>, model: &ModelSpec<S>, epsilon: S) -> Vec<S> {
    let mut out = Vec::with_capacity(traj.len());
    let start = traj.kinetic[0] + traj.energies[0];
    let mut spent = S::zero();
    let mut work = S::zero();
    out.push(S::zero());
    for k in 1..traj.len() {
        spent += traj.step_dissipation[k] + epsilon * traj.step_viscous[k];
        work += model.energy.dt_integral(&model.shape_map, traj.times[k - 1], traj.times[k], &traj.states[k - 1], &traj.states[k]);
        out.push(traj.kinetic[k] + traj.energies[k] + spent - start - work);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct AprioriReport<S> {
    pub max_abs_position: S,
    pub total_dissipation: S,
    /// `max_t ε|v|_M`
    pub max_scaled_velocity: S,
    pub all_finite: bool,
    /// `|x₀| ≤ Λ` and `ε|x₁|_M ≤ Λ`.
    pub initial_data_within_lambda: bool,
}

/// The three uniform bounds on position, dissipation and scaled velocity.
pub fn apriori_bounds_check<S: Real>(traj: &Trajectory<S>, model: &ModelSpec<S>, epsilon: S, lambda: S) -> AprioriReport<S> {
    let mass_norm = |v: &[S]| model.mass.quad_form(v).max(S::zero()).sqrt();
    let max_abs_position = traj.states.iter().map(|x| norm(x)).fold(S::zero(), S::max);
    let max_scaled_velocity = traj.velocities.iter().map(|v| epsilon * mass_norm(v)).fold(S::zero(), S::max);
    let total_dissipation = traj.total_dissipation();
    let all_finite = max_abs_position.is_finite() && max_scaled_velocity.is_finite() && total_dissipation.is_finite();
    let initial_data_within_lambda =
        norm(&traj.states[0]) <= lambda && epsilon * mass_norm(&traj.velocities[0]) <= lambda;
    AprioriReport { max_abs_position, total_dissipation, max_scaled_velocity, all_finite, initial_data_within_lambda }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::DissipationModel;
    use crate::energy::EnergyModel;
    use crate::linalg::Matrix;
    use crate::timefn::PiecewiseLinear;

    fn canonical(horizon: f64) -> ModelSpec<f64> {
        ModelSpec {
            name: None,
            dimension: 1,
            mass: Matrix::identity(1),
            viscosity: Matrix::zeros(1, 1),
            shape_map: Matrix::identity(1),
            energy: EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::affine(1.0, 1.0, horizon.max(1.0))]),
            dissipation: DissipationModel::symmetric_constant(1, 1.0),
            horizon,
        }
    }

    #[test]
    fn rest_state_persists() {
        let mut m = canonical(1.0);
        m.energy = EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::constant(0.0)]);
        let cfg = DynamicConfig::new(0.1, 1e-2, vec![0.0], vec![0.0]);
        let v = step_dynamic(&m, &cfg, 0.01, 0.01, &[0.0], &[0.0]).unwrap();
        assert_eq!(v, vec![0.0]);
        let tr = simulate_dynamic(&m, &cfg).unwrap();
        assert!(tr.states.iter().all(|x| x[0] == 0.0));
        assert_eq!(tr.total_dissipation(), 0.0);
        assert!(tr.balance_residual.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn friction_lock_sticks() {
        let mut m = canonical(1.0);
        m.energy = EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::constant(0.6)]);
        let cfg = DynamicConfig::new(0.1, 1e-3, vec![0.0], vec![0.0]);
        // |DE| = 0.6 < μ = 1
        let v = step_dynamic(&m, &cfg, 1e-3, 1e-3, &[0.0], &[0.0]).unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn canonical_closed_form() {
        let m = canonical(1.0);
        let eps = 0.1;
        let tr = simulate_dynamic(&m, &DynamicConfig::new(eps, 1e-3, vec![0.0], vec![2.0])).unwrap();
        let err = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(&t, x)| (x[0] - (t + eps * (t / eps).sin())).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "sup error {err}");
        let ap = apriori_bounds_check(&tr, &m, eps, 1.0);
        assert!(ap.all_finite && ap.initial_data_within_lambda);
        // the first step overshoots by O(h²/ε²)
        assert!(ap.max_scaled_velocity <= 2.0 * eps * (1.0 + 1e-3), "{}", ap.max_scaled_velocity);
    }

    #[test]
    fn zero_horizon_keeps_initial_values() {
        let m = canonical(0.0);
        let tr = simulate_dynamic(&m, &DynamicConfig::new(0.1, 1e-3, vec![0.0], vec![2.0])).unwrap();
        assert_eq!(tr.len(), 1);
        let ap = apriori_bounds_check(&tr, &m, 0.1, 1.0);
        assert_eq!(ap.max_abs_position, 0.0);
        assert_eq!(ap.total_dissipation, 0.0);
        assert!((ap.max_scaled_velocity - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_velocity_outside_cone() {
        let mut m = canonical(1.0);
        m.dissipation = DissipationModel::new(
            crate::cone::ConeSpec::polyhedral(vec![vec![1.0]]).unwrap(),
            m.dissipation.structure.clone(),
        )
        .unwrap();
        let r = simulate_dynamic(&m, &DynamicConfig::new(0.1, 1e-3, vec![0.0], vec![-1.0]));
        assert!(matches!(r.unwrap_err().error, Error::Validation(_)));
    }
}
