//! Matched dynamic and quasistatic runs over a ladder of `ε` values.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissipation::SampledPath;
use crate::dynamic::{simulate_dynamic, DynamicConfig};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::model::ModelSpec;
use crate::quasistatic::{initial_admissibility, simulate_quasistatic, QuasistaticConfig};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

/// Initial velocity of the dynamic runs as a function of `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub enum InitialVelocity<S> {
    /// Same velocity for every `ε`, so `ε x₁ → 0`.
    Fixed(Vec<S>),
    /// `x₁ = w / ε`: the kinetic energy does not vanish in the limit.
    InverseEpsilon(Vec<S>),
}

impl<S: Real> InitialVelocity<S> {
    pub fn at(&self, eps: S) -> Vec<S> {
        match self {
            Self::Fixed(v) => v.clone(),
            Self::InverseEpsilon(w) => w.iter().map(|&c| c / eps).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct SweepConfig<S> {
    /// Strictly decreasing.
    pub eps_list: Vec<S>,
    /// Cap of the dynamic step; each run uses `min(h_max, ε/50)`.
    pub h_max: S,
    /// Step of the quasistatic reference, `1e-4·T` when absent.
    #[serde(default)]
    pub quasi_step: Option<S>,
    pub initial_position: Vec<S>,
    pub initial_velocity: InitialVelocity<S>,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_tol")]
    pub tol: S,
}

fn default_tol<S: Real>() -> S {
    S::default_tol()
}

impl<S: Real> SweepConfig<S> {
    pub fn new(eps_list: Vec<S>, h_max: S, initial_position: Vec<S>, initial_velocity: InitialVelocity<S>) -> Self {
        Self { eps_list, h_max, quasi_step: None, initial_position, initial_velocity, workers: 0, tol: S::default_tol() }
    }

    pub fn step_for(&self, eps: S) -> S {
        DynamicConfig::step_rule(eps, self.h_max)
    }
}

/// `|∫ₛᵀ R(τ, ẋ^ε) dτ - V_R(x; s, T)|` together with both terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct DissipationGap<S> {
    pub s: S,
    pub dynamic: S,
    pub quasistatic: S,
    pub gap: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct Diagnostics<S> {
    /// `sup_t |x^ε(t) - x(t)|`
    pub sup_distance: S,
    /// Dissipation mismatch on `[s, T]` for `s ∈ {0, T/4, T/2}`.
    pub dissipation_gaps: Vec<DissipationGap<S>>,
    /// `sup_t ε |ẋ^ε(t)|_M`
    pub max_scaled_velocity: S,
    /// `ε ∫ ⟨V ẋ^ε, ẋ^ε⟩ dτ`
    pub viscous_dissipation: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct ConvergenceRow<S> {
    pub epsilon: S,
    pub step: S,
    pub steps: usize,
    pub diagnostics: Option<Diagnostics<S>>,
    pub failed: Option<String>,
    pub wall_clock_ms: f64,
}

/// Least-squares slopes of `log(diagnostic)` against `log ε`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSlopes {
    pub sup_distance: Option<f64>,
    pub dissipation_gap: Option<f64>,
    pub max_scaled_velocity: Option<f64>,
    pub viscous_dissipation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct ConvergenceReport<S> {
    pub model: Option<String>,
    pub horizon: S,
    pub quasi_step: S,
    /// Initial data do not satisfy `x₀` stable and `ε x₁ → 0`.
    pub ill_prepared: bool,
    /// Ordered by decreasing `ε`.
    pub rows: Vec<ConvergenceRow<S>>,
    pub slopes: EmpiricalSlopes,
}

/// One quasistatic reference run plus one dynamic run per `ε`. A failing
/// dynamic run marks its row instead of stopping the sweep.
pub fn epsilon_sweep<S: Real>(model: &ModelSpec<S>, config: &SweepConfig<S>) -> Result<ConvergenceReport<S>> {
    let eps = &config.eps_list;
    if eps.is_empty() {
        return Err(Error::Domain("empty ε list".into()));
    }
    if eps.iter().any(|&e| !(e > S::zero()) || !e.is_finite()) {
        return Err(Error::Domain("every ε must be positive and finite".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("ε list must be strictly decreasing".into()));
    }
    if !(config.h_max > S::zero()) {
        return Err(Error::Domain(format!("h_max must be positive, got {}", config.h_max)));
    }
    let horizon = model.horizon;
    let quasi_step = config.quasi_step.unwrap_or(S::lit(1e-4) * horizon.max(S::epsilon()));
    let mut qcfg = QuasistaticConfig::new(quasi_step, config.initial_position.clone());
    qcfg.tol = config.tol;
    let reference = simulate_quasistatic(model, &qcfg)?;

    let unstable = initial_admissibility(model, &config.initial_position).map_or(true, |d| d > S::lit(1e-8));
    let ill_prepared = unstable || matches!(config.initial_velocity, InitialVelocity::InverseEpsilon(ref w) if norm(w) > S::zero());

    let run = |&e: &S| sweep_row(model, config, &reference, e);
    let rows: Vec<ConvergenceRow<S>> = if config.workers == 1 {
        eps.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Numerical { message: format!("thread pool: {e}"), residual: 0.0 })?;
        pool.install(|| eps.par_iter().map(run).collect())
    };
    let slopes = fit_slopes(&rows);
    Ok(ConvergenceReport { model: model.name.clone(), horizon, quasi_step, ill_prepared, rows, slopes })
}

fn sweep_row<S: Real>(model: &ModelSpec<S>, config: &SweepConfig<S>, reference: &Trajectory<S>, eps: S) -> ConvergenceRow<S> {
    let started = Instant::now();
    let step = config.step_for(eps);
    let mut dcfg = DynamicConfig::new(eps, step, config.initial_position.clone(), config.initial_velocity.at(eps));
    dcfg.tol = config.tol;
    let (diagnostics, failed, steps) = match simulate_dynamic(model, &dcfg) {
        Ok(traj) => (Some(diagnostics(model, eps, &traj, reference)), None, traj.len() - 1),
        Err(f) => {
            log::warn!("ε = {eps}: {f}");
            let done = f.partial.len().saturating_sub(1);
            (None, Some(f.to_string()), done)
        }
    };
    ConvergenceRow { epsilon: eps, step, steps, diagnostics, failed, wall_clock_ms: started.elapsed().as_secs_f64() * 1e3 }
}

fn diagnostics<S: Real>(model: &ModelSpec<S>, eps: S, dynamic: &Trajectory<S>, reference: &Trajectory<S>) -> Diagnostics<S> {
    let path = reference.linear_path();
    let sup_distance = dynamic
        .times
        .iter()
        .zip(&dynamic.states)
        .map(|(&t, x)| dist(x, &path.state_at(t)))
        .fold(S::zero(), S::max);
    let horizon = model.horizon;
    let dissipation_gaps = [S::zero(), horizon / S::lit(4.0), horizon / S::lit(2.0)]
        .into_iter()
        .map(|s| {
            let dyn_part = dissipation_after(dynamic, s);
            let quasi_part = jumps_after(reference, s);
            DissipationGap { s, dynamic: dyn_part, quasistatic: quasi_part, gap: (dyn_part - quasi_part).abs() }
        })
        .collect();
    let max_scaled_velocity = dynamic
        .velocities
        .iter()
        .map(|v| eps * model.mass.quad_form(v).max(S::zero()).sqrt())
        .fold(S::zero(), S::max);
    let viscous_dissipation = eps * dynamic.step_viscous.iter().copied().sum::<S>();
    Diagnostics { sup_distance, dissipation_gaps, max_scaled_velocity, viscous_dissipation }
}

/// `∫ₛᵀ R` for a run whose velocity is constant on each step, splitting the
/// step that contains `s`.
fn dissipation_after<S: Real>(traj: &Trajectory<S>, s: S) -> S {
    let mut acc = S::zero();
    for k in 1..traj.len() {
        let (a, b) = (traj.times[k - 1], traj.times[k]);
        if b <= s {
            continue;
        }
        let share = if a >= s { S::one() } else { (b - s) / (b - a) };
        acc += share * traj.step_dissipation[k];
    }
    acc
}

/// Dissipation of the increments taken after `s`.
fn jumps_after<S: Real>(traj: &Trajectory<S>, s: S) -> S {
    (1..traj.len()).filter(|&k| traj.times[k] > s).map(|k| traj.step_dissipation[k]).sum()
}

fn fit_slopes<S: Real>(rows: &[ConvergenceRow<S>]) -> EmpiricalSlopes {
    let ok: Vec<(f64, &Diagnostics<S>)> = rows.iter().filter_map(|r| r.diagnostics.as_ref().map(|d| (r.epsilon.as_f64(), d))).collect();
    let fit = |f: &dyn Fn(&Diagnostics<S>) -> S| {
        let pts: Vec<(f64, f64)> =
            ok.iter().map(|(e, d)| (*e, f(d).as_f64())).filter(|&(_, y)| y > 0.0 && y.is_finite()).map(|(e, y)| (e.ln(), y.ln())).collect();
        log_log_slope(&pts)
    };
    EmpiricalSlopes {
        sup_distance: fit(&|d| d.sup_distance),
        dissipation_gap: fit(&|d| d.dissipation_gaps[0].gap),
        max_scaled_velocity: fit(&|d| d.max_scaled_velocity),
        viscous_dissipation: fit(&|d| d.viscous_dissipation),
    }
}

fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl<S: Real> ConvergenceReport<S> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "epsilon,step,steps,sup_distance,gap_0,gap_quarter,gap_half,max_scaled_velocity,viscous_dissipation,wall_clock_ms,failed\n",
        );
        for r in &self.rows {
            let _ = write!(out, "{},{},{},", r.epsilon, r.step, r.steps);
            match &r.diagnostics {
                Some(d) => {
                    let _ = write!(out, "{}", d.sup_distance);
                    for g in &d.dissipation_gaps {
                        let _ = write!(out, ",{}", g.gap);
                    }
                    let _ = write!(out, ",{},{}", d.max_scaled_velocity, d.viscous_dissipation);
                }
                None => out.push_str(",,,,,"),
            }
            let reason = r.failed.as_deref().unwrap_or("").replace([',', '\n'], ";");
            let _ = writeln!(out, ",{:.3},{reason}", r.wall_clock_ms);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Structural(format!("serializing report: {e}")))
    }

    /// Log-log plot of the diagnostics read from `csv_path`.
    pub fn gnuplot_script(&self, csv_path: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set logscale xy");
        let _ = writeln!(s, "set key left top");
        let _ = writeln!(s, "set xlabel 'epsilon'");
        let _ = writeln!(s, "set ylabel 'diagnostic'");
        let _ = writeln!(s, "plot '{csv_path}' skip 1 using 1:4 with linespoints title 'sup |x_eps - x|', \\");
        let _ = writeln!(s, "     '' skip 1 using 1:5 with linespoints title 'dissipation gap [0,T]', \\");
        let _ = writeln!(s, "     '' skip 1 using 1:8 with linespoints title 'sup eps|v|_M', \\");
        let _ = writeln!(s, "     '' skip 1 using 1:9 with linespoints title 'eps int |v|_V^2'");
        s
    }
}

/// `Σ (t_k - t_{k-1}) |v^ε_k - v_k|`, the L¹ distance of the velocities of
/// two runs on the same grid.
pub fn w11_gap<S: Real>(traj_eps: &Trajectory<S>, traj_quasi: &Trajectory<S>) -> Result<S> {
    if traj_eps.len() != traj_quasi.len() || traj_eps.dim() != traj_quasi.dim() {
        return Err(Error::Structural(format!(
            "grids differ: {} vs {} points",
            traj_eps.len(),
            traj_quasi.len()
        )));
    }
    let tol = S::lit(1e-9);
    for (&a, &b) in traj_eps.times.iter().zip(&traj_quasi.times) {
        if (a - b).abs() > tol * (S::one() + a.abs()) {
            return Err(Error::Structural(format!("grids differ at t = {a} vs {b}")));
        }
    }
    let mut gap = S::zero();
    for k in 1..traj_eps.len() {
        let h = traj_eps.times[k] - traj_eps.times[k - 1];
        gap += h * dist(&traj_eps.velocities[k], &traj_quasi.velocities[k]);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::canonical_model;

    fn ladder() -> SweepConfig<f64> {
        SweepConfig::new(vec![0.2, 0.1, 0.05], 0.01, vec![0.0], InitialVelocity::Fixed(vec![2.0]))
    }

    #[test]
    fn rejects_bad_ladders() {
        let m = canonical_model(1.0);
        for eps in [vec![], vec![0.1, 0.2], vec![0.1, 0.1], vec![0.1, -0.1]] {
            let cfg = SweepConfig { eps_list: eps, ..ladder() };
            assert!(matches!(epsilon_sweep(&m, &cfg), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn canonical_rows_scale_with_epsilon() {
        let m = canonical_model(1.0);
        let mut cfg = ladder();
        cfg.quasi_step = Some(1e-3);
        let rep = epsilon_sweep(&m, &cfg).unwrap();
        assert!(!rep.ill_prepared);
        for r in &rep.rows {
            let d = r.diagnostics.as_ref().unwrap();
            let e = r.epsilon;
            assert!(d.sup_distance > e / 1.5 && d.sup_distance < 1.5 * e, "{e}: {}", d.sup_distance);
            assert!(d.max_scaled_velocity > 2.0 * e / 1.5 && d.max_scaled_velocity < 3.0 * e);
            assert_eq!(d.viscous_dissipation, 0.0);
        }
        let slope = rep.slopes.sup_distance.unwrap();
        assert!((slope - 1.0).abs() < 0.2, "{slope}");
        assert!(rep.to_csv().lines().count() == 4);
    }

    #[test]
    fn inverse_epsilon_is_ill_prepared() {
        let m = canonical_model(1.0);
        let cfg = SweepConfig {
            eps_list: vec![0.2],
            quasi_step: Some(1e-2),
            initial_velocity: InitialVelocity::InverseEpsilon(vec![0.1]),
            ..ladder()
        };
        assert!(epsilon_sweep(&m, &cfg).unwrap().ill_prepared);
    }

    #[test]
    fn failing_run_marks_row() {
        // velocity outside the cone: dynamic run refuses, reference still runs
        let m = canonical_model(1.0);
        let cfg = SweepConfig { eps_list: vec![0.2], quasi_step: Some(1e-2), initial_velocity: InitialVelocity::Fixed(vec![f64::NAN]), ..ladder() };
        let rep = epsilon_sweep(&m, &cfg).unwrap();
        assert!(rep.rows[0].failed.is_some());
        assert!(rep.rows[0].diagnostics.is_none());
    }

    #[test]
    fn w11_identical_and_mismatched() {
        let m = canonical_model(1.0);
        let a = simulate_quasistatic(&m, &QuasistaticConfig::new(0.01, vec![0.0])).unwrap();
        assert_eq!(w11_gap(&a, &a).unwrap(), 0.0);
        let b = simulate_quasistatic(&m, &QuasistaticConfig::new(0.02, vec![0.0])).unwrap();
        assert!(matches!(w11_gap(&a, &b), Err(Error::Structural(_))));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.1f64, 0.01, 0.001].iter().map(|e| (e.ln(), (3.0 * e * e).ln())).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
    }
}
