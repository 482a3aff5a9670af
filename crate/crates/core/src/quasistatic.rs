//! Incremental minimization for energetic solutions, the catching-up scheme
//! for the sweeping-process form, and a-posteriori verifiers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dissipation::{r_variation, FrictionStructure, VariationOptions};
use crate::energy::EnergyVariant;
use crate::error::{Error, Result};
use crate::kernel::{minimize_composite, minimize_smooth_composite, CompositeProblem, QuadraticPart, SmoothPart, SolverOptions};
use crate::linalg::{norm, sub, FiberMap, Matrix};
use crate::model::{stability_defect, validate_model, ModelSpec};
use crate::scalar::Real;
use crate::trajectory::{time_grid, RunFailure, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct QuasistaticConfig<S> {
    pub step: S,
    pub initial_position: Vec<S>,
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

impl<S: Real> QuasistaticConfig<S> {
    pub fn new(step: S, initial_position: Vec<S>) -> Self {
        Self { step, initial_position, tol: default_tol(), max_iter: default_max_iter() }
    }

    pub fn solver_options(&self) -> SolverOptions<S> {
        SolverOptions { tol: self.tol, max_iter: self.max_iter }
    }
}

/// `x ↦ E(t, x_prev + Δ)` as a function of the increment.
struct Increment<'a, S> {
    model: &'a ModelSpec<S>,
    t: S,
    x_prev: &'a [S],
}

impl<S: Real> Increment<'_, S> {
    fn shifted(&self, d: &[S]) -> Vec<S> {
        self.x_prev.iter().zip(d).map(|(&a, &b)| a + b).collect()
    }
}

impl<S: Real> SmoothPart<S> for Increment<'_, S> {
    fn value(&self, d: &[S]) -> S {
        self.model.eval_e(self.t, &self.shifted(d))
    }

    fn gradient(&self, d: &[S]) -> Vec<S> {
        self.model.grad_e(self.t, &self.shifted(d))
    }
}

/// `argmin_x E(t_k, x) + R(t_prev, x - x_prev)`.
///
/// When `π_Z` has a kernel the shape-optimal set is a fiber; the increment
/// of least dissipation on it is selected, ties going to the shortest one.
pub fn step_energetic<S: Real>(
    model: &ModelSpec<S>,
    t_prev: S,
    t_k: S,
    x_prev: &[S],
    opts: &SolverOptions<S>,
) -> Result<Vec<S>> {
    let n = model.dimension;
    let zero = vec![S::zero(); n];
    let delta = match &model.energy.variant {
        EnergyVariant::Quadratic { .. } | EnergyVariant::AffineForced { .. } => {
            let q = model.energy.hessian_e(&model.shape_map, t_k, x_prev);
            let b = model.grad_e(t_k, x_prev);
            let problem = CompositeProblem { smooth: QuadraticPart { q, b }, dissipation: &model.dissipation, time: t_prev, scale: S::one() };
            minimize_composite(&problem, &zero, opts)?.v
        }
        EnergyVariant::Duffing { .. } => {
            let inc = Increment { model, t: t_k, x_prev };
            let l0 = model.energy.hessian_e(&model.shape_map, t_k, x_prev).symmetric_eigen().max();
            minimize_smooth_composite(&inc, &model.dissipation, t_prev, S::one(), &zero, l0, opts)?.v
        }
    };
    let fiber = FiberMap::new(&model.shape_map)?;
    let delta = if fiber.kernel_dim() > 0 {
        let dz = model.shape_map.mul_vec(&delta);
        match model.dissipation.restricted_argmin(t_prev, &dz, &fiber)? {
            Some((d, _)) => d,
            None => delta,
        }
    } else {
        delta
    };
    Ok(x_prev.iter().zip(&delta).map(|(&a, &b)| a + b).collect())
}

fn preflight<S: Real>(model: &ModelSpec<S>, x0: &[S], step: S) -> Result<Vec<S>> {
    let report = validate_model(model)?;
    if !report.passed {
        let labels: Vec<_> = report.violations.iter().map(|v| format!("{}: {}", v.label, v.detail)).collect();
        return Err(Error::Validation(labels.join("; ")));
    }
    if x0.len() != model.dimension {
        return Err(Error::Structural("initial position has the wrong dimension".into()));
    }
    if x0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("initial position must be finite".into()));
    }
    time_grid(model.horizon, step, &model.breakpoints())
}

/// `|v*|` for the minimizer `v*` of `½|v|² + ⟨DₓE(0, x₀), v⟩ + R(0, v)`;
/// zero exactly when `-DₓE(0, x₀) ∈ ∂ᵥR(0, 0)`.
pub fn initial_admissibility<S: Real>(model: &ModelSpec<S>, x0: &[S]) -> Result<S> {
    stability_defect(model, S::zero(), x0)
}

/// Energetic solution by incremental minimization on `[0, T]`.
pub fn simulate_quasistatic<S: Real>(model: &ModelSpec<S>, config: &QuasistaticConfig<S>) -> Result<Trajectory<S>, RunFailure<S>> {
    let x0 = config.initial_position.clone();
    let n = x0.len();
    let mut traj = Trajectory::start(S::zero(), x0.clone(), vec![S::zero(); n], model.eval_e(S::zero(), &x0), S::zero());
    let grid = match preflight(model, &x0, config.step) {
        Ok(g) => g,
        Err(error) => return Err(RunFailure { partial: traj, error }),
    };
    if let Ok(defect) = initial_admissibility(model, &x0) {
        if defect > S::lit(1e-8) {
            log::warn!("initial position is not stable (defect {defect}); expect an initial jump");
        }
    }
    let opts = config.solver_options();
    let mut x = x0;
    for w in grid.windows(2) {
        let (t_prev, t_k) = (w[0], w[1]);
        let x_new = match step_energetic(model, t_prev, t_k, &x, &opts) {
            Ok(x) => x,
            Err(error) => return Err(RunFailure { partial: traj, error }),
        };
        if let Err(error) = record_step(&mut traj, model, t_prev, t_k, &x, x_new.clone()) {
            return Err(RunFailure { partial: traj, error });
        }
        x = x_new;
    }
    traj.balance_residual = discrete_web_residual(&traj, model);
    Ok(traj)
}

fn record_step<S: Real>(traj: &mut Trajectory<S>, model: &ModelSpec<S>, t_prev: S, t_k: S, x_prev: &[S], x_new: Vec<S>) -> Result<()> {
    let dx = sub(&x_new, x_prev);
    let h = t_k - t_prev;
    let v: Vec<S> = dx.iter().map(|&d| d / h).collect();
    let diss = model.eval_r(t_prev, &dx);
    let e = model.eval_e(t_k, &x_new);
    if !e.is_finite() || !diss.is_finite() || x_new.iter().any(|c| !c.is_finite()) {
        return Err(Error::numerical(format!("non-finite state at t = {t_k}"), f64::NAN));
    }
    traj.push(t_k, x_new, v, diss, S::zero(), e, S::zero());
    Ok(())
}

/// Weak energy balance along the right-continuous step interpolant, with the
/// dissipation of each jump charged at the left grid time.
fn discrete_web_residual<S: Real>(traj: &Trajectory<S>, model: &ModelSpec<S>) -> Vec<S> {
    let mut out = vec![S::zero()];
    let mut acc = S::zero();
    for k in 1..traj.len() {
        let (a, b) = (traj.times[k - 1], traj.times[k]);
        let xp = &traj.states[k - 1];
        let work = model.energy.dt_integral(&model.shape_map, a, b, xp, xp);
        acc += traj.step_dissipation[k] - work;
        out.push(traj.energies[k] - traj.energies[0] + acc);
    }
    out
}

/// Moreau's catching-up scheme `y_k = P_{C(t_k)}(y_{k-1})` with
/// `C(t) = C₀(t)/c - ℓ(t)`, `C₀(t) = ∂ᵥR(t, 0)`, mapped back by `x = -y`.
///
/// Needs `E(t, x) = c/2 |x - ℓ(t)|²` with `π_Z = id` and a box-shaped `C₀`.
pub fn catching_up<S: Real>(model: &ModelSpec<S>, config: &QuasistaticConfig<S>) -> Result<Trajectory<S>, RunFailure<S>> {
    let x0 = config.initial_position.clone();
    let n = x0.len();
    let mut traj = Trajectory::start(S::zero(), x0.clone(), vec![S::zero(); n], model.eval_e(S::zero(), &x0), S::zero());
    let setup = || -> Result<(Vec<S>, S)> {
        let grid = preflight(model, &x0, config.step)?;
        let c = model.energy.isotropic_quadratic().ok_or_else(|| {
            Error::Structural("catching-up needs an energy of the form c/2 |x - ℓ(t)|²".into())
        })?;
        if model.shape_map != Matrix::identity(n) {
            return Err(Error::Structural("catching-up needs the identity shape map".into()));
        }
        model.dissipation.subdiff_at_zero(S::zero()).map_err(|e| Error::Structural(e.to_string()))?;
        Ok((grid, c))
    };
    let (grid, c) = match setup() {
        Ok(v) => v,
        Err(error) => return Err(RunFailure { partial: traj, error }),
    };
    let mut y: Vec<S> = x0.iter().map(|&v| -v).collect();
    for w in grid.windows(2) {
        let (t_prev, t_k) = (w[0], w[1]);
        let boxes = match model.dissipation.subdiff_at_zero(t_k) {
            Ok(b) => b,
            Err(error) => return Err(RunFailure { partial: traj, error }),
        };
        let ell = model.energy.loading_at(t_k);
        y = y
            .iter()
            .zip(&boxes)
            .zip(&ell)
            .map(|((&yi, iv), &li)| yi.max(iv.lo / c - li).min(iv.hi / c - li))
            .collect();
        let x_prev = traj.final_state().to_vec();
        if let Err(error) = record_step(&mut traj, model, t_prev, t_k, &x_prev, y.iter().map(|&v| -v).collect()) {
            return Err(RunFailure { partial: traj, error });
        }
    }
    traj.balance_residual = discrete_web_residual(&traj, model);
    Ok(traj)
}

/// Competitor sampling for the stability verifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct CompetitorGrid<S> {
    pub random_directions: usize,
    pub coordinate_directions: bool,
    pub radii: Vec<S>,
    pub seed: u64,
    /// Check every `time_stride`-th grid time (the last one always).
    pub time_stride: usize,
}

impl<S: Real> Default for CompetitorGrid<S> {
    fn default() -> Self {
        Self {
            random_directions: 16,
            coordinate_directions: true,
            radii: [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0].iter().map(|&r| S::lit(r)).collect(),
            seed: 0x5eed,
            time_stride: 1,
        }
    }
}

impl<S: Real> CompetitorGrid<S> {
    /// Unit directions: `±eᵢ` followed by seeded random directions.
    pub fn directions(&self, n: usize) -> Vec<Vec<S>> {
        let mut out = Vec::new();
        if self.coordinate_directions {
            for i in 0..n {
                for s in [S::one(), -S::one()] {
                    let mut e = vec![S::zero(); n];
                    e[i] = s;
                    out.push(e);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        while out.len() < 2 * n * usize::from(self.coordinate_directions) + self.random_directions {
            let d: Vec<S> = (0..n).map(|_| S::lit(rng.gen_range(-1.0..1.0))).collect();
            let nd = norm(&d);
            if nd > S::lit(1e-3) {
                out.push(d.iter().map(|&x| x / nd).collect());
            }
        }
        out
    }

    fn times(&self, len: usize) -> Vec<usize> {
        let stride = self.time_stride.max(1);
        let mut ks: Vec<usize> = (0..len).step_by(stride).collect();
        if ks.last() != Some(&(len - 1)) {
            ks.push(len - 1);
        }
        ks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct StabilityReport<S> {
    pub max_violation: S,
    pub worst_time: S,
    pub worst_competitor: Vec<S>,
}

fn scan_competitors<S: Real>(
    traj: &Trajectory<S>,
    grid: &CompetitorGrid<S>,
    mut violation: impl FnMut(S, &[S], &[S]) -> Result<S>,
) -> Result<StabilityReport<S>> {
    let n = traj.dim();
    let dirs = grid.directions(n);
    let mut report = StabilityReport { max_violation: S::neg_infinity(), worst_time: S::zero(), worst_competitor: Vec::new() };
    for k in grid.times(traj.len()) {
        let (t, x) = (traj.times[k], &traj.states[k]);
        let mut consider = |v: Vec<S>, val: S| {
            if val > report.max_violation {
                report.max_violation = val;
                report.worst_time = t;
                report.worst_competitor = v;
            }
        };
        consider(x.clone(), violation(t, x, x)?);
        for d in &dirs {
            for &r in &grid.radii {
                let v: Vec<S> = x.iter().zip(d).map(|(&a, &b)| a + r * b).collect();
                let val = violation(t, x, &v)?;
                consider(v, val);
            }
        }
    }
    Ok(report)
}

/// `max E(t, x(t)) - E(t, v) - R(t, v - x(t))` over sampled competitors.
pub fn verify_global_stability<S: Real>(traj: &Trajectory<S>, model: &ModelSpec<S>, grid: &CompetitorGrid<S>) -> StabilityReport<S> {
    scan_competitors(traj, grid, |t, x, v| Ok(model.eval_e(t, x) - model.eval_e(t, v) - model.eval_r(t, &sub(v, x))))
        .expect("plain evaluation cannot fail")
}

/// `max E(t, x) + μ/2 |π(v - x)|² - E(t, v) - R_sh(t, π(v - x))` over sampled
/// competitors.
pub fn verify_improved_stability<S: Real>(
    traj: &Trajectory<S>,
    model: &ModelSpec<S>,
    grid: &CompetitorGrid<S>,
) -> Result<StabilityReport<S>> {
    let fiber = FiberMap::new(&model.shape_map)?;
    let mu = model.energy.convexity_mu;
    scan_competitors(traj, grid, |t, x, v| {
        let dz = model.shape_map.mul_vec(&sub(v, x));
        let r_sh = model.dissipation.restricted_argmin(t, &dz, &fiber)?.map_or(S::infinity(), |(_, r)| r);
        let nz = norm(&dz);
        Ok(model.eval_e(t, x) + mu * S::lit(0.5) * nz * nz - model.eval_e(t, v) - r_sh)
    })
}

/// Weak energy balance residual `E(t, x(t)) + V_R(x; 0, t) - E(0, x₀) - ∫₀ᵗ ∂ₜE`
/// at each grid time, along the right-continuous step interpolant.
pub fn verify_web<S: Real>(traj: &Trajectory<S>, model: &ModelSpec<S>) -> Vec<S> {
    let path = traj.step_path();
    let opts = VariationOptions::default();
    let mut out = vec![S::zero()];
    let (mut var, mut work) = (S::zero(), S::zero());
    for k in 1..traj.len() {
        let (a, b) = (traj.times[k - 1], traj.times[k]);
        var += r_variation(&path, &model.dissipation, a, b, &opts).value;
        let xp = &traj.states[k - 1];
        work += model.energy.dt_integral(&model.shape_map, a, b, xp, xp);
        out.push(model.eval_e(b, &traj.states[k]) + var - traj.energies[0] - work);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    NotVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct UniquenessReport<S> {
    /// Autonomous `R`, `E_sh` of class `C³`.
    pub u1: Verdict,
    /// Autonomous `R`, `E_sh = V(z) - ⟨g(t), z⟩` with convex stable sets.
    pub u2: Verdict,
    /// `K = X` and a quadratic energy.
    pub u3: Verdict,
    /// Unique least-dissipation point on every fiber.
    pub star: Verdict,
    /// A subset `J` and time window on which `Σ_J μ⁺ = Σ_{Jᶜ} μ⁻`.
    pub failing_subset: Option<Vec<usize>>,
    pub failing_window: Option<(S, S)>,
    pub unique: bool,
    pub notes: Vec<String>,
}

const MAX_SUBSET_BLOCKS: usize = 20;

/// Structural sufficient conditions for uniqueness of the quasistatic solution.
pub fn check_uniqueness_conditions<S: Real>(model: &ModelSpec<S>) -> Result<UniquenessReport<S>> {
    model.check_dimensions()?;
    let mut notes = Vec::new();
    let autonomous = model.dissipation.is_autonomous();
    let energy = &model.energy;
    let quadratic_form = energy.is_quadratic();
    let u1 = if autonomous && energy.is_time_smooth() { Verdict::Holds } else { Verdict::Fails };
    // V(z) - ⟨g(t), z⟩: quadratic energies always, Duffing only with frozen loadings
    let splits = quadratic_form || energy.time_functions().iter().all(|f| f.is_constant());
    let u2 = if !autonomous || !splits {
        Verdict::Fails
    } else if model.shape_dim() == 1 && quadratic_form {
        Verdict::Holds
    } else {
        notes.push("convexity of the stable sets is not checked outside one-dimensional quadratic models".into());
        Verdict::NotVerified
    };
    let u3 = if model.cone().is_full_space() && quadratic_form { Verdict::Holds } else { Verdict::Fails };

    let fiber = FiberMap::new(&model.shape_map)?;
    let (mut star, mut failing_subset, mut failing_window) = (Verdict::NotVerified, None, None);
    if fiber.kernel_dim() == 0 {
        star = Verdict::Holds;
    } else if let (FrictionStructure::PerCoordinate { mu_plus, mu_minus }, true) =
        (&model.dissipation.structure, model.cone().is_full_space() && is_rigid_translation_kernel(&fiber))
    {
        let n = mu_plus.len();
        if n > MAX_SUBSET_BLOCKS {
            return Err(Error::Domain(format!("subset enumeration refused for {n} > {MAX_SUBSET_BLOCKS} blocks")));
        }
        let mut knots = vec![S::zero()];
        knots.extend(model.dissipation.breakpoints_in(S::zero(), model.horizon));
        knots.push(model.horizon);
        let scale = model.dissipation.alpha_upper().max(S::one());
        let tol = S::epsilon() * S::lit(1e3) * scale;
        star = Verdict::Holds;
        'search: for mask in 0u32..(1u32 << n) {
            let gap = |t: S| -> S {
                (0..n)
                    .map(|i| if mask & (1 << i) != 0 { mu_plus[i].eval(t) } else { -mu_minus[i].eval(t) })
                    .sum()
            };
            for w in knots.windows(2) {
                // the gap is affine on each piece: it vanishes a.e. there iff it does at both ends
                if gap(w[0]).abs() <= tol && gap(w[1]).abs() <= tol {
                    star = Verdict::Fails;
                    failing_subset = Some((0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect());
                    failing_window = Some((w[0], w[1]));
                    break 'search;
                }
            }
        }
    } else {
        notes.push("uniqueness of least-dissipation fiber points is only decided for block friction with K = X".into());
    }
    let unique = [u1, u2, u3].contains(&Verdict::Holds) && star == Verdict::Holds;
    Ok(UniquenessReport { u1, u2, u3, star, failing_subset, failing_window, unique, notes })
}

/// Kernel spanned by `(1, …, 1)`: rigid translations of a chain of blocks.
fn is_rigid_translation_kernel<S: Real>(fiber: &FiberMap<S>) -> bool {
    if fiber.kernel_dim() != 1 {
        return false;
    }
    let n = fiber.kernel.rows();
    let first = fiber.kernel[(0, 0)];
    let tol = S::lit(1e-9);
    (0..n).all(|r| (fiber.kernel[(r, 0)] - first).abs() <= tol) && first.abs() > tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::DissipationModel;
    use crate::energy::EnergyModel;
    use crate::timefn::PiecewiseLinear;

    fn play(p: PiecewiseLinear<f64>, horizon: f64) -> ModelSpec<f64> {
        ModelSpec {
            name: None,
            dimension: 1,
            mass: Matrix::identity(1),
            viscosity: Matrix::zeros(1, 1),
            shape_map: Matrix::identity(1),
            energy: EnergyModel::quadratic(Matrix::identity(1), vec![p]),
            dissipation: DissipationModel::symmetric_constant(1, 0.5),
            horizon,
        }
    }

    #[test]
    fn play_stick_then_slip() {
        let m = play(PiecewiseLinear::affine(0.0, 1.0, 2.0), 2.0);
        let opts = SolverOptions::default();
        assert_eq!(step_energetic(&m, 0.0, 0.1, &[0.0], &opts).unwrap(), vec![0.0]);
        let x = step_energetic(&m, 0.99, 1.0, &[0.0], &opts).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-9);
        // already optimal
        assert_eq!(step_energetic(&m, 0.99, 1.0, &[0.5], &opts).unwrap()[0], 0.5);
    }

    #[test]
    fn catching_up_matches_incremental() {
        let m = play(PiecewiseLinear::affine(0.0, 1.0, 2.0), 2.0);
        let cfg = QuasistaticConfig::new(1e-2, vec![0.0]);
        let a = simulate_quasistatic(&m, &cfg).unwrap();
        let b = catching_up(&m, &cfg).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x[0] - y[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn dead_zone_freezes_output() {
        let p = PiecewiseLinear::new(vec![[0.0, 0.0], [0.5, 0.3], [1.0, -0.3], [1.5, 0.0]]).unwrap();
        let m = play(p, 1.5);
        let tr = catching_up(&m, &QuasistaticConfig::new(1e-2, vec![0.0])).unwrap();
        assert!(tr.states.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn subset_criterion_examples() {
        let crawler = |plus: [f64; 2], minus: [f64; 2]| {
            let c = |v: [f64; 2]| v.iter().map(|&m| PiecewiseLinear::constant(m)).collect::<Vec<_>>();
            ModelSpec {
                name: None,
                dimension: 2,
                mass: Matrix::identity(2),
                viscosity: Matrix::zeros(2, 2),
                shape_map: Matrix::from_rows(vec![vec![-1.0, 1.0]]).unwrap(),
                energy: EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::constant(1.0)]),
                dissipation: DissipationModel::new(
                    crate::cone::ConeSpec::full_space(),
                    FrictionStructure::PerCoordinate { mu_plus: c(plus), mu_minus: c(minus) },
                )
                .unwrap(),
                horizon: 1.0,
            }
        };
        let tie = check_uniqueness_conditions(&crawler([1.0, 1.0], [1.0, 1.0])).unwrap();
        assert_eq!(tie.star, Verdict::Fails);
        assert!(!tie.unique);
        let ok = check_uniqueness_conditions(&crawler([1.0, 2.0], [3.0, 4.0])).unwrap();
        assert_eq!(ok.star, Verdict::Holds);
        assert_eq!(ok.u1, Verdict::Holds);
        assert!(ok.unique);
    }

    #[test]
    fn competitor_at_state_contributes_zero() {
        let m = play(PiecewiseLinear::constant(0.0), 1.0);
        let tr = simulate_quasistatic(&m, &QuasistaticConfig::new(0.5, vec![0.2])).unwrap();
        let grid = CompetitorGrid { random_directions: 0, coordinate_directions: false, radii: vec![], seed: 0, time_stride: 1 };
        let rep = verify_global_stability(&tr, &m, &grid);
        assert_eq!(rep.max_violation, 0.0);
    }
}
