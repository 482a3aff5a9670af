//! Elastic energies `E(t, x) = E_sh(t, π_Z x)` that depend on the state only
//! through its shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, Matrix};
use crate::scalar::Real;
use crate::timefn::PiecewiseLinear;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub enum EnergyVariant<S> {
    /// `½⟨A (z - ℓ(t)), z - ℓ(t)⟩`
    Quadratic { a_sh: Matrix<S>, loading: Vec<PiecewiseLinear<S>> },
    /// `Σ kᵢ/2 (zᵢ - ℓᵢ(t))² + βᵢ/4 (zᵢ - ℓᵢ(t))⁴`, one spring per shape coordinate.
    Duffing { stiffness: Vec<S>, quartic: Vec<S>, loading: Vec<PiecewiseLinear<S>> },
    /// Quadratic core plus the potential `⟨f(t), z⟩` of external forces.
    AffineForced { a_sh: Matrix<S>, loading: Vec<PiecewiseLinear<S>>, force: Vec<PiecewiseLinear<S>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct EnergyModel<S> {
    #[serde(flatten)]
    pub variant: EnergyVariant<S>,
    /// Uniform convexity modulus of `E_sh` in `z`.
    pub convexity_mu: S,
}

impl<S: Real> EnergyModel<S> {
    /// Quadratic energy with `μ` set to the smallest eigenvalue of `A`.
    pub fn quadratic(a_sh: Matrix<S>, loading: Vec<PiecewiseLinear<S>>) -> Self {
        let mu = a_sh.symmetric_eigen().min();
        Self { variant: EnergyVariant::Quadratic { a_sh, loading }, convexity_mu: mu }
    }

    pub fn duffing(stiffness: Vec<S>, quartic: Vec<S>, loading: Vec<PiecewiseLinear<S>>) -> Self {
        let mu = stiffness.iter().copied().fold(S::infinity(), S::min);
        Self { variant: EnergyVariant::Duffing { stiffness, quartic, loading }, convexity_mu: mu }
    }

    pub fn affine_forced(a_sh: Matrix<S>, loading: Vec<PiecewiseLinear<S>>, force: Vec<PiecewiseLinear<S>>) -> Self {
        let mu = a_sh.symmetric_eigen().min();
        Self { variant: EnergyVariant::AffineForced { a_sh, loading, force }, convexity_mu: mu }
    }

    pub fn shape_dim(&self) -> usize {
        match &self.variant {
            EnergyVariant::Quadratic { loading, .. }
            | EnergyVariant::Duffing { loading, .. }
            | EnergyVariant::AffineForced { loading, .. } => loading.len(),
        }
    }

    /// Structural consistency and the convexity invariants of each variant.
    pub fn validate(&self) -> Result<Vec<String>> {
        let zd = self.shape_dim();
        let mut issues = Vec::new();
        if !(self.convexity_mu > S::zero()) {
            issues.push(format!("convexity modulus must be positive (got {})", self.convexity_mu));
        }
        match &self.variant {
            EnergyVariant::Quadratic { a_sh, .. } | EnergyVariant::AffineForced { a_sh, .. } => {
                if a_sh.rows() != zd || a_sh.cols() != zd {
                    return Err(Error::Structural(format!(
                        "A_sh is {}x{} but the loading has {zd} components",
                        a_sh.rows(),
                        a_sh.cols()
                    )));
                }
                if !a_sh.is_symmetric(S::epsilon() * S::lit(64.0) * (S::one() + a_sh.max_abs())) {
                    issues.push("A_sh is not symmetric".into());
                }
                let lmin = a_sh.symmetric_eigen().min();
                if lmin < self.convexity_mu * (S::one() - S::lit(1e-12)) {
                    issues.push(format!("A_sh smallest eigenvalue {lmin} below convexity modulus {}", self.convexity_mu));
                }
                if let EnergyVariant::AffineForced { force, .. } = &self.variant {
                    if force.len() != zd {
                        return Err(Error::Structural("force has wrong number of components".into()));
                    }
                }
            }
            EnergyVariant::Duffing { stiffness, quartic, .. } => {
                if stiffness.len() != zd || quartic.len() != zd {
                    return Err(Error::Structural("Duffing coefficient lists differ from shape dimension".into()));
                }
                for (i, (&k, &b)) in stiffness.iter().zip(quartic).enumerate() {
                    if k < self.convexity_mu {
                        issues.push(format!("link {i}: stiffness {k} below convexity modulus"));
                    }
                    if b < S::zero() {
                        issues.push(format!("link {i}: negative quartic gain {b}"));
                    }
                }
            }
        }
        Ok(issues)
    }

    fn loading(&self) -> &[PiecewiseLinear<S>] {
        match &self.variant {
            EnergyVariant::Quadratic { loading, .. }
            | EnergyVariant::Duffing { loading, .. }
            | EnergyVariant::AffineForced { loading, .. } => loading,
        }
    }

    /// All time functions the energy depends on.
    pub fn time_functions(&self) -> Vec<&PiecewiseLinear<S>> {
        let mut out: Vec<&PiecewiseLinear<S>> = self.loading().iter().collect();
        if let EnergyVariant::AffineForced { force, .. } = &self.variant {
            out.extend(force.iter());
        }
        out
    }

    fn deviation(&self, t: S, z: &[S]) -> Vec<S> {
        z.iter().zip(self.loading()).map(|(&zi, l)| zi - l.eval(t)).collect()
    }

    fn loading_rate(&self, t: S) -> Vec<S> {
        self.loading().iter().map(|l| l.derivative(t)).collect()
    }

    pub fn value_sh(&self, t: S, z: &[S]) -> S {
        let d = self.deviation(t, z);
        let half = S::lit(0.5);
        match &self.variant {
            EnergyVariant::Quadratic { a_sh, .. } => half * a_sh.quad_form(&d),
            EnergyVariant::Duffing { stiffness, quartic, .. } => d
                .iter()
                .zip(stiffness.iter().zip(quartic))
                .map(|(&di, (&k, &b))| half * k * di * di + S::lit(0.25) * b * di.powi(4))
                .sum(),
            EnergyVariant::AffineForced { a_sh, force, .. } => {
                half * a_sh.quad_form(&d) + z.iter().zip(force).map(|(&zi, f)| f.eval(t) * zi).sum::<S>()
            }
        }
    }

    pub fn grad_sh(&self, t: S, z: &[S]) -> Vec<S> {
        let d = self.deviation(t, z);
        match &self.variant {
            EnergyVariant::Quadratic { a_sh, .. } => a_sh.symmetric_part().mul_vec(&d),
            EnergyVariant::Duffing { stiffness, quartic, .. } => d
                .iter()
                .zip(stiffness.iter().zip(quartic))
                .map(|(&di, (&k, &b))| k * di + b * di.powi(3))
                .collect(),
            EnergyVariant::AffineForced { a_sh, force, .. } => {
                let mut g = a_sh.symmetric_part().mul_vec(&d);
                for (gi, f) in g.iter_mut().zip(force) {
                    *gi += f.eval(t);
                }
                g
            }
        }
    }

    /// `∂E_sh/∂t`, using right derivatives of the loading at breakpoints.
    pub fn dt_sh(&self, t: S, z: &[S]) -> S {
        let rate = self.loading_rate(t);
        // ∂ₜ E = -⟨D_z E_core, ℓ̇⟩ (+ ⟨ḟ, z⟩)
        let core_grad = match &self.variant {
            EnergyVariant::AffineForced { a_sh, .. } => a_sh.symmetric_part().mul_vec(&self.deviation(t, z)),
            _ => self.grad_sh(t, z),
        };
        let mut dt = -dot(&core_grad, &rate);
        if let EnergyVariant::AffineForced { force, .. } = &self.variant {
            dt += z.iter().zip(force).map(|(&zi, f)| f.derivative(t) * zi).sum::<S>();
        }
        dt
    }

    /// Hessian in `z`; constant for the quadratic families.
    pub fn hessian_sh(&self, t: S, z: &[S]) -> Matrix<S> {
        match &self.variant {
            EnergyVariant::Quadratic { a_sh, .. } | EnergyVariant::AffineForced { a_sh, .. } => a_sh.symmetric_part(),
            EnergyVariant::Duffing { stiffness, quartic, .. } => {
                let d = self.deviation(t, z);
                let diag: Vec<S> = d
                    .iter()
                    .zip(stiffness.iter().zip(quartic))
                    .map(|(&di, (&k, &b))| k + S::lit(3.0) * b * di * di)
                    .collect();
                Matrix::from_diag(&diag)
            }
        }
    }

    /// True when `E_sh(t, ·)` is a quadratic polynomial.
    pub fn is_quadratic(&self) -> bool {
        match &self.variant {
            EnergyVariant::Duffing { quartic, .. } => quartic.iter().all(|&b| b == S::zero()),
            _ => true,
        }
    }

    /// `(c, ℓ(t))` when `E_sh(t, z) = c/2 |z - ℓ(t)|²`.
    pub fn isotropic_quadratic(&self) -> Option<S> {
        match &self.variant {
            EnergyVariant::Quadratic { a_sh, .. } => {
                let c = a_sh[(0, 0)];
                (a_sh.is_diagonal() && a_sh.diagonal().iter().all(|&d| d == c)).then_some(c)
            }
            EnergyVariant::Duffing { stiffness, quartic, .. } => {
                let c = stiffness[0];
                (quartic.iter().all(|&b| b == S::zero()) && stiffness.iter().all(|&k| k == c)).then_some(c)
            }
            EnergyVariant::AffineForced { .. } => None,
        }
    }

    pub fn loading_at(&self, t: S) -> Vec<S> {
        self.loading().iter().map(|l| l.eval(t)).collect()
    }

    /// True when the energy is `C³` in time (no interior kinks in any path).
    pub fn is_time_smooth(&self) -> bool {
        self.time_functions().iter().all(|f| f.is_smooth())
    }

    /// Lipschitz constant in `z` of `∂E_sh/∂t` on the ball `|z| ≤ radius`,
    /// over `[0, horizon]`.
    pub fn dt_lipschitz(&self, radius: S, horizon: S) -> S {
        let rate_max = self
            .loading()
            .iter()
            .map(|l| l.max_abs_slope_on(S::zero(), horizon))
            .fold(S::zero(), S::max);
        let rate_norm = rate_max * S::lit(self.shape_dim() as f64).sqrt();
        match &self.variant {
            EnergyVariant::Quadratic { a_sh, .. } => spectral_norm(a_sh) * rate_norm,
            EnergyVariant::AffineForced { a_sh, force, .. } => {
                let f_rate = force
                    .iter()
                    .map(|f| f.max_abs_slope_on(S::zero(), horizon))
                    .fold(S::zero(), S::max);
                spectral_norm(a_sh) * rate_norm + f_rate * S::lit(self.shape_dim() as f64).sqrt()
            }
            EnergyVariant::Duffing { stiffness, quartic, loading } => {
                let lmax = loading
                    .iter()
                    .map(|l| l.max_on(S::zero(), horizon).abs().max(l.min_on(S::zero(), horizon).abs()))
                    .fold(S::zero(), S::max);
                let reach = radius + lmax;
                stiffness
                    .iter()
                    .zip(quartic)
                    .map(|(&k, &b)| k + S::lit(3.0) * b * reach * reach)
                    .fold(S::zero(), S::max)
                    * rate_norm
            }
        }
    }

    pub fn eval_e(&self, shape_map: &Matrix<S>, t: S, x: &[S]) -> S {
        self.value_sh(t, &shape_map.mul_vec(x))
    }

    /// `D_x E = π_Zᵀ D_z E_sh`
    pub fn grad_e(&self, shape_map: &Matrix<S>, t: S, x: &[S]) -> Vec<S> {
        shape_map.tr_mul_vec(&self.grad_sh(t, &shape_map.mul_vec(x)))
    }

    pub fn dt_e(&self, shape_map: &Matrix<S>, t: S, x: &[S]) -> S {
        self.dt_sh(t, &shape_map.mul_vec(x))
    }

    /// Hessian in `x`: `π_Zᵀ H π_Z`.
    pub fn hessian_e(&self, shape_map: &Matrix<S>, t: S, x: &[S]) -> Matrix<S> {
        let h = self.hessian_sh(t, &shape_map.mul_vec(x));
        shape_map.transpose().mul_mat(&h).mul_mat(shape_map)
    }

    /// `∫ₐᵇ ∂ₜE(τ, x(τ)) dτ` for `x` linear between `xa` and `xb`, by
    /// two-point Gauss rule on each piece between loading breakpoints.
    pub fn dt_integral(&self, shape_map: &Matrix<S>, a: S, b: S, xa: &[S], xb: &[S]) -> S {
        let mut knots = vec![a];
        knots.extend(crate::timefn::merged_breakpoints(self.time_functions(), a, b));
        knots.push(b);
        let g = S::lit(0.5) / S::lit(3.0).sqrt();
        let half = S::lit(0.5);
        let span = b - a;
        let state = |tau: S| -> Vec<S> {
            let w = if span > S::zero() { (tau - a) / span } else { S::zero() };
            xa.iter().zip(xb).map(|(&p, &q)| p + w * (q - p)).collect()
        };
        knots
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let mid = (lo + hi) * half;
                let len = hi - lo;
                let t1 = mid - g * len;
                let t2 = mid + g * len;
                half * len * (self.dt_e(shape_map, t1, &state(t1)) + self.dt_e(shape_map, t2, &state(t2)))
            })
            .sum()
    }
}

fn spectral_norm<S: Real>(a: &Matrix<S>) -> S {
    a.transpose().mul_mat(a).symmetric_eigen().max().max(S::zero()).sqrt()
}

/// Deviation of `grad_E`/`dt_E` from central differences of `eval_E`.
///
/// Each component is compared relative to `max(1, |fd|)`, so values near
/// zero are compared absolutely.
pub fn check_gradient<S: Real>(energy: &EnergyModel<S>, shape_map: &Matrix<S>, t: S, x: &[S], h: S) -> S {
    let rel = |a: S, b: S| (a - b).abs() / S::one().max(b.abs());
    let g = energy.grad_e(shape_map, t, x);
    let two_h = S::lit(2.0) * h;
    let mut worst = S::zero();
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let fd = (energy.eval_e(shape_map, t, &xp) - energy.eval_e(shape_map, t, &xm)) / two_h;
        worst = worst.max(rel(g[i], fd));
    }
    let fd_t = (energy.eval_e(shape_map, t + h, x) - energy.eval_e(shape_map, t - h, x)) / two_h;
    worst.max(rel(energy.dt_e(shape_map, t, x), fd_t))
}

/// Midpoint convexity defect `½E(x₁)+½E(x₂) - E(½x₁+½x₂) - μ/8|π(x₁-x₂)|²`;
/// nonnegative for a `μ`-uniformly convex energy.
pub fn convexity_defect<S: Real>(energy: &EnergyModel<S>, shape_map: &Matrix<S>, t: S, x1: &[S], x2: &[S]) -> S {
    let half = S::lit(0.5);
    let mid: Vec<S> = x1.iter().zip(x2).map(|(&a, &b)| half * (a + b)).collect();
    let dz = shape_map.mul_vec(&sub(x1, x2));
    let nz = norm(&dz);
    half * energy.eval_e(shape_map, t, x1) + half * energy.eval_e(shape_map, t, x2)
        - energy.eval_e(shape_map, t, &mid)
        - energy.convexity_mu / S::lit(8.0) * nz * nz
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id1() -> Matrix<f64> {
        Matrix::identity(1)
    }

    fn ramp() -> PiecewiseLinear<f64> {
        PiecewiseLinear::affine(0.0, 1.0, 2.0)
    }

    #[test]
    fn quadratic_value_gradient_and_rate() {
        let e = EnergyModel::quadratic(Matrix::identity(1), vec![ramp()]);
        assert!((e.eval_e(&id1(), 1.0, &[2.0]) - 0.5).abs() < 1e-15);
        assert_eq!(e.eval_e(&id1(), 1.0, &[1.0]), 0.0);
        assert_eq!(e.grad_e(&id1(), 1.0, &[1.0]), vec![0.0]);
        assert!((e.dt_e(&id1(), 1.0, &[2.0]) + 1.0).abs() < 1e-15);
        assert_eq!(e.dt_e(&id1(), 1.0, &[1.0]), 0.0);
    }

    #[test]
    fn duffing_hand_values() {
        let e = EnergyModel::duffing(vec![1.0], vec![1.0], vec![PiecewiseLinear::constant(0.0)]);
        // ½·4 + ¼·16
        assert!((e.eval_e(&id1(), 0.0, &[2.0]) - 6.0).abs() < 1e-15);
        let p = Matrix::from_rows(vec![vec![-1.0, 1.0]]).unwrap();
        let g = e.grad_e(&p, 0.0, &[0.0, 2.0]);
        assert_eq!(g, vec![-10.0, 10.0]);
    }

    #[test]
    fn duffing_rate_matches_formula() {
        let c = 0.7f64;
        let e = EnergyModel::duffing(vec![2.0], vec![0.5], vec![PiecewiseLinear::affine(0.1, c, 1.0)]);
        let t = 0.4;
        let z = 1.3;
        let d = z - (0.1 + c * t);
        let want = -(2.0 * d + 0.5 * d * d * d) * c;
        assert!((e.dt_sh(t, &[z]) - want).abs() < 1e-14);
        assert!(check_gradient(&e, &id1(), t, &[z], 1e-5) < 1e-6);
    }

    #[test]
    fn gradient_check_at_stationary_point() {
        let e = EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::constant(0.3)]);
        assert!(check_gradient(&e, &id1(), 0.5, &[0.3], 1e-5) <= 1e-9);
    }

    #[test]
    fn affine_forced_adds_linear_potential() {
        let a = Matrix::from_rows(vec![vec![2.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let zero = PiecewiseLinear::constant(0.0);
        let f = PiecewiseLinear::affine(0.0, 3.0, 1.0);
        let e = EnergyModel::affine_forced(a.clone(), vec![zero.clone(), zero.clone()], vec![zero, f]);
        let id = Matrix::identity(2);
        let x = [0.2f64, -0.4];
        let t = 0.5;
        let want = 0.5 * a.quad_form(&x) + 1.5 * x[1];
        assert!((e.eval_e(&id, t, &x) - want).abs() < 1e-15);
        assert!((e.dt_e(&id, t, &x) - 3.0 * x[1]).abs() < 1e-15);
        assert!(check_gradient(&e, &id, t, &x, 1e-5) < 1e-6);
    }

    #[test]
    fn dt_integral_matches_closed_form() {
        // E = ½(x - t - 1)², x fixed at 0 on [0, h]: ∫ (1 + τ) dτ = h + h²/2
        let e = EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::affine(1.0, 1.0, 1.0)]);
        let h = 0.01;
        let got = e.dt_integral(&id1(), 0.0, h, &[0.0], &[0.0]);
        assert!((got - (h + h * h / 2.0)).abs() < 1e-15);
    }
}
