//! Time-dependent dissipation potentials `R(t, v) = χ_K(v) + R_finite(t, v)`.
//!
//! The finite part is one of three positively one-homogeneous families:
//! asymmetric per-coordinate friction (crawler blocks), the same law applied
//! to successive differences with a grounded first element (rheological
//! chain), or an isotropic Euclidean norm (planar friction).

use serde::{Deserialize, Serialize};

use crate::cone::{project_onto_polyhedron, ConeSpec, SignConstraint};
use crate::error::{Error, Result};
use crate::kernel::{minimize_composite, CompositeProblem, QuadraticPart, SolverOptions};
use crate::linalg::{axpy, dot, norm, FiberMap, Matrix};
use crate::scalar::Real;
use crate::timefn::{merged_breakpoints, PiecewiseLinear};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub enum FrictionStructure<S> {
    /// `Σᵢ μᵢ⁺(t) vᵢ⁺ + μᵢ⁻(t) vᵢ⁻`
    PerCoordinate { mu_plus: Vec<PiecewiseLinear<S>>, mu_minus: Vec<PiecewiseLinear<S>> },
    /// Same law applied to `u = D v` with `u₁ = v₁`, `uᵢ = vᵢ - vᵢ₋₁`.
    PerDifference { mu_plus: Vec<PiecewiseLinear<S>>, mu_minus: Vec<PiecewiseLinear<S>> },
    /// `μ(t) |v|`
    Isotropic { mu: PiecewiseLinear<S> },
}

impl<S: Real> FrictionStructure<S> {
    fn coefficient_fns(&self) -> Vec<&PiecewiseLinear<S>> {
        match self {
            FrictionStructure::PerCoordinate { mu_plus, mu_minus }
            | FrictionStructure::PerDifference { mu_plus, mu_minus } => mu_plus.iter().chain(mu_minus).collect(),
            FrictionStructure::Isotropic { mu } => vec![mu],
        }
    }

    /// Number of state coordinates the coefficient lists address, if fixed.
    fn arity(&self) -> Option<usize> {
        match self {
            FrictionStructure::PerCoordinate { mu_plus, .. } | FrictionStructure::PerDifference { mu_plus, .. } => {
                Some(mu_plus.len())
            }
            FrictionStructure::Isotropic { .. } => None,
        }
    }
}

/// Piecewise-constant bound `ρ` on the time variation of the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoBound<S> {
    knots: Vec<S>,
    values: Vec<S>,
}

impl<S: Real> RhoBound<S> {
    pub fn value(&self, t: S) -> S {
        let i = self.knots.partition_point(|&k| k <= t);
        self.values[i]
    }

    /// Exact `∫ₛᵗ ρ`.
    pub fn integral(&self, s: S, t: S) -> S {
        let mut edges = vec![s];
        edges.extend(self.knots.iter().copied().filter(|&k| k > s && k < t));
        edges.push(t);
        edges.windows(2).map(|w| (w[1] - w[0]) * self.value((w[0] + w[1]) * S::lit(0.5))).sum()
    }
}

/// Closed interval with possibly infinite ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Real> Interval<S> {
    pub fn clamp(&self, x: S) -> S {
        x.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, x: S) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Box `Π [loᵢ, hiᵢ]`, possibly unbounded along recession directions.
pub type BoxWithRecession<S> = Vec<Interval<S>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
#[serde(try_from = "DissipationRepr<S>", into = "DissipationRepr<S>")]
pub struct DissipationModel<S> {
    pub cone: ConeSpec<S>,
    pub structure: FrictionStructure<S>,
    alpha_lower: S,
    alpha_upper: S,
    rho: RhoBound<S>,
    dim: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
struct DissipationRepr<S> {
    cone: ConeSpec<S>,
    structure: FrictionStructure<S>,
}

impl<S: Real> TryFrom<DissipationRepr<S>> for DissipationModel<S> {
    type Error = Error;

    fn try_from(r: DissipationRepr<S>) -> Result<Self> {
        DissipationModel::new(r.cone, r.structure)
    }
}

impl<S: Real> From<DissipationModel<S>> for DissipationRepr<S> {
    fn from(d: DissipationModel<S>) -> Self {
        DissipationRepr { cone: d.cone, structure: d.structure }
    }
}

/// Lower bidiagonal difference operator with grounded first row.
fn difference_operator<S: Real>(n: usize) -> Matrix<S> {
    let mut d = Matrix::identity(n);
    for i in 1..n {
        d[(i, i - 1)] = -S::one();
    }
    d
}

fn cumulative_sum_operator<S: Real>(n: usize) -> Matrix<S> {
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            c[(i, j)] = S::one();
        }
    }
    c
}

fn asym_abs<S: Real>(plus: S, minus: S, x: S) -> S {
    if x >= S::zero() {
        plus * x
    } else {
        -minus * x
    }
}

/// Asymmetric soft threshold: prox of `τ(μ⁺x⁺ + μ⁻x⁻)`.
fn asym_shrink<S: Real>(y: S, up: S, down: S) -> S {
    if y > up {
        y - up
    } else if y < -down {
        y + down
    } else {
        S::zero()
    }
}

impl<S: Real> DissipationModel<S> {
    /// Builds the model and derives `α_*`, `α*` and `ρ` from the coefficient
    /// breakpoints.
    pub fn new(cone: ConeSpec<S>, structure: FrictionStructure<S>) -> Result<Self> {
        if let FrictionStructure::PerCoordinate { mu_plus, mu_minus }
        | FrictionStructure::PerDifference { mu_plus, mu_minus } = &structure
        {
            if mu_plus.len() != mu_minus.len() || mu_plus.is_empty() {
                return Err(Error::Structural("μ⁺ and μ⁻ lists must be nonempty and of equal length".into()));
            }
        }
        let dim = structure.arity().or_else(|| cone.ambient_dim());
        if let Some(n) = dim {
            cone.check_dim(n)?;
        }
        if matches!(structure, FrictionStructure::PerDifference { .. }) && !cone.is_full_space() {
            return Err(Error::Unsupported("per-difference friction is only supported with K = X".into()));
        }
        let fns = structure.coefficient_fns();
        let (cmin, cmax) = fns.iter().flat_map(|f| f.points().iter().map(|p| p[1])).fold(
            (S::infinity(), S::neg_infinity()),
            |(lo, hi), y| (lo.min(y), hi.max(y)),
        );
        let n = S::lit(dim.unwrap_or(1) as f64);
        let (lower_c, upper_c) = match &structure {
            FrictionStructure::PerCoordinate { .. } => (S::one(), n.sqrt()),
            FrictionStructure::PerDifference { mu_plus, .. } => {
                let d = difference_operator::<S>(mu_plus.len());
                let eig = d.transpose().mul_mat(&d).symmetric_eigen();
                (eig.min().max(S::zero()).sqrt(), n.sqrt() * eig.max().sqrt())
            }
            FrictionStructure::Isotropic { .. } => (S::one(), S::one()),
        };
        let mut knots: Vec<S> = fns.iter().flat_map(|f| f.breakpoints().collect::<Vec<_>>()).collect();
        knots.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        knots.dedup();
        // ρ on (-∞, k₀), (k₀, k₁), ..., (k_last, ∞)
        let mut values = Vec::with_capacity(knots.len() + 1);
        values.push(S::zero());
        for w in knots.windows(2) {
            let slope = fns.iter().map(|f| f.max_abs_slope_on(w[0], w[1])).fold(S::zero(), S::max);
            values.push(upper_c * slope);
        }
        values.push(S::zero());
        if knots.is_empty() {
            values.truncate(1);
        }
        Ok(Self {
            cone,
            structure,
            alpha_lower: lower_c * cmin,
            alpha_upper: upper_c * cmax,
            rho: RhoBound { knots, values },
            dim,
        })
    }

    /// `μ⁺ = μ⁻ = μ` constant friction on every coordinate, `K = X`.
    pub fn symmetric_constant(n: usize, mu: S) -> Self {
        let c = vec![PiecewiseLinear::constant(mu); n];
        Self::new(ConeSpec::full_space(), FrictionStructure::PerCoordinate { mu_plus: c.clone(), mu_minus: c })
            .expect("well-formed constant friction")
    }

    pub fn alpha_lower(&self) -> S {
        self.alpha_lower
    }

    pub fn alpha_upper(&self) -> S {
        self.alpha_upper
    }

    pub fn rho(&self) -> &RhoBound<S> {
        &self.rho
    }

    /// State dimension fixed by the coefficient lists or the cone, if any.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn coefficient_fns(&self) -> Vec<&PiecewiseLinear<S>> {
        self.structure.coefficient_fns()
    }

    /// True when no coefficient varies in time.
    pub fn is_autonomous(&self) -> bool {
        self.coefficient_fns().iter().all(|f| f.is_constant())
    }

    pub fn breakpoints_in(&self, a: S, b: S) -> Vec<S> {
        merged_breakpoints(self.coefficient_fns(), a, b)
    }

    /// Strict positivity of every coefficient.
    pub fn validate(&self, n: usize) -> Result<Vec<String>> {
        if let Some(d) = self.dim {
            if d != n {
                return Err(Error::Structural(format!("dissipation addresses {d} coordinates, model has {n}")));
            }
        }
        self.cone.check_dim(n)?;
        let mut issues = Vec::new();
        for (i, f) in self.coefficient_fns().iter().enumerate() {
            if f.points().iter().any(|p| !(p[1] > S::zero())) {
                issues.push(format!("friction coefficient #{i} is not strictly positive"));
            }
        }
        Ok(issues)
    }

    /// `R_finite(t, v)`, ignoring the cone.
    pub fn finite_part(&self, t: S, v: &[S]) -> S {
        match &self.structure {
            FrictionStructure::PerCoordinate { mu_plus, mu_minus } => v
                .iter()
                .zip(mu_plus.iter().zip(mu_minus))
                .map(|(&x, (p, m))| asym_abs(p.eval(t), m.eval(t), x))
                .sum(),
            FrictionStructure::PerDifference { mu_plus, mu_minus } => {
                let mut prev = S::zero();
                let mut total = S::zero();
                for (&x, (p, m)) in v.iter().zip(mu_plus.iter().zip(mu_minus)) {
                    total += asym_abs(p.eval(t), m.eval(t), x - prev);
                    prev = x;
                }
                total
            }
            FrictionStructure::Isotropic { mu } => mu.eval(t) * norm(v),
        }
    }

    /// `R(t, v)`: `+∞` outside the cone.
    pub fn eval_r(&self, t: S, v: &[S]) -> S {
        if !self.cone.contains(v) {
            return S::infinity();
        }
        self.finite_part(t, v)
    }

    /// Coordinates in which the finite part is separable: `Some((D, D⁻¹))`
    /// for the per-difference law, `None` when the native coordinates are.
    pub(crate) fn separating_transform(&self, n: usize) -> Option<(Matrix<S>, Matrix<S>)> {
        matches!(self.structure, FrictionStructure::PerDifference { .. })
            .then(|| (difference_operator(n), cumulative_sum_operator(n)))
    }

    /// Euclidean prox of `τ R(t, ·)` in separable coordinates (see
    /// [`Self::separating_transform`]).
    pub(crate) fn prox_separable(&self, t: S, y: &[S], tau: S) -> Result<Vec<S>> {
        match &self.structure {
            FrictionStructure::PerCoordinate { mu_plus, mu_minus }
            | FrictionStructure::PerDifference { mu_plus, mu_minus } => {
                let shrink = |z: &[S]| -> Vec<S> {
                    z.iter()
                        .zip(mu_plus.iter().zip(mu_minus))
                        .map(|(&zi, (p, m))| asym_shrink(zi, tau * p.eval(t), tau * m.eval(t)))
                        .collect()
                };
                if let Some(signs) = self.cone.coordinate_signs(y.len()) {
                    return Ok(shrink(y).into_iter().zip(&signs).map(|(v, s)| s.clamp(v)).collect());
                }
                if matches!(self.structure, FrictionStructure::PerDifference { .. }) {
                    return Err(Error::Unsupported("per-difference friction needs a coordinate-aligned cone".into()));
                }
                dykstra_prox(y, shrink, |z| self.cone.project(z))
            }
            FrictionStructure::Isotropic { mu } => {
                // prox of a rotation-invariant norm plus a cone indicator:
                // shrink the projection radially
                let p = self.cone.project(y);
                let np = norm(&p);
                let thr = tau * mu.eval(t);
                if np <= thr {
                    Ok(vec![S::zero(); y.len()])
                } else {
                    Ok(p.iter().map(|&x| x * (S::one() - thr / np)).collect())
                }
            }
        }
    }

    /// Unique minimizer of `(1/2λ)|v - w|²_G + R(t, v)`.
    pub fn prox_r(&self, t: S, w: &[S], lambda: S, metric: &Matrix<S>, opts: &SolverOptions<S>) -> Result<Vec<S>> {
        if !(lambda > S::zero()) {
            return Err(Error::Domain("prox parameter λ must be positive".into()));
        }
        let n = w.len();
        if metric.rows() != n || !metric.is_square() {
            return Err(Error::Structural("prox metric has wrong dimension".into()));
        }
        let c = metric[(0, 0)];
        let scalar_metric = metric.is_diagonal() && metric.diagonal().iter().all(|&d| d == c) && c > S::zero();
        if scalar_metric && self.separating_transform(n).is_none() {
            if let Ok(v) = self.prox_separable(t, w, lambda / c) {
                return Ok(v);
            }
        }
        let q = metric.symmetric_part().scale(S::one() / lambda);
        let b: Vec<S> = q.mul_vec(w).iter().map(|&x| -x).collect();
        let problem = CompositeProblem { smooth: QuadraticPart { q, b }, dissipation: self, time: t, scale: S::one() };
        let start = self.cone.project(w);
        Ok(minimize_composite(&problem, &start, opts)?.v)
    }

    /// `∂ᵥR(t, 0)` as a box, widened by the polar cone along constrained
    /// coordinates.
    pub fn subdiff_at_zero(&self, t: S) -> Result<BoxWithRecession<S>> {
        let FrictionStructure::PerCoordinate { mu_plus, mu_minus } = &self.structure else {
            return Err(Error::Unsupported("∂R(t,0) is a box only for per-coordinate friction".into()));
        };
        let signs = self
            .cone
            .coordinate_signs(mu_plus.len())
            .ok_or_else(|| Error::Unsupported("∂R(t,0) is a box only for coordinate-aligned cones".into()))?;
        Ok(mu_plus
            .iter()
            .zip(mu_minus)
            .zip(signs)
            .map(|((p, m), s)| {
                let mut iv = Interval { lo: -m.eval(t), hi: p.eval(t) };
                match s {
                    SignConstraint::Free => {}
                    SignConstraint::NonNegative => iv.lo = S::neg_infinity(),
                    SignConstraint::NonPositive => iv.hi = S::infinity(),
                    SignConstraint::Zero => {
                        iv.lo = S::neg_infinity();
                        iv.hi = S::infinity();
                    }
                }
                iv
            })
            .collect())
    }

    /// `inf { R(t, x) : π_Z x = z }`; `+∞` when the fiber misses `K`.
    pub fn restricted_r(&self, t: S, z: &[S], shape_map: &Matrix<S>) -> Result<S> {
        let fiber = FiberMap::new(shape_map)?;
        Ok(self.restricted_argmin(t, z, &fiber)?.map_or(S::infinity(), |(_, v)| v))
    }

    /// Minimizer of `R(t, ·)` on the fiber over `z`, with ties resolved
    /// towards the smallest norm. `None` when the fiber misses `K`.
    pub fn restricted_argmin(&self, t: S, z: &[S], fiber: &FiberMap<S>) -> Result<Option<(Vec<S>, S)>> {
        let p = fiber.particular(z);
        match fiber.kernel_dim() {
            0 => {
                if self.cone.contains(&p) {
                    let v = self.finite_part(t, &p);
                    Ok(Some((p, v)))
                } else {
                    Ok(None)
                }
            }
            1 => {
                let eta: Vec<S> = (0..p.len()).map(|r| fiber.kernel[(r, 0)]).collect();
                Ok(self.line_argmin(t, &p, &eta))
            }
            _ => self.fiber_argmin_alm(t, z, fiber),
        }
    }

    /// Exact minimization of the convex function `s ↦ R(t, p + s d)`.
    fn line_argmin(&self, t: S, p: &[S], d: &[S]) -> Option<(Vec<S>, S)> {
        let (lo, hi) = self.cone.line_interval(p, d)?;
        let dd = dot(d, d);
        let s_norm = -dot(p, d) / dd;
        let at = |s: S| {
            let mut x = p.to_vec();
            axpy(s, d, &mut x);
            x
        };
        let f = |s: S| self.finite_part(t, &at(s));
        let pick = |s: S| {
            let x = at(s);
            let v = self.finite_part(t, &x);
            Some((x, v))
        };
        let kinks: Vec<S> = match &self.structure {
            FrictionStructure::PerCoordinate { .. } => {
                p.iter().zip(d).filter(|(_, &b)| b != S::zero()).map(|(&a, &b)| -a / b).collect()
            }
            FrictionStructure::PerDifference { .. } => {
                let dp = difference_operator::<S>(p.len());
                let (a, b) = (dp.mul_vec(p), dp.mul_vec(d));
                a.iter().zip(&b).filter(|(_, &bi)| bi != S::zero()).map(|(&ai, &bi)| -ai / bi).collect()
            }
            // convex and smooth away from the origin: the closest point to 0 on the line
            FrictionStructure::Isotropic { .. } => return pick(s_norm.max(lo).min(hi)),
        };
        let mut cands: Vec<S> = kinks.into_iter().filter(|&s| s >= lo && s <= hi).collect();
        cands.extend([lo, hi].into_iter().filter(|s| s.is_finite()));
        if cands.is_empty() {
            return pick(s_norm.max(lo).min(hi));
        }
        let vals: Vec<S> = cands.iter().map(|&s| f(s)).collect();
        let best = vals.iter().copied().fold(S::infinity(), S::min);
        let slack = S::epsilon() * S::lit(1e3) * (S::one() + best.abs());
        let (mut a, mut b) = (S::infinity(), S::neg_infinity());
        for (&s, &v) in cands.iter().zip(&vals) {
            if v <= best + slack {
                a = a.min(s);
                b = b.max(s);
            }
        }
        pick(s_norm.max(a).min(b))
    }

    /// Augmented-Lagrangian solve of `min R(t, x)` s.t. `π x = z` for kernels of
    /// dimension two or more.
    fn fiber_argmin_alm(&self, t: S, z: &[S], fiber: &FiberMap<S>) -> Result<Option<(Vec<S>, S)>> {
        let p = fiber.particular(z);
        let n = p.len();
        let shape_map = {
            // recover π from the fiber: rows of Pᵀ(PPᵀ)⁻¹ are not needed, use z-image of the basis
            let mut rows = Vec::with_capacity(z.len());
            for i in 0..z.len() {
                let mut e = vec![S::zero(); z.len()];
                e[i] = S::one();
                rows.push(fiber.particular(&e));
            }
            // particular(e_i) = Pᵀ(PPᵀ)⁻¹ e_i; Gram-inverse rows reproduce π via a solve
            let b = Matrix::from_rows(rows)?; // z_dim × n, equals (PPᵀ)⁻¹P
            let g = b.mul_mat(&b.transpose()); // (PPᵀ)⁻¹
            g.inverse()
                .ok_or_else(|| Error::Structural("degenerate shape map".into()))?
                .mul_mat(&b)
        };
        if let Some(g) = self.cone.inequalities(n) {
            let wproj = g.mul_mat(&fiber.kernel);
            let h: Vec<S> = (0..g.rows()).map(|r| -dot(g.row(r), &p)).collect();
            if project_onto_polyhedron(&vec![S::zero(); fiber.kernel_dim()], &wproj, &h).is_none() {
                return Ok(None);
            }
        } else {
            return Err(Error::Unsupported("restricted dissipation over ≥2-dimensional fibers needs a polyhedral cone".into()));
        }
        let rho = S::one().max(self.alpha_upper);
        let mut y = vec![S::zero(); z.len()];
        let mut x = self.cone.project(&p);
        let opts = SolverOptions::default();
        let q = shape_map.transpose().mul_mat(&shape_map).scale(rho);
        let tol = S::lit(1e3) * S::default_tol();
        for _ in 0..500 {
            let target: Vec<S> = z.iter().zip(&y).map(|(&zi, &yi)| zi - yi / rho).collect();
            let b: Vec<S> = shape_map.tr_mul_vec(&target).iter().map(|&v| -rho * v).collect();
            let problem = CompositeProblem { smooth: QuadraticPart { q: q.clone(), b }, dissipation: self, time: t, scale: S::one() };
            x = minimize_composite(&problem, &x, &opts)?.v;
            let r: Vec<S> = shape_map.mul_vec(&x).iter().zip(z).map(|(&a, &b)| a - b).collect();
            axpy(rho, &r, &mut y);
            if norm(&r) <= tol * (S::one() + norm(z)) {
                let v = self.finite_part(t, &x);
                return Ok(Some((x, v)));
            }
        }
        Err(Error::numerical("augmented Lagrangian for restricted dissipation did not converge", f64::NAN))
    }

    /// One-sided directional derivative `R'(t, v; d)` of the finite part.
    pub fn directional_derivative(&self, t: S, v: &[S], d: &[S]) -> S {
        match &self.structure {
            FrictionStructure::PerCoordinate { mu_plus, mu_minus } => v
                .iter()
                .zip(d)
                .zip(mu_plus.iter().zip(mu_minus))
                .map(|((&vi, &di), (p, m))| side_slope(vi, di, p.eval(t), m.eval(t)))
                .sum(),
            FrictionStructure::PerDifference { mu_plus, mu_minus } => {
                let dm = difference_operator::<S>(v.len());
                let (u, e) = (dm.mul_vec(v), dm.mul_vec(d));
                u.iter()
                    .zip(&e)
                    .zip(mu_plus.iter().zip(mu_minus))
                    .map(|((&ui, &ei), (p, m))| side_slope(ui, ei, p.eval(t), m.eval(t)))
                    .sum()
            }
            FrictionStructure::Isotropic { mu } => {
                let nv = norm(v);
                if nv > S::zero() {
                    mu.eval(t) * dot(v, d) / nv
                } else {
                    mu.eval(t) * norm(d)
                }
            }
        }
    }
}

/// Prox of a sum of two convex functions from the prox of each, by the
/// Dykstra-like splitting `z = P_f(x + p)`, `x = P_g(z + q)` with running
/// corrections `p`, `q`.
fn dykstra_prox<S: Real>(y: &[S], prox_f: impl Fn(&[S]) -> Vec<S>, prox_g: impl Fn(&[S]) -> Vec<S>) -> Result<Vec<S>> {
    const MAX_ITER: usize = 100_000;
    let n = y.len();
    let tol = S::epsilon() * S::lit(16.0) * (S::one() + norm(y));
    let mut x = y.to_vec();
    let mut p = vec![S::zero(); n];
    let mut q = vec![S::zero(); n];
    for _ in 0..MAX_ITER {
        let xp: Vec<S> = x.iter().zip(&p).map(|(&a, &b)| a + b).collect();
        let z = prox_f(&xp);
        p = xp.iter().zip(&z).map(|(&a, &b)| a - b).collect();
        let zq: Vec<S> = z.iter().zip(&q).map(|(&a, &b)| a + b).collect();
        let x_next = prox_g(&zq);
        q = zq.iter().zip(&x_next).map(|(&a, &b)| a - b).collect();
        let moved = crate::linalg::dist(&x_next, &x).max(crate::linalg::dist(&x_next, &z));
        x = x_next;
        if moved <= tol {
            return Ok(x);
        }
    }
    // the iterates are feasible; accept a slightly inexact prox
    log::debug!("prox splitting stopped after {MAX_ITER} iterations");
    Ok(x)
}

fn side_slope<S: Real>(v: S, d: S, plus: S, minus: S) -> S {
    if v > S::zero() || (v == S::zero() && d >= S::zero()) {
        plus * d
    } else {
        -minus * d
    }
}

/// A path sampled by the variation routines.
pub trait SampledPath<S> {
    fn state_at(&self, t: S) -> Vec<S>;

    /// Interior points where the path may have kinks.
    fn knots(&self, s: S, t: S) -> Vec<S>;
}

/// Path given by a closure, assumed smooth.
pub struct FnPath<F>(pub F);

impl<S: Real, F: Fn(S) -> Vec<S>> SampledPath<S> for FnPath<F> {
    fn state_at(&self, t: S) -> Vec<S> {
        (self.0)(t)
    }

    fn knots(&self, _s: S, _t: S) -> Vec<S> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VariationOptions<S> {
    /// Relative stopping tolerance between successive dyadic levels.
    pub tol: S,
    /// Cap on the number of partition intervals.
    pub max_intervals: usize,
}

impl<S: Real> Default for VariationOptions<S> {
    fn default() -> Self {
        Self { tol: S::lit(1e-8).max(S::epsilon() * S::lit(1e2)), max_intervals: 1 << 22 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Real"))]
pub struct VariationResult<S> {
    pub value: S,
    pub partitions_used: usize,
    pub converged: bool,
    pub last_delta: S,
    /// Values at each dyadic level, coarsest first.
    pub levels: Vec<S>,
}

/// `V_R(f; s, t)` by dyadic refinement of the path's own partition.
///
/// Level `j` splits every interval of the base partition (`s`, the path's
/// knots, `t`) into `2^j` equal parts and sums `R(τ_{k-1}, f(τ_k) - f(τ_{k-1}))`.
pub fn r_variation<S: Real, P: SampledPath<S> + ?Sized>(
    path: &P,
    model: &DissipationModel<S>,
    s: S,
    t: S,
    opts: &VariationOptions<S>,
) -> VariationResult<S> {
    if t <= s {
        return VariationResult { value: S::zero(), partitions_used: 0, converged: true, last_delta: S::zero(), levels: vec![] };
    }
    let mut base = vec![s];
    base.extend(path.knots(s, t).into_iter().filter(|&k| k > s && k < t));
    base.push(t);
    let base_states: Vec<Vec<S>> = base.iter().map(|&tau| path.state_at(tau)).collect();
    let mut levels = Vec::new();
    let mut split = 1usize;
    loop {
        let mut total = S::zero();
        for (w, xw) in base.windows(2).zip(base_states.windows(2)) {
            let (a, b) = (w[0], w[1]);
            let step = (b - a) / S::lit(split as f64);
            let mut prev_t = a;
            let mut prev_x = xw[0].clone();
            for k in 1..=split {
                let (tk, xk) = if k == split {
                    (b, xw[1].clone())
                } else {
                    let tk = a + step * S::lit(k as f64);
                    (tk, path.state_at(tk))
                };
                let inc: Vec<S> = xk.iter().zip(&prev_x).map(|(&p, &q)| p - q).collect();
                total += model.eval_r(prev_t, &inc);
                prev_t = tk;
                prev_x = xk;
            }
        }
        let intervals = (base.len() - 1) * split;
        levels.push(total);
        if total.is_infinite() {
            return VariationResult { value: total, partitions_used: intervals, converged: true, last_delta: S::zero(), levels };
        }
        if levels.len() >= 2 {
            let prev = levels[levels.len() - 2];
            let delta = (total - prev).abs();
            if delta <= opts.tol * S::one().max(total.abs()) || intervals * 2 > opts.max_intervals {
                let converged = delta <= opts.tol * S::one().max(total.abs());
                return VariationResult { value: total, partitions_used: intervals, converged, last_delta: delta, levels };
            }
        }
        split *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(plus: &[f64], minus: &[f64]) -> DissipationModel<f64> {
        let c = |v: &[f64]| v.iter().map(|&m| PiecewiseLinear::constant(m)).collect::<Vec<_>>();
        DissipationModel::new(ConeSpec::full_space(), FrictionStructure::PerCoordinate { mu_plus: c(plus), mu_minus: c(minus) })
            .unwrap()
    }

    #[test]
    fn eval_examples() {
        let r = pc(&[2.0, 2.0], &[1.0, 1.0]);
        assert_eq!(r.eval_r(0.0, &[0.0, 0.0]), 0.0);
        assert_eq!(r.eval_r(0.0, &[1.0, -1.0]), 3.0);
        let half = DissipationModel::new(
            ConeSpec::polyhedral(vec![vec![1.0, 0.0]]).unwrap(),
            FrictionStructure::Isotropic { mu: PiecewiseLinear::constant(1.0f64) },
        )
        .unwrap();
        assert!(half.eval_r(0.0, &[-1.0, 0.0]).is_infinite());
    }

    #[test]
    fn per_difference_matches_chain_formula() {
        let a = [1.0f64, 2.0, 3.0];
        let c: Vec<_> = a.iter().map(|&m| PiecewiseLinear::constant(m)).collect();
        let r = DissipationModel::new(
            ConeSpec::full_space(),
            FrictionStructure::PerDifference { mu_plus: c.clone(), mu_minus: c },
        )
        .unwrap();
        let v = [0.5, -0.5, 1.0];
        let want = 1.0 * 0.5 + 2.0 * 1.0 + 3.0 * 1.5;
        assert!((r.eval_r(0.0, &v) - want).abs() < 1e-15);
    }

    #[test]
    fn subdifferential_boxes() {
        let r = pc(&[1.0], &[1.0]);
        assert_eq!(r.subdiff_at_zero(0.0).unwrap(), vec![Interval { lo: -1.0, hi: 1.0 }]);
        let r = pc(&[2.0], &[1.0]);
        assert_eq!(r.subdiff_at_zero(0.0).unwrap(), vec![Interval { lo: -1.0, hi: 2.0 }]);
        let c = vec![PiecewiseLinear::constant(1.0f64)];
        let fwd = DissipationModel::new(
            ConeSpec::sign_constraints(1, &[SignConstraint::NonNegative]).unwrap(),
            FrictionStructure::PerCoordinate { mu_plus: c.clone(), mu_minus: c },
        )
        .unwrap();
        let b = fwd.subdiff_at_zero(0.0).unwrap();
        assert!(b[0].lo.is_infinite() && b[0].lo < 0.0 && b[0].hi == 1.0);
        let iso = DissipationModel::new(ConeSpec::full_space(), FrictionStructure::Isotropic { mu: PiecewiseLinear::constant(1.0) })
            .unwrap();
        assert!(matches!(iso.subdiff_at_zero(0.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn derived_bounds() {
        let r = pc(&[2.0, 3.0], &[1.0, 4.0]);
        assert_eq!(r.alpha_lower(), 1.0);
        assert!((r.alpha_upper() - 4.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(r.is_autonomous());
        assert_eq!(r.rho().integral(0.0, 1.0), 0.0);
    }

    #[test]
    fn rho_integral_of_ramped_coefficient() {
        let ramp = PiecewiseLinear::new(vec![[0.0f64, 1.0], [1.0, 2.0]]).unwrap();
        let r = DissipationModel::new(
            ConeSpec::full_space(),
            FrictionStructure::PerCoordinate { mu_plus: vec![ramp.clone()], mu_minus: vec![ramp] },
        )
        .unwrap();
        assert!((r.rho().integral(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((r.rho().integral(0.5, 3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn variation_of_straight_path() {
        let r = pc(&[1.0], &[1.0]);
        let res = r_variation(&FnPath(|t: f64| vec![t]), &r, 0.0, 1.0, &VariationOptions::default());
        assert!((res.value - 1.0).abs() < 1e-14 && res.converged);
        let res = r_variation(&FnPath(|_t: f64| vec![0.3]), &r, 0.0, 1.0, &VariationOptions::default());
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn variation_infinite_when_leaving_cone() {
        let c = vec![PiecewiseLinear::constant(1.0f64)];
        let fwd = DissipationModel::new(
            ConeSpec::sign_constraints(1, &[SignConstraint::NonNegative]).unwrap(),
            FrictionStructure::PerCoordinate { mu_plus: c.clone(), mu_minus: c },
        )
        .unwrap();
        let res = r_variation(&FnPath(|t: f64| vec![-t]), &fwd, 0.0, 1.0, &VariationOptions::default());
        assert!(res.value.is_infinite());
    }

    #[test]
    fn restricted_examples() {
        let r = pc(&[1.0, 1.0], &[1.0, 1.0]);
        let p = Matrix::from_rows(vec![vec![-1.0, 1.0]]).unwrap();
        assert!((r.restricted_r(0.0, &[1.0], &p).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(r.restricted_r(0.0, &[0.0], &p).unwrap(), 0.0);
        // both blocks forced backwards-only and z > 0 needs x₂ > x₁ with x₂ ≤ 0... still feasible;
        // pin both blocks: fiber of z ≠ 0 misses K = {0}
        let c = vec![PiecewiseLinear::constant(1.0); 2];
        let pinned = DissipationModel::new(
            ConeSpec::sign_constraints(2, &[SignConstraint::Zero; 2]).unwrap(),
            FrictionStructure::PerCoordinate { mu_plus: c.clone(), mu_minus: c },
        )
        .unwrap();
        assert!(pinned.restricted_r(0.0, &[1.0], &p).unwrap().is_infinite());
    }
}
