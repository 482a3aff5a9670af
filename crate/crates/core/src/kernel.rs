//! Accelerated proximal-gradient solver for `g(v) + λ R(t, v)`.

use crate::dissipation::DissipationModel;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm, Matrix};
use crate::scalar::Real;

/// Differentiable part of a composite objective.
pub trait SmoothPart<S> {
    fn value(&self, v: &[S]) -> S;
    fn gradient(&self, v: &[S]) -> Vec<S>;
}

/// `½⟨Q v, v⟩ + ⟨b, v⟩`
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPart<S> {
    pub q: Matrix<S>,
    pub b: Vec<S>,
}

impl<S: Real> SmoothPart<S> for QuadraticPart<S> {
    fn value(&self, v: &[S]) -> S {
        S::lit(0.5) * self.q.quad_form(v) + dot(&self.b, v)
    }

    fn gradient(&self, v: &[S]) -> Vec<S> {
        let mut g = self.q.mul_vec(v);
        g.iter_mut().zip(&self.b).for_each(|(gi, &bi)| *gi += bi);
        g
    }
}

/// `½⟨Q v, v⟩ + ⟨b, v⟩ + scale · R(time, v)`
pub struct CompositeProblem<'a, S> {
    pub smooth: QuadraticPart<S>,
    pub dissipation: &'a DissipationModel<S>,
    pub time: S,
    pub scale: S,
}

impl<S: Real> CompositeProblem<'_, S> {
    pub fn objective(&self, v: &[S]) -> S {
        self.smooth.value(v) + self.scale * self.dissipation.eval_r(self.time, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<S> {
    pub tol: S,
    pub max_iter: usize,
}

impl<S: Real> Default for SolverOptions<S> {
    fn default() -> Self {
        Self { tol: S::default_tol(), max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<S> {
    pub v: Vec<S>,
    /// Norm of the proximal-gradient fixed-point residual at `v`.
    pub residual: S,
    pub iters: usize,
}

/// Pulls a smooth function back through `v = C u`.
struct Pullback<'a, S, G: ?Sized> {
    inner: &'a G,
    c: &'a Matrix<S>,
}

impl<S: Real, G: SmoothPart<S> + ?Sized> SmoothPart<S> for Pullback<'_, S, G> {
    fn value(&self, u: &[S]) -> S {
        self.inner.value(&self.c.mul_vec(u))
    }

    fn gradient(&self, u: &[S]) -> Vec<S> {
        self.c.tr_mul_vec(&self.inner.gradient(&self.c.mul_vec(u)))
    }
}

/// Minimizes a quadratic-plus-dissipation objective.
pub fn minimize_composite<S: Real>(
    problem: &CompositeProblem<'_, S>,
    v_init: &[S],
    opts: &SolverOptions<S>,
) -> Result<Solution<S>> {
    let n = v_init.len();
    let q = &problem.smooth.q;
    if q.rows() != n || !q.is_square() || problem.smooth.b.len() != n {
        return Err(Error::Structural("composite problem dimensions disagree".into()));
    }
    let transform = problem.dissipation.separating_transform(n);
    let q_sep = match &transform {
        Some((_, c)) => c.transpose().mul_mat(q).mul_mat(c),
        None => q.clone(),
    };
    let eig = q_sep.symmetric_part().symmetric_eigen();
    let lmax = eig.max().max(S::zero());
    if eig.min() < -S::lit(1e-10) * S::one().max(lmax) {
        return Err(Error::Structural(format!("quadratic part is not convex (eigenvalue {})", eig.min())));
    }
    let lipschitz = if lmax > S::zero() { lmax } else { S::one() };
    solve_separable(
        &problem.smooth,
        problem.dissipation,
        problem.time,
        problem.scale,
        v_init,
        lipschitz,
        false,
        transform.as_ref(),
        opts,
    )
}

/// Minimizes `g(v) + scale · R(t, v)` for a general convex smooth part,
/// with backtracking on the step size.
pub fn minimize_smooth_composite<S: Real, G: SmoothPart<S> + ?Sized>(
    smooth: &G,
    dissipation: &DissipationModel<S>,
    t: S,
    scale: S,
    v_init: &[S],
    lipschitz_guess: S,
    opts: &SolverOptions<S>,
) -> Result<Solution<S>> {
    let transform = dissipation.separating_transform(v_init.len());
    let l0 = if lipschitz_guess > S::zero() { lipschitz_guess } else { S::one() };
    solve_separable(smooth, dissipation, t, scale, v_init, l0, true, transform.as_ref(), opts)
}

#[allow(clippy::too_many_arguments)]
fn solve_separable<S: Real, G: SmoothPart<S> + ?Sized>(
    smooth: &G,
    dissipation: &DissipationModel<S>,
    t: S,
    scale: S,
    v_init: &[S],
    lipschitz: S,
    backtrack: bool,
    transform: Option<&(Matrix<S>, Matrix<S>)>,
    opts: &SolverOptions<S>,
) -> Result<Solution<S>> {
    match transform {
        None => {
            let start = dissipation.cone.project(v_init);
            fista(smooth, |y, tau| dissipation.prox_separable(t, y, tau * scale), |v| scale * dissipation.eval_r(t, v), start, lipschitz, backtrack, opts)
        }
        Some((d, c)) => {
            let pulled = Pullback { inner: smooth, c };
            let eval = |u: &[S]| scale * dissipation.eval_r(t, &c.mul_vec(u));
            let u0 = d.mul_vec(v_init);
            let sol = fista(&pulled, |y, tau| dissipation.prox_separable(t, y, tau * scale), eval, u0, lipschitz, backtrack, opts)?;
            Ok(Solution { v: c.mul_vec(&sol.v), ..sol })
        }
    }
}

fn fista<S: Real, G: SmoothPart<S> + ?Sized>(
    smooth: &G,
    prox: impl Fn(&[S], S) -> Result<Vec<S>>,
    nonsmooth: impl Fn(&[S]) -> S,
    start: Vec<S>,
    lipschitz: S,
    backtrack: bool,
    opts: &SolverOptions<S>,
) -> Result<Solution<S>> {
    let objective = |v: &[S]| smooth.value(v) + nonsmooth(v);
    let mut l = lipschitz;
    let mut x = start;
    let mut fx = objective(&x);
    let mut y = x.clone();
    let mut theta = S::one();
    let mut residual = S::infinity();
    let forward = |p: &[S], g: &[S], l: S| -> Vec<S> { p.iter().zip(g).map(|(&pi, &gi)| pi - gi / l).collect() };
    // below this the residual is rounding noise of the forward step
    let floor = |p: &[S], g: &[S], l: S| S::epsilon() * S::lit(64.0) * (S::one() + norm(p) + norm(g) / l);
    if !backtrack {
        let g = smooth.gradient(&x);
        let fixed = prox(&forward(&x, &g, l), S::one() / l)?;
        residual = dist(&x, &fixed);
        if !residual.is_finite() {
            return Err(non_finite());
        }
        if residual <= opts.tol.max(floor(&x, &g, l)) {
            return Ok(Solution { v: x, residual, iters: 0 });
        }
    }
    for iter in 0..opts.max_iter {
        let gy = smooth.gradient(&y);
        let mut x_next = prox(&forward(&y, &gy, l), S::one() / l)?;
        if backtrack {
            let fy = smooth.value(&y);
            loop {
                let step: Vec<S> = x_next.iter().zip(&y).map(|(&a, &b)| a - b).collect();
                let model = fy + dot(&gy, &step) + S::lit(0.5) * l * dot(&step, &step);
                let slack = S::epsilon() * S::lit(64.0) * (S::one() + fy.abs());
                if smooth.value(&x_next) <= model + slack || l > S::max_value() / S::lit(1e10) {
                    break;
                }
                l *= S::lit(2.0);
                x_next = prox(&forward(&y, &gy, l), S::one() / l)?;
            }
        }
        let f_next = objective(&x_next);
        if f_next > fx && theta > S::one() {
            // objective went up: drop the momentum and retry from x
            theta = S::one();
            y = x.clone();
            continue;
        }
        let theta_next = (S::one() + (S::one() + S::lit(4.0) * theta * theta).sqrt()) * S::lit(0.5);
        let beta = (theta - S::one()) / theta_next;
        y = x_next.iter().zip(&x).map(|(&a, &b)| a + beta * (a - b)).collect();
        x = x_next;
        fx = f_next;
        theta = theta_next;
        let gx = smooth.gradient(&x);
        let fixed = prox(&forward(&x, &gx, l), S::one() / l)?;
        residual = dist(&x, &fixed);
        if !residual.is_finite() {
            return Err(non_finite());
        }
        if residual <= opts.tol.max(floor(&x, &gx, l)) {
            return Ok(Solution { v: x, residual, iters: iter + 1 });
        }
    }
    Err(Error::numerical(
        format!("proximal gradient did not reach tolerance in {} iterations", opts.max_iter),
        residual.as_f64(),
    ))
}

fn non_finite() -> Error {
    Error::numerical("non-finite gradient or iterate in proximal gradient", f64::NAN)
}
