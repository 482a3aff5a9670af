//! Problem instances and checks of their structural assumptions.

use serde::{Deserialize, Serialize};

use crate::cone::{project_onto_polyhedron, ConeSpec};
use crate::dissipation::DissipationModel;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::kernel::{minimize_composite, CompositeProblem, QuadraticPart, SolverOptions};
use crate::linalg::{dot, norm, FiberMap, Matrix};
use crate::scalar::Real;

/// A complete problem instance: `ε²Mẍ + εVẋ + ∂ᵥR(t, ẋ) + DₓE(t, x) ∋ 0`
/// on `[0, T]`, together with its quasistatic counterpart.
///
/// The velocity cone lives inside [`DissipationModel`]; use [`ModelSpec::cone`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct ModelSpec<S> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub mass: Matrix<S>,
    pub viscosity: Matrix<S>,
    pub shape_map: Matrix<S>,
    pub energy: EnergyModel<S>,
    pub dissipation: DissipationModel<S>,
    pub horizon: S,
}

impl<S: Real> ModelSpec<S> {
    pub fn cone(&self) -> &ConeSpec<S> {
        &self.dissipation.cone
    }

    pub fn shape_dim(&self) -> usize {
        self.shape_map.rows()
    }

    /// Viscous friction present (Bingham-type law).
    pub fn has_viscosity(&self) -> bool {
        self.viscosity.max_abs() > S::zero()
    }

    pub fn eval_e(&self, t: S, x: &[S]) -> S {
        self.energy.eval_e(&self.shape_map, t, x)
    }

    pub fn grad_e(&self, t: S, x: &[S]) -> Vec<S> {
        self.energy.grad_e(&self.shape_map, t, x)
    }

    pub fn dt_e(&self, t: S, x: &[S]) -> S {
        self.energy.dt_e(&self.shape_map, t, x)
    }

    pub fn eval_r(&self, t: S, v: &[S]) -> S {
        self.dissipation.eval_r(t, v)
    }

    /// Every breakpoint of loadings and friction coefficients inside `(0, T)`.
    pub fn breakpoints(&self) -> Vec<S> {
        let mut fns = self.energy.time_functions();
        fns.extend(self.dissipation.coefficient_fns());
        crate::timefn::merged_breakpoints(fns, S::zero(), self.horizon)
    }

    /// Dimension consistency of all operators; the first mismatch found.
    pub fn check_dimensions(&self) -> Result<()> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::Structural("dimension must be positive".into()));
        }
        let square = |m: &Matrix<S>, what: &str| {
            if m.rows() != n || m.cols() != n {
                Err(Error::Structural(format!("{what} is {}×{}, expected {n}×{n}", m.rows(), m.cols())))
            } else {
                Ok(())
            }
        };
        square(&self.mass, "mass")?;
        square(&self.viscosity, "viscosity")?;
        if self.shape_map.cols() != n {
            return Err(Error::Structural(format!("shape map has {} columns, expected {n}", self.shape_map.cols())));
        }
        if self.shape_map.rows() != self.energy.shape_dim() {
            return Err(Error::Structural(format!(
                "shape map has {} rows but the energy acts on {} shape coordinates",
                self.shape_map.rows(),
                self.energy.shape_dim()
            )));
        }
        if let Some(d) = self.dissipation.dim() {
            if d != n {
                return Err(Error::Structural(format!("dissipation addresses {d} coordinates, model has {n}")));
            }
        }
        self.cone().check_dim(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub label: String,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct ValidationReport<S> {
    pub passed: bool,
    /// Extreme eigenvalues `(m, M)` of the mass matrix.
    pub eigen_bounds: (S, S),
    pub violations: Vec<Violation>,
}

/// Lists every violated structural assumption of the model.
pub fn validate_model<S: Real>(spec: &ModelSpec<S>) -> Result<ValidationReport<S>> {
    spec.check_dimensions()?;
    let mut violations = Vec::new();
    let mut push = |label: &str, detail: String, value: Option<S>| {
        violations.push(Violation { label: label.into(), detail, value: value.map(|v| v.as_f64()) });
    };
    let tol = S::lit(1e-12).max(S::epsilon() * S::lit(64.0));
    let finite = spec.mass.is_finite() && spec.viscosity.is_finite() && spec.shape_map.is_finite();
    if !finite {
        push("non-finite operator", "mass, viscosity or shape map has non-finite entries".into(), None);
    }
    let scale = S::one().max(spec.mass.max_abs());
    if !spec.mass.is_symmetric(tol * scale) {
        push("mass not symmetric", "M ≠ Mᵀ".into(), None);
    }
    let eig = spec.mass.symmetric_part().symmetric_eigen();
    let (m_lo, m_hi) = (eig.min(), eig.max());
    if !(m_lo > tol * scale) {
        push("mass not positive definite", format!("smallest eigenvalue {m_lo}"), Some(m_lo));
    }
    let v_eig = spec.viscosity.symmetric_part().symmetric_eigen();
    if v_eig.min() < -tol * S::one().max(spec.viscosity.max_abs()) {
        push("viscosity not positive semidefinite", format!("smallest eigenvalue of (V+Vᵀ)/2 is {}", v_eig.min()), Some(v_eig.min()));
    }
    if spec.shape_map.rank() != spec.shape_map.rows() {
        push("shape map not surjective", format!("rank {} < {}", spec.shape_map.rank(), spec.shape_map.rows()), None);
    }
    // T = 0 is a degenerate but well-posed instance
    if !(spec.horizon >= S::zero()) || !spec.horizon.is_finite() {
        push("horizon negative", format!("T = {}", spec.horizon), Some(spec.horizon));
    }
    for issue in spec.energy.validate()? {
        push("energy", issue, None);
    }
    for issue in spec.dissipation.validate(spec.dimension)? {
        push("dissipation", issue, None);
    }
    Ok(ValidationReport { passed: violations.is_empty(), eigen_bounds: (m_lo, m_hi), violations })
}

/// Euclidean nearest point of the cone.
pub fn project_cone<S: Real>(cone: &ConeSpec<S>, v: &[S]) -> Vec<S> {
    cone.project(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct R5Sample<S> {
    pub z: Vec<S>,
    /// Minimum-norm point of `π_Z⁻¹(z) ∩ K`, absent when that set is empty.
    pub fiber_point: Option<Vec<S>>,
    /// `|x| / |z|` for the fiber point.
    pub ratio: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct R5Report<S> {
    pub samples: Vec<R5Sample<S>>,
    pub max_ratio: S,
    pub ceiling: S,
    pub violated: bool,
}

/// Default ratio above which the shape bound is considered unbounded.
pub const R5_DEFAULT_CEILING: f64 = 1e6;

/// Sample-based check that fibers over nonzero shapes meet `K` at points of
/// norm at most `C_K |z|`.
pub fn check_r5<S: Real>(cone: &ConeSpec<S>, shape_map: &Matrix<S>, samples: &[Vec<S>], ceiling: S) -> Result<R5Report<S>> {
    let fiber = FiberMap::new(shape_map)?;
    let n = shape_map.cols();
    cone.check_dim(n)?;
    let mut out = Vec::with_capacity(samples.len());
    let mut max_ratio = S::zero();
    for z in samples {
        if z.len() != shape_map.rows() {
            return Err(Error::Structural("sample shape has wrong dimension".into()));
        }
        let nz = norm(z);
        if !(nz > S::zero()) {
            return Err(Error::Domain("sample shapes must be nonzero".into()));
        }
        let point = min_norm_fiber_point(cone, &fiber, z)?;
        let ratio = point.as_ref().map(|x| norm(x) / nz);
        if let Some(r) = ratio {
            max_ratio = max_ratio.max(r);
        }
        out.push(R5Sample { z: z.clone(), fiber_point: point, ratio });
    }
    Ok(R5Report { samples: out, max_ratio, ceiling, violated: max_ratio > ceiling })
}

/// `argmin { |x| : π x = z, x ∈ K }`.
pub fn min_norm_fiber_point<S: Real>(cone: &ConeSpec<S>, fiber: &FiberMap<S>, z: &[S]) -> Result<Option<Vec<S>>> {
    let p = fiber.particular(z);
    // p is orthogonal to the kernel, so |p + N c|² = |p|² + |c|²
    match fiber.kernel_dim() {
        0 => Ok(cone.contains(&p).then_some(p)),
        1 => {
            let eta: Vec<S> = (0..p.len()).map(|r| fiber.kernel[(r, 0)]).collect();
            Ok(cone.line_interval(&p, &eta).map(|(lo, hi)| {
                let s = (-dot(&p, &eta)).max(lo).min(hi);
                p.iter().zip(&eta).map(|(&a, &b)| a + s * b).collect()
            }))
        }
        k => {
            let g = cone.inequalities(p.len()).ok_or_else(|| {
                Error::Unsupported("minimum-norm fiber points over ≥2-dimensional kernels need a polyhedral cone".into())
            })?;
            if g.rows() == 0 {
                return Ok(Some(p));
            }
            let gw = g.mul_mat(&fiber.kernel);
            let h: Vec<S> = (0..g.rows()).map(|r| -dot(g.row(r), &p)).collect();
            Ok(project_onto_polyhedron(&vec![S::zero(); k], &gw, &h).map(|c| fiber.point(z, &c)))
        }
    }
}

/// Evenly spread unit shapes: `±1` in one dimension, `count` angles on the
/// circle in two, coordinate and diagonal directions otherwise.
pub fn unit_sphere_samples<S: Real>(z_dim: usize, count: usize) -> Vec<Vec<S>> {
    match z_dim {
        0 => Vec::new(),
        1 => vec![vec![S::one()], vec![-S::one()]],
        2 => (0..count.max(4))
            .map(|k| {
                let th = S::lit(2.0) * S::PI() * S::lit(k as f64) / S::lit(count.max(4) as f64);
                vec![th.cos(), th.sin()]
            })
            .collect(),
        d => {
            let mut out = Vec::new();
            for i in 0..d {
                for s in [S::one(), -S::one()] {
                    let mut e = vec![S::zero(); d];
                    e[i] = s;
                    out.push(e);
                }
            }
            let c = S::one() / S::lit(d as f64).sqrt();
            out.push(vec![c; d]);
            out.push(vec![-c; d]);
            out
        }
    }
}

/// Ratio of inertial to dry-friction forces `m L / (T² F)`.
pub fn froude_number<S: Real>(m_char: S, l_char: S, t_char: S, f_char: S) -> Result<S> {
    for (name, v) in [("mass", m_char), ("length", l_char), ("time", t_char), ("force", f_char)] {
        if !(v > S::zero()) || !v.is_finite() {
            return Err(Error::Domain(format!("characteristic {name} must be positive and finite, got {v}")));
        }
    }
    Ok(m_char * l_char / (t_char * t_char * f_char))
}

/// Distance of `-DₓE(t, x)` from `∂ᵥR(t, 0)`, measured as the norm of the
/// minimizer of `½|v|² + ⟨DₓE, v⟩ + R(t, v)`; zero iff `x` is locally stable.
pub fn stability_defect<S: Real>(spec: &ModelSpec<S>, t: S, x: &[S]) -> Result<S> {
    let n = spec.dimension;
    let problem = CompositeProblem {
        smooth: QuadraticPart { q: Matrix::identity(n), b: spec.grad_e(t, x) },
        dissipation: &spec.dissipation,
        time: t,
        scale: S::one(),
    };
    let sol = minimize_composite(&problem, &vec![S::zero(); n], &SolverOptions::default())?;
    Ok(norm(&sol.v))
}

/// Whether `x` satisfies `-DₓE(t, x) ∈ ∂ᵥR(t, 0)` up to `tol`.
pub fn is_locally_stable<S: Real>(spec: &ModelSpec<S>, t: S, x: &[S], tol: S) -> Result<bool> {
    Ok(stability_defect(spec, t, x)? <= tol)
}
