//! Ready-made models: play operator, block crawlers, rheological chain,
//! planar friction, and a cone violating the shape bound.

use serde::{Deserialize, Serialize};

use crate::cone::{ConeSpec, SignConstraint};
use crate::dissipation::{DissipationModel, FrictionStructure};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ModelSpec;
use crate::scalar::Real;
use crate::timefn::PiecewiseLinear;

/// Mass on a spring dragged by `p(t)` against dry friction:
/// `E = k/2 (x - p(t) + L_rest)²`, `R = α|v|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct PlayParams<S> {
    pub k: S,
    pub alpha: S,
    #[serde(default = "S::zero")]
    pub l_rest: S,
    pub p: PiecewiseLinear<S>,
    #[serde(default = "S::one")]
    pub mass: S,
    #[serde(default = "S::zero")]
    pub viscosity: S,
    pub horizon: S,
}

pub fn make_play<S: Real>(params: &PlayParams<S>) -> Result<ModelSpec<S>> {
    positive(&[("k", params.k), ("alpha", params.alpha), ("mass", params.mass)])?;
    nonnegative(&[("viscosity", params.viscosity)])?;
    // effective input u(t) = p(t) - L_rest
    let input = shift(&params.p, -params.l_rest);
    Ok(ModelSpec {
        name: Some("play".into()),
        dimension: 1,
        mass: Matrix::from_diag(&[params.mass]),
        viscosity: Matrix::from_diag(&[params.viscosity]),
        shape_map: Matrix::identity(1),
        energy: EnergyModel::quadratic(Matrix::from_diag(&[params.k]), vec![input]),
        dissipation: DissipationModel::symmetric_constant(1, params.alpha),
        horizon: params.horizon,
    })
}

/// Bingham-type law: dry friction plus a viscous term.
pub fn is_bingham<S: Real>(model: &ModelSpec<S>) -> bool {
    model.has_viscosity()
}

/// Actuation of a crawler: rest lengths of the links and friction
/// coefficients of the blocks, sharing breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct GaitSpec<S> {
    pub rest_lengths: Vec<PiecewiseLinear<S>>,
    pub mu_plus: Vec<PiecewiseLinear<S>>,
    pub mu_minus: Vec<PiecewiseLinear<S>>,
    pub period: S,
}

/// Directional anchoring of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockConstraint {
    /// Block may only move forward (`vᵢ ≥ 0`).
    #[serde(default)]
    pub forward_only: bool,
    /// Block may only move backward (`vᵢ ≤ 0`).
    #[serde(default)]
    pub backward_only: bool,
}

impl BlockConstraint {
    fn sign(self) -> SignConstraint {
        match (self.forward_only, self.backward_only) {
            (false, false) => SignConstraint::Free,
            (true, false) => SignConstraint::NonNegative,
            (false, true) => SignConstraint::NonPositive,
            // both directions blocked: anchored
            (true, true) => SignConstraint::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub enum LinkKind<S> {
    Hooke,
    Duffing { beta: Vec<S> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct CrawlerParams<S> {
    pub masses: Vec<S>,
    pub stiffness: Vec<S>,
    /// External viscosity per block.
    #[serde(default)]
    pub nu_ext: Vec<S>,
    /// Viscosity per link.
    #[serde(default)]
    pub nu_link: Vec<S>,
    pub gait: GaitSpec<S>,
    #[serde(default)]
    pub constraints: Vec<BlockConstraint>,
    #[serde(default = "hooke")]
    pub link_kind: LinkKind<S>,
    pub horizon: S,
}

fn hooke<S>() -> LinkKind<S> {
    LinkKind::Hooke
}

/// `N` blocks on a line joined by `N-1` springs, shape `zᵢ = x_{i+1} - xᵢ`.
pub fn make_crawler<S: Real>(params: &CrawlerParams<S>) -> Result<ModelSpec<S>> {
    let n = params.masses.len();
    if n < 2 {
        return Err(Error::Domain("a crawler needs at least two blocks".into()));
    }
    let links = n - 1;
    let gait = &params.gait;
    let lens = [
        ("stiffness", params.stiffness.len(), links),
        ("rest_lengths", gait.rest_lengths.len(), links),
        ("mu_plus", gait.mu_plus.len(), n),
        ("mu_minus", gait.mu_minus.len(), n),
    ];
    for (what, got, want) in lens {
        if got != want {
            return Err(Error::Structural(format!("{what} has {got} entries, expected {want}")));
        }
    }
    let nu_ext = or_zeros(&params.nu_ext, n, "nu_ext")?;
    let nu_link = or_zeros(&params.nu_link, links, "nu_link")?;
    positive(&params.masses.iter().map(|&m| ("mass", m)).collect::<Vec<_>>())?;
    positive(&params.stiffness.iter().map(|&k| ("stiffness", k)).collect::<Vec<_>>())?;
    nonnegative(&nu_ext.iter().chain(&nu_link).map(|&v| ("viscosity", v)).collect::<Vec<_>>())?;

    let mut shape = Matrix::zeros(links, n);
    for i in 0..links {
        shape[(i, i)] = -S::one();
        shape[(i, i + 1)] = S::one();
    }
    // V_link = Dᵀ diag(ν) D, tridiagonal
    let v_link = shape.transpose().mul_mat(&Matrix::from_diag(&nu_link)).mul_mat(&shape);
    let viscosity = v_link.add(&Matrix::from_diag(&nu_ext));

    let cone = if params.constraints.is_empty() {
        ConeSpec::full_space()
    } else {
        if params.constraints.len() != n {
            return Err(Error::Structural(format!("constraints has {} entries, expected {n}", params.constraints.len())));
        }
        let signs: Vec<SignConstraint> = params.constraints.iter().map(|c| c.sign()).collect();
        if signs.iter().all(|s| *s == SignConstraint::Free) {
            ConeSpec::full_space()
        } else {
            ConeSpec::sign_constraints(n, &signs)?
        }
    };
    let dissipation = DissipationModel::new(
        cone,
        FrictionStructure::PerCoordinate { mu_plus: gait.mu_plus.clone(), mu_minus: gait.mu_minus.clone() },
    )?;
    let energy = match &params.link_kind {
        LinkKind::Hooke => EnergyModel::quadratic(Matrix::from_diag(&params.stiffness), gait.rest_lengths.clone()),
        LinkKind::Duffing { beta } => {
            if beta.len() != links {
                return Err(Error::Structural(format!("beta has {} entries, expected {links}", beta.len())));
            }
            nonnegative(&beta.iter().map(|&b| ("beta", b)).collect::<Vec<_>>())?;
            EnergyModel::duffing(params.stiffness.clone(), beta.clone(), gait.rest_lengths.clone())
        }
    };
    Ok(ModelSpec {
        name: Some(format!("crawler{n}")),
        dimension: n,
        mass: Matrix::from_diag(&params.masses),
        viscosity,
        shape_map: shape,
        energy,
        dissipation,
        horizon: params.horizon,
    })
}

/// Chain of masses with a grounded spring and St-Venant element on the
/// first mass, springs and friction elements between neighbours, and an
/// external force `F(t)` on the last mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct RheologicalParams<S> {
    pub masses: Vec<S>,
    pub stiffness: Vec<S>,
    pub thresholds: Vec<S>,
    pub force: PiecewiseLinear<S>,
    pub horizon: S,
}

/// `E = F(t) x_N + k₁/2 x₁² + Σ kᵢ/2 (xᵢ - xᵢ₋₁)²`,
/// `R = α₁|v₁| + Σ αᵢ|vᵢ - vᵢ₋₁|`.
pub fn make_rheological<S: Real>(params: &RheologicalParams<S>) -> Result<ModelSpec<S>> {
    let n = params.masses.len();
    if n == 0 {
        return Err(Error::Domain("the chain needs at least one mass".into()));
    }
    if params.stiffness.len() != n || params.thresholds.len() != n {
        return Err(Error::Structural("stiffness and thresholds need one entry per mass".into()));
    }
    positive(&params.masses.iter().chain(&params.stiffness).chain(&params.thresholds).map(|&v| ("parameter", v)).collect::<Vec<_>>())?;
    let mut d = Matrix::identity(n);
    for i in 1..n {
        d[(i, i - 1)] = -S::one();
    }
    let a = d.transpose().mul_mat(&Matrix::from_diag(&params.stiffness)).mul_mat(&d);
    let zero = PiecewiseLinear::constant(S::zero());
    let mut force = vec![zero.clone(); n];
    force[n - 1] = params.force.clone();
    let alphas: Vec<PiecewiseLinear<S>> = params.thresholds.iter().map(|&a| PiecewiseLinear::constant(a)).collect();
    let dissipation = DissipationModel::new(
        ConeSpec::full_space(),
        FrictionStructure::PerDifference { mu_plus: alphas.clone(), mu_minus: alphas },
    )?;
    Ok(ModelSpec {
        name: Some(format!("rheological{n}")),
        dimension: n,
        mass: Matrix::from_diag(&params.masses),
        viscosity: Matrix::zeros(n, n),
        shape_map: Matrix::identity(n),
        energy: EnergyModel::affine_forced(a, vec![zero; n], force),
        dissipation,
        horizon: params.horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub enum PlanarFriction<S> {
    /// `R = μ|v|` on the whole plane.
    Isotropic { mu: S },
    /// Only `v₁ ≥ 0` allowed.
    ForwardCone { mu: S },
    /// Only `v₂ = 0` allowed.
    LineCone { mu: S },
    /// Only `v₁ ≥ 0, v₂ = 0` allowed.
    RayCone { mu: S },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct PlanarParams<S> {
    pub k: S,
    /// Two coordinate paths of the pulling point.
    pub p: Vec<PiecewiseLinear<S>>,
    pub friction: PlanarFriction<S>,
    #[serde(default = "S::one")]
    pub mass: S,
    #[serde(default = "S::zero")]
    pub viscosity: S,
    pub horizon: S,
}

/// Point on a plane pulled through a spring, `E = k/2 |p(t) - x|²`.
pub fn make_planar<S: Real>(params: &PlanarParams<S>) -> Result<ModelSpec<S>> {
    if params.p.len() != 2 {
        return Err(Error::Structural("planar path needs two coordinates".into()));
    }
    positive(&[("k", params.k), ("mass", params.mass)])?;
    nonnegative(&[("viscosity", params.viscosity)])?;
    let (o, i) = (S::zero(), S::one());
    let (mu, cone) = match params.friction {
        PlanarFriction::Isotropic { mu } => (mu, ConeSpec::full_space()),
        PlanarFriction::ForwardCone { mu } => (mu, ConeSpec::polyhedral(vec![vec![i, o]])?),
        PlanarFriction::LineCone { mu } => (mu, ConeSpec::linear_subspace(vec![vec![i, o]])?),
        PlanarFriction::RayCone { mu } => (mu, ConeSpec::polyhedral(vec![vec![i, o], vec![o, i], vec![o, -i]])?),
    };
    positive(&[("mu", mu)])?;
    let dissipation = DissipationModel::new(cone, FrictionStructure::Isotropic { mu: PiecewiseLinear::constant(mu) })?;
    Ok(ModelSpec {
        name: Some("planar".into()),
        dimension: 2,
        mass: Matrix::from_diag(&[params.mass, params.mass]),
        viscosity: Matrix::from_diag(&[params.viscosity, params.viscosity]),
        shape_map: Matrix::identity(2),
        energy: EnergyModel::quadratic(Matrix::from_diag(&[params.k, params.k]), params.p.clone()),
        dissipation,
        horizon: params.horizon,
    })
}

/// `K = {λ(1, a, b) : λ ≥ 0, a² + (b-1)² ≤ 1}` in `ℝ³` with `π_Z(x) = (x₂, x₃)`.
pub fn make_r5_counterexample<S: Real>() -> (ConeSpec<S>, Matrix<S>) {
    let (o, i) = (S::zero(), S::one());
    let cone = ConeSpec::circular(vec![o, i], i).expect("valid circular cone");
    let shape = Matrix::from_rows(vec![vec![o, i, o], vec![o, o, i]]).expect("2×3 map");
    (cone, shape)
}

/// `M = 1`, `V = 0`, `R = |v|`, `E = ½(x - t - 1)²`, started from `x₀ = 0`
/// with velocity `2`: the dynamic solution is `t + ε sin(t/ε)` and the
/// quasistatic one is `t`.
pub fn canonical_model<S: Real>(horizon: S) -> ModelSpec<S> {
    let span = horizon.max(S::one());
    ModelSpec {
        name: Some("canonical".into()),
        dimension: 1,
        mass: Matrix::identity(1),
        viscosity: Matrix::zeros(1, 1),
        shape_map: Matrix::identity(1),
        energy: EnergyModel::quadratic(Matrix::identity(1), vec![PiecewiseLinear::affine(S::one(), S::one(), span)]),
        dissipation: DissipationModel::symmetric_constant(1, S::one()),
        horizon,
    }
}

pub const CANONICAL_X0: f64 = 0.0;
pub const CANONICAL_V0: f64 = 2.0;

/// Two-block inching gait over one unit period: the link stretches from 1
/// to 1.5 while the rear block grips (μ = 2 against 0.5), holds while the
/// grips swap, contracts back to 1 while the front grips, and holds while
/// they swap back. Link stiffness 10, unit masses, no viscosity.
pub fn inchworm_gait<S: Real>() -> GaitSpec<S> {
    let pl = |pts: &[[f64; 2]]| PiecewiseLinear::new(pts.iter().map(|p| [S::lit(p[0]), S::lit(p[1])]).collect()).expect("sorted");
    let length = pl(&[[0.0, 1.0], [0.4, 1.5], [0.5, 1.5], [0.9, 1.0], [1.0, 1.0]]);
    let rear = pl(&[[0.0, 2.0], [0.4, 2.0], [0.5, 0.5], [0.9, 0.5], [1.0, 2.0]]);
    let front = pl(&[[0.0, 0.5], [0.4, 0.5], [0.5, 2.0], [0.9, 2.0], [1.0, 0.5]]);
    GaitSpec {
        rest_lengths: vec![length],
        mu_plus: vec![rear.clone(), front.clone()],
        mu_minus: vec![rear, front],
        period: S::one(),
    }
}

pub fn inchworm_params<S: Real>() -> CrawlerParams<S> {
    CrawlerParams {
        masses: vec![S::one(); 2],
        stiffness: vec![S::lit(10.0)],
        nu_ext: vec![],
        nu_link: vec![],
        gait: inchworm_gait(),
        constraints: vec![],
        link_kind: LinkKind::Hooke,
        horizon: S::one(),
    }
}

/// Rest configuration of the inchworm: blocks at 0 and 1.
pub fn inchworm_start<S: Real>() -> Vec<S> {
    vec![S::zero(), S::one()]
}

fn shift<S: Real>(f: &PiecewiseLinear<S>, c: S) -> PiecewiseLinear<S> {
    PiecewiseLinear::new(f.points().iter().map(|p| [p[0], p[1] + c]).collect()).expect("same breakpoints")
}

fn or_zeros<S: Real>(v: &[S], n: usize, what: &str) -> Result<Vec<S>> {
    match v.len() {
        0 => Ok(vec![S::zero(); n]),
        l if l == n => Ok(v.to_vec()),
        l => Err(Error::Structural(format!("{what} has {l} entries, expected {n}"))),
    }
}

fn positive<S: Real>(vals: &[(&str, S)]) -> Result<()> {
    match vals.iter().find(|(_, v)| !(*v > S::zero()) || !v.is_finite()) {
        Some((name, v)) => Err(Error::Domain(format!("{name} must be positive, got {v}"))),
        None => Ok(()),
    }
}

fn nonnegative<S: Real>(vals: &[(&str, S)]) -> Result<()> {
    match vals.iter().find(|(_, v)| !(*v >= S::zero()) || !v.is_finite()) {
        Some((name, v)) => Err(Error::Domain(format!("{name} must be nonnegative, got {v}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    fn constant_gait(n: usize) -> GaitSpec<f64> {
        GaitSpec {
            rest_lengths: vec![PiecewiseLinear::constant(1.0); n - 1],
            mu_plus: vec![PiecewiseLinear::constant(1.0); n],
            mu_minus: vec![PiecewiseLinear::constant(1.0); n],
            period: 1.0,
        }
    }

    fn crawler(n: usize) -> CrawlerParams<f64> {
        CrawlerParams {
            masses: vec![1.0; n],
            stiffness: vec![1.0; n - 1],
            nu_ext: vec![],
            nu_link: vec![],
            gait: constant_gait(n),
            constraints: vec![],
            link_kind: LinkKind::Hooke,
            horizon: 1.0,
        }
    }

    #[test]
    fn crawler_shape_map() {
        let m = make_crawler(&crawler(3)).unwrap();
        assert_eq!(m.shape_map.to_rows(), vec![vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0]]);
        assert!(validate_model(&m).unwrap().passed);
    }

    #[test]
    fn crawler_link_viscosity_is_tridiagonal() {
        let mut p = crawler(3);
        p.nu_link = vec![2.0, 3.0];
        let v = make_crawler(&p).unwrap().viscosity;
        assert_eq!(v.diagonal(), vec![2.0, 5.0, 3.0]);
        assert_eq!(v[(0, 1)], -2.0);
        assert_eq!(v[(1, 2)], -3.0);
        assert_eq!(v[(0, 2)], 0.0);
    }

    #[test]
    fn forward_flags_give_orthant() {
        let mut p = crawler(2);
        p.constraints = vec![BlockConstraint { forward_only: true, backward_only: false }; 2];
        let m = make_crawler(&p).unwrap();
        assert!(m.cone().contains(&[1.0, 0.0]));
        assert!(!m.cone().contains(&[-1.0, 0.0]));
        p.constraints[0].backward_only = true;
        let anchored = make_crawler(&p).unwrap();
        assert!(!anchored.cone().contains(&[1.0, 0.0]));
    }

    #[test]
    fn play_shift_and_bingham_flag() {
        let p = PlayParams { k: 1.0f64, alpha: 0.5, l_rest: 0.3, p: PiecewiseLinear::affine(0.0, 1.0, 1.0), mass: 1.0, viscosity: 0.0, horizon: 1.0 };
        let m = make_play(&p).unwrap();
        // E = ½(x - p + L)² vanishes at x = p - L
        assert!(m.eval_e(0.5, &[0.2]).abs() < 1e-15);
        assert!(!is_bingham(&m));
        let m = make_play(&PlayParams { viscosity: 0.1, ..p }).unwrap();
        assert!(is_bingham(&m));
    }

    #[test]
    fn rheological_terms() {
        let p = RheologicalParams {
            masses: vec![1.0f64; 3],
            stiffness: vec![1.0, 2.0, 3.0],
            thresholds: vec![0.5, 0.6, 0.7],
            force: PiecewiseLinear::affine(0.0, 1.0, 1.0),
            horizon: 1.0,
        };
        let m = make_rheological(&p).unwrap();
        let x = [0.1, 0.3, -0.2];
        let want_e = 0.5 * x[2] + 0.5 * (1.0 * 0.01 + 2.0 * 0.04 + 3.0 * 0.25);
        assert!((m.eval_e(0.5, &x) - want_e).abs() < 1e-14, "{} vs {want_e}", m.eval_e(0.5, &x));
        let v = [1.0, -1.0, 2.0];
        let want_r = 0.5 * 1.0 + 0.6 * 2.0 + 0.7 * 3.0;
        assert!((m.eval_r(0.0, &v) - want_r).abs() < 1e-14);
        assert!(validate_model(&m).unwrap().passed);
    }

    #[test]
    fn planar_cones() {
        let path = vec![PiecewiseLinear::constant(0.0f64); 2];
        let mk = |friction| make_planar(&PlanarParams { k: 1.0, p: path.clone(), friction, mass: 1.0, viscosity: 0.0, horizon: 1.0 }).unwrap();
        let iso = mk(PlanarFriction::Isotropic { mu: 1.0 });
        assert!((iso.eval_r(0.0, &[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let fwd = mk(PlanarFriction::ForwardCone { mu: 1.0 });
        assert!(fwd.eval_r(0.0, &[-1e-3, 0.0]).is_infinite());
        assert_eq!(fwd.eval_r(0.0, &[0.0, 1.0]), 1.0);
        let line = mk(PlanarFriction::LineCone { mu: 1.0 });
        assert!(line.eval_r(0.0, &[1.0, 0.1]).is_infinite());
        assert_eq!(line.eval_r(0.0, &[-2.0, 0.0]), 2.0);
        let ray = mk(PlanarFriction::RayCone { mu: 1.0 });
        assert!(ray.eval_r(0.0, &[-2.0, 0.0]).is_infinite());
    }

    #[test]
    fn counterexample_fiber_membership() {
        let (cone, _) = make_r5_counterexample::<f64>();
        let th = 0.3f64;
        let lam = 1.0 / (2.0 * th.sin());
        assert!(cone.contains(&[lam * 1.0001, th.cos(), th.sin()]));
        assert!(!cone.contains(&[lam * 0.99, th.cos(), th.sin()]));
    }

    #[test]
    fn gallery_models_validate() {
        assert!(validate_model(&canonical_model(1.0f64)).unwrap().passed);
        assert!(validate_model(&make_crawler(&inchworm_params::<f64>()).unwrap()).unwrap().passed);
    }
}
