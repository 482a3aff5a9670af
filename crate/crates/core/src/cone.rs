//! Closed convex velocity cones and Euclidean projections onto them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, sub, Matrix};
use crate::scalar::Real;

/// Shape of the admissible velocity cone `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub enum ConeKind<S> {
    /// `K = X`
    FullSpace,
    /// `K = {v : ⟨f_j, v⟩ ≥ 0 for all j}` with unit covectors `f_j`.
    Polyhedral { covectors: Vec<Vec<S>> },
    /// `K = span(basis)`
    LinearSubspace { basis: Vec<Vec<S>> },
    /// `K = {λ (1, c + r u) : λ ≥ 0, |u| ≤ 1}`: a cone over a ball of radius
    /// `r` centred at `c` in the hyperplane `v₁ = 1`.
    CircularCone { center: Vec<S>, radius: S },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
#[serde(try_from = "ConeRepr<S>", into = "ConeRepr<S>")]
pub struct ConeSpec<S> {
    pub kind: ConeKind<S>,
    /// Constant of the shape-bound condition, when known.
    pub r5_constant: Option<S>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
struct ConeRepr<S> {
    #[serde(flatten)]
    kind: ConeKind<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r5_constant: Option<S>,
}

impl<S: Real> TryFrom<ConeRepr<S>> for ConeSpec<S> {
    type Error = Error;

    fn try_from(r: ConeRepr<S>) -> Result<Self> {
        let mut cone = match r.kind {
            ConeKind::FullSpace => ConeSpec::full_space(),
            ConeKind::Polyhedral { covectors } => ConeSpec::polyhedral(covectors)?,
            ConeKind::LinearSubspace { basis } => ConeSpec::linear_subspace(basis)?,
            ConeKind::CircularCone { center, radius } => ConeSpec::circular(center, radius)?,
        };
        cone.r5_constant = r.r5_constant;
        Ok(cone)
    }
}

impl<S: Real> From<ConeSpec<S>> for ConeRepr<S> {
    fn from(c: ConeSpec<S>) -> Self {
        ConeRepr { kind: c.kind, r5_constant: c.r5_constant }
    }
}

/// Sign restriction a coordinate-aligned cone places on one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConstraint {
    Free,
    NonNegative,
    NonPositive,
    Zero,
}

impl SignConstraint {
    fn meet(self, other: SignConstraint) -> SignConstraint {
        use SignConstraint::*;
        match (self, other) {
            (Free, c) | (c, Free) => c,
            (Zero, _) | (_, Zero) => Zero,
            (NonNegative, NonPositive) | (NonPositive, NonNegative) => Zero,
            (c, _) => c,
        }
    }

    pub fn clamp<S: Real>(self, x: S) -> S {
        match self {
            SignConstraint::Free => x,
            SignConstraint::NonNegative => x.max(S::zero()),
            SignConstraint::NonPositive => x.min(S::zero()),
            SignConstraint::Zero => S::zero(),
        }
    }
}

impl<S: Real> ConeSpec<S> {
    pub fn full_space() -> Self {
        Self { kind: ConeKind::FullSpace, r5_constant: None }
    }

    pub fn polyhedral(covectors: Vec<Vec<S>>) -> Result<Self> {
        let dim = covectors.first().map_or(0, Vec::len);
        let mut unit = Vec::with_capacity(covectors.len());
        for f in covectors {
            if f.len() != dim {
                return Err(Error::Structural("covectors of different lengths".into()));
            }
            let n = norm(&f);
            if !(n > S::zero()) || !n.is_finite() {
                return Err(Error::Structural("zero or non-finite cone covector".into()));
            }
            unit.push(f.iter().map(|&c| c / n).collect());
        }
        Ok(Self { kind: ConeKind::Polyhedral { covectors: unit }, r5_constant: None })
    }

    pub fn linear_subspace(basis: Vec<Vec<S>>) -> Result<Self> {
        let dim = basis.first().map_or(0, Vec::len);
        if basis.iter().any(|b| b.len() != dim) {
            return Err(Error::Structural("subspace basis vectors of different lengths".into()));
        }
        if !basis.is_empty() && Matrix::from_rows(basis.clone())?.rank() != basis.len() {
            return Err(Error::Structural("subspace basis is linearly dependent".into()));
        }
        Ok(Self { kind: ConeKind::LinearSubspace { basis }, r5_constant: None })
    }

    pub fn circular(center: Vec<S>, radius: S) -> Result<Self> {
        if !(radius >= S::zero()) {
            return Err(Error::Structural("circular cone radius must be nonnegative".into()));
        }
        Ok(Self { kind: ConeKind::CircularCone { center, radius }, r5_constant: None })
    }

    /// Intersection of half-spaces `v_i ≥ 0` / `v_i ≤ 0` chosen per coordinate.
    pub fn sign_constraints(n: usize, signs: &[SignConstraint]) -> Result<Self> {
        let mut covectors = Vec::new();
        for (i, s) in signs.iter().enumerate() {
            let mut e = vec![S::zero(); n];
            e[i] = S::one();
            let neg: Vec<S> = e.iter().map(|&x| -x).collect();
            match s {
                SignConstraint::Free => {}
                SignConstraint::NonNegative => covectors.push(e),
                SignConstraint::NonPositive => covectors.push(neg),
                SignConstraint::Zero => {
                    covectors.push(e);
                    covectors.push(neg);
                }
            }
        }
        if covectors.is_empty() {
            Ok(Self::full_space())
        } else {
            Self::polyhedral(covectors)
        }
    }

    pub fn with_r5_constant(mut self, c: S) -> Self {
        self.r5_constant = Some(c);
        self
    }

    /// Ambient dimension implied by the data, if any.
    pub fn ambient_dim(&self) -> Option<usize> {
        match &self.kind {
            ConeKind::FullSpace => None,
            ConeKind::Polyhedral { covectors } => covectors.first().map(Vec::len),
            ConeKind::LinearSubspace { basis } => basis.first().map(Vec::len),
            ConeKind::CircularCone { center, .. } => Some(center.len() + 1),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.ambient_dim() {
            Some(d) if d != n => Err(Error::Structural(format!("cone lives in dimension {d}, model in {n}"))),
            _ => Ok(()),
        }
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self.kind, ConeKind::FullSpace)
    }

    fn membership_tol(v: &[S]) -> S {
        S::epsilon() * S::lit(256.0) * (S::one() + norm(v))
    }

    pub fn contains(&self, v: &[S]) -> bool {
        self.contains_with_tol(v, Self::membership_tol(v))
    }

    pub fn contains_with_tol(&self, v: &[S], tol: S) -> bool {
        match &self.kind {
            ConeKind::FullSpace => true,
            ConeKind::Polyhedral { covectors } => covectors.iter().all(|f| dot(f, v) >= -tol),
            ConeKind::LinearSubspace { .. } => norm(&sub(v, &self.project(v))) <= tol,
            ConeKind::CircularCone { center, radius } => {
                let lam = v[0];
                if lam < -tol {
                    return false;
                }
                let off: Vec<S> = v[1..].iter().zip(center).map(|(&x, &c)| x - lam * c).collect();
                norm(&off) <= *radius * lam.max(S::zero()) + tol
            }
        }
    }

    /// Euclidean nearest point of the cone.
    pub fn project(&self, v: &[S]) -> Vec<S> {
        match &self.kind {
            ConeKind::FullSpace => v.to_vec(),
            ConeKind::Polyhedral { covectors } => {
                if let Some(signs) = self.coordinate_signs(v.len()) {
                    return v.iter().zip(&signs).map(|(&x, s)| s.clamp(x)).collect();
                }
                let g = Matrix::from_rows(covectors.clone()).expect("validated covectors");
                project_onto_polyhedron(v, &g, &vec![S::zero(); covectors.len()])
                    .expect("a cone is never empty")
            }
            ConeKind::LinearSubspace { basis } => {
                if basis.is_empty() {
                    return vec![S::zero(); v.len()];
                }
                let b = Matrix::from_rows(basis.clone()).expect("validated basis");
                let gram = b.mul_mat(&b.transpose());
                let coef = gram.solve(&b.mul_vec(v)).expect("independent basis");
                b.tr_mul_vec(&coef)
            }
            ConeKind::CircularCone { center, radius } => project_circular(v, center, *radius),
        }
    }

    /// Per-coordinate sign pattern when the cone is an intersection of
    /// coordinate half-spaces (or a coordinate subspace), else `None`.
    pub fn coordinate_signs(&self, n: usize) -> Option<Vec<SignConstraint>> {
        let mut signs = vec![SignConstraint::Free; n];
        match &self.kind {
            ConeKind::FullSpace => Some(signs),
            ConeKind::Polyhedral { covectors } => {
                for f in covectors {
                    let (i, s) = coordinate_axis(f)?;
                    let c = if s > S::zero() { SignConstraint::NonNegative } else { SignConstraint::NonPositive };
                    signs[i] = signs[i].meet(c);
                }
                Some(signs)
            }
            ConeKind::LinearSubspace { basis } => {
                let mut spanned = vec![false; n];
                for b in basis {
                    let (i, _) = coordinate_axis(b)?;
                    spanned[i] = true;
                }
                for (s, span) in signs.iter_mut().zip(spanned) {
                    if !span {
                        *s = SignConstraint::Zero;
                    }
                }
                Some(signs)
            }
            ConeKind::CircularCone { .. } => None,
        }
    }

    /// Linear inequality description `{v : G v ≥ 0}` for polyhedral-type cones.
    pub fn inequalities(&self, n: usize) -> Option<Matrix<S>> {
        match &self.kind {
            ConeKind::FullSpace => Some(Matrix::zeros(0, n)),
            ConeKind::Polyhedral { covectors } => Matrix::from_rows(covectors.clone()).ok(),
            ConeKind::LinearSubspace { basis } => {
                // orthogonal complement rows, each used with both signs
                let mut rows = Vec::new();
                let mut q = Matrix::identity(n);
                if !basis.is_empty() {
                    let b = Matrix::from_rows(basis.clone()).ok()?;
                    let proj = b.transpose().mul_mat(&b.mul_mat(&b.transpose()).inverse()?).mul_mat(&b);
                    q = Matrix::identity(n).add(&proj.scale(-S::one()));
                }
                let eig = q.symmetric_eigen();
                for (c, &lam) in eig.values.iter().enumerate() {
                    if lam > S::lit(0.5) {
                        let col: Vec<S> = (0..n).map(|r| eig.vectors[(r, c)]).collect();
                        rows.push(col.iter().map(|&x| -x).collect());
                        rows.push(col);
                    }
                }
                Some(if rows.is_empty() { Matrix::zeros(0, n) } else { Matrix::from_rows(rows).ok()? })
            }
            ConeKind::CircularCone { .. } => None,
        }
    }

    /// The set `{s : p + s d ∈ K}` as an interval, or `None` when empty.
    pub fn line_interval(&self, p: &[S], d: &[S]) -> Option<(S, S)> {
        let n = p.len();
        if let Some(g) = self.inequalities(n) {
            let mut lo = S::neg_infinity();
            let mut hi = S::infinity();
            let tol = Self::membership_tol(p) + Self::membership_tol(d);
            for r in 0..g.rows() {
                let a = dot(g.row(r), p);
                let b = dot(g.row(r), d);
                if b.abs() <= tol * S::lit(1e-3) {
                    if a < -tol {
                        return None;
                    }
                } else if b > S::zero() {
                    lo = lo.max(-a / b);
                } else {
                    hi = hi.min(-a / b);
                }
            }
            return if lo <= hi { Some((lo, hi)) } else { None };
        }
        // Non-polyhedral: the feasible set of a convex condition along a line is an
        // interval; locate it from the sign changes of its defining quadratic.
        let ConeKind::CircularCone { center, radius } = &self.kind else { unreachable!() };
        let r2 = *radius * *radius;
        let pr: Vec<S> = p[1..].iter().zip(center).map(|(&x, &c)| x - p[0] * c).collect();
        let dr: Vec<S> = d[1..].iter().zip(center).map(|(&x, &c)| x - d[0] * c).collect();
        let qa = dot(&dr, &dr) - r2 * d[0] * d[0];
        let qb = S::lit(2.0) * (dot(&pr, &dr) - r2 * p[0] * d[0]);
        let qc = dot(&pr, &pr) - r2 * p[0] * p[0];
        let mut cuts = Vec::new();
        if d[0] != S::zero() {
            cuts.push(-p[0] / d[0]);
        }
        let scale = qa.abs().max(qb.abs()).max(qc.abs()).max(S::min_positive_value());
        if qa.abs() <= S::epsilon() * scale * S::lit(16.0) {
            if qb != S::zero() {
                cuts.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - S::lit(4.0) * qa * qc;
            if disc >= S::zero() {
                let sq = disc.sqrt();
                // numerically stable pair of roots
                let q = -S::lit(0.5) * (qb + qb.signum() * sq);
                if q != S::zero() {
                    cuts.push(q / qa);
                    cuts.push(qc / q);
                } else {
                    cuts.push(S::zero());
                }
            }
        }
        cuts.retain(|c| c.is_finite());
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
        let point = |s: S| {
            let mut x = p.to_vec();
            axpy(s, d, &mut x);
            x
        };
        let inside = |s: S| {
            let x = point(s);
            self.contains_with_tol(&x, Self::membership_tol(&x) * S::lit(1e3))
        };
        // probe every segment between consecutive cuts plus the cuts themselves
        let mut probes: Vec<(S, S, S)> = Vec::new();
        let big = S::lit(1e6) * (S::one() + cuts.iter().fold(S::zero(), |m, c| m.max(c.abs())));
        let mut edges = vec![S::neg_infinity()];
        edges.extend(cuts.iter().copied());
        edges.push(S::infinity());
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = match (a.is_finite(), b.is_finite()) {
                (true, true) => (a + b) * S::lit(0.5),
                (true, false) => a + big,
                (false, true) => b - big,
                (false, false) => S::zero(),
            };
            probes.push((a, b, mid));
        }
        let mut lo = S::infinity();
        let mut hi = S::neg_infinity();
        for (a, b, mid) in probes {
            if inside(mid) {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        for &c in &cuts {
            if inside(c) {
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }
}

fn coordinate_axis<S: Real>(f: &[S]) -> Option<(usize, S)> {
    let mut found = None;
    for (i, &c) in f.iter().enumerate() {
        if c != S::zero() {
            if found.is_some() {
                return None;
            }
            found = Some((i, c));
        }
    }
    found
}

/// Euclidean projection of `point` onto `{x : G x ≥ h}` by enumerating
/// active sets; `None` if the polyhedron is empty.
///
/// Exact up to rounding; intended for the handful of constraints that the
/// models in this crate produce.
pub fn project_onto_polyhedron<S: Real>(point: &[S], g: &Matrix<S>, h: &[S]) -> Option<Vec<S>> {
    let m = g.rows();
    let n = point.len();
    let tol = S::epsilon() * S::lit(1e4) * (S::one() + norm(point) + crate::linalg::norm_inf(h));
    let feasible = |x: &[S]| (0..m).all(|r| dot(g.row(r), x) - h[r] >= -tol);
    if feasible(point) {
        return Some(point.to_vec());
    }
    if m > 20 {
        return dykstra_polyhedron(point, g, h);
    }
    let max_active = m.min(n);
    let mut subset: Vec<usize> = Vec::new();
    for size in 1..=max_active {
        subset.clear();
        subset.extend(0..size);
        loop {
            let rows: Vec<Vec<S>> = subset.iter().map(|&r| g.row(r).to_vec()).collect();
            let ga = Matrix::from_rows(rows).expect("rows of equal length");
            let gram = ga.mul_mat(&ga.transpose());
            let rhs: Vec<S> = subset.iter().map(|&r| h[r] - dot(g.row(r), point)).collect();
            if let Some(lambda) = gram.solve(&rhs) {
                if lambda.iter().all(|&l| l >= -tol) {
                    let mut x = point.to_vec();
                    axpy(S::one(), &ga.tr_mul_vec(&lambda), &mut x);
                    if feasible(&x) {
                        return Some(x);
                    }
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    None
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < m - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn dykstra_polyhedron<S: Real>(point: &[S], g: &Matrix<S>, h: &[S]) -> Option<Vec<S>> {
    let m = g.rows();
    let mut x = point.to_vec();
    let mut incr = vec![vec![S::zero(); point.len()]; m];
    for _ in 0..200_000 {
        let prev = x.clone();
        for r in 0..m {
            let mut y = x.clone();
            axpy(S::one(), &incr[r], &mut y);
            let f = g.row(r);
            let slack = dot(f, &y) - h[r];
            let mut p = y.clone();
            if slack < S::zero() {
                axpy(-slack / dot(f, f), f, &mut p);
            }
            incr[r] = sub(&y, &p);
            x = p;
        }
        if crate::linalg::dist(&x, &prev) <= S::epsilon() * (S::one() + norm(&x)) {
            break;
        }
    }
    let tol = S::lit(1e-8) * (S::one() + norm(point));
    (0..m).all(|r| dot(g.row(r), &x) - h[r] >= -tol).then_some(x)
}

fn project_onto_ball<S: Real>(y: &[S], center: &[S], radius: S) -> Vec<S> {
    let off = sub(y, center);
    let d = norm(&off);
    if d <= radius {
        return y.to_vec();
    }
    let mut p = center.to_vec();
    axpy(radius / d, &off, &mut p);
    p
}

/// Projection onto the cone over a ball: one-dimensional convex problem in the
/// axial coordinate, solved by bisection on the sign of its derivative.
fn project_circular<S: Real>(v: &[S], center: &[S], radius: S) -> Vec<S> {
    let rest = &v[1..];
    let slope = |lam: S| {
        let off: Vec<S> = rest.iter().zip(center).map(|(&x, &c)| x - lam * c).collect();
        let d = norm(&off);
        let gap = (d - radius * lam).max(S::zero());
        let dd = if d > S::zero() { -dot(&off, center) / d } else { norm(center) };
        S::lit(2.0) * (lam - v[0]) + S::lit(2.0) * gap * (dd - radius)
    };
    let mut lo = S::zero();
    let mut hi = norm(v).max(S::min_positive_value());
    let lam = if slope(lo) >= S::zero() {
        S::zero()
    } else {
        while slope(hi) < S::zero() {
            hi *= S::lit(2.0);
        }
        for _ in 0..200 {
            let mid = (lo + hi) * S::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) < S::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * S::lit(0.5)
    };
    let c: Vec<S> = center.iter().map(|&c| lam * c).collect();
    let mut out = vec![lam];
    out.extend(project_onto_ball(rest, &c, radius * lam));
    out
}
