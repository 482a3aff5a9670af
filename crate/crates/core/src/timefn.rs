//! Piecewise-linear functions of time.
//!
//! Loadings and friction coefficients are stored as breakpoint lists, which
//! keeps them absolutely continuous and makes their integrals exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Piecewise-linear interpolant of `[[t0, y0], [t1, y1], ...]`, extended by
/// constants outside `[t0, t_last]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[S; 2]>", into = "Vec<[S; 2]>")]
#[serde(bound(serialize = "S: Real", deserialize = "S: Real"))]
pub struct PiecewiseLinear<S> {
    points: Vec<[S; 2]>,
}

impl<S: Real> TryFrom<Vec<[S; 2]>> for PiecewiseLinear<S> {
    type Error = Error;

    fn try_from(points: Vec<[S; 2]>) -> Result<Self> {
        Self::new(points)
    }
}

impl<S: Real> From<PiecewiseLinear<S>> for Vec<[S; 2]> {
    fn from(f: PiecewiseLinear<S>) -> Self {
        f.points
    }
}

impl<S: Real> PiecewiseLinear<S> {
    pub fn new(points: Vec<[S; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Structural("time function needs at least one breakpoint".into()));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Structural("non-finite breakpoint in time function".into()));
        }
        if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::Structural("time function breakpoints must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn constant(value: S) -> Self {
        Self { points: vec![[S::zero(), value]] }
    }

    /// `value0 + slope·t` sampled on `[0, horizon]`.
    pub fn affine(value0: S, slope: S, horizon: S) -> Self {
        Self { points: vec![[S::zero(), value0], [horizon, value0 + slope * horizon]] }
    }

    pub fn points(&self) -> &[[S; 2]] {
        &self.points
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = S> + '_ {
        self.points.iter().map(|p| p[0])
    }

    fn segment(&self, t: S) -> Option<usize> {
        let n = self.points.len();
        if n < 2 || t < self.points[0][0] || t > self.points[n - 1][0] {
            return None;
        }
        // last segment whose left end is <= t, clamped so t_last maps to the final piece
        let idx = self.points.partition_point(|p| p[0] <= t);
        Some(idx.saturating_sub(1).min(n - 2))
    }

    pub fn eval(&self, t: S) -> S {
        let n = self.points.len();
        if t <= self.points[0][0] {
            return self.points[0][1];
        }
        if t >= self.points[n - 1][0] {
            return self.points[n - 1][1];
        }
        let i = self.segment(t).expect("t inside breakpoint range");
        let [t0, y0] = self.points[i];
        let [t1, y1] = self.points[i + 1];
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    /// Right derivative; at the final breakpoint the left derivative.
    pub fn derivative(&self, t: S) -> S {
        match self.segment(t) {
            Some(i) => {
                let [t0, y0] = self.points[i];
                let [t1, y1] = self.points[i + 1];
                (y1 - y0) / (t1 - t0)
            }
            None => S::zero(),
        }
    }

    pub fn is_breakpoint(&self, t: S) -> bool {
        self.points.iter().any(|p| p[0] == t)
    }

    /// True when the function has no interior kink, i.e. it is `C^∞` on its
    /// breakpoint range.
    pub fn is_smooth(&self) -> bool {
        let slopes: Vec<S> = self
            .points
            .windows(2)
            .map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]))
            .collect();
        slopes.windows(2).all(|s| (s[1] - s[0]).abs() <= S::epsilon() * (S::one() + s[0].abs()) * S::lit(16.0))
    }

    pub fn is_constant(&self) -> bool {
        self.points.iter().all(|p| p[1] == self.points[0][1])
    }

    /// Minimum over `[a, b]`, attained at an endpoint or a breakpoint.
    pub fn min_on(&self, a: S, b: S) -> S {
        self.sample_extremes(a, b).fold(S::infinity(), S::min)
    }

    pub fn max_on(&self, a: S, b: S) -> S {
        self.sample_extremes(a, b).fold(S::neg_infinity(), S::max)
    }

    fn sample_extremes(&self, a: S, b: S) -> impl Iterator<Item = S> + '_ {
        [a, b]
            .into_iter()
            .chain(self.breakpoints().filter(move |&t| t > a && t < b))
            .map(|t| self.eval(t))
    }

    /// Exact `∫_a^b f`.
    pub fn integral(&self, a: S, b: S) -> S {
        if b < a {
            return -self.integral(b, a);
        }
        let mut knots = vec![a];
        knots.extend(self.breakpoints().filter(|&t| t > a && t < b));
        knots.push(b);
        knots
            .windows(2)
            .map(|w| (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1])) * S::lit(0.5))
            .sum()
    }

    /// Largest `|f'|` over the pieces meeting `[a, b]`.
    pub fn max_abs_slope_on(&self, a: S, b: S) -> S {
        self.points
            .windows(2)
            .filter(|w| w[1][0] > a && w[0][0] < b)
            .map(|w| ((w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).abs())
            .fold(S::zero(), S::max)
    }
}

/// Sorted union of breakpoints of several functions restricted to `(a, b)`.
pub fn merged_breakpoints<'a, S: Real>(
    fns: impl IntoIterator<Item = &'a PiecewiseLinear<S>>,
    a: S,
    b: S,
) -> Vec<S> {
    let mut all: Vec<S> = fns
        .into_iter()
        .flat_map(|f| f.breakpoints().collect::<Vec<_>>())
        .filter(|&t| t > a && t < b)
        .collect();
    all.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    all.dedup();
    all
}
