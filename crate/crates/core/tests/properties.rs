use proptest::prelude::*;

use quake_limit::cone::{ConeSpec, SignConstraint};
use quake_limit::dissipation::{DissipationModel, FrictionStructure};
use quake_limit::gallery::{make_crawler, make_play, CrawlerParams, GaitSpec, LinkKind, PlayParams};
use quake_limit::kernel::{minimize_composite, CompositeProblem, QuadraticPart, SolverOptions};
use quake_limit::linalg::{dist, dot, norm, Matrix};
use quake_limit::quasistatic::{simulate_quasistatic, QuasistaticConfig};
use quake_limit::timefn::PiecewiseLinear;

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 2)
}

fn cones() -> Vec<ConeSpec<f64>> {
    vec![
        ConeSpec::full_space(),
        ConeSpec::sign_constraints(2, &[SignConstraint::NonNegative, SignConstraint::NonNegative]).unwrap(),
        ConeSpec::polyhedral(vec![vec![1.0, 1.0], vec![-0.5, 1.0]]).unwrap(),
        ConeSpec::linear_subspace(vec![vec![1.0, 2.0]]).unwrap(),
    ]
}

fn per_coordinate(cone: ConeSpec<f64>, plus: [f64; 2], minus: [f64; 2]) -> DissipationModel<f64> {
    let c = |v: [f64; 2]| v.iter().map(|&m| PiecewiseLinear::constant(m)).collect::<Vec<_>>();
    DissipationModel::new(cone, FrictionStructure::PerCoordinate { mu_plus: c(plus), mu_minus: c(minus) }).unwrap()
}

fn two_block(k: f64) -> quake_limit::model::ModelSpec<f64> {
    let c = PiecewiseLinear::constant;
    make_crawler(&CrawlerParams {
        masses: vec![1.0, 1.0],
        stiffness: vec![k],
        nu_ext: vec![],
        nu_link: vec![],
        gait: GaitSpec { rest_lengths: vec![c(1.0)], mu_plus: vec![c(1.0); 2], mu_minus: vec![c(1.0); 2], period: 1.0 },
        constraints: vec![],
        link_kind: LinkKind::Duffing { beta: vec![0.3] },
        horizon: 1.0,
    })
    .unwrap()
}

proptest! {
    #[test]
    fn projection_is_nonexpansive_and_idempotent(x in vec2(), y in vec2(), which in 0usize..4) {
        let cone = &cones()[which];
        let (px, py) = (cone.project(&x), cone.project(&y));
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-9);
        prop_assert!(dist(&cone.project(&px), &px) <= 1e-9);
        prop_assert!(cone.contains_with_tol(&px, 1e-9));
    }

    #[test]
    fn projection_variational_inequality(x in vec2(), y in vec2(), which in 0usize..4) {
        let cone = &cones()[which];
        let px = cone.project(&x);
        let w = cone.project(&y);
        let r: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
        let d: Vec<f64> = w.iter().zip(&px).map(|(a, b)| a - b).collect();
        prop_assert!(dot(&r, &d) <= 1e-8 * (1.0 + norm(&x) * norm(&y)));
    }

    #[test]
    fn dissipation_is_sublinear(
        v in vec2(), w in vec2(), lam in 0.0..10.0f64,
        p0 in 0.1..3.0f64, p1 in 0.1..3.0f64, m0 in 0.1..3.0f64, m1 in 0.1..3.0f64,
    ) {
        let r = per_coordinate(ConeSpec::full_space(), [p0, p1], [m0, m1]);
        let scaled: Vec<f64> = v.iter().map(|x| lam * x).collect();
        prop_assert!((r.eval_r(0.0, &scaled) - lam * r.eval_r(0.0, &v)).abs() <= 1e-9 * (1.0 + lam * norm(&v)));
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        prop_assert!(r.eval_r(0.0, &sum) <= r.eval_r(0.0, &v) + r.eval_r(0.0, &w) + 1e-9);
        let rv = r.eval_r(0.0, &v);
        prop_assert!(r.alpha_lower() * norm(&v) <= rv + 1e-9);
        prop_assert!(rv <= r.alpha_upper() * norm(&v) + 1e-9);
    }

    #[test]
    fn time_dependent_bound(v in vec2(), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let mu = PiecewiseLinear::new(vec![[0.0, 1.0], [0.5, 2.0], [1.0, 0.5]]).unwrap();
        let r = DissipationModel::new(
            ConeSpec::full_space(),
            FrictionStructure::PerCoordinate { mu_plus: vec![mu.clone(), mu.clone()], mu_minus: vec![mu.clone(), mu] },
        ).unwrap();
        let (a, b) = if s <= t { (s, t) } else { (t, s) };
        let gap = (r.eval_r(b, &v) - r.eval_r(a, &v)).abs();
        prop_assert!(gap <= r.rho().integral(a, b) * norm(&v) + 1e-9);
    }

    #[test]
    fn kernel_beats_perturbations(
        q00 in 0.5..3.0f64, q11 in 0.5..3.0f64, q01 in -0.4..0.4f64, b in vec2(),
        delta in vec2(), which in 0usize..4, mu in 0.05..2.0f64,
    ) {
        let r = per_coordinate(cones()[which].clone(), [mu, mu], [mu, mu]);
        let q = Matrix::from_rows(vec![vec![q00, q01], vec![q01, q11]]).unwrap();
        let problem = CompositeProblem { smooth: QuadraticPart { q, b }, dissipation: &r, time: 0.0, scale: 1.0 };
        let v = minimize_composite(&problem, &[0.0, 0.0], &SolverOptions::default()).unwrap().v;
        let best = problem.objective(&v);
        for step in [1e-3, 1e-1, 1.0] {
            let w: Vec<f64> = v.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            prop_assert!(best <= problem.objective(&w) + 1e-8);
        }
    }

    #[test]
    fn crawler_energy_is_translation_invariant_and_convex(x in vec2(), y in vec2(), c in -3.0..3.0f64) {
        let m = two_block(4.0);
        let shifted: Vec<f64> = x.iter().map(|a| a + c).collect();
        prop_assert!((m.eval_e(0.3, &x) - m.eval_e(0.3, &shifted)).abs() <= 1e-9 * (1.0 + m.eval_e(0.3, &x)));
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        prop_assert!(m.eval_e(0.3, &mid) <= 0.5 * (m.eval_e(0.3, &x) + m.eval_e(0.3, &y)) + 1e-9);
    }

    #[test]
    fn symmetric_eigenvalues_bound_quadratic_form(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, v in vec2()) {
        let m = Matrix::from_rows(vec![vec![a, b], vec![b, c]]).unwrap();
        let eig = m.symmetric_eigen();
        let nv = dot(&v, &v);
        let qf = m.quad_form(&v);
        prop_assert!(eig.min() * nv <= qf + 1e-9 * (1.0 + nv));
        prop_assert!(qf <= eig.max() * nv + 1e-9 * (1.0 + nv));
    }

    #[test]
    fn play_is_rate_independent(speed in 0.5..4.0f64) {
        // same input path traversed at a different speed gives the same states
        let run = |s: f64| {
            let horizon = 2.0 / s;
            let p = PiecewiseLinear::new(vec![[0.0, 0.0], [1.0 / s, 1.0], [horizon, -0.3]]).unwrap();
            let m = make_play(&PlayParams { k: 1.0, alpha: 0.4, l_rest: 0.0, p, mass: 1.0, viscosity: 0.0, horizon }).unwrap();
            simulate_quasistatic(&m, &QuasistaticConfig::new(0.01 / s, vec![0.0])).unwrap()
        };
        let (a, b) = (run(1.0), run(speed));
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert!((x[0] - y[0]).abs() <= 1e-9);
        }
        prop_assert!((a.total_dissipation() - b.total_dissipation()).abs() <= 1e-9);
    }
}
