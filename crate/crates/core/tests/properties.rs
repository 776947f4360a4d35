mod common;

use doublewell::dual::{cardano_complex_roots, solve_dual_cardano, solve_dual_trig};
use doublewell::oracle::{bracket_dual_roots, finite_difference_check, sample_saddle_directions};
use doublewell::reduction::pseudo_inverse;
use doublewell::{
    classify_regime, hessian_inertia, lift_solution, perturb_solve, perturbation_residual,
    perturbation_residual_tolerance, reduce, solve, solve_general, Classification, GeneralProblemSpec, Inertia,
    PerturbOptions, ProblemSpec, RegimeTag,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;

use common::{mixed_specs, random_spec, rng, Target};

fn force(dir: &[f64], scale: f64) -> Vec<f64> {
    let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    dir.iter().map(|v| v / len * scale).collect()
}

/// (α, λ, direction, |f|²/T) with the ratio away from the degenerate band.
fn spec_strategy(ratio: std::ops::Range<f64>) -> impl Strategy<Value = ProblemSpec> {
    (
        -1.0f64..1.0,
        -1.0f64..0.7,
        prop::collection::vec(-1.0f64..1.0, 1..=4).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-2)),
        ratio,
    )
        .prop_map(|(la, ll, dir, ratio)| {
            let (alpha, lambda) = (10f64.powf(la), 10f64.powf(ll));
            let t = 8.0 * alpha * alpha * lambda.powi(3) / 27.0;
            ProblemSpec::new(alpha, lambda, force(&dir, (ratio * t).sqrt())).unwrap()
        })
}

fn any_regime() -> impl Strategy<Value = ProblemSpec> {
    prop_oneof![spec_strategy(0.01..0.99), spec_strategy(1.01..20.0)]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn eigen_inertia(h: DMatrix<f64>) -> Inertia {
    let scale = h.abs().max().max(1.0);
    let mut out = Inertia { negative: 0, zero: 0, positive: 0 };
    for ev in SymmetricEigen::new(h).eigenvalues.iter() {
        if ev.abs() <= 1e-9 * scale {
            out.zero += 1;
        } else if *ev < 0.0 {
            out.negative += 1;
        } else {
            out.positive += 1;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn zero_duality_gap(spec in any_regime()) {
        let sol = solve(&spec).unwrap();
        for p in &sol.points {
            let dual = spec.dual_value(p.sigma).unwrap();
            prop_assert!((p.value - dual).abs() <= 1e-10 * (1.0 + dual.abs()));
        }
    }

    #[test]
    fn fenchel_young_inequality(spec in any_regime(), xi in -5.0f64..5.0, t in 0.0f64..1.0) {
        let sigma = -spec.alpha_lambda() + t * 10.0;
        let lhs = spec.canonical_energy(xi) + spec.canonical_conjugate(sigma).unwrap();
        prop_assert!(lhs >= xi * sigma - 1e-12 * (1.0 + (xi * sigma).abs()));
    }

    #[test]
    fn residual_and_ordering(spec in any_regime()) {
        let sol = solve(&spec).unwrap();
        let bound = 1e-10 * (1.0 + spec.force_norm_sq());
        for r in &sol.dual.roots {
            prop_assert!(r.residual.abs() <= bound, "{} vs {}", r.residual, bound);
            prop_assert!(spec.dual_cubic(r.sigma).abs() <= bound);
        }
        let al = spec.alpha_lambda();
        let s: Vec<f64> = sol.dual.roots.iter().map(|r| r.sigma).collect();
        prop_assert!(s[0] > 0.0);
        if sol.dual.regime.tag == RegimeTag::ThreeDistinct {
            prop_assert!(0.0 > s[1] && s[1] > -2.0 * al / 3.0 && -2.0 * al / 3.0 > s[2] && s[2] > -al);
        } else {
            prop_assert_eq!(s.len(), 1);
        }
    }

    #[test]
    fn lambda_matches_sigma(spec in any_regime()) {
        let sol = solve(&spec).unwrap();
        for p in &sol.points {
            let lam = spec.geometric_operator(&p.x).unwrap();
            prop_assert!((lam - p.sigma / spec.alpha()).abs() <= 1e-10 * (1.0 + lam.abs()));
            prop_assert!(p.gradient_norm <= 1e-8 * (1.0 + spec.force_norm()));
        }
    }

    #[test]
    fn trig_matches_complex_cardano(spec in spec_strategy(0.01..0.99)) {
        let trig = solve_dual_trig(&spec).unwrap();
        let mut c = cardano_complex_roots(&spec).unwrap().to_vec();
        c.sort_by(|a, b| b.re.total_cmp(&a.re));
        for (t, z) in trig.roots.iter().zip(&c) {
            prop_assert!((t.sigma - z.re).abs() <= 1e-9 * (1.0 + t.sigma.abs()));
            prop_assert!(z.im.abs() <= 1e-9 * (1.0 + t.sigma.abs()));
        }
    }

    #[test]
    fn cardano_matches_bisection(spec in spec_strategy(1.01..20.0)) {
        let c = solve_dual_cardano(&spec).unwrap();
        let hi = 2.0 * (spec.alpha() * spec.force_norm_sq() / 2.0).cbrt() + 1.0;
        let found = bracket_dual_roots(&spec, -spec.alpha_lambda(), hi, 20_001);
        prop_assert_eq!(found.len(), 1);
        prop_assert!((found[0] - c.roots[0].sigma).abs() <= 1e-9 * (1.0 + found[0].abs()));
    }

    #[test]
    fn global_minimizer_beats_samples(spec in any_regime(), seed in 0u64..1000) {
        use rand::Rng;
        let sol = solve(&spec).unwrap();
        let v1 = sol.points[0].value;
        let mut r = rng(seed);
        let radius = 3.0 * sol.points[0].x.iter().map(|v| v * v).sum::<f64>().sqrt() + 1.0;
        for _ in 0..200 {
            let x: Vec<f64> = (0..spec.dim()).map(|_| r.random_range(-radius..radius)).collect();
            prop_assert!(spec.primal_value(&x).unwrap() >= v1 - 1e-12 * (1.0 + v1.abs()));
        }
    }

    #[test]
    fn local_max_beats_neighbours(spec in spec_strategy(0.01..0.99), seed in 0u64..1000) {
        use rand::Rng;
        let sol = solve(&spec).unwrap();
        let p = &sol.points[2];
        prop_assert_eq!(p.classification, Classification::LocalMax);
        // curvature scale at x₃ is ~αλ, keep the step inside the quadratic zone
        let h = 1e-3 * (2.0 * spec.lambda()).sqrt();
        let mut r = rng(seed);
        for _ in 0..50 {
            let z = common::unit_vector(&mut r, spec.dim());
            let t = r.random_range(0.1..1.0) * h;
            let y: Vec<f64> = p.x.iter().zip(&z).map(|(a, b)| a + t * b).collect();
            prop_assert!(spec.primal_value(&y).unwrap() < p.value);
        }
    }

    #[test]
    fn pseudo_inverse_axioms(rows in 1usize..6, cols in 1usize..6, rank in 1usize..6, seed in 0u64..10_000) {
        use rand::Rng;
        let mut r = rng(seed);
        let rank = rank.min(rows).min(cols);
        let u = DMatrix::from_fn(rows, rank, |_, _| r.random_range(-1.0..1.0));
        let v = DMatrix::from_fn(rank, cols, |_, _| r.random_range(-1.0..1.0));
        let a = u * v;
        let p = pseudo_inverse(&a, 1e-12);
        let tol = 1e-10 * (1.0 + a.norm() * p.norm()).powi(2);
        prop_assert!((&a * &p * &a - &a).norm() <= tol * a.norm().max(1.0));
        prop_assert!((&p * &a * &p - &p).norm() <= tol * p.norm().max(1.0));
        prop_assert!(((&a * &p).transpose() - &a * &p).norm() <= tol);
        prop_assert!(((&p * &a).transpose() - &p * &a).norm() <= tol);
    }

    #[test]
    fn reduction_round_trip(n in 1usize..6, seed in 0u64..10_000) {
        use rand::Rng;
        let mut r = rng(seed);
        let b = DMatrix::from_fn(n, n, |i, j| r.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
        let f: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let g = GeneralProblemSpec::new(1.0 + r.random_range(0.0..2.0), 0.5 + r.random_range(0.0..2.0), b.clone(), f.clone()).unwrap();
        let sol = solve_general(&g).unwrap();
        let fnorm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        for p in &sol.points {
            let grad = g.gradient(&p.x).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(grad <= 1e-7 * (1.0 + fnorm));
            // B x₀ recovers y₀, and the objectives agree
            let bx = &b * DVector::from_column_slice(&p.x);
            prop_assert!(dist(bx.as_slice(), &p.y) <= 1e-9 * (1.0 + p.y.iter().map(|v| v.abs()).fold(0.0, f64::max)));
            let reduced = reduce(&g).unwrap();
            let pv = reduced.spec.primal_value(&p.y).unwrap() ;
            prop_assert!((g.value(&p.x).unwrap() - pv).abs() <= 1e-9 * (1.0 + pv.abs()));
            let x0 = lift_solution(&reduced, &p.y).unwrap();
            prop_assert!(dist(&x0, &p.x) <= 1e-9 * (1.0 + fnorm));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn finite_differences(spec in any_regime(), seed in 0u64..1000) {
        let fd = finite_difference_check(&spec, 20, 1e-5, seed).unwrap();
        prop_assert!(fd.max_rel_error_gradient <= 1e-6);
        prop_assert!(fd.max_rel_error_hessian <= 1e-5);
        prop_assert!(fd.max_rel_error_dual_gradient <= 1e-6);
        prop_assert!(fd.max_rel_error_dual_hessian <= 1e-5);
    }

    #[test]
    fn saddle_second_differences_match_cone(spec in spec_strategy(0.05..0.95), seed in 0u64..1000) {
        let sol = solve(&spec).unwrap();
        let saddle = &sol.points[1];
        let cone = saddle.saddle_cone.clone().unwrap();
        if spec.dim() >= 2 {
            let h = 1e-4 * (2.0 * spec.lambda()).sqrt();
            let s = sample_saddle_directions(&spec, saddle, &cone, 100, h, seed).unwrap();
            prop_assert_eq!(s.agreement_fraction, 1.0);
        }
    }

    #[test]
    fn perturbation_limits(n in 1usize..4, la in -0.5f64..0.5, ll in -0.5f64..0.5, seed in 0u64..1000) {
        let (alpha, lambda) = (10f64.powf(la), 10f64.powf(ll));
        let spec = ProblemSpec::zero_force(alpha, lambda, n).unwrap();
        let mut r = rng(seed);
        let t = 8.0 * alpha * alpha * lambda.powi(3) / 27.0;
        let f_o = force(&common::unit_vector(&mut r, n), (0.5 * t).sqrt());
        let trace = perturb_solve(&spec, &PerturbOptions { f_o: Some(f_o), ..Default::default() }).unwrap();
        let sphere = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() - 2.0 * lambda).abs();
        prop_assert!(sphere(&trace.limits.x1) <= 1e-12 * lambda);
        for (a, b) in trace.limits.x1.iter().zip(&trace.limits.x2) {
            prop_assert_eq!(*a, -*b);
        }
        prop_assert!(trace.final_gaps[0] <= 10.0 * 1e-8);
        let last = trace.steps.last().unwrap();
        prop_assert!((last.sigma[2] + alpha * lambda).abs() <= 1e-6 * alpha * lambda);
        let tol = perturbation_residual_tolerance(&trace);
        for res in perturbation_residual(&trace) {
            for i in 0..3 {
                prop_assert!(res[i] <= tol[i]);
            }
        }
    }
}

#[test]
fn inertia_matches_eigensolver_on_100_specs() {
    let mut r = rng(0x1e27);
    for i in 0..100 {
        let target = [Target::Three, Target::Single, Target::Degenerate, Target::Three][i % 4];
        let spec = random_spec(&mut r, target);
        let sol = solve(&spec).unwrap();
        for p in &sol.points {
            let closed = hessian_inertia(&spec, p);
            let eig = eigen_inertia(spec.primal_hessian(&p.x).unwrap());
            assert_eq!(closed, eig, "spec {spec:?}, root {}", p.root_index);
        }
    }
}

#[test]
fn roots_match_sign_changes_on_200_specs() {
    for spec in mixed_specs(0x5e7, 200) {
        let sol = solve(&spec).unwrap();
        if sol.dual.regime.tag == RegimeTag::Degenerate {
            // the double root touches zero without a sign change
            continue;
        }
        let hi = 2.0 * (spec.alpha() * spec.force_norm_sq() / 2.0).cbrt() + 1.0;
        let found = bracket_dual_roots(&spec, -spec.alpha_lambda(), hi, 200_001);
        let mut ours: Vec<f64> = sol.dual.roots.iter().map(|r| r.sigma).collect();
        ours.sort_by(f64::total_cmp);
        assert_eq!(found.len(), ours.len(), "{spec:?}: {found:?} vs {ours:?}");
        for (a, b) in found.iter().zip(&ours) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn degenerate_instances_have_double_root() {
    let mut r = rng(0xde9);
    for _ in 0..50 {
        let spec = random_spec(&mut r, Target::Degenerate);
        assert_eq!(classify_regime(&spec).tag, RegimeTag::Degenerate);
        let sol = solve(&spec).unwrap();
        assert_eq!(sol.dual.roots.len(), 2);
        assert_eq!(sol.dual.roots[1].multiplicity, 2);
        assert_eq!(sol.dual.roots[1].sigma, -2.0 * spec.alpha_lambda() / 3.0);
        assert_eq!(sol.points[1].classification, Classification::DegenerateLocalMax);
    }
}
