//! Runs every oracle against a solved instance and collects pass/fail checks.

use nalgebra::SymmetricEigen;

use crate::dual::{classify_regime, Classification, RegimeTag};
use crate::error::Result;
use crate::oracle::{bracket_dual_roots, finite_difference_check, grid_minimize, sample_saddle_directions};
use crate::perturbation::{perturb_solve, perturbation_residual, perturbation_residual_tolerance, PerturbOptions};
use crate::problem::{norm, norm_sq, ProblemSpec};
use crate::report::{Check, SamplingSummary, VerifyReport, VERIFY_SCHEMA};
use crate::triality::{hessian_inertia, Inertia};

pub const FD_SAMPLES: usize = 100;
pub const FD_STEP: f64 = 1e-5;
pub const SADDLE_SAMPLES: usize = 500;
pub const SADDLE_H: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Extra σ treated as a claimed root.
    pub inject_sigma: Option<f64>,
    pub perturb: PerturbOptions,
}

struct Checks(Vec<Check>);

impl Checks {
    fn le(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        let passed = value <= tolerance;
        self.0.push(Check { name: name.into(), passed, value, tolerance });
    }

    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.0.push(Check { name: name.into(), passed: ok, value: if ok { 0.0 } else { 1.0 }, tolerance: 0.0 });
    }
}

fn eigensolve_inertia(spec: &ProblemSpec, x: &[f64]) -> Result<Inertia> {
    let h = spec.primal_hessian(x)?;
    let scale = h.abs().max().max(1.0);
    let eig = SymmetricEigen::new(h);
    let mut inertia = Inertia { negative: 0, zero: 0, positive: 0 };
    for ev in eig.eigenvalues.iter() {
        if ev.abs() <= 1e-9 * scale {
            inertia.zero += 1;
        } else if *ev < 0.0 {
            inertia.negative += 1;
        } else {
            inertia.positive += 1;
        }
    }
    Ok(inertia)
}

pub fn verify(spec: &ProblemSpec, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut checks = Checks(Vec::new());
    let fsq = spec.force_norm_sq();
    let al = spec.alpha_lambda();

    let fd = finite_difference_check(spec, FD_SAMPLES, FD_STEP, opts.seed)?;
    checks.le("fd_primal_gradient", fd.max_rel_error_gradient, 1e-6);
    checks.le("fd_primal_hessian", fd.max_rel_error_hessian, 1e-5);
    checks.le("fd_dual_gradient", fd.max_rel_error_dual_gradient, 1e-6);
    checks.le("fd_dual_hessian", fd.max_rel_error_dual_hessian, 1e-5);

    // |x₁|² = 2(σ₁/α + λ) and σ₁ ≤ (α|f|²/2)^(1/3)
    let x1_bound = (2.0 * ((spec.alpha() * fsq / 2.0).cbrt() / spec.alpha() + spec.lambda())).sqrt();
    let radius = (2.0 * (2.0 * spec.lambda()).sqrt()).max(1.5 * x1_bound);
    let points = if spec.dim() <= 2 { 401 } else { 4001 };
    let grid = grid_minimize(spec, radius, points)?;

    if let Some(sigma) = opts.inject_sigma {
        checks.le("injected_root_residual", spec.dual_cubic(sigma).abs(), 1e-10 * (1.0 + fsq));
        if sigma != 0.0 {
            let x: Vec<f64> = spec.f().iter().map(|v| v / sigma).collect();
            checks.le(
                "injected_point_gradient_norm",
                norm(&spec.primal_gradient(&x)?),
                1e-8 * (1.0 + spec.force_norm()),
            );
        }
    }

    let mut sampling = None;
    if classify_regime(spec).tag == RegimeTag::ZeroForce {
        let trace = perturb_solve(spec, &opts.perturb)?;
        let two_lambda = 2.0 * spec.lambda();
        checks.le("sphere_limit_x1", (norm_sq(&trace.limits.x1) - two_lambda).abs(), 1e-12 * two_lambda);
        checks.le("sphere_limit_x2", (norm_sq(&trace.limits.x2) - two_lambda).abs(), 1e-12 * two_lambda);
        checks.le("double_well_at_limit", spec.double_well(&trace.limits.x1)?, 1e-10);
        checks.flag("antipodal_limits", trace.limits.x1.iter().zip(&trace.limits.x2).all(|(a, b)| *a == -*b));
        checks.le("final_gap_x1", trace.final_gaps[0], 10.0 * opts.perturb.tol);
        checks.le("final_gap_x2", trace.final_gaps[1], 10.0 * opts.perturb.tol);
        let tol = perturbation_residual_tolerance(&trace);
        let residuals = perturbation_residual(&trace);
        for i in 0..3 {
            let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r[i]));
            checks.le(format!("perturbation_residual_{}", i + 1), worst, tol[i]);
        }
        checks.le("grid_min_value", grid.best_value.abs(), 1e-3);
        if spec.dim() <= 2 {
            checks.le("grid_min_on_sphere", (norm_sq(&grid.best_x) - two_lambda).abs(), 0.1);
        }
    } else {
        let sol = crate::solve(spec)?;
        let regime = sol.dual.regime;
        for root in &sol.dual.roots {
            let tol = if root.multiplicity == 2 {
                (1e-10 * (1.0 + fsq)).max(crate::problem::REGIME_EPS * regime.threshold)
            } else {
                1e-10 * (1.0 + fsq)
            };
            checks.le(format!("root_residual_{}", root.index), root.residual.abs(), tol);
        }
        if regime.tag == RegimeTag::ThreeDistinct {
            let s: Vec<f64> = sol.dual.roots.iter().map(|r| r.sigma).collect();
            checks.flag(
                "root_ordering",
                s[0] > 0.0 && 0.0 > s[1] && s[1] > -2.0 * al / 3.0 && -2.0 * al / 3.0 > s[2] && s[2] > -al,
            );
            let found = bracket_dual_roots(spec, -al, 10.0 * al + 10.0 * spec.force_norm(), 200_001);
            let mut sorted = s.clone();
            sorted.sort_by(f64::total_cmp);
            let matched = found.len() == 3 && found.iter().zip(&sorted).all(|(a, b)| (a - b).abs() <= 1e-8);
            checks.flag("roots_match_sign_changes", matched);
        }

        for p in &sol.points {
            let i = p.root_index;
            let dual = spec.dual_value(p.sigma)?;
            checks.le(format!("duality_gap_{i}"), (p.value - dual).abs(), 1e-10 * (1.0 + dual.abs()));
            checks.le(format!("gradient_norm_{i}"), p.gradient_norm, 1e-8 * (1.0 + spec.force_norm()));
            let lam = spec.geometric_operator(&p.x)?;
            checks.le(
                format!("lambda_consistency_{i}"),
                (lam - p.sigma / spec.alpha()).abs(),
                1e-10 * (1.0 + lam.abs()),
            );
            let closed = hessian_inertia(spec, p);
            let eig = eigensolve_inertia(spec, &p.x)?;
            checks.flag(format!("inertia_eigensolve_{i}"), closed == eig);
            let dh = spec.dual_hessian(p.sigma)?;
            let expected_sign_ok = match p.classification {
                Classification::GlobalMin | Classification::LocalMax => dh < 0.0,
                Classification::Saddle => dh > 0.0,
                _ => true,
            };
            checks.flag(format!("dual_hessian_sign_{i}"), expected_sign_ok);
        }

        let x1 = &sol.points[0].x;
        let v1 = sol.points[0].value;
        let diff: Vec<f64> = grid.best_x.iter().zip(x1).map(|(a, b)| a - b).collect();
        // per-axis distance on the full grid, distance along the line otherwise
        let off = if spec.dim() <= 2 { diff.iter().map(|d| d.abs()).fold(0.0, f64::max) } else { norm(&diff) };
        checks.le("grid_argmin_distance", off, grid.spacing);
        checks.le("grid_value_not_below_minimum", v1 - grid.best_value, 1e-12);

        if let Some(saddle) = sol.points.iter().find(|p| p.classification == Classification::Saddle) {
            let cone = saddle.saddle_cone.clone().expect("saddle carries its cone");
            let s = sample_saddle_directions(spec, saddle, &cone, SADDLE_SAMPLES, SADDLE_H, opts.seed)?;
            checks.le("saddle_cone_disagreement", 1.0 - s.agreement_fraction, 0.0);
            sampling = Some(SamplingSummary {
                count: s.samples.len(),
                excluded: s.excluded,
                agreement_fraction: s.agreement_fraction,
                h: s.h,
            });
        }
    }

    let failures: Vec<String> = checks
        .0
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: value {:e} exceeds tolerance {:e}", c.name, c.value, c.tolerance))
        .collect();
    Ok(VerifyReport {
        schema: VERIFY_SCHEMA.into(),
        spec: spec.clone(),
        seed: opts.seed,
        passed: failures.is_empty(),
        checks: checks.0,
        failures,
        finite_differences: Some(fd),
        grid: Some(grid),
        saddle_sampling: sampling,
    })
}
