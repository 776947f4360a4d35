//! Linear perturbation for the unforced problem.
//!
//! With `f = 0` every point of the sphere `|x|² = 2λ` is a global minimizer
//! and the dual has no interior stationary point. Replacing the force by
//! `f_k = f_o/k` gives a sequence of three-root instances whose critical
//! points converge to `±√(2λ) f_o/|f_o|` (the minimizers picked out by the
//! direction `f_o`) and to the local maximizer `0`.

use serde::{Deserialize, Serialize};

use crate::dual::{classify_regime, solve_dual_trig, RegimeTag};
use crate::error::{Error, Result};
use crate::problem::{norm, ProblemSpec};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_K_MAX: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbOptions {
    /// Perturbation direction; `None` picks `e₁` scaled to half the threshold.
    pub f_o: Option<Vec<f64>>,
    pub k_max: u64,
    pub tol: f64,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        Self { f_o: None, k_max: DEFAULT_K_MAX, tol: DEFAULT_TOL }
    }
}

/// Roots and points of the instance with force `f_o/k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationStep {
    pub k: u64,
    pub sigma: [f64; 3],
    pub x: [Vec<f64>; 3],
    /// `|g(σ_i)|` for the perturbed instance.
    pub residual: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationLimits {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub x3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTrace {
    pub alpha: f64,
    pub lambda: f64,
    pub f_o: Vec<f64>,
    pub k_values: Vec<u64>,
    pub steps: Vec<PerturbationStep>,
    pub limits: PerturbationLimits,
    /// Distance from the last iterate of each sequence to its limit.
    pub final_gaps: [f64; 3],
    /// True when successive `x_{1,k}` came within `tol` before `k_max`.
    pub converged: bool,
    /// `log₂` of the ratio of the last two gaps of `x_{1,k}`; `None` with
    /// fewer than two steps.
    pub empirical_order: Option<f64>,
}

pub fn auto_direction(spec: &ProblemSpec) -> Vec<f64> {
    let mut f_o = vec![0.0; spec.dim()];
    f_o[0] = (spec.threshold() / 2.0).sqrt();
    f_o
}

pub fn perturb_solve(spec: &ProblemSpec, opts: &PerturbOptions) -> Result<PerturbationTrace> {
    if spec.force_norm_sq() != 0.0 {
        return Err(Error::NonzeroForce);
    }
    if opts.k_max < 2 {
        return Err(Error::InvalidParameter(format!("k_max must be at least 2, got {}", opts.k_max)));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
    }
    let f_o = opts.f_o.clone().unwrap_or_else(|| auto_direction(spec));
    let base = spec.with_force(f_o.clone())?;
    let regime = classify_regime(&base);
    if regime.tag != RegimeTag::ThreeDistinct {
        return Err(Error::InvalidParameter(format!(
            "|f_o|^2 = {} must lie strictly inside (0, {})",
            regime.force_norm_sq, regime.threshold
        )));
    }
    let fo_norm = norm(&f_o);

    let radius = (2.0 * spec.lambda()).sqrt();
    let x1: Vec<f64> = f_o.iter().map(|v| radius * v / fo_norm).collect();
    let x2: Vec<f64> = x1.iter().map(|v| -v).collect();
    let x3 = vec![0.0; spec.dim()];

    let mut steps: Vec<PerturbationStep> = Vec::new();
    let mut converged = false;
    let mut k: u64 = 1;
    while k <= opts.k_max {
        let fk: Vec<f64> = f_o.iter().map(|v| v / k as f64).collect();
        let inst = spec.with_force(fk.clone())?;
        let sol = solve_dual_trig(&inst)?;
        if sol.regime.tag != RegimeTag::ThreeDistinct || sol.roots.len() != 3 {
            return Err(Error::Internal(format!("perturbed instance k = {k} left the three-root regime")));
        }
        let sigma = [sol.roots[0].sigma, sol.roots[1].sigma, sol.roots[2].sigma];
        let point = |s: f64| fk.iter().map(|v| v / s).collect::<Vec<f64>>();
        let step = PerturbationStep {
            k,
            sigma,
            x: [point(sigma[0]), point(sigma[1]), point(sigma[2])],
            residual: [sol.roots[0].residual.abs(), sol.roots[1].residual.abs(), sol.roots[2].residual.abs()],
        };
        let done = steps.last().is_some_and(|prev| distance(&prev.x[0], &step.x[0]) < opts.tol);
        steps.push(step);
        if done {
            converged = true;
            break;
        }
        match k.checked_mul(2) {
            Some(next) => k = next,
            None => break,
        }
    }

    let last = steps.last().expect("k = 1 is always evaluated");
    let final_gaps = [distance(&last.x[0], &x1), distance(&last.x[1], &x2), distance(&last.x[2], &x3)];
    let empirical_order = match steps.as_slice() {
        [.., a, b] => {
            let (ga, gb) = (distance(&a.x[0], &x1), distance(&b.x[0], &x1));
            (ga > 0.0 && gb > 0.0).then(|| (ga / gb).log2())
        }
        _ => None,
    };

    Ok(PerturbationTrace {
        alpha: spec.alpha(),
        lambda: spec.lambda(),
        f_o,
        k_values: steps.iter().map(|s| s.k).collect(),
        steps,
        limits: PerturbationLimits { x1, x2, x3 },
        final_gaps,
        converged,
        empirical_order,
    })
}

/// Per-root bound on [`perturbation_residual`]. For `i = 3` the square root
/// sees `σ₃/α + λ → 0`, so a rounding of `σ₃` by `2ε·αλ` alone moves the
/// right-hand side by up to `√(4ελ)/|f_o|`; that term is added to the base
/// bound `1e-9·(1 + 1/|f_o|)`.
pub fn perturbation_residual_tolerance(trace: &PerturbationTrace) -> [f64; 3] {
    let fo_norm = norm(&trace.f_o);
    let base = 1e-9 * (1.0 + 1.0 / fo_norm);
    let rounding = (4.0 * f64::EPSILON * trace.lambda).sqrt() / fo_norm;
    [base, base, base + rounding]
}

/// `|1/(k|σ_{i,k}|) − √(2(σ_{i,k}/α + λ))/|f_o||` for every step and root.
pub fn perturbation_residual(trace: &PerturbationTrace) -> Vec<[f64; 3]> {
    let fo_norm = norm(&trace.f_o);
    trace
        .steps
        .iter()
        .map(|step| {
            let mut out = [0.0; 3];
            for (o, &s) in out.iter_mut().zip(&step.sigma) {
                let lhs = 1.0 / (step.k as f64 * s.abs());
                let rhs = (2.0 * (s / trace.alpha + trace.lambda)).max(0.0).sqrt() / fo_norm;
                *o = (lhs - rhs).abs();
            }
            out
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero() -> ProblemSpec {
        ProblemSpec::zero_force(1.0, 3.0, 2).unwrap()
    }

    #[test]
    fn reference_limits() {
        let opts = PerturbOptions { f_o: Some(vec![1.0, 1.0]), ..Default::default() };
        let trace = perturb_solve(&zero(), &opts).unwrap();
        let r3 = 3f64.sqrt();
        assert!((trace.limits.x1[0] - r3).abs() < 1e-15);
        assert!((trace.limits.x1[1] - r3).abs() < 1e-15);
        assert_eq!(trace.limits.x3, vec![0.0, 0.0]);
        assert_eq!(trace.limits.x2, vec![-trace.limits.x1[0], -trace.limits.x1[1]]);
        assert!(trace.converged);
        assert!(trace.final_gaps.iter().all(|g| *g < 1e-6));
        assert!(trace.k_values.windows(2).all(|w| w[1] == 2 * w[0]));
    }

    #[test]
    fn truncation() {
        let opts = PerturbOptions { f_o: Some(vec![1.0, 1.0]), k_max: 4, ..Default::default() };
        let trace = perturb_solve(&zero(), &opts).unwrap();
        assert_eq!(trace.k_values, vec![1, 2, 4]);
        assert!(!trace.converged);
        assert!(trace.final_gaps[0] > 1e-3);
    }

    #[test]
    fn default_direction_lands_on_sphere() {
        let trace = perturb_solve(&zero(), &PerturbOptions::default()).unwrap();
        let r: f64 = trace.limits.x1.iter().map(|v| v * v).sum();
        assert!((r - 6.0).abs() < 1e-6);
        let fo: f64 = trace.f_o.iter().map(|v| v * v).sum();
        assert!((fo - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let forced = ProblemSpec::new(1.0, 3.0, vec![1.0, 1.0]).unwrap();
        assert_eq!(perturb_solve(&forced, &PerturbOptions::default()), Err(Error::NonzeroForce));
        let big = PerturbOptions { f_o: Some(vec![3.0, 3.0]), ..Default::default() };
        assert!(perturb_solve(&zero(), &big).is_err());
        let at_threshold = PerturbOptions { f_o: Some(vec![2.0, 2.0]), ..Default::default() };
        assert!(perturb_solve(&zero(), &at_threshold).is_err());
        let k1 = PerturbOptions { k_max: 1, ..Default::default() };
        assert!(perturb_solve(&zero(), &k1).is_err());
        let tol = PerturbOptions { tol: 0.0, ..Default::default() };
        assert!(perturb_solve(&zero(), &tol).is_err());
    }

    #[test]
    fn residual_first_step() {
        let opts = PerturbOptions { f_o: Some(vec![1.0, 1.0]), k_max: 2, ..Default::default() };
        let trace = perturb_solve(&zero(), &opts).unwrap();
        let s3 = trace.steps[0].sigma[2];
        assert!((1.0 / s3.abs() - 0.347_296_36).abs() < 1e-8);
        let rhs = (2.0 * (s3 + 3.0)).sqrt() / 2f64.sqrt();
        assert!((rhs - 0.347_296_4).abs() < 1e-7);
        for r in perturbation_residual(&trace) {
            assert!(r.iter().all(|v| *v <= 1e-9 * (1.0 + 1.0 / 2f64.sqrt())));
        }
    }

    #[test]
    fn residual_within_tolerance_to_deep_k() {
        let trace = perturb_solve(&zero(), &PerturbOptions { tol: 1e-300, ..Default::default() }).unwrap();
        let tol = perturbation_residual_tolerance(&trace);
        for r in perturbation_residual(&trace) {
            assert!(r[0] <= tol[0] && r[1] <= tol[1] && r[2] <= tol[2], "{r:?} vs {tol:?}");
        }
    }
}
