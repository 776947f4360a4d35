//! The operator form `Π_B(x) = (α/2)(½|Bx|² − λ)² − ⟨f, x⟩`.
//!
//! With `y = Bx` and `f̄ = B(BᵀB)†f` the force term becomes `⟨f̄, y⟩` whenever
//! `f ∈ range(BᵀB)`, so the problem reduces to the identity-operator form in
//! `ℝᵐ`. Solutions `y₀` lift back through `x₀ = (BᵀB)†Bᵀy₀`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dual::{classify_regime, recover_critical_points, solve_dual, Classification, Regime, RegimeTag};
use crate::error::{Error, Result};
use crate::perturbation::{perturb_solve, PerturbOptions, PerturbationTrace};
use crate::problem::ProblemSpec;
use crate::triality::classify;

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;
pub const RANGE_TOL: f64 = 1e-9;
pub const LIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralProblemSpec {
    alpha: f64,
    lambda: f64,
    b: DMatrix<f64>,
    f: Vec<f64>,
}

impl GeneralProblemSpec {
    pub fn new(alpha: f64, lambda: f64, b: DMatrix<f64>, f: Vec<f64>) -> Result<Self> {
        // reuse the scalar checks
        ProblemSpec::new(alpha, lambda, vec![0.0])?;
        if b.ncols() != f.len() {
            return Err(Error::DimensionMismatch { expected: b.ncols(), got: f.len() });
        }
        if b.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::InvalidParameter("B must be non-empty".into()));
        }
        if b.iter().any(|v| !v.is_finite()) || f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("B and f must be finite".into()));
        }
        if b.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidParameter("B is identically zero".into()));
        }
        Ok(Self { alpha, lambda, b, f })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.b.ncols() {
            return Err(Error::DimensionMismatch { expected: self.b.ncols(), got: x.len() });
        }
        Ok(())
    }

    /// `Π_B(x)`
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let bx = &self.b * DVector::from_column_slice(x);
        let lam = 0.5 * bx.norm_squared() - self.lambda;
        let fx: f64 = self.f.iter().zip(x).map(|(a, b)| a * b).sum();
        Ok(0.5 * self.alpha * lam * lam - fx)
    }

    /// `∇Π_B(x) = αΛ(Bx)BᵀBx − f`
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let bx = &self.b * DVector::from_column_slice(x);
        let lam = 0.5 * bx.norm_squared() - self.lambda;
        let g = self.b.tr_mul(&bx) * (self.alpha * lam) - DVector::from_column_slice(&self.f);
        Ok(g.as_slice().to_vec())
    }
}

/// Moore–Penrose pseudoinverse via SVD with a relative singular value cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = rel_cutoff * smax;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            out += v_t.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    /// Identity-operator problem over `ℝᵐ` with force `f̄`.
    pub spec: ProblemSpec,
    pub f_bar: Vec<f64>,
    pub pinv_btb: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// `‖BᵀB(BᵀB)†f − f‖`
    pub membership_residual: f64,
}

pub fn reduce(gspec: &GeneralProblemSpec) -> Result<ReducedProblem> {
    let b = gspec.b.clone();
    let btb = b.tr_mul(&b);
    let pinv_btb = pseudo_inverse(&btb, RANK_CUTOFF);
    let f = DVector::from_column_slice(&gspec.f);
    let membership_residual = (&btb * (&pinv_btb * &f) - &f).norm();
    if membership_residual > RANGE_TOL * (1.0 + f.norm()) {
        return Err(Error::NotInRange { residual: membership_residual });
    }
    let f_bar = &b * (&pinv_btb * &f);
    let f_bar = f_bar.as_slice().to_vec();
    let spec = ProblemSpec::new(gspec.alpha, gspec.lambda, f_bar.clone())?;
    Ok(ReducedProblem { spec, f_bar, pinv_btb, b, membership_residual })
}

/// `x₀ = (BᵀB)†Bᵀy₀`, after checking `y₀ ∈ range(B)`.
pub fn lift_solution(reduced: &ReducedProblem, y0: &[f64]) -> Result<Vec<f64>> {
    if y0.len() != reduced.b.nrows() {
        return Err(Error::DimensionMismatch { expected: reduced.b.nrows(), got: y0.len() });
    }
    let y = DVector::from_column_slice(y0);
    let x0 = &reduced.pinv_btb * reduced.b.tr_mul(&y);
    let residual = (&reduced.b * &x0 - &y).norm();
    if residual > LIFT_TOL * (1.0 + y.norm()) {
        return Err(Error::NotInRangeOfB { residual });
    }
    Ok(x0.as_slice().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub sigma: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Label of `y` in the reduced problem.
    pub reduced_classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralSolution {
    pub f_bar: Vec<f64>,
    pub membership_residual: f64,
    pub regime: Regime,
    pub points: Vec<LiftedPoint>,
    /// Set when `f̄ = 0` and the reduced problem went through perturbation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationTrace>,
    pub experimental: bool,
}

/// Reduce, solve the identity-operator problem, and lift every critical point.
pub fn solve_general(gspec: &GeneralProblemSpec) -> Result<GeneralSolution> {
    let reduced = reduce(gspec)?;
    let regime = classify_regime(&reduced.spec);
    let lift = |y: Vec<f64>, sigma: f64, label: Classification| -> Result<LiftedPoint> {
        let x = lift_solution(&reduced, &y)?;
        let value = gspec.value(&x)?;
        let gradient_norm = gspec.gradient(&x)?.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(LiftedPoint { sigma, y, x, value, gradient_norm, reduced_classification: label })
    };

    if regime.tag == RegimeTag::ZeroForce {
        let zero = ProblemSpec::zero_force(gspec.alpha, gspec.lambda, reduced.b.nrows())?;
        let opts = PerturbOptions { f_o: Some(range_direction(&reduced)), ..Default::default() };
        let trace = perturb_solve(&zero, &opts)?;
        let points = vec![
            lift(trace.limits.x1.clone(), 0.0, Classification::GlobalMin)?,
            lift(trace.limits.x2.clone(), 0.0, Classification::GlobalMin)?,
            lift(trace.limits.x3.clone(), -gspec.alpha * gspec.lambda, Classification::LocalMax)?,
        ];
        return Ok(GeneralSolution {
            f_bar: reduced.f_bar.clone(),
            membership_residual: reduced.membership_residual,
            regime,
            points,
            perturbation: Some(trace),
            experimental: true,
        });
    }

    let sol = solve_dual(&reduced.spec)?;
    let pts = recover_critical_points(&reduced.spec, &sol.roots)?;
    let pts = classify(&reduced.spec, &pts, &sol.roots)?;
    let points = pts.into_iter().map(|p| lift(p.x, p.sigma, p.classification)).collect::<Result<Vec<_>>>()?;
    Ok(GeneralSolution {
        f_bar: reduced.f_bar.clone(),
        membership_residual: reduced.membership_residual,
        regime,
        points,
        perturbation: None,
        experimental: false,
    })
}

/// A perturbation direction inside `range(B)`: the largest column of `B`,
/// scaled to half the regime threshold.
fn range_direction(reduced: &ReducedProblem) -> Vec<f64> {
    let col = reduced.b.column_iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("B is non-empty");
    let scale = (reduced.spec.threshold() / 2.0).sqrt() / col.norm();
    col.iter().map(|v| v * scale).collect()
}
