//! Critical points of the double-well objective
//! `Π(x) = (α/2)(½|x|² − λ)² − ⟨f, x⟩` via its canonical dual.
//!
//! The dual stationarity condition is a cubic in one scalar `σ`; each real
//! root gives a primal critical point `x = f/σ` with no duality gap, and the
//! root's position decides whether that point is the global minimizer, a
//! local maximizer or a saddle.
//!
//! ```
//! use doublewell::{solve, Classification, ProblemSpec};
//!
//! let spec = ProblemSpec::new(1.0, 3.0, vec![1.0, 1.0]).unwrap();
//! let sol = solve(&spec).unwrap();
//! assert_eq!(sol.points[0].classification, Classification::GlobalMin);
//! ```

pub mod cli;
pub mod dual;
pub mod error;
pub mod oracle;
pub mod perturbation;
pub mod problem;
pub mod reduction;
pub mod report;
pub mod triality;
pub mod verify;

pub use dual::{
    classify_regime, recover_critical_points, solve_dual, solve_dual_cardano, solve_dual_trig, Classification,
    CriticalPoint, CubicSolveTrace, DualRoot, DualSolution, Regime, RegimeTag,
};
pub use error::{Error, Result};
pub use perturbation::{
    perturb_solve, perturbation_residual, perturbation_residual_tolerance, PerturbOptions, PerturbationTrace,
};
pub use problem::ProblemSpec;
pub use reduction::{lift_solution, reduce, solve_general, GeneralProblemSpec, ReducedProblem};
pub use triality::{classify, directional_second_derivative, hessian_inertia, saddle_cone, Inertia, SaddleCone};

/// Dual roots and classified critical points of a forced instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub dual: DualSolution,
    pub points: Vec<CriticalPoint>,
}

/// Solve the dual cubic, recover `x_i = f/σ_i` and classify each point.
/// Errors with [`Error::ZeroForce`] when `f = 0`.
pub fn solve(spec: &ProblemSpec) -> Result<Solution> {
    let dual = solve_dual(spec)?;
    let points = recover_critical_points(spec, &dual.roots)?;
    let points = classify(spec, &points, &dual.roots)?;
    Ok(Solution { dual, points })
}
