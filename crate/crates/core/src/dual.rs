//! Solving the dual stationarity cubic `2σ²(σ/α + λ) = |f|²` and recovering
//! primal critical points `x = f/σ`.
//!
//! Closed-form roots (trigonometric when three real roots exist, real-branch
//! Cardano when only one does) seed a safeguarded Newton iteration on
//! `g(σ) = 2σ²(σ/α + λ) − |f|²`. Each root lives in an interval where `g` is
//! monotone:
//!
//! * `σ₁ ∈ (0, +∞)`
//! * `σ₂ ∈ (−2αλ/3, 0)`
//! * `σ₃ ∈ (−αλ, −2αλ/3)`
//!
//! so polishing never jumps between roots.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{norm, ProblemSpec, REGIME_EPS};
use crate::triality::SaddleCone;

pub const MAX_NEWTON_ITERATIONS: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    ZeroForce,
    ThreeDistinct,
    Degenerate,
    SingleReal,
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeTag::ZeroForce => "ZeroForce",
            RegimeTag::ThreeDistinct => "ThreeDistinct",
            RegimeTag::Degenerate => "Degenerate",
            RegimeTag::SingleReal => "SingleReal",
        };
        f.write_str(s)
    }
}

/// Root structure of the dual cubic, decided by comparing `|f|²` with `8α²λ³/27`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub threshold: f64,
    pub force_norm_sq: f64,
}

pub fn classify_regime(spec: &ProblemSpec) -> Regime {
    let threshold = spec.threshold();
    let force_norm_sq = spec.force_norm_sq();
    let tag = if force_norm_sq == 0.0 {
        RegimeTag::ZeroForce
    } else if (force_norm_sq - threshold).abs() <= REGIME_EPS * threshold {
        RegimeTag::Degenerate
    } else if force_norm_sq < threshold {
        RegimeTag::ThreeDistinct
    } else {
        RegimeTag::SingleReal
    };
    Regime { tag, threshold, force_norm_sq }
}

/// One real root of the dual cubic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualRoot {
    pub sigma: f64,
    /// 1, 2 or 3, following `σ₁ > 0 > σ₂ > −2αλ/3 > σ₃ > −αλ`.
    pub index: u8,
    pub multiplicity: u8,
    /// `g(σ)` at the returned value.
    pub residual: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootBranch {
    Cardano,
    Trigonometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

/// How each returned root was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSolveTrace {
    /// Cardano intermediate `r`; complex in the three-root regime.
    pub r: ComplexValue,
    pub branch: Vec<RootBranch>,
    pub newton_iterations: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Unset,
    GlobalMin,
    LocalMax,
    Saddle,
    DegenerateLocalMax,
}

/// A primal stationary point `x = f/σ` paired with its dual root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub sigma: f64,
    pub root_index: u8,
    pub value: f64,
    pub classification: Classification,
    pub gradient_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle_cone: Option<SaddleCone>,
}

/// All real roots of the dual cubic for a nonzero force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub regime: Regime,
    pub roots: Vec<DualRoot>,
    pub trace: CubicSolveTrace,
}

/// Cardano intermediate `r` (complex when `27|f|² < 8α²λ³`).
pub fn cardano_r(spec: &ProblemSpec) -> Complex64 {
    let a = spec.alpha();
    let l = spec.lambda();
    let fsq = spec.force_norm_sq();
    let radicand = Complex64::new(27.0 * fsq - 8.0 * a * a * l.powi(3), 0.0);
    let lead = a * fsq.sqrt() / (4.0 * 3f64.powf(1.5));
    radicand.sqrt() * lead + (27.0 * a * fsq - 4.0 * a.powi(3) * l.powi(3)) / 108.0
}

/// Evaluates the three Cardano expressions with principal-branch complex
/// arithmetic. Used to cross-check the trigonometric roots.
pub fn cardano_complex_roots(spec: &ProblemSpec) -> Result<[Complex64; 3]> {
    if spec.force_norm_sq() == 0.0 {
        return Err(Error::ZeroForce);
    }
    let al = spec.alpha_lambda();
    let r = cardano_r(spec);
    let cr = r.powf(1.0 / 3.0);
    let tail = Complex64::new(al * al / 9.0, 0.0) / cr;
    let shift = Complex64::new(al / 3.0, 0.0);
    let w = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let wbar = w.conj();
    Ok([cr + tail - shift, wbar * cr + w * tail - shift, w * cr + wbar * tail - shift])
}

struct Polished {
    sigma: f64,
    iterations: u32,
}

/// Safeguarded Newton on `g` inside `[lo, hi]`, where `g` is monotone and
/// changes sign. The direction is passed in rather than read off `g(lo)`:
/// near `σ = −αλ` with tiny `|f|` the sign of `g(lo)` is rounding noise.
fn polish(spec: &ProblemSpec, seed: f64, mut lo: f64, mut hi: f64, increasing: bool) -> Polished {
    let mut sigma = if seed >= lo && seed <= hi { seed } else { 0.5 * (lo + hi) };
    let scale = |s: f64| 2.0 * s * s * (s.abs() / spec.alpha() + spec.lambda()) + spec.force_norm_sq();
    let mut iterations = 0;
    while iterations < MAX_NEWTON_ITERATIONS {
        let g = spec.dual_cubic(sigma);
        if g == 0.0 || g.abs() <= 1e-16 * scale(sigma) {
            break;
        }
        iterations += 1;
        if (g < 0.0) == increasing {
            lo = sigma;
        } else {
            hi = sigma;
        }
        let dg = spec.dual_cubic_derivative(sigma);
        let newton = sigma - g / dg;
        let next = if dg != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - sigma).abs();
        sigma = next;
        if step <= 2.0 * f64::EPSILON * sigma.abs() || hi - lo <= 2.0 * f64::EPSILON * sigma.abs() {
            break;
        }
    }
    Polished { sigma, iterations }
}

/// Upper bound on the positive root: `g(σ) ≥ max(2λσ², 2σ³/α) − |f|²`.
fn positive_root_bound(spec: &ProblemSpec) -> f64 {
    let fsq = spec.force_norm_sq();
    let by_quad = (fsq / (2.0 * spec.lambda())).sqrt();
    let by_cube = (spec.alpha() * fsq / 2.0).cbrt();
    by_quad.min(by_cube) * (1.0 + 1e-12) + f64::MIN_POSITIVE
}

fn make_root(spec: &ProblemSpec, regime: Regime, sigma: f64, index: u8, multiplicity: u8) -> DualRoot {
    DualRoot { sigma, index, multiplicity, residual: spec.dual_cubic(sigma), regime }
}

/// Trigonometric roots, for the three-root and double-root regimes.
pub fn solve_dual_trig(spec: &ProblemSpec) -> Result<DualSolution> {
    let regime = classify_regime(spec);
    if !matches!(regime.tag, RegimeTag::ThreeDistinct | RegimeTag::Degenerate) {
        return Err(Error::WrongRegime { expected: "ThreeDistinct or Degenerate", got: regime.tag.to_string() });
    }
    let al = spec.alpha_lambda();
    let cos_arg = (2.0 * regime.force_norm_sq / regime.threshold - 1.0).clamp(-1.0, 1.0);
    let phi = cos_arg.acos() / 3.0;
    let trig = |phase: f64| al / 3.0 * (2.0 * (phi + phase).cos() - 1.0);
    let seeds = [trig(0.0), trig(4.0 * PI / 3.0), trig(2.0 * PI / 3.0)];
    let r = cardano_r(spec).into();

    let p1 = polish(spec, seeds[0], 0.0, positive_root_bound(spec), true);
    if regime.tag == RegimeTag::Degenerate {
        let double = -2.0 * al / 3.0;
        return Ok(DualSolution {
            regime,
            roots: vec![make_root(spec, regime, p1.sigma, 1, 1), make_root(spec, regime, double, 2, 2)],
            trace: CubicSolveTrace {
                r,
                branch: vec![RootBranch::Trigonometric; 2],
                newton_iterations: vec![p1.iterations, 0],
            },
        });
    }

    // g′ = 2σ(3σ/α + 2λ): negative on (−2αλ/3, 0), positive below −2αλ/3
    let p2 = polish(spec, seeds[1], -2.0 * al / 3.0, 0.0, false);
    let p3 = polish(spec, seeds[2], -al, -2.0 * al / 3.0, true);
    let roots = vec![
        make_root(spec, regime, p1.sigma, 1, 1),
        make_root(spec, regime, p2.sigma, 2, 1),
        make_root(spec, regime, p3.sigma, 3, 1),
    ];
    Ok(DualSolution {
        regime,
        roots,
        trace: CubicSolveTrace {
            r,
            branch: vec![RootBranch::Trigonometric; 3],
            newton_iterations: vec![p1.iterations, p2.iterations, p3.iterations],
        },
    })
}

/// Real-branch Cardano root, for the single-real-root regime.
pub fn solve_dual_cardano(spec: &ProblemSpec) -> Result<DualSolution> {
    let regime = classify_regime(spec);
    if regime.tag != RegimeTag::SingleReal {
        return Err(Error::WrongRegime { expected: "SingleReal", got: regime.tag.to_string() });
    }
    let r = cardano_r(spec);
    if r.im != 0.0 || r.re <= 0.0 {
        return Err(Error::Internal(format!("Cardano intermediate is not real-positive: {r}")));
    }
    let al = spec.alpha_lambda();
    let cr = r.re.cbrt();
    let seed = cr + al * al / (9.0 * cr) - al / 3.0;
    let p1 = polish(spec, seed, 0.0, positive_root_bound(spec), true);
    Ok(DualSolution {
        regime,
        roots: vec![make_root(spec, regime, p1.sigma, 1, 1)],
        trace: CubicSolveTrace {
            r: r.into(),
            branch: vec![RootBranch::Cardano],
            newton_iterations: vec![p1.iterations],
        },
    })
}

/// Dispatches on the regime. Errors for `f = 0`.
pub fn solve_dual(spec: &ProblemSpec) -> Result<DualSolution> {
    match classify_regime(spec).tag {
        RegimeTag::ZeroForce => Err(Error::ZeroForce),
        RegimeTag::SingleReal => solve_dual_cardano(spec),
        _ => solve_dual_trig(spec),
    }
}

/// `x_i = f/σ_i` for each distinct root; classification is left `Unset`.
pub fn recover_critical_points(spec: &ProblemSpec, roots: &[DualRoot]) -> Result<Vec<CriticalPoint>> {
    if spec.force_norm_sq() == 0.0 {
        return Err(Error::ZeroForce);
    }
    roots
        .iter()
        .map(|root| {
            if root.sigma == 0.0 {
                return Err(Error::DualPole);
            }
            let x: Vec<f64> = spec.f().iter().map(|fi| fi / root.sigma).collect();
            let value = spec.primal_value(&x)?;
            let gradient_norm = norm(&spec.primal_gradient(&x)?);
            Ok(CriticalPoint {
                x,
                sigma: root.sigma,
                root_index: root.index,
                value,
                classification: Classification::Unset,
                gradient_norm,
                saddle_cone: None,
            })
        })
        .collect()
}
