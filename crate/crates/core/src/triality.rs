//! Extremality of the recovered critical points.
//!
//! The label of each point follows from which dual root it is paired with:
//! `σ₁` gives the global minimizer, `σ₃` a local maximizer and `σ₂` a saddle.
//! At the saddle the directions split into a cone around `±f` along which
//! `Π` curves upward and its complement along which `Π` curves downward.
//! The Hessian `α(xxᵀ + (σ/α)I)` is identity plus rank one, so its spectrum
//! is known in closed form and reported as a consistency check.

use serde::{Deserialize, Serialize};

use crate::dual::{classify_regime, Classification, CriticalPoint, DualRoot, RegimeTag};
use crate::error::{Error, Result};
use crate::problem::{dot, norm, norm_sq, ProblemSpec};

/// Band around the cone threshold where the second-order test is inconclusive.
pub const CONE_BAND: f64 = 1e-9;

/// Directions `z` at the saddle with `|cos∠(z, f)| < threshold` are maximum
/// directions; those with `|cos∠(z, f)| > threshold` are minimum directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleCone {
    pub threshold: f64,
    pub axis: Vec<f64>,
}

impl SaddleCone {
    pub fn contains_max_direction(&self, cos_theta: f64) -> bool {
        cos_theta.abs() < self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curvature {
    Negative,
    Positive,
    Indeterminate,
}

impl Curvature {
    pub fn sign(self) -> i8 {
        match self {
            Curvature::Negative => -1,
            Curvature::Positive => 1,
            Curvature::Indeterminate => 0,
        }
    }
}

/// Second derivative of `t ↦ Π(x₂ + tz)` at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionProbe {
    pub z: Vec<f64>,
    pub cos_theta: f64,
    pub phi_second: f64,
    pub curvature: Curvature,
}

/// Eigenvalue sign counts of the primal Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

pub fn saddle_cone(spec: &ProblemSpec, sigma2: f64) -> Result<SaddleCone> {
    let al = spec.alpha_lambda();
    if !(sigma2 > -2.0 * al / 3.0 && sigma2 < 0.0) {
        return Err(Error::InvalidParameter(format!("saddle root {sigma2} is outside (-2*alpha*lambda/3, 0)")));
    }
    let fnorm = spec.force_norm();
    if fnorm == 0.0 {
        return Err(Error::ZeroForce);
    }
    let threshold = (-sigma2 / (2.0 * sigma2 + 2.0 * al)).sqrt();
    let axis = spec.f().iter().map(|v| v / fnorm).collect();
    Ok(SaddleCone { threshold, axis })
}

/// Assigns labels from root identity and attaches the cone to the saddle.
pub fn classify(spec: &ProblemSpec, points: &[CriticalPoint], roots: &[DualRoot]) -> Result<Vec<CriticalPoint>> {
    let regime = classify_regime(spec);
    if regime.tag == RegimeTag::ZeroForce {
        return Err(Error::ZeroForce);
    }
    points
        .iter()
        .map(|p| {
            let root = roots
                .iter()
                .find(|r| r.index == p.root_index)
                .ok_or_else(|| Error::Internal(format!("no root with index {}", p.root_index)))?;
            let mut out = p.clone();
            out.classification = match (regime.tag, root.index, root.multiplicity) {
                (_, 1, _) => Classification::GlobalMin,
                (RegimeTag::Degenerate, _, 2) => Classification::DegenerateLocalMax,
                (RegimeTag::ThreeDistinct, 2, 1) => Classification::Saddle,
                (RegimeTag::ThreeDistinct, 3, 1) => Classification::LocalMax,
                (tag, idx, mult) => {
                    return Err(Error::Internal(format!(
                        "root {idx} with multiplicity {mult} is not expected in regime {tag}"
                    )))
                }
            };
            if out.classification == Classification::Saddle {
                out.saddle_cone = Some(saddle_cone(spec, p.sigma)?);
            }
            Ok(out)
        })
        .collect()
}

/// `φ''(0) = |z|²((2σ₂ + 2αλ)cos²θ + σ₂)` with `θ = ∠(z, f)`.
pub fn directional_second_derivative(spec: &ProblemSpec, saddle: &CriticalPoint, z: &[f64]) -> Result<DirectionProbe> {
    if z.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: z.len() });
    }
    let zsq = norm_sq(z);
    if zsq == 0.0 {
        return Err(Error::ZeroDirection);
    }
    if saddle.classification != Classification::Saddle {
        return Err(Error::NotSaddle);
    }
    let cone = match &saddle.saddle_cone {
        Some(c) => c.clone(),
        None => saddle_cone(spec, saddle.sigma)?,
    };
    let s2 = saddle.sigma;
    let cos_theta = dot(spec.f(), z) / (spec.force_norm() * zsq.sqrt());
    let phi_second = zsq * ((2.0 * s2 + 2.0 * spec.alpha_lambda()) * cos_theta * cos_theta + s2);
    let gap = cos_theta.abs() - cone.threshold;
    let curvature = if gap.abs() <= CONE_BAND {
        Curvature::Indeterminate
    } else if gap < 0.0 {
        Curvature::Negative
    } else {
        Curvature::Positive
    };
    Ok(DirectionProbe { z: z.to_vec(), cos_theta, phi_second, curvature })
}

/// Closed-form Hessian spectrum at a critical point: `σ` with multiplicity
/// `n − 1` (directions orthogonal to `f`) and `3σ + 2αλ` once (along `f`).
pub fn hessian_eigenvalues(spec: &ProblemSpec, point: &CriticalPoint) -> Vec<f64> {
    let n = spec.dim();
    let mut ev = vec![point.sigma; n.saturating_sub(1)];
    ev.push(3.0 * point.sigma + 2.0 * spec.alpha_lambda());
    ev
}

pub fn hessian_inertia(spec: &ProblemSpec, point: &CriticalPoint) -> Inertia {
    let tol = 1e-10 * (spec.alpha_lambda() + point.sigma.abs());
    let mut inertia = Inertia { negative: 0, zero: 0, positive: 0 };
    for ev in hessian_eigenvalues(spec, point) {
        if ev.abs() <= tol {
            inertia.zero += 1;
        } else if ev < 0.0 {
            inertia.negative += 1;
        } else {
            inertia.positive += 1;
        }
    }
    inertia
}

/// `x/|x|`, or `None` for the zero vector.
pub(crate) fn unit(x: &[f64]) -> Option<Vec<f64>> {
    let n = norm(x);
    (n > 0.0).then(|| x.iter().map(|v| v / n).collect())
}
