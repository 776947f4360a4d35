//! Independent checks on the solver output: brute-force grids, finite
//! differences, sign-change scans of the dual cubic and sampled second
//! differences at the saddle. None of these call into the dual solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dual::CriticalPoint;
use crate::error::{Error, Result};
use crate::problem::{dot, norm, ProblemSpec};
use crate::triality::{unit, SaddleCone};

pub const DEFAULT_SEED: u64 = 0x0005_eedd_0b1e_u64;
/// Directions this close to the cone threshold are left out of the sign comparison.
pub const SAMPLING_BAND: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub grid_radius: f64,
    pub points_per_axis: usize,
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub max_rel_error_gradient: f64,
    pub max_rel_error_hessian: f64,
    pub max_rel_error_dual_gradient: f64,
    pub max_rel_error_dual_hessian: f64,
    pub sample_count: usize,
    pub step: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSample {
    pub z: Vec<f64>,
    pub cos_theta: f64,
    pub predicted: i8,
    pub empirical: i8,
    /// `(Π(x₂+hz) + Π(x₂−hz) − 2Π(x₂))/h²`
    pub second_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSampling {
    pub samples: Vec<DirectionSample>,
    pub excluded: usize,
    pub agreement_fraction: f64,
    pub h: f64,
    pub seed: u64,
}

pub fn random_unit(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = unit(&z) {
            return u;
        }
    }
}

/// A point drawn uniformly in the ball of the given radius.
pub fn random_in_ball(rng: &mut impl Rng, n: usize, radius: f64) -> Vec<f64> {
    let dir = random_unit(rng, n);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

/// Exhaustive search over the uniform grid on `[−radius, radius]ⁿ`.
///
/// For `n > 2` the search runs over the line `x = t·f/|f|` (critical points
/// are parallel to `f`), and `note` says so.
pub fn grid_minimize(spec: &ProblemSpec, radius: f64, points_per_axis: usize) -> Result<GridSearchResult> {
    let lambda = spec.lambda();
    if radius.is_nan() || radius < 2.0 * (2.0 * lambda).sqrt() {
        return Err(Error::InvalidParameter(format!("grid radius {radius} is below 2*sqrt(2*lambda)")));
    }
    if points_per_axis < 101 {
        return Err(Error::InvalidParameter(format!("need at least 101 points per axis, got {points_per_axis}")));
    }
    let spacing = 2.0 * radius / (points_per_axis - 1) as f64;
    let node = |i: usize| -radius + i as f64 * spacing;
    let n = spec.dim();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |x: Vec<f64>| {
        let v = spec.primal_value(&x).expect("grid point has the right dimension");
        // strict comparison keeps the lowest index on ties
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, x));
        }
    };

    let note = match n {
        1 => {
            (0..points_per_axis).for_each(|i| consider(vec![node(i)]));
            None
        }
        2 => {
            for i in 0..points_per_axis {
                for j in 0..points_per_axis {
                    consider(vec![node(i), node(j)]);
                }
            }
            None
        }
        _ => {
            let axis = unit(spec.f()).unwrap_or_else(|| {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                e
            });
            for i in 0..points_per_axis {
                let t = node(i);
                consider(axis.iter().map(|a| a * t).collect());
            }
            Some(format!("n = {n} > 2: searched the line through 0 along f/|f|"))
        }
    };

    let (best_value, best_x) = best.expect("grid is non-empty");
    Ok(GridSearchResult { best_x, best_value, grid_radius: radius, points_per_axis, spacing, note })
}

fn rel_err(fd: &[f64], an: &[f64]) -> f64 {
    let diff = fd.iter().zip(an).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = an.iter().map(|v| v.abs()).fold(1.0, f64::max);
    diff / scale
}

/// Central differences against the analytic derivatives.
///
/// Primal points are drawn in the ball `|x| ≤ 3√(2λ)`. Dual checks run on a
/// uniform grid over `[−αλ + 0.1, 10]` with `|σ| < 0.05` skipped. Hessians are
/// differenced from the analytic gradients.
pub fn finite_difference_check(spec: &ProblemSpec, samples: usize, step: f64, seed: u64) -> Result<FdReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::InvalidParameter(format!("step {step} must lie in (0, 1e-3]")));
    }
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = 3.0 * (2.0 * spec.lambda()).sqrt();
    let mut max_g = 0.0f64;
    let mut max_h = 0.0f64;
    for _ in 0..samples {
        let x = random_in_ball(&mut rng, n, radius);
        let grad = spec.primal_gradient(&x)?;
        let hess = spec.primal_hessian(&x)?;
        let mut fd_grad = vec![0.0; n];
        let mut fd_hess = vec![0.0; n * n];
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            fd_grad[i] = (spec.primal_value(&xp)? - spec.primal_value(&xm)?) / (2.0 * step);
            let gp = spec.primal_gradient(&xp)?;
            let gm = spec.primal_gradient(&xm)?;
            for j in 0..n {
                fd_hess[j * n + i] = (gp[j] - gm[j]) / (2.0 * step);
            }
        }
        let an_hess: Vec<f64> = (0..n * n).map(|k| hess[(k / n, k % n)]).collect();
        max_g = max_g.max(rel_err(&fd_grad, &grad));
        max_h = max_h.max(rel_err(&fd_hess, &an_hess));
    }

    let lo = -spec.alpha_lambda() + 0.1;
    let hi = 10.0f64.max(lo + 1.0);
    let mut max_dg = 0.0f64;
    let mut max_dh = 0.0f64;
    let count = samples.max(2);
    for k in 0..count {
        let s = lo + (hi - lo) * k as f64 / (count - 1) as f64;
        if s.abs() < 0.05 {
            continue;
        }
        let fd_g = (spec.dual_value(s + step)? - spec.dual_value(s - step)?) / (2.0 * step);
        let fd_h = (spec.dual_gradient(s + step)? - spec.dual_gradient(s - step)?) / (2.0 * step);
        max_dg = max_dg.max(rel_err(&[fd_g], &[spec.dual_gradient(s)?]));
        max_dh = max_dh.max(rel_err(&[fd_h], &[spec.dual_hessian(s)?]));
    }

    Ok(FdReport {
        max_rel_error_gradient: max_g,
        max_rel_error_hessian: max_h,
        max_rel_error_dual_gradient: max_dg,
        max_rel_error_dual_hessian: max_dh,
        sample_count: samples,
        step,
        seed,
    })
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Empirical curvature at the saddle from symmetric second differences in
/// random directions, compared with the side of the cone each direction is on.
pub fn sample_saddle_directions(
    spec: &ProblemSpec,
    saddle: &CriticalPoint,
    cone: &SaddleCone,
    count: usize,
    h: f64,
    seed: u64,
) -> Result<SaddleSampling> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..count).map(|_| random_unit(&mut rng, spec.dim())).collect();
    sample_directions(spec, saddle, cone, &dirs, h, seed)
}

/// Same as [`sample_saddle_directions`] for caller-chosen directions.
pub fn sample_directions(
    spec: &ProblemSpec,
    saddle: &CriticalPoint,
    cone: &SaddleCone,
    dirs: &[Vec<f64>],
    h: f64,
    seed: u64,
) -> Result<SaddleSampling> {
    if dirs.is_empty() {
        return Err(Error::InvalidParameter("need at least one direction".into()));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let fnorm = norm(spec.f());
    let centre = spec.primal_value(&saddle.x)?;
    let mut samples = Vec::with_capacity(dirs.len());
    let mut excluded = 0;
    let mut agree = 0;
    for raw in dirs {
        let z = unit(raw).ok_or(Error::ZeroDirection)?;
        let cos_theta = dot(spec.f(), &z) / fnorm;
        let step = |t: f64| saddle.x.iter().zip(&z).map(|(x, d)| x + t * d).collect::<Vec<f64>>();
        let sd = (spec.primal_value(&step(h))? + spec.primal_value(&step(-h))? - 2.0 * centre) / (h * h);
        let predicted = if cos_theta.abs() < cone.threshold { -1 } else { 1 };
        let empirical = sign(sd);
        if (cos_theta.abs() - cone.threshold).abs() <= SAMPLING_BAND {
            excluded += 1;
        } else if predicted == empirical {
            agree += 1;
        }
        samples.push(DirectionSample { z, cos_theta, predicted, empirical, second_difference: sd });
    }
    let considered = dirs.len() - excluded;
    let agreement_fraction = if considered == 0 { 1.0 } else { agree as f64 / considered as f64 };
    Ok(SaddleSampling { samples, excluded, agreement_fraction, h, seed })
}

/// Roots of `g(σ) = 2σ²(σ/α + λ) − |f|²` located by scanning a uniform grid
/// on `[lo, hi]` for sign changes and bisecting each bracket.
pub fn bracket_dual_roots(spec: &ProblemSpec, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let g = |s: f64| spec.dual_cubic(s);
    let mut roots = Vec::new();
    let node = |i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    let mut prev = node(0);
    let mut g_prev = g(prev);
    for i in 1..points {
        let cur = node(i);
        let g_cur = g(cur);
        if g_prev == 0.0 {
            roots.push(prev);
        } else if g_prev.signum() != g_cur.signum() && g_cur != 0.0 {
            let (mut a, mut b) = (prev, cur);
            let mut ga = g_prev;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                let gm = g(m);
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = cur;
        g_prev = g_cur;
    }
    if g_prev == 0.0 {
        roots.push(prev);
    }
    roots
}
