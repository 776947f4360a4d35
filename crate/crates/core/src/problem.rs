//! The double-well objective
//!
//! `Π(x) = (α/2)(½|x|² − λ)² − ⟨f, x⟩`
//!
//! together with the pieces of its canonical dual: the geometric operator
//! `Λ(x) = ½|x|² − λ`, the canonical energy `V(ξ) = (α/2)ξ²` and its conjugate,
//! the total complementary function `Ξ(x, σ)` and the dual function `Π^d(σ)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around `8α²λ³/27` treated as the double-root case.
pub const REGIME_EPS: f64 = 1e-9;

/// One instance of the double-well problem over `ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ProblemSpec {
    alpha: f64,
    lambda: f64,
    f: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    alpha: f64,
    lambda: f64,
    f: Vec<f64>,
    n: usize,
}

impl TryFrom<RawSpec> for ProblemSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.f.len() != raw.n {
            return Err(Error::DimensionMismatch { expected: raw.n, got: raw.f.len() });
        }
        ProblemSpec::new(raw.alpha, raw.lambda, raw.f)
    }
}

impl From<ProblemSpec> for RawSpec {
    fn from(spec: ProblemSpec) -> Self {
        let n = spec.f.len();
        RawSpec { alpha: spec.alpha, lambda: spec.lambda, f: spec.f, n }
    }
}

impl ProblemSpec {
    pub fn new(alpha: f64, lambda: f64, f: Vec<f64>) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if f.is_empty() {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("f must be finite".into()));
        }
        Ok(Self { alpha, lambda, f })
    }

    /// The unforced problem `f = 0` in dimension `n`.
    pub fn zero_force(alpha: f64, lambda: f64, n: usize) -> Result<Self> {
        Self::new(alpha, lambda, vec![0.0; n])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// `|f|²`
    pub fn force_norm_sq(&self) -> f64 {
        norm_sq(&self.f)
    }

    pub fn force_norm(&self) -> f64 {
        self.force_norm_sq().sqrt()
    }

    /// `8α²λ³/27`, the value of `|f|²` at which two dual roots merge.
    pub fn threshold(&self) -> f64 {
        8.0 * self.alpha * self.alpha * self.lambda.powi(3) / 27.0
    }

    /// `αλ`; the dual domain is `[−αλ, +∞)`.
    pub fn alpha_lambda(&self) -> f64 {
        self.alpha * self.lambda
    }

    /// Same parameters with a different force term.
    pub fn with_force(&self, f: Vec<f64>) -> Result<Self> {
        Self::new(self.alpha, self.lambda, f)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// `Λ(x) = ½|x|² − λ`
    pub fn geometric_operator(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(0.5 * norm_sq(x) - self.lambda)
    }

    /// `V(ξ) = (α/2)ξ²`
    pub fn canonical_energy(&self, xi: f64) -> f64 {
        0.5 * self.alpha * xi * xi
    }

    /// `V^c(σ) = σ²/(2α)` on `[−αλ, +∞)`.
    pub fn canonical_conjugate(&self, sigma: f64) -> Result<f64> {
        self.check_domain(sigma)?;
        Ok(sigma * sigma / (2.0 * self.alpha))
    }

    /// The double-well energy `W(x) = V(Λ(x))`.
    pub fn double_well(&self, x: &[f64]) -> Result<f64> {
        Ok(self.canonical_energy(self.geometric_operator(x)?))
    }

    /// `Π(x) = (α/2)(½|x|² − λ)² − ⟨f, x⟩`
    pub fn primal_value(&self, x: &[f64]) -> Result<f64> {
        let w = self.double_well(x)?;
        Ok(w - dot(&self.f, x))
    }

    /// `∇Π(x) = αΛ(x)x − f`
    pub fn primal_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scale = self.alpha * self.geometric_operator(x)?;
        Ok(x.iter().zip(&self.f).map(|(xi, fi)| scale * xi - fi).collect())
    }

    /// `∇²Π(x) = α(xxᵀ + Λ(x)I)`
    pub fn primal_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let lam = self.geometric_operator(x)?;
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { lam } else { 0.0 };
            self.alpha * (x[i] * x[j] + diag)
        }))
    }

    fn check_domain(&self, sigma: f64) -> Result<()> {
        let lower = -self.alpha_lambda();
        if sigma.is_nan() || sigma < lower {
            return Err(Error::OutsideDualDomain { sigma, lower });
        }
        Ok(())
    }

    /// `Ξ(x, σ) = σΛ(x) − σ²/(2α) − ⟨f, x⟩`
    pub fn total_complementary(&self, x: &[f64], sigma: f64) -> Result<f64> {
        let lam = self.geometric_operator(x)?;
        let conj = self.canonical_conjugate(sigma)?;
        Ok(sigma * lam - conj - dot(&self.f, x))
    }

    /// `Π^d(σ) = −|f|²/(2σ) − σ²/(2α) − σλ`
    pub fn dual_value(&self, sigma: f64) -> Result<f64> {
        self.check_domain(sigma)?;
        if sigma == 0.0 {
            return Err(Error::DualPole);
        }
        Ok(-self.force_norm_sq() / (2.0 * sigma) - sigma * sigma / (2.0 * self.alpha) - sigma * self.lambda)
    }

    /// `∇Π^d(σ) = |f|²/(2σ²) − σ/α − λ`
    pub fn dual_gradient(&self, sigma: f64) -> Result<f64> {
        if sigma == 0.0 {
            return Err(Error::DualPole);
        }
        Ok(self.force_norm_sq() / (2.0 * sigma * sigma) - sigma / self.alpha - self.lambda)
    }

    /// `∇²Π^d(σ) = −|f|²/σ³ − 1/α`
    pub fn dual_hessian(&self, sigma: f64) -> Result<f64> {
        if sigma == 0.0 {
            return Err(Error::DualPole);
        }
        Ok(-self.force_norm_sq() / sigma.powi(3) - 1.0 / self.alpha)
    }

    /// The dual stationarity polynomial `g(σ) = 2σ²(σ/α + λ) − |f|²`.
    pub fn dual_cubic(&self, sigma: f64) -> f64 {
        2.0 * sigma * sigma * (sigma / self.alpha + self.lambda) - self.force_norm_sq()
    }

    /// `g'(σ) = 6σ²/α + 4λσ`
    pub fn dual_cubic_derivative(&self, sigma: f64) -> f64 {
        6.0 * sigma * sigma / self.alpha + 4.0 * self.lambda * sigma
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMA1: f64 = 0.532_088_886_237_956_1;

    fn spec(f: &[f64]) -> ProblemSpec {
        ProblemSpec::new(1.0, 3.0, f.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ProblemSpec::new(0.0, 3.0, vec![1.0]).is_err());
        assert!(ProblemSpec::new(1.0, -1.0, vec![1.0]).is_err());
        assert!(ProblemSpec::new(1.0, 1.0, vec![]).is_err());
        assert!(ProblemSpec::new(f64::NAN, 1.0, vec![1.0]).is_err());
    }

    #[test]
    fn primal_value_examples() {
        assert_eq!(spec(&[0.0, 0.0]).primal_value(&[0.0, 0.0]).unwrap(), 4.5);
        let x1 = 1.0 / SIGMA1;
        let v = spec(&[1.0, 1.0]).primal_value(&[x1, x1]).unwrap();
        let closed = -1.5 * SIGMA1 * SIGMA1 - 6.0 * SIGMA1;
        assert!((v - closed).abs() < 1e-12);
        assert!((v + 3.617_211_2).abs() < 1e-7);
        let r = 3.0f64.sqrt();
        assert!(spec(&[0.0, 0.0]).primal_value(&[r, r]).unwrap().abs() < 1e-14);
        assert!(matches!(
            spec(&[0.0, 0.0]).primal_value(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn primal_gradient_examples() {
        assert_eq!(spec(&[0.0, 0.0]).primal_gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(spec(&[1.0, 1.0]).primal_gradient(&[0.0, 0.0]).unwrap(), vec![-1.0, -1.0]);
        let x1 = 1.0 / SIGMA1;
        let g = spec(&[1.0, 1.0]).primal_gradient(&[x1, x1]).unwrap();
        assert!(norm(&g) < 1e-9);
    }

    #[test]
    fn primal_hessian_examples() {
        let h = spec(&[0.0, 0.0]).primal_hessian(&[0.0, 0.0]).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, -3.0]));

        let x1 = 1.0 / SIGMA1;
        let h = spec(&[1.0, 1.0]).primal_hessian(&[x1, x1]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[x1 * x1 + SIGMA1, x1 * x1, x1 * x1, x1 * x1 + SIGMA1]);
        assert!((h - expected).abs().max() < 1e-9);

        let s = ProblemSpec::new(2.0, 1.5, vec![0.3]).unwrap();
        let x = 0.7;
        let h = s.primal_hessian(&[x]).unwrap();
        assert!((h[(0, 0)] - 2.0 * (1.5 * x * x - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn dual_value_examples() {
        let v = spec(&[1.0, 1.0]).dual_value(SIGMA1).unwrap();
        assert!((v + 3.617_211_2).abs() < 1e-7);
        assert_eq!(spec(&[0.0, 0.0]).dual_value(-1.0).unwrap(), 2.5);
        assert_eq!(spec(&[2.0, 2.0]).dual_value(-2.0).unwrap(), 6.0);
        assert_eq!(spec(&[1.0, 1.0]).dual_value(0.0), Err(Error::DualPole));
        assert!(matches!(spec(&[1.0, 1.0]).dual_value(-3.5), Err(Error::OutsideDualDomain { .. })));
    }

    #[test]
    fn dual_gradient_examples() {
        assert!(spec(&[1.0, 1.0]).dual_gradient(SIGMA1).unwrap().abs() < 1e-9);
        assert_eq!(spec(&[0.0, 0.0]).dual_gradient(-3.0).unwrap(), 0.0);
        assert_eq!(spec(&[2.0, 2.0]).dual_gradient(1.0).unwrap(), 0.0);
        assert_eq!(spec(&[2.0, 2.0]).dual_gradient(0.0), Err(Error::DualPole));
    }

    #[test]
    fn dual_hessian_examples() {
        assert_eq!(spec(&[2.0, 2.0]).dual_hessian(1.0).unwrap(), -9.0);
        assert_eq!(spec(&[0.0, 0.0]).dual_hessian(-1.0).unwrap(), -1.0);
        let sigma2 = -0.652_703_644_666_139_3;
        assert!(spec(&[1.0, 1.0]).dual_hessian(sigma2).unwrap() > 0.0);
        // closed form at a root of g
        let h = spec(&[1.0, 1.0]).dual_hessian(SIGMA1).unwrap();
        assert!((h - (3.0 * SIGMA1 + 6.0) / -SIGMA1).abs() < 1e-9);
    }

    #[test]
    fn total_complementary_examples() {
        assert_eq!(spec(&[0.0, 0.0]).total_complementary(&[0.0, 0.0], 0.0).unwrap() + 0.0, 0.0);
        let s = spec(&[1.0, 1.0]);
        let x1 = 1.0 / SIGMA1;
        let xi = s.total_complementary(&[x1, x1], SIGMA1).unwrap();
        assert!((xi - s.primal_value(&[x1, x1]).unwrap()).abs() < 1e-12);
        let xi0 = s.total_complementary(&[0.0, 0.0], SIGMA1).unwrap();
        assert!((xi0 + 1.737_82).abs() < 1e-5);
        assert!(xi0 <= s.primal_value(&[0.0, 0.0]).unwrap());
    }

    #[test]
    fn spec_serde_checks_dimension() {
        let bad = r#"{"alpha":1.0,"lambda":3.0,"f":[1.0],"n":2}"#;
        assert!(serde_json::from_str::<ProblemSpec>(bad).is_err());
        let good = r#"{"alpha":1.0,"lambda":3.0,"f":[1.0,2.0],"n":2}"#;
        let s: ProblemSpec = serde_json::from_str(good).unwrap();
        assert_eq!(s.dim(), 2);
    }
}
