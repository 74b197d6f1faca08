//! Modified Laguerre functions `Ĺ_n^λ(x) = x^λ e^{−σx} L_n^λ(2σx)` and their
//! closed-form substantial fractional derivatives.
//!
//! Both operators used by the solvers map a basis function onto a single basis
//! function with a shifted index:
//!
//! * `D_s^{1−ν} Ĺ_n^λ = Γ(λ+n+1)/Γ(ν+λ+n) · Ĺ_n^{λ+ν−1}`
//! * `D_s^{2−ν} Ĺ_n^λ = Γ(λ+n+1)/Γ(ν+λ+n−1) · Ĺ_n^{λ+ν−2}`
//!
//! so they are returned as a [`DerivativeTerm`] (scalar, new index) instead of a
//! function value.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::laguerre;
use crate::quadrature::gauss_rule;
use crate::special::gamma_ratio;

/// The tempered operator being solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquationKind {
    /// `D_s^{1−ν} u = f`
    Advection,
    /// `D_s^{2−ν} u = f`
    Diffusion,
}

impl EquationKind {
    /// Derivative order `1 − ν` or `2 − ν`.
    pub fn order(self, nu: f64) -> f64 {
        match self {
            EquationKind::Advection => 1.0 - nu,
            EquationKind::Diffusion => 2.0 - nu,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EquationKind::Advection => "advection",
            EquationKind::Diffusion => "diffusion",
        }
    }
}

/// Basis index `λ`, fractional index `ν` and tempering rate `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub lambda: f64,
    pub nu: f64,
    pub sigma: f64,
}

impl BasisParams {
    pub fn new(lambda: f64, nu: f64, sigma: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return domain(format!("fractional index must lie in (0, 1), got ν = {nu}"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return domain(format!("tempering rate must be positive, got σ = {sigma}"));
        }
        if !(lambda > -2.0) || !lambda.is_finite() {
            return domain(format!("basis index must exceed −2, got λ = {lambda}"));
        }
        Ok(Self { lambda, nu, sigma })
    }

    /// Index of the image space, `λ + ν − 1` or `λ + ν − 2`.
    pub fn image_index(&self, kind: EquationKind) -> f64 {
        match kind {
            EquationKind::Advection => self.lambda + self.nu - 1.0,
            EquationKind::Diffusion => self.lambda + self.nu - 2.0,
        }
    }
}

/// `coeff · Ĺ_n^{lambda}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeTerm {
    pub coeff: f64,
    pub lambda: f64,
}

/// `x^λ e^{−σx}`; `x = 0` is allowed only for `λ ≥ 0`.
pub fn prefactor(lambda: f64, sigma: f64, x: f64) -> Result<f64> {
    if x > 0.0 {
        return Ok((lambda * x.ln() - sigma * x).exp());
    }
    if x == 0.0 {
        return match lambda {
            0.0 => Ok(1.0),
            l if l > 0.0 => Ok(0.0),
            _ => domain(format!("x^λ is singular at 0 for λ = {lambda}")),
        };
    }
    domain(format!(
        "modified Laguerre functions live on x ≥ 0, got {x}"
    ))
}

/// `Ĺ_n^λ(x) = x^λ e^{−σx} L_n^λ(2σx)`.
pub fn mlf_eval(n: usize, lambda: f64, sigma: f64, x: f64) -> Result<f64> {
    Ok(prefactor(lambda, sigma, x)? * laguerre::eval(n, lambda, 2.0 * sigma * x))
}

/// `[Ĺ_0^λ(x), …, Ĺ_{n_max}^λ(x)]`.
pub fn mlf_eval_batch(n_max: usize, lambda: f64, sigma: f64, x: f64) -> Result<Vec<f64>> {
    let pre = prefactor(lambda, sigma, x)?;
    Ok(laguerre::eval_batch(n_max, lambda, 2.0 * sigma * x)
        .into_iter()
        .map(|v| pre * v)
        .collect())
}

/// `D_s^{1−ν} Ĺ_n^λ = Γ(λ+n+1)/Γ(ν+λ+n) · Ĺ_n^{λ+ν−1}`.
pub fn substantial_deriv_advection_coeff(n: usize, p: &BasisParams) -> Result<DerivativeTerm> {
    let nf = n as f64;
    if !(p.lambda + nf + 1.0 > 0.0) {
        return domain(format!(
            "advection identity needs λ + n + 1 > 0 (λ = {}, n = {n})",
            p.lambda
        ));
    }
    Ok(DerivativeTerm {
        coeff: gamma_ratio(p.lambda + nf + 1.0, p.nu + p.lambda + nf)?,
        lambda: p.lambda + p.nu - 1.0,
    })
}

/// `D_s^{2−ν} Ĺ_n^λ = Γ(n+λ+1)/Γ(n−1+λ+ν) · Ĺ_n^{λ+ν−2}`.
///
/// At `n = 0` with `λ + ν < 1` the denominator is the (negative) gamma value
/// on `(−1, 0)`, so the coefficient is negative.
pub fn substantial_deriv_diffusion_coeff(n: usize, p: &BasisParams) -> Result<DerivativeTerm> {
    let nf = n as f64;
    if !(p.lambda + nf + 1.0 > 0.0) {
        return domain(format!(
            "diffusion identity needs λ + n + 1 > 0 (λ = {}, n = {n})",
            p.lambda
        ));
    }
    let b = nf - 1.0 + p.lambda + p.nu;
    if b <= 0.0 && b == b.floor() {
        return domain(format!(
            "D_s^{{2−ν}} annihilates Ĺ_{n}^λ when n − 1 + λ + ν = {b} (λ = {}, ν = {})",
            p.lambda, p.nu
        ));
    }
    Ok(DerivativeTerm {
        coeff: gamma_ratio(nf + p.lambda + 1.0, nf - 1.0 + p.lambda + p.nu)?,
        lambda: p.lambda + p.nu - 2.0,
    })
}

pub fn substantial_deriv_coeff(
    kind: EquationKind,
    n: usize,
    p: &BasisParams,
) -> Result<DerivativeTerm> {
    match kind {
        EquationKind::Advection => substantial_deriv_advection_coeff(n, p),
        EquationKind::Diffusion => substantial_deriv_diffusion_coeff(n, p),
    }
}

/// Closed-form value of `D_s^{order} Ĺ_n^λ` at `x`.
pub fn substantial_deriv_eval(
    kind: EquationKind,
    n: usize,
    p: &BasisParams,
    x: f64,
) -> Result<f64> {
    let t = substantial_deriv_coeff(kind, n, p)?;
    Ok(t.coeff * mlf_eval(n, t.lambda, p.sigma, x)?)
}

/// `‖Ĺ_n^λ‖²` in the weight `x^{2−λ−ν}`, i.e.
/// `∫₀^∞ x^{2+λ−ν} e^{−2σx} [L_n^λ(2σx)]² dx`, by an `(n+2)`-point Gauss rule.
pub fn regular_pair_norm_check(n: usize, p: &BasisParams) -> Result<f64> {
    let rule = gauss_rule(n + 1, 2.0 + p.lambda - p.nu, p.sigma)?;
    rule.integrate(|x| laguerre::eval(n, p.lambda, 2.0 * p.sigma * x).powi(2))
}
