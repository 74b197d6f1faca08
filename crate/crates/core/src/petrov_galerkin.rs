//! Diagonal Petrov-Galerkin solvers for
//!
//! * advection `D_s^{1−ν} u = f`, trial `Ĺ_k^λ`, test `Ĺ_n^{λ+ν−1}`;
//! * diffusion `D_s^{2−ν} u = f`, trial `Ĺ_k^λ`, test `Ĺ_n^{λ+ν−2}`.
//!
//! Because the derivative of a trial function is a single test-space function,
//! the stiffness matrix is diagonal in the `x^{−μ}`-weighted inner product of
//! the test space. Trial and test functions carry `(k+1)` power scalings that
//! make the diagonal entries tend to a constant.
//!
//! For diffusion the test index `κ = λ+ν−2` may sit in `(−2, −1]`, where the
//! Gram integral `∫ x^κ e^{−2σx} L_k^κ L_n^κ dx` diverges at the origin. It is
//! read as a Hadamard finite part, which is exactly the continuation in `κ` of
//! the classical orthogonality relation.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Result};
use crate::laguerre;
use crate::linalg::DenseMatrix;
use crate::mlf::{mlf_eval_batch, prefactor, substantial_deriv_coeff, BasisParams, EquationKind};
use crate::quadrature::{finite_part_integral, gauss_rule};
use crate::special::{gamma, ln_gamma};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A right-hand side `f`, optionally tagged with the exact solution it was
/// manufactured from.
#[derive(Clone)]
pub struct RhsFunction {
    label: String,
    f: RealFn,
    exact: Option<RealFn>,
}

impl RhsFunction {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            exact: None,
        }
    }

    pub fn with_exact(mut self, u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(u));
        self
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0).with_exact(|_| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn exact(&self, x: f64) -> Option<f64> {
        self.exact.as_ref().map(|u| u(x))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }
}

impl fmt::Debug for RhsFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsFunction")
            .field("label", &self.label)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// `(k+1)` power applied to trial functions: `(λ−ν+1)/2` or `(λ−ν+2)/2`.
pub fn trial_scaling(p: &BasisParams, kind: EquationKind) -> f64 {
    match kind {
        EquationKind::Advection => (p.lambda - p.nu + 1.0) / 2.0,
        EquationKind::Diffusion => (p.lambda - p.nu + 2.0) / 2.0,
    }
}

/// `(n+1)` power applied to test functions: half the test index.
pub fn test_scaling(p: &BasisParams, kind: EquationKind) -> f64 {
    p.image_index(kind) / 2.0
}

/// Default quadrature size for the right-hand side: `2N` points.
pub fn default_quad_order(n: usize) -> usize {
    (2 * n).max(n + 1)
}

fn check_params(p: &BasisParams, kind: EquationKind) -> Result<()> {
    if !(p.lambda > -1.0) {
        return domain(format!("trial index must exceed −1, got λ = {}", p.lambda));
    }
    let floor = match kind {
        EquationKind::Advection => -1.0,
        EquationKind::Diffusion => -2.0,
    };
    let mu = p.image_index(kind);
    if !(mu > floor) {
        return domain(format!("test index {mu} is below {floor}"));
    }
    if kind == EquationKind::Diffusion && mu == -1.0 {
        return domain("test index λ + ν − 2 = −1 has no finite-part Gram matrix");
    }
    Ok(())
}

/// `A_nn = (2σ)^{−e} Γ(λ+n+1) / (n! (n+1)^λ)`, `e = λ+ν` (advection) or
/// `λ+ν−1` (diffusion).
pub fn assemble_diagonal(n: usize, p: &BasisParams, kind: EquationKind) -> Result<Vec<f64>> {
    check_params(p, kind)?;
    let e = p.image_index(kind) + 1.0;
    let log_base = -e * (2.0 * p.sigma).ln();
    (0..=n)
        .map(|k| {
            let kf = k as f64;
            Ok((log_base + ln_gamma(p.lambda + kf + 1.0)?
                - ln_gamma(kf + 1.0)?
                - p.lambda * (kf + 1.0).ln())
            .exp())
        })
        .collect()
}

/// Load vector `F_n = (n+1)^{−μ/2} ∫ f e^{−σx} L_n^μ(2σx) dx`, `μ` the test
/// index, on a `quad_order`-point Gauss rule.
///
/// Advection splits the integrand as `x^μ e^{−2σx} · f e^{σx} x^{−μ} L_n^μ`.
/// Diffusion uses the weight `x^{λ+ν} e^{−2σx}` (always admissible) against
/// `f e^{σx} x^{−(λ+ν)} L_n^{λ+ν−2}`, which needs `f = O(x^{λ+ν−1+ε})` at the
/// origin for the integral to converge.
pub fn assemble_rhs(
    n: usize,
    p: &BasisParams,
    kind: EquationKind,
    f: &RhsFunction,
    quad_order: usize,
) -> Result<Vec<f64>> {
    check_params(p, kind)?;
    if quad_order < n + 1 {
        return domain(format!(
            "quad_order must be at least N + 1 = {}, got {quad_order}",
            n + 1
        ));
    }
    let mu = p.image_index(kind);
    let weight_exponent = match kind {
        EquationKind::Advection => mu,
        EquationKind::Diffusion => p.lambda + p.nu,
    };
    let rule = gauss_rule(quad_order - 1, weight_exponent, p.sigma)?;
    let two_sigma = 2.0 * p.sigma;
    let mut load = vec![0.0; n + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let g = f.eval(x) * (p.sigma * x - weight_exponent * x.ln()).exp();
        if !g.is_finite() {
            return Err(crate::error::SpectralError::NonFinite { x, value: g });
        }
        for (slot, l) in load
            .iter_mut()
            .zip(laguerre::eval_batch(n, mu, two_sigma * x))
        {
            *slot += w * g * l;
        }
    }
    let t = test_scaling(p, kind);
    for (k, slot) in load.iter_mut().enumerate() {
        *slot *= (k as f64 + 1.0).powf(-t);
    }
    Ok(load)
}

/// `u_N = Σ_k c_k (k+1)^{−s} Ĺ_k^λ` together with the data needed to
/// evaluate it and its substantial derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub params: BasisParams,
    pub kind: EquationKind,
    pub coeffs: Vec<f64>,
    pub scaling_exponent: f64,
}

impl SpectralSolution {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        let basis = mlf_eval_batch(self.degree(), p.lambda, p.sigma, x)?;
        Ok(self
            .coeffs
            .iter()
            .zip(basis)
            .enumerate()
            .map(|(k, (c, b))| c * (k as f64 + 1.0).powf(-self.scaling_exponent) * b)
            .sum())
    }

    pub fn evaluate(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// `D_s^{order} u_N(x)` applied termwise through the closed-form identities.
    pub fn eval_substantial_derivative(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        let mu = p.image_index(self.kind);
        let pre = prefactor(mu, p.sigma, x)?;
        let polys = laguerre::eval_batch(self.degree(), mu, 2.0 * p.sigma * x);
        let mut total = 0.0;
        for (k, (c, l)) in self.coeffs.iter().zip(polys).enumerate() {
            if *c == 0.0 {
                continue;
            }
            let term = substantial_deriv_coeff(self.kind, k, p)?;
            total += c * (k as f64 + 1.0).powf(-self.scaling_exponent) * term.coeff * l;
        }
        Ok(pre * total)
    }

    pub fn evaluate_substantial_derivative(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter()
            .map(|&x| self.eval_substantial_derivative(x))
            .collect()
    }
}

/// Solves the diagonal system `A c = F`.
pub fn solve(
    n: usize,
    p: &BasisParams,
    kind: EquationKind,
    f: &RhsFunction,
    quad_order: usize,
) -> Result<SpectralSolution> {
    let diag = assemble_diagonal(n, p, kind)?;
    let load = assemble_rhs(n, p, kind, f, quad_order)?;
    Ok(SpectralSolution {
        params: *p,
        kind,
        coeffs: load.iter().zip(&diag).map(|(f, a)| f / a).collect(),
        scaling_exponent: trial_scaling(p, kind),
    })
}

/// Removes a nonzero initial value `u(0) = u0` from an advection problem:
/// `u = w + u0 e^{−σx}` with `D_s^{1−ν} w = f − u0 x^{ν−1} e^{−σx} / Γ(ν)`.
///
/// The returned right-hand side belongs to `w`; its exact solution, if any,
/// is shifted accordingly.
pub fn lift_initial_condition(u0: f64, p: &BasisParams, f: &RhsFunction) -> Result<RhsFunction> {
    if u0 == 0.0 {
        return Ok(f.clone());
    }
    let c = u0 / gamma(p.nu)?;
    let (nu, sigma) = (p.nu, p.sigma);
    let inner = f.f.clone();
    let lifted = RhsFunction {
        label: format!("{}-lifted", f.label),
        f: Arc::new(move |x| inner(x) - c * (x.powf(nu - 1.0) * (-sigma * x).exp())),
        exact: f
            .exact
            .clone()
            .map(|u| -> RealFn { Arc::new(move |x| u(x) - u0 * (-sigma * x).exp()) }),
    };
    Ok(lifted)
}

/// Full Petrov-Galerkin matrix `M[n][k] = (D_s φ_k, ψ_n)` assembled by
/// quadrature instead of from the identity's diagonal structure.
///
/// Rows are test functions, columns trial functions, both with their
/// scalings. The advection Gram integrals use an `(N+2)`-point Gauss rule;
/// diffusion ones use the finite-part integral for `x^κ e^{−2σx}`.
pub fn assemble_full_matrix(n: usize, p: &BasisParams, kind: EquationKind) -> Result<DenseMatrix> {
    check_params(p, kind)?;
    let mu = p.image_index(kind);
    let two_sigma = 2.0 * p.sigma;
    let s = trial_scaling(p, kind);
    let t = test_scaling(p, kind);
    let coeffs = (0..=n)
        .map(|k| substantial_deriv_coeff(kind, k, p).map(|d| d.coeff))
        .collect::<Result<Vec<_>>>()?;

    let gram: Box<dyn Fn(usize, usize) -> Result<f64>> = if mu > -1.0 {
        let rule = gauss_rule(n + 1, mu, p.sigma)?;
        let table: Vec<Vec<f64>> = rule
            .nodes
            .iter()
            .map(|&x| laguerre::eval_batch(n, mu, two_sigma * x))
            .collect();
        Box::new(move |i, k| {
            Ok(rule
                .weights
                .iter()
                .zip(&table)
                .map(|(w, l)| w * l[i] * l[k])
                .sum())
        })
    } else {
        // L_n^μ(0) and d/dx L_n^μ(2σx) at 0 (= −2σ L_{n−1}^{μ+1}(0))
        let at_zero: Vec<f64> = (0..=n).map(|i| laguerre::value_at_zero(i, mu)).collect();
        let slope: Vec<f64> = (0..=n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    -two_sigma * laguerre::value_at_zero(i - 1, mu + 1.0)
                }
            })
            .collect();
        let sigma = p.sigma;
        Box::new(move |i, k| {
            finite_part_integral(
                |x| laguerre::eval(i, mu, two_sigma * x) * laguerre::eval(k, mu, two_sigma * x),
                at_zero[i] * at_zero[k],
                slope[i] * at_zero[k] + at_zero[i] * slope[k],
                i + k,
                mu,
                sigma,
            )
        })
    };

    let mut m = DenseMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for k in 0..=n {
            let scale = (i as f64 + 1.0).powf(-t) * (k as f64 + 1.0).powf(-s) * coeffs[k];
            m[(i, k)] = scale * gram(i, k)?;
        }
    }
    Ok(m)
}

/// `(max off-diagonal ratio, max diagonal mismatch)` of the quadrature-built
/// matrix against [`assemble_diagonal`]. The ratio is
/// `|M_ik| / sqrt(|M_ii M_kk|)`.
pub fn diagonality_defect(n: usize, p: &BasisParams, kind: EquationKind) -> Result<(f64, f64)> {
    let m = assemble_full_matrix(n, p, kind)?;
    let diag = assemble_diagonal(n, p, kind)?;
    let mut off = 0.0f64;
    let mut mismatch = 0.0f64;
    for i in 0..=n {
        mismatch = mismatch.max((m[(i, i)] - diag[i]).abs() / diag[i].abs());
        for k in 0..=n {
            if i != k {
                off = off.max(m[(i, k)].abs() / (m[(i, i)] * m[(k, k)]).abs().sqrt());
            }
        }
    }
    Ok((off, mismatch))
}
