//! Brute-force substantial fractional derivative straight from the integral
//! definition
//!
//! `D_s^ν f(x) = 1/Γ(m−ν) · (d/dx + σ)^m ∫₀^x (x−τ)^{m−ν−1} e^{−σ(x−τ)} f(τ) dτ`,
//! with `m` the smallest integer above `ν`.
//!
//! Since `(d/dx + σ)^m g = e^{−σx} d^m/dx^m [e^{σx} g]`, the oracle builds
//! `J(y) = ∫₀^y (y−τ)^{β−1} e^{στ} f(τ) dτ` (`β = m − ν`) and differentiates
//! it by finite differences. `J` is computed by splitting at `y/2` and using
//! Gauss-Jacobi rules that absorb the two algebraic endpoint factors
//! `τ^a` (from `f`) and `(y−τ)^{β−1}` exactly. The outer derivative uses
//! five-point central differences with two Richardson levels.
//!
//! Nothing here touches the closed-form basis identities, which is the point:
//! the oracle certifies them.

use crate::error::{domain, Result};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::mlf::{
    mlf_eval, prefactor, substantial_deriv_coeff, substantial_deriv_eval, BasisParams, EquationKind,
};
use crate::special::gamma;

/// Inputs to [`substantial_derivative`].
pub struct OracleRequest<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    /// Derivative order in `(0, 2)`, excluding 1.
    pub order: f64,
    pub sigma: f64,
    pub x: f64,
    /// Target absolute tolerance, at least `1e-12`.
    pub tol: f64,
    /// Exponent `a > −1` of the algebraic behaviour `f(τ) ~ τ^a` at the origin.
    pub endpoint_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub error_estimate: f64,
    /// `false` when the error estimate exceeds `max(tol, 1e-8 |value|)`.
    pub converged: bool,
}

/// Gauss rule on `[0, 1]` for the weight `t^a`, from the Jacobi matrix of
/// `P^{(0, a)}` mapped by `t = (1 + s)/2`.
fn unit_jacobi_rule(n: usize, a: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (al, be) = (0.0f64, a);
    let ab = al + be;
    let diag: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                (be - al) / (ab + 2.0)
            } else {
                let s = 2.0 * k as f64 + ab;
                (be * be - al * al) / (s * (s + 2.0))
            }
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            if k == 1 {
                (4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
            } else {
                (4.0 * kf * (kf + al) * (kf + be) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0)))
                    .sqrt()
            }
        })
        .collect();
    let (nodes, first) = symmetric_tridiagonal_eigen(&diag, &off)?;
    let mass = 1.0 / (a + 1.0);
    Ok((
        nodes.iter().map(|s| 0.5 * (1.0 + s)).collect(),
        first.iter().map(|z| mass * z * z).collect(),
    ))
}

struct Convolution<'a> {
    f: &'a dyn Fn(f64) -> f64,
    sigma: f64,
    beta: f64,
    a: f64,
    left: (Vec<f64>, Vec<f64>),
    right: (Vec<f64>, Vec<f64>),
}

impl Convolution<'_> {
    /// `J(y) = ∫₀^y (y−τ)^{β−1} e^{στ} f(τ) dτ`.
    fn eval(&self, y: f64) -> f64 {
        let half = 0.5 * y;
        // [0, y/2]: τ = half·t, weight t^a absorbs τ^a
        let mut left = 0.0;
        for (&t, &w) in self.left.0.iter().zip(&self.left.1) {
            let tau = half * t;
            let smooth = (self.f)(tau) * tau.powf(-self.a);
            left += w * (y - tau).powf(self.beta - 1.0) * (self.sigma * tau).exp() * smooth;
        }
        left *= half.powf(1.0 + self.a);
        // [y/2, y]: τ = y − half·s, weight s^{β−1} absorbs (y−τ)^{β−1}
        let mut right = 0.0;
        for (&s, &w) in self.right.0.iter().zip(&self.right.1) {
            let tau = y - half * s;
            right += w * (self.sigma * tau).exp() * (self.f)(tau);
        }
        right *= half.powf(self.beta);
        left + right
    }
}

/// `m`-th derivative of `g` at `x` (m = 1, 2) with five-point stencils at
/// `h, h/2, h/4` and two Richardson levels. Returns `(estimate, error)`.
fn richardson_derivative(g: &dyn Fn(f64) -> f64, x: f64, h: f64, m: usize) -> (f64, f64) {
    let stencil = |h: f64| -> f64 {
        let (p2, p1, m1, m2) = (g(x + 2.0 * h), g(x + h), g(x - h), g(x - 2.0 * h));
        if m == 1 {
            (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
        } else {
            (-p2 + 16.0 * p1 - 30.0 * g(x) + 16.0 * m1 - m2) / (12.0 * h * h)
        }
    };
    let (d0, d1, d2) = (stencil(h), stencil(0.5 * h), stencil(0.25 * h));
    let r1a = (16.0 * d1 - d0) / 15.0;
    let r1b = (16.0 * d2 - d1) / 15.0;
    let r2 = (64.0 * r1b - r1a) / 63.0;
    (r2, (r2 - r1b).abs())
}

const LEVELS: [usize; 5] = [16, 32, 64, 128, 256];

/// Evaluates `D_s^{order} f(x)` from the integral definition.
pub fn substantial_derivative(req: &OracleRequest<'_>) -> Result<OracleValue> {
    let order = req.order;
    if !(order > 0.0 && order < 2.0) || order == 1.0 {
        return domain(format!(
            "oracle order must lie in (0, 2) \\ {{1}}, got {order}"
        ));
    }
    if !(req.sigma > 0.0) {
        return domain(format!(
            "tempering rate must be positive, got {}",
            req.sigma
        ));
    }
    if !(req.x > 0.0) || !req.x.is_finite() {
        return domain(format!("oracle needs x > 0, got {}", req.x));
    }
    if !(req.tol >= 1e-12) {
        return domain(format!(
            "oracle tolerance must be at least 1e-12, got {}",
            req.tol
        ));
    }
    if !(req.endpoint_exponent > -1.0) {
        return domain(format!(
            "f(τ) ~ τ^{} is not integrable at the origin",
            req.endpoint_exponent
        ));
    }
    let m = if order < 1.0 { 1 } else { 2 };
    let beta = m as f64 - order;
    let x = req.x;
    let step = match m {
        1 => (1e-3f64).max(1e-3 * x),
        _ => (1e-2f64).max(1e-2 * x),
    }
    .min(x / 8.0);
    let scale = (-req.sigma * x).exp() / gamma(beta)?;
    let rule = |n: usize| -> Result<Convolution<'_>> {
        Ok(Convolution {
            f: req.f,
            sigma: req.sigma,
            beta,
            a: req.endpoint_exponent,
            left: unit_jacobi_rule(n, req.endpoint_exponent)?,
            right: unit_jacobi_rule(n, beta - 1.0)?,
        })
    };

    // refine the inner quadrature until J(x) settles, then differentiate
    let mut conv = rule(LEVELS[0])?;
    let mut current = conv.eval(x);
    let mut quad_err = f64::INFINITY;
    for &n in &LEVELS[1..] {
        let finer = rule(n)?;
        let next = finer.eval(x);
        quad_err = (next - current).abs();
        conv = finer;
        current = next;
        if quad_err <= 1e-14 * current.abs() {
            break;
        }
    }
    if !current.is_finite() {
        return domain(format!("oracle produced a non-finite value at x = {x}"));
    }
    let (deriv, fd_err) = richardson_derivative(&|y| conv.eval(y), x, step, m);
    // quadrature noise is amplified by the stencil: ~ (sum of |weights|) / h^m
    let amplification = if m == 1 {
        1.5 / step
    } else {
        5.0 / (step * step)
    };
    let value = scale * deriv;
    let error_estimate = scale.abs() * (fd_err + amplification * quad_err);
    if !value.is_finite() {
        return domain(format!("oracle produced a non-finite value at x = {x}"));
    }
    Ok(OracleValue {
        value,
        error_estimate,
        converged: error_estimate <= req.tol.max(1e-8 * value.abs()),
    })
}

/// `Σ_k |c_k| y^k` over the power-form coefficients of `L_n^α`, the size of
/// the terms that cancel when `L_n^α(y)` is near a root.
fn power_form_envelope(n: usize, alpha: f64, y: f64) -> f64 {
    // c_k = (−1)^k binom(n+α, n−k) / k!
    let mut binom = 1.0; // binom(n+α, 0), walk j = n−k upward
    let mut terms = vec![0.0; n + 1];
    for j in 0..=n {
        if j > 0 {
            binom *= (n as f64 + alpha - (j - 1) as f64) / j as f64;
        }
        terms[n - j] = binom.abs();
    }
    let mut fact = 1.0;
    let mut yk = 1.0;
    let mut sum = 0.0;
    for (k, t) in terms.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
            yk *= y;
        }
        sum += t * yk / fact;
    }
    sum
}

/// Relative floor used near roots of the closed form: points where the
/// closed form is smaller than this fraction of its term envelope are
/// measured against the envelope instead.
pub const ROOT_FLOOR: f64 = 1e-3;

/// Largest relative discrepancy between the oracle and the closed-form
/// derivative of `Ĺ_n^λ` over `xs`.
///
/// The denominator is `max(|closed|, ROOT_FLOOR · envelope)` where the
/// envelope is the closed form with every power-form term taken in absolute
/// value. Away from a root of `L_n` this is the plain relative error.
pub fn verify_identity(n: usize, p: &BasisParams, kind: EquationKind, xs: &[f64]) -> Result<f64> {
    if !(p.lambda > -1.0) {
        return domain(format!(
            "oracle needs an integrable basis function, λ = {}",
            p.lambda
        ));
    }
    if let Some(&x) = xs.iter().find(|&&x| !(x > 0.0)) {
        return domain(format!("identity check points must be positive, got {x}"));
    }
    let term = substantial_deriv_coeff(kind, n, p)?;
    let f = |t: f64| mlf_eval(n, p.lambda, p.sigma, t).unwrap_or(f64::NAN);
    let mut worst = 0.0f64;
    for &x in xs {
        let closed = substantial_deriv_eval(kind, n, p, x)?;
        let envelope = (term.coeff * prefactor(term.lambda, p.sigma, x)?).abs()
            * power_form_envelope(n, term.lambda, 2.0 * p.sigma * x);
        let oracle = substantial_derivative(&OracleRequest {
            f: &f,
            order: kind.order(p.nu),
            sigma: p.sigma,
            x,
            tol: 1e-12,
            endpoint_exponent: p.lambda,
        })?;
        let denom = closed.abs().max(ROOT_FLOOR * envelope) + 1e-300;
        worst = worst.max((oracle.value - closed).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma_ratio;
    use approx::assert_relative_eq;

    fn request<'a>(
        f: &'a dyn Fn(f64) -> f64,
        order: f64,
        sigma: f64,
        x: f64,
        a: f64,
    ) -> OracleRequest<'a> {
        OracleRequest {
            f,
            order,
            sigma,
            x,
            tol: 1e-12,
            endpoint_exponent: a,
        }
    }

    #[test]
    fn unit_jacobi_rule_moments() {
        for &a in &[-0.7, -0.2, 0.0, 0.3, 2.5] {
            let (t, w) = unit_jacobi_rule(12, a).unwrap();
            for k in 0..24 {
                let q: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(k)).sum();
                assert_relative_eq!(q, 1.0 / (k as f64 + a + 1.0), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn exponential_advection_matches_identity() {
        // D_s^{1/2}[e^{−σx}] = x^{−1/2} e^{−σx} / √π
        let f = |t: f64| (-2.0 * t).exp();
        let r = substantial_derivative(&request(&f, 0.5, 2.0, 1.0, 0.0)).unwrap();
        let want = (-2.0f64).exp() / std::f64::consts::PI.sqrt();
        assert!(r.converged);
        assert_relative_eq!(r.value, want, max_relative = 1e-8);
    }

    #[test]
    fn weakly_singular_basis_function() {
        // f = Ĺ_0^{0.3}, σ = 2, order 0.5, x = 1
        let f = |t: f64| t.powf(0.3) * (-2.0 * t).exp();
        let r = substantial_derivative(&request(&f, 0.5, 2.0, 1.0, 0.3)).unwrap();
        let want = gamma_ratio(1.3, 0.8).unwrap() * (-2.0f64).exp();
        assert_relative_eq!(r.value, want, max_relative = 1e-8);
    }

    #[test]
    fn monomial_times_exponential() {
        // f = x^{6.3} e^{−2x}, order 0.5, x = 2: Γ(7.3)/Γ(6.8) x^{5.8} e^{−2x}
        let f = |t: f64| t.powf(6.3) * (-2.0 * t).exp();
        let r = substantial_derivative(&request(&f, 0.5, 2.0, 2.0, 6.3)).unwrap();
        let want = gamma_ratio(7.3, 6.8).unwrap() * 2f64.powf(5.8) * (-4.0f64).exp();
        assert_relative_eq!(r.value, want, max_relative = 1e-8);
        // the τ^a factor can also be left inside f
        let r0 = substantial_derivative(&request(&f, 0.5, 2.0, 2.0, 0.0)).unwrap();
        assert_relative_eq!(r0.value, want, max_relative = 1e-8);
    }

    #[test]
    fn monomial_semigroup_sanity() {
        for &(mu, order, sigma, x) in &[
            (0.4f64, 0.3f64, 1.0f64, 0.7f64),
            (2.2, 1.6, 2.0, 1.3),
            (1.1, 1.25, 0.5, 3.0),
        ] {
            let f = move |t: f64| t.powf(mu) * (-sigma * t).exp();
            let r = substantial_derivative(&request(&f, order, sigma, x, mu)).unwrap();
            let want = gamma_ratio(mu + 1.0, mu + 1.0 - order).unwrap()
                * x.powf(mu - order)
                * (-sigma * x).exp();
            let tol = if order > 1.0 { 1e-6 } else { 1e-8 };
            assert_relative_eq!(r.value, want, max_relative = tol);
        }
    }

    #[test]
    fn zero_function() {
        let f = |_: f64| 0.0;
        let r = substantial_derivative(&request(&f, 0.5, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn linearity() {
        let f = |t: f64| t.powf(0.3) * (-t).exp();
        let g = |t: f64| t.powf(0.3) * (-t).exp() * (1.0 - t);
        let (a, b) = (2.5, -0.75);
        let h = |t: f64| a * f(t) + b * g(t);
        for &order in &[0.4, 1.4] {
            let rf = substantial_derivative(&request(&f, order, 1.0, 1.2, 0.3)).unwrap();
            let rg = substantial_derivative(&request(&g, order, 1.0, 1.2, 0.3)).unwrap();
            let rh = substantial_derivative(&request(&h, order, 1.0, 1.2, 0.3)).unwrap();
            let slack = a.abs() * rf.error_estimate
                + b.abs() * rg.error_estimate
                + rh.error_estimate
                + 1e-12;
            assert!(
                (rh.value - (a * rf.value + b * rg.value)).abs()
                    <= slack.max(1e-9 * rh.value.abs())
            );
        }
    }

    #[test]
    fn tightening_tolerance_is_consistent() {
        let f = |t: f64| t.powf(0.2) * (-1.5 * t).exp() * (2.0 - t);
        let mut loose = request(&f, 0.6, 1.5, 0.9, 0.2);
        loose.tol = 1e-6;
        let a = substantial_derivative(&loose).unwrap();
        loose.tol = 1e-7;
        let b = substantial_derivative(&loose).unwrap();
        assert!((a.value - b.value).abs() <= a.error_estimate.max(1e-12));
    }

    #[test]
    fn request_validation() {
        let f = |_: f64| 1.0;
        assert!(substantial_derivative(&request(&f, 1.0, 1.0, 1.0, 0.0)).is_err());
        assert!(substantial_derivative(&request(&f, 2.0, 1.0, 1.0, 0.0)).is_err());
        assert!(substantial_derivative(&request(&f, 0.5, 0.0, 1.0, 0.0)).is_err());
        assert!(substantial_derivative(&request(&f, 0.5, 1.0, 0.0, 0.0)).is_err());
        assert!(substantial_derivative(&request(&f, 0.5, 1.0, 1.0, -1.0)).is_err());
        let mut r = request(&f, 0.5, 1.0, 1.0, 0.0);
        r.tol = 1e-14;
        assert!(substantial_derivative(&r).is_err());
    }

    #[test]
    fn verify_identity_examples() {
        let p = BasisParams::new(0.3, 0.5, 2.0).unwrap();
        assert!(verify_identity(0, &p, EquationKind::Advection, &[1.0]).unwrap() <= 1e-8);
        let p = BasisParams::new(0.1, 0.75, 1.0).unwrap();
        assert!(verify_identity(3, &p, EquationKind::Advection, &[0.5, 2.0]).unwrap() <= 1e-7);
        let p = BasisParams::new(0.7, 0.5, 2.0).unwrap();
        assert!(verify_identity(2, &p, EquationKind::Diffusion, &[1.0, 3.0]).unwrap() <= 1e-6);
    }

    #[test]
    fn envelope_of_linear_polynomial() {
        assert_relative_eq!(power_form_envelope(1, 0.4, 2.0), 3.4, max_relative = 1e-15);
        assert_relative_eq!(power_form_envelope(0, -1.5, 2.0), 1.0, max_relative = 1e-15);
        // L_2^α(y) = (α+1)(α+2)/2 − (α+2)y + y²/2
        let (a, y) = (-1.4f64, 3.0f64);
        let want = ((a + 1.0) * (a + 2.0) / 2.0).abs() + (a + 2.0).abs() * y + y * y / 2.0;
        assert_relative_eq!(power_form_envelope(2, a, y), want, max_relative = 1e-14);
    }

    #[test]
    fn identity_at_a_root_of_the_closed_form() {
        // L_1^{−0.4}(0.6) = 0
        let p = BasisParams::new(0.1, 0.5, 1.0).unwrap();
        assert!(verify_identity(1, &p, EquationKind::Advection, &[0.3]).unwrap() <= 1e-8);
        assert!(verify_identity(1, &p, EquationKind::Advection, &[-0.3]).is_err());
    }
}
