//! Laguerre-Gauss and Laguerre-Gauss-Radau rules for the weight
//! `x^λ e^{−2σx}` on `[0, ∞)`.
//!
//! Nodes come from the Jacobi matrix of the `L^α` recurrence (implicit QL),
//! polished by Newton steps on the polynomial itself. Weights use the closed
//! forms in the scaled variable `y = 2σx`:
//!
//! * Gauss, `N+1` nodes at the zeros of `L_{N+1}^λ(y)`:
//!   `w_i = (2σ)^{−1−λ} Γ(N+λ+1) / ((N+1)! (N+λ+1)) · y_i / [L_N^λ(y_i)]²`,
//!   exact through degree `2N+1`.
//! * Radau, `x_0 = 0` plus the zeros of `L_N^{λ+1}(y)`:
//!   `w_0 = (2σ)^{−1−λ} (λ+1) Γ(λ+1)² N! / Γ(N+λ+2)`,
//!   `w_i = (2σ)^{−1−λ} Γ(N+λ+1) / (N! (N+λ+1)) / [L_N^λ(y_i)]²`,
//!   exact through degree `2N`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SpectralError};
use crate::laguerre::{self, check_degree};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::special::{gamma, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Gauss,
    Radau,
}

/// Nodes and weights for `∫₀^∞ f(x) x^λ e^{−2σx} dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub lambda: f64,
    pub sigma: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        match self.kind {
            RuleKind::Gauss => 2 * self.len() - 1,
            RuleKind::Radau => 2 * self.len() - 2,
        }
    }

    /// `Σ w_i f(x_i)`; a non-finite sample is an error.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(SpectralError::NonFinite { x, value: v });
            }
            sum += w * v;
        }
        Ok(sum)
    }

    /// CSV dump with header `i,node,weight`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,node,weight\n");
        for (i, (x, w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let _ = writeln!(out, "{i},{x:.16e},{w:.16e}");
        }
        out
    }
}

fn check_params(lambda: f64, sigma: f64) -> Result<()> {
    if !(lambda > -1.0) || !lambda.is_finite() {
        return domain(format!(
            "quadrature weight index must satisfy λ > −1, got {lambda}"
        ));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return domain(format!("tempering rate must be positive, got {sigma}"));
    }
    Ok(())
}

/// The `n` zeros of `L_n^α(y)`, increasing.
pub fn polynomial_zeros(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return domain("L_0 has no zeros");
    }
    if !(alpha > -1.0) {
        return domain(format!("zeros of L_n^α need α > −1, got {alpha}"));
    }
    check_degree(n)?;
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n)
        .map(|k| (k as f64 * (k as f64 + alpha)).sqrt())
        .collect();
    let (mut zeros, _) = symmetric_tridiagonal_eigen(&diag, &off)?;
    let nf = n as f64;
    for y in zeros.iter_mut() {
        for _ in 0..3 {
            // L_n' = (n L_n − (n+α) L_{n−1}) / y
            let (ln, lm1, _) = laguerre::eval_pair_scaled(n, alpha, *y);
            let dl = nf * ln - (nf + alpha) * lm1;
            if dl == 0.0 {
                break;
            }
            let step = *y * ln / dl;
            if !step.is_finite() {
                break;
            }
            *y -= step;
            if step.abs() <= 4.0 * f64::EPSILON * y.abs() {
                break;
            }
        }
    }
    for pair in zeros.windows(2) {
        if !(pair[1] > pair[0]) || !(pair[0] > 0.0) {
            return Err(SpectralError::Convergence(format!(
                "zeros of L_{n}^{alpha} lost ordering during refinement"
            )));
        }
    }
    Ok(zeros)
}

/// `(N+1)`-point Laguerre-Gauss rule for `x^λ e^{−2σx}`.
pub fn gauss_rule(n: usize, lambda: f64, sigma: f64) -> Result<QuadratureRule> {
    check_params(lambda, sigma)?;
    let zeros = polynomial_zeros(n + 1, lambda)?;
    let nf = n as f64;
    let scale = -(1.0 + lambda) * (2.0 * sigma).ln();
    let constant = ln_gamma(nf + lambda + 1.0)? - ln_gamma(nf + 2.0)? - (nf + lambda + 1.0).ln();
    let mut nodes = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for y in zeros {
        let (ln_abs, _) = laguerre::ln_abs_eval(n, lambda, y);
        weights.push((scale + constant + y.ln() - 2.0 * ln_abs).exp());
        nodes.push(y / (2.0 * sigma));
    }
    Ok(QuadratureRule {
        kind: RuleKind::Gauss,
        lambda,
        sigma,
        nodes,
        weights,
    })
}

/// `(N+1)`-point Laguerre-Gauss-Radau rule for `x^λ e^{−2σx}` with `x_0 = 0`.
pub fn radau_rule(n: usize, lambda: f64, sigma: f64) -> Result<QuadratureRule> {
    check_params(lambda, sigma)?;
    if n == 0 {
        return domain("Radau rule needs N ≥ 1");
    }
    let nf = n as f64;
    let scale = -(1.0 + lambda) * (2.0 * sigma).ln();
    let w0 = (scale + (lambda + 1.0).ln() + 2.0 * ln_gamma(lambda + 1.0)? + ln_gamma(nf + 1.0)?
        - ln_gamma(nf + lambda + 2.0)?)
    .exp();
    let constant = ln_gamma(nf + lambda + 1.0)? - ln_gamma(nf + 1.0)? - (nf + lambda + 1.0).ln();
    let mut nodes = vec![0.0];
    let mut weights = vec![w0];
    for y in polynomial_zeros(n, lambda + 1.0)? {
        let (ln_abs, _) = laguerre::ln_abs_eval(n, lambda, y);
        weights.push((scale + constant - 2.0 * ln_abs).exp());
        nodes.push(y / (2.0 * sigma));
    }
    Ok(QuadratureRule {
        kind: RuleKind::Radau,
        lambda,
        sigma,
        nodes,
        weights,
    })
}

/// `∫₀^∞ p(x) x^α e^{−2σx} dx` for a polynomial `p` of degree ≤ `degree`,
/// valid for every `α > −2`.
///
/// For `α ≤ −1` the integral diverges at the origin unless `p(0) = p'(0) = 0`;
/// the value returned is its analytic continuation in `α` (Hadamard finite
/// part), obtained by splitting `p(x) = p(0) + p'(0) x + x² q(x)`:
/// the first two terms integrate in closed form and `q` is integrated with the
/// Gauss rule for `x^{α+2} e^{−2σx}`. At `α = −1` exactly, `p(0)` must vanish.
pub fn finite_part_integral(
    p: impl Fn(f64) -> f64,
    value_at_zero: f64,
    slope_at_zero: f64,
    degree: usize,
    alpha: f64,
    sigma: f64,
) -> Result<f64> {
    if !(alpha > -2.0) {
        return domain(format!("finite-part integral needs α > −2, got {alpha}"));
    }
    let two_sigma = 2.0 * sigma;
    let mut total = 0.0;
    let head = alpha + 1.0;
    if value_at_zero != 0.0 {
        if head == 0.0 {
            return domain("finite part at α = −1 needs p(0) = 0");
        }
        total += value_at_zero * gamma(head)? / two_sigma.powf(head);
    }
    total += slope_at_zero * gamma(alpha + 2.0)? / two_sigma.powf(alpha + 2.0);
    let points = degree.saturating_sub(2) / 2 + 1;
    let rule = gauss_rule(points - 1, alpha + 2.0, sigma)?;
    total += rule.integrate(|x| (p(x) - value_at_zero - slope_at_zero * x) / (x * x))?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn moment(k: usize, lambda: f64, sigma: f64) -> f64 {
        let e = k as f64 + lambda + 1.0;
        (ln_gamma(e).unwrap() - e * (2.0 * sigma).ln()).exp()
    }

    fn check_invariants(rule: &QuadratureRule) {
        assert_eq!(rule.nodes.len(), rule.weights.len());
        for pair in rule.nodes.windows(2) {
            assert!(pair[1] > pair[0]);
        }
        assert!(rule.weights.iter().all(|w| *w > 0.0));
        match rule.kind {
            RuleKind::Gauss => assert!(rule.nodes[0] > 0.0),
            RuleKind::Radau => assert_eq!(rule.nodes[0], 0.0),
        }
    }

    #[test]
    fn one_point_gauss() {
        let r = gauss_rule(0, 0.0, 0.5).unwrap();
        assert_relative_eq!(r.nodes[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_gauss_classical() {
        let r = gauss_rule(1, 0.0, 0.5).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(r.nodes[0], 2.0 - s2, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], 2.0 + s2, epsilon = 1e-14);
        assert_relative_eq!(r.weights[0], (2.0 + s2) / 4.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], (2.0 - s2) / 4.0, epsilon = 1e-15);
        assert_relative_eq!(r.integrate(|_| 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.integrate(|x| x).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_point_radau() {
        let r = radau_rule(1, 0.0, 0.5).unwrap();
        assert_eq!(r.nodes[0], 0.0);
        assert_relative_eq!(r.nodes[1], 2.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn weight_sums_match_total_mass() {
        for &(n, lambda, sigma) in &[
            (4usize, 0.0f64, 0.5f64),
            (10, 0.3, 2.0),
            (25, -0.5, 1.0),
            (7, 0.9, 0.25),
        ] {
            let mass = gamma(lambda + 1.0).unwrap() / (2.0 * sigma).powf(1.0 + lambda);
            for rule in [
                gauss_rule(n, lambda, sigma).unwrap(),
                radau_rule(n, lambda, sigma).unwrap(),
            ] {
                check_invariants(&rule);
                assert_relative_eq!(rule.weights.iter().sum::<f64>(), mass, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn radau_moments_8_0_3_2() {
        let r = radau_rule(8, 0.3, 2.0).unwrap();
        for k in 0..=16 {
            let q = r.integrate(|x| x.powi(k as i32)).unwrap();
            assert_relative_eq!(q, moment(k, 0.3, 2.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn moment_exactness_sweep() {
        for &lambda in &[-0.5, 0.0, 0.1, 0.3, 0.7] {
            for &sigma in &[1.0, 2.0] {
                for n in [1usize, 5, 16, 40] {
                    for rule in [
                        gauss_rule(n, lambda, sigma).unwrap(),
                        radau_rule(n, lambda, sigma).unwrap(),
                    ] {
                        check_invariants(&rule);
                        for k in 0..=rule.exactness_degree() {
                            let q = rule.integrate(|x| x.powi(k as i32)).unwrap();
                            let want = moment(k, lambda, sigma);
                            assert!(
                                ((q - want) / want).abs() <= 1e-11,
                                "{:?} n={n} λ={lambda} σ={sigma} k={k}",
                                rule.kind
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn orthogonality_under_gauss_rule() {
        let r = gauss_rule(8, 0.3, 2.0).unwrap();
        let y = |x: f64| 4.0 * x;
        let cross = r
            .integrate(|x| laguerre::eval(3, 0.3, y(x)) * laguerre::eval(5, 0.3, y(x)))
            .unwrap();
        assert!(cross.abs() < 1e-12);
        let sq = r
            .integrate(|x| laguerre::eval(3, 0.3, y(x)).powi(2))
            .unwrap();
        let want = 0.25f64.powf(1.3) * gamma(4.3).unwrap() / 6.0;
        assert_relative_eq!(sq, want, max_relative = 1e-12);
        assert_relative_eq!(
            gauss_rule(4, 0.0, 0.5).unwrap().integrate(|_| 1.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn zeros_small_cases_and_interlacing() {
        assert_relative_eq!(polynomial_zeros(1, 0.0).unwrap()[0], 1.0, epsilon = 1e-15);
        let z2 = polynomial_zeros(2, 0.0).unwrap();
        assert_relative_eq!(z2[0], 2.0 - 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(z2[1], 2.0 + 2f64.sqrt(), epsilon = 1e-14);
        let z12 = polynomial_zeros(12, 0.5).unwrap();
        let z11 = polynomial_zeros(11, 0.5).unwrap();
        for i in 0..11 {
            assert!(z12[i] < z11[i] && z11[i] < z12[i + 1]);
        }
        for &z in &z12 {
            let dl = laguerre::derivative(12, 0.5, 1, z);
            assert!(laguerre::eval(12, 0.5, z).abs() <= 1e-11 * (z * dl).abs().max(1.0));
        }
    }

    #[test]
    fn gauss_nodes_interlace_across_orders() {
        for n in [3usize, 10, 30] {
            let a = gauss_rule(n, 0.2, 1.5).unwrap().nodes;
            let b = gauss_rule(n + 1, 0.2, 1.5).unwrap().nodes;
            for i in 0..a.len() {
                assert!(b[i] < a[i] && a[i] < b[i + 1]);
            }
        }
    }

    #[test]
    fn large_order_rules_stay_positive() {
        let r = gauss_rule(128, 0.4, 1.0).unwrap();
        check_invariants(&r);
        let mass = gamma(1.4).unwrap() / 2f64.powf(1.4);
        assert_relative_eq!(r.weights.iter().sum::<f64>(), mass, max_relative = 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(gauss_rule(3, -1.0, 1.0).is_err());
        assert!(gauss_rule(3, 0.2, 0.0).is_err());
        assert!(radau_rule(0, 0.2, 1.0).is_err());
        assert!(polynomial_zeros(0, 0.0).is_err());
        assert!(polynomial_zeros(300, 0.0).is_err());
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = radau_rule(3, 0.0, 1.0).unwrap();
        assert!(matches!(
            r.integrate(|x| 1.0 / x),
            Err(SpectralError::NonFinite { .. })
        ));
    }

    #[test]
    fn csv_dump_round_trips() {
        let r = gauss_rule(6, 0.3, 2.0).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("i,node,weight"));
        for (i, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts[0].parse::<usize>().unwrap(), i);
            assert_eq!(parts[1].parse::<f64>().unwrap(), r.nodes[i]);
            assert_eq!(parts[2].parse::<f64>().unwrap(), r.weights[i]);
        }
    }

    #[test]
    fn finite_part_matches_regular_integral_above_minus_one() {
        // p(x) = (1 + x)^3, α = 0.4: compare against a plain Gauss rule
        let p = |x: f64| (1.0 + x).powi(3);
        let fp = finite_part_integral(p, 1.0, 3.0, 3, 0.4, 1.5).unwrap();
        let direct = gauss_rule(3, 0.4, 1.5).unwrap().integrate(p).unwrap();
        assert_relative_eq!(fp, direct, max_relative = 1e-13);
    }

    #[test]
    fn finite_part_of_monomials_is_continued_gamma() {
        // ∫ x^k x^α e^{−2σx} dx continues to Γ(k+α+1)/(2σ)^{k+α+1}
        let (alpha, sigma) = (-1.6, 0.75);
        for k in 0..6 {
            let p = |x: f64| x.powi(k);
            let v0 = if k == 0 { 1.0 } else { 0.0 };
            let d0 = if k == 1 { 1.0 } else { 0.0 };
            let fp = finite_part_integral(p, v0, d0, k as usize, alpha, sigma).unwrap();
            let e = k as f64 + alpha + 1.0;
            let want = gamma(e).unwrap() / (2.0 * sigma).powf(e);
            assert_relative_eq!(fp, want, max_relative = 1e-12);
        }
        assert!(finite_part_integral(|_| 1.0, 1.0, 0.0, 0, -1.0, 1.0).is_err());
    }
}
