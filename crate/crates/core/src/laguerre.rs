//! Generalized Laguerre polynomials `L_n^α(x)` for every real index `α > −2`.
//!
//! For `α > −1` these are the classical polynomials orthogonal under
//! `x^α e^{−x}`. For `−2 < α ≤ −1` the family is extended through
//! `L_n^α = L_n^{α+1} − L_{n−1}^{α+1}`; the extension satisfies the same
//! three-term recurrence, so a single recurrence pass evaluates every index.
//! Degrees up to 256 are supported.

use crate::error::{domain, Result};
use crate::special::gamma_ratio;

pub const MAX_DEGREE: usize = 256;

/// `L_n^α(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+α−x) L_k − (k+α) L_{k−1}`.
pub fn eval(n: usize, alpha: f64, x: f64) -> f64 {
    eval_pair(n, alpha, x).0
}

/// `(L_n^α(x), L_{n−1}^α(x))`, with `L_{−1} = 0`.
pub fn eval_pair(n: usize, alpha: f64, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `[L_0^α(x), …, L_{n_max}^α(x)]` from one recurrence pass.
pub fn eval_batch(n_max: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + alpha - x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// `(L_n^α(x), L_{n−1}^α(x), ln s)` where both values are divided by the
/// common factor `s`. The recurrence is rescaled on the fly, so magnitudes far
/// beyond the `f64` range (large `n` and `x`) stay usable.
pub fn eval_pair_scaled(n: usize, alpha: f64, x: f64) -> (f64, f64, f64) {
    const RESCALE: f64 = 1e150;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    (cur, prev, log_scale)
}

/// `(ln |L_n^α(x)|, sign)`, safe against overflow.
pub fn ln_abs_eval(n: usize, alpha: f64, x: f64) -> (f64, f64) {
    let (v, _, log_scale) = eval_pair_scaled(n, alpha, x);
    let sign = if v < 0.0 { -1.0 } else { 1.0 };
    (v.abs().ln() + log_scale, sign)
}

/// `∫₀^∞ [L_n^α]² x^α e^{−x} dx = Γ(n+α+1)/Γ(n+1)`.
///
/// For `α ≤ −1` the integral is understood as the analytic continuation in
/// `α` (Hadamard finite part at the origin); the closed form is the same and
/// is negative when `n + α + 1 ∈ (−1, 0)`.
pub fn norm_squared(n: usize, alpha: f64) -> Result<f64> {
    let top = n as f64 + alpha + 1.0;
    if top <= 0.0 && top == top.floor() {
        return domain(format!(
            "norm of L_{n}^{alpha} has a pole (n + α + 1 = {top})"
        ));
    }
    gamma_ratio(top, n as f64 + 1.0)
}

/// `d^k/dx^k L_n^α(x) = (−1)^k L_{n−k}^{α+k}(x)`, zero once `k > n`.
pub fn derivative(n: usize, alpha: f64, k: usize, x: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let v = eval(n - k, alpha + k as f64, x);
    if k.is_multiple_of(2) {
        v
    } else {
        -v
    }
}

/// `L_n^α(0) = Γ(n+α+1) / (Γ(n+1) Γ(α+1))`, evaluated as the product
/// `∏_{k=1}^{n} (k+α)/k` so that it is defined for every real α.
pub fn value_at_zero(n: usize, alpha: f64) -> f64 {
    (1..=n).map(|k| (k as f64 + alpha) / k as f64).product()
}

pub(crate) fn check_degree(n: usize) -> Result<()> {
    if n > MAX_DEGREE {
        return domain(format!(
            "degree {n} exceeds the supported maximum {MAX_DEGREE}"
        ));
    }
    Ok(())
}
