//! Nodal collocation with explicit substantial-derivative differentiation
//! matrices.
//!
//! A nodal trial function is `u_N(x) = Σ_j u_j h_j(x)` with
//! `h_j(x) = x^λ e^{−σx} / (x_j^λ e^{−σx_j}) · l_j(x)` and `l_j` the Lagrange
//! cardinal polynomial of the nodes. Expanding `l_j = Σ_k β_k^j L_k^λ(2σx)`
//! turns `D_s u_N` into a modal sum through the closed-form identities, so
//!
//! `D_ij = (x_j^λ e^{−σx_j})^{−1} Σ_k β_k^j γ_k Ĺ_k^{μ}(x_i)`
//!
//! with `γ_k` the identity coefficient and `μ` the image index.
//!
//! * Advection: all `N+1` Gauss nodes of `x^{λ+ν−1} e^{−2σx}`, degrees `0..=N`.
//! * Diffusion: the `N` nonzero Gauss-Radau nodes of `x^λ e^{−2σx}`, degrees
//!   `0..N`; the Radau node at the origin enters only through `l_j(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SpectralError};
use crate::laguerre;
use crate::linalg::{self, DenseMatrix};
use crate::mlf::{mlf_eval_batch, prefactor, substantial_deriv_coeff, BasisParams, EquationKind};
use crate::petrov_galerkin::{RhsFunction, SpectralSolution};
use crate::quadrature::{gauss_rule, radau_rule};
use crate::special::ln_gamma;

/// `beta[k][j]`: coefficient of `L_k^λ(2σx)` in the cardinal polynomial `l_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    pub beta: Vec<Vec<f64>>,
}

impl ConnectionCoefficients {
    pub fn degrees(&self) -> usize {
        self.beta.len()
    }

    pub fn nodes(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }

    /// `l_j` evaluated at a scaled argument `y = 2σx`.
    pub fn cardinal(&self, j: usize, lambda: f64, y: f64) -> f64 {
        let polys = laguerre::eval_batch(self.degrees() - 1, lambda, y);
        self.beta.iter().zip(polys).map(|(row, l)| row[j] * l).sum()
    }
}

/// `C[k][i]`: coefficient of `L_k^λ` in `L_i^{μ}`, from an `(N+1)`-point
/// Gauss rule for the unit weight `y^λ e^{−y}`. Zero for `k > i`.
pub fn connection_matrix(n: usize, from: f64, to: f64) -> Result<Vec<Vec<f64>>> {
    let unit = gauss_rule(n, to, 0.5)?;
    let mut c = vec![vec![0.0; n + 1]; n + 1];
    let tables: Vec<(Vec<f64>, Vec<f64>)> = unit
        .nodes
        .iter()
        .map(|&y| {
            (
                laguerre::eval_batch(n, from, y),
                laguerre::eval_batch(n, to, y),
            )
        })
        .collect();
    for k in 0..=n {
        let inv_norm = (ln_gamma(k as f64 + 1.0)? - ln_gamma(k as f64 + to + 1.0)?).exp();
        for i in k..=n {
            let s: f64 = unit
                .weights
                .iter()
                .zip(&tables)
                .map(|(w, (li, lk))| w * li[i] * lk[k])
                .sum();
            c[k][i] = inv_norm * s;
        }
    }
    Ok(c)
}

/// `β_k^j = Σ_{i≥k} C_k^i α_i^j` with
/// `α_i^j = (2σ)^{λ+ν} i!/Γ(i+λ+ν) · w_j L_i^{λ+ν−1}(2σx_j)`.
pub fn advection_connection(n: usize, p: &BasisParams) -> Result<ConnectionCoefficients> {
    let mu = p.image_index(EquationKind::Advection);
    let rule = gauss_rule(n, mu, p.sigma)?;
    advection_connection_on(n, p, &rule.nodes, &rule.weights)
}

fn advection_connection_on(
    n: usize,
    p: &BasisParams,
    nodes: &[f64],
    weights: &[f64],
) -> Result<ConnectionCoefficients> {
    let mu = p.image_index(EquationKind::Advection);
    let two_sigma = 2.0 * p.sigma;
    let mut alpha = vec![vec![0.0; n + 1]; n + 1];
    for (j, (&x, &w)) in nodes.iter().zip(weights).enumerate() {
        for (i, l) in laguerre::eval_batch(n, mu, two_sigma * x)
            .into_iter()
            .enumerate()
        {
            let norm = (mu + 1.0) * two_sigma.ln() + ln_gamma(i as f64 + 1.0)?
                - ln_gamma(i as f64 + mu + 1.0)?;
            alpha[i][j] = norm.exp() * w * l;
        }
    }
    let c = connection_matrix(n, mu, p.lambda)?;
    let mut beta = vec![vec![0.0; n + 1]; n + 1];
    for k in 0..=n {
        for j in 0..=n {
            beta[k][j] = (k..=n).map(|i| c[k][i] * alpha[i][j]).sum();
        }
    }
    Ok(ConnectionCoefficients { beta })
}

/// `β_k^j = (2σ)^{λ+1} w_j [k! L_k^λ(2σx_j)/Γ(k+λ+1) − N! L_N^λ(2σx_j)/Γ(N+λ+1)]`
/// for the interior Radau nodes `j = 1..N` (stored at column `j − 1`) and
/// `k = 0..N−1`.
pub fn diffusion_connection(n: usize, p: &BasisParams) -> Result<ConnectionCoefficients> {
    if n == 0 {
        return domain("diffusion collocation needs N ≥ 1");
    }
    let rule = radau_rule(n, p.lambda, p.sigma)?;
    let two_sigma = 2.0 * p.sigma;
    let lam = p.lambda;
    let scale = (lam + 1.0) * two_sigma.ln();
    let top = (ln_gamma(n as f64 + 1.0)? - ln_gamma(n as f64 + lam + 1.0)?).exp();
    let mut beta = vec![vec![0.0; n]; n];
    for (col, (&x, &w)) in rule.nodes[1..].iter().zip(&rule.weights[1..]).enumerate() {
        let polys = laguerre::eval_batch(n, lam, two_sigma * x);
        let tail = top * polys[n];
        for k in 0..n {
            let head = (ln_gamma(k as f64 + 1.0)? - ln_gamma(k as f64 + lam + 1.0)?).exp();
            beta[k][col] = (scale).exp() * w * (head * polys[k] - tail);
        }
    }
    Ok(ConnectionCoefficients { beta })
}

/// Value `l_j(0)` of the interior cardinal polynomials implied by the Radau
/// rule's exactness against `L_N^λ`.
pub fn diffusion_cardinal_at_origin(n: usize, p: &BasisParams) -> Result<Vec<f64>> {
    let rule = radau_rule(n, p.lambda, p.sigma)?;
    let l0 = laguerre::value_at_zero(n, p.lambda);
    Ok(rule.nodes[1..]
        .iter()
        .zip(&rule.weights[1..])
        .map(|(&x, &w)| {
            -w * laguerre::eval(n, p.lambda, 2.0 * p.sigma * x) / (rule.weights[0] * l0)
        })
        .collect())
}

/// Collocation nodes, weights and the differentiation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSystem {
    pub params: BasisParams,
    pub kind: EquationKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub matrix: DenseMatrix,
    pub connection: ConnectionCoefficients,
}

fn differentiation_matrix(
    p: &BasisParams,
    kind: EquationKind,
    nodes: &[f64],
    conn: &ConnectionCoefficients,
) -> Result<DenseMatrix> {
    let degrees = conn.degrees();
    let mu = p.image_index(kind);
    let gammas = (0..degrees)
        .map(|k| substantial_deriv_coeff(kind, k, p).map(|t| t.coeff))
        .collect::<Result<Vec<_>>>()?;
    let images: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&x| mlf_eval_batch(degrees - 1, mu, p.sigma, x))
        .collect::<Result<_>>()?;
    let inv_pre: Vec<f64> = nodes
        .iter()
        .map(|&x| prefactor(p.lambda, p.sigma, x).map(|v| 1.0 / v))
        .collect::<Result<_>>()?;
    let m = nodes.len();
    let mut d = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let s: f64 = (0..degrees)
                .map(|k| conn.beta[k][j] * gammas[k] * images[i][k])
                .sum();
            d[(i, j)] = inv_pre[j] * s;
        }
    }
    Ok(d)
}

/// `(N+1) × (N+1)` advection matrix on the Gauss nodes of `x^{λ+ν−1} e^{−2σx}`.
pub fn advection_matrix(n: usize, p: &BasisParams) -> Result<CollocationSystem> {
    if !(p.lambda > -1.0) {
        return domain(format!("trial index must exceed −1, got λ = {}", p.lambda));
    }
    let kind = EquationKind::Advection;
    let rule = gauss_rule(n, p.image_index(kind), p.sigma)?;
    let connection = advection_connection_on(n, p, &rule.nodes, &rule.weights)?;
    let matrix = differentiation_matrix(p, kind, &rule.nodes, &connection)?;
    Ok(CollocationSystem {
        params: *p,
        kind,
        nodes: rule.nodes,
        weights: rule.weights,
        matrix,
        connection,
    })
}

/// `N × N` diffusion matrix on the interior Gauss-Radau nodes of `x^λ e^{−2σx}`.
pub fn diffusion_matrix(n: usize, p: &BasisParams) -> Result<CollocationSystem> {
    if !(p.lambda > -1.0) {
        return domain(format!("trial index must exceed −1, got λ = {}", p.lambda));
    }
    let kind = EquationKind::Diffusion;
    let rule = radau_rule(n, p.lambda, p.sigma)?;
    let connection = diffusion_connection(n, p)?;
    let nodes = rule.nodes[1..].to_vec();
    let matrix = differentiation_matrix(p, kind, &nodes, &connection)?;
    Ok(CollocationSystem {
        params: *p,
        kind,
        nodes,
        weights: rule.weights[1..].to_vec(),
        matrix,
        connection,
    })
}

pub fn build(kind: EquationKind, n: usize, p: &BasisParams) -> Result<CollocationSystem> {
    match kind {
        EquationKind::Advection => advection_matrix(n, p),
        EquationKind::Diffusion => diffusion_matrix(n, p),
    }
}

/// Nodal values plus the modal form of the same trial function.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `u_N = Σ_k c_k Ĺ_k^λ` (unit scaling).
    pub modal: SpectralSolution,
}

impl CollocationSystem {
    /// Trial degree `N` (number of nodes minus one for advection, number of
    /// nodes for diffusion).
    pub fn degree(&self) -> usize {
        match self.kind {
            EquationKind::Advection => self.nodes.len() - 1,
            EquationKind::Diffusion => self.nodes.len(),
        }
    }

    /// `h_j(x)`.
    pub fn interpolant(&self, j: usize, x: f64) -> Result<f64> {
        let p = &self.params;
        let ratio = prefactor(p.lambda, p.sigma, x)? / prefactor(p.lambda, p.sigma, self.nodes[j])?;
        Ok(ratio * self.connection.cardinal(j, p.lambda, 2.0 * p.sigma * x))
    }

    /// Modal coefficients `c_k = Σ_j β_k^j u_j / (x_j^λ e^{−σx_j})`.
    pub fn modal_solution(&self, values: &[f64]) -> Result<SpectralSolution> {
        if values.len() != self.nodes.len() {
            return Err(SpectralError::Dimension {
                expected: self.nodes.len(),
                found: values.len(),
            });
        }
        let p = &self.params;
        let scaled = self
            .nodes
            .iter()
            .zip(values)
            .map(|(&x, u)| prefactor(p.lambda, p.sigma, x).map(|pre| u / pre))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = self
            .connection
            .beta
            .iter()
            .map(|row| row.iter().zip(&scaled).map(|(b, s)| b * s).sum())
            .collect();
        Ok(SpectralSolution {
            params: *p,
            kind: self.kind,
            coeffs,
            scaling_exponent: 0.0,
        })
    }

    pub fn condition_number(&self) -> Result<f64> {
        linalg::condition_number_2norm(&self.matrix)
    }

    /// CSV body `i,j,value` with 17 significant digits.
    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for i in 0..self.matrix.rows() {
            for j in 0..self.matrix.cols() {
                out.push_str(&format!("{i},{j},{:.16e}\n", self.matrix[(i, j)]));
            }
        }
        out
    }

    pub fn header(&self) -> MatrixHeader {
        MatrixHeader {
            kind: self.kind,
            n: self.degree(),
            lambda: self.params.lambda,
            nu: self.params.nu,
            sigma: self.params.sigma,
            nodes: self.nodes.clone(),
        }
    }
}

/// JSON companion of a serialized matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub kind: EquationKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub nu: f64,
    pub sigma: f64,
    pub nodes: Vec<f64>,
}

/// Parses a matrix written by [`CollocationSystem::matrix_csv`].
pub fn parse_matrix_csv(csv: &str, size: usize) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(size, size);
    let mut seen = 0usize;
    for (lineno, line) in csv.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || SpectralError::Parse(format!("matrix line {}: {line:?}", lineno + 1));
        let mut parts = line.split(',');
        let i: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        let j: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        let v: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        if i >= size || j >= size || parts.next().is_some() {
            return Err(bad());
        }
        m[(i, j)] = v;
        seen += 1;
    }
    if seen != size * size {
        return Err(SpectralError::Dimension {
            expected: size * size,
            found: seen,
        });
    }
    Ok(m)
}

/// Solves `D u = f` at the nodes.
pub fn solve_collocation(sys: &CollocationSystem, f: &RhsFunction) -> Result<CollocationSolution> {
    let rhs: Vec<f64> = sys.nodes.iter().map(|&x| f.eval(x)).collect();
    if let Some((k, v)) = rhs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(SpectralError::NonFinite {
            x: sys.nodes[k],
            value: *v,
        });
    }
    let values = linalg::solve(&sys.matrix, &rhs)?;
    let modal = sys.modal_solution(&values)?;
    Ok(CollocationSolution {
        nodes: sys.nodes.clone(),
        values,
        modal,
    })
}
