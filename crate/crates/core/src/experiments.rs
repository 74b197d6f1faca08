//! Convergence sweeps over `(λ, N)` for the built-in manufactured problems,
//! CSV output, rate fitting and the identity-certification sweep.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collocation::{build, solve_collocation, CollocationSystem};
use crate::error::{domain, Result, SpectralError};
use crate::mlf::{BasisParams, EquationKind};
use crate::oracle::verify_identity;
use crate::petrov_galerkin::{self as pg, RhsFunction};
use crate::quadrature::gauss_rule;
use crate::special::{beta, gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pg,
    Collocation,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pg => "pg",
            Method::Collocation => "collocation",
        }
    }
}

/// Built-in manufactured right-hand sides.
///
/// | id       | equation  | exact `u`           |
/// |----------|-----------|---------------------|
/// | example1 | advection | `x^{6.3} e^{−σx}`   |
/// | example2 | diffusion | `x^{4.1} e^{−σx}`   |
/// | example3 | advection | `x^{6.3} e^{−σx}`   |
/// | example4 | diffusion | `x^{6.3} e^{−σx}`   |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsKind {
    Example1,
    Example2,
    Example3,
    Example4,
    Custom,
}

impl RhsKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RhsKind::Example1 => "example1",
            RhsKind::Example2 => "example2",
            RhsKind::Example3 => "example3",
            RhsKind::Example4 => "example4",
            RhsKind::Custom => "custom",
        }
    }

    pub fn equation(self) -> Option<EquationKind> {
        match self {
            RhsKind::Example1 | RhsKind::Example3 => Some(EquationKind::Advection),
            RhsKind::Example2 | RhsKind::Example4 => Some(EquationKind::Diffusion),
            RhsKind::Custom => None,
        }
    }
}

/// `f = D_s^{order}[x^e e^{−σx}] = Γ(e+1)/Γ(e+1−order) x^{e−order} e^{−σx}`,
/// with the gamma ratio written as a beta function times Pochhammer factors.
pub fn builtin_rhs(kind: RhsKind, nu: f64, sigma: f64) -> Result<RhsFunction> {
    let (exponent, coeff, power) = match kind {
        RhsKind::Example1 | RhsKind::Example3 => {
            (6.3, beta(7.3, nu)? / gamma(nu)? * (nu + 6.3), 5.3 + nu)
        }
        RhsKind::Example2 => (
            4.1,
            beta(5.1, nu)? / gamma(nu)? * (nu + 4.1) * (nu + 3.1),
            2.1 + nu,
        ),
        RhsKind::Example4 => (
            6.3,
            beta(7.3, nu)? / gamma(nu)? * (nu + 6.3) * (nu + 5.3),
            4.3 + nu,
        ),
        RhsKind::Custom => return domain("custom right-hand sides must be supplied by the caller"),
    };
    Ok(RhsFunction::new(kind.as_str(), move |x: f64| {
        coeff * x.powf(power) * (-sigma * x).exp()
    })
    .with_exact(move |x: f64| x.powf(exponent) * (-sigma * x).exp()))
}

fn default_output() -> PathBuf {
    PathBuf::from("results.csv")
}

/// A sweep over `lambdas × N_values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub equation: EquationKind,
    pub method: Method,
    pub nu: f64,
    pub sigma: f64,
    pub lambdas: Vec<f64>,
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    pub rhs: RhsKind,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return domain(format!("nu must lie in (0, 1), got {}", self.nu));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return domain(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.lambdas.is_empty() || self.n_values.is_empty() {
            return domain("at least one lambda and one N are required");
        }
        if let Some(l) = self.lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
            return domain(format!("lambda values must lie in (0, 1), got {l}"));
        }
        if self.n_values.contains(&0) {
            return domain("N values must be at least 1");
        }
        if let Some(eq) = self.rhs.equation() {
            if eq != self.equation {
                return domain(format!(
                    "{} is a {} problem, not {}",
                    self.rhs.as_str(),
                    eq.as_str(),
                    self.equation.as_str()
                ));
            }
        }
        Ok(())
    }
}

/// One sweep cell. `max_error` is NaN and `failure` is set when the solve
/// failed numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub example: String,
    pub method: Method,
    pub equation: EquationKind,
    pub nu: f64,
    pub lambda: f64,
    pub sigma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub max_error: f64,
    pub cond: Option<f64>,
    pub wall_time_ms: f64,
    pub failure: Option<String>,
}

/// `{0.1 · 2^k / σ : k = 0..9}`.
pub fn geometric_grid(sigma: f64) -> Vec<f64> {
    (0..10).map(|k| 0.1 * 2f64.powi(k) / sigma).collect()
}

struct CellOutcome {
    max_error: f64,
    cond: Option<f64>,
}

fn max_abs_error(eval: impl Fn(f64) -> Result<f64>, rhs: &RhsFunction, xs: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in xs {
        let exact = rhs.exact(x).ok_or_else(|| {
            SpectralError::Domain("error measurement needs an exact solution".into())
        })?;
        let e = (eval(x)? - exact).abs();
        if !e.is_finite() {
            return Err(SpectralError::NonFinite { x, value: e });
        }
        worst = worst.max(e);
    }
    Ok(worst)
}

/// Solves with Petrov-Galerkin and returns the solution plus the nodes of its
/// load-vector rule.
pub fn pg_solve(
    n: usize,
    p: &BasisParams,
    kind: EquationKind,
    rhs: &RhsFunction,
) -> Result<(pg::SpectralSolution, Vec<f64>)> {
    let q = pg::default_quad_order(n);
    let sol = pg::solve(n, p, kind, rhs, q)?;
    let weight = match kind {
        EquationKind::Advection => p.image_index(kind),
        EquationKind::Diffusion => p.lambda + p.nu,
    };
    let nodes = gauss_rule(q - 1, weight, p.sigma)?.nodes;
    Ok((sol, nodes))
}

fn run_cell(
    spec: &ExperimentSpec,
    lambda: f64,
    n: usize,
    rhs: &RhsFunction,
) -> Result<CellOutcome> {
    let p = BasisParams::new(lambda, spec.nu, spec.sigma)?;
    let grid = geometric_grid(spec.sigma);
    match spec.method {
        Method::Pg => {
            let (sol, mut xs) = pg_solve(n, &p, spec.equation, rhs)?;
            xs.extend(&grid);
            Ok(CellOutcome {
                max_error: max_abs_error(|x| sol.eval(x), rhs, &xs)?,
                cond: None,
            })
        }
        Method::Collocation => {
            let sys = build(spec.equation, n, &p)?;
            let sol = solve_collocation(&sys, rhs)?;
            let mut nodal = 0.0f64;
            for (&x, &u) in sol.nodes.iter().zip(&sol.values) {
                let e = (u - rhs.exact(x).unwrap_or(f64::NAN)).abs();
                if !e.is_finite() {
                    return Err(SpectralError::NonFinite { x, value: e });
                }
                nodal = nodal.max(e);
            }
            let global = max_abs_error(|x| sol.modal.eval(x), rhs, &grid)?;
            Ok(CellOutcome {
                max_error: nodal.max(global),
                cond: Some(sys.condition_number()?),
            })
        }
    }
}

/// Runs every `(λ, N)` cell with the built-in right-hand side.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ErrorRecord>> {
    spec.validate()?;
    let rhs = builtin_rhs(spec.rhs, spec.nu, spec.sigma)?;
    run_with_rhs(spec, &rhs)
}

/// Runs every `(λ, N)` cell against a caller-supplied right-hand side, which
/// must carry an exact solution. Numerical failures become NaN rows.
pub fn run_with_rhs(spec: &ExperimentSpec, rhs: &RhsFunction) -> Result<Vec<ErrorRecord>> {
    spec.validate()?;
    if !rhs.has_exact() {
        return domain("experiments need a right-hand side with a known exact solution");
    }
    let cells: Vec<(f64, usize)> = spec
        .lambdas
        .iter()
        .flat_map(|&l| spec.n_values.iter().map(move |&n| (l, n)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(lambda, n)| {
            let start = Instant::now();
            let outcome = run_cell(spec, lambda, n, rhs);
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let (max_error, cond, failure) = match outcome {
                Ok(c) => (c.max_error, c.cond, None),
                Err(e) => (f64::NAN, None, Some(e.to_string())),
            };
            ErrorRecord {
                example: rhs.label().to_string(),
                method: spec.method,
                equation: spec.equation,
                nu: spec.nu,
                lambda,
                sigma: spec.sigma,
                n,
                max_error,
                cond,
                wall_time_ms,
                failure,
            }
        })
        .collect())
}

pub const CSV_HEADER: &str =
    "example,method,equation,nu,lambda,sigma,N,max_error,cond,wall_time_ms";

pub fn records_to_csv(records: &[ErrorRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let cond = r.cond.map(|c| format!("{c:e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:e},{},{:.3}",
            r.example,
            r.method.as_str(),
            r.equation.as_str(),
            r.nu,
            r.lambda,
            r.sigma,
            r.n,
            r.max_error,
            cond,
            r.wall_time_ms
        );
    }
    out
}

pub fn write_csv(records: &[ErrorRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| SpectralError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
    }
    std::fs::write(path, records_to_csv(records)).map_err(|e| SpectralError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Least-squares slope of `log(error)` against `log(N)`, ignoring records at
/// the round-off floor (`≤ 1e-13`) and failed rows. `None` with fewer than
/// three usable points.
pub fn fit_rate(records: &[ErrorRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.max_error.is_finite() && r.max_error > 1e-13)
        .map(|r| ((r.n as f64).ln(), r.max_error.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), (x, y)| {
        (n + (x - mx) * (y - my), d + (x - mx) * (x - mx))
    });
    (den > 0.0).then(|| num / den)
}

/// Worst identity discrepancy for one `(kind, n, λ, ν, σ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub kind: EquationKind,
    pub n: usize,
    pub lambda: f64,
    pub nu: f64,
    pub sigma: f64,
    pub max_rel_error: f64,
}

pub const IDENTITY_POINTS: [f64; 4] = [0.3, 1.0, 2.5, 5.0];
pub const IDENTITY_LAMBDAS: [f64; 3] = [0.1, 0.3, 0.7];
pub const IDENTITY_NUS: [f64; 3] = [0.25, 0.5, 0.75];
pub const IDENTITY_SIGMAS: [f64; 2] = [1.0, 2.0];
pub const IDENTITY_MAX_DEGREE: usize = 8;

/// Oracle-versus-closed-form sweep over the standard grid for both operators.
pub fn identity_sweep() -> Result<Vec<IdentityRecord>> {
    let mut cells = Vec::new();
    for kind in [EquationKind::Advection, EquationKind::Diffusion] {
        for &lambda in &IDENTITY_LAMBDAS {
            for &nu in &IDENTITY_NUS {
                for &sigma in &IDENTITY_SIGMAS {
                    for n in 0..=IDENTITY_MAX_DEGREE {
                        cells.push((kind, n, lambda, nu, sigma));
                    }
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(kind, n, lambda, nu, sigma)| {
            let p = BasisParams::new(lambda, nu, sigma)?;
            Ok(IdentityRecord {
                kind,
                n,
                lambda,
                nu,
                sigma,
                max_rel_error: verify_identity(n, &p, kind, &IDENTITY_POINTS)?,
            })
        })
        .collect()
}

/// Identity tolerance per operator: `1e-8` (advection), `1e-6` (diffusion).
pub fn identity_tolerance(kind: EquationKind) -> f64 {
    match kind {
        EquationKind::Advection => 1e-8,
        EquationKind::Diffusion => 1e-6,
    }
}

/// Petrov-Galerkin versus collocation on the collocation nodes of the
/// advection problem: `(max nodal difference, PG error, collocation error)`.
pub fn cross_method_agreement(
    n: usize,
    p: &BasisParams,
    rhs: &RhsFunction,
) -> Result<(f64, f64, f64)> {
    let sys: CollocationSystem = build(EquationKind::Advection, n, p)?;
    let col = solve_collocation(&sys, rhs)?;
    let (pgsol, _) = pg_solve(n, p, EquationKind::Advection, rhs)?;
    let (mut diff, mut e_pg, mut e_col) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &u) in col.nodes.iter().zip(&col.values) {
        let v = pgsol.eval(x)?;
        let exact = rhs.exact(x).unwrap_or(f64::NAN);
        diff = diff.max((u - v).abs());
        e_pg = e_pg.max((v - exact).abs());
        e_col = e_col.max((u - exact).abs());
    }
    Ok((diff, e_pg, e_col))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{substantial_derivative, OracleRequest};
    use approx::assert_relative_eq;

    fn spec(
        method: Method,
        equation: EquationKind,
        rhs: RhsKind,
        lambdas: &[f64],
        ns: &[usize],
    ) -> ExperimentSpec {
        ExperimentSpec {
            equation,
            method,
            nu: 0.5,
            sigma: 2.0,
            lambdas: lambdas.to_vec(),
            n_values: ns.to_vec(),
            rhs,
            output: PathBuf::from("unused.csv"),
        }
    }

    fn record(n: usize, e: f64) -> ErrorRecord {
        ErrorRecord {
            example: "synthetic".into(),
            method: Method::Pg,
            equation: EquationKind::Advection,
            nu: 0.5,
            lambda: 0.5,
            sigma: 2.0,
            n,
            max_error: e,
            cond: None,
            wall_time_ms: 0.0,
            failure: None,
        }
    }

    #[test]
    fn builtin_rhs_matches_oracle() {
        for (kind, order) in [
            (RhsKind::Example1, 0.5),
            (RhsKind::Example2, 1.5),
            (RhsKind::Example4, 1.5),
        ] {
            let rhs = builtin_rhs(kind, 0.5, 2.0).unwrap();
            let u = |x: f64| rhs.exact(x).unwrap();
            for x in [0.4, 1.5] {
                let r = substantial_derivative(&OracleRequest {
                    f: &u,
                    order,
                    sigma: 2.0,
                    x,
                    tol: 1e-12,
                    endpoint_exponent: 0.0,
                })
                .unwrap();
                assert_relative_eq!(r.value, rhs.eval(x), max_relative = 1e-6);
            }
        }
        assert!(builtin_rhs(RhsKind::Custom, 0.5, 2.0).is_err());
    }

    #[test]
    fn synthetic_rate() {
        let recs: Vec<_> = [8, 16, 32, 64]
            .iter()
            .map(|&n| record(n, (n as f64).powf(-4.0)))
            .collect();
        assert!((fit_rate(&recs).unwrap() + 4.0).abs() < 0.01);
        let floor: Vec<_> = [8, 16, 32].iter().map(|&n| record(n, 1e-15)).collect();
        assert_eq!(fit_rate(&floor), None);
        let mut mixed = recs.clone();
        mixed.push(record(128, f64::NAN));
        assert!((fit_rate(&mixed).unwrap() + 4.0).abs() < 0.01);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec(
            Method::Pg,
            EquationKind::Advection,
            RhsKind::Example2,
            &[0.3],
            &[8],
        );
        assert!(s.validate().is_err());
        s.rhs = RhsKind::Example1;
        assert!(s.validate().is_ok());
        s.lambdas = vec![1.2];
        assert!(s.validate().is_err());
        s.lambdas = vec![0.3];
        s.n_values = vec![0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn json_config_round_trip() {
        let s = spec(
            Method::Collocation,
            EquationKind::Diffusion,
            RhsKind::Example4,
            &[0.3, 0.5],
            &[8, 16],
        );
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"N_values\""));
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&text).unwrap(), s);
    }

    #[test]
    fn example1_floor_and_determinism() {
        let s = spec(
            Method::Pg,
            EquationKind::Advection,
            RhsKind::Example1,
            &[0.3, 0.5],
            &[8, 16, 24],
        );
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.len(), 6);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.max_error.to_bits(), y.max_error.to_bits());
            assert_eq!((x.lambda, x.n), (y.lambda, y.n));
        }
        assert!(a
            .iter()
            .filter(|r| r.lambda == 0.3 && r.n >= 16)
            .all(|r| r.max_error <= 1e-10));
        let strip = |csv: String| -> Vec<String> {
            csv.lines()
                .map(|l| l.rsplit_once(',').map_or("", |x| x.0).to_string())
                .collect()
        };
        assert_eq!(strip(records_to_csv(&a)), strip(records_to_csv(&b)));
    }

    #[test]
    fn csv_layout() {
        let s = spec(
            Method::Collocation,
            EquationKind::Advection,
            RhsKind::Example3,
            &[0.3],
            &[8],
        );
        let recs = run(&s).unwrap();
        let csv = records_to_csv(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 10);
        assert_eq!(
            &row[..7],
            &[
                "example3",
                "collocation",
                "advection",
                "0.5",
                "0.3",
                "2",
                "8"
            ]
        );
        assert!(row[8].parse::<f64>().unwrap() >= 1.0);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        write_csv(&recs, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), csv);
    }

    #[test]
    fn write_failure_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_csv(&[], &blocker.join("out.csv")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }

    #[test]
    fn mismatched_lambda_improves() {
        let s = spec(
            Method::Pg,
            EquationKind::Diffusion,
            RhsKind::Example2,
            &[0.7],
            &[8, 64],
        );
        let r = run(&s).unwrap();
        assert!(r[1].max_error < r[0].max_error);
    }

    #[test]
    fn degenerate_diffusion_index_is_a_failure_row() {
        // λ + ν = 1: x^λ e^{−σx} is annihilated by D_s^{2−ν}
        let s = spec(
            Method::Collocation,
            EquationKind::Diffusion,
            RhsKind::Example4,
            &[0.5, 0.7],
            &[8],
        );
        let r = run(&s).unwrap();
        assert!(r[0].failure.is_some());
        assert!(r[1].failure.is_none());
    }

    #[test]
    fn numerical_failures_become_rows() {
        // L_N^λ values overflow the Laguerre degree cap
        let s = spec(
            Method::Pg,
            EquationKind::Advection,
            RhsKind::Example1,
            &[0.3],
            &[8, 400],
        );
        let r = run(&s).unwrap();
        assert!(r[0].failure.is_none());
        assert!(r[1].failure.is_some() && r[1].max_error.is_nan());
    }
}
