#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use substantial_core::collocation;
use substantial_core::error::SpectralError;
use substantial_core::experiments::{self, ExperimentSpec, Method, RhsKind};
use substantial_core::mlf::{BasisParams, EquationKind};
use substantial_core::quadrature::{gauss_rule, radau_rule};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "substantial",
    version,
    about = "Spectral solvers for substantial fractional equations on the half-line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence sweep and write a CSV of errors.
    Run(RunArgs),
    /// Check the closed-form derivative identities against the quadrature oracle.
    VerifyIdentities {
        /// Also write per-cell results as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print Laguerre-Gauss (or Gauss-Radau) nodes and weights as CSV.
    Quad {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        radau: bool,
    },
    /// Write a collocation matrix as `PREFIX.csv` plus a `PREFIX.json` header.
    Matrix {
        #[arg(long, value_enum)]
        equation: Equation,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Equation {
    Advection,
    Diffusion,
}

impl From<Equation> for EquationKind {
    fn from(e: Equation) -> Self {
        match e {
            Equation::Advection => EquationKind::Advection,
            Equation::Diffusion => EquationKind::Diffusion,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pg,
    Collocation,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhsArg {
    Example1,
    Example2,
    Example3,
    Example4,
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with an experiment spec; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    equation: Option<Equation>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    rhs: Option<RhsArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Domain(_) | SpectralError::Parse(_) | SpectralError::Io { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn resolve_spec(args: RunArgs) -> Result<ExperimentSpec, Failure> {
    let base: Option<ExperimentSpec> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| Failure::Usage(format!("bad config {}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let missing =
        |name: &str| Failure::Usage(format!("--{name} is required (or supply it in --config)"));
    let equation = args
        .equation
        .map(EquationKind::from)
        .or(base.as_ref().map(|b| b.equation))
        .ok_or_else(|| missing("equation"))?;
    let method = args
        .method
        .map(|m| match m {
            MethodArg::Pg => Method::Pg,
            MethodArg::Collocation => Method::Collocation,
        })
        .or(base.as_ref().map(|b| b.method))
        .ok_or_else(|| missing("method"))?;
    let rhs = args
        .rhs
        .map(|r| match r {
            RhsArg::Example1 => RhsKind::Example1,
            RhsArg::Example2 => RhsKind::Example2,
            RhsArg::Example3 => RhsKind::Example3,
            RhsArg::Example4 => RhsKind::Example4,
        })
        .or(base.as_ref().map(|b| b.rhs))
        .ok_or_else(|| missing("rhs"))?;
    Ok(ExperimentSpec {
        equation,
        method,
        nu: args
            .nu
            .or(base.as_ref().map(|b| b.nu))
            .ok_or_else(|| missing("nu"))?,
        sigma: args
            .sigma
            .or(base.as_ref().map(|b| b.sigma))
            .ok_or_else(|| missing("sigma"))?,
        lambdas: args
            .lambda
            .or(base.as_ref().map(|b| b.lambdas.clone()))
            .ok_or_else(|| missing("lambda"))?,
        n_values: args
            .n
            .or(base.as_ref().map(|b| b.n_values.clone()))
            .ok_or_else(|| missing("n"))?,
        rhs,
        output: args
            .out
            .or(base.map(|b| b.output))
            .ok_or_else(|| missing("out"))?,
    })
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let spec = resolve_spec(args)?;
    spec.validate()?;
    let records = experiments::run(&spec)?;
    experiments::write_csv(&records, &spec.output)?;
    println!(
        "{:>8} {:>5} {:>12} {:>12}",
        "lambda", "N", "max_error", "cond"
    );
    for r in &records {
        let cond = r
            .cond
            .map(|c| format!("{c:.4e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>8} {:>5} {:>12.4e} {:>12}",
            r.lambda, r.n, r.max_error, cond
        );
        if let Some(msg) = &r.failure {
            eprintln!("lambda={} N={}: {msg}", r.lambda, r.n);
        }
    }
    for &lambda in &spec.lambdas {
        let rows: Vec<_> = records
            .iter()
            .filter(|r| r.lambda == lambda)
            .cloned()
            .collect();
        match experiments::fit_rate(&rows) {
            Some(rate) => println!("lambda={lambda}: fitted rate {rate:.2}"),
            None => println!("lambda={lambda}: fitted rate undefined (fewer than 3 points above the round-off floor)"),
        }
    }
    println!("wrote {}", spec.output.display());
    let failed = records.iter().filter(|r| r.failure.is_some()).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} sweep cell(s) failed")));
    }
    Ok(())
}

fn verify_identities(out: Option<PathBuf>) -> Result<(), Failure> {
    let records = experiments::identity_sweep()?;
    let mut bad = 0;
    for kind in [EquationKind::Advection, EquationKind::Diffusion] {
        let tol = experiments::identity_tolerance(kind);
        let cells: Vec<_> = records.iter().filter(|r| r.kind == kind).collect();
        let worst = cells.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
        let over = cells.iter().filter(|r| !(r.max_rel_error <= tol)).count();
        bad += over;
        println!(
            "{:<10} cells {:>4}  worst relative error {:.3e}  tolerance {:.0e}  {}",
            kind.as_str(),
            cells.len(),
            worst,
            tol,
            if over == 0 { "ok" } else { "FAILED" }
        );
    }
    if let Some(path) = out {
        let mut csv = String::from("kind,n,lambda,nu,sigma,max_rel_error\n");
        for r in &records {
            csv.push_str(&format!(
                "{},{},{},{},{},{:e}\n",
                r.kind.as_str(),
                r.n,
                r.lambda,
                r.nu,
                r.sigma,
                r.max_rel_error
            ));
        }
        std::fs::write(&path, csv)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    if bad > 0 {
        return Err(Failure::Numerical(format!(
            "{bad} identity cell(s) above tolerance"
        )));
    }
    Ok(())
}

fn matrix(
    equation: Equation,
    n: usize,
    lambda: f64,
    nu: f64,
    sigma: f64,
    out: PathBuf,
) -> Result<(), Failure> {
    let p = BasisParams::new(lambda, nu, sigma)?;
    let sys = collocation::build(equation.into(), n, &p)?;
    let header =
        serde_json::to_string_pretty(&sys.header()).map_err(|e| Failure::Usage(e.to_string()))?;
    let write = |ext: &str, body: &str| {
        let path = out.with_extension(ext);
        std::fs::write(&path, body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
    };
    write("csv", &sys.matrix_csv())?;
    write("json", &header)?;
    println!("condition number {:.6e}", sys.condition_number()?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::VerifyIdentities { out } => verify_identities(out),
        Command::Quad {
            n,
            lambda,
            sigma,
            radau,
        } => {
            let rule = if radau {
                radau_rule(n, lambda, sigma)
            } else {
                gauss_rule(n, lambda, sigma)
            };
            rule.map(|r| print!("{}", r.to_csv()))
                .map_err(Failure::from)
        }
        Command::Matrix {
            equation,
            n,
            lambda,
            nu,
            sigma,
            out,
        } => matrix(equation, n, lambda, nu, sigma, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
