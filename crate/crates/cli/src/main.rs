//! `liouform` command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 verification failure,
//! 3 solver non-convergence.

use clap::{Args, Parser, Subcommand, ValueEnum};
use liouform::derivation::{classify, kernel_basis};
use liouform::diagnostics::{classify_abc_plane, linspace, random_abc_samples, sweep_theta_phi, write_abc_csv, write_theta_phi_csv};
use liouform::dynamics::{builtin_system, integrate, Hamiltonian, Scheme, SolverMethod, SolverOptions, SystemName};
use liouform::forms::{make_family_form, Angle, FormFamily, FormFamilySpec, LiouvillianForm};
use liouform::verification::{self, SuiteOptions};
use liouform::{Error, Vector};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const INVALID_INPUT: u8 = 1;
const VERIFICATION_FAILED: u8 = 2;
const SOLVER_FAILED: u8 = 3;
const THREADS_VAR: &str = "LIOUFORM_THREADS";

#[derive(Parser)]
#[command(name = "liouform", version, about = "Derive, classify and run integrators from Liouvillian forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the derivation pipeline on a form and print its symplecticity report.
    Derive(DeriveArgs),
    /// Classify a grid of θ_φ forms or random (α, β, γ) samples.
    Sweep(SweepArgs),
    /// Integrate a built-in Hamiltonian system.
    Integrate(IntegrateArgs),
    /// Run the theorem-reproduction checks.
    Verify(VerifyArgs),
}

/// Form selection shared by `derive` and `integrate`.
#[derive(Args)]
struct FormArgs {
    /// Family name (poincare, theta_phi, midpoint_canonical, euler_a, euler_b,
    /// abc_family, midpoint_family).
    #[arg(long)]
    family: Option<String>,
    /// Family name, or path to a form-spec JSON file.
    #[arg(long)]
    form: Option<String>,
    /// Angle in radians; accepts keywords such as `pi/4`.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<Angle>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gamma: Option<Vec<f64>>,
}

#[derive(Args)]
struct DeriveArgs {
    #[command(flatten)]
    form: FormArgs,
    /// Degrees of freedom.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = liouform::canonical::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepFamily {
    #[value(name = "theta_phi")]
    ThetaPhi,
    #[value(name = "abc", alias = "abc_family")]
    Abc,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    family: SweepFamily,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    from: Angle,
    #[arg(long, default_value = "pi/2", allow_hyphen_values = true)]
    to: Angle,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Move every k-th abc sample onto the plane γ = −β (0 disables).
    #[arg(long, default_value_t = 0)]
    plane_every: usize,
    #[arg(long, default_value_t = liouform::canonical::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NamedScheme {
    #[value(name = "midpoint")]
    Midpoint,
    #[value(name = "explicit_euler")]
    ExplicitEuler,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    #[value(name = "fixed_point")]
    FixedPoint,
    #[value(name = "newton")]
    Newton,
}

#[derive(Args)]
struct IntegrateArgs {
    /// harmonic, pendulum, kepler or quadratic.
    #[arg(long)]
    system: String,
    /// Degrees of freedom (defaults to the system's natural size).
    #[arg(long)]
    n: Option<usize>,
    /// Kepler gravitational parameter.
    #[arg(long)]
    mu: Option<f64>,
    /// Row-major entries of M for the quadratic system.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    matrix: Option<Vec<f64>>,
    #[arg(long, value_enum, conflicts_with_all = ["family", "form"])]
    scheme: Option<NamedScheme>,
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    z0: Vec<f64>,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, value_enum, default_value = "fixed_point")]
    method: Method,
    #[arg(long, default_value_t = SolverOptions::default().tolerance)]
    solver_tol: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iterations)]
    max_iter: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only these items (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Override the algebraic tolerances.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = SuiteOptions::default().seed)]
    seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: INVALID_INPUT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::invalid(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(INVALID_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::invalid(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::invalid(format!("cannot configure thread pool: {e}")))
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Derive(a) => derive(a),
        Command::Sweep(a) => sweep(a),
        Command::Integrate(a) => run_integrate(a),
        Command::Verify(a) => verify(a),
    }
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::invalid(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn family_from_name(name: &str, n: usize, args: &FormArgs) -> Result<FormFamilySpec, Failure> {
    let need = |v: &Option<Vec<f64>>, what: &str| {
        v.clone().ok_or_else(|| Failure::invalid(format!("family {name} needs --{what}")))
    };
    let family = match name {
        "poincare" => FormFamily::Poincare,
        "theta_phi" => FormFamily::ThetaPhi {
            phi: args.phi.ok_or_else(|| Failure::invalid("family theta_phi needs --phi"))?,
        },
        "midpoint_canonical" => FormFamily::MidpointCanonical,
        "euler_a" => FormFamily::EulerA,
        "euler_b" => FormFamily::EulerB,
        "abc" | "abc_family" => FormFamily::AbcFamily {
            alpha: need(&args.alpha, "alpha")?,
            beta: need(&args.beta, "beta")?,
            gamma: need(&args.gamma, "gamma")?,
        },
        "midpoint_family" => FormFamily::MidpointFamily { beta: need(&args.beta, "beta")? },
        other => return Err(Failure::invalid(format!("unknown form family {other:?}"))),
    };
    Ok(FormFamilySpec::new(n, family))
}

fn read_spec_file(path: &Path) -> Result<FormFamilySpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("invalid form spec {}: {e}", path.display())))
}

/// `--family NAME` or `--form NAME|FILE`; a `--form` that names an existing file
/// is read as a form-spec JSON document.
fn resolve_form(args: &FormArgs, n: usize) -> Result<Option<FormFamilySpec>, Failure> {
    match (&args.family, &args.form) {
        (Some(_), Some(_)) => Err(Failure::invalid("give either --family or --form, not both")),
        (Some(name), None) => family_from_name(name, n, args).map(Some),
        (None, Some(form)) if Path::new(form).is_file() => read_spec_file(Path::new(form)).map(Some),
        (None, Some(name)) => family_from_name(name, n, args).map(Some),
        (None, None) => Ok(None),
    }
}

fn derive(a: DeriveArgs) -> Result<u8, Failure> {
    let spec = resolve_form(&a.form, a.n)?.ok_or_else(|| Failure::invalid("derive needs --family or --form"))?;
    let form: LiouvillianForm = make_family_form(&spec)?;
    let report = classify(&form, a.tol);
    let mut value = serde_json::to_value(&report).map_err(|e| Failure::invalid(e.to_string()))?;
    value["kernel_dimension"] = kernel_basis(&form, a.tol).len().into();
    value["exactness_residual"] = form.exactness_residual().into();
    let mut out = writer(a.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &value).map_err(|e| Failure::invalid(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(0)
}

fn sweep(a: SweepArgs) -> Result<u8, Failure> {
    if a.n == 0 {
        return Err(Failure::invalid("--n must be at least 1"));
    }
    let mut out = writer(a.output.as_deref())?;
    match a.family {
        SweepFamily::ThetaPhi => {
            if a.from.0 > a.to.0 {
                return Err(Failure::invalid("--from must not exceed --to"));
            }
            let grid = linspace(a.from.0, a.to.0, a.points)?;
            write_theta_phi_csv(&sweep_theta_phi(a.n, &grid, a.tol)?.grid, &mut out)?;
        }
        SweepFamily::Abc => {
            let samples = random_abc_samples(a.n, a.samples, a.seed, a.plane_every);
            write_abc_csv(a.n, &classify_abc_plane(a.n, &samples, a.tol)?, Some(a.seed), &mut out)?;
        }
    }
    out.flush()?;
    Ok(0)
}

fn run_integrate(a: IntegrateArgs) -> Result<u8, Failure> {
    let name: SystemName = a.system.parse()?;
    let n = a.n.unwrap_or(match name {
        SystemName::Pendulum => 1,
        SystemName::Kepler => 2,
        SystemName::Quadratic => a.matrix.as_ref().map_or(1, |m| ((m.len() as f64).sqrt() as usize) / 2),
        SystemName::Harmonic => (a.z0.len() / 2).max(1),
    });
    let params = match (name, &a.mu, &a.matrix) {
        (SystemName::Kepler, mu, None) => mu.iter().copied().collect(),
        (SystemName::Quadratic, None, Some(m)) => m.clone(),
        (SystemName::Quadratic, None, None) => return Err(Failure::invalid("quadratic needs --matrix")),
        (_, None, None) => Vec::new(),
        _ => return Err(Failure::invalid(format!("--mu/--matrix do not apply to {}", a.system))),
    };
    let system = builtin_system(name, n, &params)?;
    let n = system.n();
    if a.z0.len() != 2 * n {
        return Err(Failure::invalid(format!("--z0 needs {} values for n = {n}, got {}", 2 * n, a.z0.len())));
    }
    if !(a.h > 0.0 && a.h.is_finite()) {
        return Err(Failure::invalid(format!("--h must be positive, got {}", a.h)));
    }
    let z0 = Vector::from_row_slice(&a.z0);
    system.energy(&z0)?;

    let scheme = match (a.scheme, resolve_form(&a.form, n)?) {
        (Some(NamedScheme::Midpoint), None) => Scheme::midpoint(n),
        (Some(NamedScheme::ExplicitEuler), None) => Scheme::explicit_euler(n),
        (None, Some(spec)) => {
            if spec.n != n {
                return Err(Failure::invalid(format!("form has n = {}, system has n = {n}", spec.n)));
            }
            Scheme::from_form(&make_family_form(&spec)?, "form")
        }
        (None, None) => return Err(Failure::invalid("integrate needs --scheme or --form")),
        (Some(_), Some(_)) => return Err(Failure::invalid("give either --scheme or --form, not both")),
    };
    let opts = SolverOptions {
        method: match a.method {
            Method::FixedPoint => SolverMethod::FixedPoint,
            Method::Newton => SolverMethod::Newton,
        },
        tolerance: a.solver_tol,
        max_iterations: a.max_iter,
    };
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 || opts.max_iterations == 0 {
        return Err(Failure::invalid("--solver-tol and --max-iter must be positive"));
    }

    let mut out = writer(a.output.as_deref())?;
    match integrate(&scheme, &system, &z0, a.h, a.steps, &opts) {
        Ok(t) => {
            t.write_csv(&mut out)?;
            out.flush()?;
            Ok(0)
        }
        Err(e) => {
            e.partial.write_csv(&mut out)?;
            out.flush()?;
            Err(Failure { code: SOLVER_FAILED, message: e.to_string() })
        }
    }
}

fn verify(a: VerifyArgs) -> Result<u8, Failure> {
    let opts = SuiteOptions { tol: a.tol, only: a.only, seed: a.seed };
    let report = verification::run(&opts)?;
    let stdout = io::stdout();
    let mut console = stdout.lock();
    for item in &report.items {
        writeln!(
            console,
            "{} {:<22} worst={:.3e} threshold={:.1e} {}",
            if item.passed { "PASS" } else { "FAIL" },
            item.name,
            item.worst,
            item.threshold,
            item.detail
        )?;
    }
    if let Some(path) = a.output.as_deref() {
        let mut file = writer(Some(path))?;
        serde_json::to_writer_pretty(&mut file, &report).map_err(|e| Failure::invalid(e.to_string()))?;
        writeln!(file)?;
        file.flush()?;
    }
    Ok(if report.passed { 0 } else { VERIFICATION_FAILED })
}
