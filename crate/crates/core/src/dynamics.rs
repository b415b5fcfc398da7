//! Hamiltonian test systems and the generalized implicit Euler scheme
//! `z_h = z₀ + h · X_H(P₀ z₀ + P_h z_h)`.

use std::io::{self, Write};

use crate::canonical::j0;
use crate::derivation::ImplicitMap;
use crate::forms::LiouvillianForm;
use crate::{Error, Matrix, Result, Vector};

/// Integration aborts when a Kepler orbit comes this close to the origin.
pub const KEPLER_MIN_RADIUS: f64 = 1e-8;

/// An autonomous Hamiltonian on `ℝ²ⁿ`, `z = (q, p)`.
pub trait Hamiltonian: Send + Sync {
    fn n(&self) -> usize;

    fn name(&self) -> &str;

    fn energy(&self, z: &Vector) -> Result<f64>;

    fn gradient(&self, z: &Vector) -> Result<Vector>;

    fn has_hessian(&self) -> bool {
        false
    }

    fn hessian(&self, _z: &Vector) -> Result<Matrix> {
        Err(Error::UnsupportedMethod(format!("{} has no Hessian", self.name())))
    }
}

/// `X_H = J₀ ∇H`, i.e. `(∂H/∂p, −∂H/∂q)`.
pub fn hamiltonian_vector_field<H: Hamiltonian + ?Sized>(system: &H, z: &Vector) -> Result<Vector> {
    let g = system.gradient(z)?;
    Ok(apply_j0(&g))
}

fn apply_j0(g: &Vector) -> Vector {
    let n = g.len() / 2;
    Vector::from_fn(g.len(), |i, _| if i < n { g[n + i] } else { -g[i - n] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemName {
    Harmonic,
    Pendulum,
    Kepler,
    Quadratic,
}

impl std::str::FromStr for SystemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(SystemName::Harmonic),
            "pendulum" => Ok(SystemName::Pendulum),
            "kepler" => Ok(SystemName::Kepler),
            "quadratic" => Ok(SystemName::Quadratic),
            other => Err(Error::InvalidSpec(format!("unknown system {other:?}"))),
        }
    }
}

/// The built-in test systems, all with analytic gradients and Hessians.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinSystem {
    /// `H = ½(‖p‖² + ‖q‖²)`
    Harmonic { n: usize },
    /// `H = ½p² − cos q`, one degree of freedom.
    Pendulum,
    /// `H = ½‖p‖² − μ/‖q‖` in the plane.
    Kepler { mu: f64 },
    /// `H = ½ zᵀ M z` with `M` symmetric.
    Quadratic { m: Matrix },
}

impl BuiltinSystem {
    pub fn harmonic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("harmonic needs n >= 1".into()));
        }
        Self::validated(BuiltinSystem::Harmonic { n })
    }

    pub fn pendulum() -> Result<Self> {
        Self::validated(BuiltinSystem::Pendulum)
    }

    pub fn kepler(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidSpec(format!("kepler needs mu > 0, got {mu}")));
        }
        Self::validated(BuiltinSystem::Kepler { mu })
    }

    pub fn quadratic(m: Matrix) -> Result<Self> {
        let size = m.nrows();
        if size == 0 || !size.is_multiple_of(2) || m.ncols() != size {
            return Err(Error::InvalidSpec(format!("quadratic needs a 2n x 2n matrix, got {:?}", m.shape())));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("quadratic matrix has non-finite entries".into()));
        }
        let asym = crate::canonical::max_norm(&(&m - m.transpose()));
        if asym > 1e-12 * crate::canonical::max_norm(&m).max(1.0) {
            return Err(Error::InvalidSpec(format!("quadratic matrix is not symmetric (residual {asym:e})")));
        }
        Self::validated(BuiltinSystem::Quadratic { m })
    }

    fn validated(sys: Self) -> Result<Self> {
        let size = 2 * sys.n();
        for k in 0..3 {
            let z = Vector::from_fn(size, |i, _| 0.9 + 0.37 * (k as f64) - 0.21 * (i as f64 % 3.0));
            let worst = gradient_mismatch(&sys, &z, 1e-6)?;
            if worst > 1e-6 {
                return Err(Error::InvalidSpec(format!(
                    "{} gradient disagrees with energy (relative mismatch {worst:e})",
                    sys.name()
                )));
            }
        }
        Ok(sys)
    }
}

/// Builds a system from its name and flat parameters: `kepler` takes `[μ]`,
/// `quadratic` takes the row-major entries of `M`.
pub fn builtin_system(name: SystemName, n: usize, params: &[f64]) -> Result<BuiltinSystem> {
    let no_params = |sys: &str| {
        if params.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("{sys} takes no parameters")))
        }
    };
    match name {
        SystemName::Harmonic => {
            no_params("harmonic")?;
            BuiltinSystem::harmonic(n)
        }
        SystemName::Pendulum => {
            no_params("pendulum")?;
            if n != 1 {
                return Err(Error::InvalidSpec("pendulum requires n = 1".into()));
            }
            BuiltinSystem::pendulum()
        }
        SystemName::Kepler => {
            if n != 2 {
                return Err(Error::InvalidSpec("kepler requires n = 2".into()));
            }
            match params {
                [] => BuiltinSystem::kepler(1.0),
                [mu] => BuiltinSystem::kepler(*mu),
                _ => Err(Error::InvalidSpec("kepler takes a single parameter mu".into())),
            }
        }
        SystemName::Quadratic => {
            let size = 2 * n;
            if n == 0 || params.len() != size * size {
                return Err(Error::InvalidSpec(format!(
                    "quadratic with n = {n} needs {} matrix entries, got {}",
                    size * size,
                    params.len()
                )));
            }
            BuiltinSystem::quadratic(Matrix::from_row_slice(size, size, params))
        }
    }
}

fn check_state(sys: &BuiltinSystem, z: &Vector) -> Result<()> {
    if z.len() != 2 * sys.n() {
        return Err(Error::InvalidDimension(format!(
            "{} expects states of length {}, got {}",
            sys.name(),
            2 * sys.n(),
            z.len()
        )));
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singularity(format!("non-finite state in {}", sys.name())));
    }
    Ok(())
}

fn kepler_radius(z: &Vector) -> Result<f64> {
    let r = z[0].hypot(z[1]);
    if r < KEPLER_MIN_RADIUS {
        return Err(Error::Singularity(format!("kepler radius {r:e} below {KEPLER_MIN_RADIUS:e}")));
    }
    Ok(r)
}

impl Hamiltonian for BuiltinSystem {
    fn n(&self) -> usize {
        match self {
            BuiltinSystem::Harmonic { n } => *n,
            BuiltinSystem::Pendulum => 1,
            BuiltinSystem::Kepler { .. } => 2,
            BuiltinSystem::Quadratic { m } => m.nrows() / 2,
        }
    }

    fn name(&self) -> &str {
        match self {
            BuiltinSystem::Harmonic { .. } => "harmonic",
            BuiltinSystem::Pendulum => "pendulum",
            BuiltinSystem::Kepler { .. } => "kepler",
            BuiltinSystem::Quadratic { .. } => "quadratic",
        }
    }

    fn energy(&self, z: &Vector) -> Result<f64> {
        check_state(self, z)?;
        Ok(match self {
            BuiltinSystem::Harmonic { .. } => 0.5 * z.norm_squared(),
            BuiltinSystem::Pendulum => 0.5 * z[1] * z[1] - z[0].cos(),
            BuiltinSystem::Kepler { mu } => 0.5 * (z[2] * z[2] + z[3] * z[3]) - mu / kepler_radius(z)?,
            BuiltinSystem::Quadratic { m } => 0.5 * z.dot(&(m * z)),
        })
    }

    fn gradient(&self, z: &Vector) -> Result<Vector> {
        check_state(self, z)?;
        Ok(match self {
            BuiltinSystem::Harmonic { .. } => z.clone(),
            BuiltinSystem::Pendulum => Vector::from_row_slice(&[z[0].sin(), z[1]]),
            BuiltinSystem::Kepler { mu } => {
                let r = kepler_radius(z)?;
                let k = mu / (r * r * r);
                Vector::from_row_slice(&[k * z[0], k * z[1], z[2], z[3]])
            }
            BuiltinSystem::Quadratic { m } => m * z,
        })
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian(&self, z: &Vector) -> Result<Matrix> {
        check_state(self, z)?;
        Ok(match self {
            BuiltinSystem::Harmonic { n } => Matrix::identity(2 * n, 2 * n),
            BuiltinSystem::Pendulum => Matrix::from_row_slice(2, 2, &[z[0].cos(), 0.0, 0.0, 1.0]),
            BuiltinSystem::Kepler { mu } => {
                let r = kepler_radius(z)?;
                let r3 = r * r * r;
                let r5 = r3 * r * r;
                let mut hess = Matrix::identity(4, 4);
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hess[(i, j)] = mu * (delta / r3 - 3.0 * z[i] * z[j] / r5);
                    }
                }
                hess
            }
            BuiltinSystem::Quadratic { m } => m.clone(),
        })
    }
}

/// Largest relative mismatch between `∇H` and a central difference of `H`.
pub fn gradient_mismatch<H: Hamiltonian + ?Sized>(system: &H, z: &Vector, eps: f64) -> Result<f64> {
    let g = system.gradient(z)?;
    let mut worst = 0.0_f64;
    for j in 0..z.len() {
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[j] += eps;
        minus[j] -= eps;
        let fd = (system.energy(&plus)? - system.energy(&minus)?) / (2.0 * eps);
        worst = worst.max((fd - g[j]).abs() / g[j].abs().max(1.0));
    }
    Ok(worst)
}

/// An implicit map together with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub map: ImplicitMap,
    pub label: String,
}

impl Scheme {
    pub fn new(map: ImplicitMap, label: impl Into<String>) -> Self {
        Scheme { map, label: label.into() }
    }

    pub fn midpoint(n: usize) -> Self {
        Scheme::new(ImplicitMap::midpoint(n), "midpoint")
    }

    pub fn explicit_euler(n: usize) -> Self {
        Scheme::new(ImplicitMap::explicit_euler(n), "explicit-euler")
    }

    /// Runs the derivation pipeline on `form` and wraps its implicit map.
    pub fn from_form(form: &LiouvillianForm, label: impl Into<String>) -> Self {
        Scheme::new(crate::derivation::implicit_map(form), label)
    }

    pub fn n(&self) -> usize {
        self.map.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    FixedPoint,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Max-norm bound on the last iterate change.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { method: SolverMethod::FixedPoint, tolerance: 1e-13, max_iterations: 100 }
    }
}

impl SolverOptions {
    pub fn newton() -> Self {
        SolverOptions { method: SolverMethod::Newton, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vector,
    pub iterations: usize,
}

fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// One step of the generalized implicit Euler scheme.
///
/// `h` may be negative (backward steps); it must be finite and nonzero.
pub fn step<H: Hamiltonian + ?Sized>(
    scheme: &Scheme,
    system: &H,
    z0: &Vector,
    h: f64,
    opts: &SolverOptions,
) -> Result<StepOutcome> {
    let n = system.n();
    if scheme.n() != n || z0.len() != 2 * n {
        return Err(Error::InvalidDimension(format!(
            "scheme n = {}, system n = {n}, state length {}",
            scheme.n(),
            z0.len()
        )));
    }
    if !h.is_finite() || h == 0.0 {
        return Err(Error::InvalidSpec(format!("step size must be finite and nonzero, got {h}")));
    }
    if !(opts.tolerance > 0.0) || opts.max_iterations == 0 {
        return Err(Error::InvalidSpec("solver tolerance and iteration cap must be positive".into()));
    }
    let anchor = &scheme.map.p0 * z0;
    match opts.method {
        SolverMethod::FixedPoint => {
            let mut z = z0.clone();
            let mut change = f64::INFINITY;
            for k in 1..=opts.max_iterations {
                let rho = &anchor + &scheme.map.ph * &z;
                let next = z0 + hamiltonian_vector_field(system, &rho)? * h;
                change = max_abs(&(&next - &z));
                z = next;
                if change <= opts.tolerance {
                    return Ok(StepOutcome { state: z, iterations: k });
                }
                if !change.is_finite() {
                    break;
                }
            }
            Err(Error::SolverFailure { iterations: opts.max_iterations, residual: change })
        }
        SolverMethod::Newton => {
            if !system.has_hessian() {
                return Err(Error::UnsupportedMethod(format!(
                    "newton needs a Hessian, {} has none",
                    system.name()
                )));
            }
            let j = j0(n)?;
            let eye = Matrix::identity(2 * n, 2 * n);
            let mut z = z0.clone();
            let mut change = f64::INFINITY;
            for k in 1..=opts.max_iterations {
                let rho = &anchor + &scheme.map.ph * &z;
                let residual = &z - z0 - hamiltonian_vector_field(system, &rho)? * h;
                let jac = &eye - &j * system.hessian(&rho)? * &scheme.map.ph * h;
                let delta = jac
                    .lu()
                    .solve(&residual)
                    .ok_or(Error::SolverFailure { iterations: k, residual: max_abs(&residual) })?;
                z -= &delta;
                change = max_abs(&delta);
                if change <= opts.tolerance {
                    return Ok(StepOutcome { state: z, iterations: k });
                }
                if !change.is_finite() {
                    break;
                }
            }
            Err(Error::SolverFailure { iterations: opts.max_iterations, residual: change })
        }
    }
}

/// Time-ordered states with their energies and per-step solver iterations
/// (zero for the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub states: Vec<Vector>,
    pub energies: Vec<f64>,
    pub solver_iterations: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// CSV with header `step,t,q1..qn,p1..pn,H,deltaH`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, |z| z.len() / 2);
        let mut header = vec!["step".to_string(), "t".to_string()];
        header.extend((1..=n).map(|i| format!("q{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.push("H".into());
        header.push("deltaH".into());
        writeln!(out, "{}", header.join(","))?;
        let h0 = self.energies.first().copied().unwrap_or(0.0);
        for (k, (z, e)) in self.states.iter().zip(&self.energies).enumerate() {
            write!(out, "{k},{}", fmt17(k as f64 * self.h))?;
            for x in z.iter() {
                write!(out, ",{}", fmt17(*x))?;
            }
            writeln!(out, ",{},{}", fmt17(*e), fmt17(e - h0))?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Failure partway through [`integrate`]; keeps everything computed so far.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("integration stopped after {} states: {source}", partial.len())]
pub struct IntegrationError {
    pub partial: Trajectory,
    pub source: Error,
}

pub fn integrate<H: Hamiltonian + ?Sized>(
    scheme: &Scheme,
    system: &H,
    z0: &Vector,
    h: f64,
    steps: usize,
    opts: &SolverOptions,
) -> std::result::Result<Trajectory, IntegrationError> {
    let mut traj = Trajectory { h, states: Vec::new(), energies: Vec::new(), solver_iterations: Vec::new() };
    let fail = |traj: Trajectory, source| Err(IntegrationError { partial: traj, source });
    if !(h > 0.0 && h.is_finite()) {
        return fail(traj, Error::InvalidSpec(format!("time step must be positive, got {h}")));
    }
    let e0 = match system.energy(z0) {
        Ok(e) => e,
        Err(err) => return fail(traj, err),
    };
    traj.states.reserve(steps + 1);
    traj.states.push(z0.clone());
    traj.energies.push(e0);
    traj.solver_iterations.push(0);
    let mut z = z0.clone();
    for _ in 0..steps {
        let outcome = match step(scheme, system, &z, h, opts) {
            Ok(o) => o,
            Err(err) => return fail(traj, err),
        };
        let e = match system.energy(&outcome.state) {
            Ok(e) => e,
            Err(err) => return fail(traj, err),
        };
        z = outcome.state;
        traj.states.push(z.clone());
        traj.energies.push(e);
        traj.solver_iterations.push(outcome.iterations);
    }
    Ok(traj)
}

/// Exact one-step map for `H = ½zᵀMz`: `(I − hJ₀MP_h)⁻¹ (I + hJ₀MP₀)`.
pub fn linear_step_matrix(scheme: &Scheme, m: &Matrix, h: f64) -> Result<Matrix> {
    let n = scheme.n();
    if m.shape() != (2 * n, 2 * n) {
        return Err(Error::InvalidDimension(format!(
            "quadratic form must be {0}x{0}, got {1:?}",
            2 * n,
            m.shape()
        )));
    }
    let eye = Matrix::identity(2 * n, 2 * n);
    let jm = j0(n)? * m * h;
    let lhs = &eye - &jm * &scheme.map.ph;
    let rhs = &eye + &jm * &scheme.map.p0;
    let lu = lhs.lu();
    if lu.determinant().abs() <= f64::EPSILON {
        return Err(Error::StepSingular { h });
    }
    lu.solve(&rhs).ok_or(Error::StepSingular { h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{is_symplectic_matrix, max_norm};
    use crate::forms::{make_family_form, FormFamily, FormFamilySpec};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn identity_scheme() -> Scheme {
        let form = make_family_form(&FormFamilySpec::new(1, FormFamily::Poincare)).unwrap();
        Scheme::from_form(&form, "poincare-identity")
    }

    #[test]
    fn harmonic_field() {
        let sys = BuiltinSystem::harmonic(1).unwrap();
        assert_eq!(sys.gradient(&v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(hamiltonian_vector_field(&sys, &v(&[1.0, 2.0])).unwrap(), v(&[2.0, -1.0]));
    }

    #[test]
    fn pendulum_field() {
        let sys = BuiltinSystem::pendulum().unwrap();
        assert_eq!(hamiltonian_vector_field(&sys, &v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        let x = hamiltonian_vector_field(&sys, &v(&[FRAC_PI_2, 0.0])).unwrap();
        assert_eq!(x, v(&[0.0, -1.0]));
    }

    #[test]
    fn field_is_j0_times_gradient() {
        let sys = BuiltinSystem::kepler(1.3).unwrap();
        let z = v(&[0.7, -0.4, 0.2, 1.1]);
        let g = sys.gradient(&z).unwrap();
        assert_eq!(hamiltonian_vector_field(&sys, &z).unwrap(), j0(2).unwrap() * g);
    }

    #[test]
    fn quadratic_identity_matches_harmonic() {
        let q = BuiltinSystem::quadratic(Matrix::identity(2, 2)).unwrap();
        let h = BuiltinSystem::harmonic(1).unwrap();
        let z = v(&[0.3, -1.2]);
        assert_eq!(q.energy(&z).unwrap(), h.energy(&z).unwrap());
        let a = integrate(&Scheme::midpoint(1), &q, &z, 0.1, 20, &SolverOptions::default()).unwrap();
        let b = integrate(&Scheme::midpoint(1), &h, &z, 0.1, 20, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn builtin_parameter_errors() {
        assert!(builtin_system(SystemName::Kepler, 1, &[]).is_err());
        assert!(builtin_system(SystemName::Kepler, 2, &[-1.0]).is_err());
        assert!(builtin_system(SystemName::Pendulum, 2, &[]).is_err());
        assert!(builtin_system(SystemName::Quadratic, 1, &[1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(builtin_system(SystemName::Quadratic, 1, &[1.0, 0.5, 0.5, 1.0]).is_ok());
        assert!("lorenz".parse::<SystemName>().is_err());
    }

    #[test]
    fn kepler_singularity() {
        let sys = BuiltinSystem::kepler(1.0).unwrap();
        let z = v(&[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(sys.gradient(&z), Err(Error::Singularity(_))));
        assert!(matches!(sys.energy(&z), Err(Error::Singularity(_))));
    }

    #[test]
    fn kepler_hessian_matches_gradient_differences() {
        let sys = BuiltinSystem::kepler(2.0).unwrap();
        let z = v(&[0.8, -0.5, 0.3, 0.9]);
        let hess = sys.hessian(&z).unwrap();
        let eps = 1e-6;
        for j in 0..4 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += eps;
            zm[j] -= eps;
            let col = (sys.gradient(&zp).unwrap() - sys.gradient(&zm).unwrap()) / (2.0 * eps);
            for i in 0..4 {
                assert!((col[i] - hess[(i, j)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn identity_scheme_single_iteration() {
        let sys = BuiltinSystem::pendulum().unwrap();
        let z0 = v(&[1.0, 0.5]);
        for h in [0.01, 0.5, 3.0] {
            let out = step(&identity_scheme(), &sys, &z0, h, &SolverOptions::default()).unwrap();
            assert_eq!(out.state, z0);
            assert_eq!(out.iterations, 1);
        }
    }

    #[test]
    fn null_map_translates_without_equilibrium() {
        // H = ½(q − 1)² has X_H(0) = (0, 1): the null-map scheme translates rigidly.
        struct Shifted;
        impl Hamiltonian for Shifted {
            fn n(&self) -> usize {
                1
            }
            fn name(&self) -> &str {
                "shifted"
            }
            fn energy(&self, z: &Vector) -> Result<f64> {
                Ok(0.5 * ((z[0] - 1.0).powi(2) + z[1] * z[1]))
            }
            fn gradient(&self, z: &Vector) -> Result<Vector> {
                Ok(v(&[z[0] - 1.0, z[1]]))
            }
        }
        let out = step(&identity_scheme(), &Shifted, &v(&[0.2, 0.3]), 0.5, &SolverOptions::default()).unwrap();
        assert_eq!(out.state, v(&[0.2, 0.8]));
    }

    #[test]
    fn small_step_is_consistent() {
        let sys = BuiltinSystem::harmonic(1).unwrap();
        let z0 = v(&[1.0, 0.0]);
        let mut prev = f64::INFINITY;
        for h in [1e-1, 1e-2, 1e-3, 1e-4] {
            let out = step(&Scheme::midpoint(1), &sys, &z0, h, &SolverOptions::default()).unwrap();
            let d = max_abs(&(out.state - &z0));
            assert!(d < prev);
            assert!(d <= 1.01 * h);
            prev = d;
        }
    }

    #[test]
    fn midpoint_matches_linear_step() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.7]);
        let sys = BuiltinSystem::quadratic(m.clone()).unwrap();
        let scheme = Scheme::midpoint(1);
        let z0 = v(&[0.4, -0.9]);
        let exact = linear_step_matrix(&scheme, &m, 0.1).unwrap() * &z0;
        let out = step(&scheme, &sys, &z0, 0.1, &SolverOptions::default()).unwrap();
        assert!(max_abs(&(out.state - exact)) <= 1e-12);
    }

    #[test]
    fn newton_agrees_with_fixed_point() {
        let sys = BuiltinSystem::pendulum().unwrap();
        let scheme = Scheme::midpoint(1);
        let z0 = v(&[1.2, -0.3]);
        let a = step(&scheme, &sys, &z0, 0.05, &SolverOptions::default()).unwrap();
        let b = step(&scheme, &sys, &z0, 0.05, &SolverOptions::newton()).unwrap();
        assert!(max_abs(&(a.state - b.state)) <= 1e-12);
        assert!(b.iterations < 10);
    }

    #[test]
    fn newton_without_hessian_is_unsupported() {
        struct NoHess;
        impl Hamiltonian for NoHess {
            fn n(&self) -> usize {
                1
            }
            fn name(&self) -> &str {
                "nohess"
            }
            fn energy(&self, z: &Vector) -> Result<f64> {
                Ok(0.5 * z.norm_squared())
            }
            fn gradient(&self, z: &Vector) -> Result<Vector> {
                Ok(z.clone())
            }
        }
        let err = step(&Scheme::midpoint(1), &NoHess, &v(&[1.0, 0.0]), 0.1, &SolverOptions::newton());
        assert!(matches!(err, Err(Error::UnsupportedMethod(_))));
    }

    #[test]
    fn solver_failure_reports_residual() {
        let sys = BuiltinSystem::harmonic(1).unwrap();
        let opts = SolverOptions { max_iterations: 3, ..SolverOptions::default() };
        match step(&Scheme::midpoint(1), &sys, &v(&[1.0, 0.0]), 0.5, &opts) {
            Err(Error::SolverFailure { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integrate_keeps_partial_trajectory() {
        let sys = BuiltinSystem::harmonic(1).unwrap();
        // h = 3 makes the fixed-point map expansive (h·L > 1).
        let err = integrate(&Scheme::midpoint(1), &sys, &v(&[1.0, 0.0]), 3.0, 5, &SolverOptions::default())
            .unwrap_err();
        assert_eq!(err.partial.len(), 1);
        assert!(matches!(err.source, Error::SolverFailure { .. }));
    }

    #[test]
    fn zero_steps() {
        let sys = BuiltinSystem::pendulum().unwrap();
        let t = integrate(&Scheme::midpoint(1), &sys, &v(&[0.1, 0.2]), 0.1, 0, &SolverOptions::default()).unwrap();
        assert_eq!(t.states, vec![v(&[0.1, 0.2])]);
        assert_eq!(t.solver_iterations, vec![0]);
    }

    #[test]
    fn identity_trajectory_is_constant() {
        let sys = BuiltinSystem::pendulum().unwrap();
        let z0 = v(&[1.0, 0.5]);
        let t = integrate(&identity_scheme(), &sys, &z0, 0.1, 100, &SolverOptions::default()).unwrap();
        assert!(t.states.iter().all(|z| *z == z0));
    }

    #[test]
    fn linear_step_examples() {
        let j = j0(1).unwrap();
        let mid = linear_step_matrix(&Scheme::midpoint(1), &Matrix::identity(2, 2), 0.3).unwrap();
        assert!(is_symplectic_matrix(&mid, &j, 1e-13).unwrap().holds);

        let null = Scheme::new(ImplicitMap::new(Matrix::zeros(2, 2), Matrix::zeros(2, 2)).unwrap(), "null");
        assert_eq!(linear_step_matrix(&null, &Matrix::identity(2, 2), 0.7).unwrap(), Matrix::identity(2, 2));

        // Explicit Euler: (I + hJ₀)ᵀJ₀(I + hJ₀) = (1 + h²)J₀.
        let euler = linear_step_matrix(&Scheme::explicit_euler(1), &Matrix::identity(2, 2), 0.1).unwrap();
        let residual = is_symplectic_matrix(&euler, &j, 0.0).unwrap().residual;
        assert!((residual - 0.01).abs() < 1e-15);
    }

    #[test]
    fn scaled_theta_phi_step_is_symplectic_but_inconsistent() {
        // θ_{π/3} has P0 + Ph = κI with κ = 1 − sin 2φ and Hamiltonian b. Substituting
        // w = ρ/κ turns it into a κ = 1 scheme for H(κ·)/κ, so the map stays symplectic
        // while following the vector field at κz instead of z.
        let n = 2;
        let form = make_family_form(&FormFamilySpec::theta_phi(n, FRAC_PI_3)).unwrap();
        let scheme = Scheme::from_form(&form, "pi/3");
        let kappa = 1.0 - (2.0 * FRAC_PI_3).sin();
        let m = Matrix::from_row_slice(4, 4, &[
            2.0, 0.3, 0.1, 0.0, 0.3, 1.0, 0.0, 0.2, 0.1, 0.0, 1.5, 0.4, 0.0, 0.2, 0.4, 1.0,
        ]);
        let s = linear_step_matrix(&scheme, &m, 0.1).unwrap();
        assert!(is_symplectic_matrix(&s, &j0(n).unwrap(), 1e-13).unwrap().holds);

        let form = make_family_form(&FormFamilySpec::theta_phi(1, FRAC_PI_3)).unwrap();
        let scheme = Scheme::from_form(&form, "pi/3");
        let sys = BuiltinSystem::pendulum().unwrap();
        let z = v(&[0.4, -0.2]);
        let h = 1e-6;
        let next = step(&scheme, &sys, &z, h, &SolverOptions::default()).unwrap().state;
        let rate = (next - &z) / h;
        let expected = hamiltonian_vector_field(&sys, &(&z * kappa)).unwrap();
        assert!(max_norm(&Matrix::from_column_slice(2, 1, (rate - expected).as_slice())) < 1e-5);
    }

    #[test]
    fn non_uniform_scaling_breaks_symplecticity() {
        // abc with β₁ = 0.3 and every other parameter zero: P0 + Ph = diag(0.7, 1, 0.7, 1).
        let form = make_family_form(&FormFamilySpec::abc(vec![0.0, 0.0], vec![0.3, 0.0], vec![0.0, 0.0])).unwrap();
        let scheme = Scheme::from_form(&form, "abc");
        let j = j0(2).unwrap();
        let s = linear_step_matrix(&scheme, &Matrix::identity(4, 4), 0.1).unwrap();
        assert!(is_symplectic_matrix(&s, &j, 1e-13).unwrap().holds);
        let coupled = Matrix::from_row_slice(4, 4, &[
            1.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ]);
        let s = linear_step_matrix(&scheme, &coupled, 0.1).unwrap();
        assert!(is_symplectic_matrix(&s, &j, 0.0).unwrap().residual > 1e-2);
    }

    #[test]
    fn singular_step_matrix() {
        // Ph = [[0,0],[1,0]] and M = diag(0,1) give J₀MPh = [[1,0],[0,0]], so
        // I − hJ₀MPh is singular at h = 1.
        let scheme = Scheme::new(
            ImplicitMap::new(Matrix::zeros(2, 2), Matrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])).unwrap(),
            "degenerate",
        );
        let m = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let lhs = Matrix::identity(2, 2) - j0(1).unwrap() * &m * &scheme.map.ph;
        assert!(lhs.determinant().abs() < 1e-15);
        assert!(matches!(linear_step_matrix(&scheme, &m, 1.0), Err(Error::StepSingular { h }) if h == 1.0));
    }

    #[test]
    fn csv_layout() {
        let sys = BuiltinSystem::harmonic(2).unwrap();
        let z0 = v(&[1.0, 0.0, 0.0, 0.5]);
        let t = integrate(&Scheme::midpoint(2), &sys, &z0, 0.25, 2, &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,t,q1,q2,p1,p2,H,deltaH");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0.0000000000000000e0,1.0000000000000000e0,"));
        let cols: Vec<_> = lines[2].split(',').collect();
        assert_eq!(cols.len(), 8);
        assert_eq!(cols[1], "2.5000000000000000e-1");
        assert!(max_norm(&Matrix::from_row_slice(1, 1, &[cols[7].parse::<f64>().unwrap()])) < 1e-14);
    }
}
