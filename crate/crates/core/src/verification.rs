//! Self-contained reproduction suite for the structural results: null map,
//! rotation path classification, mid-point family, `(α, β, γ)` plane, and the
//! numerical symplecticity and energy checks of the executed schemes.
//!
//! Each item reports its worst observed value against a threshold.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, TAU};

use rand::Rng;
use serde::Serialize;

use crate::canonical::{is_symplectic_rotation, jtilde, max_norm};
use crate::derivation::{classify, implicit_map, Verdict};
use crate::diagnostics::{
    classify_abc_plane, energy_drift, linspace, random_abc_samples, seeded_rng, step_jacobian, sweep_theta_phi,
    symplectic_residual,
};
use crate::dynamics::{integrate, linear_step_matrix, BuiltinSystem, Scheme, SolverOptions};
use crate::forms::{
    make_family_form, matricial_decomposition, pullback_form, psi_matrix, rotation_matrix, tautological_form,
    theta_phi_closed_form, FormFamily, FormFamilySpec,
};
use crate::{Error, Matrix, Result, Vector};

/// Item names, in execution order.
pub const ITEMS: [&str; 12] = [
    "proposition1",
    "theorem1",
    "trig_identities",
    "theorem2",
    "abc_plane",
    "lemma2",
    "decomposition",
    "rotation",
    "linear_symplecticity",
    "theta_phi_control",
    "jacobian",
    "energy",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    /// Replaces every algebraic tolerance (all items except `energy`).
    pub tol: Option<f64>,
    /// Restrict to these items; empty runs everything.
    pub only: Vec<String>,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { tol: None, only: Vec::new(), seed: 20_170_301 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Largest residual (or other compared quantity) seen.
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub items: Vec<CheckOutcome>,
}

struct Ctx {
    tol: Option<f64>,
    seed: u64,
}

impl Ctx {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Tracks the worst value of a `value ≤ threshold` family of checks.
struct Bound {
    name: &'static str,
    threshold: f64,
    worst: f64,
    failures: Vec<String>,
}

impl Bound {
    fn new(name: &'static str, threshold: f64) -> Self {
        Bound { name, threshold, worst: 0.0, failures: Vec::new() }
    }

    fn le(&mut self, value: f64, what: impl FnOnce() -> String) {
        self.worst = self.worst.max(value);
        if !(value <= self.threshold) {
            self.failures.push(format!("{} = {value:e}", what()));
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, summary: String) -> CheckOutcome {
        let passed = self.failures.is_empty();
        let detail = if passed {
            summary
        } else {
            let shown: Vec<_> = self.failures.iter().take(3).cloned().collect();
            format!("{} failure(s): {}", self.failures.len(), shown.join("; "))
        };
        CheckOutcome { name: self.name.into(), passed, worst: self.worst, threshold: self.threshold, detail }
    }
}

pub fn run(options: &SuiteOptions) -> Result<SuiteReport> {
    for name in &options.only {
        if !ITEMS.contains(&name.as_str()) {
            return Err(Error::InvalidSpec(format!("unknown verification item {name:?}")));
        }
    }
    let ctx = Ctx { tol: options.tol, seed: options.seed };
    let mut items = Vec::new();
    for name in ITEMS {
        if !options.only.is_empty() && !options.only.iter().any(|o| o == name) {
            continue;
        }
        let outcome = match name {
            "proposition1" => proposition1(&ctx),
            "theorem1" => theorem1(&ctx),
            "trig_identities" => trig_identities(&ctx),
            "theorem2" => theorem2(&ctx),
            "abc_plane" => abc_plane(&ctx),
            "lemma2" => lemma2(&ctx),
            "decomposition" => decomposition(&ctx),
            "rotation" => rotation(&ctx),
            "linear_symplecticity" => linear_symplecticity(&ctx),
            "theta_phi_control" => theta_phi_control(&ctx),
            "jacobian" => jacobian(&ctx),
            _ => energy(&ctx),
        }?;
        items.push(outcome);
    }
    Ok(SuiteReport { passed: items.iter().all(|i| i.passed), items })
}

fn family(n: usize, f: FormFamily) -> Result<crate::forms::LiouvillianForm> {
    make_family_form(&FormFamilySpec::new(n, f))
}

fn proposition1(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("proposition1", ctx.tol(1e-15));
    for n in 1..=3 {
        let r = classify(&family(n, FormFamily::Poincare)?, ctx.tol(1e-12));
        b.require(r.verdict == Verdict::NullMap, || format!("n={n} verdict {}", r.verdict));
        b.require(max_norm(&r.p0) == 0.0 && max_norm(&r.ph) == 0.0, || format!("n={n} rho not exactly zero"));
    }
    let scheme = Scheme::from_form(&family(1, FormFamily::Poincare)?, "poincare-identity");
    let sys = BuiltinSystem::pendulum()?;
    let mut rng = seeded_rng(ctx.seed);
    for k in 0..20 {
        let z0 = Vector::from_row_slice(&[rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)]);
        let t = integrate(&scheme, &sys, &z0, 0.1, 100, &SolverOptions::default()).map_err(|e| e.source)?;
        let change = t.states.windows(2).map(|w| max_norm_v(&(&w[1] - &w[0]))).fold(0.0, f64::max);
        b.le(change, || format!("state {k} per-step change"));
    }
    Ok(b.finish("rho = 0 for n = 1,2,3; 20 pendulum trajectories constant".into()))
}

fn max_norm_v(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn half_diag(n: usize, top: f64) -> Matrix {
    Matrix::from_fn(2 * n, 2 * n, |i, j| if i != j { 0.0 } else if i < n { 0.5 * top } else { -0.5 * top })
}

fn theorem1(ctx: &Ctx) -> Result<CheckOutcome> {
    let tol = ctx.tol(1e-12);
    let mut b = Bound::new("theorem1", ctx.tol(1e-14));
    let grid = linspace(0.0, FRAC_PI_2, 10_001)?;
    for n in [1, 2] {
        let sweep = sweep_theta_phi(n, &grid, tol)?;
        let symplectic: Vec<f64> = sweep
            .grid
            .iter()
            .chain(&sweep.exact_points)
            .filter(|r| r.verdict == Verdict::Symplectic)
            .map(|r| r.parameter_values[0])
            .collect();
        b.require(symplectic.iter().all(|&phi| phi == 0.0 || phi == FRAC_PI_2), || {
            format!("n={n}: symplectic verdict away from the endpoints")
        });
        for (phi, top) in [(0.0, 1.0), (FRAC_PI_2, -1.0)] {
            let r = sweep
                .exact_points
                .iter()
                .find(|r| r.parameter_values[0] == phi)
                .expect("endpoints are always evaluated");
            b.require(r.verdict == Verdict::Symplectic, || format!("n={n}: phi={phi} not symplectic"));
            b.le(max_norm(&(&r.b - half_diag(n, top))), || format!("n={n}: b at phi={phi}"));
            let g = sweep.grid.iter().find(|r| r.parameter_values[0] == phi).expect("grid endpoints");
            b.require(g.verdict == Verdict::Symplectic, || format!("n={n}: grid phi={phi} not symplectic"));
            b.le(max_norm(&(&g.b - half_diag(n, top))), || format!("n={n}: grid b at phi={phi}"));
        }
    }
    Ok(b.finish("symplectic exactly at phi in {0, pi/2} over 10001 points, n = 1,2".into()))
}

fn trig_identities(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("trig_identities", ctx.tol(1e-14));
    for phi in linspace(0.0, TAU, 1000)? {
        let (c, s) = (phi.cos(), phi.sin());
        let f = -s * (c - s);
        let g = c * (c - s);
        b.le((f + g - (1.0 - (2.0 * phi).sin())).abs(), || format!("f+g at {phi}"));
        b.le((f - g + (2.0 * phi).cos()).abs(), || format!("f-g at {phi}"));
        let map = implicit_map(&make_family_form(&FormFamilySpec::theta_phi(1, phi))?);
        let p0 = Matrix::from_row_slice(2, 2, &[f, 0.0, 0.0, g]);
        let ph = Matrix::from_row_slice(2, 2, &[g, 0.0, 0.0, f]);
        b.le(max_norm(&(map.p0 - p0)).max(max_norm(&(map.ph - ph))), || format!("P0/Ph at {phi}"));
    }
    Ok(b.finish("f+g, f-g and pipeline P0/Ph on 1000 points".into()))
}

fn theorem2(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("theorem2", ctx.tol(1e-14));
    let step_tol = ctx.tol(1e-12);
    let mut rng = seeded_rng(ctx.seed ^ 2);
    let sys = BuiltinSystem::pendulum()?;
    let midpoint = Scheme::midpoint(1);
    let z0 = Vector::from_row_slice(&[1.0, 0.5]);
    let reference = integrate(&midpoint, &sys, &z0, 0.01, 1000, &SolverOptions::default()).map_err(|e| e.source)?;
    let mut worst_step = 0.0_f64;
    for n in [1, 2, 5] {
        for k in 0..100 {
            let beta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let form = make_family_form(&FormFamilySpec::midpoint_family(beta.clone()))?;
            let r = classify(&form, ctx.tol(1e-12));
            let half = Matrix::identity(2 * n, 2 * n) * 0.5;
            b.le(max_norm(&(&r.p0 - &half)).max(max_norm(&(&r.ph - &half))), || {
                format!("n={n} beta={beta:?} map")
            });
            b.require(r.verdict == Verdict::Symplectic, || format!("n={n} beta={beta:?} verdict {}", r.verdict));
            if n == 1 && k % 10 == 0 {
                let scheme = Scheme::from_form(&form, "theta_beta");
                let t = integrate(&scheme, &sys, &z0, 0.01, 1000, &SolverOptions::default()).map_err(|e| e.source)?;
                let d = t.states.iter().zip(&reference.states).map(|(a, r)| max_norm_v(&(a - r))).fold(0.0, f64::max);
                worst_step = worst_step.max(d);
                if !(d <= step_tol) {
                    b.failures.push(format!("beta={beta:?} trajectory deviates by {d:e}"));
                }
            }
        }
    }
    Ok(b.finish(format!(
        "300 beta draws map to (I/2, I/2); executed schemes match mid-point within {worst_step:e}"
    )))
}

fn abc_plane(ctx: &Ctx) -> Result<CheckOutcome> {
    let tol = ctx.tol(1e-12);
    let mut b = Bound::new("abc_plane", 0.0);
    let samples = random_abc_samples(2, 1000, ctx.seed ^ 5, 2);
    let records = classify_abc_plane(2, &samples, tol)?;
    let mismatches = records.iter().filter(|r| !r.agrees).count();
    b.le(mismatches as f64, || "mismatches".into());
    let on_plane = records.iter().filter(|r| r.predicate).count();
    Ok(b.finish(format!("1000 samples ({on_plane} on the plane), 0 mismatches")))
}

fn lemma2(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("lemma2", ctx.tol(1e-13));
    for n in [1, 2] {
        let taut = tautological_form(n)?;
        for phi in linspace(0.0, TAU, 100)? {
            let pulled = pullback_form(&psi_matrix(n, phi)?, &taut)?;
            let direct = make_family_form(&FormFamilySpec::theta_phi(n, phi))?;
            b.le(max_norm(&(pulled.matrix() - direct.matrix())), || format!("n={n} phi={phi}"));
        }
        let quarter = make_family_form(&FormFamilySpec::theta_phi(n, FRAC_PI_4))?;
        let poincare = family(n, FormFamily::Poincare)?;
        let d = max_norm(&(quarter.matrix() - poincare.matrix()));
        if !(d <= ctx.tol(1e-15)) {
            b.failures.push(format!("n={n}: theta_pi/4 differs from Poincare by {d:e}"));
        }
    }
    Ok(b.finish("pullback path equals theta_phi on 100 points; theta_pi/4 = Poincare".into()))
}

fn decomposition(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("decomposition", ctx.tol(1e-14));
    for n in [1, 2] {
        let half_jt = jtilde(n)? * 0.5;
        for phi in linspace(0.0, TAU, 100)? {
            let form = make_family_form(&FormFamilySpec::theta_phi(n, phi))?;
            b.le(max_norm(&(theta_phi_closed_form(n, phi)? - form.matrix())), || format!("n={n} phi={phi}"));
            let d = matricial_decomposition(&form);
            b.le(max_norm(&(d.antisymmetric - &half_jt)), || format!("n={n} phi={phi} antisymmetric"));
        }
    }
    Ok(b.finish("[A](theta_phi) = J~/2 + cos2phi/2 K1 + sin2phi/2 K2 on 100 points".into()))
}

fn rotation(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("rotation", ctx.tol(1e-13));
    for n in [1, 3] {
        for phi in linspace(0.0, TAU, 1000)? {
            let c = is_symplectic_rotation(&rotation_matrix(n, phi)?, n, f64::INFINITY)?;
            b.le(c.orthogonality_residual.max(c.symplectic_residual), || format!("n={n} phi={phi}"));
        }
    }
    Ok(b.finish("R_phi orthogonal and symplectic on 1000 points".into()))
}

fn random_symmetric(rng: &mut impl Rng, size: usize) -> Matrix {
    let x = Matrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
    (&x + x.transpose()) * 0.5
}

fn symplectic_schemes(n: usize) -> Result<Vec<Scheme>> {
    Ok(vec![
        Scheme::midpoint(n),
        Scheme::from_form(&make_family_form(&FormFamilySpec::theta_phi(n, 0.0))?, "theta_0"),
        Scheme::from_form(&make_family_form(&FormFamilySpec::theta_phi(n, FRAC_PI_2))?, "theta_pi/2"),
    ])
}

fn linear_symplecticity(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("linear_symplecticity", ctx.tol(1e-12));
    let mut rng = seeded_rng(ctx.seed ^ 9);
    for n in [1, 2] {
        let schemes = symplectic_schemes(n)?;
        for _ in 0..10 {
            let m = random_symmetric(&mut rng, 2 * n);
            for scheme in &schemes {
                for h in [1e-3, 1e-2, 1e-1, 0.5] {
                    let step = linear_step_matrix(scheme, &m, h)?;
                    b.le(symplectic_residual(&step)?, || format!("{} n={n} h={h}", scheme.label));
                }
            }
        }
    }
    // Genuine controls: explicit Euler, and per-degree scalings that differ.
    let euler = symplectic_residual(&linear_step_matrix(&Scheme::explicit_euler(1), &Matrix::identity(2, 2), 0.1)?)?;
    b.require(euler >= 1e-3, || format!("explicit Euler control residual only {euler:e}"));
    let uneven = make_family_form(&FormFamilySpec::abc(vec![0.0, 0.0], vec![0.3, 0.0], vec![0.0, 0.0]))?;
    let coupled = Matrix::from_row_slice(4, 4, &[
        1.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
    ]);
    let abc = symplectic_residual(&linear_step_matrix(&Scheme::from_form(&uneven, "abc"), &coupled, 0.1)?)?;
    b.require(abc >= 1e-3, || format!("uneven abc control residual only {abc:e}"));
    Ok(b.finish(format!("exact step matrices symplectic; controls euler {euler:.3e}, uneven abc {abc:.3e}")))
}

/// The θ_{π/3} step matrix for M = I, h = 0.1, required to miss symplecticity by 1e-3.
///
/// This check is expected to fail. P0 + Ph = κI with Hamiltonian b, so the step is the
/// mid-point family applied to H(κ·)/κ and is symplectic to rounding error.
fn theta_phi_control(_ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("theta_phi_control", 1e-3);
    let bad = Scheme::from_form(&make_family_form(&FormFamilySpec::theta_phi(1, FRAC_PI_3))?, "theta_pi/3");
    let control = symplectic_residual(&linear_step_matrix(&bad, &Matrix::identity(2, 2), 0.1)?)?;
    b.worst = control;
    b.require(control >= 1e-3, || format!("negative control residual only {control:e}"));
    Ok(b.finish(format!("theta_pi/3 step residual {control:.3e}, required at least 1e-3")))
}

fn jacobian(ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("jacobian", ctx.tol(1e-5));
    let mut rng = seeded_rng(ctx.seed ^ 13);
    let sys = BuiltinSystem::pendulum()?;
    let opts = SolverOptions::default();
    let states: Vec<Vector> = (0..10)
        .map(|_| Vector::from_row_slice(&[rng.random_range(-3.0..3.0), rng.random_range(-1.5..1.5)]))
        .collect();
    for scheme in symplectic_schemes(1)? {
        for z in &states {
            let jac = step_jacobian(&scheme, &sys, z, 0.01, 1e-6, &opts)?;
            b.le(symplectic_residual(&jac)?, || format!("{} at {:?}", scheme.label, z.as_slice()));
        }
    }
    Ok(b.finish("finite-difference step Jacobians symplectic on pendulum".into()))
}

fn energy(_ctx: &Ctx) -> Result<CheckOutcome> {
    let mut b = Bound::new("energy", 1e-8);
    let opts = SolverOptions::default();
    let z0 = Vector::from_row_slice(&[1.0, 0.0]);
    let midpoint = Scheme::midpoint(1);

    let harmonic = BuiltinSystem::harmonic(1)?;
    let t = integrate(&midpoint, &harmonic, &z0, 0.1, 100_000, &opts).map_err(|e| e.source)?;
    let harmonic_drift = energy_drift(&t, &harmonic)?.max_drift;
    b.le(harmonic_drift, || "harmonic mid-point drift".into());

    let pendulum = BuiltinSystem::pendulum()?;
    let t = integrate(&midpoint, &pendulum, &z0, 0.1, 100_000, &opts).map_err(|e| e.source)?;
    let drift = energy_drift(&t, &pendulum)?;
    let e0 = t.energies[0];
    let early = t.energies[..=1000].iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
    b.require(drift.max_drift <= 0.01, || format!("pendulum max drift {:e}", drift.max_drift));
    b.require(drift.final_drift <= 2.0 * early, || {
        format!("pendulum final drift {:e} exceeds twice the early max {early:e}", drift.final_drift)
    });

    let euler = Scheme::explicit_euler(1);
    let t = integrate(&euler, &harmonic, &z0, 0.1, 1000, &opts).map_err(|e| e.source)?;
    let euler_drift = energy_drift(&t, &harmonic)?.max_drift;
    b.require(euler_drift > 0.1, || format!("explicit Euler drift only {euler_drift:e}"));
    Ok(b.finish(format!(
        "harmonic drift {harmonic_drift:.2e}; pendulum max {:.2e}, final {:.2e}; explicit Euler {euler_drift:.2e}",
        drift.max_drift, drift.final_drift
    )))
}
