//! Parameter sweeps over the form families and numerical checks of the
//! schemes they generate.
//!
//! Sweeps are embarrassingly parallel and run on the rayon global pool; output
//! order always follows the input order.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::{j0, max_norm};
use crate::derivation::{classify, SymplecticityReport, Verdict};
use crate::dynamics::{fmt17, step, Hamiltonian, Scheme, SolverOptions, Trajectory};
use crate::forms::{make_family_form, FormFamilySpec};
use crate::{Error, Matrix, Result, Vector};

/// Name of the generator used for every sampled sweep.
pub const RNG_NAME: &str = "chacha8";

/// Seeded generator for reproducible samples.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    /// `[φ]` for the rotation path, `[α.., β.., γ..]` for the plane family.
    pub parameter_values: Vec<f64>,
    pub identity_residual: f64,
    pub hamiltonian_residual: f64,
    pub verdict: Verdict,
    #[serde(rename = "b_entries", with = "crate::serde_matrix")]
    pub b: Matrix,
}

impl SweepRecord {
    fn from_report(parameter_values: Vec<f64>, r: SymplecticityReport) -> Self {
        SweepRecord {
            parameter_values,
            identity_residual: r.identity_residual,
            hamiltonian_residual: r.hamiltonian_residual,
            verdict: r.verdict,
            b: r.b,
        }
    }
}

/// `points` evenly spaced values from `from` to `to`, both ends included exactly.
pub fn linspace(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidSpec("grid needs finite bounds and at least one point".into()));
    }
    if points == 1 {
        if from != to {
            return Err(Error::InvalidSpec("a single-point grid needs from == to".into()));
        }
        return Ok(vec![from]);
    }
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k + 1 == points { to } else { from + (to - from) * (k as f64 / last) })
        .collect())
}

/// Roots of `sin 2φ` (multiples of `π/2`) inside `[from, to]`.
pub fn theta_phi_roots(from: f64, to: f64) -> Vec<f64> {
    let lo = (from / FRAC_PI_2).ceil() as i64;
    let hi = (to / FRAC_PI_2).floor() as i64;
    (lo..=hi).map(|k| k as f64 * FRAC_PI_2).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaPhiSweep {
    pub grid: Vec<SweepRecord>,
    /// `φ ∈ {0, π/4, π/2}`, always evaluated.
    pub exact_points: Vec<SweepRecord>,
}

fn classify_theta_phi(n: usize, phi: f64, tol: f64) -> Result<SweepRecord> {
    let form = make_family_form(&FormFamilySpec::theta_phi(n, phi))?;
    Ok(SweepRecord::from_report(vec![phi], classify(&form, tol)))
}

pub fn sweep_theta_phi(n: usize, grid: &[f64], tol: f64) -> Result<ThetaPhiSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidSpec("empty phi grid".into()));
    }
    let grid = grid.par_iter().map(|&phi| classify_theta_phi(n, phi, tol)).collect::<Result<Vec<_>>>()?;
    let exact_points = [0.0, std::f64::consts::FRAC_PI_4, FRAC_PI_2]
        .iter()
        .map(|&phi| classify_theta_phi(n, phi, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaPhiSweep { grid, exact_points })
}

/// One point of the `(α, β, γ)` parameter space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbcSample {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl AbcSample {
    /// `maxᵢ |βᵢ + γᵢ|`
    pub fn plane_distance(&self) -> f64 {
        self.beta.iter().zip(&self.gamma).fold(0.0_f64, |acc, (b, g)| acc.max((b + g).abs()))
    }

    /// Same sample with `γ = −β`.
    pub fn projected_to_plane(&self) -> Self {
        AbcSample { alpha: self.alpha.clone(), beta: self.beta.clone(), gamma: self.beta.iter().map(|b| -b).collect() }
    }
}

/// `count` samples uniform in `[−1, 1]³ⁿ`; with `plane_every = k > 0` every
/// `k`-th sample is moved onto the plane `γ = −β`.
pub fn random_abc_samples(n: usize, count: usize, seed: u64, plane_every: usize) -> Vec<AbcSample> {
    let mut rng = seeded_rng(seed);
    let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect::<Vec<f64>>();
    (0..count)
        .map(|k| {
            let s = AbcSample { alpha: draw(&mut rng), beta: draw(&mut rng), gamma: draw(&mut rng) };
            if plane_every > 0 && k % plane_every == 0 {
                s.projected_to_plane()
            } else {
                s
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbcRecord {
    pub record: SweepRecord,
    /// `maxᵢ |βᵢ + γᵢ| ≤ tol`
    pub predicate: bool,
    pub agrees: bool,
}

pub fn classify_abc_plane(n: usize, samples: &[AbcSample], tol: f64) -> Result<Vec<AbcRecord>> {
    if samples.is_empty() {
        return Err(Error::InvalidSpec("no samples".into()));
    }
    samples
        .par_iter()
        .map(|s| {
            let spec = FormFamilySpec::new(
                n,
                crate::forms::FormFamily::AbcFamily {
                    alpha: s.alpha.clone(),
                    beta: s.beta.clone(),
                    gamma: s.gamma.clone(),
                },
            );
            let report = classify(&make_family_form(&spec)?, tol);
            let predicate = s.plane_distance() <= tol;
            let agrees = predicate == (report.verdict == Verdict::Symplectic);
            let params = s.alpha.iter().chain(&s.beta).chain(&s.gamma).copied().collect();
            Ok(AbcRecord { record: SweepRecord::from_report(params, report), predicate, agrees })
        })
        .collect()
}

/// Central-difference Jacobian of the one-step map `z₀ ↦ z_h` at `z`.
pub fn step_jacobian<H: Hamiltonian + ?Sized>(
    scheme: &Scheme,
    system: &H,
    z: &Vector,
    h: f64,
    fd_epsilon: f64,
    opts: &SolverOptions,
) -> Result<Matrix> {
    if !(fd_epsilon > 0.0) {
        return Err(Error::InvalidSpec("finite-difference epsilon must be positive".into()));
    }
    let size = z.len();
    let mut jac = Matrix::zeros(size, size);
    for j in 0..size {
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[j] += fd_epsilon;
        minus[j] -= fd_epsilon;
        let fwd = step(scheme, system, &plus, h, opts)?.state;
        let bwd = step(scheme, system, &minus, h, opts)?.state;
        jac.set_column(j, &((fwd - bwd) / (2.0 * fd_epsilon)));
    }
    Ok(jac)
}

/// `‖MᵀJ₀M − J₀‖_max`
pub fn symplectic_residual(m: &Matrix) -> Result<f64> {
    let size = m.nrows();
    if size == 0 || !size.is_multiple_of(2) || m.ncols() != size {
        return Err(Error::InvalidDimension(format!("expected an even square matrix, got {:?}", m.shape())));
    }
    let j = j0(size / 2)?;
    Ok(max_norm(&(m.transpose() * &j * m - j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyDrift {
    pub max_drift: f64,
    pub final_drift: f64,
}

/// Max and final `|H(z_k) − H(z₀)|`, re-evaluated from the states.
pub fn energy_drift<H: Hamiltonian + ?Sized>(traj: &Trajectory, system: &H) -> Result<EnergyDrift> {
    let first = traj.states.first().ok_or_else(|| Error::InvalidSpec("empty trajectory".into()))?;
    let e0 = system.energy(first)?;
    let mut max_drift = 0.0_f64;
    let mut final_drift = 0.0;
    for z in &traj.states {
        final_drift = (system.energy(z)? - e0).abs();
        max_drift = max_drift.max(final_drift);
    }
    Ok(EnergyDrift { max_drift, final_drift })
}

/// `phi,identity_residual,hamiltonian_residual,verdict`
pub fn write_theta_phi_csv<W: Write>(records: &[SweepRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "phi,identity_residual,hamiltonian_residual,verdict")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            fmt17(r.parameter_values[0]),
            fmt17(r.identity_residual),
            fmt17(r.hamiltonian_residual),
            r.verdict
        )?;
    }
    Ok(())
}

/// `alpha1..,beta1..,gamma1..,identity_residual,hamiltonian_residual,predicate,verdict`,
/// preceded by a `# seed=..` comment line when a seed is given.
pub fn write_abc_csv<W: Write>(n: usize, records: &[AbcRecord], seed: Option<u64>, mut out: W) -> io::Result<()> {
    if let Some(seed) = seed {
        writeln!(out, "# seed={seed} rng={RNG_NAME}")?;
    }
    let mut header: Vec<String> = Vec::new();
    for name in ["alpha", "beta", "gamma"] {
        header.extend((1..=n).map(|i| format!("{name}{i}")));
    }
    header.extend(["identity_residual", "hamiltonian_residual", "predicate", "verdict"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut cols: Vec<String> = r.record.parameter_values.iter().map(|x| fmt17(*x)).collect();
        cols.push(fmt17(r.record.identity_residual));
        cols.push(fmt17(r.record.hamiltonian_residual));
        cols.push(if r.predicate { "symplectic" } else { "non_symplectic" }.into());
        cols.push(r.record.verdict.to_string());
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}
