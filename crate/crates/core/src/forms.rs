//! Constant-coefficient Liouvillian forms on the product phase space.
//!
//! A form `θ = dZᵀ[A]Z` with `Z = (q, p, Q, P)` is stored as its `4n × 4n`
//! matrix `A`: row `i` holds the coefficient of `dZᵢ` as a linear function of
//! `Z`. A form is Liouvillian for `ω_⊖` when its antisymmetric part is `½J̃`,
//! i.e. `A − Aᵀ = J̃`.
//!
//! Every named family is diagonal in the degree-of-freedom index, so it is
//! described by a 4×4 coefficient table per index (rows and columns ordered
//! `q, p, Q, P`) and expanded with [`per_index`].

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canonical::{jtilde, max_norm, require_square};
use crate::{Error, Matrix, Result};

/// Tolerance for the exactness test `A − Aᵀ = J̃`.
pub const EXACTNESS_TOL: f64 = 1e-12;

/// An angle in radians.
///
/// Parses plain numbers as well as `π`-multiples such as `pi/4`, `-3pi/2` or
/// `2*pi`, so that the special points of the `θ_φ` family are hit exactly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "AngleRepr", into = "f64")]
pub struct Angle(pub f64);

impl Angle {
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Radians(f64),
    Text(String),
}

impl TryFrom<AngleRepr> for Angle {
    type Error = Error;

    fn try_from(r: AngleRepr) -> Result<Angle> {
        match r {
            AngleRepr::Radians(x) => Ok(Angle(x)),
            AngleRepr::Text(s) => s.parse(),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Angle> {
        let bad = || Error::InvalidSpec(format!("cannot parse angle {s:?}"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
        let t = t.replace('π', "pi");
        let Some(pos) = t.find("pi") else {
            let x: f64 = t.parse().map_err(|_| bad())?;
            return if x.is_finite() { Ok(Angle(x)) } else { Err(bad()) };
        };
        let head = t[..pos].trim_end_matches('*');
        let tail = &t[pos + 2..];
        let coef = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| bad())?,
        };
        let den = match tail {
            "" => 1.0,
            d => d.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        let x = coef * PI / den;
        if !x.is_finite() || den == 0.0 {
            return Err(bad());
        }
        Ok(Angle(x))
    }
}

/// `(cos φ, sin φ)`, exact when `φ` is bit-equal to a multiple of `π/4`.
pub fn cos_sin(phi: f64) -> (f64, f64) {
    let k = (phi / FRAC_PI_4).round();
    if k.is_finite() && k * FRAC_PI_4 == phi {
        let h = FRAC_1_SQRT_2;
        return match (k as i64).rem_euclid(8) {
            0 => (1.0, 0.0),
            1 => (h, h),
            2 => (0.0, 1.0),
            3 => (-h, h),
            4 => (-1.0, 0.0),
            5 => (-h, -h),
            6 => (0.0, -1.0),
            _ => (h, -h),
        };
    }
    (phi.cos(), phi.sin())
}

/// Expand per-index 4×4 coefficient tables into a `4n × 4n` block matrix:
/// entry `(r, c)` of table `i` lands at `(r·n + i, c·n + i)`.
pub fn per_index(n: usize, table: impl Fn(usize) -> [[f64; 4]; 4]) -> Matrix {
    let mut a = Matrix::zeros(4 * n, 4 * n);
    for i in 0..n {
        let t = table(i);
        for (r, row) in t.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                a[(r * n + i, c * n + i)] = v;
            }
        }
    }
    a
}

/// Whether a form satisfies the exactness condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FormStatus {
    Liouvillian,
    /// Pullbacks and generator pairings may legitimately break exactness.
    NonLiouvillian { residual: f64 },
}

/// A constant-coefficient 1-form `dZᵀ[A]Z` on `ℝ⁴ⁿ` with its exactness status.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianForm {
    n: usize,
    matrix: Matrix,
    exactness_residual: f64,
}

fn check_shape(n: usize, a: &Matrix) -> Result<()> {
    if n == 0 || a.shape() != (4 * n, 4 * n) {
        return Err(Error::InvalidDimension(format!(
            "form matrix must be {0}x{0} for n = {n}, got {1}x{2}",
            4 * n,
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSpec("form matrix has non-finite entries".into()));
    }
    Ok(())
}

/// `‖A − Aᵀ − J̃‖_max`
pub fn exactness_residual(n: usize, a: &Matrix) -> Result<f64> {
    check_shape(n, a)?;
    Ok(max_norm(&(a - a.transpose() - jtilde(n)?)))
}

impl LiouvillianForm {
    /// Validated constructor: rejects matrices violating `A − Aᵀ = J̃`.
    pub fn from_matrix(n: usize, matrix: Matrix) -> Result<Self> {
        let form = Self::inspect(n, matrix)?;
        if !form.is_liouvillian() {
            return Err(Error::NotLiouvillian { residual: form.exactness_residual });
        }
        Ok(form)
    }

    /// Wraps any `4n × 4n` matrix, recording (not enforcing) exactness.
    pub fn inspect(n: usize, matrix: Matrix) -> Result<Self> {
        let exactness_residual = exactness_residual(n, &matrix)?;
        Ok(LiouvillianForm { n, matrix, exactness_residual })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn exactness_residual(&self) -> f64 {
        self.exactness_residual
    }

    pub fn is_liouvillian(&self) -> bool {
        self.exactness_residual <= EXACTNESS_TOL
    }

    pub fn status(&self) -> FormStatus {
        if self.is_liouvillian() {
            FormStatus::Liouvillian
        } else {
            FormStatus::NonLiouvillian { residual: self.exactness_residual }
        }
    }

    /// Evaluates `θ_Z(V) = Vᵀ A Z`.
    pub fn evaluate(&self, z: &crate::Vector, v: &crate::Vector) -> f64 {
        v.dot(&(&self.matrix * z))
    }
}

/// Same as [`LiouvillianForm::from_matrix`].
pub fn form_from_matrix(n: usize, a: Matrix) -> Result<LiouvillianForm> {
    LiouvillianForm::from_matrix(n, a)
}

/// The named families of forms, with their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FormFamily {
    /// `½[(p−P)dq + (Q−q)dp + (p−P)dQ + (Q−q)dP]`
    Poincare,
    /// The rotation path; `φ = 0, π/4, π/2` give the two Euler forms and Poincaré's.
    ThetaPhi { phi: Angle },
    /// `½(p dq − q dp − P dQ + Q dP)`, matrix `½J̃`.
    MidpointCanonical,
    /// `θ_{π/2} = −q dp − P dQ`
    EulerA,
    /// `θ_0 = p dq + Q dP`
    EulerB,
    /// Per-index `(αᵢ, βᵢ, γᵢ)` generalisation of `θ_φ`.
    AbcFamily { alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64> },
    /// `αᵢ = βᵢ, γᵢ = −βᵢ`: forms that all generate the mid-point rule.
    MidpointFamily { beta: Vec<f64> },
    /// Raw row-major `4n × 4n` matrix in `(q, p, Q, P)` ordering.
    CustomMatrix { matrix: Vec<Vec<f64>> },
}

/// A family plus the number of degrees of freedom per copy.
///
/// JSON layout: `{"n": 1, "family": "theta_phi", "params": {"phi": 0.785398163}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFamilySpec {
    pub n: usize,
    #[serde(flatten)]
    pub family: FormFamily,
}

impl FormFamilySpec {
    pub fn new(n: usize, family: FormFamily) -> Self {
        FormFamilySpec { n, family }
    }

    pub fn theta_phi(n: usize, phi: f64) -> Self {
        Self::new(n, FormFamily::ThetaPhi { phi: Angle(phi) })
    }

    pub fn abc(alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> Self {
        Self::new(alpha.len(), FormFamily::AbcFamily { alpha, beta, gamma })
    }

    pub fn midpoint_family(beta: Vec<f64>) -> Self {
        Self::new(beta.len(), FormFamily::MidpointFamily { beta })
    }
}

fn theta_phi_table(c: f64, s: f64) -> [[f64; 4]; 4] {
    let (cc, cs, ss) = (c * c, c * s, s * s);
    [
        [0.0, cc, 0.0, -cs],
        [-ss, 0.0, cs, 0.0],
        [0.0, cs, 0.0, -ss],
        [-cs, 0.0, cc, 0.0],
    ]
}

fn abc_table(alpha: f64, beta: f64, gamma: f64) -> [[f64; 4]; 4] {
    let plus = 0.5 + alpha;
    let minus = 0.5 - alpha;
    [
        [0.0, plus, 0.0, -gamma],
        [-minus, 0.0, beta, 0.0],
        [0.0, beta, 0.0, -minus],
        [-gamma, 0.0, plus, 0.0],
    ]
}

fn require_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidSpec(format!(
            "parameter {name} must have length n = {n}, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSpec(format!("parameter {name} has non-finite entries")));
    }
    Ok(())
}

/// Coefficient matrix of a named family member.
pub fn make_family_form(spec: &FormFamilySpec) -> Result<LiouvillianForm> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidDimension("degrees of freedom must be at least 1".into()));
    }
    let a = match &spec.family {
        FormFamily::Poincare => per_index(n, |_| {
            [
                [0.0, 0.5, 0.0, -0.5],
                [-0.5, 0.0, 0.5, 0.0],
                [0.0, 0.5, 0.0, -0.5],
                [-0.5, 0.0, 0.5, 0.0],
            ]
        }),
        FormFamily::ThetaPhi { phi } => {
            if !phi.0.is_finite() {
                return Err(Error::InvalidSpec("phi must be finite".into()));
            }
            let (c, s) = cos_sin(phi.0);
            per_index(n, |_| theta_phi_table(c, s))
        }
        FormFamily::MidpointCanonical => jtilde(n)? * 0.5,
        FormFamily::EulerA => per_index(n, |_| {
            [
                [0.0, 0.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [0.0, 0.0, 0.0, 0.0],
            ]
        }),
        FormFamily::EulerB => per_index(n, |_| {
            [
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ]
        }),
        FormFamily::AbcFamily { alpha, beta, gamma } => {
            require_len("alpha", alpha, n)?;
            require_len("beta", beta, n)?;
            require_len("gamma", gamma, n)?;
            per_index(n, |i| abc_table(alpha[i], beta[i], gamma[i]))
        }
        FormFamily::MidpointFamily { beta } => {
            require_len("beta", beta, n)?;
            per_index(n, |i| abc_table(beta[i], beta[i], -beta[i]))
        }
        FormFamily::CustomMatrix { matrix } => {
            let a = crate::serde_matrix::from_rows(matrix)
                .ok_or_else(|| Error::InvalidSpec("custom matrix rows are ragged".into()))?;
            return LiouvillianForm::from_matrix(n, a);
        }
    };
    LiouvillianForm::from_matrix(n, a)
}

/// The rotation `R_φ` of the product space (orthogonal and `J̃`-symplectic).
pub fn rotation_matrix(n: usize, phi: f64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("degrees of freedom must be at least 1".into()));
    }
    let (c, s) = cos_sin(phi);
    Ok(per_index(n, |_| {
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [0.0, -s, 0.0, -c],
            [-s, 0.0, c, 0.0],
        ]
    }))
}

/// `E₁`: maps `(q, p, Q, P)` to `(x, X, y, Y) = (q, −Q, p, P)`, pulling
/// `y dx + Y dX` back to `p dq − P dQ`.
pub fn e1_matrix(n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidDimension("degrees of freedom must be at least 1".into()));
    }
    Ok(per_index(n, |_| {
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }))
}

/// `Ψ_φ = E₁ · R_φ`.
pub fn psi_matrix(n: usize, phi: f64) -> Result<Matrix> {
    Ok(e1_matrix(n)? * rotation_matrix(n, phi)?)
}

/// Tautological form `y dx + Y dX` on `T*(Q₁ × Q₂)`, coordinates `(x, X, y, Y)`.
///
/// Its exactness is with respect to the cotangent structure, not `J̃`, so it
/// comes back flagged as non-Liouvillian on the product space.
pub fn tautological_form(n: usize) -> Result<LiouvillianForm> {
    if n == 0 {
        return Err(Error::InvalidDimension("degrees of freedom must be at least 1".into()));
    }
    let a = per_index(n, |_| {
        [
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ]
    });
    LiouvillianForm::inspect(n, a)
}

/// Pullback under the linear map `Z ↦ TZ`: matrix `TᵀAT`.
///
/// The result keeps its exactness status instead of failing, since pulling back
/// by a non-symplectic `T` breaks exactness.
pub fn pullback_form(t: &Matrix, base: &LiouvillianForm) -> Result<LiouvillianForm> {
    let n = base.n();
    if t.shape() != (4 * n, 4 * n) {
        return Err(Error::InvalidDimension(format!(
            "transform must be {0}x{0}, got {1}x{2}",
            4 * n,
            t.nrows(),
            t.ncols()
        )));
    }
    let det = t.clone().lu().determinant();
    if !(det.abs() > EXACTNESS_TOL) {
        return Err(Error::InvalidTransform(format!("transform is singular (det = {det:e})")));
    }
    LiouvillianForm::inspect(n, t.transpose() * base.matrix() * t)
}

/// Form generated by a stacked pairing matrix: top `2n` rows give the
/// coefficient covector `W_up Z`, bottom `2n` rows the differentiated variable
/// `W_low Z`, and `θ = ⟨W_up Z, d(W_low Z)⟩`, i.e. `A = W_lowᵀ W_up`.
pub fn form_from_generator(t: &Matrix) -> Result<LiouvillianForm> {
    let size = require_square(t, "generator")?;
    if !size.is_multiple_of(4) {
        return Err(Error::InvalidDimension(format!("generator size must be 4n, got {size}")));
    }
    let half = size / 2;
    let upper = t.rows(0, half);
    let lower = t.rows(half, half);
    LiouvillianForm::inspect(size / 4, lower.transpose() * upper)
}

/// Split `A = ½(A − Aᵀ) + ½(A + Aᵀ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub antisymmetric: Matrix,
    pub symmetric: Matrix,
}

pub fn matricial_decomposition(form: &LiouvillianForm) -> Decomposition {
    let a = form.matrix();
    let at = a.transpose();
    Decomposition { antisymmetric: (a - &at) * 0.5, symmetric: (a + at) * 0.5 }
}

/// The two symmetric blocks spanning the symmetric part of `θ_φ`:
/// `K₁` pairs `q↔p` and `Q↔P`, `K₂ = [[0, −J₀], [J₀, 0]]`.
pub fn theta_phi_symmetric_basis(n: usize) -> Result<(Matrix, Matrix)> {
    if n == 0 {
        return Err(Error::InvalidDimension("degrees of freedom must be at least 1".into()));
    }
    let k1 = per_index(n, |_| {
        [
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]
    });
    let k2 = per_index(n, |_| {
        [
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0, 0.0],
        ]
    });
    Ok((k1, k2))
}

/// `½J̃ + (cos2φ/2)K₁ + (sin2φ/2)K₂`, the closed form of `[A](θ_φ)`.
pub fn theta_phi_closed_form(n: usize, phi: f64) -> Result<Matrix> {
    let (k1, k2) = theta_phi_symmetric_basis(n)?;
    Ok(jtilde(n)? * 0.5 + k1 * ((2.0 * phi).cos() / 2.0) + k2 * ((2.0 * phi).sin() / 2.0))
}
