//! From a form to its implicit map.
//!
//! The pipeline is closed-form for constant coefficients:
//!
//! 1. vertical coefficients: the hat-functions `(q̂, p̂, Q̂, P̂)(Z) = A Z`;
//! 2. tangent coefficients: `J̃ᵀ A`, i.e. `(q̂, p̂, Q̂, P̂) ↦ (−p̂, q̂, P̂, −Q̂)`;
//! 3. projection to one copy: `ρ(Z) = [I₂ₙ | I₂ₙ] J̃ᵀ A Z`, split into the
//!    `z₀` and `z_h` column blocks `P₀` and `P_h`;
//! 4. classification: the scheme is symplectic when `P₀ + P_h = I` and
//!    `b = ½(P_h − P₀)` is Hamiltonian.

use serde::Serialize;

use crate::canonical::{is_hamiltonian_matrix, jtilde, max_norm};
use crate::forms::LiouvillianForm;
use crate::{Error, Matrix, Result, Vector};

/// `ρ(z₀, z_h) = P₀ z₀ + P_h z_h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImplicitMap {
    pub n: usize,
    #[serde(rename = "P0", with = "crate::serde_matrix")]
    pub p0: Matrix,
    #[serde(rename = "Ph", with = "crate::serde_matrix")]
    pub ph: Matrix,
}

impl ImplicitMap {
    pub fn new(p0: Matrix, ph: Matrix) -> Result<Self> {
        let size = p0.nrows();
        if size == 0 || !size.is_multiple_of(2) || p0.shape() != (size, size) || ph.shape() != (size, size) {
            return Err(Error::InvalidDimension(format!(
                "implicit map blocks must be equal 2n x 2n matrices, got {:?} and {:?}",
                p0.shape(),
                ph.shape()
            )));
        }
        if p0.iter().chain(ph.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("implicit map has non-finite entries".into()));
        }
        Ok(ImplicitMap { n: size / 2, p0, ph })
    }

    /// `ρ = ½(z₀ + z_h) + b (z_h − z₀)`; `b = 0` is the mid-point rule.
    pub fn midpoint(n: usize) -> Self {
        let half = Matrix::identity(2 * n, 2 * n) * 0.5;
        ImplicitMap { n, p0: half.clone(), ph: half }
    }

    /// `ρ = z₀`: the explicit Euler method (not symplectic).
    pub fn explicit_euler(n: usize) -> Self {
        ImplicitMap { n, p0: Matrix::identity(2 * n, 2 * n), ph: Matrix::zeros(2 * n, 2 * n) }
    }

    pub fn apply(&self, z0: &Vector, zh: &Vector) -> Vector {
        &self.p0 * z0 + &self.ph * zh
    }

    /// `b = ½(P_h − P₀)`
    pub fn b(&self) -> Matrix {
        (&self.ph - &self.p0) * 0.5
    }

    pub fn classify(&self, tol: f64) -> SymplecticityReport {
        let size = 2 * self.n;
        let identity_residual = max_norm(&(&self.p0 + &self.ph - Matrix::identity(size, size)));
        let b = self.b();
        let hamiltonian_residual = is_hamiltonian_matrix(&b, tol)
            .expect("b has the even square shape of the map")
            .residual;
        let rho_is_zero = max_norm(&self.p0) <= tol && max_norm(&self.ph) <= tol;
        let verdict = if rho_is_zero {
            Verdict::NullMap
        } else if identity_residual <= tol && hamiltonian_residual <= tol {
            Verdict::Symplectic
        } else {
            Verdict::NonSymplectic
        };
        SymplecticityReport {
            n: self.n,
            p0: self.p0.clone(),
            ph: self.ph.clone(),
            identity_residual,
            b,
            hamiltonian_residual,
            verdict,
            rho_is_zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Symplectic,
    NonSymplectic,
    /// `ρ ≡ 0`: the scheme degenerates to `z_h = z₀ + h X_H(0)`.
    NullMap,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Symplectic => "symplectic",
            Verdict::NonSymplectic => "non_symplectic",
            Verdict::NullMap => "null_map",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticityReport {
    pub n: usize,
    #[serde(rename = "P0", with = "crate::serde_matrix")]
    pub p0: Matrix,
    #[serde(rename = "Ph", with = "crate::serde_matrix")]
    pub ph: Matrix,
    /// `‖P₀ + P_h − I‖_max`
    pub identity_residual: f64,
    #[serde(with = "crate::serde_matrix")]
    pub b: Matrix,
    /// `‖bᵀJ₀ + J₀b‖_max`
    pub hamiltonian_residual: f64,
    pub verdict: Verdict,
    pub rho_is_zero: bool,
}

/// Rows are the `dZᵢ` coefficients, so the hat-functions are `A Z`.
pub fn vertical_coefficients(form: &LiouvillianForm) -> Matrix {
    form.matrix().clone()
}

/// `J̃ᵀ A`
pub fn tangent_coefficients(form: &LiouvillianForm) -> Matrix {
    let jt = jtilde(form.n()).expect("form has n >= 1");
    jt.transpose() * form.matrix()
}

pub fn implicit_map(form: &LiouvillianForm) -> ImplicitMap {
    let n = form.n();
    let t = tangent_coefficients(form);
    let m = 2 * n;
    // T π₁ + T π₂: add the two halves of the tangent rows.
    let rho = t.rows(0, m) + t.rows(m, m);
    ImplicitMap { n, p0: rho.columns(0, m).into_owned(), ph: rho.columns(m, m).into_owned() }
}

pub fn classify(form: &LiouvillianForm, tol: f64) -> SymplecticityReport {
    implicit_map(form).classify(tol)
}

/// Orthonormal basis of `ker A`; singular values `≤ tol · σ_max` count as zero.
pub fn kernel_basis(form: &LiouvillianForm, tol: f64) -> Vec<Vector> {
    let a = form.matrix();
    let size = a.nrows();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| sigma_max == 0.0 || **s <= tol * sigma_max)
        .map(|(k, _)| Vector::from_iterator(size, v_t.row(k).iter().copied()))
        .collect()
}

/// Orthogonal projector onto the span of `basis`; compares kernels independently of basis choice.
pub fn span_projector(basis: &[Vector], size: usize) -> Matrix {
    basis.iter().fold(Matrix::zeros(size, size), |acc, v| acc + v * v.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{make_family_form, FormFamily, FormFamilySpec};
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn family(n: usize, f: FormFamily) -> LiouvillianForm {
        make_family_form(&FormFamilySpec::new(n, f)).unwrap()
    }

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(v))
    }

    #[test]
    fn poincare_vertical_rows() {
        let v = vertical_coefficients(&family(1, FormFamily::Poincare));
        // q̂ = ½(p − P), p̂ = ½(Q − q), Q̂ = ½(p − P), P̂ = ½(Q − q)
        let z = Vector::from_row_slice(&[1.0, 2.0, 3.0, 5.0]);
        let hats = &v * &z;
        assert_eq!(hats.as_slice(), &[-1.5, 1.0, -1.5, 1.0]);
    }

    #[test]
    fn theta_zero_vertical_rows() {
        let v = vertical_coefficients(&make_family_form(&FormFamilySpec::theta_phi(1, 0.0)).unwrap());
        let z = Vector::from_row_slice(&[1.0, 2.0, 3.0, 5.0]);
        // q̂ = p, p̂ = 0, Q̂ = 0, P̂ = Q
        assert_eq!((&v * &z).as_slice(), &[2.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn tangent_examples() {
        let t = tangent_coefficients(&family(1, FormFamily::MidpointCanonical));
        assert_eq!(t, Matrix::identity(4, 4) * 0.5);

        let t = tangent_coefficients(&family(1, FormFamily::Poincare));
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.0, -0.5, 0.0, //
                0.0, 0.5, 0.0, -0.5, //
                -0.5, 0.0, 0.5, 0.0, //
                0.0, -0.5, 0.0, 0.5,
            ],
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn tangent_is_signed_row_permutation() {
        let f = make_family_form(&FormFamilySpec::abc(vec![0.3, -0.1], vec![0.2, 0.7], vec![-0.4, 0.5]))
            .unwrap();
        let v = vertical_coefficients(&f);
        let t = tangent_coefficients(&f);
        let n = 2;
        for i in 0..n {
            let (q, p, bq, bp) = (i, n + i, 2 * n + i, 3 * n + i);
            assert_eq!(t.row(q), -v.row(p));
            assert_eq!(t.row(p), v.row(q));
            assert_eq!(t.row(bq), v.row(bp));
            assert_eq!(t.row(bp), -v.row(bq));
        }
    }

    #[test]
    fn poincare_is_null_map() {
        let r = classify(&family(1, FormFamily::Poincare), 1e-12);
        assert_eq!(r.verdict, Verdict::NullMap);
        assert!(r.rho_is_zero);
        assert_eq!(r.p0, Matrix::zeros(2, 2));
        assert_eq!(r.ph, Matrix::zeros(2, 2));
    }

    #[test]
    fn theta_zero_is_symplectic_euler() {
        let r = classify(&make_family_form(&FormFamilySpec::theta_phi(1, 0.0)).unwrap(), 1e-12);
        assert_eq!(r.verdict, Verdict::Symplectic);
        assert_eq!(r.b, diag(&[0.5, -0.5]));
    }

    #[test]
    fn theta_pi_third_is_not_symplectic() {
        let r = classify(&make_family_form(&FormFamilySpec::theta_phi(1, FRAC_PI_3)).unwrap(), 1e-12);
        assert_eq!(r.verdict, Verdict::NonSymplectic);
        assert!((r.identity_residual - (2.0 * FRAC_PI_3).sin()).abs() < 1e-15);
    }

    #[test]
    fn abc_on_plane_is_symplectic() {
        let f = make_family_form(&FormFamilySpec::abc(vec![0.2], vec![0.3], vec![-0.3])).unwrap();
        assert_eq!(classify(&f, 1e-12).verdict, Verdict::Symplectic);
    }

    #[test]
    fn explicit_euler_is_not_symplectic() {
        let r = ImplicitMap::explicit_euler(1).classify(1e-12);
        assert_eq!(r.verdict, Verdict::NonSymplectic);
        assert_eq!(r.identity_residual, 0.0);
        assert_eq!(r.hamiltonian_residual, 1.0);
    }

    #[test]
    fn kernels() {
        let k = kernel_basis(&family(1, FormFamily::Poincare), 1e-12);
        assert_eq!(k.len(), 2);
        let s = 0.5_f64.sqrt();
        let expected = [
            Vector::from_row_slice(&[s, 0.0, s, 0.0]),
            Vector::from_row_slice(&[0.0, s, 0.0, s]),
        ];
        let diff = span_projector(&k, 4) - span_projector(&expected, 4);
        assert!(crate::canonical::max_norm(&diff) < 1e-14);

        assert!(kernel_basis(&family(1, FormFamily::MidpointCanonical), 1e-12).is_empty());
    }

    fn m4(rows: [[f64; 4]; 4]) -> Matrix {
        Matrix::from_fn(4, 4, |i, j| rows[i][j])
    }

    #[test]
    fn generator_kernels() {
        use crate::forms::form_from_generator;
        let h = 0.5;
        let kang = m4([[0.0, -1.0, 0.0, 1.0], [1.0, 0.0, -1.0, 0.0], [h, 0.0, h, 0.0], [0.0, h, 0.0, h]]);
        let r = 0.5_f64.sqrt();
        let diagonal = [Vector::from_row_slice(&[r, 0.0, r, 0.0]), Vector::from_row_slice(&[0.0, r, 0.0, r])];
        let k = kernel_basis(&form_from_generator(&kang).unwrap(), 1e-12);
        let diff = span_projector(&k, 4) - span_projector(&diagonal, 4);
        assert!(crate::canonical::max_norm(&diff) < 1e-14);

        let a1 = m4([[0.0, h, 0.0, h], [h, 0.0, h, 0.0], [-1.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 1.0]]);
        let a4 = m4([[r, 0.0, r, 0.0], [0.0, r, 0.0, r], [0.0, r, 0.0, -r], [-r, 0.0, r, 0.0]]);
        let k1 = kernel_basis(&form_from_generator(&a1).unwrap(), 1e-12);
        let k4 = kernel_basis(&form_from_generator(&a4).unwrap(), 1e-12);
        assert_eq!(k1.len(), 2);
        let diff = span_projector(&k1, 4) - span_projector(&k4, 4);
        assert!(crate::canonical::max_norm(&diff) < 1e-14);
    }

    #[test]
    fn report_json_keys() {
        let r = classify(&make_family_form(&FormFamilySpec::theta_phi(1, FRAC_PI_4)).unwrap(), 1e-12);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["n", "P0", "Ph", "identity_residual", "b", "hamiltonian_residual", "verdict"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["verdict"], "null_map");
        assert_eq!(v["P0"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn map_shape_checked() {
        assert!(ImplicitMap::new(Matrix::zeros(2, 2), Matrix::zeros(4, 4)).is_err());
        assert!(ImplicitMap::new(Matrix::zeros(3, 3), Matrix::zeros(3, 3)).is_err());
    }
}
