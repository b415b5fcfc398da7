//! Canonical symplectic linear algebra on `ℝ²ⁿ` and on the product space `ℝ⁴ⁿ`.
//!
//! All residuals use the max-absolute-entry norm, see [`max_norm`].

use crate::{Error, Matrix, Result};

/// Default tolerance for algebraic identities between O(1) matrices.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest absolute entry, `‖M‖_max`.
pub fn max_norm(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Outcome of a matrix predicate together with the residual it was decided on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixCheck {
    pub holds: bool,
    pub residual: f64,
}

impl MatrixCheck {
    fn at(residual: f64, tol: f64) -> Self {
        MatrixCheck { holds: residual <= tol, residual }
    }
}

/// Outcome of [`is_symplectic_rotation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationCheck {
    pub holds: bool,
    /// `‖RᵀR − I‖_max`
    pub orthogonality_residual: f64,
    /// `‖RᵀJ̃R − J̃‖_max`
    pub symplectic_residual: f64,
}

fn require_dof(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension("degrees of freedom must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn require_square(m: &Matrix, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidDimension(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn require_even_square(m: &Matrix, what: &str) -> Result<usize> {
    let size = require_square(m, what)?;
    if !size.is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!("{what} must have even size, got {size}")));
    }
    Ok(size / 2)
}

/// The canonical structure `J₀ = [[0, I], [−I, 0]]` of size `2n`.
pub fn j0(n: usize) -> Result<Matrix> {
    require_dof(n)?;
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    Ok(j)
}

/// The product structure `J̃ = diag(J₀, −J₀)` of size `4n`, for `Z = (q, p, Q, P)`.
pub fn jtilde(n: usize) -> Result<Matrix> {
    let j = j0(n)?;
    let mut jt = Matrix::zeros(4 * n, 4 * n);
    jt.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&j);
    jt.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&(-j));
    Ok(jt)
}

/// `B` is Hamiltonian iff `BᵀJ₀ + J₀B = 0` (equivalently `J₀B` symmetric).
pub fn is_hamiltonian_matrix(b: &Matrix, tol: f64) -> Result<MatrixCheck> {
    let n = require_even_square(b, "Hamiltonian candidate")?;
    let j = j0(n)?;
    let r = b.transpose() * &j + &j * b;
    Ok(MatrixCheck::at(max_norm(&r), tol))
}

/// `M` preserves the structure `J` iff `MᵀJM = J`.
pub fn is_symplectic_matrix(m: &Matrix, j: &Matrix, tol: f64) -> Result<MatrixCheck> {
    let size = require_square(m, "symplectic candidate")?;
    if j.shape() != m.shape() || !size.is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!(
            "matrix {:?} and structure {:?} must share one even size",
            m.shape(),
            j.shape()
        )));
    }
    let r = m.transpose() * j * m - j;
    Ok(MatrixCheck::at(max_norm(&r), tol))
}

/// Orthogonal and `J̃`-symplectic: both residuals must be within `tol`.
pub fn is_symplectic_rotation(r: &Matrix, n: usize, tol: f64) -> Result<RotationCheck> {
    require_dof(n)?;
    if r.shape() != (4 * n, 4 * n) {
        return Err(Error::InvalidDimension(format!(
            "rotation must be {0}x{0}, got {1}x{2}",
            4 * n,
            r.nrows(),
            r.ncols()
        )));
    }
    let jt = jtilde(n)?;
    let rt = r.transpose();
    let orthogonality_residual = max_norm(&(&rt * r - Matrix::identity(4 * n, 4 * n)));
    let symplectic_residual = max_norm(&(&rt * &jt * r - &jt));
    Ok(RotationCheck {
        holds: orthogonality_residual <= tol && symplectic_residual <= tol,
        orthogonality_residual,
        symplectic_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_small() {
        let j = j0(1).unwrap();
        assert_eq!(j, Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        assert_eq!(&j * &j, -Matrix::identity(2, 2));
    }

    #[test]
    fn j0_and_jtilde_structure() {
        for n in 1..=8 {
            let j = j0(n).unwrap();
            assert_eq!(j.transpose(), -&j);
            assert_eq!(&j * &j, -Matrix::identity(2 * n, 2 * n));
            assert_eq!(j.transpose() * &j, Matrix::identity(2 * n, 2 * n));

            let jt = jtilde(n).unwrap();
            assert_eq!(jt.transpose(), -&jt);
            assert_eq!(&jt * &jt, -Matrix::identity(4 * n, 4 * n));
        }
    }

    #[test]
    fn jtilde_blocks() {
        let jt = jtilde(1).unwrap();
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        assert_eq!(jt, expected);
    }

    #[test]
    fn zero_dof_rejected() {
        assert!(matches!(j0(0), Err(Error::InvalidDimension(_))));
        assert!(matches!(jtilde(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn hamiltonian_matrix_examples() {
        let b = Matrix::from_diagonal(&crate::Vector::from_vec(vec![0.5, -0.5]));
        let c = is_hamiltonian_matrix(&b, DEFAULT_TOL).unwrap();
        assert!(c.holds);
        assert_eq!(c.residual, 0.0);

        assert!(is_hamiltonian_matrix(&Matrix::zeros(4, 4), DEFAULT_TOL).unwrap().holds);

        // BᵀJ₀ + J₀B = 2J₀ for B = I
        let c = is_hamiltonian_matrix(&Matrix::identity(2, 2), DEFAULT_TOL).unwrap();
        assert!(!c.holds);
        assert_eq!(c.residual, 2.0);

        assert!(matches!(
            is_hamiltonian_matrix(&Matrix::zeros(3, 3), 0.0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn symplectic_matrix_examples() {
        let j = j0(1).unwrap();
        let c = is_symplectic_matrix(&Matrix::identity(2, 2), &j, 0.0).unwrap();
        assert!(c.holds && c.residual == 0.0);
        assert!(is_symplectic_matrix(&j, &j, 0.0).unwrap().holds);

        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let c = is_symplectic_matrix(&m, &j, DEFAULT_TOL).unwrap();
        assert!(!c.holds);
        assert_eq!(c.residual, 1.0);

        assert!(is_symplectic_matrix(&Matrix::identity(4, 4), &j, 0.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        assert!(is_symplectic_rotation(&Matrix::identity(4, 4), 1, 0.0).unwrap().holds);
        let mut r = Matrix::identity(4, 4);
        r[(0, 0)] = 2.0;
        let c = is_symplectic_rotation(&r, 1, DEFAULT_TOL).unwrap();
        assert!(!c.holds);
        assert_eq!(c.orthogonality_residual, 3.0);
        assert!(is_symplectic_rotation(&Matrix::identity(4, 4), 2, 0.0).is_err());
    }
}
