//! Constant-coefficient Liouvillian forms on the product phase space
//! `ℝ⁴ⁿ = ℝ²ⁿ × ℝ²ⁿ` and the one-step implicit integrators they generate.
//!
//! A form `θ = dZᵀ[A]Z` with `Z = (q, p, Q, P)` is stored as its `4n × 4n`
//! coefficient matrix. From it the [`derivation`] module reads off the
//! vertical and tangent coefficients of the integral Lagrangian submanifold
//! and projects them to the linear implicit map
//! `ρ(z₀, z_h) = P₀ z₀ + P_h z_h`. The generalized implicit Euler scheme
//!
//! ```text
//! z_h = z₀ + h · X_H(ρ(z₀, z_h))
//! ```
//!
//! is then executed by [`dynamics`] and checked by [`diagnostics`].
//!
//! ```
//! use liouform::derivation::{classify, Verdict};
//! use liouform::forms::{make_family_form, FormFamily, FormFamilySpec};
//!
//! let poincare = make_family_form(&FormFamilySpec::new(1, FormFamily::Poincare)).unwrap();
//! let report = classify(&poincare, 1e-12);
//! assert_eq!(report.verdict, Verdict::NullMap);
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod derivation;
pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod forms;
pub mod serde_matrix;
pub mod verification;

pub use error::{Error, Result};

/// Dense real matrix used for every structure and coefficient matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real vector (phase-space points, product-space points).
pub type Vector = nalgebra::DVector<f64>;
