//! Self-adjoint boundary conditions, boundary data maps, Krein resolvent
//! formulas, trace formulas and spectral shift functions for regular
//! Sturm-Liouville operators `r^{-1}(-(p u')' + q u)` on a finite interval.

// Negated comparisons such as `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdm;
pub mod boundary;
pub mod error;
pub mod linalg;
pub mod problem;
pub mod propagate;
pub mod sample;
pub mod scalar;
pub mod shift;
pub mod spectra;
pub mod verify;
pub mod vonneumann;

pub use error::{Error, ErrorClass, Result};
pub use linalg::Mat2;
pub use problem::{build_problem, preset, Coefficient, Problem};
pub use scalar::Scalar;

/// Working precision of problem-level computations.
pub type Real = f64;
/// Complex scalar at working precision.
pub type C = num_complex::Complex<Real>;
/// 2x2 complex matrix at working precision.
pub type CMat2 = Mat2<Real>;
/// Complex 2-vector at working precision.
pub type CVec2 = linalg::Vec2<Real>;
