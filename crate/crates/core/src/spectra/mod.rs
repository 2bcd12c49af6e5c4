//! Eigenvalues, Green's functions, Krein resolvent formulas and the
//! Krein-von Neumann extension.

pub mod green;
pub mod krein;
pub mod kvn;
mod scan;

use crate::bdm::trace_matrix;
use crate::boundary::ABPair;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::propagate::{transfer, BoundaryFrame, Transfer};
use crate::C;

pub use scan::{eigenvalues, eigenvalues_with, Eigenvalue, ScanOptions, Spectrum};

/// `det [gamma(phi) gamma(psi)]`, which vanishes exactly on the spectrum.
pub fn char_function(problem: &Problem, bc: &ABPair, z: C, tol: f64) -> Result<C> {
    let t = transfer(problem, z, tol)?;
    Ok(trace_matrix(bc, &t).det())
}

/// The characteristic function divided by `(|A| + |B| |T|)^2`, a positive
/// scale that makes values comparable across `z`.
pub fn normalized_char(bc: &ABPair, t: &Transfer) -> (C, f64) {
    let m = trace_matrix(bc, t);
    let s = bc.a().frobenius() + bc.b().frobenius() * t.m.frobenius();
    (m.det() / (s * s), s)
}

/// A lower bound for the spectrum of the extension, from the quadratic form.
///
/// With `U` the unitary of the condition, the boundary term is bounded by
/// `theta (|u(a)|^2 + |u(b)|^2)`, `theta = max |(1 - mu)/(1 + mu)|` over the
/// eigenvalues `mu != -1` of `U`, and the endpoint values by a Sobolev estimate.
pub fn spectrum_lower_bound(problem: &Problem, bc: &ABPair) -> f64 {
    let (p_min, r_min, qr_min, _) = problem.coefficient_bounds();
    let (m1, m2) = bc.to_unitary().matrix().eigenvalues();
    let theta = [m1, m2]
        .iter()
        .filter(|mu| (**mu + 1.0).norm() > 1e-8)
        .map(|mu| ((1.0 - mu) / (1.0 + mu)).norm())
        .fold(0.0, f64::max);
    qr_min - 2.0 * theta * (1.0 / problem.len() + 2.0 * theta / p_min) / r_min
}

/// Boundary frames spanning the eigenspace at an eigenvalue `lambda`.
pub fn eigenfunction_frames(
    problem: &Problem,
    bc: &ABPair,
    lambda: f64,
    mult: u8,
    tol: f64,
) -> Result<Vec<BoundaryFrame>> {
    let t = transfer(problem, C::new(lambda, 0.0), tol)?;
    let (phi, psi) = (t.phi(), t.psi());
    if mult >= 2 {
        return Ok(vec![phi, psi]);
    }
    let m = trace_matrix(bc, &t);
    let r0 = m[(0, 0)].norm() + m[(0, 1)].norm();
    let r1 = m[(1, 0)].norm() + m[(1, 1)].norm();
    let row = if r0 >= r1 { 0 } else { 1 };
    let (c0, c1) = (-m[(row, 1)], m[(row, 0)]);
    if c0.norm() + c1.norm() == 0.0 {
        return Err(Error::InvalidParameter(format!("trace matrix vanishes at {lambda}; multiplicity is 2")));
    }
    Ok(vec![phi.combine(c0, &psi, c1)])
}

/// `max |gamma(u)|` relative to the frame size, for a frame that should satisfy the condition.
pub fn condition_residual(bc: &ABPair, frame: &BoundaryFrame) -> f64 {
    let g = bc.apply_trace(frame);
    let scale = frame.max_abs() * (bc.a().max_norm() + bc.b().max_norm());
    g[0].norm().max(g[1].norm()) / scale.max(1e-300)
}
