//! The Krein-von Neumann extension as an explicit coupled condition.

use serde::Serialize;

use super::{condition_residual, eigenfunction_frames, eigenvalues, spectrum_lower_bound};
use crate::boundary::{ABPair, CoupledBC};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::propagate::transfer;
use crate::C;

/// Dirichlet ground states at or below this count as not strictly positive.
pub const POSITIVITY_FLOOR: f64 = 1e-8;
const DET_TOL: f64 = 1e-8;

/// Fails with `NotStrictlyPositive` unless the Dirichlet extension, and hence
/// the minimal operator, is bounded below by a positive constant.
pub fn check_strictly_positive(problem: &Problem, tol: f64) -> Result<()> {
    let dirichlet = ABPair::dirichlet();
    let lb = spectrum_lower_bound(problem, &dirichlet);
    if lb > POSITIVITY_FLOOR {
        return Ok(());
    }
    match eigenvalues(problem, &dirichlet, (lb - 1.0, POSITIVITY_FLOOR), tol) {
        Ok(s) if s.eigenvalues.is_empty() => Ok(()),
        Ok(s) => Err(Error::NotStrictlyPositive { ground_state: s.eigenvalues[0].lambda }),
        Err(Error::WindowEdgeEigenvalue { lambda }) => Err(Error::NotStrictlyPositive { ground_state: lambda }),
        Err(e) => Err(e),
    }
}

/// `phi = 0` and `F_K` from the Dirichlet-normalized kernel pair at `z = 0`.
pub fn kvn_extension(problem: &Problem, tol: f64) -> Result<CoupledBC> {
    check_strictly_positive(problem, tol)?;
    let t = transfer(problem, C::new(0.0, 0.0), tol)?;
    let [u1, u2] = t.dirichlet_pair().map_err(|_| Error::NotStrictlyPositive { ground_state: 0.0 })?;
    let (u1a, u1b, u2a, u2b) = (u1.flux_a.re, u1.flux_b.re, u2.flux_a.re, u2.flux_b.re);
    let f = [[-u2a / u1a, 1.0 / u1a], [(u1a * u2b - u1b * u2a) / u1a, u1b / u1a]];
    // det F_K = -u2'(b) / u1'(a), which is 1 by constancy of the Wronskian.
    let det = -u2b / u1a;
    if !((det - 1.0).abs() < DET_TOL) {
        return Err(Error::IntegratorFailure { x: problem.b(), z: t.z });
    }
    Ok(CoupledBC { phi: 0.0, f })
}

pub fn kvn_ab(problem: &Problem, tol: f64) -> Result<ABPair> {
    Ok(kvn_extension(problem, tol)?.to_ab())
}

/// The bottom of the spectrum of the Krein-von Neumann extension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KvnCheck {
    pub f: [[f64; 2]; 2],
    pub smallest: [f64; 2],
    /// Largest relative residual of the boundary condition on the kernel elements.
    pub condition_residual: f64,
    /// For `q = 0`: largest relative violation of
    /// `u'(b) = u'(a) = (u(b) - u(a)) / int 1/p` on the kernel elements.
    pub relation_residual: Option<f64>,
}

pub fn kvn_spectrum_check(problem: &Problem, tol: f64) -> Result<KvnCheck> {
    let kvn = kvn_extension(problem, tol)?;
    let bc = kvn.to_ab();
    let lo = spectrum_lower_bound(problem, &bc) - 1.0;
    let mut hi = 1.0;
    let spectrum = loop {
        let s = eigenvalues(problem, &bc, (lo, hi), tol)?;
        if s.count() >= 2 || hi > 1e4 {
            break s;
        }
        hi *= 4.0;
    };
    let flat = spectrum.flattened();
    if flat.len() < 2 {
        return Err(Error::CountMismatch { contour: spectrum.contour_count, scan: flat.len() });
    }
    let smallest = [flat[0], flat[1]];
    let mut frames = Vec::new();
    for e in spectrum.eigenvalues.iter().filter(|e| e.lambda.abs() < 1e-6) {
        frames.extend(eigenfunction_frames(problem, &bc, e.lambda, e.mult, tol)?);
    }
    let condition = frames.iter().map(|f| condition_residual(&bc, f)).fold(0.0, f64::max);
    let relation = problem.q().is_identically(0.0).then(|| {
        let inv_p = problem.inverse_p_integral();
        frames
            .iter()
            .map(|f| {
                let slope = (f.value_b - f.value_a) / inv_p;
                let scale = f.max_abs().max(1e-300);
                ((f.flux_b - f.flux_a).norm().max((f.flux_a - slope).norm())) / scale
            })
            .fold(0.0, f64::max)
    });
    Ok(KvnCheck { f: kvn.f, smallest, condition_residual: condition, relation_residual: relation })
}
