//! Resolvents of self-adjoint extensions by variation of constants.

use std::sync::Arc;

use crate::bdm::{invert_trace, trace_matrix};
use crate::boundary::ABPair;
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::problem::Problem;
use crate::propagate::grid::Grid;
use crate::propagate::{iv_paths, transfer, transfer_to, SolutionPath};
use crate::{CMat2, C};

/// `(H - z)^{-1}` for one boundary condition, applied to functions sampled on a grid.
#[derive(Clone, Debug)]
pub struct Resolvent {
    pub z: C,
    pub bc: ABPair,
    phi: SolutionPath,
    psi: SolutionPath,
    m_inv: CMat2,
}

impl Resolvent {
    pub fn new(problem: &Problem, bc: &ABPair, z: C, grid: &Arc<Grid>, tol: f64) -> Result<Self> {
        let (phi, psi) = iv_paths(problem, grid, z, tol)?;
        let t = transfer_from_paths(&phi, &psi, z);
        let m_inv = invert_trace(&trace_matrix(bc, &t), z)?;
        Ok(Resolvent { z, bc: *bc, phi, psi, m_inv })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.phi.grid
    }

    /// Values of `(H - z)^{-1} f` at the grid nodes.
    pub fn apply(&self, f: &[C]) -> Result<Vec<C>> {
        let grid = self.grid();
        if f.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let (phi, psi) = (&self.phi.value, &self.psi.value);
        let i_phi = grid.cumulative(|i, seg| phi[i] * f[i] * grid.weight(i, seg));
        let i_psi = grid.cumulative(|i, seg| psi[i] * f[i] * grid.weight(i, seg));
        let last = grid.len() - 1;
        // Particular solution with zero data at a.
        let end = [
            phi[last] * i_psi[last] - psi[last] * i_phi[last],
            self.phi.flux[last] * i_psi[last] - self.psi.flux[last] * i_phi[last],
        ];
        let correction = self.m_inv.mul_vec(&self.bc.b().mul_vec(&end));
        Ok((0..grid.len())
            .map(|i| phi[i] * i_psi[i] - psi[i] * i_phi[i] + phi[i] * correction[0] + psi[i] * correction[1])
            .collect())
    }

    /// Solutions `u_k` of `(tau - z) u = 0` with `gamma(u_k) = e_k`.
    pub fn kernel_basis(&self) -> [SolutionPath; 2] {
        let col = |k: usize| self.phi.combine(self.m_inv[(0, k)], &self.psi, self.m_inv[(1, k)]);
        [col(0), col(1)]
    }
}

fn transfer_from_paths(phi: &SolutionPath, psi: &SolutionPath, z: C) -> crate::propagate::Transfer {
    let n = phi.value.len() - 1;
    crate::propagate::Transfer { z, m: CMat2::new(phi.value[n], psi.value[n], phi.flux[n], psi.flux[n]) }
}

/// The Green's function `G(z, x, x')` evaluated from point transfers.
pub fn green_direct(problem: &Problem, bc: &ABPair, z: C, x: f64, xp: f64, tol: f64) -> Result<C> {
    for v in [x, xp] {
        if !(v >= problem.a() && v <= problem.b()) {
            return Err(Error::InvalidParameter(format!("point {v} outside [{}, {}]", problem.a(), problem.b())));
        }
    }
    let end = transfer(problem, z, tol)?;
    let m_inv = invert_trace(&trace_matrix(bc, &end), z)?;
    let at_x = transfer_to(problem, z, x, tol)?.m;
    let at_t = transfer_to(problem, z, xp, tol)?.m;
    let (phi_t, psi_t) = (at_t[(0, 0)], at_t[(0, 1)]);
    // K(y, t) = phi(y) psi(t) - psi(y) phi(t), and its quasi-derivative in y.
    let kernel = |m: &CMat2, row: usize| m[(row, 0)] * psi_t - m[(row, 1)] * phi_t;
    let k_end: Vec2<f64> = [kernel(&end.m, 0), kernel(&end.m, 1)];
    let c = m_inv.mul_vec(&bc.b().mul_vec(&k_end));
    let homogeneous = at_x[(0, 0)] * c[0] + at_x[(0, 1)] * c[1];
    let causal = if x > xp { kernel(&at_x, 0) } else { C::new(0.0, 0.0) };
    Ok(causal + homogeneous)
}
