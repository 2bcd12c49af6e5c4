//! Von Neumann's isometry `N_+ -> N_-` of a self-adjoint extension as a 2x2
//! matrix, in two families of bases.
//!
//! The `pair` bases are the Dirichlet-normalized pairs `(u1(+-i), u2(+-i))`
//! with `u1(a) = 0, u1(b) = 1` and `u2(a) = 1, u2(b) = 0`. A `gamma` basis for a
//! reference condition has `gamma_ref(u) = e_1, e_2`. For the Dirichlet
//! reference the gamma basis is `(u2, u1)`, the pair basis with columns exchanged.

use std::sync::Arc;

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::bdm::{bdm_eval, invert_trace, trace_matrix};
use crate::boundary::{matrix_to_wire, ABPair, CanonicalBC, CoupledBC, SeparatedBC};
use crate::error::Result;
use crate::problem::Problem;
use crate::propagate::grid::Grid;
use crate::propagate::{gram_quadrature, transfer, BoundaryFrame, DEFICIENCY_GRID_POINTS};
use crate::spectra::green::Resolvent;
use crate::spectra::krein::{DirichletFluxes, F12_ZERO};
use crate::{CMat2, C};

const I: C = Complex64::new(0.0, 1.0);

/// Which pair of bases a matrix refers to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisTag {
    Pair,
    Gamma(ABPair),
}

impl BasisTag {
    pub fn label(&self) -> String {
        match self {
            BasisTag::Pair => "pair".into(),
            BasisTag::Gamma(bc) => {
                let named = [
                    ("dirichlet", ABPair::dirichlet()),
                    ("neumann", ABPair::neumann()),
                    ("periodic", ABPair::periodic()),
                    ("antiperiodic", ABPair::antiperiodic()),
                ];
                let name = named.iter().find(|(_, n)| n == bc).map_or("ab", |(s, _)| s);
                format!("gamma:{name}")
            }
        }
    }
}

/// Matrix of the isometry with the Gram matrices of the bases it refers to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VnUnitary {
    pub u: CMat2,
    pub basis: BasisTag,
    /// `G[j][k] = (b_j(i), b_k(i))`.
    pub g_plus: CMat2,
    /// `G[j][k] = (b_j(-i), b_k(-i))`.
    pub g_minus: CMat2,
    /// Condition number of the matrix inverted to form `u`.
    pub condition: f64,
}

impl VnUnitary {
    /// `max |U* G_- U - G_+|`.
    pub fn isometry_residual(&self) -> f64 {
        (self.u.adjoint() * self.g_minus * self.u).dist(&self.g_plus)
    }
}

impl Serialize for VnUnitary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("VnUnitary", 6)?;
        st.serialize_field("basis", &self.basis.label())?;
        st.serialize_field("U", &matrix_to_wire(&self.u))?;
        st.serialize_field("G_plus", &matrix_to_wire(&self.g_plus))?;
        st.serialize_field("G_minus", &matrix_to_wire(&self.g_minus))?;
        st.serialize_field("isometry_residual", &self.isometry_residual())?;
        st.serialize_field("condition", &self.condition)?;
        st.end()
    }
}

fn condition(m: &CMat2) -> f64 {
    let (hi, lo) = m.singular_values();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `-Lambda_ref^bc(-i)^{-1} Lambda_ref^bc(i)` in the gamma bases of `reference`,
/// with Gram matrices by quadrature.
pub fn vn_unitary_general(problem: &Problem, bc: &ABPair, reference: &ABPair, tol: f64) -> Result<VnUnitary> {
    let plus = bdm_eval(problem, reference, bc, I, tol)?.m;
    let minus = bdm_eval(problem, reference, bc, -I, tol)?.m;
    let inv = invert_trace(&minus, -I)?;
    let grid = Arc::new(Grid::for_problem(problem, DEFICIENCY_GRID_POINTS, &[]));
    let gram = |z: C| -> Result<CMat2> {
        let [u, v] = Resolvent::new(problem, reference, z, &grid, tol)?.kernel_basis();
        gram_quadrature(&[&u, &v])
    };
    Ok(VnUnitary {
        u: -(inv * plus),
        basis: BasisTag::Gamma(*reference),
        g_plus: gram(I)?,
        g_minus: gram(-I)?,
        condition: condition(&minus),
    })
}

/// `-[gamma(u1(-i)) gamma(u2(-i))]^{-1} [gamma(u1(i)) gamma(u2(i))]` in the pair bases.
pub fn vn_unitary_direct(problem: &Problem, bc: &ABPair, tol: f64) -> Result<VnUnitary> {
    let traces = |z: C| -> Result<CMat2> {
        let [u1, u2] = transfer(problem, z, tol)?.dirichlet_pair()?;
        Ok(CMat2::from_columns(bc.apply_trace(&u1), bc.apply_trace(&u2)))
    };
    let (plus, minus) = (traces(I)?, traces(-I)?);
    let inv = invert_trace(&minus, -I)?;
    let (g_plus, g_minus) = gram_pair(problem, tol)?;
    Ok(VnUnitary { u: -(inv * plus), basis: BasisTag::Pair, g_plus, g_minus, condition: condition(&minus) })
}

/// Gram matrices of the pair bases from endpoint quasi-derivatives alone.
///
/// With real coefficients `u_j(-i) = conj(u_j(i))`, so `G_- = conj(G_+)`.
pub fn gram_pair(problem: &Problem, tol: f64) -> Result<(CMat2, CMat2)> {
    let p = DirichletFluxes::new(problem, I, tol)?;
    let m = DirichletFluxes::new(problem, -I, tol)?;
    let half = -1.0 / (2.0 * I);
    let g_plus =
        CMat2::new(half * (p.u1b - m.u1b), half * (p.u2b + m.u1a), -half * (m.u2b + p.u1a), half * (m.u2a - p.u2a));
    Ok((g_plus, g_plus.conj()))
}

/// The closed forms for a separated condition, in the pair bases.
pub fn vn_unitary_separated(problem: &Problem, sep: &SeparatedBC, tol: f64) -> Result<VnUnitary> {
    let (ta, tb) = (sep.theta_a, sep.theta_b);
    let (u, cond) = if ta == 0.0 && tb == 0.0 {
        (-CMat2::identity(), 1.0)
    } else {
        let p = DirichletFluxes::new(problem, I, tol)?;
        let m = DirichletFluxes::new(problem, -I, tol)?;
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        if ta != 0.0 && tb != 0.0 {
            let (dp, dm) = (p.d_matrix(ta, tb), m.d_matrix(ta, tb));
            (-(invert_trace(&dm, -I)? * dp), condition(&dm))
        } else if tb == 0.0 {
            let (dp, dm) = (p.d_left(ta), m.d_left(ta));
            (CMat2::new(-one, zero, -(m.u2b + p.u1a) / dm, -dp / dm), 1.0)
        } else {
            let (dp, dm) = (p.d_right(tb), m.d_right(tb));
            (CMat2::new(-dp / dm, (p.u2b + m.u1a) / dm, zero, -one), 1.0)
        }
    };
    let (g_plus, g_minus) = gram_pair(problem, tol)?;
    Ok(VnUnitary { u, basis: BasisTag::Pair, g_plus, g_minus, condition: cond })
}

/// The closed forms for a coupled condition, in the pair bases.
pub fn vn_unitary_coupled(problem: &Problem, c: &CoupledBC, tol: f64) -> Result<VnUnitary> {
    let p = DirichletFluxes::new(problem, I, tol)?;
    let m = DirichletFluxes::new(problem, -I, tol)?;
    let (u, cond) = if c.f[0][1].abs() >= F12_ZERO {
        let (qp, qm) = (p.q_matrix(c), m.q_matrix(c));
        (-(invert_trace(&qm, -I)? * qp), condition(&qm))
    } else {
        let f22 = c.f[1][1];
        let e = Complex64::from_polar(1.0, c.phi);
        let jump_b = p.u1b - m.u1b;
        let cross_minus = m.u2b + p.u1a;
        let jump_a = m.u2a - p.u2a;
        let cross_plus = p.u2b + m.u1a;
        let c11 = jump_b - e * f22 * cross_minus;
        let c12 = (e.conj() * jump_b - cross_minus * f22) * f22;
        let c22 = (jump_a * f22 + e.conj() * cross_plus) * f22;
        let c21 = e * f22 * jump_a + cross_plus;
        let q = m.q_scalar(c);
        (CMat2::new(c11, c21, c12, c22).scale(1.0 / q) - CMat2::identity(), 1.0)
    };
    let (g_plus, g_minus) = gram_pair(problem, tol)?;
    Ok(VnUnitary { u, basis: BasisTag::Pair, g_plus, g_minus, condition: cond })
}

pub fn vn_unitary_canonical(problem: &Problem, bc: &CanonicalBC, tol: f64) -> Result<VnUnitary> {
    match bc {
        CanonicalBC::Separated(s) => vn_unitary_separated(problem, s, tol),
        CanonicalBC::Coupled(c) => vn_unitary_coupled(problem, c, tol),
    }
}

/// Columns express the gamma basis of `reference` at `+i` and `-i` in the pair basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisChange {
    pub plus: CMat2,
    pub minus: CMat2,
}

/// The change of basis from gamma(`reference`) to pair, from endpoint values:
/// any solution equals `u(b) u1 + u(a) u2`.
pub fn gamma_to_pair(problem: &Problem, reference: &ABPair, tol: f64) -> Result<BasisChange> {
    let at = |z: C| -> Result<CMat2> {
        let t = transfer(problem, z, tol)?;
        let inv = invert_trace(&trace_matrix(reference, &t), z)?;
        let (phi, psi) = (t.phi(), t.psi());
        let col = |k: usize| -> BoundaryFrame { phi.combine(inv[(0, k)], &psi, inv[(1, k)]) };
        let (g0, g1) = (col(0), col(1));
        Ok(CMat2::new(g0.value_b, g1.value_b, g0.value_a, g1.value_a))
    };
    Ok(BasisChange { plus: at(I)?, minus: at(-I)? })
}

impl VnUnitary {
    /// Re-express in the pair bases; `B_gamma = B_pair C` gives
    /// `U_pair = C_- U C_+^{-1}` and `G_pair = C^{-*} G C^{-1}`.
    pub fn to_pair_basis(&self, problem: &Problem, tol: f64) -> Result<VnUnitary> {
        let BasisTag::Gamma(reference) = self.basis else {
            return Ok(*self);
        };
        let c = gamma_to_pair(problem, &reference, tol)?;
        let ip = invert_trace(&c.plus, I)?;
        let im = invert_trace(&c.minus, -I)?;
        Ok(VnUnitary {
            u: c.minus * self.u * ip,
            basis: BasisTag::Pair,
            g_plus: ip.adjoint() * self.g_plus * ip,
            g_minus: im.adjoint() * self.g_minus * im,
            condition: self.condition,
        })
    }
}
