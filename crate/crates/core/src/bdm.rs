//! Boundary data maps: the matrix sending `gamma_from`-data of solutions of
//! `(tau - z) u = 0` to their `gamma_to`-data.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{connection_matrices, separated_ab, ABPair, SeparatedBC};
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::propagate::{transfer, Transfer};
use crate::{CMat2, C};

/// Relative determinant threshold below which a trace matrix counts as singular.
pub const SPECTRAL_SINGULAR: f64 = 1e-10;

/// `Lambda_from^to(z)` with the conditions it connects.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdmValue {
    pub z: C,
    pub m: CMat2,
    pub from: ABPair,
    pub to: ABPair,
}

/// `[gamma(phi) gamma(psi)]` for the initial value basis.
pub fn trace_matrix(bc: &ABPair, t: &Transfer) -> CMat2 {
    bc.trace_of_transfer(&t.m)
}

/// Inverse of a trace matrix, or `SpectralPoint` when its determinant is small
/// against the product of its row norms.
///
/// Each row is one boundary functional on the solution space, so the ratio is
/// the sine of the angle between them. Column norms are not used: near a
/// Dirichlet eigenvalue a whole column is small, and at large `|z|` both
/// columns are dominated by the same growing mode.
pub fn invert_trace(m: &CMat2, z: C) -> Result<CMat2> {
    let row = |i: usize| (m[(i, 0)].norm_sqr() + m[(i, 1)].norm_sqr()).sqrt();
    let scale = row(0) * row(1);
    if !(m.det().norm() > SPECTRAL_SINGULAR * scale) {
        return Err(Error::SpectralPoint { z });
    }
    m.inverse().ok_or(Error::SpectralPoint { z })
}

/// `Lambda` from precomputed endpoint values of the initial value basis.
pub fn bdm_from_transfer(t: &Transfer, from: &ABPair, to: &ABPair) -> Result<CMat2> {
    let inv = invert_trace(&trace_matrix(from, t), t.z)?;
    Ok(trace_matrix(to, t) * inv)
}

pub fn bdm_eval(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<BdmValue> {
    let t = transfer(problem, z, tol)?;
    Ok(BdmValue { z, m: bdm_from_transfer(&t, from, to)?, from: *from, to: *to })
}

/// `Lambda` on a list of points, in input order.
pub fn bdm_grid(problem: &Problem, from: &ABPair, to: &ABPair, zs: &[C], tol: f64) -> Vec<Result<BdmValue>> {
    zs.par_iter().map(|&z| bdm_eval(problem, from, to, z, tol)).collect()
}

/// `max |Lambda_2^3 Lambda_1^2 - Lambda_1^3|`.
pub fn bdm_compose_check(problem: &Problem, bc1: &ABPair, bc2: &ABPair, bc3: &ABPair, z: C, tol: f64) -> Result<f64> {
    let t = transfer(problem, z, tol)?;
    let l12 = bdm_from_transfer(&t, bc1, bc2)?;
    let l23 = bdm_from_transfer(&t, bc2, bc3)?;
    let l13 = bdm_from_transfer(&t, bc1, bc3)?;
    Ok((l23 * l12).dist(&l13))
}

/// `Lambda = (D' + N' L)(D + N L)^{-1}` with `L` the Dirichlet-to-Neumann map.
pub fn bdm_via_fractional(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<BdmValue> {
    let t = transfer(problem, z, tol)?;
    let dn = t.dirichlet_to_neumann().map_err(|_| Error::SpectralPoint { z })?;
    let f = from.trace_matrices();
    let g = to.trace_matrices();
    let denominator = f.d + f.n * dn;
    let inv = invert_trace(&denominator, z)?;
    Ok(BdmValue { z, m: (g.d + g.n * dn) * inv, from: *from, to: *to })
}

/// Eigenvalues of `Im(Lambda(z) S^*)` for `Im z > 0`, ascending.
pub fn herglotz_probe(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<(f64, f64)> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidParameter(format!("Herglotz probe needs Im z > 0, got {z}")));
    }
    let s = invertible_s(from, to)?;
    let lam = bdm_eval(problem, from, to, z, tol)?.m;
    Ok((lam * s.adjoint()).im_part().hermitian_eigenvalues())
}

/// The connection matrix `S` of `(to, from)` when it is invertible.
pub fn invertible_s(from: &ABPair, to: &ABPair) -> Result<CMat2> {
    let s = connection_matrices(to, from).s;
    if s.det().norm() > 1e-10 {
        Ok(s)
    } else {
        let (smax, _) = s.singular_values();
        Err(Error::SingularS { rank: s.rank(SPECTRAL_SINGULAR, smax.max(1.0)) })
    }
}

/// `max |Lambda(conj z) S^* - (Lambda(z) S^*)^*|`, with both values computed directly.
pub fn reflection_residual(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<f64> {
    let s = connection_matrices(to, from).s;
    let up = bdm_eval(problem, from, to, z, tol)?.m * s.adjoint();
    let down = bdm_eval(problem, from, to, z.conj(), tol)?.m * s.adjoint();
    Ok(down.dist(&up.adjoint()))
}

/// Relative size of `oint Lambda dz` around a square of half-width `half`
/// centred at `center`, by composite Simpson with `n` (even) intervals per side.
pub fn morera_residual(
    problem: &Problem,
    from: &ABPair,
    to: &ABPair,
    center: C,
    half: f64,
    n: usize,
    tol: f64,
) -> Result<f64> {
    let n = n.max(2) + n % 2;
    let corners = [
        center + Complex64::new(-half, -half),
        center + Complex64::new(half, -half),
        center + Complex64::new(half, half),
        center + Complex64::new(-half, half),
    ];
    let mut points = Vec::with_capacity(4 * (n + 1));
    for k in 0..4 {
        let (p0, p1) = (corners[k], corners[(k + 1) % 4]);
        for j in 0..=n {
            let w = if j == 0 || j == n {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            points.push((p0 + (p1 - p0) * (j as f64 / n as f64), (p1 - p0) * (w / (3.0 * n as f64))));
        }
    }
    let values: Vec<Result<CMat2>> =
        points.par_iter().map(|(z, _)| bdm_eval(problem, from, to, *z, tol).map(|v| v.m)).collect();
    let mut total = CMat2::zero();
    let mut size: f64 = 0.0;
    for ((_, dz), v) in points.iter().zip(values) {
        let v = v?;
        size = size.max(v.max_norm());
        total = total + v.scale(*dz);
    }
    Ok(total.max_norm() / (8.0 * half * size.max(1e-300)))
}

/// Large-`|z|` behaviour of one diagonal entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub y: f64,
    pub entry11: [f64; 2],
    pub entry22: [f64; 2],
    /// Distance of entry (1,1) from its predicted limit (a ratio for angle zero).
    pub deviation11: f64,
    pub deviation22: f64,
}

/// Diagonal of `Lambda_from^to(iy)` for `from = (theta_a, theta_b)` and
/// `to = (theta_a + pi/2, theta_b - pi/2)`, compared against the limits
/// `cot(theta_a)` and `-cot(theta_b)`, or `i z^{1/2}` and `-i z^{1/2}` at angle zero.
///
/// The square root is the principal branch.
pub fn m_asymptotics(problem: &Problem, sep: &SeparatedBC, heights: &[f64], tol: f64) -> Result<Vec<AsymptoticRow>> {
    if !problem.p().is_identically(1.0) || !problem.r().is_identically(1.0) {
        return Err(Error::WrongCoefficients);
    }
    let from = sep.to_ab();
    let to = separated_ab(sep.theta_a + std::f64::consts::FRAC_PI_2, sep.theta_b - std::f64::consts::FRAC_PI_2);
    heights
        .par_iter()
        .map(|&y| {
            let z = Complex64::new(0.0, y);
            let m = bdm_eval(problem, &from, &to, z, tol)?.m;
            let root = Complex64::i() * z.sqrt();
            let dev = |v: C, theta: f64, sign: f64| {
                if theta == 0.0 {
                    (v / (root * sign) - 1.0).norm()
                } else {
                    (v - sign / theta.tan()).norm()
                }
            };
            let (l11, l22) = (m[(0, 0)], m[(1, 1)]);
            Ok(AsymptoticRow {
                y,
                entry11: [l11.re, l11.im],
                entry22: [l22.re, l22.im],
                deviation11: dev(l11, sep.theta_a, 1.0),
                deviation22: dev(l22, sep.theta_b, -1.0),
            })
        })
        .collect()
}
