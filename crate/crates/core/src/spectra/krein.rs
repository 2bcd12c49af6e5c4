//! Krein resolvent formulas relating two self-adjoint extensions.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::green::Resolvent;
use crate::bdm::{bdm_from_transfer, SPECTRAL_SINGULAR};
use crate::boundary::{connection_matrices, ABPair, CanonicalBC, CoupledBC};
use crate::error::{Error, Result};
use crate::linalg::dot_conj;
use crate::problem::Problem;
use crate::propagate::grid::Grid;
use crate::propagate::{transfer, Transfer, DEFICIENCY_GRID_POINTS};
use crate::{CMat2, CVec2, C};

/// The finite-rank part of `R_target(z) - R_reference(z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KreinCorrection {
    /// `P = S^{-1} Lambda`; the correction is `-sum_{k,n} [P^{-1}]_{kn} (u_n(conj z), f) u_k(z)`.
    Matrix2 { p: CMat2 },
    /// `p = v* Lambda w` with `v` spanning `ran S` and `w = S* v`;
    /// the correction is `-p^{-1} (u_w(conj z), f) u_w(z)`, `u_w = sum_k w_k u_k`.
    Rank1 { p: C, v: CVec2, w: CVec2 },
    /// Both conditions define the same extension.
    Zero,
}

impl KreinCorrection {
    pub fn kind(&self) -> &'static str {
        match self {
            KreinCorrection::Matrix2 { .. } => "matrix2",
            KreinCorrection::Rank1 { .. } => "rank1",
            KreinCorrection::Zero => "zero",
        }
    }
}

/// Rank of `S` relative to the sizes of the two trace maps.
pub fn connection_rank(target: &ABPair, reference: &ABPair) -> usize {
    let s = connection_matrices(target, reference).s;
    let (f, g) = (reference.trace_matrices(), target.trace_matrices());
    let scale = (g.d.frobenius() + g.n.frobenius()) * (f.d.frobenius() + f.n.frobenius());
    s.rank(SPECTRAL_SINGULAR, scale)
}

pub fn krein_correction(
    problem: &Problem,
    target: &ABPair,
    reference: &ABPair,
    z: C,
    tol: f64,
) -> Result<KreinCorrection> {
    let t = transfer(problem, z, tol)?;
    correction_from_transfer(&t, target, reference)
}

fn correction_from_transfer(t: &Transfer, target: &ABPair, reference: &ABPair) -> Result<KreinCorrection> {
    let s = connection_matrices(target, reference).s;
    let rank = connection_rank(target, reference);
    if rank == 0 {
        return Ok(KreinCorrection::Zero);
    }
    let lambda = bdm_from_transfer(t, reference, target)?;
    if rank == 2 {
        let inv = s.inverse().ok_or(Error::SingularS { rank })?;
        return Ok(KreinCorrection::Matrix2 { p: inv * lambda });
    }
    let v = range_vector(&s);
    let w = s.adjoint().mul_vec(&v);
    let p = dot_conj(&v, &lambda.mul_vec(&w));
    let size = lambda.max_norm().max(1.0) * w[0].norm().max(w[1].norm()).powi(2);
    if !(p.norm() > SPECTRAL_SINGULAR * size) {
        return Err(Error::SpectralPoint { z: t.z });
    }
    Ok(KreinCorrection::Rank1 { p, v, w })
}

/// Unit vector spanning the range of a rank-one matrix, with its largest
/// component real and positive.
fn range_vector(s: &CMat2) -> CVec2 {
    let c0 = s.column(0);
    let c1 = s.column(1);
    let norm = |c: &CVec2| (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
    let c = if norm(&c0) >= norm(&c1) { c0 } else { c1 };
    let big = if c[0].norm() >= c[1].norm() { c[0] } else { c[1] };
    let phase = big.conj() / big.norm();
    let n = norm(&c);
    [c[0] * phase / n, c[1] * phase / n]
}

/// `(H_target - z)^{-1} f` from the reference resolvent plus the Krein correction.
pub fn krein_apply(
    problem: &Problem,
    target: &ABPair,
    reference: &ABPair,
    z: C,
    grid: &Arc<Grid>,
    f: &[C],
    tol: f64,
) -> Result<Vec<C>> {
    let forward = Resolvent::new(problem, reference, z, grid, tol)?;
    let mut out = forward.apply(f)?;
    let t = transfer(problem, z, tol)?;
    let correction = correction_from_transfer(&t, target, reference)?;
    if correction == KreinCorrection::Zero {
        return Ok(out);
    }
    // The adjoint side is integrated on its own at conj(z).
    let backward = Resolvent::new(problem, reference, z.conj(), grid, tol)?;
    let u = forward.kernel_basis();
    let u_bar = backward.kernel_basis();
    let y: CVec2 = [
        grid.simpson(|i, seg| u_bar[0].value[i].conj() * f[i] * grid.weight(i, seg)),
        grid.simpson(|i, seg| u_bar[1].value[i].conj() * f[i] * grid.weight(i, seg)),
    ];
    let coeffs: CVec2 = match correction {
        KreinCorrection::Matrix2 { p } => {
            let inv = p.inverse().ok_or(Error::SpectralPoint { z })?;
            inv.mul_vec(&y)
        }
        KreinCorrection::Rank1 { p, w, .. } => {
            let c = dot_conj(&w, &y) / p;
            [w[0] * c, w[1] * c]
        }
        KreinCorrection::Zero => unreachable!("handled above"),
    };
    for (i, v) in out.iter_mut().enumerate() {
        *v -= u[0].value[i] * coeffs[0] + u[1].value[i] * coeffs[1];
    }
    Ok(out)
}

/// Largest `L^2(r dx)` distance between the direct target resolvent and the
/// Krein route, over trial functions given pointwise.
pub fn krein_resolvent_check(
    problem: &Problem,
    target: &ABPair,
    reference: &ABPair,
    z: C,
    trials: &[&(dyn Fn(f64) -> C + Sync)],
    tol: f64,
) -> Result<f64> {
    let grid = Arc::new(Grid::for_problem(problem, DEFICIENCY_GRID_POINTS, &[]));
    let direct = Resolvent::new(problem, target, z, &grid, tol)?;
    let mut worst: f64 = 0.0;
    for trial in trials {
        let f: Vec<C> = grid.nodes().iter().map(|&x| trial(x)).collect();
        let lhs = direct.apply(&f)?;
        let rhs = krein_apply(problem, target, reference, z, &grid, &f, tol)?;
        let d2 = grid.simpson(|i, seg| Complex64::new((lhs[i] - rhs[i]).norm_sqr() * grid.weight(i, seg), 0.0));
        worst = worst.max(d2.re.max(0.0).sqrt());
    }
    Ok(worst)
}

/// `|F12|` below which a coupled condition takes the scalar branch.
pub const F12_ZERO: f64 = 1e-12;

/// The closed forms for a Dirichlet reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Specialized {
    /// `D_{theta_a, theta_b}` or `Q_{F, phi}`, before the exchange permutation.
    Matrix([[f64; 2]; 4]),
    /// `sin^2 theta d`, or `q_{F, phi}`.
    Scalar([f64; 2]),
    Zero,
}

/// Quasi-derivatives at both ends of the Dirichlet-normalized pair
/// (`u1(a) = 0, u1(b) = 1`, `u2(a) = 1, u2(b) = 0`) at one `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirichletFluxes {
    pub z: C,
    pub u1a: C,
    pub u1b: C,
    pub u2a: C,
    pub u2b: C,
}

impl DirichletFluxes {
    pub fn new(problem: &Problem, z: C, tol: f64) -> Result<Self> {
        let t = transfer(problem, z, tol)?;
        let [u1, u2] = t.dirichlet_pair().map_err(|_| Error::SpectralPoint { z })?;
        Ok(DirichletFluxes { z, u1a: u1.flux_a, u1b: u1.flux_b, u2a: u2.flux_a, u2b: u2.flux_b })
    }

    /// `D_{theta_a, theta_b}`, both angles nonzero.
    pub fn d_matrix(&self, theta_a: f64, theta_b: f64) -> CMat2 {
        CMat2::new(cot(theta_b) - self.u1b, -self.u2b, self.u1a, cot(theta_a) + self.u2a)
    }

    /// `d_{theta_a, 0}`.
    pub fn d_left(&self, theta_a: f64) -> C {
        cot(theta_a) + self.u2a
    }

    /// `d_{0, theta_b}`.
    pub fn d_right(&self, theta_b: f64) -> C {
        cot(theta_b) - self.u1b
    }

    /// `Q_{F, phi}` for `F12 != 0`.
    pub fn q_matrix(&self, c: &CoupledBC) -> CMat2 {
        let [[f11, f12], [_, f22]] = c.f;
        let e = Complex64::from_polar(1.0, c.phi);
        CMat2::new(f22 / f12 - self.u1b, -e / f12 - self.u2b, -e.conj() / f12 + self.u1a, f11 / f12 + self.u2a)
    }

    /// `q_{F, phi}` for `F12 = 0`.
    pub fn q_scalar(&self, c: &CoupledBC) -> C {
        let [[_, _], [f21, f22]] = c.f;
        let e = Complex64::from_polar(1.0, c.phi);
        self.u2a * (f22 * f22) + e * f22 * self.u1a - e.conj() * f22 * self.u2b - self.u1b + f21 * f22
    }
}

fn cot(x: f64) -> C {
    C::new(x.cos() / x.sin(), 0.0)
}

/// The closed-form Krein matrix or scalar of a canonical target against the Dirichlet reference.
pub fn dirichlet_specialized(problem: &Problem, target: &CanonicalBC, z: C, tol: f64) -> Result<SpecializedValue> {
    let k = DirichletFluxes::new(problem, z, tol)?;
    Ok(match *target {
        CanonicalBC::Separated(sep) => {
            let (ta, tb) = (sep.theta_a, sep.theta_b);
            match (ta == 0.0, tb == 0.0) {
                (false, false) => SpecializedValue::Matrix(k.d_matrix(ta, tb)),
                (false, true) => SpecializedValue::Scalar(k.d_left(ta) * ta.sin().powi(2)),
                (true, false) => SpecializedValue::Scalar(k.d_right(tb) * tb.sin().powi(2)),
                (true, true) => SpecializedValue::Zero,
            }
        }
        CanonicalBC::Coupled(c) if c.f[0][1].abs() >= F12_ZERO => SpecializedValue::Matrix(k.q_matrix(&c)),
        CanonicalBC::Coupled(c) => SpecializedValue::Scalar(k.q_scalar(&c)),
    })
}

/// A closed-form Krein object with complex entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpecializedValue {
    Matrix(CMat2),
    Scalar(C),
    Zero,
}

impl SpecializedValue {
    pub fn to_wire(&self) -> Specialized {
        match self {
            SpecializedValue::Matrix(m) => Specialized::Matrix(crate::boundary::matrix_to_wire(m)),
            SpecializedValue::Scalar(c) => Specialized::Scalar([c.re, c.im]),
            SpecializedValue::Zero => Specialized::Zero,
        }
    }
}

/// Distance between the closed form (permuted by the exchange matrix) and the
/// general Krein object for the same target and a Dirichlet reference.
pub fn specialized_residual(problem: &Problem, target: &CanonicalBC, z: C, tol: f64) -> Result<f64> {
    let closed = dirichlet_specialized(problem, target, z, tol)?;
    let general = krein_correction(problem, &target.to_ab(), &ABPair::dirichlet(), z, tol)?;
    let swap = CMat2::exchange();
    match (closed, general) {
        (SpecializedValue::Matrix(m), KreinCorrection::Matrix2 { p }) => Ok((swap * m * swap).dist(&p)),
        (SpecializedValue::Scalar(a), KreinCorrection::Rank1 { p, .. }) => Ok((a - p).norm()),
        (SpecializedValue::Zero, KreinCorrection::Zero) => Ok(0.0),
        (c, g) => Err(Error::InvalidParameter(format!(
            "closed form {:?} and general correction {} have different kinds",
            c.to_wire(),
            g.kind()
        ))),
    }
}
