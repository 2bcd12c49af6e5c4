//! Solutions of `(tau - z) u = 0` as the first-order system
//! `u' = (pu)/p`, `(pu)' = (q - z r) u`.

pub mod grid;
pub mod rk;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::problem::{Problem, SegmentCoefficients};
use crate::{CMat2, C};

pub use grid::{Grid, MIN_GRID_POINTS};
use rk::{RkOptions, StepFailure};

/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative threshold on the endpoint determinant below which `z` counts as a
/// Dirichlet eigenvalue.
pub const DIRICHLET_SINGULAR: f64 = 1e-10;

fn czero() -> C {
    Complex64::new(0.0, 0.0)
}

/// Boundary values `(u(a), (pu')(a), u(b), (pu')(b))` of a solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFrame {
    pub value_a: C,
    pub flux_a: C,
    pub value_b: C,
    pub flux_b: C,
}

impl BoundaryFrame {
    pub fn new(value_a: C, flux_a: C, value_b: C, flux_b: C) -> Self {
        Self { value_a, flux_a, value_b, flux_b }
    }

    pub fn at_a(&self) -> Vec2<f64> {
        [self.value_a, self.flux_a]
    }

    pub fn at_b(&self) -> Vec2<f64> {
        [self.value_b, self.flux_b]
    }

    /// `(u(a), u(b))`.
    pub fn dirichlet_trace(&self) -> Vec2<f64> {
        [self.value_a, self.value_b]
    }

    /// `(pu'(a), -pu'(b))`, the outward flux.
    pub fn neumann_trace(&self) -> Vec2<f64> {
        [self.flux_a, -self.flux_b]
    }

    pub fn conj(&self) -> Self {
        Self::new(self.value_a.conj(), self.flux_a.conj(), self.value_b.conj(), self.flux_b.conj())
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: C, other: &Self, beta: C) -> Self {
        Self::new(
            self.value_a * alpha + other.value_a * beta,
            self.flux_a * alpha + other.flux_a * beta,
            self.value_b * alpha + other.value_b * beta,
            self.flux_b * alpha + other.flux_b * beta,
        )
    }

    pub fn max_abs(&self) -> f64 {
        [self.value_a, self.flux_a, self.value_b, self.flux_b].iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        [self.value_a, self.flux_a, self.value_b, self.flux_b].iter().all(|v| v.is_finite())
    }
}

/// Values of a solution and its quasi-derivative on a grid.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    pub z: C,
    pub grid: Arc<Grid>,
    pub value: Vec<C>,
    pub flux: Vec<C>,
}

impl SolutionPath {
    pub fn frame(&self) -> BoundaryFrame {
        let n = self.value.len() - 1;
        BoundaryFrame::new(self.value[0], self.flux[0], self.value[n], self.flux[n])
    }

    /// `alpha * self + beta * other` on the shared grid.
    pub fn combine(&self, alpha: C, other: &SolutionPath, beta: C) -> SolutionPath {
        SolutionPath {
            z: self.z,
            grid: Arc::clone(&self.grid),
            value: self.value.iter().zip(&other.value).map(|(u, v)| u * alpha + v * beta).collect(),
            flux: self.flux.iter().zip(&other.flux).map(|(u, v)| u * alpha + v * beta).collect(),
        }
    }

    pub fn scaled(&self, alpha: C) -> SolutionPath {
        SolutionPath {
            z: self.z,
            grid: Arc::clone(&self.grid),
            value: self.value.iter().map(|u| u * alpha).collect(),
            flux: self.flux.iter().map(|u| u * alpha).collect(),
        }
    }

    /// Rows `x, Re u, Im u, Re pu', Im pu'`.
    pub fn rows(&self) -> Vec<[f64; 5]> {
        self.grid
            .nodes()
            .iter()
            .zip(self.value.iter().zip(&self.flux))
            .map(|(&x, (u, f))| [x, u.re, u.im, f.re, f.im])
            .collect()
    }

    fn same_grid(&self, other: &SolutionPath) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }
}

/// The pair normalized by `u1(a) = 0, u1(b) = 1, u2(a) = 1, u2(b) = 0`.
#[derive(Clone, Debug)]
pub struct FundamentalPair {
    pub z: C,
    pub u1: SolutionPath,
    pub u2: SolutionPath,
}

/// Endpoint values at `b` of the initial value solutions `phi` (`phi(a) = 1,
/// (p phi')(a) = 0`) and `psi` (`psi(a) = 0, (p psi')(a) = 1`), as columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer {
    pub z: C,
    pub m: CMat2,
}

impl Transfer {
    pub fn phi(&self) -> BoundaryFrame {
        BoundaryFrame::new(Complex64::new(1.0, 0.0), czero(), self.m[(0, 0)], self.m[(1, 0)])
    }

    pub fn psi(&self) -> BoundaryFrame {
        BoundaryFrame::new(czero(), Complex64::new(1.0, 0.0), self.m[(0, 1)], self.m[(1, 1)])
    }

    /// Coefficients `(c_phi, c_psi)` of `u1` and `u2` in the initial value basis.
    pub fn dirichlet_coefficients(&self) -> Result<[Vec2<f64>; 2]> {
        let phi_b = self.m[(0, 0)];
        let psi_b = self.m[(0, 1)];
        let scale = 1f64.max(phi_b.norm()).max(psi_b.norm());
        if psi_b.norm() < DIRICHLET_SINGULAR * scale {
            return Err(Error::DirichletEigenvalue { z: self.z });
        }
        let one = Complex64::new(1.0, 0.0);
        Ok([[czero(), one / psi_b], [one, -phi_b / psi_b]])
    }

    /// Frames of the Dirichlet-normalized pair `(u1, u2)`.
    pub fn dirichlet_pair(&self) -> Result<[BoundaryFrame; 2]> {
        let [c1, c2] = self.dirichlet_coefficients()?;
        let (phi, psi) = (self.phi(), self.psi());
        let mut u1 = phi.combine(c1[0], &psi, c1[1]);
        let mut u2 = phi.combine(c2[0], &psi, c2[1]);
        // The normalization is exact by construction.
        u1.value_a = czero();
        u1.value_b = Complex64::new(1.0, 0.0);
        u2.value_a = Complex64::new(1.0, 0.0);
        u2.value_b = czero();
        Ok([u1, u2])
    }

    /// The Dirichlet-to-Neumann matrix `[[u2'(a), u1'(a)], [-u2'(b), -u1'(b)]]`.
    pub fn dirichlet_to_neumann(&self) -> Result<CMat2> {
        let [u1, u2] = self.dirichlet_pair()?;
        Ok(CMat2::new(u2.flux_a, u1.flux_a, -u2.flux_b, -u1.flux_b))
    }
}

/// Accepted integrator step end points, per smooth segment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub segments: Vec<Vec<f64>>,
}

fn system(seg: SegmentCoefficients, z: C) -> impl Fn(f64, &[C; 4]) -> [C; 4] {
    move |x, y| {
        let inv_p = 1.0 / seg.p.at(x);
        let w = Complex64::new(seg.q.at(x), 0.0) - z * seg.r.at(x);
        [y[1] * inv_p, y[0] * w, y[3] * inv_p, y[2] * w]
    }
}

fn first_step(seg: &SegmentCoefficients, lo: f64, hi: f64, z: C) -> f64 {
    let x = 0.5 * (lo + hi);
    let rate = ((z.norm() * seg.r.at(x) + seg.q.at(x).abs()) / seg.p.at(x)).sqrt();
    (hi - lo).min(0.1 / (1.0 + rate))
}

fn fail(z: C) -> impl Fn(StepFailure<f64>) -> Error {
    move |e| Error::IntegratorFailure { x: e.x, z }
}

fn identity_state() -> [C; 4] {
    let one = Complex64::new(1.0, 0.0);
    [one, czero(), czero(), one]
}

fn state_to_transfer(z: C, y: [C; 4]) -> Transfer {
    Transfer { z, m: CMat2::new(y[0], y[2], y[1], y[3]) }
}

fn transfer_impl(problem: &Problem, z: C, tol: f64, end: f64, mut mesh: Option<&mut Mesh>) -> Result<Transfer> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let opts = RkOptions::new(tol);
    let mut ends: Vec<f64> = problem.segment_ends().into_iter().filter(|&x| x < end).collect();
    ends.push(end);
    let mut y = identity_state();
    let mut h = f64::INFINITY;
    for w in ends.windows(2) {
        let seg = problem.segment_coefficients(w[0], w[1]);
        h = h.min(first_step(&seg, w[0], w[1], z));
        let f = system(seg, z);
        let record = mesh.as_deref_mut().map(|m| {
            m.segments.push(Vec::new());
            m.segments.last_mut().expect("just pushed")
        });
        y = rk::integrate(&f, w[0], w[1], y, &mut h, &opts, record).map_err(fail(z))?;
    }
    Ok(state_to_transfer(z, y))
}

/// Endpoint values of the initial value basis at `z`.
pub fn transfer(problem: &Problem, z: C, tol: f64) -> Result<Transfer> {
    transfer_impl(problem, z, tol, problem.b(), None)
}

/// Values of the initial value basis at an interior point `x`, as columns
/// `(phi(x), (p phi')(x))` and `(psi(x), (p psi')(x))`.
pub fn transfer_to(problem: &Problem, z: C, x: f64, tol: f64) -> Result<Transfer> {
    if !(x >= problem.a() && x <= problem.b()) {
        return Err(Error::InvalidParameter(format!("x = {x} lies outside [{}, {}]", problem.a(), problem.b())));
    }
    if x == problem.a() {
        return Ok(state_to_transfer(z, identity_state()));
    }
    transfer_impl(problem, z, tol, x, None)
}

/// As [`transfer`], also returning the accepted step mesh for later replay.
pub fn transfer_with_mesh(problem: &Problem, z: C, tol: f64) -> Result<(Transfer, Mesh)> {
    let mut mesh = Mesh::default();
    let t = transfer_impl(problem, z, tol, problem.b(), Some(&mut mesh))?;
    Ok((t, mesh))
}

/// Endpoint values at `z` computed with the fixed steps of a recorded mesh.
///
/// The discretization error then depends smoothly on `z`, which is what finite
/// differences in `z` need.
pub fn transfer_on_mesh(problem: &Problem, z: C, mesh: &Mesh) -> Transfer {
    let ends = problem.segment_ends();
    let mut y = identity_state();
    for (w, steps) in ends.windows(2).zip(&mesh.segments) {
        let f = system(problem.segment_coefficients(w[0], w[1]), z);
        y = rk::integrate_on_mesh(&f, w[0], steps, y);
    }
    state_to_transfer(z, y)
}

/// The initial value solutions `phi` and `psi` on a grid.
pub fn iv_paths(problem: &Problem, grid: &Arc<Grid>, z: C, tol: f64) -> Result<(SolutionPath, SolutionPath)> {
    let cols = integrate_grid(problem, grid, z, identity_state(), tol)?;
    let pick = |i: usize| cols.iter().map(|s| s[i]).collect::<Vec<_>>();
    let phi = SolutionPath { z, grid: Arc::clone(grid), value: pick(0), flux: pick(1) };
    let psi = SolutionPath { z, grid: Arc::clone(grid), value: pick(2), flux: pick(3) };
    Ok((phi, psi))
}

fn integrate_grid(problem: &Problem, grid: &Grid, z: C, y0: [C; 4], tol: f64) -> Result<Vec<[C; 4]>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let _ = problem;
    let opts = RkOptions::new(tol);
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    out.push(y0);
    let mut y = y0;
    let mut h = f64::INFINITY;
    for (seg, &(s, e)) in grid.segments().iter().enumerate() {
        let coeffs = *grid.segment_coefficients(seg);
        h = h.min(first_step(&coeffs, nodes[s], nodes[e], z));
        let f = system(coeffs, z);
        for i in s..e {
            y = rk::integrate(&f, nodes[i], nodes[i + 1], y, &mut h, &opts, None).map_err(fail(z))?;
            out.push(y);
        }
    }
    Ok(out)
}

/// Solve the initial value problem `u(a) = u0, (pu')(a) = flux0` on the default grid.
pub fn solve_iv(problem: &Problem, z: C, u0: C, flux0: C, tol: f64) -> Result<SolutionPath> {
    let grid = Arc::new(Grid::for_problem(problem, MIN_GRID_POINTS, &[]));
    solve_iv_on(problem, &grid, z, u0, flux0, tol)
}

/// Solve the initial value problem on a given grid.
pub fn solve_iv_on(problem: &Problem, grid: &Arc<Grid>, z: C, u0: C, flux0: C, tol: f64) -> Result<SolutionPath> {
    let (phi, psi) = iv_paths(problem, grid, z, tol)?;
    Ok(phi.combine(u0, &psi, flux0))
}

/// The Dirichlet-normalized pair on the default grid.
pub fn fundamental_pair(problem: &Problem, z: C, tol: f64) -> Result<FundamentalPair> {
    let grid = Arc::new(Grid::for_problem(problem, MIN_GRID_POINTS, &[]));
    fundamental_pair_on(problem, &grid, z, tol)
}

/// The Dirichlet-normalized pair on a given grid.
pub fn fundamental_pair_on(problem: &Problem, grid: &Arc<Grid>, z: C, tol: f64) -> Result<FundamentalPair> {
    let (phi, psi) = iv_paths(problem, grid, z, tol)?;
    pair_from_iv(&phi, &psi)
}

/// Build the Dirichlet-normalized pair from the initial value solutions.
pub fn pair_from_iv(phi: &SolutionPath, psi: &SolutionPath) -> Result<FundamentalPair> {
    let t = Transfer {
        z: phi.z,
        m: CMat2::new(
            *phi.value.last().expect("nonempty"),
            *psi.value.last().expect("nonempty"),
            *phi.flux.last().expect("nonempty"),
            *psi.flux.last().expect("nonempty"),
        ),
    };
    let [c1, c2] = t.dirichlet_coefficients()?;
    let mut u1 = phi.combine(c1[0], psi, c1[1]);
    let mut u2 = phi.combine(c2[0], psi, c2[1]);
    let n = u1.value.len() - 1;
    u1.value[0] = czero();
    u1.value[n] = Complex64::new(1.0, 0.0);
    u2.value[0] = Complex64::new(1.0, 0.0);
    u2.value[n] = czero();
    Ok(FundamentalPair { z: phi.z, u1, u2 })
}

/// Wronskian `W(f, g) = f (pg') - (pf') g` at `a`, with its drift along the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wronskian {
    pub value: C,
    /// `max |W(x) - W(a)|` over the grid.
    pub max_deviation: f64,
    /// Size of the products entering `W`, for relative comparisons.
    pub scale: f64,
}

pub fn wronskian(f: &SolutionPath, g: &SolutionPath) -> Result<Wronskian> {
    if !f.same_grid(g) || f.z != g.z {
        return Err(Error::GridMismatch);
    }
    let w = |i: usize| f.value[i] * g.flux[i] - f.flux[i] * g.value[i];
    let value = w(0);
    let mut max_deviation: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..f.value.len() {
        max_deviation = max_deviation.max((w(i) - value).norm());
        scale = scale.max(f.value[i].norm() * g.flux[i].norm() + f.flux[i].norm() * g.value[i].norm());
    }
    Ok(Wronskian { value, max_deviation, scale })
}

/// `int r conj(f) g` by composite Simpson on the shared grid.
pub fn l2_inner(f: &SolutionPath, g: &SolutionPath) -> Result<C> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    let grid = &f.grid;
    Ok(grid.simpson(|i, seg| f.value[i].conj() * g.value[i] * grid.weight(i, seg)))
}

/// `int r conj(f) g` for solutions at `z_f`, `z_g` from boundary values alone,
/// via `d/dx W(conj f, g) = (conj(z_f) - z_g) r conj(f) g`.
///
/// Returns `None` when `conj(z_f) = z_g`, where the identity carries no information.
pub fn inner_by_wronskian(f: &BoundaryFrame, z_f: C, g: &BoundaryFrame, z_g: C) -> Option<C> {
    let denom = z_f.conj() - z_g;
    if denom.norm() < 1e-14 {
        return None;
    }
    let fc = f.conj();
    let w_a = fc.value_a * g.flux_a - fc.flux_a * g.value_a;
    let w_b = fc.value_b * g.flux_b - fc.flux_b * g.value_b;
    Some((w_b - w_a) / denom)
}

/// Gram matrix `G[j][k] = (u_j, u_k)` of a list of paths by quadrature.
pub fn gram_quadrature(basis: &[&SolutionPath; 2]) -> Result<CMat2> {
    let mut g = CMat2::zero();
    for j in 0..2 {
        for k in 0..2 {
            g[(j, k)] = l2_inner(basis[j], basis[k])?;
        }
    }
    Ok(g)
}

/// Gram matrix of two solutions at the same non-real `z` from boundary values.
pub fn gram_wronskian(frames: &[BoundaryFrame; 2], z: C) -> CMat2 {
    let mut g = CMat2::zero();
    for j in 0..2 {
        for k in 0..2 {
            g[(j, k)] = inner_by_wronskian(&frames[j], z, &frames[k], z).expect("z is not real");
        }
    }
    g
}

/// Bases of the deficiency subspaces at `+i` and `-i` in `(u1, u2)` order.
#[derive(Clone, Debug)]
pub struct DeficiencyBasis {
    pub plus: FundamentalPair,
    pub minus: FundamentalPair,
    pub gram_plus: CMat2,
    pub gram_minus: CMat2,
    /// Largest entry difference between quadrature and boundary-value Gram matrices.
    pub gram_residual: f64,
}

/// Grid size used for deficiency-subspace quadrature.
pub const DEFICIENCY_GRID_POINTS: usize = 1025;

pub fn deficiency_basis(problem: &Problem, tol: f64) -> Result<DeficiencyBasis> {
    let grid = Arc::new(Grid::for_problem(problem, DEFICIENCY_GRID_POINTS, &[]));
    let i = Complex64::new(0.0, 1.0);
    let plus = fundamental_pair_on(problem, &grid, i, tol)?;
    let minus = fundamental_pair_on(problem, &grid, -i, tol)?;
    let gram_plus = gram_quadrature(&[&plus.u1, &plus.u2])?;
    let gram_minus = gram_quadrature(&[&minus.u1, &minus.u2])?;
    let wp = gram_wronskian(&[plus.u1.frame(), plus.u2.frame()], i);
    let wm = gram_wronskian(&[minus.u1.frame(), minus.u2.frame()], -i);
    let gram_residual = gram_plus.dist(&wp).max(gram_minus.dist(&wm));
    if gram_residual > 1e3 * tol {
        return Err(Error::GramMismatch { residual: gram_residual });
    }
    Ok(DeficiencyBasis { plus, minus, gram_plus, gram_minus, gram_residual })
}
