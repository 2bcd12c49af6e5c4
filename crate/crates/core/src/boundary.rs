//! Self-adjoint boundary conditions in their four parametrizations, and the
//! trace-map algebra that connects them.
//!
//! A condition `A (u(a), pu'(a))^T - B (u(b), pu'(b))^T = 0` is stored as an
//! [`ABPair`]. Equivalence classes are keyed by the unitary of
//! [`ABPair::to_unitary`], which is unique for each self-adjoint extension.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagate::BoundaryFrame;
use crate::{CMat2, CVec2};

/// Relative singular value threshold for rank decisions.
pub const RANK_REL: f64 = 1e-10;
/// Tolerance on the Lagrangian and unitarity identities of unit-scaled matrices.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance on unitaries when deciding equivalence.
pub const EQUIVALENCE_TOL: f64 = 1e-10;
/// Angles within this distance of the top of their range snap to zero.
pub const ANGLE_SNAP: f64 = 1e-12;

fn symplectic() -> CMat2 {
    CMat2::from_real([[0.0, -1.0], [1.0, 0.0]])
}

/// Rank of the 2x4 matrix `(X Y)` from the Hermitian product `XX* + YY*`.
fn joint_rank(x: &CMat2, y: &CMat2) -> usize {
    let g = *x * x.adjoint() + *y * y.adjoint();
    let (lo, hi) = g.hermitian_eigenvalues();
    if hi <= 0.0 {
        0
    } else if lo <= RANK_REL * RANK_REL * hi {
        1
    } else {
        2
    }
}

/// A validated boundary pair `(A, B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ABPair {
    a: CMat2,
    b: CMat2,
}

/// Check `rank (A B) = 2` and `A J A* = B J B*`.
pub fn validate_ab(a: CMat2, b: CMat2) -> Result<ABPair> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter("boundary matrices must be finite".into()));
    }
    let rank = joint_rank(&a, &b);
    if rank < 2 {
        return Err(Error::RankDeficient { rank });
    }
    let s = a.max_norm().max(b.max_norm());
    let (au, bu) = (a.scale_re(1.0 / s), b.scale_re(1.0 / s));
    let j = symplectic();
    let residual = (au * j * au.adjoint()).dist(&(bu * j * bu.adjoint()));
    if residual > IDENTITY_TOL {
        return Err(Error::NotLagrangian { residual });
    }
    Ok(ABPair { a, b })
}

impl ABPair {
    pub fn new(a: CMat2, b: CMat2) -> Result<Self> {
        validate_ab(a, b)
    }

    pub fn a(&self) -> &CMat2 {
        &self.a
    }

    pub fn b(&self) -> &CMat2 {
        &self.b
    }

    pub fn dirichlet() -> Self {
        SeparatedBC::DIRICHLET.to_ab()
    }

    pub fn neumann() -> Self {
        Self { a: CMat2::from_real([[0.0, 1.0], [0.0, 0.0]]), b: CMat2::from_real([[0.0, 0.0], [0.0, 1.0]]) }
    }

    pub fn periodic() -> Self {
        Self { a: CMat2::identity(), b: CMat2::identity() }
    }

    pub fn antiperiodic() -> Self {
        Self { a: -CMat2::identity(), b: CMat2::identity() }
    }

    /// The equivalent pair `(CA, CB)`.
    pub fn left_multiply(&self, c: &CMat2) -> Result<Self> {
        validate_ab(*c * self.a, *c * self.b)
    }

    /// `gamma(u) = A (u(a), pu'(a))^T - B (u(b), pu'(b))^T`.
    pub fn apply_trace(&self, frame: &BoundaryFrame) -> CVec2 {
        let ya = self.a.mul_vec(&frame.at_a());
        let yb = self.b.mul_vec(&frame.at_b());
        [ya[0] - yb[0], ya[1] - yb[1]]
    }

    /// The trace matrix `[gamma(y1) gamma(y2)] = A - B T` of a basis whose
    /// values at `a` are the identity and at `b` are the columns of `t`.
    pub fn trace_of_transfer(&self, t: &CMat2) -> CMat2 {
        self.a - self.b * *t
    }

    pub fn trace_matrices(&self) -> TraceMatrices {
        let (a, b) = (&self.a, &self.b);
        let d = CMat2::new(a[(0, 0)], -b[(0, 0)], a[(1, 0)], -b[(1, 0)]);
        let n = CMat2::new(a[(0, 1)], b[(0, 1)], a[(1, 1)], b[(1, 1)]);
        TraceMatrices::from_dn(d, n)
    }

    pub fn to_dn(&self) -> DNPair {
        let t = self.trace_matrices();
        DNPair { xd: t.d, xn: t.n }
    }

    pub fn to_unitary(&self) -> UnitaryBC {
        self.to_dn().to_unitary()
    }

    /// Whether both pairs describe the same self-adjoint extension.
    pub fn equivalent(&self, other: &ABPair) -> bool {
        self.to_unitary().u.dist(&other.to_unitary().u) < EQUIVALENCE_TOL
    }

    /// Rank of `A` by relative singular values.
    pub fn rank_a(&self) -> usize {
        let (smax, _) = self.a.singular_values();
        self.a.rank(RANK_REL, smax)
    }

    /// The unique separated or coupled representative of the class.
    pub fn canonicalize(&self) -> Result<CanonicalBC> {
        match self.rank_a() {
            1 => Ok(CanonicalBC::Separated(self.separated_angles())),
            2 => self.coupled_form().map(CanonicalBC::Coupled),
            rank => Err(Error::RankDeficient { rank }),
        }
    }

    fn separated_angles(&self) -> SeparatedBC {
        // The row of the condition that involves only `a` comes from the left
        // null vector of B, the row involving only `b` from that of A.
        let row_a = dot_row(&left_null(&self.b), &self.a);
        let row_b = dot_row(&left_null(&self.a), &self.b);
        let (ca, sa) = real_direction(row_a);
        let (cb, sb) = real_direction(row_b);
        SeparatedBC { theta_a: wrap_angle(sa.atan2(ca), PI), theta_b: wrap_angle(sb.atan2(-cb), PI) }
    }

    fn coupled_form(&self) -> Result<CoupledBC> {
        let binv = self.b.inverse_rel(RANK_REL).ok_or(Error::RankDeficient { rank: 1 })?;
        let m = binv * self.a;
        let mut phi = (m.det().arg() / 2.0).rem_euclid(PI);
        if PI - phi < ANGLE_SNAP {
            phi = 0.0;
        }
        let f = m.scale(Complex64::from_polar(1.0, -phi));
        // det(F) = 1 fixes F only up to sign together with phi; the sign is
        // settled by restricting phi to [0, pi).
        let mut fr = [[0.0; 2]; 2];
        for (i, row) in fr.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f[(i, j)].re;
            }
        }
        CoupledBC::new(phi, fr)
    }
}

fn left_null(m: &CMat2) -> CVec2 {
    let (c0, c1) = (m.column(0), m.column(1));
    let n0 = c0[0].norm_sqr() + c0[1].norm_sqr();
    let n1 = c1[0].norm_sqr() + c1[1].norm_sqr();
    let v = if n0 >= n1 { c0 } else { c1 };
    [v[1], -v[0]]
}

fn dot_row(c: &CVec2, m: &CMat2) -> CVec2 {
    [c[0] * m[(0, 0)] + c[1] * m[(1, 0)], c[0] * m[(0, 1)] + c[1] * m[(1, 1)]]
}

/// Rotate a complex 2-vector that is a multiple of a real one onto the reals.
fn real_direction(v: CVec2) -> (f64, f64) {
    let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = pivot.conj() / pivot.norm();
    ((v[0] * phase).re, (v[1] * phase).re)
}

fn wrap_angle(theta: f64, period: f64) -> f64 {
    let t = theta.rem_euclid(period);
    if period - t < ANGLE_SNAP {
        0.0
    } else {
        t
    }
}

/// Matrices `D, N` with `gamma = D gamma_D + N gamma_N`, and the complementary
/// pair `D_perp, N_perp`.
///
/// Here `gamma_D u = (u(a), u(b))` and `gamma_N u = (pu'(a), -pu'(b))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceMatrices {
    pub d: CMat2,
    pub n: CMat2,
    pub d_perp: CMat2,
    pub n_perp: CMat2,
}

impl TraceMatrices {
    pub fn from_dn(d: CMat2, n: CMat2) -> Self {
        let g = d * d.adjoint() + n * n.adjoint();
        let ginv = g.inverse().expect("DD* + NN* is invertible for a rank-2 pair");
        TraceMatrices { d, n, d_perp: -(ginv * n), n_perp: ginv * d }
    }

    /// Trace matrices of the complementary trace map.
    pub fn complement(&self) -> TraceMatrices {
        TraceMatrices::from_dn(self.d_perp, self.n_perp)
    }

    pub fn apply(&self, frame: &BoundaryFrame) -> CVec2 {
        apply_dn(&self.d, &self.n, frame)
    }

    pub fn apply_perp(&self, frame: &BoundaryFrame) -> CVec2 {
        apply_dn(&self.d_perp, &self.n_perp, frame)
    }
}

fn apply_dn(d: &CMat2, n: &CMat2, frame: &BoundaryFrame) -> CVec2 {
    let x = d.mul_vec(&frame.dirichlet_trace());
    let y = n.mul_vec(&frame.neumann_trace());
    [x[0] + y[0], x[1] + y[1]]
}

/// `T` and `S` with `gamma_to = T gamma_from + S gamma_from_perp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connection {
    pub t: CMat2,
    pub s: CMat2,
}

pub fn connection_matrices(to: &ABPair, from: &ABPair) -> Connection {
    let f = from.trace_matrices();
    let g = to.trace_matrices();
    Connection { t: g.d * f.n_perp.adjoint() - g.n * f.d_perp.adjoint(), s: g.n * f.d.adjoint() - g.d * f.n.adjoint() }
}

/// A condition in the form `X_D gamma_D + X_N gamma_N = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DNPair {
    xd: CMat2,
    xn: CMat2,
}

impl DNPair {
    pub fn new(xd: CMat2, xn: CMat2) -> Result<Self> {
        let rank = joint_rank(&xd, &xn);
        if rank < 2 {
            return Err(Error::RankDeficient { rank });
        }
        let s = xd.max_norm().max(xn.max_norm());
        let (d, n) = (xd.scale_re(1.0 / s), xn.scale_re(1.0 / s));
        let residual = (d * n.adjoint()).dist(&(n * d.adjoint()));
        if residual > IDENTITY_TOL {
            return Err(Error::NotLagrangian { residual });
        }
        Ok(Self { xd, xn })
    }

    pub fn xd(&self) -> &CMat2 {
        &self.xd
    }

    pub fn xn(&self) -> &CMat2 {
        &self.xn
    }

    pub fn to_ab(&self) -> Result<ABPair> {
        let (d, n) = (&self.xd, &self.xn);
        let a = CMat2::new(d[(0, 0)], n[(0, 0)], d[(1, 0)], n[(1, 0)]);
        let b = CMat2::new(-d[(0, 1)], n[(0, 1)], -d[(1, 1)], n[(1, 1)]);
        validate_ab(a, b)
    }

    /// `U = (X_D + i X_N)^{-1} (i X_N - X_D)`.
    pub fn to_unitary(&self) -> UnitaryBC {
        let i = Complex64::i();
        let lhs = self.xd + self.xn.scale(i);
        let inv = lhs.inverse().expect("X_D + i X_N is invertible for a self-adjoint condition");
        UnitaryBC { u: inv * (self.xn.scale(i) - self.xd) }
    }
}

/// A condition keyed by a unitary matrix `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitaryBC {
    u: CMat2,
}

impl UnitaryBC {
    pub fn new(u: CMat2) -> Result<Self> {
        let residual = (u * u.adjoint()).dist(&CMat2::identity());
        if !(residual <= IDENTITY_TOL) {
            return Err(Error::InvalidParameter(format!("matrix is not unitary (residual {residual:e})")));
        }
        Ok(Self { u })
    }

    pub fn matrix(&self) -> &CMat2 {
        &self.u
    }

    /// `X_D = (i/2)(I - U)`, `X_N = (U + I)/2`.
    pub fn to_dn(&self) -> DNPair {
        let id = CMat2::identity();
        DNPair { xd: (id - self.u).scale(Complex64::new(0.0, 0.5)), xn: (self.u + id).scale_re(0.5) }
    }

    pub fn to_ab(&self) -> ABPair {
        self.to_dn().to_ab().expect("a unitary yields a valid boundary pair")
    }
}

/// `cos(theta_a) u(a) + sin(theta_a) pu'(a) = 0`,
/// `cos(theta_b) u(b) - sin(theta_b) pu'(b) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedBC {
    pub theta_a: f64,
    pub theta_b: f64,
}

impl SeparatedBC {
    pub const DIRICHLET: SeparatedBC = SeparatedBC { theta_a: 0.0, theta_b: 0.0 };
    pub const NEUMANN: SeparatedBC = SeparatedBC { theta_a: PI / 2.0, theta_b: PI / 2.0 };

    pub fn new(theta_a: f64, theta_b: f64) -> Result<Self> {
        for (name, t) in [("theta_a", theta_a), ("theta_b", theta_b)] {
            if !(0.0..PI).contains(&t) {
                return Err(Error::InvalidParameter(format!("{name} = {t} is outside [0, pi)")));
            }
        }
        Ok(Self { theta_a, theta_b })
    }

    pub fn to_ab(&self) -> ABPair {
        separated_ab(self.theta_a, self.theta_b)
    }
}

/// The separated pair for arbitrary angles, without reducing them into `[0, pi)`.
///
/// Angles outside the canonical range give the same extension as their
/// reduction, but a differently scaled trace map.
pub fn separated_ab(theta_a: f64, theta_b: f64) -> ABPair {
    let (sa, ca) = theta_a.sin_cos();
    let (sb, cb) = theta_b.sin_cos();
    ABPair { a: CMat2::from_real([[ca, sa], [0.0, 0.0]]), b: CMat2::from_real([[0.0, 0.0], [-cb, sb]]) }
}

/// `(u(b), pu'(b))^T = e^{i phi} F (u(a), pu'(a))^T` with `F` in `SL(2, R)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledBC {
    pub phi: f64,
    #[serde(rename = "F")]
    pub f: [[f64; 2]; 2],
}

impl CoupledBC {
    pub fn new(phi: f64, f: [[f64; 2]; 2]) -> Result<Self> {
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::InvalidParameter(format!("phi = {phi} is outside [0, 2 pi)")));
        }
        let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
        let scale = f.iter().flatten().fold(1f64, |m, v| m.max(v.abs()));
        if !((det - 1.0).abs() <= IDENTITY_TOL * scale * scale) {
            return Err(Error::InvalidParameter(format!("det F = {det} differs from 1")));
        }
        Ok(Self { phi, f })
    }

    pub fn periodic() -> Self {
        Self { phi: 0.0, f: [[1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn f_matrix(&self) -> CMat2 {
        CMat2::from_real(self.f)
    }

    /// The pair `(e^{i phi} F, I)`.
    pub fn to_ab(&self) -> ABPair {
        ABPair { a: self.f_matrix().scale(Complex64::from_polar(1.0, self.phi)), b: CMat2::identity() }
    }
}

/// The unique separated or coupled representative of a self-adjoint extension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CanonicalBC {
    Separated(SeparatedBC),
    Coupled(CoupledBC),
}

impl CanonicalBC {
    pub fn to_ab(&self) -> ABPair {
        match self {
            CanonicalBC::Separated(s) => s.to_ab(),
            CanonicalBC::Coupled(c) => c.to_ab(),
        }
    }
}

/// Names accepted in `{"kind": "named"}` documents.
pub const NAMED_BCS: [&str; 5] = ["dirichlet", "neumann", "periodic", "antiperiodic", "kvn"];

/// Complex matrix on the wire: four `[re, im]` pairs in row-major order.
pub type WireMatrix = [[f64; 2]; 4];

pub fn matrix_to_wire(m: &CMat2) -> WireMatrix {
    let e = |i: usize, j: usize| [m[(i, j)].re, m[(i, j)].im];
    [e(0, 0), e(0, 1), e(1, 0), e(1, 1)]
}

pub fn matrix_from_wire(w: &WireMatrix) -> CMat2 {
    let c = |v: [f64; 2]| Complex64::new(v[0], v[1]);
    CMat2::new(c(w[0]), c(w[1]), c(w[2]), c(w[3]))
}

/// Wire format of a boundary condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BcDoc {
    Ab {
        #[serde(rename = "A")]
        a: WireMatrix,
        #[serde(rename = "B")]
        b: WireMatrix,
    },
    Dn {
        #[serde(rename = "XD")]
        xd: WireMatrix,
        #[serde(rename = "XN")]
        xn: WireMatrix,
    },
    Separated {
        theta_a: f64,
        theta_b: f64,
    },
    Coupled {
        phi: f64,
        #[serde(rename = "F")]
        f: [[f64; 2]; 2],
    },
    Unitary {
        #[serde(rename = "U")]
        u: WireMatrix,
    },
    Named {
        name: String,
    },
}

impl BcDoc {
    pub fn named(name: &str) -> Self {
        BcDoc::Named { name: name.to_string() }
    }

    /// Whether the document needs a problem to resolve (the Krein-von Neumann extension).
    pub fn is_kvn(&self) -> bool {
        matches!(self, BcDoc::Named { name } if name == "kvn")
    }

    /// Resolve to a boundary pair; `kvn` needs a problem and is rejected here.
    pub fn to_ab(&self) -> Result<ABPair> {
        match self {
            BcDoc::Ab { a, b } => validate_ab(matrix_from_wire(a), matrix_from_wire(b)),
            BcDoc::Dn { xd, xn } => DNPair::new(matrix_from_wire(xd), matrix_from_wire(xn))?.to_ab(),
            BcDoc::Separated { theta_a, theta_b } => Ok(SeparatedBC::new(*theta_a, *theta_b)?.to_ab()),
            BcDoc::Coupled { phi, f } => Ok(CoupledBC::new(*phi, *f)?.to_ab()),
            BcDoc::Unitary { u } => Ok(UnitaryBC::new(matrix_from_wire(u))?.to_ab()),
            BcDoc::Named { name } => match name.as_str() {
                "dirichlet" => Ok(ABPair::dirichlet()),
                "neumann" => Ok(ABPair::neumann()),
                "periodic" => Ok(ABPair::periodic()),
                "antiperiodic" => Ok(ABPair::antiperiodic()),
                "kvn" => Err(Error::InvalidParameter("the kvn condition depends on the problem".into())),
                other => Err(Error::InvalidParameter(format!("unknown boundary condition `{other}`"))),
            },
        }
    }

    pub fn from_ab(ab: &ABPair) -> Self {
        BcDoc::Ab { a: matrix_to_wire(ab.a()), b: matrix_to_wire(ab.b()) }
    }

    pub fn from_dn(dn: &DNPair) -> Self {
        BcDoc::Dn { xd: matrix_to_wire(dn.xd()), xn: matrix_to_wire(dn.xn()) }
    }

    pub fn from_unitary(u: &UnitaryBC) -> Self {
        BcDoc::Unitary { u: matrix_to_wire(u.matrix()) }
    }

    pub fn from_canonical(c: &CanonicalBC) -> Self {
        match c {
            CanonicalBC::Separated(s) => BcDoc::Separated { theta_a: s.theta_a, theta_b: s.theta_b },
            CanonicalBC::Coupled(c) => BcDoc::Coupled { phi: c.phi, f: c.f },
        }
    }
}

/// Decomposition check helper: `|gamma(frame) - (D gamma_D + N gamma_N)(frame)|`.
pub fn decomposition_residual(ab: &ABPair, frame: &BoundaryFrame) -> f64 {
    let x = ab.apply_trace(frame);
    let y = ab.trace_matrices().apply(frame);
    (x[0] - y[0]).norm().max((x[1] - y[1]).norm())
}

/// `e^{i phi} F` as a complex matrix, for callers that need the coupling matrix itself.
pub fn coupling_matrix(c: &CoupledBC) -> CMat2 {
    c.f_matrix().scale(Complex64::from_polar(1.0, c.phi))
}
