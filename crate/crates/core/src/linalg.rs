//! Fixed-size 2x2 complex matrices.
//!
//! Every matrix in this crate is 2x2, so the closed forms for determinants,
//! inverses, singular values and Hermitian eigenvalues are used directly.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::Scalar;

/// Column vector of two complex entries.
pub type Vec2<T> = [Complex<T>; 2];

/// Row-major 2x2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn from_real(rows: [[T; 2]; 2]) -> Self {
        let c = |v: T| Complex::new(v, T::zero());
        Self::new(c(rows[0][0]), c(rows[0][1]), c(rows[1][0]), c(rows[1][1]))
    }

    pub fn from_columns(c0: Vec2<T>, c1: Vec2<T>) -> Self {
        Self::new(c0[0], c1[0], c0[1], c1[1])
    }

    pub fn zero() -> Self {
        Self::from_real([[T::zero(); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    /// The exchange matrix [[0,1],[1,0]].
    pub fn exchange() -> Self {
        Self::from_real([[T::zero(), T::one()], [T::one(), T::zero()]])
    }

    pub fn diag(a: Complex<T>, d: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(a, z, z, d)
    }

    pub fn column(&self, j: usize) -> Vec2<T> {
        [self.m[0][j], self.m[1][j]]
    }

    pub fn row(&self, i: usize) -> Vec2<T> {
        self.m[i]
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn adjugate(&self) -> Self {
        Self::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0])
    }

    /// Inverse, or `None` when the determinant is exactly zero or not finite.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm_sqr() == T::zero() || !(d.re.is_finite() && d.im.is_finite()) {
            return None;
        }
        Some(self.adjugate().scale(d.inv()))
    }

    /// Inverse guarded by a relative singularity threshold on the determinant.
    pub fn inverse_rel(&self, rel: T) -> Option<Self> {
        let n = self.max_norm();
        if self.det().norm() <= rel * n * n {
            return None;
        }
        self.inverse()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.m[0][0].conj(), self.m[1][0].conj(), self.m[0][1].conj(), self.m[1][1].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self::new(f(self.m[0][0]), f(self.m[0][1]), f(self.m[1][0]), f(self.m[1][1]))
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|v| v * c)
    }

    pub fn scale_re(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    pub fn mul_vec(&self, v: &Vec2<T>) -> Vec2<T> {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |acc, v| acc + v.norm_sqr()).sqrt()
    }

    /// Singular values `(largest, smallest)`.
    pub fn singular_values(&self) -> (T, T) {
        let f2 = self.m.iter().flatten().fold(T::zero(), |acc, v| acc + v.norm_sqr());
        let d = self.det().norm();
        let two = T::lit(2.0);
        let disc = (f2 * f2 - T::lit(4.0) * d * d).max(T::zero()).sqrt();
        let smax = ((f2 + disc) / two).sqrt();
        let smin = if smax > T::zero() { d / smax } else { T::zero() };
        (smax, smin)
    }

    /// Numerical rank with a threshold relative to `scale`.
    pub fn rank(&self, rel: T, scale: T) -> usize {
        let (smax, smin) = self.singular_values();
        let cut = rel * scale;
        usize::from(smax > cut) + usize::from(smin > cut)
    }

    /// `(M - M*) / 2i`, the imaginary part of a square matrix.
    pub fn im_part(&self) -> Self {
        let two_i = Complex::new(T::zero(), T::lit(2.0));
        (*self - self.adjoint()).scale(two_i.inv())
    }

    /// Eigenvalues `(smaller, larger)` of the Hermitian part of `self`.
    pub fn hermitian_eigenvalues(&self) -> (T, T) {
        let h = (*self + self.adjoint()).scale_re(T::lit(0.5));
        let a = h.m[0][0].re;
        let d = h.m[1][1].re;
        let half = T::lit(0.5);
        let mid = (a + d) * half;
        let rad = (((a - d) * half).powi(2) + h.m[0][1].norm_sqr()).sqrt();
        (mid - rad, mid + rad)
    }

    /// Eigenvalues of a general 2x2 matrix.
    pub fn eigenvalues(&self) -> (Complex<T>, Complex<T>) {
        let half = T::lit(0.5);
        let tr = self.trace();
        let disc = (tr * tr * half * half - self.det()).sqrt();
        (tr * half + disc, tr * half - disc)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Max-entry distance to another matrix.
    pub fn dist(&self, other: &Self) -> T {
        (*self - *other).max_norm()
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Scalar> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|v| -v)
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T> Index<(usize, usize)> for Mat2<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.m[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat2<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.m[i][j]
    }
}

/// Inner product `a* b` of two column vectors.
pub fn dot_conj<T: Scalar>(a: &Vec2<T>, b: &Vec2<T>) -> Complex<T> {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

pub fn vec_norm<T: Scalar>(a: &Vec2<T>) -> T {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}
