//! Seeded random boundary conditions and frames for property checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::boundary::{ABPair, CoupledBC, SeparatedBC, UnitaryBC};
use crate::propagate::BoundaryFrame;
use crate::{CMat2, C};

fn complex<R: Rng>(rng: &mut R) -> C {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A random 2x2 unitary `[[a, b], [-e^{id} conj b, e^{id} conj a]]`.
pub fn unitary<R: Rng>(rng: &mut R) -> CMat2 {
    let (a, b) = loop {
        let (a, b) = (complex(rng), complex(rng));
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n > 0.1 {
            break (a / n, b / n);
        }
    };
    let e = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    CMat2::new(a, b, -e * b.conj(), e * a.conj())
}

/// A random matrix with condition number at most 100.
pub fn nonsingular<R: Rng>(rng: &mut R) -> CMat2 {
    loop {
        let m = CMat2::new(complex(rng), complex(rng), complex(rng), complex(rng));
        let (hi, lo) = m.singular_values();
        if lo * 100.0 > hi {
            return m;
        }
    }
}

/// A random self-adjoint condition, presented through a random left factor.
pub fn ab_pair<R: Rng>(rng: &mut R) -> ABPair {
    let u = UnitaryBC::new(unitary(rng)).expect("constructed unitary");
    let c = nonsingular(rng);
    u.to_ab().left_multiply(&c).expect("left factor is nonsingular")
}

pub fn frame<R: Rng>(rng: &mut R) -> BoundaryFrame {
    BoundaryFrame::new(complex(rng), complex(rng), complex(rng), complex(rng))
}

/// Random angles in `[0, pi)`, each zero with probability 1/5.
pub fn separated<R: Rng>(rng: &mut R) -> SeparatedBC {
    let mut angle = || {
        if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen_range(0.05..PI - 0.05)
        }
    };
    let (ta, tb) = (angle(), angle());
    SeparatedBC::new(ta, tb).expect("angles in range")
}

/// A random coupled condition, with `F_12 = 0` when `f12_zero` is set.
pub fn coupled<R: Rng>(rng: &mut R, f12_zero: bool) -> CoupledBC {
    let phi = rng.gen_range(0.0..PI);
    let f11 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let f = if f12_zero {
        [[f11, 0.0], [rng.gen_range(-2.0..2.0), 1.0 / f11]]
    } else {
        let f12 = rng.gen_range(0.3..2.0);
        let f21 = rng.gen_range(-2.0..2.0);
        [[f11, f12], [f21, (1.0 + f12 * f21) / f11]]
    };
    CoupledBC::new(phi, f).expect("det F = 1")
}
