//! Dormand-Prince 5(4) embedded Runge-Kutta pair on complex state vectors.
//!
//! The state is a list of `(value, flux)` pairs. Error control is relative per
//! component, with a floor proportional to the size of the owning pair so that
//! a component passing through zero does not stall the step size.

use num_complex::Complex;

use crate::scalar::Scalar;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th and the embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control settings.
#[derive(Clone, Copy, Debug)]
pub struct RkOptions<T> {
    /// Relative local error target per step.
    pub rtol: T,
    /// Fraction of the owning pair's magnitude used as an error floor.
    pub pair_floor: T,
    pub max_steps: usize,
}

impl<T: Scalar> RkOptions<T> {
    pub fn new(rtol: T) -> Self {
        Self { rtol, pair_floor: T::lit(1e-3), max_steps: 500_000 }
    }
}

/// Where and why an adaptive integration gave up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepFailure<T> {
    pub x: T,
}

type State<T, const N: usize> = [Complex<T>; N];

fn axpy<T: Scalar, const N: usize>(y: &State<T, N>, terms: &[(T, &State<T, N>)], h: T) -> State<T, N> {
    let mut out = *y;
    for (c, k) in terms {
        let w = *c * h;
        for i in 0..N {
            out[i] += k[i] * w;
        }
    }
    out
}

/// One Dormand-Prince step. Returns the 5th order solution, the error estimate
/// and the derivative at the new point (first-same-as-last).
fn dp_step<T, F, const N: usize>(
    f: &F,
    x: T,
    y: &State<T, N>,
    k1: &State<T, N>,
    h: T,
) -> (State<T, N>, State<T, N>, State<T, N>)
where
    T: Scalar,
    F: Fn(T, &State<T, N>) -> State<T, N>,
{
    let l = T::lit;
    let k2 = f(x + l(C2) * h, &axpy(y, &[(l(A21), k1)], h));
    let k3 = f(x + l(C3) * h, &axpy(y, &[(l(A31), k1), (l(A32), &k2)], h));
    let k4 = f(x + l(C4) * h, &axpy(y, &[(l(A41), k1), (l(A42), &k2), (l(A43), &k3)], h));
    let k5 = f(x + l(C5) * h, &axpy(y, &[(l(A51), k1), (l(A52), &k2), (l(A53), &k3), (l(A54), &k4)], h));
    let k6 = f(x + h, &axpy(y, &[(l(A61), k1), (l(A62), &k2), (l(A63), &k3), (l(A64), &k4), (l(A65), &k5)], h));
    let y_new = axpy(y, &[(l(B1), k1), (l(B3), &k3), (l(B4), &k4), (l(B5), &k5), (l(B6), &k6)], h);
    let k7 = f(x + h, &y_new);
    let mut err = [Complex::new(T::zero(), T::zero()); N];
    for i in 0..N {
        err[i] = (k1[i] * l(E1) + k3[i] * l(E3) + k4[i] * l(E4) + k5[i] * l(E5) + k6[i] * l(E6) + k7[i] * l(E7)) * h;
    }
    (y_new, err, k7)
}

fn error_ratio<T: Scalar, const N: usize>(
    y: &State<T, N>,
    y_new: &State<T, N>,
    err: &State<T, N>,
    opts: &RkOptions<T>,
) -> T {
    let tiny = T::min_positive_value().sqrt();
    let mut worst = T::zero();
    for pair in 0..N / 2 {
        let (i, j) = (2 * pair, 2 * pair + 1);
        let size = y[i].norm().max(y[j].norm()).max(y_new[i].norm()).max(y_new[j].norm());
        for k in [i, j] {
            let scale = y[k].norm().max(y_new[k].norm()).max(opts.pair_floor * size);
            let ratio = err[k].norm() / (opts.rtol * scale + tiny);
            worst = worst.max(ratio);
        }
    }
    worst
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` adaptively.
///
/// `h` is the initial step guess and receives the last accepted step size.
/// Accepted step end points are appended to `mesh` when given.
pub fn integrate<T, F, const N: usize>(
    f: &F,
    x0: T,
    x1: T,
    y0: State<T, N>,
    h: &mut T,
    opts: &RkOptions<T>,
    mut mesh: Option<&mut Vec<T>>,
) -> Result<State<T, N>, StepFailure<T>>
where
    T: Scalar,
    F: Fn(T, &State<T, N>) -> State<T, N>,
{
    let span = x1 - x0;
    if span <= T::zero() {
        return Ok(y0);
    }
    let min_h = span * T::lit(1e-13);
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut step = h.abs().min(span).max(min_h);
    let mut rejected = false;
    for _ in 0..opts.max_steps {
        let remaining = x1 - x;
        let last = step >= remaining * T::lit(0.999_999);
        let hh = if last { remaining } else { step };
        let (y_new, err, k7) = dp_step(f, x, &y, &k1, hh);
        let ratio = error_ratio(&y, &y_new, &err, opts);
        if !ratio.is_finite() {
            step = hh * T::lit(0.2);
            rejected = true;
            if step < min_h {
                return Err(StepFailure { x });
            }
            continue;
        }
        let fac = if ratio == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * ratio.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
        };
        if ratio <= T::one() {
            x = if last { x1 } else { x + hh };
            y = y_new;
            k1 = k7;
            if let Some(m) = mesh.as_deref_mut() {
                m.push(x);
            }
            if !last {
                *h = hh;
            }
            if last {
                return Ok(y);
            }
            step = if rejected { hh.min(hh * fac) } else { hh * fac };
            rejected = false;
        } else {
            step = hh * fac.min(T::one());
            rejected = true;
            if step < min_h {
                return Err(StepFailure { x });
            }
        }
    }
    Err(StepFailure { x })
}

/// Replay an integration on a fixed list of step end points (starting at `x0`).
pub fn integrate_on_mesh<T, F, const N: usize>(f: &F, x0: T, mesh: &[T], y0: State<T, N>) -> State<T, N>
where
    T: Scalar,
    F: Fn(T, &State<T, N>) -> State<T, N>,
{
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    for &xn in mesh {
        let (y_new, _, k7) = dp_step(f, x, &y, &k1, xn - x);
        x = xn;
        y = y_new;
        k1 = k7;
    }
    y
}
