//! Eigenvalues in a window by scanning a real rotation of the characteristic
//! function, with a contour count as a completeness check.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use roots::{find_root_brent, Convergency};
use serde::Serialize;

use super::normalized_char;
use crate::bdm::trace_matrix;
use crate::boundary::ABPair;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::propagate::transfer;
use crate::C;

/// Largest `|M| / scale` at which a no-sign-change minimum counts as a double root.
const DOUBLE_ROOT: f64 = 1e-6;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    pub mult: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub bc: ABPair,
    pub eigenvalues: Vec<Eigenvalue>,
    pub window: (f64, f64),
    pub tol: f64,
    /// Number of zeros enclosed by the validating contour.
    pub contour_count: i64,
    /// Largest imaginary part of the de-rotated characteristic function on the
    /// scan, relative to its largest modulus; zero for exact arithmetic.
    pub rotation_defect: f64,
}

impl Spectrum {
    /// Eigenvalues repeated according to multiplicity.
    pub fn flattened(&self) -> Vec<f64> {
        self.eigenvalues.iter().flat_map(|e| std::iter::repeat_n(e.lambda, e.mult as usize)).collect()
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.mult as usize).sum()
    }
}

/// Scan settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    /// Target accuracy of each eigenvalue.
    pub tol: f64,
    /// Relative tolerance of the underlying integrator.
    pub integrator_tol: f64,
    /// Scan step as a fraction of the local eigenvalue spacing estimate.
    pub step_fraction: f64,
    /// Step halvings tried when the contour count disagrees with the scan.
    pub max_refinements: usize,
}

impl ScanOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, integrator_tol: (tol * 1e-2).clamp(1e-13, 1e-10), step_fraction: 0.25, max_refinements: 4 }
    }
}

pub fn eigenvalues(problem: &Problem, bc: &ABPair, window: (f64, f64), tol: f64) -> Result<Spectrum> {
    eigenvalues_with(problem, bc, window, &ScanOptions::new(tol))
}

pub fn eigenvalues_with(problem: &Problem, bc: &ABPair, window: (f64, f64), opts: &ScanOptions) -> Result<Spectrum> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("window ({lo}, {hi}) is not a finite interval")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let scanner = Scanner::new(problem, bc, opts);
    let mut fraction = opts.step_fraction;
    let mut last = (0, 0);
    for _ in 0..=opts.max_refinements {
        let found = scanner.scan(lo, hi, fraction)?;
        let scanned: usize = found.roots.iter().map(|e| e.mult as usize).sum();
        let height = (2.0 * found.max_step).max(0.5);
        let contour = scanner.contour_count(lo, hi, height, fraction)?;
        if contour == scanned as i64 {
            return Ok(Spectrum {
                bc: *bc,
                eigenvalues: found.roots,
                window,
                tol: opts.tol,
                contour_count: contour,
                rotation_defect: found.rotation_defect,
            });
        }
        last = (contour, scanned);
        fraction /= 2.0;
    }
    Err(Error::CountMismatch { contour: last.0, scan: last.1 })
}

struct Found {
    roots: Vec<Eigenvalue>,
    max_step: f64,
    rotation_defect: f64,
}

struct Scanner<'a> {
    problem: &'a Problem,
    bc: &'a ABPair,
    opts: &'a ScanOptions,
    spacing: f64,
    qr_max: f64,
}

/// Brent stopping rule on the bracket width only.
struct Width(f64);

impl Convergency<f64> for Width {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() < self.0
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= 200
    }
}

impl<'a> Scanner<'a> {
    fn new(problem: &'a Problem, bc: &'a ABPair, opts: &'a ScanOptions) -> Self {
        let (_, _, _, qr_max) = problem.coefficient_bounds();
        Scanner { problem, bc, opts, spacing: PI / problem.optical_length(), qr_max }
    }

    /// Normalized characteristic value and trace matrix size at `z`.
    fn eval(&self, z: C) -> Result<(C, f64)> {
        let t = transfer(self.problem, z, self.opts.integrator_tol)?;
        let (g, s) = normalized_char(self.bc, &t);
        let m = trace_matrix(self.bc, &t);
        Ok((g, m.frobenius() / s))
    }

    fn step(&self, lambda: f64, fraction: f64) -> f64 {
        let kappa = (lambda - self.qr_max).max(0.0).sqrt();
        fraction * self.spacing * (self.spacing + 2.0 * kappa)
    }

    fn scan(&self, lo: f64, hi: f64, fraction: f64) -> Result<Found> {
        let tol = self.opts.tol;
        let margin = 4.0 * tol;
        let (start, end) = (lo - margin, hi + margin);
        let mut xs = vec![start];
        let mut max_step: f64 = 0.0;
        let cap = (end - start) * fraction / 2.0;
        while *xs.last().expect("nonempty") < end {
            let x = *xs.last().expect("nonempty");
            let h = self.step(x, fraction).min(cap);
            max_step = max_step.max(h);
            xs.push((x + h).min(end));
        }
        let values: Vec<(C, f64)> = xs.par_iter().map(|&x| self.eval(Complex64::new(x, 0.0))).collect::<Result<_>>()?;
        let peak =
            values.iter().map(|v| v.0.norm()).enumerate().fold((0, 0.0), |m, (i, v)| if v > m.1 { (i, v) } else { m });
        if peak.1 == 0.0 {
            return Err(Error::InvalidParameter("characteristic function vanishes on the whole scan".into()));
        }
        let g = values[peak.0].0;
        let rotation = g.conj() / g.norm();
        let s: Vec<f64> = values.iter().map(|v| (v.0 * rotation).re).collect();
        let rotation_defect = values.iter().map(|v| (v.0 * rotation).im.abs()).fold(0.0, f64::max) / peak.1;
        let real = |x: f64| -> Result<f64> { Ok((self.eval(Complex64::new(x, 0.0))?.0 * rotation).re) };

        let mut roots: Vec<Eigenvalue> = Vec::new();
        let n = xs.len();
        for i in 0..n - 1 {
            if s[i] == 0.0 {
                roots.push(Eigenvalue { lambda: xs[i], mult: 1 });
            } else if s[i] * s[i + 1] < 0.0 {
                roots.push(Eigenvalue { lambda: self.brent(&real, xs[i], xs[i + 1])?, mult: 1 });
            }
        }
        for i in 1..n - 1 {
            let same_sign = s[i - 1] * s[i] > 0.0 && s[i] * s[i + 1] > 0.0;
            if !(same_sign && s[i].abs() < s[i - 1].abs() && s[i].abs() <= s[i + 1].abs()) {
                continue;
            }
            let sigma = s[i].signum();
            let (a, b) = (xs[i - 1], xs[i + 1]);
            let (m, fm) = golden_min(|x| Ok(sigma * real(x)?), a, b, tol)?;
            if fm < 0.0 {
                roots.push(Eigenvalue { lambda: self.brent(&real, a, m)?, mult: 1 });
                roots.push(Eigenvalue { lambda: self.brent(&real, m, b)?, mult: 1 });
                continue;
            }
            let size = |x: f64| -> Result<f64> { Ok(self.eval(Complex64::new(x, 0.0))?.1) };
            let (m, fm) = golden_min(size, a, b, tol)?;
            if fm < DOUBLE_ROOT {
                roots.push(Eigenvalue { lambda: m, mult: 2 });
            }
        }
        roots.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
        roots.dedup_by(|x, y| (x.lambda - y.lambda).abs() < tol && x.mult == 1 && y.mult == 1);
        if let Some(e) = roots.iter().find(|e| (e.lambda - lo).abs() <= margin || (e.lambda - hi).abs() <= margin) {
            return Err(Error::WindowEdgeEigenvalue { lambda: e.lambda });
        }
        roots.retain(|e| e.lambda > lo && e.lambda < hi);
        Ok(Found { roots, max_step, rotation_defect })
    }

    fn brent(&self, f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let g = |x: f64| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        };
        let root = find_root_brent(a, b, g, &mut Width(0.5 * self.opts.tol));
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        root.map_err(|e| Error::InvalidParameter(format!("root polish failed on [{a}, {b}]: {e:?}")))
    }

    /// Number of zeros of the characteristic function inside the rectangle
    /// `[lo, hi] x [-height, height]`, by accumulated argument increments.
    fn contour_count(&self, lo: f64, hi: f64, height: f64, fraction: f64) -> Result<i64> {
        let corners = [
            Complex64::new(lo, -height),
            Complex64::new(hi, -height),
            Complex64::new(hi, height),
            Complex64::new(lo, height),
        ];
        let mut path: Vec<C> = Vec::new();
        for k in 0..4 {
            let (p0, p1) = (corners[k], corners[(k + 1) % 4]);
            let pieces = if k % 2 == 0 {
                let mut x = p0.re.min(p1.re);
                let mut marks = vec![x];
                while x < p0.re.max(p1.re) {
                    x = (x + self.step(x, fraction)).min(p0.re.max(p1.re));
                    marks.push(x);
                }
                if p0.re > p1.re {
                    marks.reverse();
                }
                marks.into_iter().map(|x| Complex64::new(x, p0.im)).collect::<Vec<_>>()
            } else {
                (0..=8).map(|j| p0 + (p1 - p0) * (j as f64 / 8.0)).collect()
            };
            path.extend(pieces.into_iter().skip(usize::from(k > 0)));
        }
        let eval = |z: C| -> Result<C> {
            let t = transfer(self.problem, z, self.opts.integrator_tol)?;
            Ok(normalized_char(self.bc, &t).0)
        };
        let mut values: Vec<C> = path.par_iter().map(|&z| eval(z)).collect::<Result<_>>()?;
        // Refine in parallel waves until every increment is small.
        for _ in 0..60 {
            let coarse: Vec<usize> = (0..path.len() - 1)
                .filter(|&i| {
                    let r = values[i + 1] / values[i];
                    r.arg().abs() > PI / 4.0 || r.norm().ln().abs() > 1.0
                })
                .collect();
            if coarse.is_empty() {
                let total: f64 = (0..path.len() - 1).map(|i| (values[i + 1] / values[i]).arg()).sum();
                let turns = total / (2.0 * PI);
                if (turns - turns.round()).abs() > 0.1 {
                    return Err(Error::CountMismatch { contour: turns.round() as i64, scan: 0 });
                }
                return Ok(turns.round() as i64);
            }
            let mids: Vec<C> = coarse.iter().map(|&i| (path[i] + path[i + 1]) * 0.5).collect();
            if let Some(&i) = coarse.iter().find(|&&i| (path[i + 1] - path[i]).norm() < 1e-13 * (1.0 + path[i].norm()))
            {
                return Err(Error::SpectralPoint { z: path[i] });
            }
            let new: Vec<C> = mids.par_iter().map(|&z| eval(z)).collect::<Result<_>>()?;
            let mut p2 = Vec::with_capacity(path.len() + mids.len());
            let mut v2 = Vec::with_capacity(path.len() + mids.len());
            let mut next = coarse.iter().zip(mids.iter().zip(new.iter())).peekable();
            for i in 0..path.len() {
                p2.push(path[i]);
                v2.push(values[i]);
                if let Some((&j, (&zm, &vm))) = next.peek() {
                    if j == i {
                        p2.push(zm);
                        v2.push(vm);
                        next.next();
                    }
                }
            }
            path = p2;
            values = v2;
        }
        Err(Error::CountMismatch { contour: -1, scan: 0 })
    }
}

/// Golden-section minimization on `[a, b]` to interval width `tol`.
fn golden_min(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let (mut a, mut b) = (a, b);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}
