//! `det Lambda` along paths, the trace formula for resolvent differences,
//! the determinant ratio, and the spectral shift function.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::bdm::{invert_trace, trace_matrix};
use crate::boundary::ABPair;
use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::propagate::{transfer, transfer_on_mesh, transfer_with_mesh, Transfer};
use crate::spectra::{eigenvalues, spectrum_lower_bound, Spectrum};
use crate::C;

/// Deepest bisection of one path segment before giving up.
const MAX_BISECTIONS: usize = 48;
/// Largest distance from an integer accepted from the boundary-value route.
pub const INTEGER_SLACK: f64 = 0.2;

/// `det Lambda_from^to` from one transfer, or `SpectralPoint` near either spectrum.
fn det_from_transfer(t: &Transfer, from: &ABPair, to: &ABPair) -> Result<C> {
    let m_from = trace_matrix(from, t);
    let m_to = trace_matrix(to, t);
    invert_trace(&m_from, t.z)?;
    invert_trace(&m_to, t.z)?;
    Ok(m_to.det() / m_from.det())
}

pub fn det_lambda(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<C> {
    det_from_transfer(&transfer(problem, z, tol)?, from, to)
}

/// One point of a tracked logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogDetPoint {
    pub z: [f64; 2],
    pub logdet: [f64; 2],
}

/// A continuous branch of `ln(eta det Lambda)` along a path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogDetPath {
    pub points: Vec<LogDetPoint>,
    /// Unimodular factor making `eta det Lambda` positive at the first point.
    pub eta: [f64; 2],
    pub reference: f64,
    /// Number of `det Lambda` evaluations, including refinements.
    pub evaluations: usize,
}

struct Tracker<'a> {
    problem: &'a Problem,
    from: &'a ABPair,
    to: &'a ABPair,
    tol: f64,
    evaluations: usize,
}

impl Tracker<'_> {
    fn eval(&self, z: C) -> Result<C> {
        det_lambda(self.problem, self.from, self.to, z, self.tol).map_err(|e| match e {
            Error::SpectralPoint { z } => Error::PathThroughSpectrum { z },
            other => other,
        })
    }

    /// Continuous logarithms at `path`, starting from `ln(eta g(path[0])) = ln |g(path[0])|`.
    fn track(&mut self, path: &[C]) -> Result<(C, Vec<C>)> {
        let values: Vec<C> = path.par_iter().map(|&z| self.eval(z)).collect::<Result<_>>()?;
        self.evaluations += values.len();
        let g0 = values[0];
        let eta = g0.conj() / g0.norm();
        let mut logs = Vec::with_capacity(path.len());
        logs.push(C::new(g0.norm().ln(), 0.0));
        for i in 1..path.len() {
            let step = self.segment(path[i - 1], values[i - 1], path[i], values[i], 0)?;
            logs.push(logs[i - 1] + step);
        }
        Ok((eta, logs))
    }

    /// `ln g(z1) - ln g(z0)` along the straight segment, bisecting until each
    /// piece changes the phase by less than `pi / 2` and the modulus by less than `e`.
    fn segment(&mut self, z0: C, g0: C, z1: C, g1: C, depth: usize) -> Result<C> {
        let ratio = g1 / g0;
        if ratio.arg().abs() < PI / 2.0 && ratio.norm().ln().abs() <= 1.0 {
            return Ok(ratio.ln());
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::PathThroughSpectrum { z: (z0 + z1) * 0.5 });
        }
        let zm = (z0 + z1) * 0.5;
        let gm = self.eval(zm)?;
        self.evaluations += 1;
        Ok(self.segment(z0, g0, zm, gm, depth + 1)? + self.segment(zm, gm, z1, g1, depth + 1)?)
    }
}

/// Track `ln(eta det Lambda)` along `path`; the first point must be real and
/// should lie below both spectra.
pub fn logdet_track(problem: &Problem, from: &ABPair, to: &ABPair, path: &[C], tol: f64) -> Result<LogDetPath> {
    let Some(first) = path.first() else {
        return Err(Error::InvalidParameter("empty path".into()));
    };
    if first.im != 0.0 {
        return Err(Error::InvalidParameter(format!("path must start on the real axis, got {first}")));
    }
    let mut tracker = Tracker { problem, from, to, tol, evaluations: 0 };
    let (eta, logs) = tracker.track(path)?;
    Ok(LogDetPath {
        points: path.iter().zip(&logs).map(|(z, l)| LogDetPoint { z: [z.re, z.im], logdet: [l.re, l.im] }).collect(),
        eta: [eta.re, eta.im],
        reference: first.re,
        evaluations: tracker.evaluations,
    })
}

/// `[det N_from / det N_to] det Lambda(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetRatio {
    pub value: [f64; 2],
    /// `det N_from` vanishes, so the value is zero.
    pub degenerate_from: bool,
}

pub fn det_ratio(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<DetRatio> {
    let (n_from, n_to) = (from.trace_matrices().n, to.trace_matrices().n);
    let vanishes = |n: &crate::CMat2| n.det().norm() <= 1e-12 * n.frobenius().powi(2).max(1e-300);
    if vanishes(&n_to) {
        return Err(Error::DegenerateN);
    }
    let degenerate_from = vanishes(&n_from);
    let factor = if degenerate_from { C::new(0.0, 0.0) } else { n_from.det() / n_to.det() };
    let v = factor * det_lambda(problem, from, to, z, tol)?;
    Ok(DetRatio { value: [v.re, v.im], degenerate_from })
}

/// `-d/dz ln det Lambda(z)` by a central difference on one frozen integration mesh.
pub fn log_derivative(problem: &Problem, from: &ABPair, to: &ABPair, z: C, tol: f64) -> Result<C> {
    let h = 1e-5 * z.norm().max(1.0);
    let (_, mesh) = transfer_with_mesh(problem, z, tol)?;
    let plus = det_from_transfer(&transfer_on_mesh(problem, z + h, &mesh), from, to)?;
    let minus = det_from_transfer(&transfer_on_mesh(problem, z - h, &mesh), from, to)?;
    Ok(-(plus / minus).ln() / (2.0 * h))
}

/// The spectrum of `bc` from below its ground state up to `top`, nudging
/// `top` off any eigenvalue it happens to hit.
pub fn spectrum_up_to(problem: &Problem, bc: &ABPair, top: f64, tol: f64) -> Result<Spectrum> {
    let lo = spectrum_lower_bound(problem, bc) - 1.0;
    let nudge = 0.1 * (PI / problem.optical_length()).powi(2);
    let mut hi = top.max(lo + nudge);
    for _ in 0..8 {
        match eigenvalues(problem, bc, (lo, hi), tol) {
            Err(Error::WindowEdgeEigenvalue { .. }) => hi += nudge * 0.37,
            other => return other,
        }
    }
    Err(Error::InvalidParameter(format!("could not place a window edge near {top}")))
}

/// Lowest eigenvalue of `bc`.
pub fn ground_state(problem: &Problem, bc: &ABPair, tol: f64) -> Result<f64> {
    let lb = spectrum_lower_bound(problem, bc);
    let mut top = lb + (PI / problem.optical_length()).powi(2) * 4.0;
    loop {
        let s = spectrum_up_to(problem, bc, top, tol)?;
        if let Some(e) = s.eigenvalues.first() {
            return Ok(e.lambda);
        }
        top += (top - lb) * 2.0;
    }
}

/// Both sides of the trace formula at one `z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceCheck {
    pub z: [f64; 2],
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub residual: f64,
    /// Spread of the averaged partial sums, an estimate of the truncation error.
    pub tail_estimate: f64,
}

/// Trace of `R_to(z) - R_from(z)` from the two spectra, against
/// `-d/dz ln det Lambda_from^to(z)`.
///
/// The eigenvalue sums are cut at energies `E_k = (k pi / L)^2`, `L` the
/// optical length, and the partial sums are averaged over `k` in
/// `[k_max / 2, k_max]`, `k_max = n_eigs + 1/2`. The averaging damps the
/// oscillation caused by eigenvalues entering the two sums at different energies.
pub struct TraceFormula<'a> {
    problem: &'a Problem,
    from: ABPair,
    to: ABPair,
    from_eigs: Vec<f64>,
    to_eigs: Vec<f64>,
    cutoffs: Vec<f64>,
    tol: f64,
}

/// Cutoff samples per unit of `k`.
const CUTOFFS_PER_MODE: usize = 8;

impl<'a> TraceFormula<'a> {
    pub fn new(problem: &'a Problem, from: &ABPair, to: &ABPair, n_eigs: usize, tol: f64) -> Result<Self> {
        if n_eigs < 4 {
            return Err(Error::InvalidParameter(format!("n_eigs = {n_eigs} is too small for the trace formula")));
        }
        let unit = PI / problem.optical_length();
        let k_max = n_eigs as f64 + 0.5;
        let (_, _, qr_min, qr_max) = problem.coefficient_bounds();
        let shift = qr_min.min(0.0);
        let top = (k_max * unit).powi(2) + qr_max.max(0.0);
        let eig_tol = (tol * 1e-3).max(1e-10);
        let (from_eigs, to_eigs) = rayon::join(
            || spectrum_up_to(problem, from, top, eig_tol),
            || {
                if from == to {
                    Ok(None)
                } else {
                    spectrum_up_to(problem, to, top, eig_tol).map(Some)
                }
            },
        );
        let from_eigs = from_eigs?.flattened();
        let to_eigs = match to_eigs? {
            Some(s) => s.flattened(),
            None => from_eigs.clone(),
        };
        let n = (k_max / 2.0 * CUTOFFS_PER_MODE as f64).round() as usize;
        let cutoffs = (0..=n)
            .map(|j| {
                let k = k_max / 2.0 + (k_max / 2.0) * j as f64 / n as f64;
                (k * unit).powi(2) + shift
            })
            .collect();
        Ok(TraceFormula { problem, from: *from, to: *to, from_eigs, to_eigs, cutoffs, tol })
    }

    pub fn eigenvalues(&self) -> (&[f64], &[f64]) {
        (&self.from_eigs, &self.to_eigs)
    }

    /// Averaged eigenvalue side and its truncation estimate.
    pub fn lhs(&self, z: C) -> Result<(C, f64)> {
        for &l in self.from_eigs.iter().chain(&self.to_eigs) {
            if (C::new(l, 0.0) - z).norm() < 1e-8 * l.abs().max(1.0) {
                return Err(Error::SpectralPoint { z });
            }
        }
        let partial = |e: f64| -> C {
            let to: C = self.to_eigs.iter().filter(|&&l| l <= e).map(|&l| 1.0 / (C::new(l, 0.0) - z)).sum();
            let from: C = self.from_eigs.iter().filter(|&&l| l <= e).map(|&l| 1.0 / (C::new(l, 0.0) - z)).sum();
            to - from
        };
        let sums: Vec<C> = self.cutoffs.iter().map(|&e| partial(e)).collect();
        let half = sums.len() / 2;
        let mean = |s: &[C]| s.iter().sum::<C>() / s.len() as f64;
        let total = mean(&sums);
        let spread = (mean(&sums[..half]) - mean(&sums[half..])).norm();
        Ok((total, spread))
    }

    pub fn check(&self, z: C) -> Result<TraceCheck> {
        let (lhs, tail) = self.lhs(z)?;
        if tail > self.tol {
            return Err(Error::InsufficientEigs { estimate: tail, tol: self.tol });
        }
        let rhs = log_derivative(self.problem, &self.from, &self.to, z, 1e-12)?;
        Ok(TraceCheck {
            z: [z.re, z.im],
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            residual: (lhs - rhs).norm(),
            tail_estimate: tail,
        })
    }
}

pub fn trace_formula_check(
    problem: &Problem,
    from: &ABPair,
    to: &ABPair,
    z: C,
    n_eigs: usize,
    tol: f64,
) -> Result<TraceCheck> {
    TraceFormula::new(problem, from, to, n_eigs, tol)?.check(z)
}

/// One jump of a [`StepFunction`]: the value is `to` from `at` onwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub at: f64,
    pub to: i64,
}

/// Integer-valued, right-continuous step function on the real line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepFunction {
    pub base: i64,
    pub jumps: Vec<Jump>,
}

impl StepFunction {
    pub fn value(&self, lambda: f64) -> i64 {
        self.jumps.iter().take_while(|j| j.at <= lambda).last().map_or(self.base, |j| j.to)
    }

    /// Samples `(lambda, value)` on a uniform grid.
    pub fn sample(&self, lo: f64, hi: f64, n: usize) -> Vec<(f64, i64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, self.value(x))
            })
            .collect()
    }
}

/// `N_from - N_to` from two eigenvalue lists; coinciding eigenvalues (within
/// `merge`) are combined and jumps of net size zero dropped.
pub fn counting_difference(from: &[f64], to: &[f64], merge: f64) -> StepFunction {
    let mut events: Vec<(f64, i64)> = from.iter().map(|&l| (l, 1)).chain(to.iter().map(|&l| (l, -1))).collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut grouped: Vec<(f64, i64)> = Vec::new();
    for (l, d) in events {
        match grouped.last_mut() {
            Some(last) if (l - last.0).abs() <= merge * l.abs().max(1.0) => last.1 += d,
            _ => grouped.push((l, d)),
        }
    }
    let mut value = 0;
    let mut jumps = Vec::new();
    for (at, d) in grouped {
        if d != 0 {
            value += d;
            jumps.push(Jump { at, to: value });
        }
    }
    StepFunction { base: 0, jumps }
}

/// The spectral shift function `xi = N_from - N_to` on `(-inf, lambda_max]`.
pub fn ssf_counting(problem: &Problem, from: &ABPair, to: &ABPair, lambda_max: f64, tol: f64) -> Result<StepFunction> {
    if !lambda_max.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda_max = {lambda_max} is not finite")));
    }
    let (a, b) =
        rayon::join(|| spectrum_up_to(problem, from, lambda_max, tol), || spectrum_up_to(problem, to, lambda_max, tol));
    let keep = |s: Spectrum| s.flattened().into_iter().filter(|&l| l <= lambda_max).collect::<Vec<_>>();
    Ok(counting_difference(&keep(a?), &keep(b?), (100.0 * tol).max(1e-9)))
}

/// Values of the spectral shift function from the boundary values of the
/// tracked logarithm, `pi^{-1} Im ln(eta det Lambda(lambda + i epsilon))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryShift {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub eta: [f64; 2],
    pub reference: f64,
    pub epsilon: f64,
}

impl BoundaryShift {
    pub fn rounded(&self) -> Result<Vec<i64>> {
        self.lambdas
            .iter()
            .zip(&self.values)
            .map(|(&lambda, &value)| {
                let r = value.round();
                if (value - r).abs() > INTEGER_SLACK {
                    Err(Error::NonIntegerValue { lambda, value })
                } else {
                    Ok(r as i64)
                }
            })
            .collect()
    }
}

/// The boundary-value route to the spectral shift function.
///
/// The path runs from `z0 = e0 - 1 - |e0|` straight up to `z0 + i epsilon`
/// and then right at height `epsilon`, with extra points at geometrically
/// spaced offsets around every eigenvalue of either operator so that no
/// phase turn is skipped between path points.
pub fn ssf_boundary(
    problem: &Problem,
    from: &ABPair,
    to: &ABPair,
    lambdas: &[f64],
    epsilon: f64,
    tol: f64,
) -> Result<BoundaryShift> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter("lambda values must be finite".into()));
    }
    let top = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (a, b) = rayon::join(|| spectrum_up_to(problem, from, top, tol), || spectrum_up_to(problem, to, top, tol));
    let mut eigs: Vec<f64> = a?.flattened().into_iter().chain(b?.flattened()).collect();
    eigs.sort_by(f64::total_cmp);
    let e0 = match eigs.first() {
        Some(&l) => l,
        None => ground_state(problem, from, tol)?.min(ground_state(problem, to, tol)?),
    };
    let z0 = e0 - 1.0 - e0.abs();

    let mut xs: Vec<f64> = lambdas.iter().copied().filter(|&l| l > z0).collect();
    for (i, &mu) in eigs.iter().enumerate() {
        let prev = if i > 0 { mu - eigs[i - 1] } else { f64::INFINITY };
        let next = eigs.get(i + 1).map_or(f64::INFINITY, |&n| n - mu);
        let reach = 0.5 * prev.min(next).max(epsilon).min(1.0);
        xs.push(mu);
        let mut d = epsilon;
        while d <= reach {
            xs.push(mu - d);
            xs.push(mu + d);
            d *= 2.0;
        }
    }
    xs.retain(|&x| x > z0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut path = vec![C::new(z0, 0.0), C::new(z0, epsilon)];
    path.extend(xs.iter().map(|&x| C::new(x, epsilon)));

    let mut tracker = Tracker { problem, from, to, tol: (tol * 1e-2).clamp(1e-13, 1e-10), evaluations: 0 };
    let (eta, logs) = tracker.track(&path)?;
    let values = lambdas
        .iter()
        .map(|&l| {
            if l <= z0 {
                return 0.0;
            }
            let i = xs.partition_point(|&x| x < l);
            logs[i + 2].im / PI
        })
        .collect();
    Ok(BoundaryShift { lambdas: lambdas.to_vec(), values, eta: [eta.re, eta.im], reference: z0, epsilon })
}
