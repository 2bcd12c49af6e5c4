//! The differential expression `r^{-1}(-(d/dx) p (d/dx) + q)` on a finite interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of uniform points used for the positivity check (breakpoints are added).
pub const POSITIVITY_POINTS: usize = 1024;

/// A real coefficient function on `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    #[serde(rename = "const")]
    Constant(f64),
    /// Piecewise constant; `vals[i]` lives on the half-open cell `[breaks[i-1], breaks[i])`.
    #[serde(rename = "pw")]
    Piecewise { breaks: Vec<f64>, vals: Vec<f64> },
    /// Linear interpolation of samples `v` at nodes `x`, with `x` spanning `[a, b]`.
    #[serde(rename = "sampled")]
    Sampled { x: Vec<f64>, v: Vec<f64> },
}

/// Restriction of a coefficient to one smooth segment: `v0 + slope * (x - x0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub x0: f64,
    pub v0: f64,
    pub slope: f64,
}

impl Affine {
    pub fn constant(v: f64) -> Self {
        Self { x0: 0.0, v0: v, slope: 0.0 }
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.v0 + self.slope * (x - self.x0)
    }
}

impl Coefficient {
    /// Value at `x`, using the right cell at a piecewise breakpoint.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Piecewise { breaks, vals } => {
                let cell = breaks.partition_point(|&b| b <= x);
                vals[cell]
            }
            Coefficient::Sampled { x: xs, v } => {
                let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                v[i - 1] + (v[i] - v[i - 1]) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Affine form valid on the segment containing `mid` (which must not be a node).
    pub fn affine_near(&self, mid: f64) -> Affine {
        match self {
            Coefficient::Constant(v) => Affine::constant(*v),
            Coefficient::Piecewise { .. } => Affine::constant(self.eval(mid)),
            Coefficient::Sampled { x: xs, v } => {
                let i = xs.partition_point(|&t| t <= mid).clamp(1, xs.len() - 1);
                let slope = (v[i] - v[i - 1]) / (xs[i] - xs[i - 1]);
                Affine { x0: xs[i - 1], v0: v[i - 1], slope }
            }
        }
    }

    /// Interior points where the coefficient loses smoothness.
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            Coefficient::Constant(_) => Vec::new(),
            Coefficient::Piecewise { breaks, .. } => breaks.clone(),
            Coefficient::Sampled { x, .. } => {
                if x.len() > 2 {
                    x[1..x.len() - 1].to_vec()
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn is_identically(&self, value: f64) -> bool {
        match self {
            Coefficient::Constant(v) => *v == value,
            Coefficient::Piecewise { vals, .. } => vals.iter().all(|&v| v == value),
            Coefficient::Sampled { v, .. } => v.iter().all(|&s| s == value),
        }
    }

    fn validate(&self, which: &'static str, a: f64, b: f64) -> Result<()> {
        match self {
            Coefficient::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::BadGrid(format!("{which}: non-finite constant")));
                }
            }
            Coefficient::Piecewise { breaks, vals } => {
                if vals.len() != breaks.len() + 1 {
                    return Err(Error::BadGrid(format!(
                        "{which}: {} breakpoints need {} values, got {}",
                        breaks.len(),
                        breaks.len() + 1,
                        vals.len()
                    )));
                }
                if breaks.iter().any(|&x| !(x > a && x < b)) {
                    return Err(Error::BadGrid(format!("{which}: breakpoints must lie in (a, b)")));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::BadGrid(format!("{which}: breakpoints must increase strictly")));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::BadGrid(format!("{which}: non-finite value")));
                }
            }
            Coefficient::Sampled { x, v } => {
                if x.len() < 2 || x.len() != v.len() {
                    return Err(Error::BadGrid(format!("{which}: need at least two samples and matching lengths")));
                }
                if x[0] != a || x[x.len() - 1] != b {
                    return Err(Error::BadGrid(format!("{which}: sample grid must start at a and end at b")));
                }
                if x.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::BadGrid(format!("{which}: sample grid must increase strictly")));
                }
                if v.iter().any(|s| !s.is_finite()) {
                    return Err(Error::BadGrid(format!("{which}: non-finite sample")));
                }
            }
        }
        Ok(())
    }
}

/// Coefficients of one smooth segment of the problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentCoefficients {
    pub p: Affine,
    pub q: Affine,
    pub r: Affine,
}

/// A validated regular Sturm-Liouville problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    a: f64,
    b: f64,
    p: Coefficient,
    q: Coefficient,
    r: Coefficient,
    nodes: Vec<f64>,
}

/// Wire format of a problem document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub a: f64,
    pub b: f64,
    pub p: Coefficient,
    pub q: Coefficient,
    pub r: Coefficient,
}

/// Validate the interval and coefficients and build a [`Problem`].
pub fn build_problem(a: f64, b: f64, p: Coefficient, q: Coefficient, r: Coefficient) -> Result<Problem> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::BadInterval { a, b });
    }
    p.validate("p", a, b)?;
    q.validate("q", a, b)?;
    r.validate("r", a, b)?;

    let mut nodes: Vec<f64> = p.nodes().into_iter().chain(q.nodes()).chain(r.nodes()).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let mut probe: Vec<f64> =
        (0..POSITIVITY_POINTS).map(|i| a + (b - a) * i as f64 / (POSITIVITY_POINTS - 1) as f64).collect();
    probe.extend_from_slice(&nodes);
    for &x in &probe {
        for (which, c) in [("p", &p), ("r", &r)] {
            let value = c.eval(x);
            if !(value > 0.0) {
                return Err(Error::NonPositiveCoefficient { which, x, value });
            }
        }
    }
    Ok(Problem { a, b, p, q, r, nodes })
}

/// Named problems used throughout the tests and the command line.
pub fn preset(name: &str) -> Result<Problem> {
    let one = || Coefficient::Constant(1.0);
    let step = |lo: f64, hi: f64| Coefficient::Piecewise { breaks: vec![0.5], vals: vec![lo, hi] };
    match name {
        "free-unit" => build_problem(0.0, 1.0, one(), Coefficient::Constant(0.0), one()),
        "free-pi" => build_problem(0.0, PI, one(), Coefficient::Constant(0.0), one()),
        "step-q" => build_problem(0.0, 1.0, one(), step(0.0, 10.0), one()),
        "step-p" => build_problem(0.0, 1.0, step(1.0, 2.0), Coefficient::Constant(0.0), one()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["free-unit", "free-pi", "step-q", "step-p"];

impl Problem {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn p(&self) -> &Coefficient {
        &self.p
    }

    pub fn q(&self) -> &Coefficient {
        &self.q
    }

    pub fn r(&self) -> &Coefficient {
        &self.r
    }

    /// Interior points where some coefficient is not smooth, sorted.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Same problem with `q` replaced.
    pub fn with_q(&self, q: Coefficient) -> Result<Problem> {
        build_problem(self.a, self.b, self.p.clone(), q, self.r.clone())
    }

    /// Segment end points `a = s_0 < s_1 < ... < s_m = b`.
    pub fn segment_ends(&self) -> Vec<f64> {
        let mut ends = Vec::with_capacity(self.nodes.len() + 2);
        ends.push(self.a);
        ends.extend_from_slice(&self.nodes);
        ends.push(self.b);
        ends
    }

    /// Coefficients valid on the open segment `(lo, hi)` between two consecutive nodes.
    pub fn segment_coefficients(&self, lo: f64, hi: f64) -> SegmentCoefficients {
        let mid = 0.5 * (lo + hi);
        SegmentCoefficients { p: self.p.affine_near(mid), q: self.q.affine_near(mid), r: self.r.affine_near(mid) }
    }

    /// Composite Simpson integral of `f(x, segment)` over `[a, b]` with `per_segment` intervals.
    fn integrate(&self, per_segment: usize, f: impl Fn(f64, &SegmentCoefficients) -> f64) -> f64 {
        let ends = self.segment_ends();
        let n = per_segment.max(2) & !1;
        let mut total = 0.0;
        for w in ends.windows(2) {
            let seg = self.segment_coefficients(w[0], w[1]);
            let h = (w[1] - w[0]) / n as f64;
            let mut s = f(w[0], &seg) + f(w[1], &seg);
            for i in 1..n {
                let wgt = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += wgt * f(w[0] + h * i as f64, &seg);
            }
            total += s * h / 3.0;
        }
        total
    }

    /// Optical length `L = int sqrt(r/p)`, which sets the eigenvalue spacing.
    pub fn optical_length(&self) -> f64 {
        self.integrate(64, |x, s| (s.r.at(x) / s.p.at(x)).sqrt())
    }

    /// `int 1/p` over the interval.
    pub fn inverse_p_integral(&self) -> f64 {
        self.integrate(64, |x, s| 1.0 / s.p.at(x))
    }

    /// Extremes over validation points: `(min p, min r, min q/r, max q/r)`.
    pub fn coefficient_bounds(&self) -> (f64, f64, f64, f64) {
        let mut probe: Vec<f64> =
            (0..POSITIVITY_POINTS).map(|i| self.a + self.len() * i as f64 / (POSITIVITY_POINTS - 1) as f64).collect();
        let ends = self.segment_ends();
        for w in ends.windows(2) {
            probe.push(w[0]);
            probe.push(0.5 * (w[0] + w[1]));
        }
        let mut out = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for w in ends.windows(2) {
            let seg = self.segment_coefficients(w[0], w[1]);
            for &x in probe.iter().filter(|&&x| x >= w[0] && x <= w[1]) {
                let (p, q, r) = (seg.p.at(x), seg.q.at(x), seg.r.at(x));
                out.0 = out.0.min(p);
                out.1 = out.1.min(r);
                out.2 = out.2.min(q / r);
                out.3 = out.3.max(q / r);
            }
        }
        out
    }

    pub fn to_doc(&self) -> ProblemDoc {
        ProblemDoc { a: self.a, b: self.b, p: self.p.clone(), q: self.q.clone(), r: self.r.clone() }
    }
}

impl TryFrom<ProblemDoc> for Problem {
    type Error = Error;
    fn try_from(doc: ProblemDoc) -> Result<Problem> {
        build_problem(doc.a, doc.b, doc.p, doc.q, doc.r)
    }
}
