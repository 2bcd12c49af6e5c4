//! Output grids that respect coefficient breakpoints, with quadrature on them.

use num_complex::Complex64;

use crate::problem::{Problem, SegmentCoefficients};

/// Smallest number of grid points on any solution grid.
pub const MIN_GRID_POINTS: usize = 257;

/// A grid on `[a, b]` that is uniform on every smooth segment of the problem.
///
/// Each segment carries an even number (at least four) of intervals, so
/// composite Simpson and four-point cumulative rules apply segment by segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    /// Inclusive node ranges `(first, last)` of the segments.
    segments: Vec<(usize, usize)>,
    coefficients: Vec<SegmentCoefficients>,
}

impl Grid {
    /// Grid with at least `min_points` nodes; `extra` points become segment ends.
    pub fn for_problem(problem: &Problem, min_points: usize, extra: &[f64]) -> Grid {
        let mut ends = problem.segment_ends();
        for &x in extra {
            if x > problem.a() && x < problem.b() {
                ends.push(x);
            }
        }
        ends.sort_by(f64::total_cmp);
        ends.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * problem.len());
        let len = problem.len();
        let target = min_points.max(MIN_GRID_POINTS) as f64 - 1.0;
        let mut nodes = vec![ends[0]];
        let mut segments = Vec::with_capacity(ends.len() - 1);
        let mut coefficients = Vec::with_capacity(ends.len() - 1);
        for w in ends.windows(2) {
            let share = (target * (w[1] - w[0]) / len).ceil() as usize;
            let n = (share.max(4) + 1) & !1;
            let first = nodes.len() - 1;
            let h = (w[1] - w[0]) / n as f64;
            for i in 1..n {
                nodes.push(w[0] + h * i as f64);
            }
            nodes.push(w[1]);
            segments.push((first, nodes.len() - 1));
            coefficients.push(problem.segment_coefficients(w[0], w[1]));
        }
        Grid { nodes, segments, coefficients }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    pub fn segment_coefficients(&self, seg: usize) -> &SegmentCoefficients {
        &self.coefficients[seg]
    }

    /// Index of a node equal to `x` (within rounding), if any.
    pub fn find(&self, x: f64) -> Option<usize> {
        let scale = (self.nodes[self.nodes.len() - 1] - self.nodes[0]).abs();
        let i = self.nodes.partition_point(|&t| t < x - 1e-13 * scale);
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= 1e-13 * scale).then_some(i)
    }

    /// Composite Simpson rule for `f(node, segment)` over `[a, b]`.
    pub fn simpson(&self, f: impl Fn(usize, usize) -> Complex64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (seg, &(s, e)) in self.segments.iter().enumerate() {
            let h = (self.nodes[e] - self.nodes[s]) / (e - s) as f64;
            let mut acc = f(s, seg) + f(e, seg);
            for i in s + 1..e {
                let w = if (i - s) % 2 == 1 { 4.0 } else { 2.0 };
                acc += f(i, seg) * w;
            }
            total += acc * (h / 3.0);
        }
        total
    }

    /// Running integral from `a` to every node, exact for cubics on each segment.
    pub fn cumulative(&self, f: impl Fn(usize, usize) -> Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nodes.len()];
        for (seg, &(s, e)) in self.segments.iter().enumerate() {
            let h = (self.nodes[e] - self.nodes[s]) / (e - s) as f64;
            let vals: Vec<Complex64> = (s..=e).map(|i| f(i, seg)).collect();
            let last = vals.len() - 1;
            for j in 0..last {
                let piece = if j == 0 {
                    vals[0] * 9.0 + vals[1] * 19.0 - vals[2] * 5.0 + vals[3]
                } else if j + 1 == last {
                    vals[j - 2] - vals[j - 1] * 5.0 + vals[j] * 19.0 + vals[j + 1] * 9.0
                } else {
                    -vals[j - 1] + vals[j] * 13.0 + vals[j + 1] * 13.0 - vals[j + 2]
                };
                out[s + j + 1] = out[s + j] + piece * (h / 24.0);
            }
        }
        out
    }

    /// Weight `r(x)` at a node as seen from a segment.
    #[inline]
    pub fn weight(&self, node: usize, seg: usize) -> f64 {
        self.coefficients[seg].r.at(self.nodes[node])
    }
}
