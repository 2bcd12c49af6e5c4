//! The built-in acceptance suite. Each criterion measures a list of
//! quantities and compares each against a limit.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bdm::{bdm_compose_check, bdm_eval, bdm_via_fractional, herglotz_probe, m_asymptotics, reflection_residual};
use crate::boundary::{ABPair, CanonicalBC, CoupledBC, DNPair, SeparatedBC};
use crate::error::{Error, Result};
use crate::problem::{preset, Problem};
use crate::propagate::deficiency_basis;
use crate::shift::{ssf_boundary, ssf_counting, TraceFormula};
use crate::spectra::eigenvalues;
use crate::spectra::krein::{krein_resolvent_check, specialized_residual};
use crate::spectra::kvn::{kvn_extension, kvn_spectrum_check};
use crate::vonneumann::{gram_pair, vn_unitary_canonical, vn_unitary_direct, vn_unitary_general};
use crate::{sample, CMat2, C};

/// Integrator and eigenvalue tolerance used by the suite.
const TOL: f64 = 1e-11;

/// How a measured value is compared with its limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

/// One measured quantity: the worst value over everything it aggregates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub samples: usize,
    pub passed: bool,
}

impl Measurement {
    fn new(label: &str, relation: Relation, limit: f64) -> Self {
        let value = match relation {
            Relation::Below => 0.0,
            Relation::Above => f64::INFINITY,
        };
        Measurement { label: label.into(), value, relation, limit, samples: 0, passed: true }
    }

    fn below(label: &str, limit: f64) -> Self {
        Self::new(label, Relation::Below, limit)
    }

    fn above(label: &str, limit: f64) -> Self {
        Self::new(label, Relation::Above, limit)
    }

    /// Record one sample; NaN always fails.
    fn push(&mut self, v: f64) {
        self.samples += 1;
        match self.relation {
            Relation::Below => {
                if v.is_nan() || v > self.value {
                    self.value = v;
                }
            }
            Relation::Above => {
                if v.is_nan() || v < self.value {
                    self.value = v;
                }
            }
        }
    }

    fn with(mut self, v: f64) -> Self {
        self.push(v);
        self
    }

    fn settle(&mut self, tighten: Option<f64>) {
        if let (Relation::Below, Some(t)) = (self.relation, tighten) {
            self.limit = self.limit.min(t);
        }
        self.passed = match self.relation {
            Relation::Below => self.value < self.limit,
            Relation::Above => self.value > self.limit,
        };
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub measurements: Vec<Measurement>,
    /// Set when a computation failed before all quantities were measured.
    pub error: Option<String>,
}

impl CriterionReport {
    /// One line: `criterion  3 PASS (2.1 s) algebra of boundary data maps: ...`.
    pub fn summary(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("criterion {:>2} {verdict} ({:.1} s) {}", self.id, self.seconds, self.title);
        for m in &self.measurements {
            let rel = match m.relation {
                Relation::Below => "<",
                Relation::Above => ">",
            };
            let mark = if m.passed { "" } else { " !" };
            line.push_str(&format!("; {} = {:.3e} {rel} {:.0e}{mark}", m.label, m.value, m.limit));
        }
        if let Some(e) = &self.error {
            line.push_str(&format!("; error: {e}"));
        }
        line
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// All criteria.
    Free,
    /// The criteria that finish in a few seconds.
    Quick,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "free" | "full" => Ok(Suite::Free),
            "quick" => Ok(Suite::Quick),
            other => Err(Error::InvalidParameter(format!("unknown suite `{other}` (expected free or quick)"))),
        }
    }

    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Free => CRITERIA.iter().map(|c| c.0).collect(),
            Suite::Quick => vec![1, 2, 3, 4, 5, 6, 7, 9, 10, 11],
        }
    }
}

type Check = fn() -> Result<Vec<Measurement>>;

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "free spectra"),
    (2, "boundary data map closed form"),
    (3, "algebra of boundary data maps"),
    (4, "Herglotz property and reflection"),
    (5, "Krein resolvent formulas"),
    (6, "specialized Krein matrices"),
    (7, "Krein-von Neumann extension"),
    (8, "trace formula and spectral shift"),
    (9, "parametrization bijections"),
    (10, "von Neumann unitaries"),
    (11, "m-function asymptotics"),
];

fn check_fn(id: u8) -> Option<Check> {
    let f: Check = match id {
        1 => free_spectra,
        2 => bdm_closed_form,
        3 => bdm_algebra,
        4 => herglotz,
        5 => krein,
        6 => specialized,
        7 => kvn,
        8 => trace_and_ssf,
        9 => bijections,
        10 => von_neumann,
        11 => asymptotics,
        _ => return None,
    };
    Some(f)
}

/// Run one criterion. `tighten` lowers every upper limit to at most that value.
pub fn run_criterion(id: u8, tighten: Option<f64>) -> Result<CriterionReport> {
    let (_, title) =
        CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
    let check = check_fn(id).expect("every listed criterion has a check");
    let start = Instant::now();
    let outcome = check();
    let seconds = start.elapsed().as_secs_f64();
    let (mut measurements, error) = match outcome {
        Ok(m) => (m, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    for m in &mut measurements {
        m.settle(tighten);
    }
    let passed = error.is_none() && measurements.iter().all(|m| m.passed);
    Ok(CriterionReport { id, title, passed, seconds, measurements, error })
}

pub fn run_suite(suite: Suite, tighten: Option<f64>) -> Vec<CriterionReport> {
    suite.criteria().into_iter().map(|id| run_criterion(id, tighten).expect("suite ids are listed")).collect()
}

fn c(re: f64, im: f64) -> C {
    Complex64::new(re, im)
}

fn presets(names: &[&str]) -> Result<Vec<Problem>> {
    names.iter().map(|n| preset(n)).collect()
}

fn free_spectra() -> Result<Vec<Measurement>> {
    let pi = preset("free-pi")?;
    let dir = eigenvalues(&pi, &ABPair::dirichlet(), (0.5, 100.5), TOL)?.flattened();
    let mut count = Measurement::below("dirichlet count mismatch", 0.5).with((dir.len() as f64 - 10.0).abs());
    let mut d = Measurement::below("dirichlet max error", 1e-8);
    for (n, l) in dir.iter().enumerate() {
        d.push((l - ((n + 1) * (n + 1)) as f64).abs());
    }
    let unit = preset("free-unit")?;
    let neu = eigenvalues(&unit, &ABPair::neumann(), (-0.5, 100.0), TOL)?.flattened();
    count.push((neu.len() as f64 - 4.0).abs());
    let mut n = Measurement::below("neumann max error", 1e-6);
    for (k, l) in neu.iter().enumerate() {
        n.push((l - (k as f64 * PI).powi(2)).abs());
    }
    Ok(vec![count, d, n])
}

fn bdm_closed_form() -> Result<Vec<Measurement>> {
    let unit = preset("free-unit")?;
    let (d, n) = (ABPair::dirichlet(), ABPair::neumann());
    let m = bdm_eval(&unit, &d, &n, c(-1.0, 0.0), TOL)?.m;
    let (coth, csch) = (1.0 / 1f64.tanh(), 1.0 / 1f64.sinh());
    let closed = Measurement::below("closed form at z = -1", 1e-8)
        .with(m.dist(&CMat2::from_real([[-coth, csch], [csch, -coth]])));
    let mut det = Measurement::below("relative error of det = -z", 1e-7);
    let zs = [
        c(-1.0, 0.0),
        c(-3.0, 0.0),
        c(-10.0, 0.0),
        c(0.3, 0.0),
        c(2.0, 1.0),
        c(2.0, -1.0),
        c(5.0, 3.0),
        c(-20.0, 5.0),
        c(50.0, 1.0),
        c(0.0, 0.5),
    ];
    for z in zs {
        det.push((bdm_eval(&unit, &d, &n, z, TOL)?.m.det() + z).norm() / z.norm());
    }
    Ok(vec![closed, det])
}

fn bdm_algebra() -> Result<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identity = Measurement::below("identity", 1e-8);
    let mut compose = Measurement::below("composition", 1e-8);
    let mut inverse = Measurement::below("inverse", 1e-8);
    let mut fractional = Measurement::below("fractional path (relative)", 1e-8);
    for p in presets(&["free-unit", "step-q"])? {
        for _ in 0..20 {
            let (x, y, w) = (sample::ab_pair(&mut rng), sample::ab_pair(&mut rng), sample::ab_pair(&mut rng));
            for z in [c(-1.0, 0.0), c(2.0, 3.0), c(-5.0, 0.1)] {
                identity.push(bdm_eval(&p, &x, &x, z, TOL)?.m.dist(&CMat2::identity()));
                compose.push(bdm_compose_check(&p, &x, &y, &w, z, TOL)?);
                inverse.push(bdm_compose_check(&p, &x, &y, &x, z, TOL)?);
                let direct = bdm_eval(&p, &x, &y, z, TOL)?.m;
                let frac = bdm_via_fractional(&p, &x, &y, z, TOL)?.m;
                fractional.push(direct.dist(&frac) / direct.max_norm().max(1.0));
            }
        }
    }
    Ok(vec![identity, compose, inverse, fractional])
}

fn herglotz() -> Result<Vec<Measurement>> {
    let sep = SeparatedBC::new(1.0, 2.0)?.to_ab();
    let other = SeparatedBC::new(0.3, 2.8)?.to_ab();
    let pairs = [
        (ABPair::dirichlet(), ABPair::neumann()),
        (ABPair::neumann(), ABPair::dirichlet()),
        (ABPair::dirichlet(), sep),
        (sep, ABPair::neumann()),
        (sep, other),
    ];
    let mut min_eig = Measurement::above("min eigenvalue of Im(Lambda S*)", 0.0);
    let mut reflection = Measurement::below("reflection", 1e-8);
    for p in presets(&["free-unit", "step-q"])? {
        for (from, to) in &pairs {
            for re in [-20.0, -5.0, 0.0, 5.0, 20.0] {
                for im in [0.1, 1.0, 3.0, 10.0, 30.0] {
                    let z = c(re, im);
                    min_eig.push(herglotz_probe(&p, from, to, z, TOL)?.0);
                    reflection.push(reflection_residual(&p, from, to, z, TOL)?);
                }
            }
        }
    }
    Ok(vec![min_eig, reflection])
}

fn krein_trials() -> [fn(f64) -> C; 3] {
    [|_| c(1.0, 0.0), |x| c(x, 0.0), |x| c((3.0 * x).sin() + x * x, 0.0)]
}

fn krein() -> Result<Vec<Measurement>> {
    let trials = krein_trials();
    let refs: Vec<&(dyn Fn(f64) -> C + Sync)> = trials.iter().map(|f| f as &(dyn Fn(f64) -> C + Sync)).collect();
    let mut residual = Measurement::below("L2 difference of both sides", 1e-6);
    for p in presets(&["free-unit", "step-q"])? {
        let bcs = [
            ABPair::dirichlet(),
            ABPair::neumann(),
            SeparatedBC::new(1.0, 2.0)?.to_ab(),
            ABPair::periodic(),
            ABPair::antiperiodic(),
            kvn_extension(&p, TOL)?.to_ab(),
        ];
        for target in &bcs {
            for reference in &bcs {
                for z in [c(-2.0, 0.5), c(1.0, 2.0), c(-7.0, 0.0)] {
                    residual.push(krein_resolvent_check(&p, target, reference, z, &refs, TOL)?);
                }
            }
        }
    }
    Ok(vec![residual])
}

fn specialized() -> Result<Vec<Measurement>> {
    let cases = [
        CanonicalBC::Separated(SeparatedBC::new(1.0, 2.0)?),
        CanonicalBC::Separated(SeparatedBC::new(0.7, 0.0)?),
        CanonicalBC::Separated(SeparatedBC::new(0.0, 2.5)?),
        CanonicalBC::Separated(SeparatedBC::DIRICHLET),
        CanonicalBC::Separated(SeparatedBC::NEUMANN),
        CanonicalBC::Coupled(CoupledBC::periodic()),
        CanonicalBC::Coupled(CoupledBC::new(1.3, [[2.0, 0.5], [1.0, 0.75]])?),
        CanonicalBC::Coupled(CoupledBC::new(0.4, [[0.5, 0.0], [3.0, 2.0]])?),
        CanonicalBC::Coupled(CoupledBC::new(PI, [[1.0, 0.0], [-1.0, 1.0]])?),
    ];
    let mut residual = Measurement::below("specialized vs permuted general", 1e-8);
    for p in presets(&["free-unit", "step-q", "step-p"])? {
        for case in &cases {
            for z in [c(-1.0, 0.0), c(3.0, 2.0), c(20.0, -0.5)] {
                residual.push(specialized_residual(&p, case, z, TOL)?);
            }
        }
    }
    Ok(vec![residual])
}

fn kvn() -> Result<Vec<Measurement>> {
    let unit = preset("free-unit")?;
    let free = kvn_extension(&unit, TOL)?;
    let want = [[1.0, 1.0], [0.0, 1.0]];
    let mut f = Measurement::below("free-unit F_K error", 1e-8).with(free.phi.abs());
    for (got, want) in free.f.iter().flatten().zip(want.iter().flatten()) {
        f.push((got - want).abs());
    }
    let step_p = preset("step-p")?;
    let f12 = Measurement::below("step-p F_K12 error", 1e-8).with((kvn_extension(&step_p, TOL)?.f[0][1] - 0.75).abs());
    let mut smallest = Measurement::below("two smallest eigenvalues", 1e-6);
    let mut relation = Measurement::below("kernel boundary relation", 1e-6);
    for p in [&unit, &step_p] {
        let check = kvn_spectrum_check(p, TOL)?;
        smallest.push(check.smallest[0].abs().max(check.smallest[1].abs()));
        relation.push(check.relation_residual.unwrap_or(f64::NAN));
    }
    Ok(vec![f, f12, smallest, relation])
}

fn trace_and_ssf() -> Result<Vec<Measurement>> {
    let unit = preset("free-unit")?;
    let (d, n) = (ABPair::dirichlet(), ABPair::neumann());
    let tf = TraceFormula::new(&unit, &d, &n, 40, 1e-6)?;
    let mut lhs = Measurement::below("eigenvalue side vs -1/z", 1e-6);
    let mut rhs = Measurement::below("determinant side vs -1/z", 1e-6);
    for z in [c(-1.0, 0.0), c(-3.0, 0.0), c(2.0, 2.0)] {
        let check = tf.check(z)?;
        let want = -1.0 / z;
        lhs.push((c(check.lhs[0], check.lhs[1]) - want).norm());
        rhs.push((c(check.rhs[0], check.rhs[1]) - want).norm());
    }
    let xi = ssf_counting(&unit, &d, &n, 50.0, TOL)?;
    let lambdas: Vec<f64> = (1..=50).map(|k| k as f64).collect();
    let counting = Measurement::below("counting route |xi + 1| on (0, 50]", 0.5)
        .with(lambdas.iter().map(|&l| (xi.value(l) + 1).abs() as f64).fold(0.0, f64::max));
    let boundary = ssf_boundary(&unit, &d, &n, &lambdas, 1e-3, TOL)?;
    let mut deviation = Measurement::below("boundary route distance to an integer", 0.05);
    let mut mismatch = Measurement::below("routes disagree after rounding", 0.5);
    for (l, v) in lambdas.iter().zip(&boundary.values) {
        deviation.push((v - v.round()).abs());
        mismatch.push(if v.round() as i64 == xi.value(*l) { 0.0 } else { 1.0 });
    }
    Ok(vec![lhs, rhs, counting, deviation, mismatch])
}

fn bijections() -> Result<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut round_trip = Measurement::below("unitary after round trips", 1e-10);
    for _ in 0..100 {
        let ab = sample::ab_pair(&mut rng);
        let u = ab.to_unitary();
        let via_dn = ab.to_dn().to_ab()?.to_unitary();
        let via_u = u.to_ab().to_unitary();
        let via_canonical = ab.canonicalize()?.to_ab().to_unitary();
        for v in [via_dn, via_u, via_canonical, u.to_dn().to_unitary()] {
            round_trip.push(v.matrix().dist(u.matrix()));
        }
    }
    let named = Measurement::below("Dirichlet -> -I, Neumann -> +I", 1e-10)
        .with(ABPair::dirichlet().to_unitary().matrix().dist(&-CMat2::identity()))
        .with(ABPair::neumann().to_unitary().matrix().dist(&CMat2::identity()));
    let mut left = Measurement::below("left multiplication", 1e-10);
    for _ in 0..20 {
        let ab = sample::ab_pair(&mut rng);
        let m = sample::nonsingular(&mut rng);
        left.push(ab.left_multiply(&m)?.to_unitary().matrix().dist(ab.to_unitary().matrix()));
        let dn = ab.to_dn();
        let scaled = DNPair::new(m * *dn.xd(), m * *dn.xn())?;
        left.push(scaled.to_unitary().matrix().dist(dn.to_unitary().matrix()));
    }
    Ok(vec![round_trip, named, left])
}

fn von_neumann() -> Result<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut cases: Vec<CanonicalBC> = (0..10).map(|_| CanonicalBC::Separated(sample::separated(&mut rng))).collect();
    cases.extend((0..3).map(|_| CanonicalBC::Coupled(sample::coupled(&mut rng, false))));
    cases.extend((0..3).map(|_| CanonicalBC::Coupled(sample::coupled(&mut rng, true))));
    let minus = -CMat2::identity();
    let mut dirichlet = Measurement::below("Dirichlet -> -I on every route", 1e-8);
    let mut routes = Measurement::below("general vs specialized", 1e-7);
    let mut isometry = Measurement::below("isometry residual", 1e-7);
    let mut gram = Measurement::below("Gram quadrature vs closed form", 1e-7);
    for p in presets(&["free-unit", "step-q"])? {
        let d = ABPair::dirichlet();
        let general = vn_unitary_general(&p, &d, &d, TOL)?;
        dirichlet.push(general.to_pair_basis(&p, TOL)?.u.dist(&minus));
        dirichlet.push(vn_unitary_direct(&p, &d, TOL)?.u.dist(&minus));
        dirichlet.push(vn_unitary_canonical(&p, &CanonicalBC::Separated(SeparatedBC::DIRICHLET), TOL)?.u.dist(&minus));
        for bc in &cases {
            let closed = vn_unitary_canonical(&p, bc, TOL)?;
            let general = vn_unitary_general(&p, &bc.to_ab(), &d, TOL)?;
            let aligned = general.to_pair_basis(&p, TOL)?;
            routes.push(closed.u.dist(&aligned.u));
            for v in [closed, general, aligned] {
                isometry.push(v.isometry_residual());
            }
        }
        let basis = deficiency_basis(&p, TOL)?;
        let (gp, gm) = gram_pair(&p, TOL)?;
        gram.push(gp.dist(&basis.gram_plus));
        gram.push(gm.dist(&basis.gram_minus));
    }
    Ok(vec![dirichlet, routes, isometry, gram])
}

fn asymptotics() -> Result<Vec<Measurement>> {
    let unit = preset("free-unit")?;
    let quarter = m_asymptotics(&unit, &SeparatedBC::new(PI / 4.0, PI / 4.0)?, &[1e4], TOL)?;
    let zero = m_asymptotics(&unit, &SeparatedBC::DIRICHLET, &[1e4], TOL)?;
    Ok(vec![
        Measurement::below("theta_a = pi/4: |Lambda_11 - 1|", 1e-1).with(quarter[0].deviation11),
        Measurement::below("theta_a = 0: |Lambda_11 / (i z^1/2) - 1|", 1e-2).with(zero[0].deviation11),
    ])
}
