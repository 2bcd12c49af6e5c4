use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use sl_krein::boundary::{ABPair, SeparatedBC};
use sl_krein::shift::{
    counting_difference, det_lambda, det_ratio, log_derivative, logdet_track, ssf_boundary, ssf_counting,
    trace_formula_check, Jump, TraceFormula,
};
use sl_krein::{preset, Error};

const TOL: f64 = 1e-10;

#[test]
fn free_dirichlet_to_neumann_determinant_is_minus_z() {
    let unit = preset("free-unit").unwrap();
    let mut zs: Vec<C> = (1..=10).map(|k| C::new(-(k as f64), 0.0)).collect();
    zs.extend([C::new(2.0, 1.0), C::new(2.0, -1.0), C::new(5.0, 3.0)]);
    for z in zs {
        let d = det_lambda(&unit, &ABPair::dirichlet(), &ABPair::neumann(), z, TOL).unwrap();
        assert!((d + z).norm() < 1e-7 * z.norm(), "{z}: {d}");
    }
}

#[test]
fn logdet_track_examples() {
    let unit = preset("free-unit").unwrap();
    let path = [C::new(-4.0, 0.0), C::new(-2.0, 0.0), C::new(-1.0, 0.0)];
    let t = logdet_track(&unit, &ABPair::dirichlet(), &ABPair::neumann(), &path, TOL).unwrap();
    assert!((t.eta[0] - 1.0).abs() < 1e-12 && t.eta[1].abs() < 1e-12);
    for (p, want) in t.points.iter().zip([4f64.ln(), 2f64.ln(), 0.0]) {
        assert!((p.logdet[0] - want).abs() < 1e-8 && p.logdet[1].abs() < 1e-10, "{p:?}");
    }

    let single = logdet_track(&unit, &ABPair::dirichlet(), &ABPair::neumann(), &path[..1], TOL).unwrap();
    assert_eq!(single.points.len(), 1);
    assert_eq!(single.points[0].logdet[1], 0.0);

    let pi = preset("free-pi").unwrap();
    let err = logdet_track(&pi, &ABPair::dirichlet(), &ABPair::neumann(), &[C::new(0.5, 0.0), C::new(1.5, 0.0)], TOL)
        .unwrap_err();
    assert!(matches!(err, Error::PathThroughSpectrum { .. }), "{err:?}");
}

#[test]
fn logdet_phase_matches_argument_on_a_loop() {
    // Around pi^2 the Neumann eigenvalue and the Dirichlet pole cancel; around 0 only the zero counts.
    let unit = preset("free-unit").unwrap();
    let mut path = vec![C::new(-3.0, 0.0)];
    for k in 0..=64 {
        let t = PI + 2.0 * PI * k as f64 / 64.0;
        path.push(C::new(3.0 * t.cos(), 3.0 * t.sin()));
    }
    let track = logdet_track(&unit, &ABPair::dirichlet(), &ABPair::neumann(), &path, TOL).unwrap();
    let last = track.points.last().unwrap().logdet[1];
    assert!((last + 2.0 * PI).abs() < 1e-8 || (last - 2.0 * PI).abs() < 1e-8, "{last}");
}

#[test]
fn trace_formula_examples() {
    let unit = preset("free-unit").unwrap();
    let c = trace_formula_check(&unit, &ABPair::dirichlet(), &ABPair::neumann(), C::new(-1.0, 0.0), 40, 1e-5).unwrap();
    assert!((c.lhs[0] - 1.0).abs() < 1e-5 && (c.rhs[0] - 1.0).abs() < 1e-6 && c.residual < 1e-5, "{c:?}");

    let same =
        trace_formula_check(&unit, &ABPair::periodic(), &ABPair::periodic(), C::new(-1.0, 0.0), 10, 1e-5).unwrap();
    assert!(same.lhs[0].abs() < 1e-14 && same.rhs[0].abs() < 1e-8, "{same:?}");

    let per =
        trace_formula_check(&unit, &ABPair::dirichlet(), &ABPair::periodic(), C::new(-2.0, 0.0), 40, 1e-5).unwrap();
    assert!(per.residual < 1e-5, "{per:?}");
}

#[test]
fn trace_formula_on_rough_problems() {
    let step = preset("step-q").unwrap();
    let sep = SeparatedBC::new(1.0, 2.0).unwrap().to_ab();
    let tf = TraceFormula::new(&step, &ABPair::neumann(), &sep, 60, 1e-5).unwrap();
    for z in [C::new(-3.0, 0.0), C::new(4.0, 2.0), C::new(-10.0, -1.0)] {
        let c = tf.check(z).unwrap();
        assert!(c.residual < 1e-5, "{c:?}");
    }
}

#[test]
fn trace_residual_shrinks_with_more_eigenvalues() {
    let unit = preset("step-p").unwrap();
    let z = C::new(-1.5, 0.0);
    let r: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| {
            let tf = TraceFormula::new(&unit, &ABPair::dirichlet(), &ABPair::periodic(), n, 1.0).unwrap();
            tf.check(z).unwrap().residual
        })
        .collect();
    assert!(r[2] < r[0] && r[2] < 1e-4, "{r:?}");
}

#[test]
fn insufficient_eigenvalues_are_reported() {
    let unit = preset("free-unit").unwrap();
    let err =
        trace_formula_check(&unit, &ABPair::dirichlet(), &ABPair::periodic(), C::new(-2.0, 0.0), 4, 1e-9).unwrap_err();
    assert!(matches!(err, Error::InsufficientEigs { .. }), "{err:?}");
}

#[test]
fn det_ratio_cases() {
    let unit = preset("free-unit").unwrap();
    let sep = SeparatedBC::new(1.0, 2.0).unwrap().to_ab();
    let one = det_ratio(&unit, &sep, &sep, C::new(-1.0, 0.0), TOL).unwrap();
    assert!((one.value[0] - 1.0).abs() < 1e-12 && one.value[1].abs() < 1e-12);
    let degenerate = det_ratio(&unit, &ABPair::dirichlet(), &ABPair::neumann(), C::new(-1.0, 0.0), TOL).unwrap();
    assert!(degenerate.degenerate_from && degenerate.value == [0.0, 0.0]);
    assert_eq!(
        det_ratio(&unit, &ABPair::neumann(), &ABPair::dirichlet(), C::new(-1.0, 0.0), TOL),
        Err(Error::DegenerateN)
    );

    // The ratio does not depend on z, so its log-derivative equals that of det Lambda.
    let step = preset("step-q").unwrap();
    let per = SeparatedBC::new(0.3, 2.8).unwrap().to_ab();
    let z = C::new(-2.0, 0.0);
    let h = 1e-4;
    let r = |z: C| {
        let v = det_ratio(&step, &sep, &per, z, 1e-12).unwrap().value;
        C::new(v[0], v[1])
    };
    let numeric = -((r(z + h) / r(z - h)).ln()) / (2.0 * h);
    let direct = log_derivative(&step, &sep, &per, z, 1e-12).unwrap();
    assert!((numeric - direct).norm() < 1e-6, "{numeric} vs {direct}");
}

#[test]
fn ssf_counting_examples() {
    let unit = preset("free-unit").unwrap();
    let xi = ssf_counting(&unit, &ABPair::dirichlet(), &ABPair::neumann(), 50.0, TOL).unwrap();
    assert_eq!(xi.base, 0);
    assert_eq!(xi.jumps.len(), 1);
    assert!(xi.jumps[0].at.abs() < 1e-8 && xi.jumps[0].to == -1);
    assert_eq!(xi.value(25.0), -1);

    let same = ssf_counting(&unit, &ABPair::periodic(), &ABPair::periodic(), 50.0, TOL).unwrap();
    assert!(same.jumps.is_empty());

    // Oracle: closed-form spectra counted by brute force.
    let top = 400.0;
    let xi = ssf_counting(&unit, &ABPair::dirichlet(), &ABPair::periodic(), top, TOL).unwrap();
    let dir: Vec<f64> = (1..).map(|n: i32| (n as f64 * PI).powi(2)).take_while(|&l| l <= top).collect();
    let mut per = vec![0.0];
    for n in (1..).map(|n: i32| (2.0 * n as f64 * PI).powi(2)).take_while(|&l| l <= top) {
        per.push(n);
        per.push(n);
    }
    let oracle = counting_difference(&dir, &per, 1e-12);
    assert_eq!(xi.jumps.len(), oracle.jumps.len());
    for (a, b) in xi.jumps.iter().zip(&oracle.jumps) {
        assert!((a.at - b.at).abs() < 1e-7 && a.to == b.to, "{:?} vs {:?}", xi.jumps, oracle.jumps);
    }
    assert_eq!(oracle.jumps[0], Jump { at: 0.0, to: -1 });
}

#[test]
fn ssf_boundary_examples() {
    let unit = preset("free-unit").unwrap();
    let b = ssf_boundary(&unit, &ABPair::dirichlet(), &ABPair::neumann(), &[-3.0, 5.0], 1e-3, TOL).unwrap();
    assert!(b.values[0].abs() < 1e-3 && (b.values[1] + 1.0).abs() < 1e-3, "{b:?}");
    assert!((b.eta[0] - 1.0).abs() < 1e-12);

    let lambdas = [2.0, 15.0, 30.0, 45.0];
    let b = ssf_boundary(&unit, &ABPair::dirichlet(), &ABPair::periodic(), &lambdas, 1e-3, TOL).unwrap();
    let xi = ssf_counting(&unit, &ABPair::dirichlet(), &ABPair::periodic(), 50.0, TOL).unwrap();
    for (l, v) in lambdas.iter().zip(&b.values) {
        assert!((v - xi.value(*l) as f64).abs() < 0.05, "{l}: {v} vs {}", xi.value(*l));
    }
}

#[test]
fn ssf_routes_agree_on_random_points() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let step = preset("step-q").unwrap();
    let pairs = [
        (ABPair::dirichlet(), ABPair::neumann()),
        (ABPair::neumann(), ABPair::periodic()),
        (SeparatedBC::new(1.0, 2.0).unwrap().to_ab(), ABPair::antiperiodic()),
        (ABPair::periodic(), ABPair::dirichlet()),
        (ABPair::antiperiodic(), SeparatedBC::new(0.3, 2.8).unwrap().to_ab()),
    ];
    let eps = 1e-4;
    for (from, to) in pairs {
        let xi = ssf_counting(&step, &from, &to, 120.0, TOL).unwrap();
        let mut lambdas: Vec<f64> = Vec::new();
        while lambdas.len() < 50 {
            let l: f64 = rng.gen_range(-5.0..110.0);
            if xi.jumps.iter().all(|j| (j.at - l).abs() > 10.0 * eps) {
                lambdas.push(l);
            }
        }
        let b = ssf_boundary(&step, &from, &to, &lambdas, eps, TOL).unwrap();
        let rounded = b.rounded().unwrap();
        for ((l, v), r) in lambdas.iter().zip(&b.values).zip(&rounded) {
            assert!((v - *r as f64).abs() < 0.05, "{l}: {v}");
            assert_eq!(*r, xi.value(*l), "at {l}: {xi:?}");
        }
    }
}
