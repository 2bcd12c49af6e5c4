use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use sl_krein::boundary::{ABPair, CanonicalBC, CoupledBC, SeparatedBC};
use sl_krein::propagate::grid::Grid;
use sl_krein::spectra::green::{green_direct, Resolvent};
use sl_krein::spectra::krein::{krein_correction, krein_resolvent_check, specialized_residual, KreinCorrection};
use sl_krein::spectra::kvn::{kvn_extension, kvn_spectrum_check};
use sl_krein::spectra::{char_function, eigenvalues, normalized_char};
use sl_krein::{build_problem, preset, Coefficient, Error};

const TOL: f64 = 1e-10;

fn assert_spectrum(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "got {got:?}, want {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < tol, "got {got:?}, want {want:?}");
    }
}

#[test]
fn char_function_vanishes_on_dirichlet_spectrum() {
    let p = preset("free-pi").unwrap();
    let t4 = sl_krein::propagate::transfer(&p, C::new(4.0, 0.0), TOL).unwrap();
    assert!(normalized_char(&ABPair::dirichlet(), &t4).0.norm() < 1e-8);
    assert!(char_function(&p, &ABPair::dirichlet(), C::new(2.0, 0.0), TOL).unwrap().norm() > 1e-3);
    let unit = preset("free-unit").unwrap();
    assert!(char_function(&unit, &ABPair::neumann(), C::new(0.0, 0.0), TOL).unwrap().norm() < 1e-10);
}

#[test]
fn free_spectra() {
    let pi = preset("free-pi").unwrap();
    let d = eigenvalues(&pi, &ABPair::dirichlet(), (0.5, 10.0), 1e-10).unwrap();
    assert_spectrum(&d.flattened(), &[1.0, 4.0, 9.0], 1e-8);
    assert!(d.eigenvalues.iter().all(|e| e.mult == 1));

    let unit = preset("free-unit").unwrap();
    let n = eigenvalues(&unit, &ABPair::neumann(), (-0.5, 50.0), 1e-10).unwrap();
    assert_spectrum(&n.flattened(), &[0.0, PI * PI, 4.0 * PI * PI], 1e-6);

    let per = eigenvalues(&unit, &ABPair::periodic(), (-0.5, 50.0), 1e-10).unwrap();
    assert_spectrum(&per.flattened(), &[0.0, 4.0 * PI * PI, 4.0 * PI * PI], 1e-6);
    assert_eq!(per.eigenvalues.last().unwrap().mult, 2);
    assert_eq!(per.contour_count, 3);
}

#[test]
fn dirichlet_and_neumann_interlace() {
    let unit = preset("free-unit").unwrap();
    let d = eigenvalues(&unit, &ABPair::dirichlet(), (-1.0, 400.0), 1e-9).unwrap().flattened();
    let n = eigenvalues(&unit, &ABPair::neumann(), (-1.0, 400.0), 1e-9).unwrap().flattened();
    for k in 0..d.len() {
        // On the free problem the two spectra share (k pi)^2, so the interlacing is not strict.
        assert!(n[k] <= d[k] + 1e-8 && d[k] <= n[k + 1] + 1e-8, "{n:?} vs {d:?}");
        assert!(n[k] < n[k + 1] - 1.0);
    }
}

#[test]
fn eigenvalue_on_window_edge_is_reported() {
    let pi = preset("free-pi").unwrap();
    let err = eigenvalues(&pi, &ABPair::dirichlet(), (0.5, 4.0), 1e-10).unwrap_err();
    assert!(matches!(err, Error::WindowEdgeEigenvalue { lambda } if (lambda - 4.0).abs() < 1e-8));
}

#[test]
fn step_q_dirichlet_matches_continuity_oracle() {
    // Independent oracle: match sin(k x) on [0, 1/2] with sin(m (1 - x)) on
    // [1/2, 1], m^2 = lambda - 10, through continuity of u and u'.
    let p = preset("step-q").unwrap();
    let s = eigenvalues(&p, &ABPair::dirichlet(), (1.0, 60.0), 1e-10).unwrap().flattened();
    let g = |l: f64| {
        let k = l.sqrt();
        let m = C::new(l - 10.0, 0.0).sqrt();
        let left = C::new((0.5 * k).sin(), 0.0) * m * (m * 0.5).cos();
        let right = (m * 0.5).sin() * k * (0.5 * k).cos();
        (left + right).re
    };
    for l in &s {
        let h = 1e-7;
        assert!(g(l - h) * g(l + h) <= 0.0, "no sign change of the oracle at {l}");
    }
    assert!(!s.is_empty());
}

#[test]
fn green_closed_form_and_symmetry() {
    let unit = preset("free-unit").unwrap();
    let d = ABPair::dirichlet();
    let g = green_direct(&unit, &d, C::new(-1.0, 0.0), 0.5, 0.5, TOL).unwrap();
    let want = 0.5f64.sinh().powi(2) / 1f64.sinh();
    assert!((g.re - want).abs() < 1e-9 && g.im.abs() < 1e-12, "{g}");

    let p = preset("step-q").unwrap();
    let bc = SeparatedBC::new(1.0, 2.0).unwrap().to_ab();
    let z = C::new(-3.0, 0.0);
    let x1 = green_direct(&p, &bc, z, 0.2, 0.7, TOL).unwrap();
    let x2 = green_direct(&p, &bc, z, 0.7, 0.2, TOL).unwrap();
    assert!((x1 - x2).norm() < 1e-9);
    let w = C::new(2.0, 1.5);
    let y1 = green_direct(&p, &ABPair::periodic(), w, 0.3, 0.8, TOL).unwrap();
    let y2 = green_direct(&p, &ABPair::periodic(), w.conj(), 0.8, 0.3, TOL).unwrap();
    assert!((y1 - y2.conj()).norm() < 1e-9);
}

#[test]
fn green_inverts_the_differential_expression() {
    // f = bump with (tau - z) f computed by hand; quadrature of G against it returns f.
    let unit = preset("free-unit").unwrap();
    let z = C::new(-2.0, 0.5);
    let bump = |x: f64| (x * (1.0 - x)).powi(4);
    let bump2 = |x: f64| {
        let s = x * (1.0 - x);
        let ds = 1.0 - 2.0 * x;
        12.0 * s * s * ds * ds - 8.0 * s.powi(3)
    };
    let grid = Arc::new(Grid::for_problem(&unit, 1025, &[]));
    let rhs: Vec<C> = grid.nodes().iter().map(|&x| C::new(-bump2(x), 0.0) - z * bump(x)).collect();
    for bc in [ABPair::dirichlet(), ABPair::neumann(), ABPair::periodic()] {
        let r = Resolvent::new(&unit, &bc, z, &grid, TOL).unwrap();
        let u = r.apply(&rhs).unwrap();
        for (i, &x) in grid.nodes().iter().enumerate().step_by(64) {
            assert!((u[i] - bump(x)).norm() < 1e-6, "at {x}: {} vs {}", u[i], bump(x));
        }
        let x = 0.375;
        let i = grid.find(x).unwrap();
        let nodes = grid.nodes().to_vec();
        let kernel: Vec<C> = nodes.iter().map(|&t| green_direct(&unit, &bc, z, x, t, TOL).unwrap()).collect();
        let q = grid.simpson(|j, _| kernel[j] * rhs[j]);
        assert!((q - bump(x)).norm() < 1e-6 && (q - u[i]).norm() < 1e-6);
    }
}

fn trial_set() -> Vec<Box<dyn Fn(f64) -> C + Sync>> {
    vec![
        Box::new(|_| C::new(1.0, 0.0)),
        Box::new(|x| C::new(x, 0.0)),
        Box::new(|x| C::new((3.0 * x).sin() + x * x, 0.0)),
    ]
}

#[test]
fn krein_formula_examples() {
    let unit = preset("free-unit").unwrap();
    let trials = trial_set();
    let refs: Vec<&(dyn Fn(f64) -> C + Sync)> = trials.iter().map(|b| b.as_ref()).collect();
    let z = C::new(-1.0, 0.0);
    let c = krein_correction(&unit, &ABPair::neumann(), &ABPair::dirichlet(), z, TOL).unwrap();
    assert_eq!(c.kind(), "matrix2");
    let r = krein_resolvent_check(&unit, &ABPair::neumann(), &ABPair::dirichlet(), z, &refs[..1], TOL).unwrap();
    assert!(r < 1e-7, "{r}");
    let same = krein_resolvent_check(&unit, &ABPair::periodic(), &ABPair::periodic(), z, &refs, TOL).unwrap();
    assert!(same < 1e-10);
    assert_eq!(
        krein_correction(&unit, &ABPair::periodic(), &ABPair::periodic(), z, TOL).unwrap(),
        KreinCorrection::Zero
    );

    let sep = SeparatedBC::new(PI / 2.0, 0.0).unwrap();
    match krein_correction(&unit, &sep.to_ab(), &ABPair::dirichlet(), z, TOL).unwrap() {
        KreinCorrection::Rank1 { p, .. } => {
            assert!((p.re + 1f64.tanh().recip()).abs() < 1e-9 && p.im.abs() < 1e-12)
        }
        other => panic!("{other:?}"),
    }

    let step = preset("step-q").unwrap();
    let r =
        krein_resolvent_check(&step, &ABPair::periodic(), &ABPair::dirichlet(), C::new(-2.0, 0.0), &refs[1..2], TOL)
            .unwrap();
    assert!(r < 1e-6, "{r}");
}

#[test]
fn krein_formula_all_pairs() {
    let trials = trial_set();
    let refs: Vec<&(dyn Fn(f64) -> C + Sync)> = trials.iter().map(|b| b.as_ref()).collect();
    let zs = [C::new(-2.0, 0.5), C::new(1.0, 2.0), C::new(5.0, -3.0), C::new(-7.0, 0.0), C::new(30.0, 1.0)];
    for name in ["free-unit", "step-q"] {
        let p = preset(name).unwrap();
        let bcs = [
            ABPair::dirichlet(),
            ABPair::neumann(),
            SeparatedBC::new(1.0, 2.0).unwrap().to_ab(),
            ABPair::periodic(),
            ABPair::antiperiodic(),
            kvn_extension(&p, TOL).unwrap().to_ab(),
        ];
        for (i, target) in bcs.iter().enumerate() {
            for (j, reference) in bcs.iter().enumerate() {
                for z in zs {
                    let r = krein_resolvent_check(&p, target, reference, z, &refs, TOL).unwrap();
                    assert!(r < 1e-6, "{name} target {i} ref {j} z {z}: {r}");
                }
            }
        }
    }
}

#[test]
fn specialized_forms_match_general() {
    let cases = [
        CanonicalBC::Separated(SeparatedBC::new(1.0, 2.0).unwrap()),
        CanonicalBC::Separated(SeparatedBC::new(0.7, 0.0).unwrap()),
        CanonicalBC::Separated(SeparatedBC::new(0.0, 2.5).unwrap()),
        CanonicalBC::Separated(SeparatedBC::DIRICHLET),
        CanonicalBC::Separated(SeparatedBC::NEUMANN),
        CanonicalBC::Coupled(CoupledBC::periodic()),
        CanonicalBC::Coupled(CoupledBC::new(1.3, [[2.0, 0.5], [1.0, 0.75]]).unwrap()),
        CanonicalBC::Coupled(CoupledBC::new(0.4, [[0.5, 0.0], [3.0, 2.0]]).unwrap()),
        CanonicalBC::Coupled(CoupledBC::new(PI, [[1.0, 0.0], [-1.0, 1.0]]).unwrap()),
    ];
    for name in ["free-unit", "step-q", "step-p"] {
        let p = preset(name).unwrap();
        for c in &cases {
            for z in [C::new(-1.0, 0.0), C::new(3.0, 2.0), C::new(20.0, -0.5)] {
                let r = specialized_residual(&p, c, z, TOL).unwrap();
                assert!(r < 1e-8, "{name} {c:?} {z}: {r}");
            }
        }
    }
}

#[test]
fn kvn_examples() {
    let unit = preset("free-unit").unwrap();
    let f = kvn_extension(&unit, TOL).unwrap().f;
    let want = [[1.0, 1.0], [0.0, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((f[i][j] - want[i][j]).abs() < 1e-8, "{f:?}");
        }
    }
    let sp = kvn_extension(&preset("step-p").unwrap(), TOL).unwrap().f;
    assert!((sp[0][1] - 0.75).abs() < 1e-8, "{sp:?}");

    let shifted = unit.with_q(Coefficient::Constant(-20.0)).unwrap();
    match kvn_extension(&shifted, TOL).unwrap_err() {
        Error::NotStrictlyPositive { ground_state } => {
            assert!((ground_state - (PI * PI - 20.0)).abs() < 1e-6)
        }
        other => panic!("{other:?}"),
    }

    for name in ["free-unit", "step-q", "step-p"] {
        let check = kvn_spectrum_check(&preset(name).unwrap(), TOL).unwrap();
        assert!(check.smallest.iter().all(|l| l.abs() < 1e-6), "{name}: {check:?}");
        assert!(check.condition_residual < 1e-8, "{name}: {check:?}");
        if let Some(r) = check.relation_residual {
            assert!(r < 1e-6, "{name}: {check:?}");
        }
    }
}

#[test]
fn general_bc_spectrum_is_real_and_counted() {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
    let p = build_problem(
        0.0,
        2.0,
        Coefficient::Constant(1.5),
        Coefficient::Piecewise { breaks: vec![1.0], vals: vec![-1.0, 4.0] },
        Coefficient::Constant(0.5),
    )
    .unwrap();
    for _ in 0..5 {
        let bc = sl_krein::sample::ab_pair(&mut rng);
        let lb = sl_krein::spectra::spectrum_lower_bound(&p, &bc);
        let s = eigenvalues(&p, &bc, (lb - 1.0, 80.0), 1e-9).unwrap();
        assert_eq!(s.contour_count as usize, s.count());
        assert!(s.rotation_defect < 1e-6, "{}", s.rotation_defect);
        assert!(s.count() >= 1);
    }
}
