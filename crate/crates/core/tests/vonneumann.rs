use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::SeedableRng;
use sl_krein::boundary::{ABPair, CanonicalBC, CoupledBC, SeparatedBC};
use sl_krein::propagate::deficiency_basis;
use sl_krein::spectra::kvn::kvn_extension;
use sl_krein::vonneumann::{
    gamma_to_pair, gram_pair, vn_unitary_canonical, vn_unitary_coupled, vn_unitary_direct, vn_unitary_general,
    vn_unitary_separated, BasisTag,
};
use sl_krein::{preset, sample, CMat2};

const TOL: f64 = 1e-11;

#[test]
fn dirichlet_is_minus_identity_on_every_route() {
    let unit = preset("free-unit").unwrap();
    let minus = -CMat2::identity();
    let sep = vn_unitary_separated(&unit, &SeparatedBC::DIRICHLET, TOL).unwrap();
    assert_eq!(sep.u, minus);
    let general = vn_unitary_general(&unit, &ABPair::dirichlet(), &ABPair::dirichlet(), TOL).unwrap();
    assert!(general.u.dist(&minus) < 1e-12);
    assert!(general.to_pair_basis(&unit, TOL).unwrap().u.dist(&minus) < 1e-8);
    assert!(vn_unitary_direct(&unit, &ABPair::dirichlet(), TOL).unwrap().u.dist(&minus) < 1e-8);
    for v in [sep, general] {
        assert!(v.isometry_residual() < 1e-7, "{v:?}");
    }
    let same = vn_unitary_general(&unit, &ABPair::periodic(), &ABPair::periodic(), TOL).unwrap();
    assert!(same.u.dist(&minus) < 1e-12);
}

#[test]
fn free_examples() {
    let unit = preset("free-unit").unwrap();
    let left = vn_unitary_separated(&unit, &SeparatedBC::new(PI / 2.0, 0.0).unwrap(), TOL).unwrap();
    assert_eq!(left.u[(0, 0)], C::new(-1.0, 0.0));
    assert_eq!(left.u[(0, 1)], C::new(0.0, 0.0));
    assert!(left.isometry_residual() < 1e-7);

    let neumann = vn_unitary_separated(&unit, &SeparatedBC::NEUMANN, TOL).unwrap();
    let general = vn_unitary_general(&unit, &ABPair::neumann(), &ABPair::dirichlet(), TOL).unwrap();
    assert!(general.isometry_residual() < 1e-7);
    let swap = CMat2::exchange();
    // For the Dirichlet reference the change of basis is the exchange matrix.
    let c = gamma_to_pair(&unit, &ABPair::dirichlet(), TOL).unwrap();
    assert!(c.plus.dist(&swap) < 1e-12 && c.minus.dist(&swap) < 1e-12);
    assert!((swap * general.u * swap).dist(&neumann.u) < 1e-7);
    assert!(neumann.u.dist(&-CMat2::identity()) > 0.1, "Dirichlet and Neumann must differ");

    let periodic = vn_unitary_coupled(&unit, &CoupledBC::periodic(), TOL).unwrap();
    assert!(periodic.isometry_residual() < 1e-7);
    let kvn = vn_unitary_coupled(&unit, &CoupledBC::new(0.0, [[1.0, 1.0], [0.0, 1.0]]).unwrap(), TOL).unwrap();
    assert!(kvn.isometry_residual() < 1e-7);
}

#[test]
fn gram_matrices_agree() {
    for name in ["free-unit", "step-q", "step-p"] {
        let p = preset(name).unwrap();
        let d = deficiency_basis(&p, TOL).unwrap();
        let (gp, gm) = gram_pair(&p, TOL).unwrap();
        assert!(gp.dist(&d.gram_plus) < 1e-7 && gm.dist(&d.gram_minus) < 1e-7, "{name}");
        assert!(d.gram_residual < 1e-7);
        assert!(gp.dist(&gp.adjoint()) < 1e-12 && gm.dist(&gp.conj()) < 1e-15);
    }
}

#[test]
fn routes_agree() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut cases: Vec<CanonicalBC> = (0..10).map(|_| CanonicalBC::Separated(sample::separated(&mut rng))).collect();
    cases.extend((0..3).map(|_| CanonicalBC::Coupled(sample::coupled(&mut rng, false))));
    cases.extend((0..3).map(|_| CanonicalBC::Coupled(sample::coupled(&mut rng, true))));
    for name in ["free-unit", "step-q"] {
        let p = preset(name).unwrap();
        for bc in &cases {
            let ab = bc.to_ab();
            let closed = vn_unitary_canonical(&p, bc, TOL).unwrap();
            let general = vn_unitary_general(&p, &ab, &ABPair::dirichlet(), TOL).unwrap();
            let aligned = general.to_pair_basis(&p, TOL).unwrap();
            let direct = vn_unitary_direct(&p, &ab, TOL).unwrap();
            assert_eq!(closed.basis, BasisTag::Pair);
            assert!(closed.u.dist(&aligned.u) < 1e-7, "{name} {bc:?}: {:?} vs {:?}", closed.u, aligned.u);
            assert!(closed.u.dist(&direct.u) < 1e-7, "{name} {bc:?}");
            assert!(aligned.g_plus.dist(&closed.g_plus) < 1e-7);
            for v in [closed, general, aligned, direct] {
                assert!(v.isometry_residual() < 1e-7, "{name} {bc:?}: {v:?}");
            }
        }
    }
}

#[test]
fn general_route_with_other_references() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let p = preset("step-q").unwrap();
    let kvn = kvn_extension(&p, TOL).unwrap().to_ab();
    for reference in [ABPair::neumann(), ABPair::periodic(), kvn] {
        for _ in 0..4 {
            let bc = sample::ab_pair(&mut rng);
            let v = vn_unitary_general(&p, &bc, &reference, TOL).unwrap();
            assert!(v.isometry_residual() < 1e-7);
            let direct = vn_unitary_direct(&p, &bc, TOL).unwrap();
            assert!(v.to_pair_basis(&p, TOL).unwrap().u.dist(&direct.u) < 1e-7);
        }
    }
}

#[test]
fn perturbation_breaks_isometry() {
    let unit = preset("free-unit").unwrap();
    let mut v = vn_unitary_separated(&unit, &SeparatedBC::new(1.0, 2.0).unwrap(), TOL).unwrap();
    assert!(v.isometry_residual() < 1e-7);
    v.u[(0, 1)] += C::new(0.01, 0.0);
    assert!(v.isometry_residual() > 1e-3);
}
