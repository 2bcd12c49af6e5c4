use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sl_krein::boundary::{
    connection_matrices, decomposition_residual, validate_ab, ABPair, BcDoc, CanonicalBC, CoupledBC, DNPair,
    SeparatedBC, UnitaryBC,
};
use sl_krein::propagate::BoundaryFrame;
use sl_krein::{sample, CMat2, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn id() -> CMat2 {
    CMat2::identity()
}

#[test]
fn dirichlet_and_neumann_are_valid() {
    let d = validate_ab(CMat2::from_real([[1.0, 0.0], [0.0, 0.0]]), CMat2::from_real([[0.0, 0.0], [-1.0, 0.0]]));
    assert!(d.is_ok());
    let n = validate_ab(CMat2::from_real([[0.0, 1.0], [0.0, 0.0]]), CMat2::from_real([[0.0, 0.0], [0.0, 1.0]]));
    assert!(n.is_ok());
    assert_eq!(validate_ab(CMat2::zero(), CMat2::zero()), Err(Error::RankDeficient { rank: 0 }));
    let mixed = validate_ab(CMat2::from_real([[1.0, 0.0], [0.0, 0.0]]), CMat2::from_real([[0.0, 0.0], [0.0, 1.0]]));
    assert!(mixed.is_ok());
    let not_lagrangian = validate_ab(id(), CMat2::from_real([[1.0, 0.0], [0.0, 2.0]]));
    assert!(matches!(not_lagrangian, Err(Error::NotLagrangian { .. })));
}

#[test]
fn trace_matrices_of_named_conditions() {
    let d = ABPair::dirichlet().trace_matrices();
    assert!(d.d.dist(&id()) < 1e-15 && d.n.dist(&CMat2::zero()) < 1e-15);
    assert!(d.d_perp.dist(&CMat2::zero()) < 1e-15 && d.n_perp.dist(&id()) < 1e-15);
    let n = ABPair::neumann().trace_matrices();
    assert!(n.d.dist(&CMat2::zero()) < 1e-15 && n.n.dist(&id()) < 1e-15);
    assert!(n.d_perp.dist(&-id()) < 1e-15 && n.n_perp.dist(&CMat2::zero()) < 1e-15);
}

#[test]
fn connection_matrices_examples() {
    let (d, n) = (ABPair::dirichlet(), ABPair::neumann());
    assert!(connection_matrices(&n, &d).s.dist(&id()) < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let x = sample::ab_pair(&mut rng);
        let y = sample::ab_pair(&mut rng);
        let same = connection_matrices(&x, &x);
        assert!(same.t.dist(&id()) < 1e-12 && same.s.max_norm() < 1e-12);
        let s_xy = connection_matrices(&x, &y).s;
        let s_yx = connection_matrices(&y, &x).s;
        assert!(s_xy.dist(&-s_yx.adjoint()) < 1e-12);
        // gamma_to = T gamma_from + S gamma_from_perp on random frames.
        let conn = connection_matrices(&x, &y);
        let (tx, ty) = (x.trace_matrices(), y.trace_matrices());
        for _ in 0..5 {
            let f = sample::frame(&mut rng);
            let lhs = tx.apply(&f);
            let g = ty.apply(&f);
            let gp = ty.apply_perp(&f);
            let t = conn.t.mul_vec(&g);
            let s = conn.s.mul_vec(&gp);
            assert!((lhs[0] - t[0] - s[0]).norm() < 1e-11 && (lhs[1] - t[1] - s[1]).norm() < 1e-11);
        }
    }
}

#[test]
fn dn_and_unitary_examples() {
    let d = ABPair::dirichlet();
    assert!(d.to_dn().xd().dist(&id()) < 1e-15 && d.to_dn().xn().max_norm() < 1e-15);
    assert!(d.to_unitary().matrix().dist(&-id()) < 1e-15);
    assert!(ABPair::neumann().to_unitary().matrix().dist(&id()) < 1e-15);
    let back = DNPair::new(id(), CMat2::zero()).unwrap().to_ab().unwrap();
    assert!(back.equivalent(&d));
    let u = UnitaryBC::new(-id()).unwrap();
    assert!(u.to_ab().equivalent(&d));
}

#[test]
fn canonical_forms() {
    assert_eq!(ABPair::dirichlet().canonicalize().unwrap(), CanonicalBC::Separated(SeparatedBC::DIRICHLET));
    let scaled = ABPair::dirichlet().left_multiply(&id().scale_re(2.0)).unwrap();
    assert_eq!(scaled.canonicalize().unwrap(), CanonicalBC::Separated(SeparatedBC::DIRICHLET));
    assert_eq!(ABPair::periodic().canonicalize().unwrap(), CanonicalBC::Coupled(CoupledBC::periodic()));
    match ABPair::neumann().canonicalize().unwrap() {
        CanonicalBC::Separated(s) => {
            assert!((s.theta_a - PI / 2.0).abs() < 1e-15 && (s.theta_b - PI / 2.0).abs() < 1e-15)
        }
        other => panic!("{other:?}"),
    }
    let sep = SeparatedBC::new(1.0, 2.0).unwrap();
    match sep.to_ab().left_multiply(&CMat2::from_real([[2.0, 1.0], [0.0, 3.0]])).unwrap().canonicalize().unwrap() {
        CanonicalBC::Separated(s) => {
            assert!((s.theta_a - 1.0).abs() < 1e-12 && (s.theta_b - 2.0).abs() < 1e-12)
        }
        other => panic!("{other:?}"),
    }
    let cp = CoupledBC::new(0.7, [[2.0, 3.0], [1.0, 2.0]]).unwrap();
    match cp
        .to_ab()
        .left_multiply(&CMat2::new(c(1.0, 2.0), c(0.0, 1.0), c(-1.0, 0.0), c(3.0, 0.0)))
        .unwrap()
        .canonicalize()
        .unwrap()
    {
        CanonicalBC::Coupled(k) => {
            assert!((k.phi - 0.7).abs() < 1e-12);
            assert!(CMat2::from_real(k.f).dist(&CMat2::from_real(cp.f)) < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn equivalence_examples() {
    let d = ABPair::dirichlet();
    let cd = d.left_multiply(&CMat2::from_real([[2.0, 1.0], [0.0, 3.0]])).unwrap();
    assert!(d.equivalent(&cd));
    assert!(!d.equivalent(&ABPair::neumann()));
    assert!(d.equivalent(&d));
}

#[test]
fn trace_application_examples() {
    let f = BoundaryFrame::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
    let g = ABPair::dirichlet().apply_trace(&f);
    assert!(g[0].norm() == 0.0 && g[1].norm() == 0.0);
    let f = BoundaryFrame::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
    let g = ABPair::neumann().apply_trace(&f);
    assert!(g[0].norm() == 0.0 && g[1].norm() == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let ab = sample::ab_pair(&mut rng);
        for _ in 0..100 {
            assert!(decomposition_residual(&ab, &sample::frame(&mut rng)) < 1e-12);
        }
    }
}

#[test]
fn coupled_pairs() {
    assert_eq!(CoupledBC::periodic().to_ab(), ABPair::periodic());
    let kvn = CoupledBC::new(0.0, [[1.0, 1.0], [0.0, 1.0]]).unwrap().to_ab();
    assert!(kvn.a().dist(&CMat2::from_real([[1.0, 1.0], [0.0, 1.0]])) < 1e-15);
    let anti = CoupledBC::new(PI, [[1.0, 0.0], [0.0, 1.0]]).unwrap().to_ab();
    assert!(anti.equivalent(&ABPair::antiperiodic()));
    assert!(anti.a().dist(&-id()) < 1e-15);
    assert!(CoupledBC::new(0.0, [[1.0, 1.0], [1.0, 1.0]]).is_err());
}

#[test]
fn documents_round_trip() {
    let doc: BcDoc = serde_json::from_str(r#"{"kind":"separated","theta_a":0,"theta_b":0}"#).unwrap();
    assert!(doc.to_ab().unwrap().to_unitary().matrix().dist(&-id()) < 1e-15);
    let doc: BcDoc = serde_json::from_str(r#"{"kind":"named","name":"kvn"}"#).unwrap();
    assert!(doc.is_kvn() && doc.to_ab().is_err());
    let ab = SeparatedBC::new(0.3, 1.1).unwrap().to_ab();
    let text = serde_json::to_string(&BcDoc::from_ab(&ab)).unwrap();
    let back: BcDoc = serde_json::from_str(&text).unwrap();
    assert!(back.to_ab().unwrap().equivalent(&ab));
    let bad = serde_json::from_str::<BcDoc>(r#"{"kind":"separated","theta_a":0}"#);
    assert!(bad.is_err());
}

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parametrizations_commute(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ab = sample::ab_pair(&mut rng);
        let u = ab.to_unitary();
        prop_assert!((*u.matrix() * u.matrix().adjoint()).dist(&id()) < 1e-10);
        let via_dn = ab.to_dn().to_ab().unwrap();
        prop_assert!(via_dn.equivalent(&ab));
        let via_u = u.to_ab();
        prop_assert!(via_u.equivalent(&ab));
        prop_assert!(u.to_dn().to_unitary().matrix().dist(u.matrix()) < 1e-12);
        let canon = ab.canonicalize().unwrap();
        prop_assert!(canon.to_ab().equivalent(&ab));
        // rank(A) = rank(B), and for rank one the column spaces meet only in 0.
        let rb = ab.b().rank(1e-10, ab.b().singular_values().0);
        prop_assert_eq!(ab.rank_a(), rb);
    }

    #[test]
    fn left_multiplication_invariance(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ab = sample::ab_pair(&mut rng);
        let c = sample::nonsingular(&mut rng);
        prop_assert!(ab.equivalent(&ab.left_multiply(&c).unwrap()));
        let dn = ab.to_dn();
        let scaled = DNPair::new(c * *dn.xd(), c * *dn.xn()).unwrap();
        prop_assert!(scaled.to_unitary().matrix().dist(dn.to_unitary().matrix()) < 1e-10);
    }

    #[test]
    fn complement_of_complement_negates(seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sample::ab_pair(&mut rng).trace_matrices();
        let tt = t.complement().complement();
        let f = sample::frame(&mut rng);
        let x = t.apply(&f);
        let y = tt.apply(&f);
        prop_assert!((x[0] + y[0]).norm() < 1e-10 && (x[1] + y[1]).norm() < 1e-10);
    }

    #[test]
    fn separated_angles_round_trip(ta in 0.0f64..PI, tb in 0.0f64..PI, seed in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sep = SeparatedBC::new(ta, tb).unwrap();
        let ab = sep.to_ab().left_multiply(&sample::nonsingular(&mut rng)).unwrap();
        match ab.canonicalize().unwrap() {
            CanonicalBC::Separated(s) => {
                let d = |x: f64, y: f64| { let e = (x - y).rem_euclid(PI); e.min(PI - e) };
                prop_assert!(d(s.theta_a, ta) < 1e-9 && d(s.theta_b, tb) < 1e-9);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

#[test]
fn rank_one_column_spaces_intersect_trivially() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let ta = rand::Rng::gen_range(&mut rng, 0.0..PI);
        let tb = rand::Rng::gen_range(&mut rng, 0.0..PI);
        let ab = SeparatedBC::new(ta, tb).unwrap().to_ab().left_multiply(&sample::nonsingular(&mut rng)).unwrap();
        let (a, b) = (ab.a(), ab.b());
        let ca = if a.column(0).iter().map(|v| v.norm()).sum::<f64>() > 1e-12 { a.column(0) } else { a.column(1) };
        let cb = if b.column(0).iter().map(|v| v.norm()).sum::<f64>() > 1e-12 { b.column(0) } else { b.column(1) };
        let m = CMat2::from_columns(ca, cb);
        assert_eq!(m.rank(1e-10, m.singular_values().0), 2);
    }
}
