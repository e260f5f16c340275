mod common;

use common::*;
use rand_core::RngCore;
use tractor_core::einstein::*;
use tractor_core::expr::parse_with_r2;
use tractor_core::jets::{int, JetScalar};
use tractor_core::riemann::{FieldJet, Geometry, Slot};
use tractor_core::scenes::known_conformal_killing_fields;
use tractor_core::tractor::{tractor_curvature, w_tractor_explicit};
use tractor_core::Expr;

fn sigma(g: &Geometry, text: &str) -> Expr {
    parse_with_r2(text, g.metric().coords()).unwrap()
}

fn vector(g: &Geometry, comps: &[Expr], order: usize) -> FieldJet {
    g.field_from_exprs(&[Slot::Tangent], 0, comps, order)
        .unwrap()
}

fn coordinate_vector(g: &Geometry, order: usize) -> FieldJet {
    let comps: Vec<Expr> = (0..g.dim()).map(Expr::var).collect();
    vector(g, &comps, order)
}

#[track_caller]
fn assert_same(a: &FieldJet, b: &FieldJet, what: &str) {
    assert_zero(&a.sub_aligned(b).unwrap(), what);
}

#[test]
fn unit_scale_on_flat_space() {
    let g = geometry("flat4", 1, 4);
    let s = einstein_tractor(&g, &Expr::int(1)).unwrap();
    assert!(s.is_einstein());
    let o = s.tractor.order();
    for i in 0..6 {
        let v = if i == 0 { 1 } else { 0 };
        assert_eq!(
            s.tractor.get(&[i]),
            &JetScalar::constant(g.space(), o, &int(v))
        );
    }
}

#[test]
fn round_scale_on_flat_space() {
    // I = (σ, x_a, -1) with σ = (1 + r²)/2
    let g = geometry("flatclass4", 2, 4);
    let e = sigma(&g, "(1+r2)/2");
    let s = einstein_tractor(&g, &e).unwrap();
    assert!(s.is_einstein());
    let o = s.tractor.order();
    assert_eq!(s.tractor.get(&[0]), &g.eval(&e, o).unwrap());
    for a in 0..4 {
        assert_eq!(s.tractor.get(&[1 + a]), &g.eval(&Expr::var(a), o).unwrap());
    }
    assert_eq!(
        s.tractor.get(&[5]),
        &JetScalar::constant(g.space(), o, &int(-1))
    );
}

#[test]
fn cubic_scale_is_not_einstein() {
    let g = geometry("flat4", 0, 4);
    let e = sigma(&g, "1+x1^3");
    assert!(!einstein_tractor(&g, &e).unwrap().is_einstein());
    assert!(!scale_tracefree_schouten(&g, &e).unwrap().is_zero());
}

#[test]
fn vanishing_scale_is_rejected() {
    let g = geometry("flat4", 0, 3);
    assert!(einstein_tractor(&g, &Expr::int(0)).is_err());
}

#[test]
fn declared_scales_are_parallel_and_einstein() {
    for name in [
        "flatclass4",
        "flatclass5",
        "sphere4",
        "sphere5",
        "hyperbolic4",
        "schwarzschild",
        "fubini_study",
        "s2xs2",
        "s2xs3",
    ] {
        let e = scene(name);
        for p in points(&e, 2) {
            let g = Geometry::new(&e.spec.metric, &p, 4).unwrap();
            for s in &e.spec.einstein_scales {
                let es = einstein_tractor(&g, s).unwrap();
                assert_zero(&es.nabla, name);
                assert_zero(&scale_tracefree_schouten(&g, s).unwrap(), name);
            }
        }
    }
}

#[test]
fn parallel_tractors_are_annihilated_by_curvature() {
    for name in ["schwarzschild", "fubini_study", "s2xs2", "s2xs3"] {
        let g = geometry(name, 0, 5);
        let s = einstein_tractor(&g, &Expr::int(1)).unwrap();
        assert!(!tractor_curvature(&g).is_zero());
        for (k, c) in paw_contractions(&g, &s.tractor).unwrap().iter().enumerate() {
            assert_zero(c, &format!("{name} contraction {k}"));
        }
    }
    let g = geometry("s2xs3", 1, 5);
    assert!(!w_tractor_explicit(&g).is_zero());
}

#[test]
fn curvature_contractions_on_the_flat_class() {
    let g = geometry("flatclass4", 0, 5);
    let s = einstein_tractor(&g, &sigma(&g, "(1+r2)/2")).unwrap();
    for c in paw_contractions(&g, &s.tractor).unwrap() {
        assert_zero(&c, "flat class");
    }
}

#[test]
fn dilation_splits_as_expected() {
    // K = (0, x_b, -1) in (Y, Z, X) order: X_B coefficient -1, no Y_B part.
    let g = geometry("flat4", 1, 4);
    let k = coordinate_vector(&g, 4);
    let big = ck_split(&g, &k).unwrap();
    let o = big.order();
    assert_eq!(big.get(&[0]), &JetScalar::constant(g.space(), o, &int(-1)));
    for a in 0..4 {
        assert_eq!(big.get(&[1 + a]), &g.eval(&Expr::var(a), o).unwrap());
    }
    assert!(big.get(&[5]).is_zero());
    let (lhs, rhs) = ck_check(&g, &k).unwrap();
    assert_zero(&lhs, "dilation");
    assert_zero(&rhs, "D_(A K_B)");
}

#[test]
fn rotation_is_conformal_killing() {
    let g = geometry("flat4", 0, 4);
    let mut comps = vec![Expr::int(0); 4];
    comps[1] = Expr::var(0);
    comps[0] = Expr::neg(Expr::var(1));
    let (lhs, rhs) = ck_check(&g, &vector(&g, &comps, 4)).unwrap();
    assert_zero(&lhs, "rotation");
    assert_zero(&rhs, "rotation tractor");
}

#[test]
fn quadratic_field_is_not_conformal_killing() {
    let g = geometry("flat4", 0, 4);
    let mut comps = vec![Expr::int(0); 4];
    comps[0] = Expr::pow(Expr::var(0), 2);
    let (lhs, rhs) = ck_check(&g, &vector(&g, &comps, 4)).unwrap();
    assert!(!lhs.is_zero());
    assert!(!rhs.is_zero());
}

#[test]
fn killing_residuals_vanish_together() {
    for (si, name) in [
        "flat5",
        "sphere4",
        "hyperbolic4",
        "schwarzschild",
        "fubini_study",
        "s2xs3",
    ]
    .iter()
    .enumerate()
    {
        let e = scene(name);
        let g = geometry(name, 0, 5);
        let basis = known_conformal_killing_fields(&e);
        assert!(!basis.is_empty());
        let mut r = rng(100 + si as u64);
        let n = g.dim();
        for trial in 0..6 {
            // combinations of known fields, plus a polynomial bump on odd trials
            let mut comps = vec![Expr::int(0); n];
            for b in &basis {
                let c = Expr::int(i64::from(r.next_u32() % 5) - 2);
                for i in 0..n {
                    comps[i] = Expr::add(comps[i].clone(), Expr::mul(c.clone(), b[i].clone()));
                }
            }
            let bumped = trial % 2 == 1;
            if bumped {
                let i = trial % n;
                let v = Expr::pow(Expr::var((i + 1) % n), 2);
                comps[i] = Expr::add(comps[i].clone(), Expr::mul(Expr::var(i), v));
            }
            let (lhs, rhs) = ck_check(&g, &vector(&g, &comps, 5)).unwrap();
            assert_eq!(lhs.is_zero(), rhs.is_zero(), "{name} trial {trial}");
            assert_eq!(lhs.is_zero(), !bumped, "{name} trial {trial}");
        }
    }
}

#[test]
fn adjoint_tractor_of_the_dilation_is_parallel_and_recovers_it() {
    let g = geometry("flat4", 1, 5);
    let k = coordinate_vector(&g, 5);
    let kk = adjoint_tractor(&g, &k).unwrap();
    assert_zero(&kk.try_add(&kk.swapped(0, 1)).unwrap(), "skew");
    assert_zero(&g.nabla(&kk).unwrap(), "∇𝕂");
    assert_same(&recover_vector(&kk).unwrap(), &k, "round trip");
}

#[test]
fn adjoint_equation_on_curved_scenes() {
    for name in ["schwarzschild", "fubini_study", "s2xs3", "sphere4"] {
        let e = scene(name);
        let g = geometry(name, 0, 6);
        assert!(!tractor_curvature(&g).is_zero() || name == "sphere4");
        for comps in known_conformal_killing_fields(&e).iter().take(4) {
            let k = vector(&g, comps, 6);
            let kk = adjoint_tractor(&g, &k).unwrap();
            assert_same(&recover_vector(&kk).unwrap(), &k, name);
            assert_zero(&adjoint_residual(&g, &kk).unwrap(), name);
        }
    }
}

#[test]
fn adjoint_equation_needs_the_curvature_term() {
    let g = geometry("schwarzschild", 1, 6);
    let mut comps = vec![Expr::int(0); 4];
    comps[0] = Expr::int(1);
    let kk = adjoint_tractor(&g, &vector(&g, &comps, 6)).unwrap();
    assert!(!g.nabla(&kk).unwrap().is_zero());
}

#[test]
fn wedge_of_einstein_tractors_is_parallel() {
    let g = geometry("flatclass4", 1, 5);
    let s1 = einstein_tractor(&g, &sigma(&g, "(1-r2)/2")).unwrap();
    let s2 = einstein_tractor(&g, &sigma(&g, "(1+r2)/2")).unwrap();
    let kk = wedge(&s1.tractor, &s2.tractor).unwrap();
    assert!(!kk.is_zero());
    assert_zero(&g.nabla(&kk).unwrap(), "∇(𝕀₁∧𝕀₂)");
    let lowered = g.flip_slot(&g.flip_slot(&kk, 0).unwrap(), 1).unwrap();
    let k = ckv_from_pair(&g, &s1, &s2).unwrap();
    assert_same(&recover_vector(&lowered).unwrap(), &k, "X Z 𝕂 = k");
}

#[test]
fn pairs_of_scales_give_the_dilation() {
    let g = geometry("flatclass4", 0, 5);
    let x = coordinate_vector(&g, 5);
    for (a, b) in [("1", "(1+r2)/2"), ("(1-r2)/2", "(1+r2)/2")] {
        let s1 = einstein_tractor(&g, &sigma(&g, a)).unwrap();
        let s2 = einstein_tractor(&g, &sigma(&g, b)).unwrap();
        let k = ckv_from_pair(&g, &s1, &s2).unwrap();
        assert_same(&k, &x, "k = x");
        let (lhs, rhs) = ck_check(&g, &k).unwrap();
        assert_zero(&lhs, "CKV");
        assert_zero(&rhs, "tractor CKV");
        let (both, ko) = pair_curvature_checks(&g, &s1, &s2).unwrap();
        assert_zero(&both, "gradient contraction");
        assert_zero(&ko, "k contraction");
    }
    let s = einstein_tractor(&g, &sigma(&g, "(1+r2)/2")).unwrap();
    assert!(ckv_from_pair(&g, &s, &s).unwrap().is_zero());
}

#[test]
fn certified_scales_drop_non_einstein_candidates() {
    let g = geometry("flatclass4", 0, 4);
    let cands = ["1", "(1+r2)/2", "1+x1^3", "(1-r2)/2"].map(|t| sigma(&g, t));
    assert_eq!(certified_scales(&g, &cands).unwrap().len(), 3);
}
