mod common;

use common::*;
use tractor_core::jets::{int, rat, JetScalar};
use tractor_core::riemann::{inertia, rescale_tensor, ChartMetric, Geometry, Signature, Slot};
use tractor_core::scenes::builtin;
use tractor_core::{parse_expression, Expr};

#[test]
fn flat_has_no_connection_or_curvature() {
    let g = geometry("flat4", 0, 3);
    for c in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                assert!(g.christoffel(c, a, b).is_zero());
            }
        }
    }
    assert!(g.riemann().iter().all(JetScalar::is_zero));
    assert_zero(&g.schouten_field(), "P");
    assert!(g.j().is_zero());
}

#[test]
fn stereographic_chart_is_normal_at_origin() {
    let e = builtin("sphere4").unwrap();
    let origin = vec![int(0); 4];
    let g = Geometry::new(&e.spec.metric, &origin, 2).unwrap();
    for c in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                assert!(g.christoffel(c, a, b).constant_term() == int(0));
            }
        }
    }
}

#[test]
fn sphere_connection_is_metric_compatible_off_origin() {
    let e = builtin("sphere4").unwrap();
    let p = vec![int(1), int(0), int(0), int(0)];
    let g = Geometry::new(&e.spec.metric, &p, 4).unwrap();
    assert!(!g.christoffel(0, 0, 0).is_zero());
    assert_zero(&g.metric_compatibility().unwrap(), "∇g on sphere4");
}

#[test]
fn metric_compatibility_on_generic_scenes() {
    for name in ["perturbed_flat_4", "schwarzschild", "fubini_study"] {
        let g = geometry(name, 1, 3);
        assert_zero(&g.metric_compatibility().unwrap(), name);
    }
}

#[test]
fn round_spheres_have_half_metric_schouten() {
    for (name, n) in [("sphere4", 4i64), ("sphere5", 5), ("sphere6", 6)] {
        let e = builtin(name).unwrap();
        for p in points(&e, 3) {
            let g = Geometry::new(&e.spec.metric, &p, 3).unwrap();
            let resid = g
                .schouten_field()
                .try_sub(&g.metric_field().scaled(&half()).with_weight2(0))
                .unwrap();
            assert_zero(&resid, "P - g/2");
            assert_eq!(g.j(), &JetScalar::constant(g.space(), 1, &rat(n, 2)));
            assert_eq!(
                g.scalar_curvature(),
                &JetScalar::constant(g.space(), 1, &int(n * (n - 1)))
            );
            assert_zero(&g.constant_curvature_residual(&int(1)), "R - (gg - gg)");
        }
    }
}

#[test]
fn hyperbolic_balls_have_negative_schouten() {
    for (name, n) in [("hyperbolic4", 4i64), ("hyperbolic6", 6)] {
        let g = geometry(name, 2, 3);
        let resid = g
            .schouten_field()
            .try_add(&g.metric_field().scaled(&half()).with_weight2(0))
            .unwrap();
        assert_zero(&resid, "P + g/2");
        assert_eq!(g.j(), &JetScalar::constant(g.space(), 1, &rat(-n, 2)));
        assert_zero(
            &g.constant_curvature_residual(&int(-1)),
            "hyperbolic curvature",
        );
    }
}

#[test]
fn schwarzschild_is_ricci_flat_but_curved() {
    let g = geometry("schwarzschild", 0, 3);
    assert_zero(&g.ricci_field(), "Ric");
    assert!(g.riemann().iter().any(|c| !c.is_zero()));
    assert!(g.weyl().iter().any(|c| !c.is_zero()));
}

#[test]
fn schwarzschild_signature_is_lorentzian() {
    let e = builtin("schwarzschild").unwrap();
    let p = points(&e, 1).pop().unwrap();
    let m = e.spec.metric.value_at(&p).unwrap();
    assert_eq!(
        inertia(&m),
        Some(Signature {
            positive: 3,
            negative: 1
        })
    );
}

#[test]
fn riemann_commutator_identity_on_random_vectors() {
    for (name, seed) in [
        ("perturbed_flat_4", 3u64),
        ("schwarzschild", 4),
        ("sphere5", 5),
    ] {
        let g = geometry(name, 0, 4);
        let mut r = rng(seed);
        let v = random_field(&g, &[Slot::Tangent], 0, 4, &mut r);
        assert_zero(&g.commutator_residual(&v).unwrap(), name);
    }
}

#[test]
fn first_bianchi_and_antisymmetry() {
    let g = geometry("perturbed_flat_5", 1, 3);
    assert_zero(&g.first_bianchi(), "R_[ab^c_d]");
    let r = g.riemann_field();
    assert_zero(&r.try_add(&r.swapped(0, 1)).unwrap(), "R_ab + R_ba");
}

fn weyl_traces(g: &Geometry) {
    let c = g.weyl_field();
    for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (0, 1), (2, 3)] {
        assert_zero(&g.metric_trace(&c, i, j).unwrap(), "Weyl trace");
    }
    assert_zero(&c.try_add(&c.swapped(2, 3)).unwrap(), "C_abcd + C_abdc");
    let pair = c.permuted(&[2, 3, 0, 1]);
    assert_zero(&c.try_sub(&pair).unwrap(), "pair symmetry");
}

#[test]
fn weyl_is_trace_free() {
    for name in ["schwarzschild", "perturbed_flat_4", "fubini_study", "s2xs2"] {
        let g = geometry(name, 0, 3);
        assert!(
            g.weyl().iter().any(|c| !c.is_zero()),
            "{name} should have C != 0"
        );
        weyl_traces(&g);
    }
    let g = geometry("sphere4", 1, 3);
    assert!(g.weyl().iter().all(JetScalar::is_zero));
}

#[test]
fn riemann_reassembles_from_weyl_and_schouten() {
    // R_abcd = C_abcd + g_ca P_bd - g_cb P_ad + g_db P_ac - g_da P_bc
    let g = geometry("perturbed_flat_4", 2, 3);
    let n = g.dim();
    let o = g.order() - 2;
    let r = g.riemann_field();
    let low = g.flip_slot(&r, 2).unwrap();
    let c = g.weyl_field();
    let p = g.schouten_field();
    let m = g.metric_field().truncated(o).unwrap();
    for a in 0..n {
        for b in 0..n {
            for cc in 0..n {
                for d in 0..n {
                    let km = m
                        .get(&[cc, a])
                        .mul_trunc(p.get(&[b, d]))
                        .sub_trunc(&m.get(&[cc, b]).mul_trunc(p.get(&[a, d])))
                        .add_trunc(&m.get(&[d, b]).mul_trunc(p.get(&[a, cc])))
                        .sub_trunc(&m.get(&[d, a]).mul_trunc(p.get(&[b, cc])));
                    let rebuilt = c.get(&[a, b, cc, d]).add_trunc(&km);
                    assert_eq!(rebuilt, low.get(&[a, b, cc, d]).truncated(o).unwrap());
                }
            }
        }
    }
}

#[test]
fn cotton_is_antisymmetric_and_trace_free() {
    let g = geometry("perturbed_flat_4", 0, 4);
    let a = g.cotton_field();
    assert!(!a.is_zero());
    assert_zero(&a.try_add(&a.swapped(1, 2)).unwrap(), "A_abc + A_acb");
    assert_zero(&g.metric_trace(&a, 0, 2).unwrap(), "g^ac A_abc");
}

#[test]
fn cotton_vanishes_for_einstein_metrics() {
    for name in ["sphere4", "fubini_study", "s2xs2"] {
        let g = geometry(name, 0, 3);
        assert_zero(&g.cotton_field(), name);
    }
}

#[test]
fn bach_is_symmetric_and_trace_free() {
    let g = geometry("perturbed_flat_4", 1, 5);
    let b = g.bach_field();
    assert!(!b.is_zero());
    assert_zero(&b.try_sub(&b.swapped(0, 1)).unwrap(), "B_ab - B_ba");
    assert_zero(&g.metric_trace(&b, 0, 1).unwrap(), "g^ab B_ab");
}

fn rescaled_flat_4() -> ChartMetric {
    let flat = builtin("flat4").unwrap().spec.metric;
    let coords = flat.coords().to_vec();
    let omega = parse_expression("1+x1^2/3+x2*x3/5-x4/7", &coords).unwrap();
    flat.conformal_rescale(&omega)
}

#[test]
fn conformally_flat_rescalings_have_no_cotton_or_bach_in_dimension_four() {
    // With C = 0 the contracted Bianchi identity forces A = 0 when n ≥ 4.
    let m = rescaled_flat_4();
    let p = vec![rat(1, 2), rat(-1, 3), int(1), rat(1, 4)];
    let g = Geometry::new(&m, &p, 5).unwrap();
    assert!(!g.tracefree_schouten().is_zero());
    assert!(g.weyl().iter().all(JetScalar::is_zero));
    assert_zero(&g.cotton_field(), "Cotton of conformally flat 4-metric");
    assert_zero(&g.bach_field(), "Bach of conformally flat 4-metric");
}

#[test]
fn rescaled_product_of_spheres_has_trace_free_cotton() {
    let base = builtin("s2xs2").unwrap().spec.metric;
    let omega = parse_expression("1+x1^2/3+x2*x3/5-x4/7", base.coords()).unwrap();
    let m = base.conformal_rescale(&omega);
    let p = vec![rat(1, 2), rat(-1, 3), int(1), rat(1, 4)];
    let g = Geometry::new(&m, &p, 5).unwrap();
    let a = g.cotton_field();
    assert!(!a.is_zero());
    assert_zero(&a.try_add(&a.swapped(1, 2)).unwrap(), "A_abc + A_acb");
    assert_zero(&g.metric_trace(&a, 0, 2).unwrap(), "g^ac A_abc");
    let b = g.bach_field();
    assert_zero(&b.try_sub(&b.swapped(0, 1)).unwrap(), "B_ab - B_ba");
    assert_zero(&g.metric_trace(&b, 0, 1).unwrap(), "g^ab B_ab");
}

#[test]
fn flat_rescaled_by_stereographic_factor_is_the_sphere() {
    for n in [4usize, 5, 6] {
        let flat = builtin(&format!("flat{n}")).unwrap().spec.metric;
        let sphere = builtin(&format!("sphere{n}")).unwrap();
        let omega = tractor_core::expr::parse_with_r2("2/(1+r2)", flat.coords()).unwrap();
        let m = flat.conformal_rescale(&omega);
        for p in points(&sphere, 2) {
            let a = Geometry::new(&m, &p, 3).unwrap();
            let b = Geometry::new(&sphere.spec.metric, &p, 3).unwrap();
            assert_zero(&a.metric_difference(&b).unwrap(), "rescaled flat vs sphere");
        }
    }
}

#[test]
fn unit_rescale_is_identity() {
    let g = geometry("perturbed_flat_4", 0, 3);
    let one = JetScalar::one(g.space(), 3);
    let c = g.weyl_field();
    assert_eq!(rescale_tensor(&c, &one, g.tag()).unwrap(), c);
}

#[test]
fn weight_minus_two_density_rescales_by_inverse_square() {
    let g = geometry("flat4", 0, 3);
    let omega = g
        .eval(&parse_expression("2+x1", g.metric().coords()).unwrap(), 3)
        .unwrap();
    let f = g.density(&Expr::int(5), -4, 3).unwrap();
    let r = rescale_tensor(&f, &omega, g.tag()).unwrap();
    let expect = omega.powi(-2).unwrap().scale(&int(5));
    assert_eq!(r.scalar(), &expect);
}

#[test]
fn weyl_is_conformally_invariant_with_weight_two() {
    let base = builtin("perturbed_flat_5").unwrap().spec.metric;
    let omega_e = parse_expression("1+x1*x2/4-x3^2/5+x5/3", base.coords()).unwrap();
    let hat = base.conformal_rescale(&omega_e);
    let p = vec![rat(1, 2), rat(1, 3), rat(-1, 2), int(0), rat(1, 5)];
    let g = Geometry::new(&base, &p, 3).unwrap();
    let gh = Geometry::new(&hat, &p, 3).unwrap();
    let omega = g.eval(&omega_e, 3).unwrap();
    let transported = rescale_tensor(&g.weyl_field(), &omega, gh.tag()).unwrap();
    assert_zero(
        &transported.sub_aligned(&gh.weyl_field()).unwrap(),
        "Ĉ - Ω² C",
    );
}

#[test]
fn asymmetric_metric_is_rejected() {
    let coords: Vec<String> = (1..=3).map(|i| format!("x{i}")).collect();
    let mut g = vec![vec![Expr::int(0); 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = Expr::int(1);
    }
    g[0][1] = Expr::var(2);
    assert!(ChartMetric::new(coords, g, Signature::riemannian(3)).is_err());
}
