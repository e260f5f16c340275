mod common;

use common::*;
use tractor_core::expr::parse_with_r2;
use tractor_core::jets::{int, rat, JetScalar};
use tractor_core::riemann::{FieldJet, Geometry, Slot};
use tractor_core::scenes::builtin;
use tractor_core::tractor::*;
use tractor_core::Expr;

fn pair(a: &FieldJet, b: &FieldJet) -> FieldJet {
    a.outer(b).unwrap().contract(0, 1).unwrap()
}

fn constant(g: &Geometry, v: i64) -> JetScalar {
    JetScalar::constant(g.space(), g.order(), &int(v))
}

#[test]
fn projector_contractions() {
    let g = geometry("perturbed_flat_4", 0, 2);
    let (xl, xu, yl, yu) = (x_lower(&g), x_upper(&g), y_lower(&g), y_upper(&g));
    assert_eq!(pair(&yl, &xu).scalar(), &constant(&g, 1));
    assert_eq!(pair(&xl, &yu).scalar(), &constant(&g, 1));
    assert!(pair(&xl, &xu).is_zero());
    assert!(pair(&yl, &yu).is_zero());
    let zl = z_lower(&g);
    let zu = z_upper(&g);
    let zz = zl.outer(&zu).unwrap().contract(0, 2).unwrap();
    assert_eq!(zz.with_weight2(4), g.metric_field());
    assert!(xl.outer(&zu).unwrap().contract(0, 1).unwrap().is_zero());
    assert!(yl.outer(&zu).unwrap().contract(0, 1).unwrap().is_zero());
    assert!(zl.outer(&xu).unwrap().contract(0, 2).unwrap().is_zero());
    assert!(zl.outer(&yu).unwrap().contract(0, 2).unwrap().is_zero());
}

#[test]
fn projectors_resolve_the_identity() {
    // δ_A^B = Y_A X^B + Z_A^a Z^B_a + X_A Y^B
    let g = geometry("fubini_study", 1, 2);
    let n = g.dim();
    let yx = y_lower(&g).outer(&x_upper(&g)).unwrap();
    let xy = x_lower(&g).outer(&y_upper(&g)).unwrap();
    let z_raised = g.flip_slot(&z_lower(&g), 1).unwrap();
    let zz = z_raised
        .outer(&z_upper(&g))
        .unwrap()
        .contract(1, 3)
        .unwrap();
    let sum = yx.try_add(&xy).unwrap();
    let sum = sum.try_add(&zz.with_weight2(0)).unwrap();
    for i in 0..n + 2 {
        for j in 0..n + 2 {
            let expect = if i == j {
                constant(&g, 1)
            } else {
                JetScalar::zero(g.space(), g.order())
            };
            assert_eq!(sum.get(&[i, j]), &expect, "({i},{j})");
        }
    }
}

#[test]
fn tractor_metric_lowers_projectors() {
    let g = geometry("sphere4", 1, 2);
    assert_eq!(g.flip_slot(&x_upper(&g), 0).unwrap(), x_lower(&g));
    assert_eq!(g.flip_slot(&y_upper(&g), 0).unwrap(), y_lower(&g));
    assert_eq!(g.flip_slot(&z_upper(&g), 0).unwrap(), z_lower(&g));
    let h = tractor_metric(&g);
    let hinv = inverse_tractor_metric(&g);
    let id = h.outer(&hinv).unwrap().contract(1, 2).unwrap();
    let n = g.dim();
    for i in 0..n + 2 {
        for j in 0..n + 2 {
            assert_eq!(id.get(&[i, j]).is_zero(), i != j);
        }
    }
}

#[test]
fn tractor_metric_has_signature_one_up() {
    use tractor_core::riemann::inertia;
    for name in ["sphere4", "schwarzschild"] {
        let g = geometry(name, 0, 2);
        let h = tractor_metric(&g);
        let n = g.dim();
        let m: Vec<Vec<_>> = (0..n + 2)
            .map(|i| (0..n + 2).map(|j| h.get(&[i, j]).constant_term()).collect())
            .collect();
        let s = inertia(&m).unwrap();
        let base = g.metric().signature();
        assert_eq!(
            (s.positive, s.negative),
            (base.positive + 1, base.negative + 1)
        );
    }
}

#[test]
fn tractor_connection_preserves_the_metric() {
    for name in ["sphere4", "perturbed_flat_5", "schwarzschild"] {
        let g = geometry(name, 0, 4);
        assert_zero(&g.nabla(&tractor_metric(&g)).unwrap(), "∇h");
        assert_zero(&g.nabla(&inverse_tractor_metric(&g)).unwrap(), "∇h^-1");
    }
}

#[test]
fn derivative_of_x_is_z() {
    // ∇_a X^B = Z^B_a: the constant tractor (0, 0, 1) on flat space gives g_ab in the middle.
    let g = geometry("flat4", 0, 3);
    let dx = g.nabla(&x_upper(&g)).unwrap();
    let n = g.dim();
    for a in 0..n {
        for b in 0..n + 2 {
            let expect = if b == 1 + a { 1 } else { 0 };
            assert_eq!(dx.get(&[a, b]).constant_term(), int(expect));
            assert!(dx.get(&[a, b]).is_constant());
        }
    }
}

#[test]
fn box_examples() {
    let flat = geometry("flat4", 0, 4);
    let one = flat.density(&Expr::int(1), 0, 4).unwrap();
    assert!(tractor_box(&flat, &one).unwrap().is_zero());
    let sigma = parse_with_r2("(1+r2)/2", flat.metric().coords()).unwrap();
    let s = flat.density(&sigma, 2, 4).unwrap();
    let bs = tractor_box(&flat, &s).unwrap();
    assert_eq!(bs.scalar(), &JetScalar::constant(flat.space(), 2, &int(4)));

    let sphere = geometry("sphere4", 0, 4);
    let f = sphere.density(&Expr::int(3), -2, 4).unwrap();
    let bf = tractor_box(&sphere, &f).unwrap();
    assert_eq!(
        bf.scalar(),
        &JetScalar::constant(sphere.space(), 2, &int(-6))
    );
}

#[test]
fn d_of_the_round_scale_on_flat_space() {
    let g = geometry("flatclass4", 1, 4);
    let coords = g.metric().coords().to_vec();
    let sigma = parse_with_r2("(1+r2)/2", &coords).unwrap();
    let s = g.density(&sigma, 2, 4).unwrap();
    let i = g
        .flip_slot(&tractor_d(&g, &s).unwrap().scaled(&rat(1, 4)), 0)
        .unwrap();
    let o = i.order();
    assert_eq!(i.get(&[0]), &g.eval(&sigma, o).unwrap());
    for a in 0..4 {
        assert_eq!(i.get(&[1 + a]), &g.eval(&Expr::var(a), o).unwrap());
    }
    assert_eq!(i.get(&[5]), &JetScalar::constant(g.space(), o, &int(-1)));
}

#[test]
fn x_contracted_with_d_is_weight_times_factor() {
    let g = geometry("perturbed_flat_4", 1, 4);
    let mut r = rng(11);
    for w2 in [-2, 2, 4] {
        let v = random_field(&g, &[], w2, 4, &mut r);
        let xd = pair(&x_upper(&g), &tractor_d(&g, &v).unwrap());
        let w = rat(i64::from(w2), 2);
        let factor = &w * &int(4 + i64::from(w2) - 2);
        assert_zero(
            &xd.sub_aligned(&v.scaled(&factor).with_weight2(xd.weight2()))
                .unwrap(),
            "X·D V",
        );
    }
}

#[test]
fn d_at_the_degenerate_weight_is_minus_x_box() {
    let g = geometry("perturbed_flat_4", 0, 4);
    let mut r = rng(12);
    let f = random_field(&g, &[], -2, 4, &mut r);
    let df = tractor_d(&g, &f).unwrap();
    let bx = tractor_box(&g, &f).unwrap();
    for i in 1..6 {
        assert!(df.get(&[i]).is_zero());
    }
    assert_eq!(df.get(&[0]), &-bx.scalar());
}

#[test]
fn curvature_formula_matches_connection_and_commutator() {
    for (name, seed) in [
        ("schwarzschild", 1u64),
        ("perturbed_flat_5", 2),
        ("fubini_study", 3),
    ] {
        let g = geometry(name, 0, 4);
        let omega = tractor_curvature(&g);
        assert!(!omega.is_zero());
        let oracle = tractor_curvature_from_connection(&g).unwrap();
        assert_zero(&omega.try_sub(&oracle).unwrap(), name);
        let mut r = rng(seed);
        let v = random_field(&g, &[Slot::TractorUp], 0, 4, &mut r);
        assert_zero(&curvature_commutator_residual(&g, &v).unwrap(), name);
        // X^D Ω_abDE = 0
        let lowered = g.flip_slot(&omega, 2).unwrap();
        let x = x_upper(&g);
        let xo = lowered.outer(&x).unwrap().contract(2, 4).unwrap();
        assert_zero(&xo, "X^D Ω_abDE");
    }
}

#[test]
fn curvature_vanishes_for_conformally_flat_einstein() {
    for name in ["flat4", "sphere4"] {
        let g = geometry(name, 1, 3);
        assert_zero(&tractor_curvature(&g), name);
    }
}

#[test]
fn w_tractor_routes_agree() {
    for name in ["perturbed_flat_5", "perturbed_flat_4", "schwarzschild"] {
        let g = geometry(name, 0, 6);
        let explicit = w_tractor_explicit(&g);
        let via_d = g.flip_slot(&w_tractor_from_d(&g).unwrap(), 2).unwrap();
        assert_zero(&via_d.sub_aligned(&explicit).unwrap(), name);
    }
}

#[test]
fn w_tractor_vanishes_on_flat_and_schwarzschild() {
    let g = geometry("flat5", 0, 4);
    assert_zero(&w_tractor_explicit(&g), "flat");
    // In n = 4 only the Bach term survives, and Bach vanishes on Einstein metrics.
    let g = geometry("schwarzschild", 1, 5);
    assert_zero(&w_tractor_explicit(&g), "schwarzschild");
}

#[test]
fn w_tractor_has_weyl_symmetries() {
    let g = geometry("perturbed_flat_5", 2, 5);
    let w = w_tractor_explicit(&g);
    assert!(!w.is_zero());
    assert_zero(&w.try_add(&w.swapped(0, 1)).unwrap(), "W_ABCE + W_BACE");
    assert_zero(&w.try_add(&w.swapped(2, 3)).unwrap(), "W_ABCE + W_ABEC");
    assert_zero(
        &w.try_sub(&w.permuted(&[2, 3, 0, 1])).unwrap(),
        "pair exchange",
    );
    let cyc = w
        .try_add(&w.permuted(&[0, 2, 3, 1]))
        .unwrap()
        .try_add(&w.permuted(&[0, 3, 1, 2]))
        .unwrap();
    assert_zero(&cyc, "first Bianchi");
}

fn omega_expr(g: &Geometry, seed: u64) -> Expr {
    let mut r = rng(seed);
    let p = random_poly(&mut r, g.dim(), 2, 3);
    // 2 + p/7 is nonzero at the small sample points used here
    Expr::add(Expr::int(2), Expr::div(p, Expr::int(7)))
}

fn rescaled(g: &Geometry, omega: &Expr) -> Geometry {
    let m = g.metric().conformal_rescale(omega);
    Geometry::new(&m, g.point(), g.order()).unwrap()
}

#[test]
fn unit_rescale_is_identity() {
    let g = geometry("perturbed_flat_4", 0, 3);
    let mut r = rng(5);
    let v = random_field(&g, &[Slot::TractorUp, Slot::TractorDown], 2, 2, &mut r);
    let one = JetScalar::one(g.space(), 3);
    assert_eq!(rescale_field(&g, &v, &one, g.tag()).unwrap(), v);
}

#[test]
fn rescaling_composes() {
    let g = geometry("perturbed_flat_4", 1, 5);
    let (e1, e2) = (omega_expr(&g, 21), omega_expr(&g, 22));
    let g1 = rescaled(&g, &e1);
    let g12 = rescaled(&g, &Expr::mul(e1.clone(), e2.clone()));
    let o1 = g.eval(&e1, 5).unwrap();
    let o2 = g1.eval(&e2, 5).unwrap();
    let mut r = rng(6);
    for slots in [
        vec![Slot::TractorUp],
        vec![Slot::TractorDown, Slot::Cotangent],
    ] {
        let v = random_field(&g, &slots, -2, 3, &mut r);
        let step = rescale_field(&g, &v, &o1, g1.tag()).unwrap();
        let step = rescale_field(&g1, &step, &o2, g12.tag()).unwrap();
        let direct = rescale_field(&g, &v, &o1.mul_trunc(&o2), g12.tag()).unwrap();
        assert_zero(&step.sub_aligned(&direct).unwrap(), "cocycle");
    }
}

#[test]
fn x_component_rescales_as_a_density() {
    let g = geometry("sphere4", 0, 4);
    let e = omega_expr(&g, 31);
    let gh = rescaled(&g, &e);
    let om = g.eval(&e, 4).unwrap();
    let mut r = rng(7);
    let v = random_field(&g, &[Slot::TractorUp], 0, 3, &mut r);
    let vh = rescale_field(&g, &v, &om, gh.tag()).unwrap();
    let alpha = project_x(&v, 0);
    let alpha_h = tractor_core::riemann::rescale_tensor(&alpha, &om, gh.tag()).unwrap();
    assert_zero(&project_x(&vh, 0).sub_aligned(&alpha_h).unwrap(), "α̂ = Ω α");
}

#[test]
fn rescaling_preserves_the_tractor_metric() {
    let g = geometry("schwarzschild", 0, 4);
    let e = omega_expr(&g, 41);
    let gh = rescaled(&g, &e);
    let om = g.eval(&e, 4).unwrap();
    let h = tractor_metric(&g);
    let hh = rescale_field(&g, &h, &om, gh.tag()).unwrap();
    assert_zero(&hh.sub_aligned(&tractor_metric(&gh)).unwrap(), "ĥ = h");
}

#[test]
fn d_is_conformally_invariant() {
    let cases: [(&str, &[Slot], i32); 5] = [
        ("perturbed_flat_4", &[], 2),
        ("perturbed_flat_5", &[], -2),
        ("schwarzschild", &[], 0),
        ("sphere4", &[Slot::TractorUp], -2),
        ("fubini_study", &[Slot::TractorDown], 2),
    ];
    for (k, (name, slots, w2)) in cases.iter().enumerate() {
        let g = geometry(name, 0, 5);
        let e = omega_expr(&g, 50 + k as u64);
        let gh = rescaled(&g, &e);
        let om = g.eval(&e, 5).unwrap();
        let mut r = rng(60 + k as u64);
        let v = random_field(&g, slots, *w2, 4, &mut r);
        let lhs = rescale_field(&g, &tractor_d(&g, &v).unwrap(), &om, gh.tag()).unwrap();
        let rhs = tractor_d(&gh, &rescale_field(&g, &v, &om, gh.tag()).unwrap()).unwrap();
        assert!(lhs.order() >= 1);
        assert_zero(&lhs.sub_aligned(&rhs).unwrap(), name);
    }
}

#[test]
fn d_commutator_on_flat_and_sphere() {
    let g = geometry("flat4", 0, 6);
    let mut r = rng(70);
    let v = random_field(&g, &[Slot::TractorUp], 2, 6, &mut r);
    assert_zero(&d_commutator_residual(&g, &v).unwrap(), "flat");
    let g = geometry("sphere4", 1, 6);
    let x = x_upper(&g);
    assert_zero(&d_commutator_residual(&g, &x).unwrap(), "sphere, V = X");
}

#[test]
fn d_commutator_on_perturbed_flat_5() {
    let g = geometry("perturbed_flat_5", 0, 6);
    let mut r = rng(71);
    let v = random_field(&g, &[Slot::TractorUp], 4, 6, &mut r);
    let res = d_commutator_residual(&g, &v).unwrap();
    assert!(res.order() >= 1);
    assert_zero(&res, "tractor D commutator residual");
}

#[test]
fn d_commutator_lower_rank_one() {
    let g = geometry("perturbed_flat_5", 1, 6);
    let mut r = rng(72);
    let v = random_field(&g, &[Slot::TractorDown], 2, 6, &mut r);
    let res = d_commutator_lower_residual(&g, &v).unwrap();
    assert_zero(&res, "lower rank-1 commutator residual");
}

#[test]
fn d_commutator_vanishes_on_densities() {
    let g = geometry("perturbed_flat_4", 2, 6);
    let mut r = rng(73);
    let f = random_field(&g, &[], 2, 6, &mut r);
    let dd = tractor_d(&g, &tractor_d(&g, &f).unwrap()).unwrap();
    assert_zero(&dd.try_sub(&dd.swapped(0, 1)).unwrap(), "[D,D] f");
}

#[test]
fn catalog_accepts_underscore_aliases() {
    assert!(builtin("sphere_4").is_ok());
}
