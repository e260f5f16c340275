use proptest::prelude::*;
use tractor_core::expr::default_coords;
use tractor_core::jets::{rat, JetSpace, Rational};
use tractor_core::{eval_expr_jet, parse_expression, Expr};

const N: usize = 3;

/// Random rational expressions whose denominators are positive everywhere.
fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5i64..=5).prop_map(Expr::int),
        (-5i64..=5, 2i64..=4).prop_map(|(p, q)| Expr::rational(&rat(p, q))),
        (0..N).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            inner.clone().prop_map(Expr::neg),
            (inner.clone(), 0u32..=3).prop_map(|(a, k)| Expr::pow(a, k as i32)),
            (inner, 1i64..=3, 0..N).prop_map(|(a, c, i)| {
                let den = Expr::add(Expr::int(c), Expr::pow(Expr::var(i), 2));
                Expr::div(a, den)
            }),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-4i64..=4, 1i64..=3).prop_map(|(p, q)| rat(p, q)), N)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbolic_derivative_matches_jet_partial(e in expr(), p in point(), k in 1usize..=3, var in 0..N) {
        let s = JetSpace::new(N, k);
        let jet = eval_expr_jet(&e, &s, &p, k).unwrap();
        let d = eval_expr_jet(&e.derivative(var), &s, &p, k - 1).unwrap();
        prop_assert_eq!(jet.partial(var).unwrap(), d);
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(a in expr(), b in expr(), p in point(), k in 0usize..=3) {
        let s = JetSpace::new(N, k);
        let ev = |e: &Expr| eval_expr_jet(e, &s, &p, k).unwrap();
        prop_assert_eq!(ev(&Expr::add(a.clone(), b.clone())), &ev(&a) + &ev(&b));
        prop_assert_eq!(ev(&Expr::mul(a.clone(), b.clone())), &ev(&a) * &ev(&b));
    }

    #[test]
    fn constant_term_is_the_point_value(e in expr(), p in point()) {
        let s = JetSpace::new(N, 2);
        let jet = eval_expr_jet(&e, &s, &p, 2).unwrap();
        prop_assert_eq!(Some(jet.constant_term()), e.eval(&p));
    }

    #[test]
    fn printed_expressions_parse_back(e in expr(), p in point()) {
        let coords = default_coords(N);
        let text = e.display(&coords).to_string();
        let back = parse_expression(&text, &coords).unwrap();
        prop_assert_eq!(back.eval(&p), e.eval(&p), "{}", text);
    }
}
