#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use tractor_core::jets::{rat, Rational};
use tractor_core::riemann::{FieldJet, Geometry, Slot};
use tractor_core::scenes::{builtin, sample_points, CatalogEntry};
use tractor_core::Expr;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small(rng: &mut ChaCha8Rng, span: u32) -> i64 {
    i64::from(rng.next_u32() % (2 * span + 1)) - i64::from(span)
}

/// A sparse polynomial with `terms` monomials of total degree at most `degree`
/// and small integer coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, degree: u32, terms: usize) -> Expr {
    let mut acc = Expr::int(small(rng, 3));
    for _ in 0..terms {
        let mut c = small(rng, 3);
        if c == 0 {
            c = 1;
        }
        let mut m = Expr::int(c);
        let d = rng.next_u32() % (degree + 1);
        for _ in 0..d {
            let v = (rng.next_u32() as usize) % n;
            m = Expr::mul(m, Expr::var(v));
        }
        acc = Expr::add(acc, m);
    }
    acc
}

pub fn random_field(
    geom: &Geometry,
    slots: &[Slot],
    weight2: i32,
    order: usize,
    rng: &mut ChaCha8Rng,
) -> FieldJet {
    let n = geom.dim();
    let len: usize = slots
        .iter()
        .map(|s| if s.is_tractor() { n + 2 } else { n })
        .product();
    let exprs: Vec<Expr> = (0..len).map(|_| random_poly(rng, n, 3, 3)).collect();
    geom.field_from_exprs(slots, weight2, &exprs, order)
        .unwrap()
}

pub fn scene(name: &str) -> CatalogEntry {
    builtin(name).unwrap()
}

pub fn points(entry: &CatalogEntry, count: usize) -> Vec<Vec<Rational>> {
    sample_points(&entry.spec, count, 1).unwrap()
}

pub fn geometry(name: &str, point_index: usize, order: usize) -> Geometry {
    let e = scene(name);
    let p = points(&e, point_index + 1).pop().unwrap();
    Geometry::new(&e.spec.metric, &p, order).unwrap()
}

#[track_caller]
pub fn assert_zero(f: &FieldJet, what: &str) {
    if let Some((idx, c)) = f.first_nonzero() {
        panic!("{what}: component {idx:?} = {c}");
    }
}

pub fn half() -> Rational {
    rat(1, 2)
}
