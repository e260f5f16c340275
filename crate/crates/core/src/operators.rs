//! Laplacian-type operators on conformally Einstein structures: the `P_k`
//! family, its factorisation into shifted Laplacians, Q-curvature, and the
//! order-six operator in dimension four.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::One;

use crate::einstein::EinsteinScale;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jets::{int, rat, JetScalar, Rational};
use crate::riemann::{weight_power, FieldJet, Geometry};
use crate::tractor::{
    tractor_box, tractor_d, w_tractor_explicit, w_tractor_with, x_lower, y_lower,
};

/// `b_l = (n/2 + l - 1)(n/2 - l)(2/n)`.
pub fn b_coeff(n: usize, l: usize) -> Rational {
    let h = rat(n as i64, 2);
    (&h + int(l as i64 - 1)) * (&h - int(l as i64)) * rat(2, n as i64)
}

/// `c_l = (n + 2l - 2)(n - 2l) / (4n(n-1))`.
pub fn c_coeff(n: usize, l: usize) -> Rational {
    let (n, l) = (n as i64, l as i64);
    rat((n + 2 * l - 2) * (n - 2 * l), 4 * n * (n - 1))
}

/// The shifts of the factorisation `∏_{l=1}^k (Δ - b_l J)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaplacianFactorization {
    pub n: usize,
    pub k: usize,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

impl LaplacianFactorization {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            b: (1..=k).map(|l| b_coeff(n, l)).collect(),
            c: (1..=k).map(|l| c_coeff(n, l)).collect(),
        }
    }
}

/// `𝕀^A D_A V`.
pub fn i_dot_d(geom: &Geometry, i: &FieldJet, v: &FieldJet) -> Result<FieldJet> {
    i.outer(&tractor_d(geom, v)?)?.contract(0, 1)
}

fn sigma_power(s: &EinsteinScale, power: i32) -> Result<JetScalar> {
    s.density.scalar().powi(power)
}

fn sign(k: usize) -> Rational {
    if k % 2 == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

/// `P_k f = (-1)^k σ^{-k} (𝕀·D)^k f` for `f` of weight `k - n/2`.
pub fn p_k(geom: &Geometry, s: &EinsteinScale, f: &FieldJet, k: usize) -> Result<FieldJet> {
    check_weight(geom, f, k)?;
    let mut v = f.clone();
    for _ in 0..k {
        v = i_dot_d(geom, &s.tractor, &v)?;
    }
    let k32 = k as i32;
    Ok(v.times_density(&sigma_power(s, -k32)?, -2 * k32)
        .scaled(&sign(k)))
}

/// `(-1)^{k-1} σ^{1-k} 𝕀^{A_1}⋯𝕀^{A_{k-1}} □ D_{A_1}⋯D_{A_{k-1}} f`.
pub fn p_k_box_route(
    geom: &Geometry,
    s: &EinsteinScale,
    f: &FieldJet,
    k: usize,
) -> Result<FieldJet> {
    check_weight(geom, f, k)?;
    if k == 0 {
        return Err(Error::Unsupported("k must be positive".into()));
    }
    let mut v = f.clone();
    for _ in 1..k {
        v = tractor_d(geom, &v)?;
    }
    let mut v = tractor_box(geom, &v)?;
    for _ in 1..k {
        v = s.tractor.outer(&v)?.contract(0, 1)?;
    }
    let k32 = k as i32;
    Ok(v.times_density(&sigma_power(s, 1 - k32)?, 2 - 2 * k32)
        .scaled(&sign(k - 1)))
}

fn check_weight(geom: &Geometry, f: &FieldJet, k: usize) -> Result<()> {
    let expected = 2 * k as i32 - geom.dim() as i32;
    if f.weight2() != expected {
        return Err(Error::LayoutMismatch(format!(
            "operator of order {} needs doubled weight {expected}, got {}",
            2 * k,
            f.weight2()
        )));
    }
    Ok(())
}

/// The chart geometry of `σ^{-2} g`, sharing the jet space of `geom`.
pub fn scale_geometry(geom: &Geometry, sigma: &Expr) -> Result<Geometry> {
    let m = geom
        .metric()
        .conformal_rescale(&Expr::div(Expr::int(1), sigma.clone()));
    Geometry::with_space(&m, geom.point(), geom.order(), geom.space())
}

/// `∏ (Δ - shift_l J)` in the scale of `geom`, the last shift applied first.
pub fn laplacian_product(geom: &Geometry, f: &FieldJet, shifts: &[Rational]) -> Result<FieldJet> {
    let mut v = f.clone();
    for b in shifts.iter().rev() {
        let lap = geom.laplacian(&v)?;
        let jv = v.times_density(geom.j(), -4).scaled(b);
        v = lap.sub_aligned(&jv)?;
    }
    Ok(v)
}

/// `∏ (Δ - c_l Sc)` in the scale of `geom`.
pub fn laplacian_product_sc(geom: &Geometry, f: &FieldJet, k: usize) -> Result<FieldJet> {
    let n = geom.dim();
    let mut v = f.clone();
    for l in (1..=k).rev() {
        let lap = geom.laplacian(&v)?;
        let sv = v
            .times_density(geom.scalar_curvature(), -4)
            .scaled(&c_coeff(n, l));
        v = lap.sub_aligned(&sv)?;
    }
    Ok(v)
}

/// `∏_{l=1}^k (Δ - b_l J) f` evaluated in the scale `σ` and expressed back in
/// the scale of `geom`.
pub fn gjms_product(
    geom: &Geometry,
    s: &EinsteinScale,
    f: &FieldJet,
    k: usize,
) -> Result<FieldJet> {
    check_weight(geom, f, k)?;
    let target = scale_geometry(geom, &s.sigma)?;
    let sigma = s.density.scalar();
    let inv = sigma.reciprocal()?;
    let there = crate::tractor::rescale_field(geom, f, &inv, target.tag())?;
    let shifts = LaplacianFactorization::new(geom.dim(), k).b;
    let out = laplacian_product(&target, &there, &shifts)?;
    crate::tractor::rescale_field(&target, &out, sigma, geom.tag())
}

/// `P_k^{σ₁} f - P_k^{σ₂} f`.
pub fn scale_independence_residual(
    geom: &Geometry,
    s1: &EinsteinScale,
    s2: &EinsteinScale,
    f: &FieldJet,
    k: usize,
) -> Result<FieldJet> {
    p_k(geom, s1, f, k)?.sub_aligned(&p_k(geom, s2, f, k)?)
}

fn require_even(n: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "critical Q-curvature needs even dimension, got {n}"
        )));
    }
    Ok(())
}

fn factorial(m: usize) -> Rational {
    (1..=m as i64).fold(Rational::one(), |acc, i| acc * int(i))
}

fn rpow(q: &Rational, e: usize) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * q)
}

/// `Q = (-1)^{n/2} (n-1)! (Sc / (n(n-1)))^{n/2}` for an Einstein metric.
pub fn q_einstein(n: usize, sc: &Rational) -> Result<Rational> {
    require_even(n)?;
    let base = sc / int((n * (n - 1)) as i64);
    Ok(sign(n / 2) * factorial(n - 1) * rpow(&base, n / 2))
}

/// `(-1)^{n/2} (2(n-1)/n) J^{n/2} ∏_{l=1}^{n/2-1} b_l`.
pub fn q_closed_form(n: usize, j: &Rational) -> Result<Rational> {
    require_even(n)?;
    let prod = (1..n / 2).fold(Rational::one(), |acc, l| acc * b_coeff(n, l));
    Ok(sign(n / 2) * rat(2 * (n as i64 - 1), n as i64) * rpow(j, n / 2) * prod)
}

/// `Q = (2(1-n)/n) ∏_{l=1}^{n/2-1} (Δ - b_l J) J` in the scale `σ`; the jet of
/// the function `Q^g`.
pub fn q_product_route(geom: &Geometry, s: &EinsteinScale) -> Result<JetScalar> {
    let n = geom.dim();
    require_even(n)?;
    let target = scale_geometry(geom, &s.sigma)?;
    let j = FieldJet::density(n, -4, target.tag(), target.j().clone());
    let shifts: Vec<Rational> = (1..n / 2).map(|l| b_coeff(n, l)).collect();
    let v = laplacian_product(&target, &j, &shifts)?;
    Ok(v.scalar().scale(&rat(2 * (1 - n as i64), n as i64)))
}

/// `(-1)^{n/2-1} σ^{1-n/2} □ (𝕀·D)^{n/2-2} (𝕀^A I^g_A)` with
/// `I^g_A = (n-2) Y_A - J X_A`. `I^g` belongs to the Einstein metric, so the
/// whole expression is evaluated in the scale `σ`, where `σ = 1`.
pub fn q_literal_route(geom: &Geometry, s: &EinsteinScale) -> Result<JetScalar> {
    let n = geom.dim();
    require_even(n)?;
    if n < 4 {
        return Err(Error::Unsupported("the tractor Q route needs n ≥ 4".into()));
    }
    let g = scale_geometry(geom, &s.sigma)?;
    let unit = crate::einstein::einstein_tractor(&g, &Expr::int(1))?;
    let j = FieldJet::density(n, -4, g.tag(), g.j().clone());
    let ig = y_lower(&g)
        .scaled(&int(n as i64 - 2))
        .sub_aligned(&x_lower(&g).times(&j)?)?;
    let mut v = unit.tractor.outer(&ig)?.contract(0, 1)?;
    for _ in 0..n / 2 - 2 {
        v = i_dot_d(&g, &unit.tractor, &v)?;
    }
    let v = tractor_box(&g, &v)?;
    Ok(v.scalar().scale(&sign(n / 2 - 1)))
}

/// `Q_k = (2/(n-2k)) ∏_{l=1}^k (-c_l Sc)`.
pub fn noncritical_q(n: usize, k: usize, sc: &Rational) -> Result<Rational> {
    if 2 * k == n {
        return Err(Error::Unsupported("k = n/2 is the critical case".into()));
    }
    let prod = (1..=k).fold(Rational::one(), |acc, l| acc * (-c_coeff(n, l) * sc));
    Ok(rat(2, n as i64 - 2 * k as i64) * prod)
}

/// `(2/(n-2k)) σ^{k+n/2} P_k σ^{k-n/2}`, the function jet.
pub fn noncritical_q_route(geom: &Geometry, s: &EinsteinScale, k: usize) -> Result<JetScalar> {
    let n = geom.dim();
    if 2 * k == n {
        return Err(Error::Unsupported("k = n/2 is the critical case".into()));
    }
    let w2 = 2 * k as i32 - n as i32;
    let f = FieldJet::density(n, w2, geom.tag(), weight_power(s.density.scalar(), w2)?);
    let pf = p_k(geom, s, &f, k)?;
    let back = weight_power(s.density.scalar(), 2 * k as i32 + n as i32)?;
    Ok(pf
        .scalar()
        .mul_trunc(&back)
        .scale(&rat(2, n as i64 - 2 * k as i64)))
}

/// `2 W_A^C_B^E D_C D_E f` for a W-type tractor `w` (all lower).
pub fn w_dd_term(geom: &Geometry, w: &FieldJet, f: &FieldJet) -> Result<FieldJet> {
    let ddf = tractor_d(geom, &tractor_d(geom, f)?)?;
    let wr = geom.flip_slot(&geom.flip_slot(w, 1)?, 3)?;
    let t = wr.outer(&ddf)?.contract(1, 4)?.contract(2, 3)?;
    Ok(t.scaled(&int(2)))
}

/// `□ D_A D_B f`.
pub fn box_dd(geom: &Geometry, f: &FieldJet) -> Result<FieldJet> {
    tractor_box(geom, &tractor_d(geom, &tractor_d(geom, f)?)?)
}

/// `(n-4) □ D_A D_B f + 2 W_A^C_B^E D_C D_E f`.
pub fn box3_rhs(geom: &Geometry, f: &FieldJet) -> Result<FieldJet> {
    let n = geom.dim() as i64;
    let first = box_dd(geom, f)?.scaled(&int(n - 4));
    first.add_aligned(&w_dd_term(geom, &w_tractor_explicit(geom), f)?)
}

/// `Y^A Y^B T_AB` for a lower rank-2 tractor.
pub fn yy_component(t: &FieldJet) -> FieldJet {
    t.component_slice(0, 0)
        .component_slice(0, 0)
        .with_weight2(t.weight2() - 4)
}

/// The tractor with its `Y^A Y^B` component removed: what every other pair of
/// projectors sees.
pub fn off_yy_part(t: &FieldJet) -> FieldJet {
    let mut out = t.clone();
    out.set(&[0, 0], JetScalar::zero(t.space(), t.order()));
    out
}

/// `N f = Y^A Y^B □ D_A D_B f`.
pub fn n_operator(geom: &Geometry, f: &FieldJet) -> Result<FieldJet> {
    Ok(yy_component(&box_dd(geom, f)?))
}

/// `□⁰₃ f`, the `Y^A Y^B` part of the order-six right-hand side over `n-4`.
pub fn box3_extract(geom: &Geometry, f: &FieldJet) -> Result<FieldJet> {
    let n = geom.dim() as i64;
    if n == 4 {
        return Err(Error::Unsupported(
            "the order-six extraction divides by n-4; use p3_dim4 in dimension 4".into(),
        ));
    }
    check_weight(geom, f, 3)?;
    Ok(yy_component(&box3_rhs(geom, f)?).scaled(&rat(1, n - 4)))
}

/// `2 ∇_c ∇_d f - (n-6) P_cd f`.
fn hessian_term(geom: &Geometry, f: &FieldJet) -> Result<FieldJet> {
    let n = geom.dim() as i64;
    let h = geom.nabla_n(f, 2)?.scaled(&int(2));
    let pf = geom.schouten_field().outer(f)?.scaled(&int(n - 6));
    h.sub_aligned(&pf)
}

/// `8 B^{cd} (2 ∇_c ∇_d f - (n-6) P_cd f)`.
pub fn bach_term(geom: &Geometry, f: &FieldJet) -> Result<FieldJet> {
    let b = geom.raise_all(&geom.bach_field());
    let t = b
        .outer(&hessian_term(geom, f)?)?
        .contract(0, 2)?
        .contract(0, 1)?;
    Ok(t.scaled(&int(8)))
}

/// `σ^{-1} ∇_e σ`, weight 0.
fn log_gradient(geom: &Geometry, s: &EinsteinScale) -> Result<FieldJet> {
    let inv = sigma_power(s, -1)?;
    Ok(geom.nabla(&s.density)?.times_density(&inv, -2))
}

/// `8 A^{cde} (σ^{-1} ∇_e σ) (2 ∇_c ∇_d f - (n-6) P_cd f)`.
pub fn cotton_term(geom: &Geometry, s: &EinsteinScale, f: &FieldJet) -> Result<FieldJet> {
    let a = geom.raise_all(&geom.cotton_field());
    let ag = a.outer(&log_gradient(geom, s)?)?.contract(2, 3)?;
    let t = ag
        .outer(&hessian_term(geom, f)?)?
        .contract(0, 2)?
        .contract(0, 1)?;
    Ok(t.scaled(&int(8)))
}

/// `P_3 f = N f - 8 A^{cde} (σ^{-1} ∇_e σ)(2 ∇_c ∇_d f - (n-6) P_cd f)`.
pub fn p3_dim4(geom: &Geometry, s: &EinsteinScale, f: &FieldJet) -> Result<FieldJet> {
    if geom.dim() != 4 {
        return Err(Error::Unsupported(format!(
            "the Cotton route is the dimension 4 formula, got n = {}",
            geom.dim()
        )));
    }
    check_weight(geom, f, 3)?;
    n_operator(geom, f)?.sub_aligned(&cotton_term(geom, s, f)?)
}

/// `-σ^{-1} A_eba ∇^a σ`, the stand-in for the Bach tensor in `W̃`.
fn cotton_bach(geom: &Geometry, s: &EinsteinScale) -> Result<FieldJet> {
    let grad = geom.flip_slot(&log_gradient(geom, s)?, 0)?;
    Ok(geom
        .cotton_field()
        .outer(&grad)?
        .contract(2, 3)?
        .neg()
        .with_weight2(-4))
}

/// `W̃_ABCE`: the W-tractor with `(n-4)` divided out, using
/// `B_cd = (4-n) σ^{-1} A_cde ∇^e σ`.
pub fn w_tilde(geom: &Geometry, s: &EinsteinScale) -> Result<FieldJet> {
    Ok(w_tractor_with(
        geom,
        &Rational::one(),
        &cotton_bach(geom, s)?,
    ))
}

/// `□ D_A D_B f + 2 W̃_A^C_B^E D_C D_E f`.
pub fn tilde_rhs(geom: &Geometry, s: &EinsteinScale, f: &FieldJet) -> Result<FieldJet> {
    box_dd(geom, f)?.add_aligned(&w_dd_term(geom, &w_tilde(geom, s)?, f)?)
}

/// `B_cd - (4-n) σ^{-1} A_cde ∇^e σ`.
pub fn bach_cotton_residual(geom: &Geometry, s: &EinsteinScale) -> Result<FieldJet> {
    let n = geom.dim() as i64;
    let grad = geom.flip_slot(&log_gradient(geom, s)?, 0)?;
    let rhs = geom
        .cotton_field()
        .outer(&grad)?
        .contract(2, 3)?
        .scaled(&int(4 - n))
        .with_weight2(-4);
    geom.bach_field().sub_aligned(&rhs)
}

/// `A_cd^e (σ₂ ∇_e σ₁ - σ₁ ∇_e σ₂)`.
pub fn a_term_residual(
    geom: &Geometry,
    s1: &EinsteinScale,
    s2: &EinsteinScale,
) -> Result<FieldJet> {
    let g1 = geom.nabla(&s1.density)?.times(&s2.density)?;
    let g2 = geom.nabla(&s2.density)?.times(&s1.density)?;
    let k = geom.flip_slot(&g1.sub_aligned(&g2)?, 0)?;
    geom.cotton_field().outer(&k)?.contract(2, 3)
}

/// `-j(j+n-1)`, the Laplacian eigenvalue of degree `j` spherical harmonics
/// on the unit `n`-sphere.
pub fn sphere_laplace_eigenvalue(n: usize, j: usize) -> Rational {
    int(-((j * (j + n - 1)) as i64))
}

/// `∏_{l=1}^k (λ - c_l Sc)`.
pub fn gjms_eigenvalue(n: usize, k: usize, lambda: &Rational, sc: &Rational) -> Rational {
    (1..=k).fold(Rational::one(), |acc, l| {
        acc * (lambda - c_coeff(n, l) * sc)
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralRow {
    pub degree: usize,
    pub k: usize,
    pub laplace: Rational,
    pub eigenvalue: Rational,
}

/// GJMS eigenvalues on the unit `n`-sphere for `1 ≤ k ≤ kmax`, `0 ≤ j ≤ jmax`.
pub fn spectral_table(n: usize, kmax: usize, jmax: usize) -> Vec<SpectralRow> {
    let sc = int((n * (n - 1)) as i64);
    let mut rows = Vec::new();
    for k in 1..=kmax {
        for j in 0..=jmax {
            let lambda = sphere_laplace_eigenvalue(n, j);
            let eigenvalue = gjms_eigenvalue(n, k, &lambda, &sc);
            rows.push(SpectralRow {
                degree: j,
                k,
                laplace: lambda,
                eigenvalue,
            });
        }
    }
    rows
}

/// Spherical harmonics of degree `j ≤ 2` pulled back to the stereographic
/// chart of the unit sphere.
pub fn sphere_harmonics(n: usize, j: usize) -> Result<Vec<Expr>> {
    let r2 = (0..n)
        .map(|i| Expr::pow(Expr::var(i), 2))
        .reduce(Expr::add)
        .unwrap_or_else(|| Expr::int(0));
    let den = Expr::add(Expr::int(1), r2.clone());
    let x = |i: usize| Expr::div(Expr::mul(Expr::int(2), Expr::var(i)), den.clone());
    let last = Expr::div(Expr::sub(Expr::int(1), r2), den.clone());
    Ok(match j {
        0 => vec![Expr::int(1)],
        1 => vec![x(0), last],
        2 => vec![
            Expr::mul(x(0), x(1)),
            Expr::sub(Expr::pow(x(0), 2), Expr::pow(last.clone(), 2)),
            Expr::mul(x(1), last),
        ],
        _ => return Err(Error::Unsupported(format!("harmonics of degree {j}"))),
    })
}

/// `P_k u - λ u` for a density `u` of the right weight.
pub fn eigen_residual(
    geom: &Geometry,
    s: &EinsteinScale,
    u: &FieldJet,
    k: usize,
    lambda: &Rational,
) -> Result<FieldJet> {
    let pu = p_k(geom, s, u, k)?;
    let lu = u.scaled(lambda).with_weight2(pu.weight2());
    pu.sub_aligned(&lu)
}
