//! Einstein scales as parallel tractors, conformal Killing fields as
//! tractors, and identities for pairs of Einstein scales.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jets::rat;
use crate::riemann::{FieldJet, Geometry, Slot};
use crate::tractor::{project_x, project_z, tractor_curvature, tractor_d, w_tractor_explicit};

/// A scale `σ` together with `I^A = (1/n) D^A σ` and the certificate `∇I`.
#[derive(Clone, Debug)]
pub struct EinsteinScale {
    pub sigma: Expr,
    /// `σ` as a weight 1 density.
    pub density: FieldJet,
    /// `I^A`, upper slot, weight 0.
    pub tractor: FieldJet,
    /// `∇_a I^B`.
    pub nabla: FieldJet,
}

impl EinsteinScale {
    /// Parallel at the point, to the order available.
    pub fn is_einstein(&self) -> bool {
        self.nabla.is_zero()
    }
}

/// Builds the tractor of a scale and its parallelism certificate. A
/// non-parallel result is returned rather than rejected.
pub fn einstein_tractor(geom: &Geometry, sigma: &Expr) -> Result<EinsteinScale> {
    let density = geom.density(sigma, 2, geom.order())?;
    if density.scalar().constant_term().is_zero() {
        return Err(Error::VanishingScale(format!(
            "{} at the sample point",
            sigma.display(geom.metric().coords())
        )));
    }
    let n = geom.dim() as i64;
    let d = tractor_d(geom, &density)?.scaled(&rat(1, n));
    let tractor = geom.flip_slot(&d, 0)?;
    let nabla = geom.nabla(&tractor)?;
    Ok(EinsteinScale {
        sigma: sigma.clone(),
        density,
        tractor,
        nabla,
    })
}

/// Trace-free Schouten tensor of `σ^{-2} g`, the metric of the scale itself.
pub fn scale_tracefree_schouten(geom: &Geometry, sigma: &Expr) -> Result<FieldJet> {
    let inv = Expr::div(Expr::int(1), sigma.clone());
    let m = geom.metric().conformal_rescale(&inv);
    let g = Geometry::new(&m, geom.point(), geom.order())?;
    Ok(g.tracefree_schouten())
}

/// `Ω_bc^D_E I^E`, `W_BCDE I^E` and `I^B W_BCDE`.
pub fn paw_contractions(geom: &Geometry, i: &FieldJet) -> Result<[FieldJet; 3]> {
    let omega = tractor_curvature(geom);
    let oi = omega.outer(i)?.contract(3, 4)?;
    let w = w_tractor_explicit(geom);
    let wi = w.outer(i)?.contract(3, 4)?;
    let iw = i.outer(&w)?.contract(0, 1)?;
    Ok([oi, wi, iw])
}

fn divergence(geom: &Geometry, k: &FieldJet) -> Result<FieldJet> {
    geom.nabla(k)?.contract(0, 1)
}

/// `K_B = Z_B^b k_b - (1/n) X_B ∇^a k_a` for a weight 0 vector field `k^a`;
/// a lower tractor of weight 1.
pub fn ck_split(geom: &Geometry, k: &FieldJet) -> Result<FieldJet> {
    if k.slots() != [Slot::Tangent] {
        return Err(Error::LayoutMismatch("expected a vector field".into()));
    }
    let n = geom.dim();
    let div = divergence(geom, k)?;
    let o = div.order();
    let kt = k.truncated(o)?;
    let mut out = FieldJet::zero(geom.space(), n, &[Slot::TractorDown], 2, geom.tag(), o);
    out.set(&[0], div.scalar().scale(&rat(-1, n as i64)));
    for a in 0..n {
        out.set(&[1 + a], kt.get(&[a]).clone());
    }
    Ok(out)
}

/// The conformal Killing operator `∇_(a k_b)_0`, weight 2.
pub fn conformal_killing_operator(geom: &Geometry, k: &FieldJet) -> Result<FieldJet> {
    let n = geom.dim() as i64;
    let kl = geom.flip_slot(k, 0)?;
    let s = geom.nabla(&kl)?.symmetrized(0, 1);
    let tr = geom.metric_trace(&s, 0, 1)?;
    let pure = geom.metric_field().outer(&tr)?.scaled(&rat(1, n));
    s.sub_aligned(&pure)
}

/// Both sides of the Killing splitting: `(∇_(a k_b)_0, D_(A K_B))`.
pub fn ck_check(geom: &Geometry, k: &FieldJet) -> Result<(FieldJet, FieldJet)> {
    let lhs = conformal_killing_operator(geom, k)?;
    let big = tractor_d(geom, &ck_split(geom, k)?)?.symmetrized(0, 1);
    Ok((lhs, big))
}

/// `𝕂_AB = (1/n) D_[A K_B]`, lower slots, weight 0.
pub fn adjoint_tractor(geom: &Geometry, k: &FieldJet) -> Result<FieldJet> {
    let n = geom.dim() as i64;
    Ok(tractor_d(geom, &ck_split(geom, k)?)?
        .antisymmetrized(0, 1)
        .scaled(&rat(1, n)))
}

/// `X^A Z^{Ba} 𝕂_AB`.
pub fn recover_vector(kk: &FieldJet) -> Result<FieldJet> {
    project_z(&project_x(kk, 0), 0)
}

/// `∇_b 𝕂_DE - k^a Ω_abDE` with `k^a` recovered from `𝕂`.
pub fn adjoint_residual(geom: &Geometry, kk: &FieldJet) -> Result<FieldJet> {
    let k = recover_vector(kk)?;
    let omega = geom.flip_slot(&tractor_curvature(geom), 2)?;
    let ko = k.outer(&omega)?.contract(0, 1)?;
    geom.nabla(kk)?.sub_aligned(&ko)
}

/// `𝕀₁^A 𝕀₂^B - 𝕀₁^B 𝕀₂^A`.
pub fn wedge(i1: &FieldJet, i2: &FieldJet) -> Result<FieldJet> {
    let t = i1.outer(i2)?;
    t.try_sub(&t.swapped(0, 1))
}

/// `k^a = σ₁ ∇^a σ₂ - σ₂ ∇^a σ₁`, weight 0.
pub fn ckv_from_pair(geom: &Geometry, s1: &EinsteinScale, s2: &EinsteinScale) -> Result<FieldJet> {
    let up = |s: &FieldJet| -> Result<FieldJet> { geom.flip_slot(&geom.nabla(s)?, 0) };
    let a = up(&s2.density)?.times(&s1.density)?;
    let b = up(&s1.density)?.times(&s2.density)?;
    a.sub_aligned(&b)
}

/// `(∇^a σ₁)(∇^b σ₂) Ω_ab^C_D` and `k^a Ω_ab^C_D` for a pair of scales.
pub fn pair_curvature_checks(
    geom: &Geometry,
    s1: &EinsteinScale,
    s2: &EinsteinScale,
) -> Result<(FieldJet, FieldJet)> {
    let omega = tractor_curvature(geom);
    let g1 = geom.flip_slot(&geom.nabla(&s1.density)?, 0)?;
    let g2 = geom.flip_slot(&geom.nabla(&s2.density)?, 0)?;
    let both = g1
        .outer(&g2)?
        .outer(&omega)?
        .contract(0, 2)?
        .contract(0, 1)?;
    let k = ckv_from_pair(geom, s1, s2)?;
    let ko = k.outer(&omega)?.contract(0, 1)?;
    Ok((both, ko))
}

/// Certified scales among the given expressions; scales vanishing at the
/// point are skipped.
pub fn certified_scales(geom: &Geometry, scales: &[Expr]) -> Result<Vec<EinsteinScale>> {
    let mut out = Vec::new();
    for s in scales {
        match einstein_tractor(geom, s) {
            Ok(e) if e.is_einstein() => out.push(e),
            Ok(_) | Err(Error::VanishingScale(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
