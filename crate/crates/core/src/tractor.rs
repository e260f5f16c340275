//! The standard tractor bundle in a chosen scale.
//!
//! An upper tractor `V^A = (α, μ_a, τ)` is stored at indices `0, 1..=n, n+1`
//! with `μ` carrying a lower tensor index. A lower tractor
//! `λ_A = (κ, ν^a, ρ)` is stored so that `λ_A V^A = κα + ν^a μ_a + ρτ`.
//! Hence `X_A = e_0`, `Y_A = e_{n+1}`, `X^A = e_{n+1}`, `Y^A = e_0`, and the
//! tractor metric on upper tractors reads `2ατ + g^ab μ_a μ_b`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::jets::{int, rat, JetScalar, Rational};
use crate::riemann::{d_factor, ConnTable, FieldJet, Geometry, ScaleTag, Slot};

/// Dense connection matrix `𝒜_a` acting on upper tractors, so that
/// `∇_a V^I = ∂_a V^I + 𝒜_a[I][J] V^J`. Entries have order `K - 2`.
pub fn connection_matrix(geom: &Geometry, a: usize) -> Vec<JetScalar> {
    let n = geom.dim();
    let m = n + 2;
    let o = geom.order() - 2;
    let space = geom.space();
    let tr = |j: &JetScalar| j.truncated(o).expect("order");
    let mut out = vec![JetScalar::zero(space, o); m * m];
    out[1 + a] = JetScalar::constant(space, o, &int(-1));
    for b in 0..n {
        let row = (1 + b) * m;
        for e in 0..n {
            out[row + 1 + e] = -tr(geom.christoffel(e, a, b));
        }
        out[row + n + 1] = tr(geom.g(a, b));
        out[row] = geom.schouten(a, b).clone();
    }
    for c in 0..n {
        let mut acc = JetScalar::zero(space, o);
        for b in 0..n {
            let p = geom.schouten(a, b);
            let gi = geom.ginv(b, c);
            if !p.is_zero() && !gi.is_zero() {
                acc = acc.add_trunc(&p.mul_trunc(gi));
            }
        }
        out[(n + 1) * m + 1 + c] = -acc;
    }
    out
}

pub(crate) fn connection_tables(geom: &Geometry) -> (ConnTable, ConnTable) {
    let n = geom.dim();
    let m = n + 2;
    let mut up: ConnTable = vec![vec![Vec::new(); m]; n];
    let mut down: ConnTable = vec![vec![Vec::new(); m]; n];
    for a in 0..n {
        let mat = connection_matrix(geom, a);
        for i in 0..m {
            for j in 0..m {
                let c = &mat[i * m + j];
                if !c.is_zero() {
                    up[a][j].push((i, c.clone()));
                    down[a][i].push((j, -c));
                }
            }
        }
    }
    (up, down)
}

fn constant_field(
    geom: &Geometry,
    slots: &[Slot],
    weight2: i32,
    entries: &[(&[usize], JetScalar)],
) -> FieldJet {
    let order = geom.order();
    let mut f = FieldJet::zero(geom.space(), geom.dim(), slots, weight2, geom.tag(), order);
    for (idx, v) in entries {
        f.set(idx, v.clone());
    }
    f
}

fn one(geom: &Geometry) -> JetScalar {
    JetScalar::one(geom.space(), geom.order())
}

/// `h_AB`, pairing two upper tractors.
pub fn tractor_metric(geom: &Geometry) -> FieldJet {
    let n = geom.dim();
    let mut f = constant_field(
        geom,
        &[Slot::TractorDown, Slot::TractorDown],
        0,
        &[(&[0, n + 1], one(geom)), (&[n + 1, 0], one(geom))],
    );
    for a in 0..n {
        for b in 0..n {
            f.set(&[1 + a, 1 + b], geom.ginv(a, b).clone());
        }
    }
    f
}

/// `h^AB`, pairing two lower tractors.
pub fn inverse_tractor_metric(geom: &Geometry) -> FieldJet {
    let n = geom.dim();
    let mut f = constant_field(
        geom,
        &[Slot::TractorUp, Slot::TractorUp],
        0,
        &[(&[0, n + 1], one(geom)), (&[n + 1, 0], one(geom))],
    );
    for a in 0..n {
        for b in 0..n {
            f.set(&[1 + a, 1 + b], geom.g(a, b).clone());
        }
    }
    f
}

/// `X_A ∈ E_A[1]`.
pub fn x_lower(geom: &Geometry) -> FieldJet {
    constant_field(geom, &[Slot::TractorDown], 2, &[(&[0], one(geom))])
}

/// `X^A ∈ E^A[1]`.
pub fn x_upper(geom: &Geometry) -> FieldJet {
    constant_field(
        geom,
        &[Slot::TractorUp],
        2,
        &[(&[geom.dim() + 1], one(geom))],
    )
}

/// `Y_A ∈ E_A[-1]`.
pub fn y_lower(geom: &Geometry) -> FieldJet {
    constant_field(
        geom,
        &[Slot::TractorDown],
        -2,
        &[(&[geom.dim() + 1], one(geom))],
    )
}

/// `Y^A ∈ E^A[-1]`.
pub fn y_upper(geom: &Geometry) -> FieldJet {
    constant_field(geom, &[Slot::TractorUp], -2, &[(&[0], one(geom))])
}

/// `Z_Aa ∈ E_Aa[1]`, slots `(A, a)`.
pub fn z_lower(geom: &Geometry) -> FieldJet {
    let n = geom.dim();
    let mut f = FieldJet::zero(
        geom.space(),
        n,
        &[Slot::TractorDown, Slot::Cotangent],
        2,
        geom.tag(),
        geom.order(),
    );
    for a in 0..n {
        f.set(&[1 + a, a], one(geom));
    }
    f
}

/// `Z^A_a ∈ E^A_a[1]`, slots `(A, a)`.
pub fn z_upper(geom: &Geometry) -> FieldJet {
    let n = geom.dim();
    let mut f = FieldJet::zero(
        geom.space(),
        n,
        &[Slot::TractorUp, Slot::Cotangent],
        2,
        geom.tag(),
        geom.order(),
    );
    for a in 0..n {
        for c in 0..n {
            f.set(&[1 + c, a], geom.g(c, a).clone());
        }
    }
    f
}

/// Replaces a tensor slot by a tractor slot through the `Z` projector:
/// a tangent slot `u^a` becomes `Z_Aa u^a` (weight +1), a cotangent slot
/// `u_a` becomes `Z^Aa u_a` (weight -1).
pub fn insert_z(t: &FieldJet, slot: usize) -> Result<FieldJet> {
    let (kind, shift) = match t.slots()[slot] {
        Slot::Tangent => (Slot::TractorDown, 2),
        Slot::Cotangent => (Slot::TractorUp, -2),
        other => {
            return Err(Error::LayoutMismatch(alloc::format!(
                "insert_z needs a tensor slot, got {other:?}"
            )))
        }
    };
    let n = t.dim();
    let mut slots = t.slots().to_vec();
    slots[slot] = kind;
    let mut out = FieldJet::zero(
        t.space(),
        n,
        &slots,
        t.weight2() + shift,
        t.scale_tag(),
        t.order(),
    );
    for off in 0..t.len() {
        let v = &t.comps()[off];
        if v.is_zero() {
            continue;
        }
        let mut idx = t.multi_index(off);
        idx[slot] += 1;
        out.set(&idx, v.clone());
    }
    Ok(out)
}

/// Projects a tractor slot onto its middle part, the inverse of [`insert_z`]:
/// a lower tractor slot becomes `Z^A_a λ_A` (tangent, weight -1), an upper one
/// becomes `Z_Aa V^A` (cotangent, weight +1).
pub fn project_z(t: &FieldJet, slot: usize) -> Result<FieldJet> {
    let (kind, shift) = match t.slots()[slot] {
        Slot::TractorDown => (Slot::Tangent, -2),
        Slot::TractorUp => (Slot::Cotangent, 2),
        other => {
            return Err(Error::LayoutMismatch(alloc::format!(
                "project_z needs a tractor slot, got {other:?}"
            )))
        }
    };
    let n = t.dim();
    let mut slots = t.slots().to_vec();
    slots[slot] = kind;
    let mut out = FieldJet::zero(
        t.space(),
        n,
        &slots,
        t.weight2() + shift,
        t.scale_tag(),
        t.order(),
    );
    for off in 0..out.len() {
        let mut idx = out.multi_index(off);
        idx[slot] += 1;
        out.comps_mut()[off] = t.get(&idx).clone();
    }
    Ok(out)
}

/// The component of a tractor slot paired against `X` (index 0 of an upper
/// slot, index `n+1` of a lower slot), dropping that slot. Weight +1.
pub fn project_x(t: &FieldJet, slot: usize) -> FieldJet {
    let n = t.dim();
    let value = if t.slots()[slot] == Slot::TractorUp {
        0
    } else {
        n + 1
    };
    t.component_slice(slot, value).with_weight2(t.weight2() + 2)
}

/// The component of a tractor slot paired against `Y` (index `n+1` of an
/// upper slot, index 0 of a lower slot), dropping that slot. Weight -1.
pub fn project_y(t: &FieldJet, slot: usize) -> FieldJet {
    let n = t.dim();
    let value = if t.slots()[slot] == Slot::TractorUp {
        n + 1
    } else {
        0
    };
    t.component_slice(slot, value).with_weight2(t.weight2() - 2)
}

/// `□V = ΔV + wJV`; weight drops by 2.
pub fn tractor_box(geom: &Geometry, v: &FieldJet) -> Result<FieldJet> {
    let lap = geom.laplacian(v)?;
    let jv = v
        .times_density(geom.j(), -4)
        .scaled(&rat(i64::from(v.weight2()), 2));
    lap.add_aligned(&jv)
}

/// `D_A V = (n+2w-2) w Y_A V + (n+2w-2) Z_Aa ∇^a V - X_A □V`: a new leading
/// lower tractor slot, weight `w - 1`.
pub fn tractor_d(geom: &Geometry, v: &FieldJet) -> Result<FieldJet> {
    geom.check_tag(v)?;
    let n = geom.dim();
    let w2 = v.weight2();
    let f = d_factor(n, w2);
    let bx = tractor_box(geom, v)?;
    let mut slots = Vec::with_capacity(v.rank() + 1);
    slots.push(Slot::TractorDown);
    slots.extend_from_slice(v.slots());
    let o = bx.order();
    let mut out = FieldJet::zero(geom.space(), n, &slots, w2 - 2, geom.tag(), o);
    let len = v.len();
    for off in 0..len {
        out.comps_mut()[off] = -&bx.comps()[off];
    }
    if !f.is_zero() {
        let grad = geom.flip_slot(&geom.nabla(v)?, 0)?.truncated(o)?;
        for a in 0..n {
            for off in 0..len {
                out.comps_mut()[(1 + a) * len + off] = grad.comps()[a * len + off].scale(&f);
            }
        }
        let fw = &f * &rat(i64::from(w2), 2);
        if !fw.is_zero() {
            let vt = v.truncated(o)?;
            for off in 0..len {
                out.comps_mut()[(n + 1) * len + off] = vt.comps()[off].scale(&fw);
            }
        }
    }
    Ok(out)
}

/// Repeated application of `D`, the last application outermost.
pub fn tractor_d_n(geom: &Geometry, v: &FieldJet, times: usize) -> Result<FieldJet> {
    let mut out = v.clone();
    for _ in 0..times {
        out = tractor_d(geom, &out)?;
    }
    Ok(out)
}

/// Tractor curvature `Ω_ab^C_E` from the Weyl and Cotton tensors, slots
/// `(a, b, C↑, E↓)`, weight 0, order `K - 3`.
pub fn tractor_curvature(geom: &Geometry) -> FieldJet {
    let n = geom.dim();
    let o = geom.order() - 3;
    let weyl = geom.weyl_field();
    let cotton = geom.cotton_field();
    // C_ab d^f and A^f_ab
    let c_mixed = geom
        .flip_slot(&weyl, 3)
        .expect("same scale")
        .truncated(o)
        .expect("order");
    let a_up = geom.flip_slot(&cotton, 0).expect("same scale");
    let mut out = FieldJet::zero(
        geom.space(),
        n,
        &[
            Slot::Cotangent,
            Slot::Cotangent,
            Slot::TractorUp,
            Slot::TractorDown,
        ],
        0,
        geom.tag(),
        o,
    );
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                for f in 0..n {
                    out.set(&[a, b, 1 + d, 1 + f], c_mixed.get(&[a, b, d, f]).clone());
                }
                out.set(&[a, b, 1 + d, 0], cotton.get(&[d, a, b]).clone());
                out.set(&[a, b, n + 1, 1 + d], -a_up.get(&[d, a, b]));
            }
        }
    }
    out
}

/// Tractor curvature computed as `∂_a 𝒜_b - ∂_b 𝒜_a + [𝒜_a, 𝒜_b]`.
pub fn tractor_curvature_from_connection(geom: &Geometry) -> Result<FieldJet> {
    let n = geom.dim();
    let m = n + 2;
    let o = geom.order() - 3;
    let mats: Vec<Vec<JetScalar>> = (0..n).map(|a| connection_matrix(geom, a)).collect();
    let mut out = FieldJet::zero(
        geom.space(),
        n,
        &[
            Slot::Cotangent,
            Slot::Cotangent,
            Slot::TractorUp,
            Slot::TractorDown,
        ],
        0,
        geom.tag(),
        o,
    );
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for i in 0..m {
                for j in 0..m {
                    let mut acc = mats[b][i * m + j]
                        .partial(a)?
                        .sub_trunc(&mats[a][i * m + j].partial(b)?);
                    for k in 0..m {
                        let x = &mats[a][i * m + k];
                        let y = &mats[b][k * m + j];
                        if !x.is_zero() && !y.is_zero() {
                            acc = acc.add_trunc(&x.mul_trunc(y));
                        }
                        let x = &mats[b][i * m + k];
                        let y = &mats[a][k * m + j];
                        if !x.is_zero() && !y.is_zero() {
                            acc = acc.sub_trunc(&x.mul_trunc(y));
                        }
                    }
                    out.set(&[a, b, i, j], acc.truncated(o)?);
                }
            }
        }
    }
    Ok(out)
}

/// `[∇_a, ∇_b] V^C - Ω_ab^C_E V^E` for an upper tractor `V`.
pub fn curvature_commutator_residual(geom: &Geometry, v: &FieldJet) -> Result<FieldJet> {
    if v.slots() != [Slot::TractorUp] {
        return Err(Error::LayoutMismatch(
            "expected a rank-1 upper tractor".into(),
        ));
    }
    let dd = geom.nabla(&geom.nabla(v)?)?;
    let comm = dd.try_sub(&dd.swapped(0, 1))?;
    let omega = tractor_curvature(geom).with_weight2(0);
    let ov = omega.outer(v)?.contract(3, 4)?;
    comm.sub_aligned(&ov)
}

/// `Ω_BC^E_F := Z_B^b Z_C^c Ω_bc^E_F`, slots `(B↓, C↓, E↑, F↓)`, weight -2.
pub fn omega_tractor(geom: &Geometry) -> FieldJet {
    let omega = tractor_curvature(geom);
    let raised = geom
        .flip_slot(&geom.flip_slot(&omega, 0).expect("scale"), 1)
        .expect("scale");
    insert_z(&insert_z(&raised, 0).expect("tangent"), 1).expect("tangent")
}

/// `X_[A Ω_BC]^E_F`, slots `(A, B, C, E↑, F↓)`, weight -1.
pub fn x_wedge_omega(geom: &Geometry) -> FieldJet {
    let xo = x_lower(geom).outer(&omega_tractor(geom)).expect("scale");
    let t2 = xo.permuted(&[2, 0, 1, 3, 4]);
    let t3 = xo.permuted(&[1, 2, 0, 3, 4]);
    xo.try_add(&t2)
        .and_then(|s| s.try_add(&t3))
        .expect("layout")
        .scaled(&rat(1, 3))
}

/// `W_BC^E_F = (3/(n-2)) D^A X_[A Ω_BC]^E_F`, slots `(B↓, C↓, E↑, F↓)`, weight -2.
pub fn w_tractor_from_d(geom: &Geometry) -> Result<FieldJet> {
    let n = geom.dim();
    let t = x_wedge_omega(geom);
    let dt = tractor_d(geom, &t)?;
    let raised = geom.flip_slot(&dt, 0)?;
    Ok(raised.contract(0, 1)?.scaled(&rat(3, n as i64 - 2)))
}

/// `W_ABCE` (all lower, weight -2) from the Weyl, Cotton and Bach tensors.
pub fn w_tractor_explicit(geom: &Geometry) -> FieldJet {
    let nm4 = int(geom.dim() as i64 - 4);
    w_tractor_with(geom, &nm4, &geom.bach_field())
}

/// The W-tractor pattern with the Weyl and Cotton parts scaled by `factor`
/// and `b_term` (a weight -2 covariant 2-tensor) in place of the Bach tensor.
pub fn w_tractor_with(geom: &Geometry, factor: &Rational, b_term: &FieldJet) -> FieldJet {
    let n = geom.dim();
    let o = b_term.order().min(geom.order() - 4);
    let nm4 = factor.clone();
    let c = geom
        .raise_all(&geom.weyl_field())
        .truncated(o)
        .expect("order");
    let a = geom
        .raise_all(&geom.cotton_field())
        .truncated(o)
        .expect("order");
    let b = geom.raise_all(b_term).truncated(o).expect("order");
    let mut w = FieldJet::zero(geom.space(), n, &[Slot::TractorDown; 4], -4, geom.tag(), o);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    w.set(
                        &[1 + i, 1 + j, 1 + k, 1 + l],
                        c.get(&[i, j, k, l]).scale(&nm4),
                    );
                }
                w.accumulate(&[1 + i, 1 + j, 0, 1 + k], &-a.get(&[k, i, j]).scale(&nm4));
                w.accumulate(&[1 + i, 1 + j, 1 + k, 0], &a.get(&[k, i, j]).scale(&nm4));
                w.accumulate(&[0, 1 + i, 1 + j, 1 + k], &-a.get(&[i, j, k]).scale(&nm4));
                w.accumulate(&[1 + i, 0, 1 + j, 1 + k], &a.get(&[i, j, k]).scale(&nm4));
            }
            w.accumulate(&[0, 1 + i, 0, 1 + j], b.get(&[j, i]));
            w.accumulate(&[0, 1 + i, 1 + j, 0], &-b.get(&[j, i]));
            w.accumulate(&[1 + i, 0, 0, 1 + j], &-b.get(&[j, i]));
            w.accumulate(&[1 + i, 0, 1 + j, 0], b.get(&[j, i]));
        }
    }
    w
}

/// `Ω^{-1} ∂_a Ω` for a jet `Ω`.
fn upsilon(omega: &JetScalar) -> Result<Vec<JetScalar>> {
    let inv = omega.reciprocal()?;
    (0..omega.nvars())
        .map(|a| Ok(omega.partial(a)?.mul_trunc(&inv)))
        .collect()
}

/// Re-expresses a field given in the scale of `geom` in the scale `Ω² g`
/// (tag `target`). Tractor slots transform by the change-of-splitting
/// matrix (inverse transpose on lower slots); the density factor `Ω^w` is
/// applied once. `omega` must carry at least one more order than `t`.
pub fn rescale_field(
    geom: &Geometry,
    t: &FieldJet,
    omega: &JetScalar,
    target: ScaleTag,
) -> Result<FieldJet> {
    geom.check_tag(t)?;
    if omega.constant_term().is_zero() {
        return Err(Error::VanishingScale("Ω".into()));
    }
    let n = geom.dim();
    let ups = upsilon(omega)?;
    let ups_up: Vec<JetScalar> = (0..n)
        .map(|b| {
            (0..n).fold(
                JetScalar::zero(geom.space(), omega.order() - 1),
                |acc, c| acc.add_trunc(&geom.ginv(b, c).mul_trunc(&ups[c])),
            )
        })
        .collect();
    let half_sq = (0..n)
        .fold(
            JetScalar::zero(geom.space(), omega.order() - 1),
            |acc, b| acc.add_trunc(&ups[b].mul_trunc(&ups_up[b])),
        )
        .scale(&rat(1, 2));
    let inv = omega.reciprocal()?;
    let mut comps: Vec<JetScalar> = t.comps().to_vec();
    let ext: Vec<usize> = (0..t.rank()).map(|k| t.extent(k)).collect();
    for (k, &slot) in t.slots().iter().enumerate() {
        if !slot.is_tractor() {
            continue;
        }
        let stride: usize = ext[k + 1..].iter().product();
        let mut next = comps.clone();
        for off in 0..comps.len() {
            if (off / stride) % ext[k] != 0 {
                continue;
            }
            let at = |i: usize| &comps[off + i * stride];
            let mut set = |i: usize, v: JetScalar| next[off + i * stride] = v;
            match slot {
                Slot::TractorUp => {
                    let alpha = at(0);
                    set(0, omega.mul_trunc(alpha));
                    let mut tau = at(n + 1).sub_trunc(&half_sq.mul_trunc(alpha));
                    for b in 0..n {
                        let mu = at(1 + b);
                        set(
                            1 + b,
                            omega.mul_trunc(&mu.add_trunc(&ups[b].mul_trunc(alpha))),
                        );
                        tau = tau.sub_trunc(&ups_up[b].mul_trunc(mu));
                    }
                    set(n + 1, inv.mul_trunc(&tau));
                }
                Slot::TractorDown => {
                    let rho = at(n + 1);
                    set(n + 1, omega.mul_trunc(rho));
                    let mut kappa = at(0).sub_trunc(&half_sq.mul_trunc(rho));
                    for b in 0..n {
                        let nu = at(1 + b);
                        set(
                            1 + b,
                            inv.mul_trunc(&nu.add_trunc(&ups_up[b].mul_trunc(rho))),
                        );
                        kappa = kappa.sub_trunc(&ups[b].mul_trunc(nu));
                    }
                    set(0, inv.mul_trunc(&kappa));
                }
                _ => unreachable!(),
            }
        }
        comps = next;
    }
    let factor = crate::riemann::weight_power(omega, t.weight2())?;
    let o = comps
        .iter()
        .map(JetScalar::order)
        .chain([factor.order(), t.order()])
        .min()
        .unwrap_or(0);
    let comps = comps
        .iter()
        .map(|c| c.mul_trunc(&factor).truncated(o))
        .collect::<Result<Vec<_>>>()?;
    FieldJet::from_comps(n, t.slots(), t.weight2(), target, comps)
}

/// `[D_A, D_B] V^K - (n+2w-2) W_AB^K_L V^L - 6 X_[A Ω_BP]^K_L D^P V^L`
/// for an upper tractor `V` of weight `w`.
pub fn d_commutator_residual(geom: &Geometry, v: &FieldJet) -> Result<FieldJet> {
    if v.slots() != [Slot::TractorUp] {
        return Err(Error::LayoutMismatch(
            "expected a rank-1 upper tractor".into(),
        ));
    }
    let n = geom.dim();
    let dv = tractor_d(geom, v)?;
    let ddv = tractor_d(geom, &dv)?;
    let lhs = ddv.try_sub(&ddv.swapped(0, 1))?;
    let w = geom.flip_slot(&w_tractor_explicit(geom), 2)?;
    let wv = w
        .outer(v)?
        .contract(3, 4)?
        .scaled(&d_factor(n, v.weight2()));
    let dv_up = geom.flip_slot(&dv, 0)?;
    let xo = x_wedge_omega(geom);
    let xod = xo
        .outer(&dv_up)?
        .contract(2, 5)?
        .contract(3, 4)?
        .scaled(&int(6));
    lhs.sub_aligned(&wv)?.sub_aligned(&xod)
}

/// `[D_A, D_B] V_C - (n+2w-2)(W_ABC^Q V_Q + 2w Ω_ABC^Q V_Q
/// + 4 X_[A Ω_B]^s_C^Q ∇_s V_Q)` for a lower tractor `V` of weight `w`.
pub fn d_commutator_lower_residual(geom: &Geometry, v: &FieldJet) -> Result<FieldJet> {
    if v.slots() != [Slot::TractorDown] {
        return Err(Error::LayoutMismatch(
            "expected a rank-1 lower tractor".into(),
        ));
    }
    let n = geom.dim();
    let w2 = v.weight2();
    let dv = tractor_d(geom, v)?;
    let ddv = tractor_d(geom, &dv)?;
    let lhs = ddv.try_sub(&ddv.swapped(0, 1))?;

    let w = geom.flip_slot(&w_tractor_explicit(geom), 3)?;
    let wv = w.outer(v)?.contract(3, 4)?;

    let om = omega_tractor(geom);
    let om = geom.flip_slot(&geom.flip_slot(&om, 2)?, 3)?;
    let ov = om.outer(v)?.contract(3, 4)?.scaled(&int(i64::from(w2)));

    // Ω_B^s_C^Q = Z_B^b Ω_b^s_C^Q, slots (B↓, s↑, C↓, Q↑)
    let curv = tractor_curvature(geom);
    let curv = geom.flip_slot(&geom.flip_slot(&curv, 1)?, 0)?;
    let curv = insert_z(&curv, 0)?;
    let curv = geom.flip_slot(&geom.flip_slot(&curv, 2)?, 3)?;
    let xc = x_lower(geom).outer(&curv)?;
    let xc = xc.try_sub(&xc.swapped(0, 1))?.scaled(&int(2));
    let nv = geom.nabla(v)?;
    let xnv = xc.outer(&nv)?.contract(2, 5)?.contract(3, 4)?;

    let rhs = wv
        .add_aligned(&ov)?
        .add_aligned(&xnv)?
        .scaled(&d_factor(n, w2));
    lhs.sub_aligned(&rhs)
}
