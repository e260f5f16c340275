//! The verification suites. Each suite runs independently at every sample
//! point and emits one record per check.

use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;
use tractor_core::einstein::*;
use tractor_core::jets::{int, JetScalar, Rational};
use tractor_core::operators::*;
use tractor_core::riemann::{rescale_tensor, ChartMetric, FieldJet, Geometry, Slot};
use tractor_core::scenes::{
    builtin, known_conformal_killing_fields, sample_points, verify_expectations, CatalogEntry,
    SceneSpec,
};
use tractor_core::tractor::*;
use tractor_core::{Error, Expr};

use crate::report::{point_strings, residual_lines, CheckRecord, Status, SuiteReport};
use crate::scene_file::{load_scene, SceneFileError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Suite {
    Curvature,
    Tractor,
    Killing,
    Einstein,
    Pk,
    Q,
    Dim4,
    Spectrum,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Curvature,
        Suite::Tractor,
        Suite::Killing,
        Suite::Einstein,
        Suite::Pk,
        Suite::Q,
        Suite::Dim4,
        Suite::Spectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Curvature => "curvature",
            Suite::Tractor => "tractor",
            Suite::Killing => "killing",
            Suite::Einstein => "einstein",
            Suite::Pk => "pk",
            Suite::Q => "q",
            Suite::Dim4 => "dim4",
            Suite::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("suite {suite} needs jet order at least {needed}, got {given}")]
    Order {
        suite: &'static str,
        needed: usize,
        given: usize,
    },
    #[error(transparent)]
    SceneFile(#[from] SceneFileError),
    #[error(transparent)]
    Core(#[from] Error),
}

/// A scene to run; catalog scenes also carry their promised facts.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub catalog: Option<CatalogEntry>,
}

impl Scene {
    pub fn builtin(name: &str) -> Result<Self, RunError> {
        let e = builtin(name)?;
        Ok(Scene {
            spec: e.spec.clone(),
            catalog: Some(e),
        })
    }

    pub fn from_spec(spec: SceneSpec) -> Self {
        Scene {
            spec,
            catalog: None,
        }
    }

    /// `builtin:NAME` or a path to a scene file.
    pub fn resolve(arg: &str) -> Result<Self, RunError> {
        match arg.strip_prefix("builtin:") {
            Some(name) => Scene::builtin(name),
            None => Ok(Scene::from_spec(load_scene(Path::new(arg))?)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub suite: Suite,
    pub k: Option<usize>,
    pub order: Option<usize>,
    pub seed: u64,
    pub points: Option<usize>,
}

impl RunOptions {
    pub fn new(suite: Suite) -> Self {
        RunOptions {
            suite,
            k: None,
            order: None,
            seed: 1,
            points: None,
        }
    }
}

fn ks(suite: Suite, k: Option<usize>) -> Vec<usize> {
    match (suite, k) {
        (_, Some(k)) => vec![k],
        (Suite::Spectrum, None) => vec![1, 2],
        (_, None) => vec![1, 2, 3],
    }
}

/// `(minimum, default)` jet order for a suite. The minimum leaves every
/// residual computable at order 0; the default adds one order of Taylor
/// coefficients on top.
pub fn order_policy(suite: Suite, n: usize, ks: &[usize]) -> (usize, usize) {
    let kmax = ks.iter().copied().max().unwrap_or(1);
    let min = match suite {
        Suite::Curvature => 4,
        Suite::Tractor => 5,
        Suite::Killing => 4,
        Suite::Einstein => 4,
        Suite::Pk => 2 * kmax,
        Suite::Q => {
            if n.is_multiple_of(2) {
                n.max(4)
            } else {
                4
            }
        }
        Suite::Dim4 => 6,
        Suite::Spectrum => (2 * kmax).max(3),
    };
    (min, min + 1)
}

// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn name_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn small(rng: &mut ChaCha8Rng, span: u32) -> i64 {
    i64::from(rng.next_u32() % (2 * span + 1)) - i64::from(span)
}

/// A sparse integer polynomial of total degree at most `degree`.
pub fn seeded_poly(rng: &mut ChaCha8Rng, n: usize, degree: u32, terms: usize) -> Expr {
    let mut acc = Expr::int(small(rng, 3));
    for _ in 0..terms {
        let c = match small(rng, 3) {
            0 => 1,
            c => c,
        };
        let mut m = Expr::int(c);
        for _ in 0..rng.next_u32() % (degree + 1) {
            m = Expr::mul(m, Expr::var(rng.next_u32() as usize % n));
        }
        acc = Expr::add(acc, m);
    }
    acc
}

struct Ctx<'a> {
    scene: &'a Scene,
    geom: &'a Geometry,
    seed: u64,
    point_index: usize,
    ks: &'a [usize],
    out: Vec<CheckRecord>,
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.geom.dim()
    }

    fn rng(&self, salt: &str) -> ChaCha8Rng {
        let s = mix(self.seed ^ mix(self.point_index as u64 ^ mix(name_hash(salt))));
        ChaCha8Rng::seed_from_u64(s)
    }

    fn field(&self, slots: &[Slot], weight2: i32, salt: &str) -> Result<FieldJet, Error> {
        let mut r = self.rng(salt);
        let n = self.n();
        let len: usize = slots
            .iter()
            .map(|s| if s.is_tractor() { n + 2 } else { n })
            .product();
        let exprs: Vec<Expr> = (0..len).map(|_| seeded_poly(&mut r, n, 3, 3)).collect();
        self.geom
            .field_from_exprs(slots, weight2, &exprs, self.geom.order())
    }

    /// A seeded conformal factor `2 + p/7`, shifted off zero at the point.
    fn omega(&self, salt: &str) -> Expr {
        let mut r = self.rng(salt);
        let p = seeded_poly(&mut r, self.n(), 2, 3);
        let mut c = 2;
        loop {
            let e = Expr::add(Expr::int(c), Expr::div(p.clone(), Expr::int(7)));
            if e.eval(self.geom.point()).is_some_and(|v| v != int(0)) {
                return e;
            }
            c += 1;
        }
    }

    fn push(
        &mut self,
        check: String,
        identity: &str,
        residual_order: Option<usize>,
        status: Status,
    ) {
        self.out.push(CheckRecord {
            check,
            identity: identity.to_string(),
            point_index: self.point_index,
            residual_order,
            status,
        });
    }

    fn error(&mut self, check: String, identity: &str, e: Error) {
        let status = match e {
            Error::NotASquare(v) => Status::Unavailable {
                reason: format!("half-integer weight needs a rational square root of {v}"),
            },
            e => Status::Fail {
                residual: vec![e.to_string()],
            },
        };
        self.push(check, identity, None, status);
    }

    fn zero(&mut self, check: impl Into<String>, identity: &str, r: Result<FieldJet, Error>) {
        let check = check.into();
        match r {
            Ok(f) if f.is_zero() => self.push(check, identity, Some(f.order()), Status::ExactZero),
            Ok(f) => {
                let order = f.order();
                self.push(
                    check,
                    identity,
                    Some(order),
                    Status::Fail {
                        residual: residual_lines(&f),
                    },
                )
            }
            Err(e) => self.error(check, identity, e),
        }
    }

    /// A point value that must be a constant jet equal to `expected`.
    fn value(
        &mut self,
        check: impl Into<String>,
        identity: &str,
        r: Result<JetScalar, Error>,
        expected: &Rational,
    ) {
        let check = check.into();
        match r {
            Ok(v) if v.is_constant() && v.constant_term() == *expected => self.push(
                check,
                identity,
                Some(v.order()),
                Status::Value {
                    value: expected.to_string(),
                },
            ),
            Ok(v) => {
                let order = v.order();
                self.push(
                    check,
                    identity,
                    Some(order),
                    Status::Fail {
                        residual: vec![format!("got {v}, expected the constant {expected}")],
                    },
                )
            }
            Err(e) => self.error(check, identity, e),
        }
    }

    fn holds(
        &mut self,
        check: impl Into<String>,
        identity: &str,
        r: Result<bool, Error>,
        detail: &str,
    ) {
        let check = check.into();
        match r {
            Ok(true) => self.push(
                check,
                identity,
                None,
                Status::Value {
                    value: "true".into(),
                },
            ),
            Ok(false) => self.push(
                check,
                identity,
                None,
                Status::Fail {
                    residual: vec![detail.to_string()],
                },
            ),
            Err(e) => self.error(check, identity, e),
        }
    }

    fn unavailable(&mut self, check: impl Into<String>, identity: &str, reason: &str) {
        self.push(
            check.into(),
            identity,
            None,
            Status::Unavailable {
                reason: reason.to_string(),
            },
        );
    }

    /// Declared scales that certify as Einstein here, with their labels.
    fn certified(&self) -> Vec<(String, EinsteinScale)> {
        let coords = self.scene.spec.coords();
        self.scene
            .spec
            .einstein_scales
            .iter()
            .filter_map(|s| match einstein_tractor(self.geom, s) {
                Ok(e) if e.is_einstein() => Some((s.display(coords).to_string(), e)),
                _ => None,
            })
            .collect()
    }
}

/// The first nonzero residual of a family, else the last one.
fn first_nonzero(rs: Vec<Result<FieldJet, Error>>) -> Result<FieldJet, Error> {
    let mut last = None;
    for r in rs {
        let f = r?;
        if !f.is_zero() {
            return Ok(f);
        }
        last = Some(f);
    }
    last.ok_or_else(|| Error::Unsupported("empty check family".into()))
}

fn rescaled_geometry(g: &Geometry, omega: &Expr) -> Result<Geometry, Error> {
    let m: ChartMetric = g.metric().conformal_rescale(omega);
    Geometry::with_space(&m, g.point(), g.order(), g.space())
}

fn curvature(ctx: &mut Ctx) {
    let g = ctx.geom;
    let n = g.dim();
    ctx.zero("curvature.metric", "∇_a g_bc = 0", g.metric_compatibility());
    let v = ctx.field(&[Slot::Tangent], 0, "curvature.commutator");
    ctx.zero(
        "curvature.commutator",
        "[∇_a, ∇_b] v^c = R_ab^c_d v^d on a seeded vector",
        v.and_then(|v| g.commutator_residual(&v)),
    );
    ctx.zero("curvature.bianchi", "R_[ab^c_d] = 0", Ok(g.first_bianchi()));
    let r = g.riemann_field();
    ctx.zero(
        "curvature.antisymmetry",
        "R_ab^c_d = -R_ba^c_d",
        r.try_add(&r.swapped(0, 1)),
    );

    let c = g.weyl_field();
    let traces = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        .iter()
        .map(|&(i, j)| g.metric_trace(&c, i, j))
        .collect();
    ctx.zero(
        "curvature.weyl_trace",
        "every trace of C_abcd vanishes",
        first_nonzero(traces),
    );
    ctx.zero(
        "curvature.weyl_symmetry",
        "C_abcd = -C_abdc = C_cdab",
        first_nonzero(vec![
            c.try_add(&c.swapped(2, 3)),
            c.try_sub(&c.permuted(&[2, 3, 0, 1])),
        ]),
    );

    // R_abcd = C_abcd + g_ca P_bd - g_cb P_ad + g_db P_ac - g_da P_bc
    let decomposition = (|| -> Result<FieldJet, Error> {
        let low = g.flip_slot(&r, 2)?;
        let p = g.schouten_field();
        let o = c.order().min(p.order());
        let m = g.metric_field().truncated(o)?;
        let mut res = FieldJet::zero(g.space(), n, &[Slot::Cotangent; 4], c.weight2(), g.tag(), o);
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
                        res.set(&[a, b, cc, d], low.get(&[a, b, cc, d]).sub_trunc(&rebuilt));
                    }
                }
            }
        }
        Ok(res)
    })();
    ctx.zero(
        "curvature.decomposition",
        "R = C + Schouten terms",
        decomposition,
    );

    let a = g.cotton_field();
    ctx.zero(
        "curvature.cotton",
        "A_abc = -A_acb and g^ac A_abc = 0",
        first_nonzero(vec![a.try_add(&a.swapped(1, 2)), g.metric_trace(&a, 0, 2)]),
    );
    let b = g.bach_field();
    ctx.zero(
        "curvature.bach",
        "B_ab = B_ba and g^ab B_ab = 0",
        first_nonzero(vec![b.try_sub(&b.swapped(0, 1)), g.metric_trace(&b, 0, 1)]),
    );

    let om = ctx.omega("curvature.rescale");
    let invariance = (|| -> Result<FieldJet, Error> {
        let gh = rescaled_geometry(g, &om)?;
        let w = g.eval(&om, g.order())?;
        rescale_tensor(&g.weyl_field(), &w, gh.tag())?.sub_aligned(&gh.weyl_field())
    })();
    ctx.zero(
        "curvature.weyl_invariance",
        "C_abcd of Ω²g is Ω² C_abcd",
        invariance,
    );

    if let Some(entry) = ctx.scene.catalog.clone() {
        match verify_expectations(&entry, g.point()) {
            Ok(list) => {
                for e in list {
                    let id = format!("curvature.catalog.{}", e.fact.replace(' ', "_"));
                    ctx.holds(id, "catalog fact re-derived", Ok(e.passed), &e.detail);
                }
            }
            Err(e) => ctx.error("curvature.catalog".into(), "catalog fact re-derived", e),
        }
    }
}

fn tractor(ctx: &mut Ctx) {
    let g = ctx.geom;
    let n = g.dim();
    ctx.zero("tractor.metric", "∇h = 0", g.nabla(&tractor_metric(g)));
    let completeness = (|| -> Result<FieldJet, Error> {
        let yx = y_lower(g).outer(&x_upper(g))?;
        let xy = x_lower(g).outer(&y_upper(g))?;
        let zr = g.flip_slot(&z_lower(g), 1)?;
        let zz = zr.outer(&z_upper(g))?.contract(1, 3)?.with_weight2(0);
        let sum = yx.try_add(&xy)?.try_add(&zz)?;
        let mut id = FieldJet::zero(
            g.space(),
            n,
            &[Slot::TractorDown, Slot::TractorUp],
            0,
            g.tag(),
            sum.order(),
        );
        for i in 0..n + 2 {
            id.set(&[i, i], JetScalar::one(g.space(), sum.order()));
        }
        sum.try_sub(&id)
    })();
    ctx.zero(
        "tractor.projectors",
        "δ_A^B = Y_A X^B + Z_A^a Z^B_a + X_A Y^B",
        completeness,
    );
    ctx.zero(
        "tractor.curvature",
        "Ω from the explicit formula equals the connection curvature",
        tractor_curvature_from_connection(g).and_then(|o| tractor_curvature(g).try_sub(&o)),
    );
    let v = ctx.field(&[Slot::TractorUp], 0, "tractor.commutator");
    ctx.zero(
        "tractor.commutator",
        "[∇_a, ∇_b] V^C = Ω_ab^C_E V^E on a seeded tractor",
        v.and_then(|v| curvature_commutator_residual(g, &v)),
    );

    let om = ctx.omega("tractor.rescale");
    for (label, slots, w2) in [
        ("density", &[][..], 2),
        ("upper", &[Slot::TractorUp][..], -2),
        ("lower", &[Slot::TractorDown][..], 2),
    ] {
        let id = format!("tractor.d_invariance.{label}");
        let v = ctx.field(slots, w2, &id);
        let r = (|| -> Result<FieldJet, Error> {
            let v = v?;
            let gh = rescaled_geometry(g, &om)?;
            let w = g.eval(&om, g.order())?;
            let lhs = rescale_field(g, &tractor_d(g, &v)?, &w, gh.tag())?;
            let rhs = tractor_d(&gh, &rescale_field(g, &v, &w, gh.tag())?)?;
            lhs.sub_aligned(&rhs)
        })();
        ctx.zero(id, "D commutes with conformal rescaling on seeded data", r);
    }

    let w = w_tractor_explicit(g);
    ctx.zero(
        "tractor.w_routes",
        "W from D acting on X∧Ω equals the explicit Weyl/Cotton/Bach form",
        w_tractor_from_d(g)
            .and_then(|d| g.flip_slot(&d, 2))
            .and_then(|d| d.sub_aligned(&w)),
    );
    let cyc = w
        .try_add(&w.permuted(&[0, 2, 3, 1]))
        .and_then(|s| s.try_add(&w.permuted(&[0, 3, 1, 2])));
    ctx.zero(
        "tractor.w_symmetry",
        "W has the algebraic symmetries of a Weyl tensor",
        first_nonzero(vec![
            w.try_add(&w.swapped(0, 1)),
            w.try_add(&w.swapped(2, 3)),
            w.try_sub(&w.permuted(&[2, 3, 0, 1])),
            cyc,
        ]),
    );

    let v = ctx.field(&[Slot::TractorUp], 4, "tractor.d_commutator");
    ctx.zero(
        "tractor.d_commutator",
        "[D_A, D_B] V = (n+2w-2) W V + 6 X Ω D V on a seeded tractor",
        v.and_then(|v| d_commutator_residual(g, &v)),
    );
    let v = ctx.field(&[Slot::TractorDown], 2, "tractor.d_commutator_lower");
    ctx.zero(
        "tractor.d_commutator_lower",
        "rank-one commutator form with the ∇V term on a lower tractor",
        v.and_then(|v| d_commutator_lower_residual(g, &v)),
    );
    let f = ctx.field(&[], 2, "tractor.dd_density");
    ctx.zero(
        "tractor.dd_density",
        "D_A D_B f is symmetric",
        f.and_then(|f| {
            let dd = tractor_d(g, &tractor_d(g, &f)?)?;
            dd.try_sub(&dd.swapped(0, 1))
        }),
    );
}

fn vector(g: &Geometry, comps: &[Expr]) -> Result<FieldJet, Error> {
    g.field_from_exprs(&[Slot::Tangent], 0, comps, g.order())
}

fn killing(ctx: &mut Ctx) {
    let g = ctx.geom;
    let n = g.dim();
    let known = ctx
        .scene
        .catalog
        .as_ref()
        .map(known_conformal_killing_fields)
        .unwrap_or_default();

    let mut r = ctx.rng("killing.candidates");
    for trial in 0..6 {
        let mut comps = vec![Expr::int(0); n];
        for b in &known {
            let c = Expr::int(small(&mut r, 2));
            for i in 0..n {
                comps[i] = Expr::add(comps[i].clone(), Expr::mul(c.clone(), b[i].clone()));
            }
        }
        if known.is_empty() || trial % 2 == 1 {
            let i = trial % n;
            comps[i] = Expr::add(comps[i].clone(), seeded_poly(&mut r, n, 3, 2));
        }
        let res = vector(g, &comps).and_then(|k| ck_check(g, &k));
        let (ok, detail) = match &res {
            Ok((a, b)) => (
                a.is_zero() == b.is_zero(),
                format!(
                    "∇_(a k_b)_0 zero: {}, D_(A K_B) zero: {}",
                    a.is_zero(),
                    b.is_zero()
                ),
            ),
            Err(_) => (false, String::new()),
        };
        ctx.holds(
            format!("killing.equivalence.{trial}"),
            "∇_(a k_b)_0 and D_(A K_B) vanish together",
            res.map(|_| ok),
            &detail,
        );
    }

    if known.is_empty() {
        ctx.unavailable(
            "killing.adjoint",
            "𝕂 from a conformal Killing field",
            "no known fields for this scene",
        );
    }
    for (i, comps) in known.iter().enumerate() {
        let k = match vector(g, comps) {
            Ok(k) => k,
            Err(e) => {
                ctx.error(format!("killing.field.{i}"), "known field", e);
                continue;
            }
        };
        ctx.zero(
            format!("killing.field.{i}"),
            "∇_(a k_b)_0 = 0",
            conformal_killing_operator(g, &k),
        );
        let kk = adjoint_tractor(g, &k);
        ctx.zero(
            format!("killing.recover.{i}"),
            "X^A Z^{Ba} 𝕂_AB = k^b",
            kk.clone()
                .and_then(|kk| recover_vector(&kk)?.sub_aligned(&k)),
        );
        ctx.zero(
            format!("killing.adjoint.{i}"),
            "∇_b 𝕂_DE = k^a Ω_abDE",
            kk.and_then(|kk| adjoint_residual(g, &kk)),
        );
    }

    let scales = ctx.certified();
    if scales.len() < 2 {
        ctx.unavailable(
            "killing.pair",
            "pair of Einstein scales",
            "fewer than two certified scales",
        );
        return;
    }
    if tractor_curvature(g).is_zero() {
        ctx.unavailable(
            "killing.pair_curved",
            "pair of Einstein scales with Ω ≠ 0",
            "no known scene has two Einstein scales and nonzero tractor curvature",
        );
    }
    for i in 0..scales.len() {
        for j in i + 1..scales.len() {
            let (s1, s2) = (&scales[i].1, &scales[j].1);
            let tag = format!("{i}{j}");
            let kk = wedge(&s1.tractor, &s2.tractor);
            ctx.zero(
                format!("killing.wedge.{tag}"),
                "∇(𝕀₁ ∧ 𝕀₂) = 0",
                kk.clone().and_then(|kk| g.nabla(&kk)),
            );
            let k = ckv_from_pair(g, s1, s2);
            ctx.zero(
                format!("killing.wedge_vector.{tag}"),
                "X Z (𝕀₁ ∧ 𝕀₂) = σ₁∇σ₂ - σ₂∇σ₁",
                (|| -> Result<FieldJet, Error> {
                    let low = g.flip_slot(&g.flip_slot(&kk.clone()?, 0)?, 1)?;
                    recover_vector(&low)?.sub_aligned(&k.clone()?)
                })(),
            );
            ctx.zero(
                format!("killing.pair_field.{tag}"),
                "σ₁∇σ₂ - σ₂∇σ₁ is conformal Killing",
                k.clone().and_then(|k| conformal_killing_operator(g, &k)),
            );
            let pc = pair_curvature_checks(g, s1, s2);
            ctx.zero(
                format!("killing.pair_curvature.{tag}"),
                "∇^aσ₁ ∇^bσ₂ Ω_ab = 0 and k^a Ω_ab = 0",
                pc.and_then(|(a, b)| first_nonzero(vec![Ok(a), Ok(b)])),
            );
        }
    }
}

fn einstein(ctx: &mut Ctx) {
    let g = ctx.geom;
    let coords = ctx.scene.spec.coords().to_vec();
    let scales = ctx.scene.spec.einstein_scales.clone();
    if scales.is_empty() {
        ctx.unavailable(
            "einstein.scales",
            "declared Einstein scales",
            "the scene declares none",
        );
    }
    for (i, s) in scales.iter().enumerate() {
        let label = s.display(&coords).to_string();
        let es = match einstein_tractor(g, s) {
            Ok(es) => es,
            Err(e) => {
                ctx.error(format!("einstein.{i}.parallel"), "the scale is usable", e);
                continue;
            }
        };
        let id = format!("∇_a I^B = 0 for σ = {label}");
        ctx.zero(format!("einstein.{i}.parallel"), &id, Ok(es.nabla.clone()));
        ctx.zero(
            format!("einstein.{i}.schouten"),
            "trace-free Schouten of σ^-2 g vanishes",
            scale_tracefree_schouten(g, s),
        );
        ctx.zero(
            format!("einstein.{i}.x_pairing"),
            "X_A I^A = σ",
            project_x(&es.tractor, 0).sub_aligned(&es.density),
        );
        match paw_contractions(g, &es.tractor) {
            Ok([oi, wi, iw]) => {
                ctx.zero(format!("einstein.{i}.omega_i"), "Ω_bc^D_E I^E = 0", Ok(oi));
                ctx.zero(format!("einstein.{i}.w_i"), "W_BCDE I^E = 0", Ok(wi));
                ctx.zero(format!("einstein.{i}.i_w"), "I^B W_BCDE = 0", Ok(iw));
            }
            Err(e) => ctx.error(format!("einstein.{i}.omega_i"), "curvature contractions", e),
        }
        if g.dim() >= 4 {
            ctx.zero(
                format!("einstein.{i}.bach_cotton"),
                "B_cd = (4-n) σ^-1 A_cde ∇^e σ",
                bach_cotton_residual(g, &es),
            );
        }
    }
}

fn pk(ctx: &mut Ctx) {
    let g = ctx.geom;
    let n = g.dim() as i32;
    let ks = ctx.ks.to_vec();
    let scales = ctx.certified();
    if scales.is_empty() {
        ctx.unavailable(
            "pk.product",
            "P_k = ∏(Δ - b_l J)",
            "no certified Einstein scale",
        );
    }
    for k in ks.iter().copied() {
        let w2 = 2 * k as i32 - n;
        for (si, (label, s)) in scales.iter().enumerate() {
            for trial in 0..3 {
                let id = format!("pk.product.k{k}.s{si}.f{trial}");
                let f = ctx.field(&[], w2, &id);
                let what = format!("P_{k} f = ∏(Δ - b_l J) f in the scale σ = {label}");
                ctx.zero(
                    id,
                    &what,
                    f.and_then(|f| p_k(g, s, &f, k)?.sub_aligned(&gjms_product(g, s, &f, k)?)),
                );
            }
            let id = format!("pk.box_route.k{k}.s{si}");
            let f = ctx.field(&[], w2, &id);
            ctx.zero(
                id,
                "iterated 𝕀·D route equals the □ route",
                f.and_then(|f| p_k(g, s, &f, k)?.sub_aligned(&p_k_box_route(g, s, &f, k)?)),
            );
        }
        for i in 0..scales.len() {
            for j in i + 1..scales.len() {
                let id = format!("pk.scale_independence.k{k}.s{i}s{j}");
                let f = ctx.field(&[], w2, &id);
                ctx.zero(
                    id,
                    "P_k does not depend on the Einstein scale",
                    f.and_then(|f| {
                        scale_independence_residual(g, &scales[i].1, &scales[j].1, &f, k)
                    }),
                );
            }
        }
        if k == 3 {
            let f = ctx.field(&[], 6 - n, "pk.order_six");
            let rhs = f
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|f| box3_rhs(g, f));
            ctx.zero(
                "pk.order_six.projectors",
                "(n-4)□DDf + 2WDDf has only a Y⊗Y part",
                rhs.map(|t| off_yy_part(&t)),
            );
            if n != 4 {
                for (si, (_, s)) in scales.iter().enumerate() {
                    ctx.zero(
                        format!("pk.order_six.extract.s{si}"),
                        "the Y⊗Y part divided by n-4 equals P_3",
                        f.as_ref()
                            .map_err(Clone::clone)
                            .and_then(|f| box3_extract(g, f)?.sub_aligned(&p_k(g, s, f, 3)?)),
                    );
                }
            }
        }
    }
}

fn q(ctx: &mut Ctx) {
    let g = ctx.geom;
    let n = g.dim();
    let scales = ctx.certified();
    if scales.is_empty() {
        ctx.unavailable("q.product", "Q-curvature", "no certified Einstein scale");
    }
    for (si, (label, s)) in scales.iter().enumerate() {
        let sg = match scale_geometry(g, &s.sigma) {
            Ok(sg) => sg,
            Err(e) => {
                ctx.error(format!("q.s{si}"), "scale geometry", e);
                continue;
            }
        };
        let sc_jet = sg.scalar_curvature().clone();
        let sc = sc_jet.constant_term();
        ctx.holds(
            format!("q.s{si}.constant_sc"),
            "the scalar curvature of σ^-2 g is constant",
            Ok(sc_jet.is_constant()),
            &format!("Sc = {sc_jet}"),
        );
        if n.is_multiple_of(2) {
            let expected = q_einstein(n, &sc).expect("even n");
            let what =
                format!("Q = (2(1-n)/n) ∏(Δ - b_l J) J equals the Einstein value, σ = {label}");
            ctx.value(
                format!("q.s{si}.product"),
                &what,
                q_product_route(g, s),
                &expected,
            );
            let j = &sc / int(2 * (n as i64 - 1));
            ctx.holds(
                format!("q.s{si}.closed_form"),
                "(-1)^{n/2}(2(n-1)/n) J^{n/2} ∏ b_l equals (-1)^{n/2}(n-1)!(Sc/n(n-1))^{n/2}",
                q_closed_form(n, &j).map(|v| v == expected),
                "closed forms differ",
            );
            if n >= 4 {
                ctx.value(
                    format!("q.s{si}.tractor_route"),
                    "the contracted tractor expression evaluates to -Q",
                    q_literal_route(g, s),
                    &(-expected.clone()),
                );
            }
        }
        for k in 1..=2usize {
            if 2 * k == n {
                continue;
            }
            let expected = noncritical_q(n, k, &sc).expect("noncritical");
            ctx.value(
                format!("q.s{si}.noncritical.k{k}"),
                "(2/(n-2k)) σ^{k+n/2} P_k σ^{k-n/2} = (2/(n-2k)) ∏(-c_l Sc)",
                noncritical_q_route(g, s, k),
                &expected,
            );
        }
    }
}

fn dim4(ctx: &mut Ctx) {
    let g0 = ctx.geom;
    let scales0 = ctx.certified();
    if scales0.is_empty() {
        ctx.unavailable(
            "dim4",
            "order-six operator in dimension 4",
            "no certified Einstein scale",
        );
        return;
    }
    let om = ctx.omega("dim4.resident");
    let resident = rescaled_geometry(g0, &om).and_then(|gh| {
        let ss = scales0
            .iter()
            .map(|(_, s)| einstein_tractor(&gh, &Expr::mul(s.sigma.clone(), om.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((gh, ss))
    });
    let mut cases: Vec<(&str, &Geometry, Vec<EinsteinScale>)> = vec![(
        "einstein",
        g0,
        scales0.iter().map(|(_, s)| s.clone()).collect(),
    )];
    match &resident {
        Ok((gh, ss)) => cases.push(("rescaled", gh, ss.clone())),
        Err(e) => ctx.error(
            "dim4.rescaled".into(),
            "non-Einstein resident scale",
            e.clone(),
        ),
    }
    for (tag, g, scales) in cases {
        ctx.holds(
            format!("dim4.{tag}.certified"),
            "the scale is Einstein in this resident metric",
            Ok(scales.iter().all(EinsteinScale::is_einstein)),
            "a transported scale failed to certify",
        );
        for (si, s) in scales.iter().enumerate() {
            let id = format!("dim4.{tag}.cotton_route.s{si}");
            let f = ctx.field_in(g, &[], 2, &id);
            let p3 = f
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|f| p3_dim4(g, s, f));
            ctx.zero(
                id,
                "N f - 8 A σ^-1 ∇σ (2∇∇f - (n-6)Pf) equals P_3 f",
                p3.clone()
                    .and_then(|p| p.sub_aligned(&p_k(g, s, f.as_ref().map_err(Clone::clone)?, 3)?)),
            );
            let t = f
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|f| tilde_rhs(g, s, f));
            ctx.zero(
                format!("dim4.{tag}.tilde_projectors.s{si}"),
                "the W̃ right-hand side has only a Y⊗Y part",
                t.clone().map(|t| off_yy_part(&t)),
            );
            ctx.zero(
                format!("dim4.{tag}.tilde_yy.s{si}"),
                "the Y⊗Y part of the W̃ right-hand side is P_3 f",
                t.and_then(|t| yy_component(&t).sub_aligned(&p3?)),
            );
            ctx.zero(
                format!("dim4.{tag}.bach_cotton.s{si}"),
                "B_cd = (4-n) σ^-1 A_cde ∇^e σ, so B = 0",
                bach_cotton_residual(g, s),
            );
        }
        for i in 0..scales.len() {
            for j in i..scales.len() {
                ctx.zero(
                    format!("dim4.{tag}.a_term.s{i}s{j}"),
                    "A_cde σ^-1 ∇^e σ does not depend on the Einstein scale",
                    a_term_residual(g, &scales[i], &scales[j]),
                );
            }
        }
    }
}

impl Ctx<'_> {
    fn field_in(
        &self,
        g: &Geometry,
        slots: &[Slot],
        weight2: i32,
        salt: &str,
    ) -> Result<FieldJet, Error> {
        let mut r = self.rng(salt);
        let n = g.dim();
        let len: usize = slots
            .iter()
            .map(|s| if s.is_tractor() { n + 2 } else { n })
            .product();
        let exprs: Vec<Expr> = (0..len).map(|_| seeded_poly(&mut r, n, 3, 3)).collect();
        g.field_from_exprs(slots, weight2, &exprs, g.order())
    }
}

fn spectrum(ctx: &mut Ctx) {
    let g = ctx.geom;
    let n = g.dim();
    let round = int((n * (n - 1)) as i64);
    let sc = g.scalar_curvature();
    let is_round =
        g.tracefree_schouten().is_zero() && sc.is_constant() && sc.constant_term() == round;
    if !is_round {
        return ctx.unavailable(
            "spectrum.round",
            "the chart metric is the unit round sphere",
            &format!("not the unit round sphere (Sc = {sc}); the spectral table does not apply"),
        );
    }
    ctx.push(
        "spectrum.round".into(),
        "the chart metric is the unit round sphere",
        None,
        Status::ExactZero,
    );
    let s = match einstein_tractor(g, &Expr::int(1)) {
        Ok(s) => s,
        Err(e) => return ctx.error("spectrum.scale".into(), "unit scale", e),
    };
    let kmax = ctx.ks.iter().copied().max().unwrap_or(2);
    for row in spectral_table(n, kmax, 2) {
        if !ctx.ks.contains(&row.k) {
            continue;
        }
        let harmonics = match sphere_harmonics(n, row.degree) {
            Ok(h) => h,
            Err(e) => {
                ctx.error(
                    format!("spectrum.j{}.k{}", row.degree, row.k),
                    "harmonics",
                    e,
                );
                continue;
            }
        };
        let w2 = 2 * row.k as i32 - n as i32;
        let res: Result<FieldJet, Error> = first_nonzero(
            harmonics
                .iter()
                .map(|u| {
                    eigen_residual(g, &s, &g.density(u, w2, g.order())?, row.k, &row.eigenvalue)
                })
                .collect(),
        );
        let what = format!(
            "P_{} u = {} u on degree {} harmonics (Δu = {} u)",
            row.k, row.eigenvalue, row.degree, row.laplace
        );
        let id = format!("spectrum.j{}.k{}", row.degree, row.k);
        match res {
            Ok(f) if f.is_zero() => ctx.push(
                id,
                &what,
                Some(f.order()),
                Status::Value {
                    value: row.eigenvalue.to_string(),
                },
            ),
            other => ctx.zero(id, &what, other),
        }
    }
}

fn run_point(
    scene: &Scene,
    opts: &RunOptions,
    ks: &[usize],
    order: usize,
    index: usize,
    point: &[Rational],
) -> Vec<CheckRecord> {
    let geom = match Geometry::new(&scene.spec.metric, point, order) {
        Ok(g) => g,
        Err(e) => {
            return vec![CheckRecord {
                check: "geometry".into(),
                identity: "metric jets at the point".into(),
                point_index: index,
                residual_order: None,
                status: Status::Fail {
                    residual: vec![e.to_string()],
                },
            }]
        }
    };
    let mut ctx = Ctx {
        scene,
        geom: &geom,
        seed: opts.seed,
        point_index: index,
        ks,
        out: Vec::new(),
    };
    match opts.suite {
        Suite::Curvature => curvature(&mut ctx),
        Suite::Tractor => tractor(&mut ctx),
        Suite::Killing => killing(&mut ctx),
        Suite::Einstein => einstein(&mut ctx),
        Suite::Pk => pk(&mut ctx),
        Suite::Q => q(&mut ctx),
        Suite::Dim4 => dim4(&mut ctx),
        Suite::Spectrum => spectrum(&mut ctx),
    }
    ctx.out
}

/// Runs one suite over the scene's sample points, in parallel across points.
/// Records come back in point order, then check order.
pub fn run_suite(scene: &Scene, opts: &RunOptions) -> Result<SuiteReport, RunError> {
    let start = Instant::now();
    let n = scene.spec.dim();
    if opts.suite == Suite::Dim4 && n != 4 {
        return Err(RunError::Usage(format!(
            "suite dim4 requires n = 4, scene {} has n = {n}",
            scene.spec.name
        )));
    }
    if let Some(k) = opts.k {
        if !(1..=3).contains(&k) {
            return Err(RunError::Usage(format!("--k must be 1, 2 or 3, got {k}")));
        }
    }
    let ks = ks(opts.suite, opts.k);
    let (min, default) = order_policy(opts.suite, n, &ks);
    let order = opts.order.unwrap_or(default);
    if order < min {
        return Err(RunError::Order {
            suite: opts.suite.name(),
            needed: min,
            given: order,
        });
    }
    let count = opts.points.or(scene.spec.sample_count).unwrap_or(3);
    if count == 0 {
        return Err(RunError::Usage("--points must be at least 1".into()));
    }
    let seed = scene.spec.sample_seed.unwrap_or(opts.seed);
    let pts = sample_points(&scene.spec, count, seed)?;
    let per_point: Vec<Vec<CheckRecord>> = pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_point(scene, opts, &ks, order, i, p))
        .collect();
    Ok(SuiteReport {
        suite: opts.suite.name().into(),
        scene: scene.spec.name.clone(),
        dimension: n,
        seed: opts.seed,
        order,
        k: opts.k,
        points: pts.iter().map(|p| point_strings(p)).collect(),
        elapsed_ms: start.elapsed().as_millis() as u64,
        checks: per_point.into_iter().flatten().collect(),
    })
}
