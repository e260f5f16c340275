//! Pointwise (pseudo-)Riemannian calculus on jets: Levi-Civita connection,
//! curvature, the Schouten, Weyl, Cotton and Bach tensors, covariant
//! derivatives of weighted fields, and conformal rescaling.
//!
//! Index conventions: `[∇_a, ∇_b] v^c = R_ab^c_d v^d`, `Ric_bd = R_ab^a_d`,
//! `Ric = (n-2) P + J g`, `A_abc = ∇_b P_ca - ∇_c P_ba`,
//! `B_ab = ∇^c A_acb + P^dc C_dacb`, `Δ = g^ab ∇_a ∇_b`.
//!
//! A field of weight `w` in the scale `g` has components that pick up `Ω^w`
//! when the scale changes to `Ω² g`; the metric itself has weight 2 and
//! every raised index lowers the weight by 2.

mod field;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use num_traits::{One, Signed, Zero};

pub use field::{d_factor, residual, FieldJet, ScaleTag, Slot};

use crate::error::{Error, Result};
use crate::expr::{eval_expr_jet, Expr};
use crate::jets::{int, rat, JetScalar, JetSpace, Rational};

/// Signature `(p, q)`: `p` positive and `q` negative directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
}

impl Signature {
    pub fn riemannian(n: usize) -> Self {
        Signature {
            positive: n,
            negative: 0,
        }
    }

    pub fn is_riemannian(&self) -> bool {
        self.negative == 0
    }
}

/// A coordinate chart with symbolic metric components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartMetric {
    coords: Vec<String>,
    signature: Signature,
    g: Vec<Vec<Expr>>,
}

impl ChartMetric {
    pub fn new(coords: Vec<String>, g: Vec<Vec<Expr>>, signature: Signature) -> Result<Self> {
        let n = coords.len();
        if n < 3 {
            return Err(Error::InvalidScene(format!("dimension {n} is below 3")));
        }
        if signature.positive + signature.negative != n {
            return Err(Error::InvalidScene(format!(
                "signature ({},{}) does not add up to dimension {n}",
                signature.positive, signature.negative
            )));
        }
        if g.len() != n || g.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidScene(format!("metric is not {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if g[i][j] != g[j][i] {
                    return Err(Error::InvalidScene(format!(
                        "metric is not symmetric: g_{}{} differs from g_{}{}",
                        j + 1,
                        i + 1,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for e in g.iter().flatten() {
            if e.max_var().is_some_and(|v| v >= n) {
                return Err(Error::InvalidScene(
                    "metric references an undeclared coordinate".into(),
                ));
            }
        }
        Ok(ChartMetric {
            coords,
            signature,
            g,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.g[i][j]
    }

    pub fn components(&self) -> &[Vec<Expr>] {
        &self.g
    }

    /// Identifies this metric (and hence its trivialisation of densities).
    pub fn tag(&self) -> ScaleTag {
        // FNV-1a over the printed components.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for e in self.g.iter().flatten() {
            for b in e.display(&self.coords).to_string().bytes().chain([b';']) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        ScaleTag(h)
    }

    /// The metric `Ω² g`.
    pub fn conformal_rescale(&self, omega: &Expr) -> ChartMetric {
        let sq = Expr::pow(omega.clone(), 2);
        let g = self
            .g
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| {
                        if e.is_literal_zero() {
                            e.clone()
                        } else if e.is_literal_one() {
                            sq.clone()
                        } else {
                            Expr::mul(sq.clone(), e.clone())
                        }
                    })
                    .collect()
            })
            .collect();
        ChartMetric {
            coords: self.coords.clone(),
            signature: self.signature,
            g,
        }
    }

    /// Exact metric matrix at a point.
    pub fn value_at(&self, point: &[Rational]) -> Result<Vec<Vec<Rational>>> {
        self.g
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.eval(point).ok_or(Error::DegenerateMetric))
                    .collect()
            })
            .collect()
    }
}

/// Inverse of an exact rational matrix.
pub fn invert_matrix(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut inv: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { int(1) } else { int(0) })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let t = &f * &a[col][j];
                    a[r][j] -= t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= t;
                }
            }
        }
    }
    Some(inv)
}

/// Counts positive and negative eigenvalues of a symmetric rational matrix
/// via Descartes' rule on its characteristic polynomial (exact because all
/// roots are real). Returns `None` when the matrix is singular.
pub fn inertia(m: &[Vec<Rational>]) -> Option<Signature> {
    let n = m.len();
    // Faddeev-LeVerrier: coefficients c_k of det(λI - M) = Σ c_k λ^(n-k).
    let mut coeffs = vec![int(1)];
    let mut mk: Vec<Vec<Rational>> = vec![vec![int(0); n]; n];
    for k in 1..=n {
        // M_k = M (M_{k-1} + c_{k-1} I)
        let prev_c = coeffs[k - 1].clone();
        let mut shifted = mk.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += &prev_c;
        }
        let mut next = vec![vec![int(0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = int(0);
                for l in 0..n {
                    if !m[i][l].is_zero() && !shifted[l][j].is_zero() {
                        acc += &m[i][l] * &shifted[l][j];
                    }
                }
                next[i][j] = acc;
            }
        }
        let tr: Rational = (0..n)
            .map(|i| next[i][i].clone())
            .fold(int(0), |a, b| a + b);
        coeffs.push(-tr / int(k as i64));
        mk = next;
    }
    if coeffs[n].is_zero() {
        return None;
    }
    let changes = |flip: bool| {
        let signs: Vec<bool> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| {
                // coefficient of λ^(n-k); under λ -> -λ it gains (-1)^(n-k).
                let neg = c.is_negative();
                if flip && (n - k) % 2 == 1 {
                    !neg
                } else {
                    neg
                }
            })
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    };
    Some(Signature {
        positive: changes(false),
        negative: changes(true),
    })
}

/// Per-slot connection coefficients, grouped by the source component:
/// `by_src[a][j]` lists `(i, c)` meaning `(∇_a T)_i += c · T_j`.
pub(crate) type ConnTable = Vec<Vec<Vec<(usize, JetScalar)>>>;

/// Metric data and curvature of one chart metric at one point.
pub struct Geometry {
    metric: ChartMetric,
    point: Vec<Rational>,
    space: Arc<JetSpace>,
    order: usize,
    tag: ScaleTag,
    n: usize,
    g: Vec<JetScalar>,
    ginv: Vec<JetScalar>,
    gamma: Vec<JetScalar>,
    ricci: Vec<JetScalar>,
    schouten: Vec<JetScalar>,
    j: JetScalar,
    sc: JetScalar,
    riemann: OnceCell<Vec<JetScalar>>,
    weyl: OnceCell<Vec<JetScalar>>,
    cotton: OnceCell<Vec<JetScalar>>,
    bach: OnceCell<Vec<JetScalar>>,
    tangent_conn: OnceCell<(ConnTable, ConnTable)>,
    tractor_conn: OnceCell<(ConnTable, ConnTable)>,
}

impl core::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Geometry")
            .field("n", &self.n)
            .field("order", &self.order)
            .field("point", &self.point)
            .finish()
    }
}

impl Geometry {
    /// Expands the metric at `point` to jet order `order` (at least 2, so the
    /// Schouten tensor is available at order `order - 2`).
    pub fn new(metric: &ChartMetric, point: &[Rational], order: usize) -> Result<Self> {
        let space = JetSpace::new(metric.dim(), order);
        Self::with_space(metric, point, order, &space)
    }

    /// As [`Geometry::new`], sharing an existing jet space.
    pub fn with_space(
        metric: &ChartMetric,
        point: &[Rational],
        order: usize,
        space: &Arc<JetSpace>,
    ) -> Result<Self> {
        let n = metric.dim();
        if point.len() != n {
            return Err(Error::InvalidScene(format!(
                "sample point has {} coordinates, chart has {n}",
                point.len()
            )));
        }
        if order < 2 {
            return Err(Error::OrderUnavailable {
                requested: 2,
                available: order,
            });
        }
        if space.max_order() < order || space.nvars() != n {
            return Err(Error::OrderUnavailable {
                requested: order,
                available: space.max_order(),
            });
        }
        let mut g: Vec<JetScalar> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    let v: JetScalar = g[j * n + i].clone();
                    g.push(v);
                } else {
                    g.push(
                        eval_expr_jet(metric.component(i, j), space, point, order).map_err(
                            |e| match e {
                                Error::ZeroConstantTerm => Error::DegenerateMetric,
                                other => other,
                            },
                        )?,
                    );
                }
            }
        }
        let ginv = invert_jet_matrix(&g, n)?;

        // Γ_{d,ab} = ½(∂_a g_db + ∂_b g_da − ∂_d g_ab), then raise d.
        let dg: Vec<Vec<JetScalar>> = (0..n)
            .map(|a| g.iter().map(|c| c.partial(a)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let half = rat(1, 2);
        let mut low = vec![JetScalar::zero(space, order - 1); n * n * n];
        for d in 0..n {
            for a in 0..n {
                for b in a..n {
                    let v = dg[a][d * n + b]
                        .add_trunc(&dg[b][d * n + a])
                        .sub_trunc(&dg[d][a * n + b])
                        .scale(&half);
                    low[(d * n + a) * n + b] = v.clone();
                    low[(d * n + b) * n + a] = v;
                }
            }
        }
        let mut gamma = vec![JetScalar::zero(space, order - 1); n * n * n];
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut acc = JetScalar::zero(space, order - 1);
                    for d in 0..n {
                        let gi = &ginv[c * n + d];
                        let l = &low[(d * n + a) * n + b];
                        if !gi.is_zero() && !l.is_zero() {
                            acc = acc.add_trunc(&gi.mul_trunc(l));
                        }
                    }
                    gamma[(c * n + a) * n + b] = acc.clone();
                    gamma[(c * n + b) * n + a] = acc;
                }
            }
        }

        // Ric_bd = ∂_a Γ^a_bd − ∂_b Γ^a_ad + Γ^a_ae Γ^e_bd − Γ^a_be Γ^e_ad
        let o2 = order - 2;
        let trace_gamma: Vec<JetScalar> = (0..n)
            .map(|b| {
                (0..n).fold(JetScalar::zero(space, order - 1), |acc, a| {
                    acc.add_trunc(&gamma[(a * n + a) * n + b])
                })
            })
            .collect();
        let mut ricci = vec![JetScalar::zero(space, o2); n * n];
        for b in 0..n {
            for d in b..n {
                let mut acc = -trace_gamma[b].partial(d)?;
                for a in 0..n {
                    let gab = &gamma[(a * n + b) * n + d];
                    if !gab.is_zero() {
                        acc = acc.add_trunc(&gab.partial(a)?);
                    }
                }
                for e in 0..n {
                    let t = &gamma[(e * n + b) * n + d];
                    if !t.is_zero() && !trace_gamma[e].is_zero() {
                        acc = acc.add_trunc(&trace_gamma[e].mul_trunc(t));
                    }
                    for a in 0..n {
                        let x = &gamma[(a * n + b) * n + e];
                        let y = &gamma[(e * n + a) * n + d];
                        if !x.is_zero() && !y.is_zero() {
                            acc = acc.sub_trunc(&x.mul_trunc(y));
                        }
                    }
                }
                ricci[b * n + d] = acc.clone();
                ricci[d * n + b] = acc;
            }
        }
        let mut sc = JetScalar::zero(space, o2);
        for a in 0..n {
            for b in 0..n {
                let gi = &ginv[a * n + b];
                if !gi.is_zero() && !ricci[a * n + b].is_zero() {
                    sc = sc.add_trunc(&gi.mul_trunc(&ricci[a * n + b]));
                }
            }
        }
        let j = sc.scale(&rat(1, 2 * (n as i64 - 1)));
        let inv_nm2 = rat(1, n as i64 - 2);
        let mut schouten = vec![JetScalar::zero(space, o2); n * n];
        for a in 0..n {
            for b in 0..n {
                schouten[a * n + b] = ricci[a * n + b]
                    .sub_trunc(&j.mul_trunc(&g[a * n + b]))
                    .scale(&inv_nm2);
            }
        }

        Ok(Geometry {
            metric: metric.clone(),
            point: point.to_vec(),
            space: space.clone(),
            order,
            tag: metric.tag(),
            n,
            g,
            ginv,
            gamma,
            ricci,
            schouten,
            j,
            sc,
            riemann: OnceCell::new(),
            weyl: OnceCell::new(),
            cotton: OnceCell::new(),
            bach: OnceCell::new(),
            tangent_conn: OnceCell::new(),
            tractor_conn: OnceCell::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn point(&self) -> &[Rational] {
        &self.point
    }

    pub fn metric(&self) -> &ChartMetric {
        &self.metric
    }

    pub fn tag(&self) -> ScaleTag {
        self.tag
    }

    pub fn g(&self, a: usize, b: usize) -> &JetScalar {
        &self.g[a * self.n + b]
    }

    pub fn ginv(&self, a: usize, b: usize) -> &JetScalar {
        &self.ginv[a * self.n + b]
    }

    /// `Γ^c_ab` at order `K - 1`.
    pub fn christoffel(&self, c: usize, a: usize, b: usize) -> &JetScalar {
        &self.gamma[(c * self.n + a) * self.n + b]
    }

    pub fn ricci(&self, a: usize, b: usize) -> &JetScalar {
        &self.ricci[a * self.n + b]
    }

    pub fn schouten(&self, a: usize, b: usize) -> &JetScalar {
        &self.schouten[a * self.n + b]
    }

    /// `J = g^ab P_ab` at order `K - 2`.
    pub fn j(&self) -> &JetScalar {
        &self.j
    }

    pub fn scalar_curvature(&self) -> &JetScalar {
        &self.sc
    }

    /// Evaluates an expression as a jet at this point.
    pub fn eval(&self, e: &Expr, order: usize) -> Result<JetScalar> {
        eval_expr_jet(e, &self.space, &self.point, order)
    }

    /// A density of doubled weight `weight2` whose component in this scale is `e`.
    pub fn density(&self, e: &Expr, weight2: i32, order: usize) -> Result<FieldJet> {
        Ok(FieldJet::density(
            self.n,
            weight2,
            self.tag,
            self.eval(e, order)?,
        ))
    }

    /// A field whose components (row-major) are the given expressions.
    pub fn field_from_exprs(
        &self,
        slots: &[Slot],
        weight2: i32,
        exprs: &[Expr],
        order: usize,
    ) -> Result<FieldJet> {
        let comps = exprs
            .iter()
            .map(|e| self.eval(e, order))
            .collect::<Result<Vec<_>>>()?;
        FieldJet::from_comps(self.n, slots, weight2, self.tag, comps)
    }

    /// A field from raw component jets.
    pub fn field(&self, slots: &[Slot], weight2: i32, comps: Vec<JetScalar>) -> Result<FieldJet> {
        FieldJet::from_comps(self.n, slots, weight2, self.tag, comps)
    }

    fn two_tensor(&self, data: &[JetScalar], slots: [Slot; 2], weight2: i32) -> FieldJet {
        let order = data.iter().map(JetScalar::order).min().unwrap_or(0);
        let comps = data
            .iter()
            .map(|c| c.truncated(order).expect("lower order"))
            .collect();
        FieldJet::from_comps(self.n, &slots, weight2, self.tag, comps).expect("layout")
    }

    /// The conformal metric `g_ab` (weight 2).
    pub fn metric_field(&self) -> FieldJet {
        self.two_tensor(&self.g, [Slot::Cotangent, Slot::Cotangent], 4)
    }

    /// The inverse conformal metric `g^ab` (weight -2).
    pub fn inverse_metric_field(&self) -> FieldJet {
        self.two_tensor(&self.ginv, [Slot::Tangent, Slot::Tangent], -4)
    }

    pub fn ricci_field(&self) -> FieldJet {
        self.two_tensor(&self.ricci, [Slot::Cotangent, Slot::Cotangent], 0)
    }

    pub fn schouten_field(&self) -> FieldJet {
        self.two_tensor(&self.schouten, [Slot::Cotangent, Slot::Cotangent], 0)
    }

    /// `J` as a density of weight -2.
    pub fn j_field(&self) -> FieldJet {
        FieldJet::density(self.n, -4, self.tag, self.j.clone())
    }

    /// `Γ^c_ab` as a (non-tensorial) array field with slots `(c, a, b)`.
    pub fn christoffel_field(&self) -> FieldJet {
        FieldJet::from_comps(
            self.n,
            &[Slot::Tangent, Slot::Cotangent, Slot::Cotangent],
            0,
            self.tag,
            self.gamma.clone(),
        )
        .expect("layout")
    }

    /// `R_ab^c_d`, slots `(a, b, c, d)`, at order `K - 2`.
    pub fn riemann(&self) -> &[JetScalar] {
        self.riemann.get_or_init(|| {
            let n = self.n;
            let o = self.order - 2;
            let dgamma: Vec<Vec<JetScalar>> = (0..n)
                .map(|a| {
                    self.gamma
                        .iter()
                        .map(|c| c.partial(a).expect("order ≥ 2"))
                        .collect()
                })
                .collect();
            let mut r = vec![JetScalar::zero(&self.space, o); n * n * n * n];
            let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut acc = dgamma[a][(c * n + b) * n + d]
                                .sub_trunc(&dgamma[b][(c * n + a) * n + d]);
                            for e in 0..n {
                                let x = self.christoffel(c, a, e);
                                let y = self.christoffel(e, b, d);
                                if !x.is_zero() && !y.is_zero() {
                                    acc = acc.add_trunc(&x.mul_trunc(y));
                                }
                                let x = self.christoffel(c, b, e);
                                let y = self.christoffel(e, a, d);
                                if !x.is_zero() && !y.is_zero() {
                                    acc = acc.sub_trunc(&x.mul_trunc(y));
                                }
                            }
                            r[idx(b, a, c, d)] = -&acc;
                            r[idx(a, b, c, d)] = acc;
                        }
                    }
                }
            }
            r
        })
    }

    pub fn riemann_field(&self) -> FieldJet {
        FieldJet::from_comps(
            self.n,
            &[
                Slot::Cotangent,
                Slot::Cotangent,
                Slot::Tangent,
                Slot::Cotangent,
            ],
            0,
            self.tag,
            self.riemann().to_vec(),
        )
        .expect("layout")
    }

    /// `C_abcd` (all indices down, weight 2) at order `K - 2`.
    pub fn weyl(&self) -> &[JetScalar] {
        self.weyl.get_or_init(|| {
            let n = self.n;
            let o = self.order - 2;
            let r = self.riemann();
            let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
            let g = |a: usize, b: usize| self.g(a, b).truncated(o).expect("order");
            let p = |a: usize, b: usize| self.schouten(a, b);
            let mut w = vec![JetScalar::zero(&self.space, o); n * n * n * n];
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in 0..n {
                        for d in 0..n {
                            // R_abcd = g_ce R_ab^e_d
                            let mut acc = JetScalar::zero(&self.space, o);
                            for e in 0..n {
                                let gc = self.g(c, e);
                                let re = &r[idx(a, b, e, d)];
                                if !gc.is_zero() && !re.is_zero() {
                                    acc = acc.add_trunc(&gc.mul_trunc(re));
                                }
                            }
                            // minus 2g_c[a P_b]d + 2g_d[b P_a]c
                            let corr = g(c, a)
                                .mul_trunc(p(b, d))
                                .sub_trunc(&g(c, b).mul_trunc(p(a, d)))
                                .add_trunc(&g(d, b).mul_trunc(p(a, c)))
                                .sub_trunc(&g(d, a).mul_trunc(p(b, c)));
                            let v = acc.sub_trunc(&corr);
                            w[idx(b, a, c, d)] = -&v;
                            w[idx(a, b, c, d)] = v;
                        }
                    }
                }
            }
            w
        })
    }

    pub fn weyl_field(&self) -> FieldJet {
        FieldJet::from_comps(
            self.n,
            &[Slot::Cotangent; 4],
            4,
            self.tag,
            self.weyl().to_vec(),
        )
        .expect("layout")
    }

    /// `A_abc = ∇_b P_ca − ∇_c P_ba` at order `K - 3`.
    pub fn cotton(&self) -> &[JetScalar] {
        self.cotton.get_or_init(|| {
            let n = self.n;
            let dp = self
                .nabla(&self.schouten_field())
                .expect("order ≥ 3 for the Cotton tensor");
            let mut a_ = Vec::with_capacity(n * n * n);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        a_.push(dp.get(&[b, c, a]).sub_trunc(dp.get(&[c, b, a])));
                    }
                }
            }
            a_
        })
    }

    pub fn cotton_field(&self) -> FieldJet {
        FieldJet::from_comps(
            self.n,
            &[Slot::Cotangent; 3],
            0,
            self.tag,
            self.cotton().to_vec(),
        )
        .expect("layout")
    }

    /// `B_ab = ∇^c A_acb + P^dc C_dacb` (weight -2) at order `K - 4`.
    pub fn bach(&self) -> &[JetScalar] {
        self.bach.get_or_init(|| {
            let n = self.n;
            let da = self
                .nabla(&self.cotton_field())
                .expect("order ≥ 4 for the Bach tensor");
            let o = da.order();
            let c4 = self.weyl();
            let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
            let p_up = self.raise_all(&self.schouten_field());
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    let mut acc = JetScalar::zero(&self.space, o);
                    for c in 0..n {
                        for e in 0..n {
                            let gi = self.ginv(c, e);
                            let t = da.get(&[e, a, c, b]);
                            if !gi.is_zero() && !t.is_zero() {
                                acc = acc.add_trunc(&gi.mul_trunc(t));
                            }
                            let pu = p_up.get(&[e, c]);
                            let w = &c4[idx4(e, a, c, b)];
                            if !pu.is_zero() && !w.is_zero() {
                                acc = acc.add_trunc(&pu.mul_trunc(w));
                            }
                        }
                    }
                    out.push(acc);
                }
            }
            out
        })
    }

    pub fn bach_field(&self) -> FieldJet {
        FieldJet::from_comps(
            self.n,
            &[Slot::Cotangent; 2],
            -4,
            self.tag,
            self.bach().to_vec(),
        )
        .expect("layout")
    }

    fn tangent_tables(&self) -> &(ConnTable, ConnTable) {
        self.tangent_conn.get_or_init(|| {
            let n = self.n;
            let mut up: ConnTable = vec![vec![Vec::new(); n]; n];
            let mut down: ConnTable = vec![vec![Vec::new(); n]; n];
            for a in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let c = self.christoffel(i, a, j);
                        if !c.is_zero() {
                            // (∇_a T)^i += Γ^i_aj T^j ; (∇_a T)_j −= Γ^i_aj T_i
                            up[a][j].push((i, c.clone()));
                            down[a][i].push((j, -c));
                        }
                    }
                }
            }
            (up, down)
        })
    }

    pub(crate) fn tractor_tables(&self) -> &(ConnTable, ConnTable) {
        self.tractor_conn
            .get_or_init(|| crate::tractor::connection_tables(self))
    }

    /// Covariant derivative: Levi-Civita on tensor slots, the tractor
    /// connection on tractor slots, and the flat trivialisation connection on
    /// the density weight. Prepends a cotangent slot; the weight is unchanged.
    pub fn nabla(&self, t: &FieldJet) -> Result<FieldJet> {
        self.check_tag(t)?;
        if t.order() == 0 {
            return Err(Error::OrderExhausted);
        }
        let n = self.n;
        let has_tractor = t.slots().iter().any(|s| s.is_tractor());
        let has_tensor = t.slots().iter().any(|s| !s.is_tractor());
        let mut o = t.order() - 1;
        if has_tensor {
            o = o.min(self.order - 1);
        }
        if has_tractor {
            o = o.min(self.order - 2);
        }
        let src = t.truncated(o + 1)?;
        let len = src.len();
        let mut slots = Vec::with_capacity(t.rank() + 1);
        slots.push(Slot::Cotangent);
        slots.extend_from_slice(t.slots());
        let mut comps = Vec::with_capacity(n * len);
        for a in 0..n {
            for c in src.comps() {
                comps.push(c.partial(a)?);
            }
        }
        let strides: Vec<usize> = (0..src.rank())
            .map(|k| (k + 1..src.rank()).map(|m| src.extent(m)).product())
            .collect();
        for (k, &slot) in src.slots().iter().enumerate() {
            let table = match slot {
                Slot::Tangent => &self.tangent_tables().0,
                Slot::Cotangent => &self.tangent_tables().1,
                Slot::TractorUp => &self.tractor_tables().0,
                Slot::TractorDown => &self.tractor_tables().1,
            };
            let ext = src.extent(k);
            let stride = strides[k];
            for (off, val) in src.comps().iter().enumerate() {
                if val.is_zero() {
                    continue;
                }
                let j = (off / stride) % ext;
                let base = off - j * stride;
                for a in 0..n {
                    for (i, coef) in &table[a][j] {
                        let target = a * len + base + i * stride;
                        comps[target] = comps[target].add_trunc(&coef.mul_trunc(val));
                    }
                }
            }
        }
        FieldJet::from_comps(n, &slots, t.weight2(), self.tag, comps)
    }

    /// `∇_{a_k} ... ∇_{a_1} T`, the last derivative outermost.
    pub fn nabla_n(&self, t: &FieldJet, times: usize) -> Result<FieldJet> {
        let mut out = t.clone();
        for _ in 0..times {
            out = self.nabla(&out)?;
        }
        Ok(out)
    }

    /// Contracts two tensor slots with the inverse metric (both cotangent)
    /// or the metric (both tangent). The weight shifts by -2 or +2.
    pub fn metric_trace(&self, t: &FieldJet, i: usize, j: usize) -> Result<FieldJet> {
        self.check_tag(t)?;
        let (si, sj) = (t.slots()[i], t.slots()[j]);
        let (mat, shift) = match (si, sj) {
            (Slot::Cotangent, Slot::Cotangent) => (&self.ginv, -4),
            (Slot::Tangent, Slot::Tangent) => (&self.g, 4),
            _ => {
                return Err(Error::LayoutMismatch(format!(
                    "metric trace needs two like tensor slots, got {si:?} and {sj:?}"
                )))
            }
        };
        let n = self.n;
        let keep: Vec<usize> = (0..t.rank()).filter(|&k| k != i && k != j).collect();
        let out_slots: Vec<Slot> = keep.iter().map(|&k| t.slots()[k]).collect();
        let mut out = FieldJet::zero(
            &self.space,
            n,
            &out_slots,
            t.weight2() + shift,
            self.tag,
            t.order(),
        );
        let mut src = vec![0; t.rank()];
        for off in 0..out.len() {
            let idx = out.multi_index(off);
            for (k, &p) in keep.iter().enumerate() {
                src[p] = idx[k];
            }
            let mut acc = JetScalar::zero(&self.space, t.order());
            for a in 0..n {
                for b in 0..n {
                    let m = &mat[a * n + b];
                    if m.is_zero() {
                        continue;
                    }
                    src[i] = a;
                    src[j] = b;
                    let v = t.get(&src);
                    if !v.is_zero() {
                        acc = acc.add_trunc(&m.mul_trunc(v));
                    }
                }
            }
            out.comps_mut()[off] = acc;
        }
        Ok(out)
    }

    /// `Δ T = g^ab ∇_a ∇_b T`; the weight drops by 2.
    pub fn laplacian(&self, t: &FieldJet) -> Result<FieldJet> {
        let dd = self.nabla(&self.nabla(t)?)?;
        self.metric_trace(&dd, 0, 1)
    }

    /// Raises (cotangent → tangent, weight −2) or lowers (tangent →
    /// cotangent, weight +2) a tensor slot; on tractor slots applies the
    /// tractor metric, which leaves the weight unchanged.
    pub fn flip_slot(&self, t: &FieldJet, slot: usize) -> Result<FieldJet> {
        self.check_tag(t)?;
        let n = self.n;
        let kind = t.slots()[slot];
        let mut slots = t.slots().to_vec();
        slots[slot] = kind.dual();
        let shift = match kind {
            Slot::Cotangent => -4,
            Slot::Tangent => 4,
            _ => 0,
        };
        let ext = t.extent(slot);
        let mut out = FieldJet::zero(
            &self.space,
            n,
            &slots,
            t.weight2() + shift,
            self.tag,
            t.order(),
        );
        let o = t.order();
        for off in 0..t.len() {
            let v = &t.comps()[off];
            if v.is_zero() {
                continue;
            }
            let mut idx = t.multi_index(off);
            let j = idx[slot];
            match kind {
                Slot::Cotangent | Slot::Tangent => {
                    let mat = if kind == Slot::Cotangent {
                        &self.ginv
                    } else {
                        &self.g
                    };
                    for i in 0..n {
                        let m = &mat[i * n + j];
                        if !m.is_zero() {
                            idx[slot] = i;
                            out.accumulate(&idx, &m.mul_trunc(v).truncated(o)?);
                        }
                    }
                }
                Slot::TractorUp | Slot::TractorDown => {
                    // lower: H = [[0,0,1],[0,g^-1,0],[1,0,0]]; raise: [[0,0,1],[0,g,0],[1,0,0]]
                    let mat = if kind == Slot::TractorUp {
                        &self.ginv
                    } else {
                        &self.g
                    };
                    if j == 0 || j == ext - 1 {
                        idx[slot] = ext - 1 - j;
                        out.accumulate(&idx, v);
                    } else {
                        for i in 0..n {
                            let m = &mat[i * n + (j - 1)];
                            if !m.is_zero() {
                                idx[slot] = i + 1;
                                out.accumulate(&idx, &m.mul_trunc(v).truncated(o)?);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Raises every cotangent slot.
    pub fn raise_all(&self, t: &FieldJet) -> FieldJet {
        let mut out = t.clone();
        for k in 0..t.rank() {
            if out.slots()[k] == Slot::Cotangent {
                out = self.flip_slot(&out, k).expect("same scale");
            }
        }
        out
    }

    pub fn check_tag(&self, t: &FieldJet) -> Result<()> {
        if t.scale_tag() != self.tag {
            return Err(Error::LayoutMismatch(
                "field is trivialised in a different scale".into(),
            ));
        }
        if t.dim() != self.n {
            return Err(Error::LayoutMismatch(format!(
                "field dimension {} vs geometry {}",
                t.dim(),
                self.n
            )));
        }
        Ok(())
    }

    /// `∇_c g_ab`, which must vanish.
    pub fn metric_compatibility(&self) -> Result<FieldJet> {
        self.nabla(&self.metric_field())
    }

    /// `[∇_a, ∇_b] v^c − R_ab^c_d v^d` for a vector field `v`.
    pub fn commutator_residual(&self, v: &FieldJet) -> Result<FieldJet> {
        if v.slots() != [Slot::Tangent] {
            return Err(Error::LayoutMismatch("expected a vector field".into()));
        }
        let dd = self.nabla(&self.nabla(v)?)?;
        let comm = dd.try_sub(&dd.swapped(0, 1))?;
        let rv = self.riemann_field().outer(v)?.contract(3, 4)?;
        let o = comm.order().min(rv.order());
        comm.truncated(o)?.try_sub(&rv.truncated(o)?)
    }

    /// `R_[ab^c_d]` with the lowered index set `(a, b, d)` antisymmetrised.
    pub fn first_bianchi(&self) -> FieldJet {
        let r = self.riemann_field();
        let n = self.n;
        let mut out = r.clone();
        for off in 0..r.len() {
            let idx = r.multi_index(off);
            let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
            let v = r
                .get(&[a, b, c, d])
                .add_trunc(r.get(&[b, d, c, a]))
                .add_trunc(r.get(&[d, a, c, b]));
            out.comps_mut()[off] = v;
        }
        debug_assert_eq!(out.dim(), n);
        out
    }

    /// The constant-curvature model `K (g_ac g_bd − g_ad g_bc)` minus `R_abcd`.
    pub fn constant_curvature_residual(&self, curvature: &Rational) -> FieldJet {
        let n = self.n;
        let o = self.order - 2;
        let r = self.riemann();
        let mut out = FieldJet::zero(&self.space, n, &[Slot::Cotangent; 4], 4, self.tag, o);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut low = JetScalar::zero(&self.space, o);
                        for e in 0..n {
                            let re = &r[((a * n + b) * n + e) * n + d];
                            if !re.is_zero() {
                                low = low.add_trunc(&self.g(c, e).mul_trunc(re));
                            }
                        }
                        let model = self
                            .g(a, c)
                            .mul_trunc(self.g(b, d))
                            .sub_trunc(&self.g(a, d).mul_trunc(self.g(b, c)))
                            .scale(curvature);
                        out.set(
                            &[a, b, c, d],
                            model.sub_trunc(&low).truncated(o).expect("order"),
                        );
                    }
                }
            }
        }
        out
    }

    /// `Ric − λ g` for the Einstein constant `λ`; zero iff `Ric = λ g`.
    pub fn einstein_residual(&self, lambda: &Rational) -> FieldJet {
        let n = self.n;
        let o = self.order - 2;
        let comps = (0..n * n)
            .map(|k| {
                self.ricci[k]
                    .sub_trunc(&self.g[k].scale(lambda))
                    .truncated(o)
                    .expect("order")
            })
            .collect();
        self.field(&[Slot::Cotangent, Slot::Cotangent], 0, comps)
            .expect("layout")
    }

    /// Trace-free part of the Schouten tensor; zero iff the metric is Einstein.
    pub fn tracefree_schouten(&self) -> FieldJet {
        let n = self.n;
        let o = self.order - 2;
        let jn = self.j.scale(&rat(1, n as i64));
        let comps = (0..n * n)
            .map(|k| self.schouten[k].sub_trunc(&jn.mul_trunc(&self.g[k])))
            .collect::<Vec<_>>();
        let comps = comps
            .into_iter()
            .map(|c| c.truncated(o).expect("order"))
            .collect();
        self.field(&[Slot::Cotangent, Slot::Cotangent], 0, comps)
            .expect("layout")
    }
}

/// Inverse of a symmetric jet matrix by Gauss–Jordan elimination, pivoting on
/// entries with nonzero constant term.
fn invert_jet_matrix(g: &[JetScalar], n: usize) -> Result<Vec<JetScalar>> {
    let space = g[0].space().clone();
    let order = g[0].order();
    let mut a: Vec<Vec<JetScalar>> = (0..n).map(|i| g[i * n..(i + 1) * n].to_vec()).collect();
    let mut inv: Vec<Vec<JetScalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        JetScalar::one(&space, order)
                    } else {
                        JetScalar::zero(&space, order)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].constant_term().is_zero())
            .ok_or(Error::DegenerateMetric)?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].reciprocal()?;
        if !p.is_constant() || !p.constant_term().is_one() {
            for j in 0..n {
                if !a[col][j].is_zero() {
                    a[col][j] = &a[col][j] * &p;
                }
                if !inv[col][j].is_zero() {
                    inv[col][j] = &inv[col][j] * &p;
                }
            }
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                if !a[col][j].is_zero() {
                    a[r][j] = &a[r][j] - &(&f * &a[col][j]);
                }
                if !inv[col][j].is_zero() {
                    inv[r][j] = &inv[r][j] - &(&f * &inv[col][j]);
                }
            }
        }
    }
    Ok(inv.into_iter().flatten().collect())
}

/// Builds a field from a symmetric tensor given by exact constant values.
pub fn constant_field(
    geom: &Geometry,
    slots: &[Slot],
    weight2: i32,
    values: &[Rational],
    order: usize,
) -> Result<FieldJet> {
    let comps = values
        .iter()
        .map(|v| JetScalar::constant(geom.space(), order, v))
        .collect();
    geom.field(slots, weight2, comps)
}

/// Checks the declared signature against the metric value at a point.
pub fn check_signature(metric: &ChartMetric, point: &[Rational]) -> Result<()> {
    let m = metric.value_at(point)?;
    let found = inertia(&m).ok_or(Error::DegenerateMetric)?;
    if found != metric.signature() {
        return Err(Error::InvalidScene(format!(
            "metric has signature ({},{}) at the sample point, declared ({},{})",
            found.positive,
            found.negative,
            metric.signature().positive,
            metric.signature().negative
        )));
    }
    Ok(())
}

/// `Ω^{w}` as a jet for doubled weight `weight2`, using an exact square root
/// for half-integer weights.
pub fn weight_power(omega: &JetScalar, weight2: i32) -> Result<JetScalar> {
    if weight2 % 2 == 0 {
        omega.powi(weight2 / 2)
    } else {
        omega.sqrt()?.powi(weight2)
    }
}

/// Rescales a tensor field (no tractor slots) from the scale `g` to `Ω² g`:
/// components pick up `Ω^w`.
pub fn rescale_tensor(t: &FieldJet, omega: &JetScalar, target: ScaleTag) -> Result<FieldJet> {
    if t.slots().iter().any(|s| s.is_tractor()) {
        return Err(Error::Unsupported(
            "tractor slots rescale through the tractor module".into(),
        ));
    }
    if omega.constant_term().is_zero() {
        return Err(Error::VanishingScale("Ω".into()));
    }
    let f = weight_power(omega, t.weight2())?;
    Ok(t.times_density(&f, 0).with_scale_tag(target))
}

impl Geometry {
    /// Signed difference between two geometries' metric jets; used to compare
    /// a rescaled chart with a catalog chart.
    pub fn metric_difference(&self, other: &Geometry) -> Result<FieldJet> {
        let o = self.order.min(other.order);
        let comps = self
            .g
            .iter()
            .zip(&other.g)
            .map(|(a, b)| {
                a.truncated(o)
                    .and_then(|a| Ok(a.sub_trunc(&b.truncated(o)?)))
            })
            .collect::<Result<Vec<_>>>()?;
        FieldJet::from_comps(self.n, &[Slot::Cotangent; 2], 4, self.tag, comps)
    }
}

/// The constant term of every component.
pub fn point_values(t: &FieldJet) -> Vec<Rational> {
    t.comps().iter().map(JetScalar::constant_term).collect()
}
