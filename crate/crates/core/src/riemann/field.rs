use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::jets::{int, rat, JetScalar, JetSpace, Rational};

/// Kind of one index of a [`FieldJet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Tangent,
    Cotangent,
    TractorUp,
    TractorDown,
}

impl Slot {
    pub fn is_tractor(self) -> bool {
        matches!(self, Slot::TractorUp | Slot::TractorDown)
    }

    pub fn dual(self) -> Slot {
        match self {
            Slot::Tangent => Slot::Cotangent,
            Slot::Cotangent => Slot::Tangent,
            Slot::TractorUp => Slot::TractorDown,
            Slot::TractorDown => Slot::TractorUp,
        }
    }
}

/// Identifies the metric that trivialises a field's density and tractor
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScaleTag(pub u64);

/// A weighted tensor/tractor field germ at a point, stored as components in
/// one resident scale.
///
/// Components are laid out row-major: the first slot varies slowest. Tensor
/// slots have extent `n`, tractor slots `n + 2` in the order `(α; μ_1..μ_n; τ)`.
/// The conformal weight is stored doubled so half-integers are exact.
#[derive(Clone)]
pub struct FieldJet {
    n: usize,
    slots: Vec<Slot>,
    weight2: i32,
    scale: ScaleTag,
    order: usize,
    space: Arc<JetSpace>,
    comps: Vec<JetScalar>,
}

impl PartialEq for FieldJet {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.slots == other.slots
            && self.weight2 == other.weight2
            && self.scale == other.scale
            && self.order == other.order
            && self.comps == other.comps
    }
}

impl Eq for FieldJet {}

impl fmt::Debug for FieldJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldJet")
            .field("slots", &self.slots)
            .field("weight", &self.weight())
            .field("order", &self.order)
            .field(
                "nonzero",
                &self.comps.iter().filter(|c| !c.is_zero()).count(),
            )
            .finish()
    }
}

pub(crate) fn extent_of(n: usize, slot: Slot) -> usize {
    if slot.is_tractor() {
        n + 2
    } else {
        n
    }
}

impl FieldJet {
    pub fn zero(
        space: &Arc<JetSpace>,
        n: usize,
        slots: &[Slot],
        weight2: i32,
        scale: ScaleTag,
        order: usize,
    ) -> Self {
        let len = slots.iter().map(|&s| extent_of(n, s)).product();
        FieldJet {
            n,
            slots: slots.to_vec(),
            weight2,
            scale,
            order,
            space: space.clone(),
            comps: vec![JetScalar::zero(space, order); len],
        }
    }

    /// Builds a field from its flat component list. All components must have
    /// the same order.
    pub fn from_comps(
        n: usize,
        slots: &[Slot],
        weight2: i32,
        scale: ScaleTag,
        comps: Vec<JetScalar>,
    ) -> Result<Self> {
        let len: usize = slots.iter().map(|&s| extent_of(n, s)).product();
        if comps.len() != len {
            return Err(Error::LayoutMismatch(format!(
                "expected {len} components, got {}",
                comps.len()
            )));
        }
        let order = comps.iter().map(JetScalar::order).min().unwrap_or(0);
        if comps.iter().any(|c| c.order() != order) {
            return Err(Error::LayoutMismatch(
                "components differ in jet order".into(),
            ));
        }
        let space = comps[0].space().clone();
        Ok(FieldJet {
            n,
            slots: slots.to_vec(),
            weight2,
            scale,
            order,
            space,
            comps,
        })
    }

    /// A density (no slots) with the given component.
    pub fn density(n: usize, weight2: i32, scale: ScaleTag, value: JetScalar) -> Self {
        FieldJet {
            n,
            slots: Vec::new(),
            weight2,
            scale,
            order: value.order(),
            space: value.space().clone(),
            comps: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn weight2(&self) -> i32 {
        self.weight2
    }

    pub fn weight(&self) -> Rational {
        rat(i64::from(self.weight2), 2)
    }

    pub fn scale_tag(&self) -> ScaleTag {
        self.scale
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn extent(&self, slot: usize) -> usize {
        extent_of(self.n, self.slots[slot])
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn comps(&self) -> &[JetScalar] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [JetScalar] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<JetScalar> {
        self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(JetScalar::is_zero)
    }

    /// The component of a rank-0 field.
    pub fn scalar(&self) -> &JetScalar {
        assert!(
            self.slots.is_empty(),
            "scalar() on a field of rank {}",
            self.rank()
        );
        &self.comps[0]
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        let mut off = 0;
        for (k, &i) in idx.iter().enumerate() {
            let e = self.extent(k);
            debug_assert!(i < e);
            off = off * e + i;
        }
        off
    }

    /// Multi-index of a flat offset.
    pub fn multi_index(&self, mut off: usize) -> Vec<usize> {
        let mut idx = vec![0; self.slots.len()];
        for k in (0..self.slots.len()).rev() {
            let e = self.extent(k);
            idx[k] = off % e;
            off /= e;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> &JetScalar {
        &self.comps[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: JetScalar) {
        let off = self.offset(idx);
        self.comps[off] = value;
    }

    /// Adds `value` (at any order `≥ self.order`) into one component.
    pub fn accumulate(&mut self, idx: &[usize], value: &JetScalar) {
        let off = self.offset(idx);
        self.comps[off] = self.comps[off].add_trunc(value);
    }

    pub fn with_weight2(mut self, weight2: i32) -> Self {
        self.weight2 = weight2;
        self
    }

    pub fn with_scale_tag(mut self, scale: ScaleTag) -> Self {
        self.scale = scale;
        self
    }

    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order == self.order {
            return Ok(self.clone());
        }
        let comps = self
            .comps
            .iter()
            .map(|c| c.truncated(order))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldJet {
            order,
            comps,
            ..self.clone_shape()
        })
    }

    fn clone_shape(&self) -> Self {
        FieldJet {
            n: self.n,
            slots: self.slots.clone(),
            weight2: self.weight2,
            scale: self.scale,
            order: self.order,
            space: self.space.clone(),
            comps: Vec::new(),
        }
    }

    pub(crate) fn with_comps(&self, comps: Vec<JetScalar>) -> Self {
        let order = comps.first().map_or(self.order, JetScalar::order);
        debug_assert!(comps.iter().all(|c| c.order() == order));
        FieldJet {
            order,
            comps,
            ..self.clone_shape()
        }
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.slots != other.slots {
            return Err(Error::LayoutMismatch(format!(
                "{:?} vs {:?}",
                self.slots, other.slots
            )));
        }
        if self.weight2 != other.weight2 {
            return Err(Error::LayoutMismatch(format!(
                "weight {} vs {}",
                self.weight(),
                other.weight()
            )));
        }
        if self.scale != other.scale {
            return Err(Error::LayoutMismatch(
                "fields live in different scales".into(),
            ));
        }
        Ok(())
    }

    /// Sum at the lower of the two orders; layouts, weights and scales must agree.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(self.with_comps(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add_trunc(b))
                .collect(),
        ))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(self.with_comps(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.sub_trunc(b))
                .collect(),
        ))
    }

    /// Sum after truncating both sides to the lower order.
    pub fn add_aligned(&self, other: &Self) -> Result<Self> {
        let o = self.order.min(other.order);
        self.truncated(o)?.try_add(&other.truncated(o)?)
    }

    /// Difference after truncating both sides to the lower order.
    pub fn sub_aligned(&self, other: &Self) -> Result<Self> {
        let o = self.order.min(other.order);
        self.truncated(o)?.try_sub(&other.truncated(o)?)
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        self.with_comps(self.comps.iter().map(|c| c.scale(factor)).collect())
    }

    pub fn neg(&self) -> Self {
        self.with_comps(self.comps.iter().map(|c| -c).collect())
    }

    /// Multiplies by a density of doubled weight `weight2`.
    pub fn times_density(&self, value: &JetScalar, weight2: i32) -> Self {
        let mut out = self.with_comps(self.comps.iter().map(|c| c.mul_trunc(value)).collect());
        out.weight2 += weight2;
        out
    }

    /// Multiplies by another field of rank 0.
    pub fn times(&self, density: &FieldJet) -> Result<Self> {
        if density.rank() != 0 {
            return Err(Error::LayoutMismatch("times() expects a density".into()));
        }
        if density.scale != self.scale {
            return Err(Error::LayoutMismatch(
                "fields live in different scales".into(),
            ));
        }
        Ok(self.times_density(density.scalar(), density.weight2))
    }

    /// Outer product `self ⊗ other`, slots of `self` first.
    pub fn outer(&self, other: &FieldJet) -> Result<Self> {
        if self.scale != other.scale || self.n != other.n {
            return Err(Error::LayoutMismatch("outer product across scales".into()));
        }
        let order = self.order.min(other.order);
        let mut comps = Vec::with_capacity(self.len() * other.len());
        for a in &self.comps {
            for b in &other.comps {
                comps.push(if a.is_zero() || b.is_zero() {
                    JetScalar::zero(&self.space, order)
                } else {
                    a.mul_trunc(b)
                });
            }
        }
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        Ok(FieldJet {
            n: self.n,
            slots,
            weight2: self.weight2 + other.weight2,
            scale: self.scale,
            order,
            space: self.space.clone(),
            comps,
        })
    }

    /// Reorders slots: slot `k` of the result is slot `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank());
        let slots: Vec<Slot> = perm.iter().map(|&p| self.slots[p]).collect();
        let mut out = FieldJet {
            slots,
            ..self.clone_shape()
        };
        out.comps = vec![JetScalar::zero(&self.space, self.order); self.len()];
        let mut src = vec![0; self.rank()];
        for off in 0..out.len() {
            let idx = out.multi_index(off);
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            out.comps[off] = self.get(&src).clone();
        }
        out
    }

    /// Exchanges two slots.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut perm: Vec<usize> = (0..self.rank()).collect();
        perm.swap(i, j);
        self.permuted(&perm)
    }

    /// Natural pairing of a slot with a dual slot (`Tangent` with `Cotangent`,
    /// `TractorUp` with `TractorDown`).
    pub fn contract(&self, i: usize, j: usize) -> Result<Self> {
        if i == j || self.slots[i].dual() != self.slots[j] {
            return Err(Error::LayoutMismatch(format!(
                "cannot pair slots {:?} and {:?}",
                self.slots[i], self.slots[j]
            )));
        }
        let ext = self.extent(i);
        let keep: Vec<usize> = (0..self.rank()).filter(|&k| k != i && k != j).collect();
        let slots: Vec<Slot> = keep.iter().map(|&k| self.slots[k]).collect();
        let mut out = FieldJet {
            slots,
            ..self.clone_shape()
        };
        let len = out.slots.iter().map(|&s| extent_of(self.n, s)).product();
        let mut comps = Vec::with_capacity(len);
        let mut src = vec![0; self.rank()];
        for off in 0..len {
            let idx = out.multi_index(off);
            for (k, &p) in keep.iter().enumerate() {
                src[p] = idx[k];
            }
            let mut acc = JetScalar::zero(&self.space, self.order);
            for t in 0..ext {
                src[i] = t;
                src[j] = t;
                let c = self.get(&src);
                if !c.is_zero() {
                    acc = &acc + c;
                }
            }
            comps.push(acc);
        }
        out.comps = comps;
        Ok(out)
    }

    /// Antisymmetrises over two slots of the same kind: `(T_{..i..j..} - T_{..j..i..}) / 2`.
    pub fn antisymmetrized(&self, i: usize, j: usize) -> Self {
        let s = self.swapped(i, j);
        self.with_comps(
            self.comps
                .iter()
                .zip(s.comps())
                .map(|(a, b)| a.sub_trunc(b).scale(&rat(1, 2)))
                .collect(),
        )
    }

    /// Symmetrises over two slots of the same kind.
    pub fn symmetrized(&self, i: usize, j: usize) -> Self {
        let s = self.swapped(i, j);
        self.with_comps(
            self.comps
                .iter()
                .zip(s.comps())
                .map(|(a, b)| a.add_trunc(b).scale(&rat(1, 2)))
                .collect(),
        )
    }

    /// Fixes slot `slot` to the value `value`, dropping that slot.
    pub fn component_slice(&self, slot: usize, value: usize) -> Self {
        let keep: Vec<usize> = (0..self.rank()).filter(|&k| k != slot).collect();
        let slots: Vec<Slot> = keep.iter().map(|&k| self.slots[k]).collect();
        let mut out = FieldJet {
            slots,
            ..self.clone_shape()
        };
        let len: usize = out.slots.iter().map(|&s| extent_of(self.n, s)).product();
        let mut src = vec![0; self.rank()];
        src[slot] = value;
        out.comps = (0..len)
            .map(|off| {
                let idx = out.multi_index(off);
                for (k, &p) in keep.iter().enumerate() {
                    src[p] = idx[k];
                }
                self.get(&src).clone()
            })
            .collect();
        out
    }

    /// Index of the first nonzero component, if any, with its jet.
    pub fn first_nonzero(&self) -> Option<(Vec<usize>, &JetScalar)> {
        self.comps
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
            .map(|(off, c)| (self.multi_index(off), c))
    }

    /// Number of nonzero components.
    pub fn nonzero_count(&self) -> usize {
        self.comps.iter().filter(|c| !c.is_zero()).count()
    }
}

/// `(a - b)` as a field; a convenience for residuals.
pub fn residual(a: &FieldJet, b: &FieldJet) -> Result<FieldJet> {
    a.try_sub(b)
}

/// The rational `n + 2w - 2` that recurs in tractor formulae, for doubled weight.
pub fn d_factor(n: usize, weight2: i32) -> Rational {
    int(n as i64 + i64::from(weight2) - 2)
}
