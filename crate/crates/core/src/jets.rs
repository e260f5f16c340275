//! Truncated multivariate Taylor expansions ("jets") with exact rational
//! coefficients.
//!
//! A [`JetScalar`] of order `K` over `n` variables stores every coefficient
//! `c_α` with `|α| ≤ K` of the expansion `Σ c_α t^α`, where `t = x − p` is the
//! displacement from the base point. Coefficients are kept in graded order
//! (all monomials of degree 0, then degree 1, ...) so the monomials of degree
//! `≤ d` always form a prefix of the coefficient vector, independently of the
//! order a jet was built at.
//!
//! Storage is dense in the numerators with a single shared denominator. The
//! hot path is [`JetScalar::try_mul`]: a degree-capped convolution driven by a
//! precomputed monomial addition table, followed by one normalisation pass.
//! Trailing zero numerators are trimmed, so constants cost one coefficient and
//! zero costs nothing; this is the hook a sparse backend would replace.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used throughout the crate.
pub type Rational = BigRational;

/// Shorthand for the rational `p/q`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for an integer-valued rational.
pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Monomial bookkeeping shared by all jets over the same variables.
///
/// Tables are built once for `max_order` and serve every order below it.
pub struct JetSpace {
    nvars: usize,
    max_order: usize,
    monomials: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    upto: Vec<usize>,
    add: Vec<Vec<u32>>,
    partial: Vec<Vec<(u32, u32, u32)>>,
    lookup: BTreeMap<Vec<u8>, u32>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("nvars", &self.nvars)
            .field("max_order", &self.max_order)
            .field("monomials", &self.monomials.len())
            .finish()
    }
}

fn monomials_of_degree(nvars: usize, degree: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, left: usize, remaining: usize, out: &mut Vec<Vec<u8>>) {
        if left == 1 {
            prefix.push(remaining as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e as u8);
            rec(prefix, left - 1, remaining - e, out);
            prefix.pop();
        }
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(&mut Vec::with_capacity(nvars), nvars, degree, out);
}

impl JetSpace {
    pub fn new(nvars: usize, max_order: usize) -> Arc<Self> {
        assert!(
            max_order < 64,
            "jet order {max_order} is unreasonably large"
        );
        let mut monomials = Vec::new();
        let mut upto = Vec::with_capacity(max_order + 1);
        for d in 0..=max_order {
            monomials_of_degree(nvars, d, &mut monomials);
            upto.push(monomials.len());
        }
        let degrees: Vec<usize> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();
        let lookup: BTreeMap<Vec<u8>, u32> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i as u32))
            .collect();

        let mut add = Vec::with_capacity(monomials.len());
        let mut sum = vec![0u8; nvars];
        for (i, mi) in monomials.iter().enumerate() {
            let room = max_order - degrees[i];
            let row: Vec<u32> = monomials[..upto[room]]
                .iter()
                .map(|mj| {
                    for v in 0..nvars {
                        sum[v] = mi[v] + mj[v];
                    }
                    lookup[&sum]
                })
                .collect();
            add.push(row);
        }

        let mut partial = vec![Vec::new(); nvars];
        for (src, m) in monomials.iter().enumerate() {
            for v in 0..nvars {
                if m[v] > 0 {
                    let mut lowered = m.clone();
                    lowered[v] -= 1;
                    partial[v].push((src as u32, lookup[&lowered], m[v] as u32));
                }
            }
        }

        Arc::new(JetSpace {
            nvars,
            max_order,
            monomials,
            degrees,
            upto,
            add,
            partial,
            lookup,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of total degree `≤ order`.
    pub fn count(&self, order: usize) -> usize {
        self.upto[order]
    }

    pub fn monomial(&self, index: usize) -> &[u8] {
        &self.monomials[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.degrees[index]
    }

    pub fn index_of(&self, exponents: &[u8]) -> Option<usize> {
        self.lookup.get(exponents).map(|&i| i as usize)
    }
}

/// A truncated Taylor expansion at a point with exact rational coefficients.
#[derive(Clone)]
pub struct JetScalar {
    space: Arc<JetSpace>,
    order: usize,
    // Invariants: len ≤ space.count(order), no trailing zeros, den > 0,
    // gcd(den, num...) = 1, and den = 1 when num is empty.
    num: Vec<BigInt>,
    den: BigInt,
}

impl PartialEq for JetScalar {
    fn eq(&self, other: &Self) -> bool {
        self.space.nvars == other.space.nvars
            && self.order == other.order
            && self.num == other.num
            && self.den == other.den
    }
}

impl Eq for JetScalar {}

fn normalize(num: &mut Vec<BigInt>, den: &mut BigInt) {
    while num.last().is_some_and(Zero::is_zero) {
        num.pop();
    }
    if num.is_empty() {
        *den = BigInt::one();
        return;
    }
    if den.is_negative() {
        *den = -core::mem::take(den);
        for c in num.iter_mut() {
            *c = -core::mem::take(c);
        }
    }
    if den.is_one() {
        return;
    }
    let mut g = den.clone();
    for c in num.iter() {
        if c.is_zero() {
            continue;
        }
        g = g.gcd(c);
        if g.is_one() {
            return;
        }
    }
    *den /= &g;
    for c in num.iter_mut() {
        if !c.is_zero() {
            *c /= &g;
        }
    }
}

impl JetScalar {
    fn from_parts(
        space: Arc<JetSpace>,
        order: usize,
        mut num: Vec<BigInt>,
        mut den: BigInt,
    ) -> Self {
        debug_assert!(order <= space.max_order);
        num.truncate(space.count(order));
        normalize(&mut num, &mut den);
        JetScalar {
            space,
            order,
            num,
            den,
        }
    }

    pub fn zero(space: &Arc<JetSpace>, order: usize) -> Self {
        assert!(order <= space.max_order, "order {order} exceeds jet space");
        JetScalar {
            space: space.clone(),
            order,
            num: Vec::new(),
            den: BigInt::one(),
        }
    }

    pub fn constant(space: &Arc<JetSpace>, order: usize, value: &Rational) -> Self {
        assert!(order <= space.max_order, "order {order} exceeds jet space");
        Self::from_parts(
            space.clone(),
            order,
            vec![value.numer().clone()],
            value.denom().clone(),
        )
    }

    pub fn one(space: &Arc<JetSpace>, order: usize) -> Self {
        Self::constant(space, order, &Rational::one())
    }

    /// The coordinate function `x_var` expanded at a point where it equals `at`.
    pub fn variable(space: &Arc<JetSpace>, order: usize, var: usize, at: &Rational) -> Self {
        assert!(var < space.nvars, "variable {var} out of range");
        let mut jet = Self::constant(space, order, at);
        if order == 0 {
            return jet;
        }
        let mut e = vec![0u8; space.nvars];
        e[var] = 1;
        let idx = space.index_of(&e).expect("degree-1 monomial");
        let mut num: Vec<BigInt> = (0..=idx)
            .map(|i| {
                if i == 0 {
                    at.numer().clone()
                } else {
                    BigInt::zero()
                }
            })
            .collect();
        num[idx] = at.denom().clone();
        jet = Self::from_parts(space.clone(), order, num, at.denom().clone());
        jet
    }

    /// Builds a jet from `(exponents, coefficient)` pairs; monomials above
    /// `order` are dropped.
    pub fn from_terms<'a, I>(space: &Arc<JetSpace>, order: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a [u8], Rational)>,
    {
        let mut coeffs = vec![Rational::zero(); space.count(order)];
        for (exps, c) in terms {
            let idx = space
                .index_of(exps)
                .unwrap_or_else(|| panic!("monomial {exps:?} not in jet space"));
            if idx < coeffs.len() {
                coeffs[idx] += c;
            }
        }
        Self::from_rationals(space, order, &coeffs)
    }

    /// Builds a jet from a graded coefficient vector (length `≤ count(order)`).
    pub fn from_rationals(space: &Arc<JetSpace>, order: usize, coeffs: &[Rational]) -> Self {
        let mut den = BigInt::one();
        for c in coeffs {
            if !c.is_zero() {
                den = den.lcm(c.denom());
            }
        }
        let num = coeffs
            .iter()
            .map(|c| {
                if c.is_zero() {
                    BigInt::zero()
                } else {
                    c.numer() * (&den / c.denom())
                }
            })
            .collect();
        Self::from_parts(space.clone(), order, num, den)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.num.len() <= 1
    }

    /// Number of stored (possibly zero) numerators; trailing zeros are trimmed.
    pub fn stored_len(&self) -> usize {
        self.num.len()
    }

    pub fn coeff(&self, index: usize) -> Rational {
        match self.num.get(index) {
            Some(c) if !c.is_zero() => Rational::new(c.clone(), self.den.clone()),
            _ => Rational::zero(),
        }
    }

    pub fn coeff_of(&self, exponents: &[u8]) -> Rational {
        self.space
            .index_of(exponents)
            .map_or_else(Rational::zero, |i| self.coeff(i))
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(0)
    }

    pub fn coeffs(&self) -> Vec<Rational> {
        (0..self.space.count(self.order))
            .map(|i| self.coeff(i))
            .collect()
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.space.nvars != other.space.nvars || self.order != other.order {
            return Err(Error::ShapeMismatch {
                lhs_vars: self.space.nvars,
                lhs_order: self.order,
                rhs_vars: other.space.nvars,
                rhs_order: other.order,
            });
        }
        Ok(())
    }

    fn wider_space(&self, other: &Self) -> Arc<JetSpace> {
        if self.space.max_order >= other.space.max_order {
            self.space.clone()
        } else {
            other.space.clone()
        }
    }

    /// Drops every coefficient above `order`.
    pub fn truncated(&self, order: usize) -> Result<Self> {
        if order > self.order {
            return Err(Error::OrderUnavailable {
                requested: order,
                available: self.order,
            });
        }
        if order == self.order {
            return Ok(self.clone());
        }
        Ok(Self::from_parts(
            self.space.clone(),
            order,
            self.num.clone(),
            self.den.clone(),
        ))
    }

    /// Re-expresses the jet at a higher order by padding with zero
    /// coefficients. Only meaningful for jets that are exact polynomials of
    /// degree `≤ self.order`, such as constants.
    pub fn padded(&self, order: usize) -> Self {
        assert!(order <= self.space.max_order);
        JetScalar {
            space: self.space.clone(),
            order,
            num: self.num.clone(),
            den: self.den.clone(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.add_unchecked(other, false))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.add_unchecked(other, true))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(other, self.order))
    }

    /// Sum formed at the lower of the two orders.
    pub fn add_trunc(&self, other: &Self) -> Self {
        self.combine_trunc(other, false)
    }

    /// Difference formed at the lower of the two orders.
    pub fn sub_trunc(&self, other: &Self) -> Self {
        self.combine_trunc(other, true)
    }

    /// Product formed at the lower of the two orders.
    pub fn mul_trunc(&self, other: &Self) -> Self {
        assert_eq!(
            self.space.nvars, other.space.nvars,
            "jets over different variables"
        );
        self.mul_unchecked(other, self.order.min(other.order))
    }

    fn combine_trunc(&self, other: &Self, negate: bool) -> Self {
        assert_eq!(
            self.space.nvars, other.space.nvars,
            "jets over different variables"
        );
        match self.order.cmp(&other.order) {
            core::cmp::Ordering::Equal => self.add_unchecked(other, negate),
            core::cmp::Ordering::Less => {
                self.add_unchecked(&other.truncated(self.order).expect("lower order"), negate)
            }
            core::cmp::Ordering::Greater => self
                .truncated(other.order)
                .expect("lower order")
                .add_unchecked(other, negate),
        }
    }

    fn add_unchecked(&self, other: &Self, negate: bool) -> Self {
        let space = self.wider_space(other);
        if other.is_zero() {
            return JetScalar {
                space,
                ..self.clone()
            };
        }
        if self.is_zero() {
            let out = JetScalar {
                space,
                ..other.clone()
            };
            return if negate { -&out } else { out };
        }
        let len = self.num.len().max(other.num.len());
        let (fa, fb, den) = if self.den == other.den {
            (BigInt::one(), BigInt::one(), self.den.clone())
        } else {
            let l = self.den.lcm(&other.den);
            (&l / &self.den, &l / &other.den, l)
        };
        let mut num = Vec::with_capacity(len);
        for i in 0..len {
            let a = self.num.get(i);
            let b = other.num.get(i);
            let ta = a
                .filter(|x| !x.is_zero())
                .map(|x| if fa.is_one() { x.clone() } else { x * &fa });
            let tb = b
                .filter(|x| !x.is_zero())
                .map(|x| if fb.is_one() { x.clone() } else { x * &fb });
            let v = match (ta, tb) {
                (Some(x), Some(y)) => {
                    if negate {
                        x - y
                    } else {
                        x + y
                    }
                }
                (Some(x), None) => x,
                (None, Some(y)) => {
                    if negate {
                        -y
                    } else {
                        y
                    }
                }
                (None, None) => BigInt::zero(),
            };
            num.push(v);
        }
        Self::from_parts(space, self.order.min(other.order), num, den)
    }

    fn mul_unchecked(&self, other: &Self, order: usize) -> Self {
        let space = self.wider_space(other);
        if self.is_zero() || other.is_zero() {
            return JetScalar::zero(&space, order);
        }
        // Constant factor: plain scaling.
        if self.is_constant() || other.is_constant() {
            let (c, rest) = if self.is_constant() {
                (self, other)
            } else {
                (other, self)
            };
            let k = &c.num[0];
            let lim = rest.num.len().min(space.count(order));
            let num = rest.num[..lim].iter().map(|x| x * k).collect();
            return Self::from_parts(space, order, num, &c.den * &rest.den);
        }
        let cap = space.count(order);
        let mut acc: Vec<BigInt> = vec![BigInt::zero(); cap];
        let alen = self.num.len().min(cap);
        for i in 0..alen {
            let ai = &self.num[i];
            if ai.is_zero() {
                continue;
            }
            let di = space.degrees[i];
            let jmax = other.num.len().min(space.upto[order - di]);
            let row = &space.add[i];
            for j in 0..jmax {
                let bj = &other.num[j];
                if bj.is_zero() {
                    continue;
                }
                acc[row[j] as usize] += ai * bj;
            }
        }
        Self::from_parts(space, order, acc, &self.den * &other.den)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() || self.is_zero() {
            return JetScalar::zero(&self.space, self.order);
        }
        let num = self.num.iter().map(|x| x * factor.numer()).collect();
        Self::from_parts(
            self.space.clone(),
            self.order,
            num,
            &self.den * factor.denom(),
        )
    }

    pub fn scale_int(&self, factor: i64) -> Self {
        self.scale(&int(factor))
    }

    /// Multiplicative inverse up to the jet order.
    pub fn reciprocal(&self) -> Result<Self> {
        if self.is_zero() || self.num[0].is_zero() {
            return Err(Error::ZeroConstantTerm);
        }
        let space = &self.space;
        let order = self.order;
        let cap = space.count(order);
        let a0 = &self.num[0];
        // Integer recurrence: c_0 = 1, c_γ = −Σ_{α≠0} A_α A0^{|α|−1} c_{γ−α};
        // then b_γ = den · c_γ / A0^{|γ|+1}.
        let mut pow_a0 = Vec::with_capacity(order + 2);
        pow_a0.push(BigInt::one());
        for e in 1..=order + 1 {
            let next = &pow_a0[e - 1] * a0;
            pow_a0.push(next);
        }
        let alen = self.num.len().min(cap);
        let scaled: Vec<BigInt> = (0..alen)
            .map(|i| {
                let d = space.degrees[i];
                if i == 0 || self.num[i].is_zero() {
                    BigInt::zero()
                } else {
                    &self.num[i] * &pow_a0[d - 1]
                }
            })
            .collect();
        let mut c: Vec<BigInt> = vec![BigInt::zero(); cap];
        c[0] = BigInt::one();
        for d in 1..=order {
            let (lo, hi) = (space.upto[d - 1], space.upto[d]);
            for i in 1..alen {
                let di = space.degrees[i];
                if di > d {
                    break;
                }
                if scaled[i].is_zero() {
                    continue;
                }
                let rem = d - di;
                let jlo = if rem == 0 { 0 } else { space.upto[rem - 1] };
                let jhi = space.upto[rem];
                let row = &space.add[i];
                for j in jlo..jhi {
                    if c[j].is_zero() {
                        continue;
                    }
                    let t = row[j] as usize;
                    debug_assert!(t >= lo && t < hi);
                    let term = &scaled[i] * &c[j];
                    c[t] -= term;
                }
            }
        }
        let num = c
            .into_iter()
            .enumerate()
            .map(|(i, ci)| {
                if ci.is_zero() {
                    ci
                } else {
                    ci * &self.den * &pow_a0[order - space.degrees[i]]
                }
            })
            .collect();
        Ok(Self::from_parts(
            space.clone(),
            order,
            num,
            pow_a0[order + 1].clone(),
        ))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.mul_unchecked(&other.reciprocal()?, self.order))
    }

    /// Integer power; negative exponents go through [`Self::reciprocal`].
    pub fn powi(&self, exponent: i32) -> Result<Self> {
        let base = if exponent < 0 {
            self.reciprocal()?
        } else {
            self.clone()
        };
        let mut e = exponent.unsigned_abs();
        let mut acc = JetScalar::one(&self.space, self.order);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&sq, self.order);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_unchecked(&sq, self.order);
            }
        }
        Ok(acc)
    }

    /// Square root, available when the constant term is the square of a
    /// positive rational.
    pub fn sqrt(&self) -> Result<Self> {
        let a0 = self.constant_term();
        let root = rational_sqrt(&a0)
            .filter(|r| r.is_positive())
            .ok_or_else(|| Error::NotASquare(a0.to_string()))?;
        // √(a0(1+u)) = √a0 Σ_j binom(1/2, j) u^j
        let u = self
            .scale(&a0.recip())
            .sub_trunc(&JetScalar::one(&self.space, self.order));
        let mut term = JetScalar::one(&self.space, self.order);
        let mut acc = JetScalar::one(&self.space, self.order);
        let mut binom = Rational::one();
        let half = rat(1, 2);
        for j in 1..=self.order {
            binom = binom * (&half - int(j as i64 - 1)) / int(j as i64);
            term = term.mul_unchecked(&u, self.order);
            acc = acc.add_unchecked(&term.scale(&binom), false);
        }
        Ok(acc.scale(&root))
    }

    /// Formal partial derivative in `var`; the result has order `K − 1`.
    pub fn partial(&self, var: usize) -> Result<Self> {
        assert!(var < self.space.nvars, "variable {var} out of range");
        if self.order == 0 {
            return Err(Error::OrderExhausted);
        }
        let order = self.order - 1;
        if self.is_constant() {
            return Ok(JetScalar::zero(&self.space, order));
        }
        let cap = self.space.count(order);
        let mut num = vec![BigInt::zero(); cap.min(self.num.len())];
        for &(src, dst, factor) in &self.space.partial[var] {
            let (src, dst) = (src as usize, dst as usize);
            if src >= self.num.len() || dst >= num.len() {
                continue;
            }
            let c = &self.num[src];
            if !c.is_zero() {
                num[dst] = c * BigInt::from(factor);
            }
        }
        Ok(Self::from_parts(
            self.space.clone(),
            order,
            num,
            self.den.clone(),
        ))
    }
}

/// Exact square root of a non-negative rational, if it exists.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

impl Neg for &JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        JetScalar {
            space: self.space.clone(),
            order: self.order,
            num: self.num.iter().map(|c| -c).collect(),
            den: self.den.clone(),
        }
    }
}

impl Neg for JetScalar {
    type Output = JetScalar;
    fn neg(self) -> JetScalar {
        -&self
    }
}

macro_rules! strict_binop {
    ($trait:ident, $method:ident, $call:ident) => {
        /// Panics when the operands differ in variables or order; use the
        /// `try_*` or `*_trunc` methods to handle that explicitly.
        impl $trait<&JetScalar> for &JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: &JetScalar) -> JetScalar {
                self.$call(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $trait<JetScalar> for JetScalar {
            type Output = JetScalar;
            fn $method(self, rhs: JetScalar) -> JetScalar {
                (&self).$call(&rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

strict_binop!(Add, add, try_add);
strict_binop!(Sub, sub, try_sub);
strict_binop!(Mul, mul, try_mul);

impl fmt::Debug for JetScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetScalar[K={}]({})", self.order, self)
    }
}

impl fmt::Display for JetScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for i in 0..self.num.len() {
            let c = self.coeff(i);
            if c.is_zero() {
                continue;
            }
            let mono = self.space.monomial(i);
            let mut m = String::new();
            for (v, &e) in mono.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !m.is_empty() {
                    m.push('*');
                }
                m.push_str(&alloc::format!("t{}", v + 1));
                if e > 1 {
                    m.push_str(&alloc::format!("^{e}"));
                }
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            if m.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                f.write_str(&m)?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}
