//! Truncated power series and Laurent series over exact rationals.
//!
//! A [`TruncatedSeries`] of order `N` stores the coefficients of
//! `z^0..=z^N`; binary operations truncate to the smaller order. The module
//! carries the two generating-function identities that tie moments to
//! cumulants:
//!
//! - the exponential formula `M(z) = exp(C(z))` for exponential generating
//!   functions ([`exp_log`]);
//! - the free functional equation `L(z) = K(zL(z))` for ordinary generating
//!   functions ([`solve_free_ogf`]).
//!
//! [`laurent_invert`] computes the compositional inverse of a Voiculescu
//! transform `V(w) = 1/w + …`, producing the Cauchy transform `G(z) = 1/z + …`
//! with `V(G(z)) = z`, and conversely.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Num, One, Zero};

use crate::{Error, Rational, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<Rational>,
}

impl TruncatedSeries {
    /// Series with the given coefficients; the order is `coeffs.len() - 1`.
    pub fn new(coeffs: Vec<Rational>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a truncated series needs at least one coefficient"));
        }
        Ok(TruncatedSeries { coeffs })
    }

    pub fn from_integers(order: usize, ints: &[i64]) -> Self {
        let mut coeffs = vec![Rational::zero(); order + 1];
        for (c, &v) in coeffs.iter_mut().zip(ints) {
            *c = Rational::from_integer(BigInt::from(v));
        }
        TruncatedSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![Rational::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = Rational::one();
        s
    }

    /// The series `z` truncated at `order`.
    pub fn variable(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = Rational::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Rational> {
        self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs: Vec<Rational> = self.coeffs.iter().take(order + 1).cloned().collect();
        coeffs.resize(order + 1, Rational::zero());
        TruncatedSeries { coeffs }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        if self.coeffs[0].is_zero() {
            return Err(Error::invalid("reciprocal needs a non-zero constant term"));
        }
        Ok(TruncatedSeries {
            coeffs: reciprocal_coeffs(&self.coeffs),
        })
    }

    /// `self(inner(z))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &TruncatedSeries) -> Result<Self> {
        if !inner.coeffs[0].is_zero() {
            return Err(Error::invalid("composition needs an inner series without constant term"));
        }
        let order = self.order().min(inner.order());
        let inner = inner.truncate(order);
        // Horner: a0 + inner (a1 + inner (a2 + …))
        let mut acc = TruncatedSeries::zero(order);
        for a in self.coeffs[..=order].iter().rev() {
            acc = &acc * &inner;
            acc.coeffs[0] += a;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return TruncatedSeries::zero(0);
        }
        TruncatedSeries {
            coeffs: (1..self.coeffs.len())
                .map(|k| &self.coeffs[k] * Rational::from_integer(BigInt::from(k)))
                .collect(),
        }
    }

    pub fn exp(&self) -> Result<Self> {
        exp_log(self, ExpLog::Exp)
    }

    pub fn log(&self) -> Result<Self> {
        exp_log(self, ExpLog::Log)
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(z^{})", self.order() + 1)
    }
}

impl<'a> Add<&'a TruncatedSeries> for &'a TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries {
            coeffs: (0..=order).map(|k| &self.coeffs[k] + &rhs.coeffs[k]).collect(),
        }
    }
}

impl<'a> Sub<&'a TruncatedSeries> for &'a TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries {
            coeffs: (0..=order).map(|k| &self.coeffs[k] - &rhs.coeffs[k]).collect(),
        }
    }
}

impl<'a> Mul<&'a TruncatedSeries> for &'a TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries {
            coeffs: mul_coeffs(&self.coeffs, &rhs.coeffs, order),
        }
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Binary ring operation selector for [`ring_ops`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Mul,
    /// `a(b(z))`
    Compose,
    /// `1/a(z)`; `b` is ignored.
    Reciprocal,
}

pub fn ring_ops(a: &TruncatedSeries, b: &TruncatedSeries, op: RingOp) -> Result<TruncatedSeries> {
    match op {
        RingOp::Add => Ok(a + b),
        RingOp::Mul => Ok(a * b),
        RingOp::Compose => a.compose(b),
        RingOp::Reciprocal => a.reciprocal(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpLog {
    Exp,
    Log,
}

/// `exp(s)` (requires `s(0) = 0`) or `log(s)` (requires `s(0) = 1`), via the
/// derivative recursion `n·e_n = Σ_k k·s_k·e_{n−k}`.
pub fn exp_log(s: &TruncatedSeries, direction: ExpLog) -> Result<TruncatedSeries> {
    let n = s.order();
    let a = &s.coeffs;
    match direction {
        ExpLog::Exp => {
            if !a[0].is_zero() {
                return Err(Error::invalid("exp needs a series without constant term"));
            }
            let mut e = vec![Rational::zero(); n + 1];
            e[0] = Rational::one();
            for m in 1..=n {
                let mut acc = Rational::zero();
                for k in 1..=m {
                    if !a[k].is_zero() {
                        acc += &a[k] * &e[m - k] * Rational::from_integer(BigInt::from(k));
                    }
                }
                e[m] = acc / Rational::from_integer(BigInt::from(m));
            }
            Ok(TruncatedSeries { coeffs: e })
        }
        ExpLog::Log => {
            if !a[0].is_one() {
                return Err(Error::invalid("log needs a series with constant term 1"));
            }
            // a = exp(c): m·a_m = Σ_{k=1}^{m} k c_k a_{m−k}
            let mut c = vec![Rational::zero(); n + 1];
            for m in 1..=n {
                let mut acc = &a[m] * Rational::from_integer(BigInt::from(m));
                for k in 1..m {
                    if !c[k].is_zero() {
                        acc -= &c[k] * &a[m - k] * Rational::from_integer(BigInt::from(k));
                    }
                }
                c[m] = acc / Rational::from_integer(BigInt::from(m));
            }
            Ok(TruncatedSeries { coeffs: c })
        }
    }
}

/// Direction of [`solve_free_ogf`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeOgf {
    /// Given `K`, find `L` with `L(z) = K(zL(z))`.
    CumulantsToMoments,
    /// Given `L`, find `K` with `L(z) = K(zL(z))`.
    MomentsToCumulants,
}

/// Solves `L(z) = K(zL(z))` coefficient by coefficient in either direction.
/// Both series have constant term 1.
pub fn solve_free_ogf(input: &TruncatedSeries, direction: FreeOgf) -> Result<TruncatedSeries> {
    if !input.coeffs[0].is_one() {
        return Err(Error::invalid("free generating functions have constant term 1"));
    }
    let coeffs = match direction {
        FreeOgf::CumulantsToMoments => free_cumulants_to_moments(&input.coeffs),
        FreeOgf::MomentsToCumulants => free_moments_to_cumulants(&input.coeffs),
    };
    Ok(TruncatedSeries { coeffs })
}

/// Coefficients `l_0..=l_N` of `L` from `k_0..=k_N` of `K` (with `k_0 = 1`),
/// generic over the coefficient field.
///
/// `[z^n] K(zL) = Σ_j k_j [z^{n−j}] L^j`, and `[z^m] L^j` only involves
/// `l_0..=l_m`, so each new coefficient is determined by earlier ones. The
/// table `pow[j][m] = [z^m] L^j` is extended column by column.
pub fn free_cumulants_to_moments<T: Clone + Num>(k: &[T]) -> Vec<T> {
    let n = k.len() - 1;
    let mut l = vec![T::zero(); n + 1];
    l[0] = T::one();
    let mut pow = PowerTable::new(n);
    for m in 0..=n {
        if m > 0 {
            let mut acc = T::zero();
            for j in 1..=m {
                if !k[j].is_zero() {
                    acc = acc + k[j].clone() * pow.get(j, m - j);
                }
            }
            l[m] = acc;
        }
        pow.extend(&l, m);
    }
    l
}

/// Inverse of [`free_cumulants_to_moments`]: the one-block term `k_n` is what
/// remains of `l_n` after subtracting the contributions of `k_1..k_{n−1}`.
pub fn free_moments_to_cumulants<T: Clone + Num>(l: &[T]) -> Vec<T> {
    let n = l.len() - 1;
    let mut k = vec![T::zero(); n + 1];
    k[0] = T::one();
    let mut pow = PowerTable::new(n);
    for m in 0..=n {
        pow.extend(l, m);
    }
    for m in 1..=n {
        let mut acc = l[m].clone();
        for j in 1..m {
            if !k[j].is_zero() {
                acc = acc - k[j].clone() * pow.get(j, m - j);
            }
        }
        k[m] = acc;
    }
    k
}

/// `pow[j][m] = [z^m] L^j` for `j + m ≤ n`.
struct PowerTable<T> {
    n: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Clone + Num> PowerTable<T> {
    fn new(n: usize) -> Self {
        // row 0 is L^0 = 1
        let mut row0 = vec![T::zero(); n + 1];
        row0[0] = T::one();
        let mut rows = vec![row0];
        for _ in 1..=n {
            rows.push(Vec::new());
        }
        PowerTable { n, rows }
    }

    fn get(&self, j: usize, m: usize) -> T {
        self.rows[j][m].clone()
    }

    /// Fill column `m` of every row `j ≥ 1` with `j + m ≤ n`; requires `l[..=m]`.
    fn extend(&mut self, l: &[T], m: usize) {
        for j in 1..=self.n.saturating_sub(m) {
            let mut acc = T::zero();
            for i in 0..=m {
                let prev = &self.rows[j - 1][m - i];
                if !l[i].is_zero() && !prev.is_zero() {
                    acc = acc + l[i].clone() * prev.clone();
                }
            }
            debug_assert_eq!(self.rows[j].len(), m);
            self.rows[j].push(acc);
        }
    }
}

/// Where a [`LaurentSeries`] is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// `Σ_i c_i w^{lead + i}` near `w = 0`.
    AtZero,
    /// `Σ_i c_i z^{lead − i}` near `z = ∞`.
    AtInfinity,
}

/// Laurent series with finitely many terms. The coefficient at
/// `leading_index` is non-zero unless the series is identically zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentSeries {
    leading_index: i64,
    coeffs: Vec<Rational>,
    expansion: Expansion,
}

impl LaurentSeries {
    pub fn new(leading_index: i64, coeffs: Vec<Rational>, expansion: Expansion) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("a Laurent series needs at least one coefficient"));
        }
        let shift = coeffs.iter().position(|c| !c.is_zero());
        let (leading_index, coeffs) = match shift {
            None => (leading_index, coeffs),
            Some(s) => {
                let step = s as i64;
                let lead = match expansion {
                    Expansion::AtZero => leading_index + step,
                    Expansion::AtInfinity => leading_index - step,
                };
                (lead, coeffs[s..].to_vec())
            }
        };
        Ok(LaurentSeries {
            leading_index,
            coeffs,
            expansion,
        })
    }

    /// `V(w) = 1/w + Σ_{n≥0} r_n w^n` from R-transform coefficients `r_n`.
    pub fn voiculescu(r: &[Rational]) -> Self {
        let mut coeffs = vec![Rational::one()];
        coeffs.extend(r.iter().cloned());
        LaurentSeries {
            leading_index: -1,
            coeffs,
            expansion: Expansion::AtZero,
        }
    }

    /// `G(z) = Σ_{n≥0} m_n z^{−n−1}` from moments `m_0 = 1, m_1, …`.
    pub fn cauchy(moments: &[Rational]) -> Result<Self> {
        LaurentSeries::new(-1, moments.to_vec(), Expansion::AtInfinity)
    }

    pub fn leading_index(&self) -> i64 {
        self.leading_index
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn expansion(&self) -> Expansion {
        self.expansion
    }

    /// Coefficient of the power `k` of the expansion variable.
    pub fn coeff(&self, k: i64) -> Rational {
        let offset = match self.expansion {
            Expansion::AtZero => k - self.leading_index,
            Expansion::AtInfinity => self.leading_index - k,
        };
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.coeffs.get(i).cloned())
            .unwrap_or_else(Rational::zero)
    }
}

/// Compositional inverse between a Voiculescu transform `V(w) = 1/w + …`
/// (expanded at zero) and a Cauchy transform `G(z) = 1/z + …` (expanded at
/// infinity), so that `V(G(z)) = z`. Applying it to `G` returns `V`.
///
/// Both are reduced to power series tangent to the identity,
/// `1/V(w) = w + …` and `G(1/x) = x + …`, which are mutual compositional
/// inverses; the inverse is found by Newton iteration on formal series.
pub fn laurent_invert(series: &LaurentSeries) -> Result<LaurentSeries> {
    if series.leading_index != -1 || !series.coeffs[0].is_one() {
        return Err(Error::invalid(
            "inversion needs a simple pole (at zero) or simple zero (at infinity) with coefficient 1",
        ));
    }
    let len = series.coeffs.len();
    // tangent-to-identity power series of order `len`
    let mut tangent = vec![Rational::zero(); len + 1];
    match series.expansion {
        Expansion::AtZero => {
            // V(w) = w^{-1} (c0 + c1 w + …); 1/V = w / (c0 + c1 w + …)
            let recip = reciprocal_coeffs(&series.coeffs);
            tangent[1..].clone_from_slice(&recip);
        }
        Expansion::AtInfinity => {
            // G(z) = c0 z^{-1} + c1 z^{-2} + …; G(1/x) = c0 x + c1 x^2 + …
            tangent[1..].clone_from_slice(&series.coeffs);
        }
    }
    let f = TruncatedSeries { coeffs: tangent };
    let g = compositional_inverse(&f)?;
    match series.expansion {
        Expansion::AtZero => LaurentSeries::new(-1, g.coeffs[1..].to_vec(), Expansion::AtInfinity),
        Expansion::AtInfinity => {
            // V = 1/g(w) = w^{-1} / (g1 + g2 w + …)
            let recip = reciprocal_coeffs(&g.coeffs[1..]);
            LaurentSeries::new(-1, recip, Expansion::AtZero)
        }
    }
}

/// Compositional inverse of `f = x + O(x^2)` by Newton iteration:
/// `g ← g − (f(g) − x) / f'(g)`, doubling the number of correct terms.
pub fn compositional_inverse(f: &TruncatedSeries) -> Result<TruncatedSeries> {
    let order = f.order();
    if order < 1 || !f.coeffs[0].is_zero() || !f.coeffs[1].is_one() {
        return Err(Error::invalid("compositional inverse needs f = x + O(x^2)"));
    }
    let x = TruncatedSeries::variable(order);
    // The residual has valuation ≥ 2, so the unknown top coefficient of f'
    // never reaches the Newton step at this order.
    let df = f.derivative().truncate(order);
    let mut g = x.clone();
    let mut correct = 1;
    while correct < order {
        let residual = &f.compose(&g)? - &x;
        let slope = df.compose(&g)?;
        let step = &residual * &slope.reciprocal()?;
        g = &g - &step;
        correct *= 2;
    }
    Ok(g)
}

fn mul_coeffs(a: &[Rational], b: &[Rational], order: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

fn reciprocal_coeffs(a: &[Rational]) -> Vec<Rational> {
    let n = a.len();
    let inv0 = a[0].recip();
    let mut r = vec![Rational::zero(); n];
    r[0] = inv0.clone();
    for m in 1..n {
        let mut acc = Rational::zero();
        for k in 1..=m {
            if !a[k].is_zero() {
                acc += &a[k] * &r[m - k];
            }
        }
        r[m] = -acc * &inv0;
    }
    r
}
