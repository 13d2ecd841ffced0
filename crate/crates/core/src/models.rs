//! Exact operator models for free random variables.
//!
//! * [`GroupAlgebraElement`]: finitely supported elements of the group
//!   algebra of `F_d` with the trace `τ(x) =` coefficient of the identity.
//! * [`FockOperator`]: raising and lowering operators on the full Fock space
//!   over `R^{dim_v}` truncated at tensor degree `D`.
//! * [`freeness_certificate`]: checks the alternating-centred-product
//!   definition of freeness for two variables of a [`MomentFunctional`].

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::cumulants::{words_up_to, MomentFunctional};
use crate::{Error, Rational, Result};

/// A reduced word in `F_d`: letter `k > 0` is `A_k`, `−k` is `A_k⁻¹`.
pub type GroupWord = Vec<i32>;

fn is_reduced(w: &[i32]) -> bool {
    w.windows(2).all(|p| p[0] != -p[1])
}

fn reduce_product(u: &[i32], v: &[i32]) -> GroupWord {
    let mut i = u.len();
    let mut j = 0;
    while i > 0 && j < v.len() && u[i - 1] == -v[j] {
        i -= 1;
        j += 1;
    }
    let mut w = Vec::with_capacity(i + v.len() - j);
    w.extend_from_slice(&u[..i]);
    w.extend_from_slice(&v[j..]);
    w
}

/// Length bound marking "no truncation has happened".
const EXACT: i64 = i64::MAX / 4;

/// An element `Σ c_w w` of the group algebra of `F_d`.
///
/// Words longer than `length_cap` are dropped after each product. The
/// element remembers up to which reduced length its coefficients are still
/// exact, and [`expectation`](Self::expectation) refuses to answer once that
/// bound falls below zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAlgebraElement {
    d: usize,
    terms: BTreeMap<GroupWord, Rational>,
    length_cap: Option<usize>,
    exact_len: i64,
}

impl GroupAlgebraElement {
    pub fn zero(d: usize) -> Self {
        GroupAlgebraElement {
            d,
            terms: BTreeMap::new(),
            length_cap: None,
            exact_len: EXACT,
        }
    }

    pub fn one(d: usize) -> Self {
        Self::word(d, &[], Rational::one()).expect("the empty word is valid")
    }

    pub fn word(d: usize, w: &[i32], coeff: Rational) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("the free group needs at least one generator"));
        }
        if w.iter().any(|&l| l == 0 || l.unsigned_abs() as usize > d) {
            return Err(Error::invalid(format!("word {w:?} uses letters outside F_{d}")));
        }
        if !is_reduced(w) {
            return Err(Error::invalid(format!("word {w:?} is not reduced")));
        }
        let mut e = Self::zero(d);
        if !coeff.is_zero() {
            e.terms.insert(w.to_vec(), coeff);
        }
        Ok(e)
    }

    /// `A_k`, with `k` counted from 1.
    pub fn generator(d: usize, k: usize) -> Result<Self> {
        Self::word(d, &[k as i32], Rational::one())
    }

    /// `A_k + A_k⁻¹`.
    pub fn symmetric_generator(d: usize, k: usize) -> Result<Self> {
        let a = Self::generator(d, k)?;
        let b = Self::word(d, &[-(k as i32)], Rational::one())?;
        Ok(a.add(&b))
    }

    /// `Σ_k (A_k + A_k⁻¹)`, the adjacency operator of the Cayley graph.
    pub fn generator_sum(d: usize) -> Self {
        (1..=d).fold(Self::zero(d), |acc, k| {
            acc.add(&Self::symmetric_generator(d, k).expect("k ≤ d"))
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<GroupWord, Rational> {
        &self.terms
    }

    pub fn length_cap(&self) -> Option<usize> {
        self.length_cap
    }

    /// Longest reduced word in the support.
    pub fn support_len(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Reduced length up to which every coefficient is exact; `None` when the
    /// element has never been truncated.
    pub fn exact_len(&self) -> Option<i64> {
        (self.exact_len < EXACT / 2).then_some(self.exact_len)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.length_cap = Some(cap);
        self.truncate();
        self
    }

    fn truncate(&mut self) {
        if let Some(cap) = self.length_cap {
            let before = self.terms.len();
            self.terms.retain(|w, _| w.len() <= cap);
            if self.terms.len() < before || self.exact_len > cap as i64 {
                self.exact_len = self.exact_len.min(cap as i64);
            }
        }
    }

    fn combined_cap(&self, other: &Self) -> Option<usize> {
        match (self.length_cap, other.length_cap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            let e = terms.entry(w.clone()).or_insert_with(Rational::zero);
            *e += c;
            if e.is_zero() {
                terms.remove(w);
            }
        }
        let mut out = GroupAlgebraElement {
            d: self.d.max(other.d),
            terms,
            length_cap: self.combined_cap(other),
            exact_len: self.exact_len.min(other.exact_len),
        };
        out.truncate();
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = self.clone();
        if c.is_zero() {
            out.terms.clear();
        } else {
            out.terms.values_mut().for_each(|v| *v *= c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<GroupWord, Rational> = BTreeMap::new();
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let w = reduce_product(u, v);
                let e = terms.entry(w).or_insert_with(Rational::zero);
                *e += a * b;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        // a word w of ab gathers u·v with |u| ≤ |w| + |v|, so missing long
        // words of one factor only spoil lengths shortened by the other's reach
        let exact_len = (self.exact_len - other.support_len() as i64)
            .min(other.exact_len - self.support_len() as i64)
            .min(EXACT);
        let mut out = GroupAlgebraElement {
            d: self.d.max(other.d),
            terms,
            length_cap: self.combined_cap(other),
            exact_len,
        };
        out.truncate();
        out
    }

    /// `τ(x)`: the coefficient of the identity.
    pub fn expectation(&self) -> Result<Rational> {
        if self.exact_len < 0 {
            return Err(Error::CapInsufficient {
                requested: 0,
                certified: self.exact_len,
            });
        }
        Ok(self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rational::zero))
    }

    /// `τ(xⁿ)`, truncating each partial power to the length the remaining
    /// factors could still cancel.
    pub fn power_expectation(&self, n: usize) -> Result<Rational> {
        let reach = self.support_len();
        let mut acc = Self::one(self.d);
        for k in 1..=n {
            acc = acc.mul(self).with_cap((n - k) * reach);
        }
        acc.expectation()
    }
}

/// `τ[(Σ_k A_k + A_k⁻¹)ⁿ]` in the group algebra of `F_d`.
pub fn generator_sum_power_expectation(d: usize, n: usize) -> Result<Rational> {
    if d == 0 {
        return Err(Error::invalid("the free group needs at least one generator"));
    }
    GroupAlgebraElement::generator_sum(d).power_expectation(n)
}

pub fn group_algebra_expectation(d: usize, element: &GroupAlgebraElement) -> Result<Rational> {
    if element.d > d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: element.d,
        });
    }
    element.expectation()
}

/// The joint moments of named group-algebra elements as a moment functional.
pub fn group_algebra_functional(vars: &[(&str, GroupAlgebraElement)], degree_cap: usize) -> Result<MomentFunctional> {
    let d = vars.iter().map(|v| v.1.d).max().unwrap_or(1);
    let mut table: HashMap<Vec<usize>, Rational> = HashMap::new();
    // prefix products, shortest words first
    let mut prefix: HashMap<Vec<usize>, GroupAlgebraElement> = HashMap::new();
    for word in words_up_to(vars.len(), degree_cap) {
        let p = match word.split_last() {
            None => GroupAlgebraElement::one(d),
            Some((&last, head)) => prefix[head].mul(&vars[last].1),
        };
        table.insert(word.clone(), p.expectation()?);
        prefix.insert(word, p);
    }
    let names: Vec<&str> = vars.iter().map(|v| v.0).collect();
    MomentFunctional::from_fn(&names, degree_cap, |w| table[w].clone())
}

/// `R_v` raises (prepends `v`), `L_v` lowers (contracts the first factor
/// with `v`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FockAction {
    Raise,
    Lower,
}

/// Orthonormal basis of `⊕_{n ≤ D} V^{⊗n}` indexed degree by degree, words
/// in lexicographic order inside each degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockBasis {
    dim_v: usize,
    degree: usize,
    offsets: Vec<usize>,
}

impl FockBasis {
    pub fn new(dim_v: usize, degree: usize) -> Result<Self> {
        if dim_v == 0 {
            return Err(Error::invalid("dim_v must be positive"));
        }
        const CAP: usize = 1 << 22;
        let mut offsets = vec![0usize];
        let mut layer = 1usize;
        for _ in 0..=degree {
            let total = offsets.last().unwrap().saturating_add(layer);
            if total > CAP {
                return Err(Error::ResourceLimit {
                    what: "Fock space dimension",
                    requested: total,
                    cap: CAP,
                });
            }
            offsets.push(total);
            layer = layer.saturating_mul(dim_v);
        }
        Ok(FockBasis { dim_v, degree, offsets })
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Degree of basis vector `i`.
    pub fn degree_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    pub fn index(&self, word: &[usize]) -> Option<usize> {
        if word.len() > self.degree || word.iter().any(|&c| c >= self.dim_v) {
            return None;
        }
        let pos = word.iter().fold(0usize, |acc, &c| acc * self.dim_v + c);
        Some(self.offsets[word.len()] + pos)
    }

    pub fn word(&self, i: usize) -> Vec<usize> {
        let n = self.degree_of(i);
        let mut pos = i - self.offsets[n];
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = pos % self.dim_v;
            pos /= self.dim_v;
        }
        w
    }

    pub fn vacuum(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        v[0] = 1.0;
        v
    }
}

/// A sparse operator on the truncated Fock space, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    basis: FockBasis,
    columns: Vec<Vec<(usize, f64)>>,
}

impl FockOperator {
    /// `R_v` or `L_v` for `v ∈ R^{dim_v}` in the orthonormal basis.
    pub fn new(basis: &FockBasis, action: FockAction, v: &[f64]) -> Result<Self> {
        if v.len() != basis.dim_v {
            return Err(Error::DimensionMismatch {
                expected: basis.dim_v,
                found: v.len(),
            });
        }
        let mut columns = Vec::with_capacity(basis.len());
        for i in 0..basis.len() {
            let w = basis.word(i);
            let mut col = Vec::new();
            match action {
                FockAction::Raise if w.len() < basis.degree => {
                    for (c, &vc) in v.iter().enumerate() {
                        if vc != 0.0 {
                            let mut up = Vec::with_capacity(w.len() + 1);
                            up.push(c);
                            up.extend_from_slice(&w);
                            col.push((basis.index(&up).expect("degree checked"), vc));
                        }
                    }
                }
                FockAction::Lower if !w.is_empty() && v[w[0]] != 0.0 => {
                    col.push((basis.index(&w[1..]).expect("shorter word"), v[w[0]]));
                }
                _ => {}
            }
            columns.push(col);
        }
        Ok(FockOperator {
            basis: basis.clone(),
            columns,
        })
    }

    pub fn basis_vector(basis: &FockBasis, action: FockAction, c: usize) -> Result<Self> {
        if c >= basis.dim_v {
            return Err(Error::invalid(format!("basis index {c} ≥ dim_v = {}", basis.dim_v)));
        }
        let mut v = vec![0.0; basis.dim_v];
        v[c] = 1.0;
        Self::new(basis, action, &v)
    }

    /// `X_v = L_v + R_v` for the basis vector `e_c`.
    pub fn field(basis: &FockBasis, c: usize) -> Result<Self> {
        Self::basis_vector(basis, FockAction::Lower, c)?.add(&Self::basis_vector(basis, FockAction::Raise, c)?)
    }

    pub fn identity(basis: &FockBasis) -> Self {
        FockOperator {
            basis: basis.clone(),
            columns: (0..basis.len()).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::invalid("operators act on different Fock spaces"));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| {
                let mut m: BTreeMap<usize, f64> = BTreeMap::new();
                for &(r, v) in a.iter().chain(b) {
                    *m.entry(r).or_insert(0.0) += v;
                }
                m.into_iter().filter(|e| e.1 != 0.0).collect()
            })
            .collect();
        Ok(FockOperator {
            basis: self.basis.clone(),
            columns,
        })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::invalid("operators act on different Fock spaces"));
        }
        let columns = other
            .columns
            .iter()
            .map(|col| {
                let mut m: BTreeMap<usize, f64> = BTreeMap::new();
                for &(k, v) in col {
                    for &(r, u) in &self.columns[k] {
                        *m.entry(r).or_insert(0.0) += u * v;
                    }
                }
                m.into_iter().filter(|e| e.1 != 0.0).collect()
            })
            .collect();
        Ok(FockOperator {
            basis: self.basis.clone(),
            columns,
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.basis.len()];
        for (j, col) in self.columns.iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, v) in col {
                    y[i] += v * x[j];
                }
            }
        }
        y
    }

    /// Matrix entry `⟨e_row, T e_col⟩`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.columns[col].iter().filter(|e| e.0 == row).map(|e| e.1).sum()
    }
}

pub fn inner(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `⟨W v_∅, v_∅⟩` where `W` is the product of the listed operators (the
/// rightmost acts first) on basis vectors of `R^{dim_v}`.
pub fn fock_vacuum_expectation(word: &[(FockAction, usize)], dim_v: usize, degree: usize) -> Result<f64> {
    if degree < word.len() {
        return Err(Error::invalid(format!(
            "truncation degree {degree} is below the word length {}",
            word.len()
        )));
    }
    let basis = FockBasis::new(dim_v, degree)?;
    let mut state = basis.vacuum();
    for &(action, c) in word.iter().rev() {
        state = FockOperator::basis_vector(&basis, action, c)?.apply(&state);
    }
    Ok(state[0])
}

/// `⟨X_{c₁} ⋯ X_{c_n} v_∅, v_∅⟩` for the fields `X_c = L_{e_c} + R_{e_c}`.
pub fn fock_field_moment(colours: &[usize], dim_v: usize) -> Result<f64> {
    let basis = FockBasis::new(dim_v, colours.len())?;
    let fields = (0..dim_v).map(|c| FockOperator::field(&basis, c)).collect::<Result<Vec<_>>>()?;
    let mut state = basis.vacuum();
    for &c in colours.iter().rev() {
        let x = fields
            .get(c)
            .ok_or_else(|| Error::invalid(format!("colour {c} ≥ dim_v = {dim_v}")))?;
        state = x.apply(&state);
    }
    Ok(state[0])
}

/// One non-vanishing alternating product found by [`freeness_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessViolation {
    /// `(variable, exponent)` factors, left to right.
    pub pattern: Vec<(usize, usize)>,
    pub value: Rational,
}

/// Evaluates `τ[(a₁^{i₁} − τ a₁^{i₁}) ⋯ (a_k^{i_k} − τ a_k^{i_k})]` for every
/// alternating pattern of the two variables with at least two factors and
/// total degree `≤ max_degree`; returns the non-zero ones.
pub fn freeness_certificate(
    f: &MomentFunctional,
    vars: (usize, usize),
    max_degree: usize,
) -> Result<Vec<FreenessViolation>> {
    if max_degree > f.degree_cap() {
        return Err(Error::ResourceLimit {
            what: "freeness certificate degree",
            requested: max_degree,
            cap: f.degree_cap(),
        });
    }
    let n = f.alphabet().len();
    if vars.0 >= n || vars.1 >= n || vars.0 == vars.1 {
        return Err(Error::invalid("freeness needs two distinct variables of the functional"));
    }
    let mut out = Vec::new();
    let mut stack: Vec<Vec<(usize, usize)>> = [vars.0, vars.1]
        .iter()
        .flat_map(|&v| (1..=max_degree).map(move |e| vec![(v, e)]))
        .collect();
    while let Some(pattern) = stack.pop() {
        let used: usize = pattern.iter().map(|p| p.1).sum();
        let last = pattern.last().unwrap().0;
        let other = if last == vars.0 { vars.1 } else { vars.0 };
        for e in 1..=max_degree - used {
            let mut next = pattern.clone();
            next.push((other, e));
            stack.push(next);
        }
        if pattern.len() < 2 {
            continue;
        }
        let value = centred_product(f, &pattern)?;
        if !value.is_zero() {
            out.push(FreenessViolation { pattern, value });
        }
    }
    out.sort_by(|a, b| (a.pattern.len(), &a.pattern).cmp(&(b.pattern.len(), &b.pattern)));
    Ok(out)
}

fn centred_product(f: &MomentFunctional, pattern: &[(usize, usize)]) -> Result<Rational> {
    let means = pattern
        .iter()
        .map(|&(v, e)| f.moment(&vec![v; e]))
        .collect::<Result<Vec<_>>>()?;
    let mut total = Rational::zero();
    for mask in 0u32..1 << pattern.len() {
        // bit set: keep the monomial; bit clear: take −τ of it
        let mut coeff = Rational::one();
        let mut word = Vec::new();
        for (i, &(v, e)) in pattern.iter().enumerate() {
            if mask >> i & 1 == 1 {
                word.extend(std::iter::repeat_n(v, e));
            } else {
                coeff *= -&means[i];
            }
        }
        if !coeff.is_zero() {
            total += coeff * f.moment(&word)?;
        }
    }
    Ok(total)
}

/// Number of non-crossing pairings of `1..n` pairing only equal colours.
pub fn coloured_nc_pairings(colours: &[usize]) -> Result<usize> {
    use crate::partitions::{enumerate, PartitionFamily};
    if colours.is_empty() {
        return Ok(1);
    }
    if colours.len() % 2 == 1 {
        return Ok(0);
    }
    Ok(enumerate(colours.len(), PartitionFamily::NcPairings)?
        .iter()
        .filter(|p| p.blocks().iter().all(|b| colours[b[0] - 1] == colours[b[1] - 1]))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn catalan(k: usize) -> f64 {
        (0..k).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
    }

    #[test]
    fn group_algebra_examples() {
        assert_eq!(generator_sum_power_expectation(2, 4).unwrap(), r(28));
        let x = GroupAlgebraElement::symmetric_generator(1, 1).unwrap();
        assert_eq!(group_algebra_expectation(1, &x.mul(&x)).unwrap(), r(2));
        assert_eq!(group_algebra_expectation(3, &GroupAlgebraElement::one(3)).unwrap(), r(1));
        assert!(group_algebra_expectation(1, &GroupAlgebraElement::generator_sum(2)).is_err());
        assert!(GroupAlgebraElement::word(2, &[1, -1], r(1)).is_err());
        assert!(GroupAlgebraElement::word(2, &[3], r(1)).is_err());
    }

    #[test]
    fn cap_bookkeeping() {
        let x = GroupAlgebraElement::generator_sum(2);
        // (x²)² with x² capped at length 2 keeps every word that can cancel
        let x2 = x.mul(&x).with_cap(2);
        assert_eq!(x2.mul(&x2).expectation().unwrap(), r(28));
        // capping x² at length 1 loses A², which x² could still cancel
        let short = x.mul(&x).with_cap(1);
        assert_eq!(short.exact_len(), Some(1));
        match short.mul(&x.mul(&x)).expectation() {
            Err(Error::CapInsufficient { certified, .. }) => assert_eq!(certified, -1),
            other => panic!("expected a cap error, got {other:?}"),
        }
        assert_eq!(x.mul(&x).exact_len(), None);
    }

    #[test]
    fn group_algebra_is_free() {
        let x = GroupAlgebraElement::symmetric_generator(2, 1).unwrap();
        let y = GroupAlgebraElement::symmetric_generator(2, 2).unwrap();
        let f = group_algebra_functional(&[("X", x.clone()), ("Y", y)], 6).unwrap();
        assert!(freeness_certificate(&f, (0, 1), 6).unwrap().is_empty());
        assert!(freeness_certificate(&f, (0, 1), 7).is_err());

        // X and X² are not free
        let g = group_algebra_functional(&[("X", x.clone()), ("Z", x.mul(&x))], 4).unwrap();
        assert!(!freeness_certificate(&g, (0, 1), 4).unwrap().is_empty());
    }

    #[test]
    fn classical_independence_is_not_freeness() {
        let bern = |w: &[usize]| {
            let xs = w.iter().filter(|&&c| c == 0).count();
            let ys = w.len() - xs;
            r((xs % 2 == 0 && ys.is_multiple_of(2)) as i64)
        };
        let f = MomentFunctional::from_fn(&["X", "Y"], 4, bern).unwrap();
        let report = freeness_certificate(&f, (0, 1), 4).unwrap();
        // τ[XYXY] = E[X²]E[Y²] = 1
        assert_eq!(report.len(), 2);
        assert!(report.iter().all(|v| v.value == r(1) && v.pattern.len() == 4));

        let constant = |w: &[usize]| {
            let xs = w.iter().filter(|&&c| c == 0).count();
            r((xs % 2 == 0) as i64 * 3i64.pow((w.len() - xs) as u32))
        };
        let g = MomentFunctional::from_fn(&["X", "Y"], 5, constant).unwrap();
        assert!(freeness_certificate(&g, (0, 1), 5).unwrap().is_empty());
    }

    #[test]
    fn fock_examples() {
        use FockAction::{Lower, Raise};
        // (L + R)ⁿ expanded over every word of actions
        let expand = |n: usize| -> f64 {
            (0..1u32 << n)
                .map(|m| {
                    let w: Vec<_> = (0..n).map(|i| (if m >> i & 1 == 1 { Raise } else { Lower }, 0)).collect();
                    fock_vacuum_expectation(&w, 1, n).unwrap()
                })
                .sum()
        };
        assert_eq!(expand(4), 2.0);
        assert_eq!(expand(3), 0.0);
        assert_eq!(fock_field_moment(&[0, 1, 0, 1], 2).unwrap(), 0.0);
        assert_eq!(fock_field_moment(&[0, 1, 1, 0], 2).unwrap(), 1.0);
        for k in 0..=6 {
            assert!((fock_field_moment(&vec![0; 2 * k], 1).unwrap() - catalan(k)).abs() < 1e-12);
        }
        assert!(fock_vacuum_expectation(&[(Lower, 0), (Raise, 0)], 1, 1).is_err());
        assert_eq!(fock_vacuum_expectation(&[(Lower, 0), (Raise, 0)], 1, 2).unwrap(), 1.0);
    }

    #[test]
    fn basis_round_trip() {
        let b = FockBasis::new(3, 4).unwrap();
        assert_eq!(b.len(), 1 + 3 + 9 + 27 + 81);
        for i in 0..b.len() {
            assert_eq!(b.index(&b.word(i)), Some(i));
        }
    }

    #[test]
    fn normal_ordering() {
        let basis = FockBasis::new(2, 4).unwrap();
        let v = [0.6, -0.8];
        let w = [2.0, 0.5];
        let l = FockOperator::new(&basis, FockAction::Lower, &v).unwrap();
        let rw = FockOperator::new(&basis, FockAction::Raise, &w).unwrap();
        let lr = l.compose(&rw).unwrap();
        let b_wv = inner(&v, &w);
        for col in 0..basis.len() {
            if basis.degree_of(col) < basis.degree() {
                for row in 0..basis.len() {
                    let expected = if row == col { b_wv } else { 0.0 };
                    assert!((lr.entry(row, col) - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn coloured_pairings_match_fock() {
        for n in 0..=8 {
            for word in words_up_to(2, n).into_iter().filter(|w| w.len() == n) {
                let count = coloured_nc_pairings(&word).unwrap() as f64;
                assert_eq!(fock_field_moment(&word, 2).unwrap(), count, "{word:?}");
            }
        }
    }

    #[test]
    fn group_algebra_against_fock_is_distinct() {
        // X = A + A⁻¹ is arcsine, the Fock field is semicircular
        let x = GroupAlgebraElement::symmetric_generator(1, 1).unwrap();
        assert_eq!(x.power_expectation(4).unwrap(), r(6));
        assert_eq!(fock_field_moment(&[0; 4], 1).unwrap(), 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn adjointness(
            v in prop::collection::vec(-2.0f64..2.0, 2),
            s in prop::collection::vec((0usize..40, -1.0f64..1.0), 1..6),
            t in prop::collection::vec((0usize..40, -1.0f64..1.0), 1..6),
        ) {
            let basis = FockBasis::new(2, 4).unwrap();
            let dense = |entries: &[(usize, f64)]| {
                let mut x = vec![0.0; basis.len()];
                for &(i, c) in entries {
                    x[i % basis.len()] += c;
                }
                x
            };
            let (s, t) = (dense(&s), dense(&t));
            let raise = FockOperator::new(&basis, FockAction::Raise, &v).unwrap();
            let lower = FockOperator::new(&basis, FockAction::Lower, &v).unwrap();
            let lhs = inner(&raise.apply(&s), &t);
            let rhs = inner(&s, &lower.apply(&t));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn reduction_is_associative(
            a in prop::collection::vec(prop::sample::select(vec![1i32, -1, 2, -2]), 0..6),
            b in prop::collection::vec(prop::sample::select(vec![1i32, -1, 2, -2]), 0..6),
            c in prop::collection::vec(prop::sample::select(vec![1i32, -1, 2, -2]), 0..6),
        ) {
            let red = |w: &[i32]| w.iter().fold(Vec::new(), |acc, &l| reduce_product(&acc, &[l]));
            let (a, b, c) = (red(&a), red(&b), red(&c));
            let left = reduce_product(&reduce_product(&a, &b), &c);
            let right = reduce_product(&a, &reduce_product(&b, &c));
            prop_assert!(is_reduced(&left));
            prop_assert_eq!(left, right);
        }
    }
}
