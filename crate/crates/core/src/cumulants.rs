//! Classical and free moment/cumulant transforms.
//!
//! Moments and cumulants are related by `m_n = Σ_{π} Π_{B∈π} κ_{|B|}`, the
//! sum running over all partitions of `{1..n}` (classical) or over the
//! non-crossing ones (free). The fast transforms here solve that relation
//! recursively, splitting off the single-block term `κ_n`:
//!
//! - classical: `m_n = Σ_k C(n−1, k−1) c_k m_{n−k}` (block containing 1);
//! - free: coefficient extraction from `L(z) = K(zL(z))`.
//!
//! [`lattice_moments`] and [`lattice_cumulants`] evaluate the lattice sums
//! directly by enumerating partitions and serve as an independent oracle up
//! to the enumeration cap.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, Num, One, Zero};

use crate::partitions::{enumerate, PartitionFamily};
use crate::series::{free_cumulants_to_moments, free_moments_to_cumulants};
use crate::{Error, Rational, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lattice {
    Classical,
    Free,
}

impl Lattice {
    pub fn family(self) -> PartitionFamily {
        match self {
            Lattice::Classical => PartitionFamily::All,
            Lattice::Free => PartitionFamily::NonCrossing,
        }
    }
}

/// Moments `m_1..m_N`; `m_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSequence {
    values: Vec<Rational>,
}

impl MomentSequence {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a moment sequence needs at least m_1"));
        }
        Ok(MomentSequence { values })
    }

    pub fn from_integers(values: &[i64]) -> Result<Self> {
        MomentSequence::new(values.iter().map(|&v| int(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `m_n` with `m_0 = 1`.
    pub fn get(&self, n: usize) -> Rational {
        if n == 0 {
            Rational::one()
        } else {
            self.values[n - 1].clone()
        }
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `[1, m_1, …, m_N]`
    pub fn with_unit(&self) -> Vec<Rational> {
        let mut v = Vec::with_capacity(self.values.len() + 1);
        v.push(Rational::one());
        v.extend(self.values.iter().cloned());
        v
    }

    pub fn truncate(&self, len: usize) -> Self {
        MomentSequence {
            values: self.values[..len.min(self.values.len())].to_vec(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(rational_to_f64).collect()
    }
}

/// Cumulants `κ_1..κ_N` on a given lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulantSequence {
    values: Vec<Rational>,
    lattice: Lattice,
}

impl CumulantSequence {
    pub fn new(values: Vec<Rational>, lattice: Lattice) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a cumulant sequence needs at least κ_1"));
        }
        Ok(CumulantSequence { values, lattice })
    }

    pub fn from_integers(values: &[i64], lattice: Lattice) -> Result<Self> {
        CumulantSequence::new(values.iter().map(|&v| int(v)).collect(), lattice)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `κ_n`, 1-based.
    pub fn get(&self, n: usize) -> Rational {
        self.values[n - 1].clone()
    }

    /// Termwise sum of two cumulant sequences on the same lattice.
    pub fn add(&self, other: &CumulantSequence) -> Result<CumulantSequence> {
        if self.lattice != other.lattice {
            return Err(Error::invalid("cannot add cumulants from different lattices"));
        }
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(CumulantSequence {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            lattice: self.lattice,
        })
    }

    pub fn scale(&self, c: &Rational) -> CumulantSequence {
        CumulantSequence {
            values: self.values.iter().map(|v| v * c).collect(),
            lattice: self.lattice,
        }
    }
}

pub fn moments_to_cumulants(m: &MomentSequence, lattice: Lattice) -> CumulantSequence {
    let full = m.with_unit();
    let k = moments_to_cumulants_generic(&full, lattice);
    CumulantSequence {
        values: k[1..].to_vec(),
        lattice,
    }
}

pub fn cumulants_to_moments(k: &CumulantSequence) -> MomentSequence {
    let mut full = vec![Rational::one()];
    full.extend(k.values.iter().cloned());
    let m = cumulants_to_moments_generic(&full, k.lattice);
    MomentSequence {
        values: m[1..].to_vec(),
    }
}

/// Generic form on `[1, m_1, …, m_N]`, returning `[1, κ_1, …, κ_N]`.
pub fn moments_to_cumulants_generic<T: Clone + Num + FromPrimitive>(m: &[T], lattice: Lattice) -> Vec<T> {
    match lattice {
        Lattice::Free => free_moments_to_cumulants(m),
        Lattice::Classical => {
            let n = m.len() - 1;
            let binom = binomial_rows::<T>(n);
            let mut c = vec![T::zero(); n + 1];
            c[0] = T::one();
            for k in 1..=n {
                // subtract every term whose block containing 1 is smaller than {1..k}
                let mut acc = m[k].clone();
                for j in 1..k {
                    if !c[j].is_zero() {
                        acc = acc - binom[k - 1][j - 1].clone() * c[j].clone() * m[k - j].clone();
                    }
                }
                c[k] = acc;
            }
            c
        }
    }
}

/// Generic form on `[1, κ_1, …, κ_N]`, returning `[1, m_1, …, m_N]`.
pub fn cumulants_to_moments_generic<T: Clone + Num + FromPrimitive>(k: &[T], lattice: Lattice) -> Vec<T> {
    match lattice {
        Lattice::Free => free_cumulants_to_moments(k),
        Lattice::Classical => {
            let n = k.len() - 1;
            let binom = binomial_rows::<T>(n);
            let mut m = vec![T::zero(); n + 1];
            m[0] = T::one();
            for s in 1..=n {
                let mut acc = T::zero();
                for j in 1..=s {
                    if !k[j].is_zero() {
                        acc = acc + binom[s - 1][j - 1].clone() * k[j].clone() * m[s - j].clone();
                    }
                }
                m[s] = acc;
            }
            m
        }
    }
}

fn binomial_rows<T: Clone + Num + FromPrimitive>(n: usize) -> Vec<Vec<T>> {
    let mut rows: Vec<Vec<T>> = vec![vec![T::one()]];
    for r in 1..n.max(1) {
        let prev = &rows[r - 1];
        let mut row = vec![T::one(); r + 1];
        for j in 1..r {
            row[j] = prev[j - 1].clone() + prev[j].clone();
        }
        rows.push(row);
    }
    rows
}

/// Direct lattice sum `m_n = Σ_{π∈lattice(n)} Π κ_{|B|}` by enumeration.
pub fn lattice_moments(k: &CumulantSequence) -> Result<MomentSequence> {
    let mut values = Vec::with_capacity(k.len());
    for n in 1..=k.len() {
        let mut acc = Rational::zero();
        for p in enumerate(n, k.lattice.family())? {
            acc += p.block_sizes().map(|s| k.get(s)).product::<Rational>();
        }
        values.push(acc);
    }
    MomentSequence::new(values)
}

/// Cumulants by enumeration: `κ_n = m_n − Σ_{π ≠ 1_n} Π κ_{|B|}`.
pub fn lattice_cumulants(m: &MomentSequence, lattice: Lattice) -> Result<CumulantSequence> {
    let mut values: Vec<Rational> = Vec::with_capacity(m.len());
    for n in 1..=m.len() {
        let mut acc = m.get(n);
        for p in enumerate(n, lattice.family())? {
            if p.block_count() > 1 {
                acc -= p.block_sizes().map(|s| values[s - 1].clone()).product::<Rational>();
            }
        }
        values.push(acc);
    }
    CumulantSequence::new(values, lattice)
}

/// Moments of the sum of two classically independent variables: classical
/// cumulants add.
pub fn classical_convolve_moments(mx: &MomentSequence, my: &MomentSequence) -> Result<MomentSequence> {
    if mx.len() != my.len() {
        return Err(Error::DimensionMismatch {
            expected: mx.len(),
            found: my.len(),
        });
    }
    let sum = moments_to_cumulants(mx, Lattice::Classical).add(&moments_to_cumulants(my, Lattice::Classical))?;
    Ok(cumulants_to_moments(&sum))
}

/// Mixed moments `τ[X_{w_1} ⋯ X_{w_n}]` of non-commuting variables, stored
/// for every word up to a degree cap. The empty word maps to 1.
#[derive(Debug, Clone)]
pub struct MomentFunctional {
    alphabet: Vec<String>,
    degree_cap: usize,
    table: HashMap<Vec<usize>, Rational>,
}

impl MomentFunctional {
    /// Tabulates `f` on every word of length `≤ degree_cap` over the alphabet.
    pub fn from_fn<F>(alphabet: &[&str], degree_cap: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> Rational,
    {
        if alphabet.is_empty() {
            return Err(Error::invalid("empty alphabet"));
        }
        let mut table = HashMap::new();
        for word in words_up_to(alphabet.len(), degree_cap) {
            let v = f(&word);
            table.insert(word, v);
        }
        if !table[&Vec::new()].is_one() {
            return Err(Error::invalid("a moment functional maps the empty word to 1"));
        }
        Ok(MomentFunctional {
            alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            degree_cap,
            table,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn variable(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    pub fn moment(&self, word: &[usize]) -> Result<Rational> {
        if word.len() > self.degree_cap {
            return Err(Error::ResourceLimit {
                what: "moment functional word",
                requested: word.len(),
                cap: self.degree_cap,
            });
        }
        self.table
            .get(word)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("word {word:?} uses letters outside the alphabet")))
    }
}

/// All words over `{0..letters}` of length `0..=max_len`, shortest first.
pub fn words_up_to(letters: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * letters);
        for w in &frontier {
            for a in 0..letters {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Multilinear cumulant `κ_n(X_{w_1}, …, X_{w_n})` on the chosen lattice,
/// from the moment-cumulant relation extended block by block to subwords.
pub fn mixed_cumulant(f: &MomentFunctional, word: &[usize], lattice: Lattice) -> Result<Rational> {
    if word.is_empty() {
        return Err(Error::invalid("cumulants are defined for non-empty words"));
    }
    let mut memo = HashMap::new();
    mixed_cumulant_memo(f, word, lattice, &mut memo)
}

fn mixed_cumulant_memo(
    f: &MomentFunctional,
    word: &[usize],
    lattice: Lattice,
    memo: &mut HashMap<Vec<usize>, Rational>,
) -> Result<Rational> {
    if let Some(v) = memo.get(word) {
        return Ok(v.clone());
    }
    let mut acc = f.moment(word)?;
    if word.len() > 1 {
        for p in enumerate(word.len(), lattice.family())? {
            if p.block_count() == 1 {
                continue;
            }
            let mut term = Rational::one();
            for block in p.blocks() {
                let sub: Vec<usize> = block.iter().map(|&i| word[i - 1]).collect();
                term *= mixed_cumulant_memo(f, &sub, lattice, memo)?;
                if term.is_zero() {
                    break;
                }
            }
            acc -= term;
        }
    }
    memo.insert(word.to_vec(), acc.clone());
    Ok(acc)
}

pub(crate) fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
