//! Simple random walks on `Z`, `Z^d` and the free groups `F_d`.
//!
//! Loop counts `λ(n)` (closed walks of length `n` from the origin) are exact
//! big integers. Return probabilities `ρ(n) = λ(n)/(2d)^n` and first-return
//! probabilities `φ(n)` are exact rationals linked by `R − 1 = F·R`.
//!
//! On `F_d` the loop generating function is
//!
//! ```text
//! L_d(z) = (−(d−1) + d√(1 − 4(2d−1)z²)) / (1 − 4d²z²)
//! ```
//!
//! whose singularity at `z² = 1/(4(2d−1))` gives the decay base
//! `lim ρ(n)^{1/n} = √(2d−1)/d`. [`kesten_green`] also reports the variant
//! with denominator `1 − 16z²`, which agrees only at `d = 2`.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::cumulants::{moments_to_cumulants, cumulants_to_moments, Lattice, MomentSequence};
use crate::{Error, Rational, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Z,
    Zd(usize),
    Fd(usize),
}

impl Group {
    /// Number of generators and inverses, i.e. the vertex degree.
    pub fn degree(self) -> usize {
        match self {
            Group::Z => 2,
            Group::Zd(d) | Group::Fd(d) => 2 * d,
        }
    }
}

/// `λ(0..=n_max)` with `λ(0) = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopCounts {
    pub group: Group,
    pub values: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnProbabilities {
    /// `ρ(n)`, `ρ(0) = 1`.
    pub values: Vec<Rational>,
    /// `φ(n)`, `φ(0) = 0`.
    pub first_returns: Vec<Rational>,
}

/// First-return probabilities from return probabilities via `R − 1 = F·R`.
pub fn first_return(rho: &[Rational]) -> Result<Vec<Rational>> {
    if rho.first().is_none_or(|r| !r.is_one()) {
        return Err(Error::invalid("ρ(0) must equal 1"));
    }
    let mut phi = vec![Rational::zero(); rho.len()];
    for n in 1..rho.len() {
        let mut acc = rho[n].clone();
        for k in 1..n {
            if !phi[k].is_zero() && !rho[n - k].is_zero() {
                acc -= &phi[k] * &rho[n - k];
            }
        }
        phi[n] = acc;
    }
    Ok(phi)
}

pub fn return_probabilities(loops: &LoopCounts) -> Result<ReturnProbabilities> {
    let base = BigInt::from(loops.group.degree());
    let mut denom = BigInt::one();
    let mut values = Vec::with_capacity(loops.values.len());
    for v in &loops.values {
        values.push(Rational::new(BigInt::from(v.clone()), denom.clone()));
        denom *= &base;
    }
    let first_returns = first_return(&values)?;
    Ok(ReturnProbabilities { values, first_returns })
}

fn central_binomials(n_max: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); n_max + 1];
    let mut c = BigUint::one();
    for k in 0..=n_max / 2 {
        if k > 0 {
            // C(2k, k) = C(2k−2, k−1)·(2k)(2k−1)/k²
            c = c * BigUint::from(2 * k) * BigUint::from(2 * k - 1) / BigUint::from(k * k);
        }
        out[2 * k] = c.clone();
    }
    out
}

/// Loops on `Z^d`: the `d`-fold binomial (EGF) convolution of the
/// one-dimensional counts `C(n, n/2)`.
pub fn loops_lattice(d: usize, n_max: usize) -> Result<LoopCounts> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let one = central_binomials(n_max);
    let binom = binomial_table(n_max);
    let mut acc = one.clone();
    for _ in 1..d {
        acc = (0..=n_max)
            .map(|n| (0..=n).map(|m| &binom[n][m] * &one[m] * &acc[n - m]).sum())
            .collect();
    }
    Ok(LoopCounts {
        group: if d == 1 { Group::Z } else { Group::Zd(d) },
        values: acc,
    })
}

fn binomial_table(n_max: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
    for n in 1..=n_max {
        let prev = &rows[n - 1];
        let mut row = vec![BigUint::one(); n + 1];
        for k in 1..n {
            row[k] = &prev[k - 1] + &prev[k];
        }
        rows.push(row);
    }
    rows
}

/// Loops on `F_d`: moments of the free sum of `d` copies of `A + A⁻¹`,
/// whose moments are the central binomials.
pub fn kesten_loops(d: usize, n_max: usize) -> Result<LoopCounts> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let group = if d == 1 { Group::Z } else { Group::Fd(d) };
    if n_max == 0 {
        return Ok(LoopCounts {
            group,
            values: vec![BigUint::one()],
        });
    }
    let arcsine = MomentSequence::new(
        central_binomials(n_max)[1..]
            .iter()
            .map(|c| Rational::from_integer(BigInt::from(c.clone())))
            .collect(),
    )?;
    let kappa = moments_to_cumulants(&arcsine, Lattice::Free).scale(&Rational::from_integer(BigInt::from(d)));
    let moments = cumulants_to_moments(&kappa);
    let mut values = vec![BigUint::one()];
    for m in moments.values() {
        let v = m
            .is_integer()
            .then(|| m.to_integer().to_biguint())
            .flatten()
            .ok_or_else(|| Error::invalid("loop count is not a non-negative integer"))?;
        values.push(v);
    }
    Ok(LoopCounts { group, values })
}

/// Closed walks on the `2d`-regular tree, by dynamic programming on the
/// distance from the root: `2d` ways out of the root, otherwise one step in
/// and `2d − 1` steps out.
pub fn tree_loops_dp(d: usize, n_max: usize) -> Result<Vec<BigUint>> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let out_root = BigUint::from(2 * d);
    let out = BigUint::from(2 * d - 1);
    let mut dist = vec![BigUint::zero(); n_max + 2];
    dist[0] = BigUint::one();
    let mut loops = vec![BigUint::one()];
    for n in 1..=n_max {
        let mut next = vec![BigUint::zero(); n_max + 2];
        // distances above n_max − n can no longer return in time
        let reach = n.min(n_max + 1 - n);
        for k in 0..=reach {
            let mut v = BigUint::zero();
            if k + 1 < dist.len() {
                v += &dist[k + 1];
            }
            if k == 1 {
                v += &dist[0] * &out_root;
            } else if k > 1 {
                v += &dist[k - 1] * &out;
            }
            next[k] = v;
        }
        dist = next;
        loops.push(dist[0].clone());
    }
    Ok(loops)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyaDiagnostic {
    /// `Σ_{n ≤ n_max} ρ_d(n)`.
    pub partial_sum: f64,
    /// Least-squares slope of `log ρ_d(2k)` against `log k` over the upper
    /// half of `k ≤ n_max/2`.
    pub fitted_exponent: f64,
    /// `Σ_{n ≤ n_max} φ_d(n)`, a lower estimate of the return probability.
    pub return_probability: f64,
}

/// Floating-point return probabilities on `Z^d` for large `n`: a step moves
/// along one of `d` axes, so `ρ_d(n) = Σ_m C(n,m) d^{−m}(1 − 1/d)^{n−m} ρ_1(m) ρ_{d−1}(n−m)`,
/// with the binomial weights evaluated in log space.
pub fn lattice_return_probabilities_f64(d: usize, n_max: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let mut ln_fact = vec![0.0f64; n_max + 1];
    for n in 1..=n_max {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    let rho1: Vec<f64> = (0..=n_max)
        .map(|n| {
            if n % 2 == 1 {
                0.0
            } else {
                (ln_fact[n] - 2.0 * ln_fact[n / 2] - n as f64 * std::f64::consts::LN_2).exp()
            }
        })
        .collect();
    let mut acc = rho1.clone();
    for dim in 2..=d {
        let p = 1.0 / dim as f64;
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        acc = (0..=n_max)
            .map(|n| {
                let mut s = 0.0;
                for m in (0..=n).step_by(2) {
                    if acc[n - m] == 0.0 {
                        continue;
                    }
                    let w = ln_fact[n] - ln_fact[m] - ln_fact[n - m] + m as f64 * lp + (n - m) as f64 * lq;
                    s += w.exp() * rho1[m] * acc[n - m];
                }
                s
            })
            .collect();
    }
    Ok(acc)
}

pub fn polya_diagnostic(d: usize, n_max: usize) -> Result<PolyaDiagnostic> {
    if n_max < 200 {
        return Err(Error::invalid(format!("n_max = {n_max} is below 200")));
    }
    let rho = lattice_return_probabilities_f64(d, n_max)?;
    let partial_sum = rho.iter().sum();

    let k_max = n_max / 2;
    let pts: Vec<(f64, f64)> = (k_max / 2..=k_max).map(|k| ((k as f64).ln(), rho[2 * k].ln())).collect();
    let fitted_exponent = least_squares_slope(&pts);

    let mut phi = vec![0.0f64; n_max + 1];
    for n in 1..=n_max {
        let mut acc = rho[n];
        for k in 1..n {
            acc -= phi[k] * rho[n - k];
        }
        phi[n] = acc;
    }
    Ok(PolyaDiagnostic {
        partial_sum,
        fitted_exponent,
        return_probability: phi.iter().sum(),
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KestenGreen {
    /// `(−(d−1) + d√(1 − 4(2d−1)z²))/(1 − 16z²)`.
    pub naive_formula_value: Complex64,
    /// The same numerator over `1 − 4d²z²`.
    pub corrected_formula_value: Complex64,
    /// `Σ_{n ≤ n_max} λ_d(n) zⁿ` from [`kesten_loops`].
    pub series_value: Complex64,
    /// Estimate of `lim ρ_d(n)^{1/n}` from the exact loop counts.
    pub decay_base: f64,
    /// Truncation order of the series.
    pub n_max: usize,
}

/// Default truncation for [`kesten_green`].
pub const KESTEN_SERIES_ORDER: usize = 64;

pub fn kesten_green(d: usize, z: Complex64) -> Result<KestenGreen> {
    kesten_green_with_order(d, z, KESTEN_SERIES_ORDER)
}

pub fn kesten_green_with_order(d: usize, z: Complex64, n_max: usize) -> Result<KestenGreen> {
    if d < 2 {
        return Err(Error::invalid("the free-group formula needs d ≥ 2"));
    }
    let limit = 0.9 / (2 * d) as f64;
    if z.norm() >= limit {
        return Err(Error::invalid(format!("|z| = {} must be below {limit}", z.norm())));
    }
    if n_max < 8 {
        return Err(Error::invalid("series order must be at least 8"));
    }
    let df = d as f64;
    let numerator = -(df - 1.0) + df * (1.0 - 4.0 * (2.0 * df - 1.0) * z * z).sqrt();
    let naive_formula_value = numerator / (1.0 - 16.0 * z * z);
    let corrected_formula_value = numerator / (1.0 - 4.0 * df * df * z * z);

    let loops = kesten_loops(d, n_max)?;
    let mut series_value = Complex64::zero();
    let mut zn = Complex64::one();
    for v in &loops.values {
        series_value += v.to_f64().unwrap_or(f64::INFINITY) * zn;
        zn *= z;
    }
    Ok(KestenGreen {
        naive_formula_value,
        corrected_formula_value,
        series_value,
        decay_base: decay_base(&loops)?,
        n_max,
    })
}

/// Richardson-extrapolated `lim (ρ(n+2)/ρ(n))^{1/2}` over even `n`. The
/// `n^{−3/2}` prefactor makes the raw ratio converge like `1/n`, so one
/// extrapolation step `2β(2m) − β(m)` removes the leading error.
pub fn decay_base(loops: &LoopCounts) -> Result<f64> {
    let probs = return_probabilities(loops)?;
    let rho: Vec<f64> = probs.values.iter().map(crate::cumulants::rational_to_f64).collect();
    let n_last = (rho.len() - 1) & !1;
    if n_last < 8 {
        return Err(Error::invalid("need loop counts up to at least n = 8"));
    }
    let beta = |n: usize| (rho[n] / rho[n - 2]).sqrt();
    let m = (n_last / 2) & !1;
    Ok(2.0 * beta(n_last) - beta(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    /// Closed walks on `Z^d` by enumerating every step sequence.
    fn brute_lattice(d: usize, n: usize) -> u64 {
        let steps = 2 * d;
        let mut count = 0;
        for code in 0..steps.pow(n as u32) {
            let mut pos = vec![0i64; d];
            let mut c = code;
            for _ in 0..n {
                let s = c % steps;
                c /= steps;
                pos[s / 2] += if s.is_multiple_of(2) { 1 } else { -1 };
            }
            if pos.iter().all(|&p| p == 0) {
                count += 1;
            }
        }
        count
    }

    /// Counts walks on `Z` whose first return to 0 happens at step `n`.
    fn brute_first_returns(n: usize) -> u64 {
        (0..1u64 << n)
            .filter(|code| {
                let mut pos = 0i64;
                for i in 0..n {
                    pos += if code >> i & 1 == 1 { 1 } else { -1 };
                    if pos == 0 {
                        return i == n - 1;
                    }
                }
                false
            })
            .count() as u64
    }

    #[test]
    fn first_return_examples() {
        let z = return_probabilities(&loops_lattice(1, 10).unwrap()).unwrap();
        assert_eq!(z.first_returns[2], q(1, 2));
        assert_eq!(z.first_returns[4], q(1, 8));
        for n in 1..=10 {
            assert_eq!(z.first_returns[n], q(brute_first_returns(n) as i64, 1 << n));
        }
        let never = vec![Rational::one(), Rational::zero(), Rational::zero()];
        assert!(first_return(&never).unwrap().iter().all(|v| v.is_zero()));
        assert!(first_return(&[q(1, 2)]).is_err());
    }

    #[test]
    fn lattice_examples() {
        let z1 = loops_lattice(1, 4).unwrap();
        assert_eq!((z1.values[2].clone(), z1.values[4].clone()), (2u32.into(), 6u32.into()));
        let z2 = loops_lattice(2, 4).unwrap();
        assert_eq!((z2.values[2].clone(), z2.values[4].clone()), (4u32.into(), 36u32.into()));
        assert_eq!(loops_lattice(3, 2).unwrap().values[2], 6u32.into());
        for d in 1..=3 {
            let l = loops_lattice(d, 6).unwrap();
            for n in 0..=(if d == 3 { 4 } else { 6 }) {
                assert_eq!(l.values[n], BigUint::from(brute_lattice(d, n)), "d = {d}, n = {n}");
            }
        }
    }

    #[test]
    fn kesten_examples() {
        let k2 = kesten_loops(2, 8).unwrap();
        assert_eq!(k2.values, big(&[1, 0, 4, 0, 28, 0, 232, 0, 2092]));
        let k1 = kesten_loops(1, 6).unwrap();
        assert_eq!(k1.values, big(&[1, 0, 2, 0, 6, 0, 20]));
        assert_eq!(k1, loops_lattice(1, 6).unwrap());
        for d in 1..=4 {
            assert_eq!(kesten_loops(d, 16).unwrap().values, tree_loops_dp(d, 16).unwrap(), "d = {d}");
        }
    }

    #[test]
    fn kesten_green_examples() {
        let g = kesten_green(2, Complex64::new(0.1, 0.0)).unwrap();
        assert!((g.naive_formula_value - g.series_value).norm() < 1e-6);
        assert!((g.corrected_formula_value - g.series_value).norm() < 1e-6);
        assert!((g.decay_base - 3f64.sqrt() / 2.0).abs() < 5e-3, "{}", g.decay_base);

        // the 1 − 16z² denominator is only right at d = 2
        let g3 = kesten_green(3, Complex64::new(0.1, 0.05)).unwrap();
        assert!((g3.corrected_formula_value - g3.series_value).norm() < 1e-8);
        assert!((g3.naive_formula_value - g3.series_value).norm() > 1e-3);
        assert!((g3.decay_base - 5f64.sqrt() / 3.0).abs() < 5e-3, "{}", g3.decay_base);
        assert!((g3.decay_base - 2.0 * 3f64.sqrt() / 4.0).abs() > 1e-2);

        for d in 2..=5 {
            let g = kesten_green(d, Complex64::zero()).unwrap();
            assert_eq!(g.series_value, Complex64::one());
            assert!((g.corrected_formula_value - 1.0).norm() < 1e-15);
        }
        assert!(kesten_green(2, Complex64::new(0.3, 0.0)).is_err());
        assert!(kesten_green(1, Complex64::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn decay_base_orders_groups() {
        let z = decay_base(&loops_lattice(1, 64).unwrap()).unwrap();
        assert!((z - 1.0).abs() < 1e-3, "{z}");
        let mut prev = z;
        for d in 2..=4 {
            let b = decay_base(&kesten_loops(d, 64).unwrap()).unwrap();
            assert!(b < 1.0 && b < prev, "d = {d}: {b}");
            prev = b;
        }
    }

    #[test]
    fn group_algebra_matches_kesten() {
        use crate::models::{generator_sum_power_expectation, GroupAlgebraElement};
        for d in 1..=3 {
            let k = kesten_loops(d, 12).unwrap();
            for n in 0..=12 {
                let e = generator_sum_power_expectation(d, n).unwrap();
                assert_eq!(e, Rational::from_integer(BigInt::from(k.values[n].clone())), "d = {d}, n = {n}");
            }
        }
        let x = GroupAlgebraElement::generator_sum(2);
        assert_eq!(x.power_expectation(4).unwrap(), q(28, 1));
    }

    #[test]
    fn polya_small_range() {
        let p = polya_diagnostic(1, 400).unwrap();
        assert!((p.fitted_exponent + 0.5).abs() < 0.05);
        // exact agreement of the float recursion with the integer counts
        let exact = return_probabilities(&loops_lattice(3, 40).unwrap()).unwrap();
        let float = lattice_return_probabilities_f64(3, 40).unwrap();
        for n in 0..=40 {
            let e = crate::cumulants::rational_to_f64(&exact.values[n]);
            assert!((float[n] - e).abs() <= 1e-13 * e.max(1e-300), "n = {n}");
        }
        assert!(polya_diagnostic(2, 100).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn defect_consistency(d in 1usize..=3, n_max in 1usize..=24, free in any::<bool>()) {
            let loops = if free { kesten_loops(d, n_max).unwrap() } else { loops_lattice(d, n_max).unwrap() };
            let p = return_probabilities(&loops).unwrap();
            for n in 1..=n_max {
                let mut rebuilt = Rational::zero();
                for k in 0..=n {
                    rebuilt += &p.first_returns[k] * &p.values[n - k];
                }
                prop_assert_eq!(&rebuilt, &p.values[n]);
                prop_assert!(p.first_returns[n] >= Rational::zero() && p.first_returns[n] <= p.values[n]);
                prop_assert!(p.values[n] <= Rational::one());
                if n % 2 == 1 {
                    prop_assert!(loops.values[n].is_zero());
                }
            }
        }
    }
}
