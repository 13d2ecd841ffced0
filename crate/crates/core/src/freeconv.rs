//! Additive free convolution.
//!
//! The moment route is exact: free cumulants add. The analytic route works
//! with Cauchy transforms. Writing `V = G^{-1}` and `R(w) = V(w) − 1/w`, the
//! relation `R_{X+Y} = R_X + R_Y` evaluated at `w = G_{X+Y}(z)` becomes the
//! system
//!
//! ```text
//! G_X(ω_X) = G,   G_Y(ω_Y) = G,   ω_X + ω_Y − z = 1/G
//! ```
//!
//! in the unknowns `(ω_X, ω_Y, G)`, where `ω_X = V_X(G)` and `ω_Y = V_Y(G)`.
//! It is solved by damped Newton at each point, continued downward from
//! `z = t + 10iR` (where `G ≈ 1/z` fixes the branch) to the target height.
//! Every accepted solution must satisfy `Im G < 0` and `Im ω ≥ Im z`.
//!
//! For the semicircle flow `μ ⊞ μ_r`, the Burgers equation
//! `∂_s G + G ∂_z G = 0` holds when the flow is parametrised by the variance
//! `s = r²/4` of the semicircle; [`select_flow_parametrization`] verifies
//! this on `μ = δ₀`, and the radius parametrisation leaves a residual
//! `(r/2 − 1)·∂_s G`.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Roots;
use num_traits::{One, Zero};

use crate::cumulants::{cumulants_to_moments, moments_to_cumulants, CumulantSequence, Lattice, MomentSequence};
use crate::measures::{stieltjes_invert, CauchyTransform, Measure, NamedLaw};
use crate::{Error, Rational, Result};

type C = Complex64;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const FAILURE_RESIDUAL: f64 = 1e-8;
const CONTINUATION_RATIO: f64 = 0.5;
const MAX_STEP_HALVINGS: usize = 12;

/// `m(X + Y)` for free `X`, `Y`, exactly.
pub fn free_convolve_moments(mx: &MomentSequence, my: &MomentSequence) -> Result<MomentSequence> {
    if mx.len() != my.len() {
        return Err(Error::DimensionMismatch {
            expected: mx.len(),
            found: my.len(),
        });
    }
    let k = moments_to_cumulants(mx, Lattice::Free).add(&moments_to_cumulants(my, Lattice::Free))?;
    Ok(cumulants_to_moments(&k))
}

/// Worst residuals seen while producing a result.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    /// Largest final Newton residual over the intermediate continuation levels.
    pub continuation_residual: f64,
    /// Largest residual of the functional equation at the requested points.
    pub functional_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    /// Numerical moments `m_1..m_n` of the recovered measure.
    pub moments: Vec<f64>,
    pub measure: Option<Measure>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy)]
pub struct AnalyticOptions {
    pub grid_size: usize,
    pub eps: f64,
    pub moments: usize,
    /// Interval for Stieltjes inversion; defaults to the Minkowski sum of
    /// the input supports.
    pub support: Option<(f64, f64)>,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        AnalyticOptions {
            grid_size: 1001,
            eps: 1e-3,
            moments: 6,
            support: None,
        }
    }
}

/// Solution of the subordination system at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinationPoint {
    pub g: C,
    pub omega_x: C,
    pub omega_y: C,
    pub residual: f64,
    pub continuation_residual: f64,
}

#[derive(Clone, Copy)]
struct State {
    wx: C,
    wy: C,
    g: C,
}

fn residual_vector(x: &dyn CauchyTransform, y: &dyn CauchyTransform, z: C, s: State) -> Option<([C; 3], C, C)> {
    let (gx, dgx) = x.cauchy_with_derivative(s.wx).ok()?;
    let (gy, dgy) = y.cauchy_with_derivative(s.wy).ok()?;
    let f = [gx - s.g, gy - s.g, s.wx + s.wy - z - s.g.inv()];
    f.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some((f, dgx, dgy))
}

fn norm(f: &[C; 3]) -> f64 {
    f.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Solves `A x = b` for a 3×3 complex system by Gaussian elimination with
/// partial pivoting.
fn solve3(mut a: [[C; 3]; 3], mut b: [C; 3]) -> Option<[C; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[pivot][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = [C::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(x)
}

fn scale(s: State) -> f64 {
    1.0f64.max(s.wx.norm()).max(s.wy.norm()).max(s.g.norm())
}

fn step_norm(d: &[C; 3]) -> f64 {
    d.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Damped Newton from `seed`; returns the final state and residual.
///
/// Damping uses the natural monotonicity test: a trial point is accepted
/// when the simplified Newton correction there, computed with the current
/// Jacobian, is shorter than the full correction. Unlike a residual-norm
/// test this is invariant under rescaling of the equations.
fn newton(x: &dyn CauchyTransform, y: &dyn CauchyTransform, z: C, seed: State) -> (State, f64) {
    let mut s = seed;
    let Some((mut f, mut dgx, mut dgy)) = residual_vector(x, y, z, s) else {
        return (s, f64::INFINITY);
    };
    let mut res = norm(&f);
    let mut lambda: f64 = 1.0;
    for _ in 0..NEWTON_MAX_ITER {
        if res <= NEWTON_TOL * scale(s) {
            break;
        }
        let jac = [
            [dgx, C::zero(), -C::one()],
            [C::zero(), dgy, -C::one()],
            [C::one(), C::one(), (s.g * s.g).inv()],
        ];
        let Some(step) = solve3(jac, [-f[0], -f[1], -f[2]]) else {
            break;
        };
        let full = step_norm(&step);
        lambda = (2.0 * lambda).min(1.0);
        let mut accepted = None;
        while lambda >= 1.0 / 1024.0 {
            let trial = State {
                wx: s.wx + lambda * step[0],
                wy: s.wy + lambda * step[1],
                g: s.g + lambda * step[2],
            };
            if let Some((ft, dx, dy)) = residual_vector(x, y, z, trial) {
                let rt = norm(&ft);
                let monotone = solve3(jac, [-ft[0], -ft[1], -ft[2]])
                    .is_some_and(|d| step_norm(&d) <= (1.0 - 0.25 * lambda) * full);
                if monotone || rt <= NEWTON_TOL * scale(trial) {
                    accepted = Some((trial, ft, dx, dy, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, ft, dx, dy, rt)) = accepted else {
            break;
        };
        s = trial;
        f = ft;
        dgx = dx;
        dgy = dy;
        res = rt;
    }
    (s, res)
}

fn admissible(z: C, s: State, res: f64) -> bool {
    let slack = 1e-9 * (1.0 + z.im);
    res <= FAILURE_RESIDUAL && s.g.im < 0.0 && s.wx.im >= z.im - slack && s.wy.im >= z.im - slack
}

/// `G_{X⊞Y}(z)` for `Im z > 0` (or its conjugate for `Im z < 0`), with the
/// subordination functions.
pub fn free_cauchy_at(x: &dyn CauchyTransform, y: &dyn CauchyTransform, z: C) -> Result<SubordinationPoint> {
    if z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid(format!("z = {z} must lie off the real axis")));
    }
    if z.im < 0.0 {
        let p = free_cauchy_at(x, y, z.conj())?;
        return Ok(SubordinationPoint {
            g: p.g.conj(),
            omega_x: p.omega_x.conj(),
            omega_y: p.omega_y.conj(),
            ..p
        });
    }
    let radius = (x.support_radius() + y.support_radius()).max(1.0);
    let top = (10.0 * radius).max(z.im);
    let start = C::new(z.re, top);
    let seed = State {
        wx: start,
        wy: start,
        g: start.inv(),
    };
    let (mut state, res) = newton(x, y, start, seed);
    if !admissible(start, state, res) {
        return Err(Error::ContinuationFailure { z: start, residual: res });
    }
    let mut worst = res;
    let mut eta = top;
    let mut ratio = CONTINUATION_RATIO;
    let mut halvings = 0;
    while eta > z.im {
        let next = (eta * ratio).max(z.im);
        let here = C::new(z.re, next);
        let (trial, res) = newton(x, y, here, state);
        if admissible(here, trial, res) {
            state = trial;
            eta = next;
            if next > z.im {
                worst = worst.max(res);
            }
            ratio = (ratio * ratio).max(CONTINUATION_RATIO);
        } else {
            halvings += 1;
            if halvings > MAX_STEP_HALVINGS {
                return Err(Error::ContinuationFailure { z: here, residual: res });
            }
            ratio = ratio.sqrt();
        }
    }
    let (f, _, _) = residual_vector(x, y, z, state).ok_or(Error::ContinuationFailure { z, residual: f64::NAN })?;
    Ok(SubordinationPoint {
        g: state.g,
        omega_x: state.wx,
        omega_y: state.wy,
        residual: norm(&f),
        continuation_residual: worst,
    })
}

struct MaxF64(AtomicU64);

impl MaxF64 {
    fn new() -> Self {
        MaxF64(AtomicU64::new(0f64.to_bits()))
    }

    fn record(&self, v: f64) {
        self.0.fetch_max(v.to_bits(), Ordering::Relaxed);
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }
}

/// Density (and atoms) of `μ_X ⊞ μ_Y` by Stieltjes inversion of the solved
/// Cauchy transform.
pub fn free_convolve_analytic(
    x: &dyn CauchyTransform,
    y: &dyn CauchyTransform,
    options: &AnalyticOptions,
) -> Result<ConvolutionResult> {
    let support = match options.support {
        Some(s) => s,
        None => {
            let (ax, bx) = x.support();
            let (ay, by) = y.support();
            let (a, b) = (ax + ay, bx + by);
            if a < b {
                (a, b)
            } else {
                (a - 1.0, b + 1.0)
            }
        }
    };
    let continuation = MaxF64::new();
    let functional = MaxF64::new();
    let g = |z: C| {
        let p = free_cauchy_at(x, y, z)?;
        continuation.record(p.continuation_residual);
        functional.record(p.residual);
        Ok(p.g)
    };
    let measure = stieltjes_invert(g, support, options.grid_size, options.eps)?;
    let moments = if options.moments > 0 { measure.moments(options.moments)? } else { Vec::new() };
    Ok(ConvolutionResult {
        moments,
        measure: Some(measure),
        diagnostics: Diagnostics {
            continuation_residual: continuation.get(),
            functional_residual: functional.get(),
        },
    })
}

/// Moments of `μ_N^{⊞N}` with `μ_N = (1 − λ/N)δ₀ + (λ/N)δ_α`, exactly.
/// `λ` and `α` are taken as the binary rationals they store.
pub fn free_poisson(lambda: f64, alpha: f64, n: u64, order: usize) -> Result<MomentSequence> {
    if !(lambda > 0.0 && lambda.is_finite() && alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("λ and α must be positive and finite"));
    }
    if (n as f64) <= lambda {
        return Err(Error::invalid(format!("N = {n} must exceed λ = {lambda}")));
    }
    if order == 0 {
        return Err(Error::invalid("order must be at least 1"));
    }
    let l = Rational::from_float(lambda).expect("finite");
    let a = Rational::from_float(alpha).expect("finite");
    let nn = Rational::from_integer(BigInt::from(n));
    let base: Vec<Rational> = (1..=order).map(|k| &l / &nn * num_traits::pow(a.clone(), k)).collect();
    let kappa = moments_to_cumulants(&MomentSequence::new(base)?, Lattice::Free);
    Ok(cumulants_to_moments(&kappa.scale(&nn)))
}

/// Moments of `(X₁ + ⋯ + X_N)/√N` for free identically distributed copies
/// of a centred unit-variance `X`, via `κ_n ↦ N^{1 − n/2} κ_n`.
///
/// The scaling is irrational for odd `n` unless `N` is a perfect square, so
/// a non-square `N` is accepted only when every odd cumulant used vanishes.
pub fn free_clt(m_base: &MomentSequence, n: u64, order: usize) -> Result<MomentSequence> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if order == 0 || order > m_base.len() {
        return Err(Error::invalid(format!(
            "order {order} must lie in 1..={} (the base moments supplied)",
            m_base.len()
        )));
    }
    if m_base.len() < 2 || !m_base.get(1).is_zero() || !m_base.get(2).is_one() {
        return Err(Error::invalid("the base law must have m₁ = 0 and m₂ = 1"));
    }
    let kappa = moments_to_cumulants(&m_base.truncate(order), Lattice::Free);
    let root = n.sqrt();
    let square = root * root == n;
    let nn = BigInt::from(n);
    let mut scaled = Vec::with_capacity(order);
    for k in 1..=order {
        let c = kappa.get(k);
        if c.is_zero() {
            scaled.push(c);
            continue;
        }
        // N^{1 − k/2}
        let factor = if k % 2 == 0 {
            Rational::new(nn.clone(), nn.pow((k / 2) as u32))
        } else if square {
            Rational::new(nn.clone(), BigInt::from(root).pow(k as u32))
        } else {
            return Err(Error::invalid(format!(
                "κ_{k} ≠ 0 needs √N to be rational, and N = {n} is not a perfect square"
            )));
        };
        scaled.push(c * factor);
    }
    Ok(cumulants_to_moments(&CumulantSequence::new(scaled, Lattice::Free)?))
}

/// How the semicircle flow member `μ_s` is indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowParametrization {
    /// `s` is the radius `r` of the semicircle.
    Radius,
    /// `s` is the variance `r²/4`.
    Variance,
}

impl FlowParametrization {
    pub fn member(self, s: f64) -> Result<NamedLaw> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("flow parameter {s} must be positive")));
        }
        Ok(match self {
            FlowParametrization::Radius => NamedLaw::Semicircle(s),
            FlowParametrization::Variance => NamedLaw::Semicircle(2.0 * s.sqrt()),
        })
    }
}

/// The parametrisation in which the flow satisfies the Burgers equation.
pub const FLOW_PARAMETRIZATION: FlowParametrization = FlowParametrization::Variance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSelection {
    pub chosen: FlowParametrization,
    pub radius_residual: f64,
    pub variance_residual: f64,
}

fn burgers_residual(g: impl Fn(f64, C) -> Result<C>, s: f64, z: C, h: f64) -> Result<C> {
    let ds = (g(s + h, z)? - g(s - h, z)?) / (2.0 * h);
    let dz = (g(s, z + h)? - g(s, z - h)?) / (2.0 * h);
    Ok(ds + g(s, z)? * dz)
}

/// Tests both parametrisations on `μ = δ₀`, where `G(s, z)` is the closed
/// form of a centred semicircle, and keeps the one whose Burgers residual
/// vanishes. At `r = 2` the two coincide, so pick `r` away from 2.
pub fn select_flow_parametrization(r: f64, z: C, h: f64) -> Result<FlowSelection> {
    let residual = |p: FlowParametrization| -> Result<f64> {
        Ok(burgers_residual(|s, w| p.member(s)?.cauchy(w), r, z, h)?.norm())
    };
    let radius_residual = residual(FlowParametrization::Radius)?;
    let variance_residual = residual(FlowParametrization::Variance)?;
    let chosen = if variance_residual <= radius_residual {
        FlowParametrization::Variance
    } else {
        FlowParametrization::Radius
    };
    Ok(FlowSelection {
        chosen,
        radius_residual,
        variance_residual,
    })
}

/// `G(s, z)`, the Cauchy transform of `μ ⊞ μ_s`.
pub fn flow_cauchy(mu: &dyn CauchyTransform, s: f64, z: C, parametrization: FlowParametrization) -> Result<C> {
    let member = parametrization.member(s)?;
    Ok(free_cauchy_at(mu, &member, z)?.g)
}

/// Central-difference estimate of `∂_s G + G ∂_z G` at `s = r`.
pub fn semicircle_flow_residual(
    mu: &dyn CauchyTransform,
    r: f64,
    z: C,
    h: f64,
    parametrization: FlowParametrization,
) -> Result<C> {
    if z.im < 0.1 {
        return Err(Error::invalid(format!("Im z = {} must be at least 0.1", z.im)));
    }
    if !(h > 0.0 && h < r) {
        return Err(Error::invalid(format!("step h = {h} must lie in (0, r)")));
    }
    burgers_residual(|s, w| flow_cauchy(mu, s, w, parametrization), r, z, h)
}

/// Shifts moments by a constant: `m_n(X + c) = Σ_k C(n, k) c^{n−k} m_k`.
pub fn shift_moments(m: &MomentSequence, c: &Rational) -> MomentSequence {
    let values = (1..=m.len())
        .map(|n| {
            let mut binom = Rational::one();
            let mut acc = Rational::zero();
            for k in 0..=n {
                acc += &binom * num_traits::pow(c.clone(), n - k) * m.get(k);
                binom = binom * Rational::from_integer((n - k).into()) / Rational::from_integer((k + 1).into());
            }
            acc
        })
        .collect();
    MomentSequence::new(values).expect("non-empty")
}

/// Variance `m₂ − m₁²`.
pub fn variance(m: &MomentSequence) -> Rational {
    let m1 = m.get(1);
    m.get(2) - &m1 * &m1
}

/// Largest `|a − b|/max(|b|, 1)` over paired entries.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
