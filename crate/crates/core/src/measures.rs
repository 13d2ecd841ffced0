//! Compactly supported probability measures on the real line.
//!
//! A [`Measure`] is a finite list of atoms plus an optional density sampled on
//! a uniform grid. Quadrature is trapezoidal; cells adjacent to an
//! inverse-square-root edge are integrated analytically against the model
//! `c / √(t − a)`, with `c` fitted to the first interior sample.
//!
//! The Cauchy transform `G(z) = ∫ μ(dt) / (z − t)` of a gridded density is
//! computed by product integration: on each cell the density is linear and
//! the integral against `1/(z − t)` is done in closed form, so the result is
//! accurate right down to the real axis. This is what makes the measure
//! usable as input to the analytic convolution route and as a target for
//! [`stieltjes_invert`].

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cumulants::{cumulants_to_moments, CumulantSequence, Lattice, MomentSequence};
use crate::{Error, Rational, Result};

type C = Complex64;

/// Distance from the real support below which a Cauchy transform is refused.
pub const SUPPORT_GUARD: f64 = 1e-12;

const MASS_TOLERANCE: f64 = 1e-9;

/// Endpoint corrections in units of `ρ(t₁)·h` (Navot's extension of
/// Euler–Maclaurin): `−ζ(−1/2)` for a `√u` edge under the trapezoid rule, and
/// `½ − ζ(½) − 2` for a `1/√u` edge on top of the analytic edge cell.
const SQRT_EDGE_WEIGHT: f64 = 0.207_886_224_977_354_57;
const INV_SQRT_EDGE_WEIGHT: f64 = -0.039_645_491_152_296_6;

/// Cells over which an endpoint correction is spread in the Cauchy transform.
const SMEAR_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Density is bounded at the endpoint.
    Regular,
    /// Density vanishes like `√(distance to the endpoint)`.
    SquareRoot,
    /// Density blows up like `1/√(distance to the endpoint)`.
    InverseSqrt,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Regular => "regular",
            EdgeKind::SquareRoot => "square_root",
            EdgeKind::InverseSqrt => "inverse_sqrt",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(EdgeKind::Regular),
            "square_root" => Ok(EdgeKind::SquareRoot),
            "inverse_sqrt" => Ok(EdgeKind::InverseSqrt),
            other => Err(Error::invalid(format!("unknown edge kind {other:?}"))),
        }
    }
}

/// Density samples on the uniform grid `a + i (b − a)/(G − 1)`, `i = 0..G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    support: (f64, f64),
    samples: Vec<f64>,
    edges: (EdgeKind, EdgeKind),
}

impl Density {
    pub fn new(support: (f64, f64), samples: Vec<f64>, edges: (EdgeKind, EdgeKind)) -> Result<Self> {
        let (a, b) = support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("bad density support [{a}, {b}]")));
        }
        if samples.len() < 4 {
            return Err(Error::invalid("a density grid needs at least 4 points"));
        }
        if let Some(bad) = samples.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!(
                "density sample {bad} is {} (must be finite and non-negative)",
                samples[bad]
            )));
        }
        Ok(Density { support, samples, edges })
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn edges(&self) -> (EdgeKind, EdgeKind) {
        self.edges
    }

    pub fn step(&self) -> f64 {
        (self.support.1 - self.support.0) / (self.samples.len() - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let (a, h) = (self.support.0, self.step());
        (0..self.samples.len()).map(|i| a + h * i as f64).collect()
    }

    fn left_coeff(&self) -> f64 {
        self.samples[1] * self.step().sqrt()
    }

    fn right_coeff(&self) -> f64 {
        self.samples[self.samples.len() - 2] * self.step().sqrt()
    }

    /// Cells `first..last` that are treated as piecewise linear.
    fn linear_cells(&self) -> std::ops::Range<usize> {
        let cells = self.samples.len() - 1;
        let first = usize::from(self.edges.0 == EdgeKind::InverseSqrt);
        let last = cells - usize::from(self.edges.1 == EdgeKind::InverseSqrt);
        first..last
    }

    /// Interpolated density value; zero outside the support.
    pub fn value_at(&self, t: f64) -> f64 {
        let (a, b) = self.support;
        if t < a || t > b {
            return 0.0;
        }
        let h = self.step();
        let cells = self.samples.len() - 1;
        let i = (((t - a) / h).floor() as usize).min(cells - 1);
        if i == 0 && self.edges.0 == EdgeKind::InverseSqrt {
            return self.left_coeff() / (t - a).max(f64::MIN_POSITIVE).sqrt();
        }
        if i == cells - 1 && self.edges.1 == EdgeKind::InverseSqrt {
            return self.right_coeff() / (b - t).max(f64::MIN_POSITIVE).sqrt();
        }
        let s = (t - (a + h * i as f64)) / h;
        self.samples[i] * (1.0 - s) + self.samples[i + 1] * s
    }

    /// `∫ t^n ρ(t) dt`.
    pub fn moment(&self, n: u32) -> f64 {
        let (a, b) = self.support;
        let h = self.step();
        let pow = |t: f64| t.powi(n as i32);
        let mut acc = 0.0;
        for i in self.linear_cells() {
            let t0 = a + h * i as f64;
            let t1 = a + h * (i + 1) as f64;
            acc += 0.5 * h * (self.samples[i] * pow(t0) + self.samples[i + 1] * pow(t1));
        }
        if self.edges.0 == EdgeKind::InverseSqrt {
            acc += self.left_coeff() * sqrt_edge_moment(a, h, n, 1.0);
        }
        if self.edges.1 == EdgeKind::InverseSqrt {
            acc += self.right_coeff() * sqrt_edge_moment(b, h, n, -1.0);
        }
        for (w, e, _, _) in self.endpoint_weights() {
            acc += w * pow(e);
        }
        acc
    }

    pub fn mass(&self) -> f64 {
        self.moment(0)
    }

    /// `(weight, endpoint, lo, hi)`: a small mass correcting the quadrature
    /// at each non-regular edge, spread uniformly over `[lo, hi]`.
    fn endpoint_weights(&self) -> Vec<(f64, f64, f64, f64)> {
        let (a, b) = self.support;
        let h = self.step();
        let g = self.samples.len();
        let spread = h * SMEAR_CELLS.min(g / 2) as f64;
        let unit = |kind: EdgeKind| match kind {
            EdgeKind::Regular => 0.0,
            EdgeKind::SquareRoot => SQRT_EDGE_WEIGHT,
            EdgeKind::InverseSqrt => INV_SQRT_EDGE_WEIGHT,
        };
        let mut out = Vec::with_capacity(2);
        if self.edges.0 != EdgeKind::Regular {
            out.push((unit(self.edges.0) * self.samples[1] * h, a, a, a + spread));
        }
        if self.edges.1 != EdgeKind::Regular {
            out.push((unit(self.edges.1) * self.samples[g - 2] * h, b, b - spread, b));
        }
        out
    }

    fn scaled(&self, factor: f64) -> Density {
        Density {
            support: self.support,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            edges: self.edges,
        }
    }

    /// `(G(z), G'(z))` of the density alone.
    fn cauchy_with_derivative(&self, z: C) -> (C, C) {
        let (a, b) = self.support;
        let h = self.step();
        let mut g = C::zero();
        let mut dg = C::zero();
        for i in self.linear_cells() {
            let t0 = a + h * i as f64;
            let t1 = a + h * (i + 1) as f64;
            let beta = (self.samples[i + 1] - self.samples[i]) / h;
            let alpha = self.samples[i] - beta * t0;
            let (u0, u1) = (z - t0, z - t1);
            let log = u0.ln() - u1.ln();
            let lin = alpha + beta * z;
            g += lin * log - beta * h;
            dg += beta * log + lin * (u0.inv() - u1.inv());
        }
        let s = h.sqrt();
        if self.edges.0 == EdgeKind::InverseSqrt {
            let (v, dv) = sqrt_edge_cell(self.left_coeff(), (z - a).sqrt(), s);
            g += v;
            dg += dv;
        }
        if self.edges.1 == EdgeKind::InverseSqrt {
            let (v, dv) = sqrt_edge_cell(self.right_coeff(), (b - z).sqrt(), s);
            g -= v;
            dg += dv;
        }
        for (w, _, lo, hi) in self.endpoint_weights() {
            let (u0, u1) = (z - lo, z - hi);
            let height = w / (hi - lo);
            g += height * (u0.ln() - u1.ln());
            dg += height * (u0.inv() - u1.inv());
        }
        (g, dg)
    }
}

/// `∫ t^n (±(t − e))^{-1/2} dt` over the cell of width `h` at endpoint `e`;
/// `sign = 1` for a left edge, `−1` for a right edge.
fn sqrt_edge_moment(e: f64, h: f64, n: u32, sign: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=n {
        let kf = k as f64;
        acc += binom * e.powi((n - k) as i32) * sign.powi(k as i32) * h.powf(kf + 0.5) / (kf + 0.5);
        binom = binom * (n - k) as f64 / (kf + 1.0);
    }
    acc
}

/// `H(w) = (c/w) log((w+s)/(w−s))` and `H'(w)/(2w)`.
fn sqrt_edge_cell(c: f64, w: C, s: f64) -> (C, C) {
    let log = (w + s).ln() - (w - s).ln();
    let h = c * log / w;
    let dh = -c * log / (w * w) - 2.0 * c * s / (w * (w * w - s * s));
    (h, dh / (2.0 * w))
}

/// Atoms plus an optional gridded density, total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
}

impl Measure {
    /// Checks that the total mass is 1 within `1e-9`.
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        let m = Measure::unchecked(atoms, density)?;
        let total = m.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!("total mass {total} differs from 1")));
        }
        Ok(m)
    }

    /// Rescales the density so that the total mass is exactly 1 (or the
    /// atoms, when there is no density).
    pub fn normalized(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        let mut m = Measure::unchecked(atoms, density)?;
        let atom_mass: f64 = m.atoms.iter().map(|a| a.1).sum();
        match &m.density {
            Some(d) if d.mass() > 0.0 && atom_mass < 1.0 => {
                m.density = Some(d.scaled((1.0 - atom_mass) / d.mass()));
            }
            _ => {
                m.density = None;
                if atom_mass <= 0.0 {
                    return Err(Error::invalid("measure has no mass"));
                }
                for a in &mut m.atoms {
                    a.1 /= atom_mass;
                }
            }
        }
        Ok(m)
    }

    fn unchecked(mut atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        for &(loc, mass) in &atoms {
            if !loc.is_finite() || !(mass > 0.0 && mass <= 1.0 + MASS_TOLERANCE) {
                return Err(Error::invalid(format!("bad atom ({loc}, {mass})")));
            }
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(Measure { atoms, density })
    }

    pub fn point(c: f64) -> Result<Self> {
        Measure::new(vec![(c, 1.0)], None)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.density.as_ref().map_or(0.0, Density::mass)
    }

    /// Smallest interval containing every atom and the density support.
    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(loc, _) in &self.atoms {
            lo = lo.min(loc);
            hi = hi.max(loc);
        }
        if let Some(d) = &self.density {
            lo = lo.min(d.support.0);
            hi = hi.max(d.support.1);
        }
        (lo, hi)
    }

    /// `m_1..m_{n_max}`.
    pub fn moments(&self, n_max: usize) -> Result<Vec<f64>> {
        if n_max == 0 {
            return Err(Error::invalid("n_max must be at least 1"));
        }
        Ok((1..=n_max as u32)
            .map(|n| {
                let atoms: f64 = self.atoms.iter().map(|&(x, p)| p * x.powi(n as i32)).sum();
                atoms + self.density.as_ref().map_or(0.0, |d| d.moment(n))
            })
            .collect())
    }

    pub fn density_at(&self, t: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.value_at(t))
    }

    fn check_off_support(&self, z: C) -> Result<()> {
        if z.im.abs() > SUPPORT_GUARD {
            return Ok(());
        }
        let on_density = self
            .density
            .as_ref()
            .is_some_and(|d| z.re >= d.support.0 - SUPPORT_GUARD && z.re <= d.support.1 + SUPPORT_GUARD);
        let on_atom = self.atoms.iter().any(|a| (a.0 - z.re).abs() <= SUPPORT_GUARD);
        if on_density || on_atom {
            return Err(Error::invalid(format!("z = {z} lies on the support")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let atoms: Vec<Value> = self.atoms.iter().map(|&(x, p)| json!([x, p])).collect();
        match &self.density {
            Some(d) => json!({
                "atoms": atoms,
                "support": [d.support.0, d.support.1],
                "density": d.samples,
                "edges": [d.edges.0.as_str(), d.edges.1.as_str()],
            }),
            None => json!({ "atoms": atoms, "support": Value::Null, "density": [] }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::invalid(format!("measure JSON: {what}"));
        let num = |v: &Value| v.as_f64().ok_or_else(|| bad("expected a number"));
        let mut atoms = Vec::new();
        for a in v.get("atoms").and_then(Value::as_array).ok_or_else(|| bad("missing atoms"))? {
            let pair = a.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("atom must be [loc, mass]"))?;
            atoms.push((num(&pair[0])?, num(&pair[1])?));
        }
        let samples: Vec<f64> = match v.get("density").and_then(Value::as_array) {
            Some(arr) => arr.iter().map(num).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let density = if samples.is_empty() {
            None
        } else {
            let support = v.get("support").and_then(Value::as_array).filter(|s| s.len() == 2).ok_or_else(|| bad("support must be [a, b]"))?;
            let edges = match v.get("edges").and_then(Value::as_array) {
                Some(e) if e.len() == 2 => (
                    EdgeKind::parse(e[0].as_str().unwrap_or(""))?,
                    EdgeKind::parse(e[1].as_str().unwrap_or(""))?,
                ),
                Some(_) => return Err(bad("edges must be a pair")),
                None => (EdgeKind::Regular, EdgeKind::Regular),
            };
            Some(Density::new((num(&support[0])?, num(&support[1])?), samples, edges)?)
        };
        Measure::new(atoms, density)
    }

    /// `t,density` rows, one per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,density\n");
        if let Some(d) = &self.density {
            for (t, v) in d.grid().iter().zip(&d.samples) {
                out.push_str(&format!("{t:.16e},{v:.16e}\n"));
            }
        }
        out
    }
}

/// A probability measure whose Cauchy transform can be evaluated off the
/// real support.
pub trait CauchyTransform: Sync {
    /// `(G(z), G'(z))`.
    fn cauchy_with_derivative(&self, z: C) -> Result<(C, C)>;

    fn cauchy(&self, z: C) -> Result<C> {
        Ok(self.cauchy_with_derivative(z)?.0)
    }

    /// An interval containing the support.
    fn support(&self) -> (f64, f64);

    fn support_radius(&self) -> f64 {
        let (a, b) = self.support();
        a.abs().max(b.abs())
    }
}

impl CauchyTransform for Measure {
    fn cauchy_with_derivative(&self, z: C) -> Result<(C, C)> {
        self.check_off_support(z)?;
        let mut g = C::zero();
        let mut dg = C::zero();
        for &(x, p) in &self.atoms {
            let inv = (z - x).inv();
            g += p * inv;
            dg -= p * inv * inv;
        }
        if let Some(d) = &self.density {
            let (gd, dgd) = d.cauchy_with_derivative(z);
            g += gd;
            dg += dgd;
        }
        Ok((g, dg))
    }

    fn support(&self) -> (f64, f64) {
        Measure::support(self)
    }
}

pub fn cauchy(mu: &Measure, z: C) -> Result<C> {
    mu.cauchy(z)
}

/// The named laws used throughout the workbench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NamedLaw {
    /// Radius `r`, variance `r²/4`.
    Semicircle(f64),
    /// `1/(π√(4 − t²))` on `[−2, 2]`.
    Arcsine,
    /// `½δ₋₁ + ½δ₁`.
    Bernoulli,
    /// Free Poisson with rate `λ` and jump size `α`.
    MarchenkoPastur { lambda: f64, alpha: f64 },
    /// `(2/π) sin²θ` on `[0, π]`.
    SatoTate,
    Point(f64),
}

impl NamedLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NamedLaw::Semicircle(r) => r.is_finite() && r > 0.0,
            NamedLaw::MarchenkoPastur { lambda, alpha } => {
                lambda.is_finite() && alpha.is_finite() && lambda > 0.0 && alpha > 0.0
            }
            NamedLaw::Point(c) => c.is_finite(),
            NamedLaw::Arcsine | NamedLaw::Bernoulli | NamedLaw::SatoTate => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid parameters for {self}")))
        }
    }

    /// Density on a grid of `grid_size` points, or atoms.
    pub fn make(&self, grid_size: usize) -> Result<Measure> {
        self.validate()?;
        if grid_size < 64 {
            return Err(Error::invalid(format!("grid_size {grid_size} is below 64")));
        }
        let sample = |support: (f64, f64), edges: (EdgeKind, EdgeKind), f: &dyn Fn(f64) -> f64| {
            let (a, b) = support;
            let h = (b - a) / (grid_size - 1) as f64;
            let mut samples: Vec<f64> = (0..grid_size).map(|i| f(a + h * i as f64).max(0.0)).collect();
            // singular endpoints are never read, keep them finite
            if edges.0 == EdgeKind::InverseSqrt {
                samples[0] = 0.0;
            }
            if edges.1 == EdgeKind::InverseSqrt {
                samples[grid_size - 1] = 0.0;
            }
            Density::new(support, samples, edges)
        };
        use EdgeKind::*;
        match *self {
            NamedLaw::Semicircle(r) => {
                let d = sample((-r, r), (SquareRoot, SquareRoot), &|t| {
                    2.0 / (std::f64::consts::PI * r * r) * (r * r - t * t).max(0.0).sqrt()
                })?;
                Measure::normalized(vec![], Some(d))
            }
            NamedLaw::Arcsine => {
                let d = sample((-2.0, 2.0), (InverseSqrt, InverseSqrt), &|t| {
                    1.0 / (std::f64::consts::PI * (4.0 - t * t).sqrt())
                })?;
                Measure::normalized(vec![], Some(d))
            }
            NamedLaw::Bernoulli => Measure::new(vec![(-1.0, 0.5), (1.0, 0.5)], None),
            NamedLaw::MarchenkoPastur { lambda, alpha } => {
                let (a, b) = mp_edges(lambda, alpha);
                let left = if a == 0.0 { InverseSqrt } else { SquareRoot };
                let d = sample((a, b), (left, SquareRoot), &|t| {
                    ((b - t) * (t - a)).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * alpha * t)
                })?;
                let atoms = if lambda < 1.0 { vec![(0.0, 1.0 - lambda)] } else { vec![] };
                Measure::normalized(atoms, Some(d))
            }
            NamedLaw::SatoTate => {
                let d = sample((0.0, std::f64::consts::PI), (Regular, Regular), &|t| {
                    2.0 / std::f64::consts::PI * t.sin().powi(2)
                })?;
                Measure::normalized(vec![], Some(d))
            }
            NamedLaw::Point(c) => Measure::point(c),
        }
    }

    /// Exact moments `m_1..m_order` when they are rational in the parameters.
    /// Real parameters are read as the exact binary rationals they store.
    pub fn exact_moments(&self, order: usize) -> Result<Option<MomentSequence>> {
        self.validate()?;
        let exact = |x: f64| Rational::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not finite")));
        let values: Vec<Rational> = match *self {
            NamedLaw::Semicircle(r) => {
                let s = exact(r)? * exact(r)? / Rational::from_integer(4.into());
                let mut cat = Rational::one();
                let mut out = Vec::with_capacity(order);
                for n in 1..=order {
                    if n % 2 == 1 {
                        out.push(Rational::zero());
                    } else {
                        let k = (n / 2) as i64;
                        // Cat_k = Cat_{k-1} · 2(2k−1)/(k+1)
                        cat *= Rational::new((2 * (2 * k - 1)).into(), (k + 1).into());
                        out.push(&cat * num_traits::pow(s.clone(), n / 2));
                    }
                }
                out
            }
            NamedLaw::Arcsine => {
                let mut c = Rational::one();
                let mut out = Vec::with_capacity(order);
                for n in 1..=order {
                    if n % 2 == 1 {
                        out.push(Rational::zero());
                    } else {
                        let k = (n / 2) as i64;
                        c *= Rational::new((2 * (2 * k - 1)).into(), k.into());
                        out.push(c.clone());
                    }
                }
                out
            }
            NamedLaw::Bernoulli => (1..=order)
                .map(|n| if n % 2 == 0 { Rational::one() } else { Rational::zero() })
                .collect(),
            NamedLaw::MarchenkoPastur { lambda, alpha } => {
                let (l, a) = (exact(lambda)?, exact(alpha)?);
                let kappa: Vec<Rational> = (1..=order).map(|n| &l * num_traits::pow(a.clone(), n)).collect();
                return Ok(Some(cumulants_to_moments(&CumulantSequence::new(kappa, Lattice::Free)?)));
            }
            NamedLaw::SatoTate => return Ok(None),
            NamedLaw::Point(c) => {
                let c = exact(c)?;
                (1..=order).map(|n| num_traits::pow(c.clone(), n)).collect()
            }
        };
        Ok(Some(MomentSequence::new(values)?))
    }
}

fn mp_edges(lambda: f64, alpha: f64) -> (f64, f64) {
    let s = lambda.sqrt();
    let a = if lambda == 1.0 { 0.0 } else { alpha * (1.0 - s).powi(2) };
    (a, alpha * (1.0 + s).powi(2))
}

fn sato_tate_measure() -> &'static Measure {
    static CACHE: OnceLock<Measure> = OnceLock::new();
    CACHE.get_or_init(|| NamedLaw::SatoTate.make(8193).expect("valid grid"))
}

fn on_interval(z: C, a: f64, b: f64) -> bool {
    z.im.abs() <= SUPPORT_GUARD && z.re >= a - SUPPORT_GUARD && z.re <= b + SUPPORT_GUARD
}

impl CauchyTransform for NamedLaw {
    fn cauchy_with_derivative(&self, z: C) -> Result<(C, C)> {
        self.validate()?;
        let refuse = || Err(Error::invalid(format!("z = {z} lies on the support of {self}")));
        match *self {
            NamedLaw::Semicircle(r) => {
                if on_interval(z, -r, r) {
                    return refuse();
                }
                // (z − root)/(2s) rationalised, stable as r → 0
                let root = (z - r).sqrt() * (z + r).sqrt();
                let sum = z + root;
                Ok((2.0 / sum, -2.0 * (1.0 + z / root) / (sum * sum)))
            }
            NamedLaw::Arcsine => {
                if on_interval(z, -2.0, 2.0) {
                    return refuse();
                }
                let root = (z - 2.0).sqrt() * (z + 2.0).sqrt();
                let g = root.inv();
                Ok((g, -z * g / (root * root)))
            }
            NamedLaw::Bernoulli => {
                if on_interval(z, -1.0, -1.0) || on_interval(z, 1.0, 1.0) {
                    return refuse();
                }
                let (p, m) = ((z - 1.0).inv(), (z + 1.0).inv());
                Ok((0.5 * (p + m), -0.5 * (p * p + m * m)))
            }
            NamedLaw::MarchenkoPastur { lambda, alpha } => {
                let (a, b) = mp_edges(lambda, alpha);
                if on_interval(z, a, b) || (lambda < 1.0 && on_interval(z, 0.0, 0.0)) {
                    return refuse();
                }
                let root = (z - a).sqrt() * (z - b).sqrt();
                let droot = (2.0 * z - a - b) / (2.0 * root);
                let c = alpha * (1.0 - lambda);
                let g = (z + c - root) / (2.0 * alpha * z);
                let dg = ((1.0 - droot) * z - (z + c - root)) / (2.0 * alpha * z * z);
                Ok((g, dg))
            }
            NamedLaw::SatoTate => sato_tate_measure().cauchy_with_derivative(z),
            NamedLaw::Point(c) => {
                if on_interval(z, c, c) {
                    return refuse();
                }
                let inv = (z - c).inv();
                Ok((inv, -inv * inv))
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            NamedLaw::Semicircle(r) => (-r, r),
            NamedLaw::Arcsine => (-2.0, 2.0),
            NamedLaw::Bernoulli => (-1.0, 1.0),
            NamedLaw::MarchenkoPastur { lambda, alpha } => {
                let (a, b) = mp_edges(lambda, alpha);
                (if lambda < 1.0 { 0.0 } else { a }, b)
            }
            NamedLaw::SatoTate => (0.0, std::f64::consts::PI),
            NamedLaw::Point(c) => (c, c),
        }
    }
}

impl fmt::Display for NamedLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedLaw::Semicircle(r) => write!(f, "semicircle:{r}"),
            NamedLaw::Arcsine => write!(f, "arcsine"),
            NamedLaw::Bernoulli => write!(f, "bernoulli"),
            NamedLaw::MarchenkoPastur { lambda, alpha } => write!(f, "marchenko_pastur:{lambda}:{alpha}"),
            NamedLaw::SatoTate => write!(f, "sato_tate"),
            NamedLaw::Point(c) => write!(f, "point:{c}"),
        }
    }
}

/// Parses `semicircle[:r]`, `arcsine`, `bernoulli`,
/// `marchenko_pastur[:λ[:α]]` (alias `mp`), `sato_tate`, `point[:c]`.
impl FromStr for NamedLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or("").trim().to_ascii_lowercase();
        let params: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad law parameter {p:?}"))))
            .collect::<Result<_>>()?;
        let arg = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
        let max_params = match name.as_str() {
            "semicircle" | "point" => 1,
            "marchenko_pastur" | "mp" => 2,
            _ => 0,
        };
        if params.len() > max_params {
            return Err(Error::invalid(format!("too many parameters in {s:?}")));
        }
        let law = match name.as_str() {
            "semicircle" => NamedLaw::Semicircle(arg(0, 2.0)),
            "arcsine" => NamedLaw::Arcsine,
            "bernoulli" => NamedLaw::Bernoulli,
            "marchenko_pastur" | "mp" => NamedLaw::MarchenkoPastur {
                lambda: arg(0, 1.0),
                alpha: arg(1, 1.0),
            },
            "sato_tate" => NamedLaw::SatoTate,
            "point" => NamedLaw::Point(arg(0, 0.0)),
            _ => return Err(Error::invalid(format!("unknown law {s:?}"))),
        };
        law.validate()?;
        Ok(law)
    }
}

/// Recovers a measure from its Cauchy transform on `support_hint`.
///
/// The density is `−Im G(t + iε)/π`, Richardson-extrapolated from `ε` and
/// `ε/2`. A grid point is an atom candidate when `ε|Im G|` exceeds
/// `0.1√ε`; its location is refined by maximising `|Im G|` and it is accepted
/// when `η|Im G(t₀ + iη)|` barely changes as `η` halves, which separates poles
/// from tall but bounded density. Atoms are subtracted before the density is
/// read off, and the result is renormalised to mass 1.
pub fn stieltjes_invert<G>(g: G, support_hint: (f64, f64), grid_size: usize, eps: f64) -> Result<Measure>
where
    G: Fn(C) -> Result<C> + Sync,
{
    let (a, b) = support_hint;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!("bad support hint [{a}, {b}]")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("ε must be positive, got {eps}")));
    }
    if grid_size < 4 {
        return Err(Error::invalid("grid_size must be at least 4"));
    }
    let h = (b - a) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| a + h * i as f64).collect();
    let evals: Vec<(C, C)> = grid
        .par_iter()
        .map(|&t| Ok((g(C::new(t, eps))?, g(C::new(t, eps / 2.0))?)))
        .collect::<Result<_>>()?;

    let strength: Vec<f64> = evals.iter().map(|(g1, _)| eps * g1.im.abs()).collect();
    let threshold = 0.1 * eps.sqrt();
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid_size {
        let left = if i > 0 { strength[i - 1] } else { 0.0 };
        let right = if i + 1 < grid_size { strength[i + 1] } else { 0.0 };
        if strength[i] <= threshold || strength[i] < left || strength[i] <= right {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid_size - 1)];
        let peak = golden_max(|t| g(C::new(t, eps / 4.0)).map(|v| v.im.abs()).unwrap_or(0.0), lo, hi);
        let weight = |eta: f64| -> Result<f64> { Ok(eta * g(C::new(peak, eta))?.im.abs()) };
        let (w1, w2) = (weight(eps)?, weight(eps / 2.0)?);
        if w2 / w1 > 0.85 {
            let mass = 2.0 * w2 - w1;
            if mass > 0.0 {
                atoms.push((peak, mass.min(1.0)));
            }
        }
    }

    let atom_part = |z: C| atoms.iter().map(|&(x, p)| p / (z - x)).sum::<C>();
    let window = 10.0 * eps + 1.5 * h;
    let near_atom = |t: f64| atoms.iter().any(|&(x, _)| (t - x).abs() <= window);
    let mut samples = Vec::with_capacity(grid_size);
    let mut masked = Vec::with_capacity(grid_size);
    for (&t, &(g1, g2)) in grid.iter().zip(&evals) {
        let d1 = -(g1 - atom_part(C::new(t, eps))).im / std::f64::consts::PI;
        let d2 = -(g2 - atom_part(C::new(t, eps / 2.0))).im / std::f64::consts::PI;
        let is_masked = near_atom(t);
        let mut d = 2.0 * d2 - d1;
        if d < 0.0 {
            if d2 < -1e-6 && !is_masked {
                return Err(Error::InversionFailure { t, value: d2 });
            }
            d = d2.max(0.0);
        }
        samples.push(d);
        masked.push(is_masked);
    }
    fill_masked(&mut samples, &masked);
    let edges = (
        classify_edge(&samples[..5.min(grid_size)]),
        classify_edge(&samples[grid_size.saturating_sub(5)..].iter().rev().copied().collect::<Vec<_>>()),
    );

    let atom_mass: f64 = atoms.iter().map(|a| a.1).sum();
    let density = Density::new(support_hint, samples, edges)?;
    let density = if density.mass() > 1e-6 && atom_mass < 1.0 { Some(density) } else { None };
    Measure::normalized(atoms, density)
}

/// Reads the local power law `d(kh) ∝ k^{-p}` off samples ordered away from
/// an endpoint; `p ≈ ½` marks an inverse-square-root edge.
fn classify_edge(from_edge: &[f64]) -> EdgeKind {
    if from_edge.len() < 5 || from_edge[4] <= 0.0 {
        return EdgeKind::Regular;
    }
    let p1 = (from_edge[1] / from_edge[2]).log2();
    let p2 = (from_edge[2] / from_edge[4]).log2();
    if (0.3..0.7).contains(&p1) && (0.3..0.7).contains(&p2) {
        EdgeKind::InverseSqrt
    } else {
        EdgeKind::Regular
    }
}

/// Linear interpolation across masked runs from the nearest unmasked samples.
fn fill_masked(samples: &mut [f64], masked: &[bool]) {
    let n = samples.len();
    let mut i = 0;
    while i < n {
        if !masked[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && masked[i] {
            i += 1;
        }
        let left = start.checked_sub(1).map(|j| samples[j]);
        let right = (i < n).then(|| samples[i]);
        let len = (i - start + 1) as f64;
        for (k, j) in (start..i).enumerate() {
            let s = (k + 1) as f64 / len;
            samples[j] = match (left, right) {
                (Some(l), Some(r)) => l * (1.0 - s) + r * s,
                (Some(v), None) | (None, Some(v)) => v,
                (None, None) => 0.0,
            };
        }
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
