//! Computational free probability.
//!
//! The crate is organised bottom-up:
//!
//! - [`partitions`]: set partitions, non-crossing partitions, pairings and
//!   permutations of `{1..n}` with their Cayley-graph geometry.
//! - [`series`]: truncated power series over exact rationals, the
//!   exponential formula and the free functional equation `L(z) = K(zL(z))`.
//! - [`cumulants`]: classical and free moment/cumulant transforms, mixed
//!   cumulants of non-commutative moment functionals.
//! - [`measures`]: concrete probability measures on the line, Cauchy
//!   transforms and Stieltjes inversion.
//! - [`freeconv`]: additive free convolution by the exact moment route and by
//!   the analytic subordination route.
//! - [`walks`]: loop counts and return probabilities of simple random walks on
//!   `Z`, `Z^d` and the free groups.
//! - [`models`]: exact algebraic oracles (free group algebra, full Fock space)
//!   and a freeness certificate.
//! - [`rmt`]: GUE/CUE sampling, Wick and Weingarten calculus, and Monte Carlo
//!   asymptotic-freeness experiments.

pub mod cumulants;
pub mod error;
pub mod freeconv;
pub mod measures;
pub mod models;
pub mod partitions;
pub mod rmt;
pub mod series;
pub mod walks;

pub use error::{Error, Result};

/// Exact rational coefficients used throughout the combinatorial modules.
pub type Rational = num_rational::BigRational;
