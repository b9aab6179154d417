//! Exact-arithmetic toolkit for the congruent-number twists `y² = x³ − D²x`:
//! integral point enumeration and coset classification, Pell and
//! simultaneous-Pell solvers, canonical heights with certified error, division
//! polynomials, and numeric audits of spherical-code bounds and explicit
//! constant chains.

// Negated float comparisons are used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants_audit;
pub mod curve;
pub mod divpoly;
pub mod error;
pub mod exact_arith;
pub mod heights;
pub mod interval;
pub mod pell;
pub mod point_search;
mod ser;
pub mod simpell;
pub mod sphere_bounds;

pub use curve::{Curve, CurvePoint, SquareClassTriple};
pub use error::{Error, Result};
pub use exact_arith::BigRational;
pub use num_bigint::BigInt;
