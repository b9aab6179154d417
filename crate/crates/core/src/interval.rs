//! Closed intervals with exact rational endpoints.
//!
//! Used to certify inequalities between constants whose decimal margins are
//! too thin for plain `f64` evaluation. Square roots are enclosed by integer
//! square roots at a fixed binary scale, so every operation is rigorous.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{domain, Result};
use crate::exact_arith::{rational_to_f64, BigRational};

/// Binary precision used for square-root enclosures.
pub const SQRT_BITS: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl Interval {
    pub fn point(q: BigRational) -> Self {
        Interval { lo: q.clone(), hi: q }
    }

    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return domain(format!("empty interval [{lo}, {hi}]"));
        }
        Ok(Interval { lo, hi })
    }

    pub fn int(n: i64) -> Self {
        Self::point(BigRational::from_integer(n.into()))
    }

    /// Exact value of a decimal literal such as `"0.000137"`.
    pub fn decimal(s: &str) -> Result<Self> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        let digits = format!("{int_part}{frac_part}");
        let numer: BigInt = digits.parse().map_err(|_| crate::Error::Domain(format!("not a decimal literal: {s}")))?;
        let denom = num_traits::pow(BigInt::from(10), frac_part.len());
        let q = BigRational::new(if neg { -numer } else { numer }, denom);
        Ok(Self::point(q))
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn mid_f64(&self) -> f64 {
        rational_to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(2.into())))
    }

    /// `width / |midpoint|`, or the width itself when the midpoint is zero.
    pub fn relative_width(&self) -> f64 {
        let mid = (&self.lo + &self.hi) / BigRational::from_integer(2.into());
        if mid.is_zero() {
            return rational_to_f64(&self.width());
        }
        rational_to_f64(&(self.width() / mid.abs()))
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Certainly greater than `other` (every point of `self` exceeds every point of `other`).
    pub fn certainly_gt(&self, other: &Interval) -> bool {
        self.lo > other.hi
    }

    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn recip(&self) -> Result<Self> {
        if self.contains_zero() {
            return domain("reciprocal of an interval containing zero");
        }
        Ok(Interval { lo: self.hi.recip(), hi: self.lo.recip() })
    }

    /// Enclosure of `√x` for `x ≥ 0`.
    pub fn sqrt(&self) -> Result<Self> {
        if self.lo.is_negative() {
            return domain("square root of an interval with negative part");
        }
        Ok(Interval { lo: sqrt_floor(&self.lo), hi: sqrt_ceil(&self.hi) })
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Interval::int(1);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

fn scale() -> BigInt {
    BigInt::one() << SQRT_BITS
}

fn sqrt_floor(q: &BigRational) -> BigRational {
    let s = scale();
    let scaled = (q.numer() * &s * &s).div_floor(q.denom());
    BigRational::new(scaled.sqrt(), s)
}

fn sqrt_ceil(q: &BigRational) -> BigRational {
    let s = scale();
    let scaled = (q.numer() * &s * &s).div_ceil(q.denom());
    let r = scaled.sqrt();
    let r = if &r * &r == scaled { r } else { r + 1 };
    BigRational::new(r, s)
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, o: &Interval) -> Interval {
        Interval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval { lo, hi }
    }
}

impl Div for &Interval {
    type Output = Result<Interval>;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: &Interval) -> Result<Interval> {
        Ok(self * &o.recip()?)
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -&self.hi, hi: -&self.lo }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.12e}, {:.12e}]", rational_to_f64(&self.lo), rational_to_f64(&self.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two_encloses() {
        let r = Interval::int(2).sqrt().unwrap();
        assert!(r.lo() * r.lo() <= BigRational::from_integer(2.into()));
        assert!(r.hi() * r.hi() >= BigRational::from_integer(2.into()));
        assert!(r.relative_width() < 1e-70);
        assert!((r.mid_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn exact_square_root_is_a_point() {
        let r = Interval::decimal("0.25").unwrap().sqrt().unwrap();
        assert_eq!(r.width(), BigRational::zero());
        assert_eq!(r.mid_f64(), 0.5);
    }

    #[test]
    fn decimal_parsing() {
        let v = Interval::decimal("0.000137").unwrap();
        assert_eq!(*v.lo(), BigRational::new(137.into(), 1_000_000.into()));
        assert_eq!(Interval::decimal("-2.5").unwrap().mid_f64(), -2.5);
        assert!(Interval::decimal("1.2.3").is_err());
    }

    #[test]
    fn arithmetic_and_ordering() {
        let a = Interval::new(BigRational::from_integer((-1).into()), BigRational::from_integer(2.into())).unwrap();
        let b = Interval::int(3);
        let p = &a * &b;
        assert_eq!(p.mid_f64(), 1.5);
        assert!(a.recip().is_err());
        assert!(b.certainly_gt(&a));
        assert!((&b / &Interval::int(4)).unwrap().certainly_lt(&Interval::int(1)));
        assert_eq!((-&a).lo(), &BigRational::from_integer((-2).into()));
        assert_eq!(Interval::int(3).powi(3), Interval::int(27));
    }
}
