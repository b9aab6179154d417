//! Division polynomials of `E_D`, x-coordinates of multiples, and the
//! integrality filters built on them.
//!
//! Values are kept in the form `c` (odd index) or `c·y` (even index) with
//! `c` rational, so `y` never has to be rational: only `y² = x³ − D²x` is used.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::curve::CurvePoint;
use crate::error::{domain, Error, Result};
use crate::exact_arith::{exact_sqrt, BigRational};

pub const DEFAULT_C2: f64 = 2.17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// `ψ_m(P)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivPolyValue {
    pub m: u64,
    pub value: BigRational,
    pub parity_tag: Parity,
}

/// Dense integer polynomial in `x`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Poly(Vec<BigInt>);

impl Poly {
    fn trim(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + BigRational::from_integer(c.clone()))
    }

    fn mul(&self, o: &Poly) -> Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut out = vec![BigInt::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trim()
    }

    fn sub(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        let zero = BigInt::zero();
        let out = (0..n).map(|i| self.0.get(i).unwrap_or(&zero) - o.0.get(i).unwrap_or(&zero)).collect();
        Poly(out).trim()
    }

    fn div_exact_int(&self, k: &BigInt) -> Result<Poly> {
        let mut out = Vec::with_capacity(self.0.len());
        for c in &self.0 {
            let (q, r) = c.div_rem(k);
            if !r.is_zero() {
                return Err(Error::Invariant("division polynomial coefficient not divisible".into()));
            }
            out.push(q);
        }
        Ok(Poly(out))
    }

    /// Exact division by a monic polynomial.
    fn div_exact_monic(&self, m: &Poly) -> Result<Poly> {
        let mut rem = self.0.clone();
        let dm = m.0.len() - 1;
        if rem.len() <= dm {
            return if rem.iter().all(Zero::is_zero) {
                Ok(Poly(Vec::new()))
            } else {
                Err(Error::Invariant("inexact polynomial division".into()))
            };
        }
        let mut q = vec![BigInt::zero(); rem.len() - dm];
        for i in (0..q.len()).rev() {
            let c = rem[i + dm].clone();
            if c.is_zero() {
                continue;
            }
            for (j, mc) in m.0.iter().enumerate() {
                rem[i + j] -= &c * mc;
            }
            q[i] = c;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::Invariant("inexact polynomial division".into()));
        }
        Ok(Poly(q).trim())
    }
}

fn psi3_poly(d: &BigInt) -> Poly {
    let d2 = d * d;
    let d4 = &d2 * &d2;
    Poly(vec![-d4, BigInt::zero(), -(&d2 * BigInt::from(6)), BigInt::zero(), BigInt::from(3)])
}

/// `ψ₄ / y`.
fn psi4_poly(d: &BigInt) -> Poly {
    let d2 = d * d;
    let d4 = &d2 * &d2;
    let d6 = &d4 * &d2;
    let z = BigInt::zero();
    let (four, twenty) = (BigInt::from(4), BigInt::from(20));
    Poly(vec![d6 * &four, z.clone(), -(d4 * &twenty), z.clone(), -(d2 * &twenty), z, four])
}

/// Coefficient ring for the recurrence: either values at a fixed `x` or
/// polynomials in `x`.
trait PsiRing {
    type T: Clone;
    fn zero(&self) -> Self::T;
    fn one(&self) -> Self::T;
    fn two(&self) -> Self::T;
    fn psi3(&self) -> Self::T;
    fn psi4(&self) -> Self::T;
    fn mul(&self, a: &Self::T, b: &Self::T) -> Self::T;
    fn sub(&self, a: &Self::T, b: &Self::T) -> Self::T;
    fn y2(&self) -> Self::T;
    fn halve(&self, a: &Self::T) -> Result<Self::T>;
    fn div_y2(&self, a: &Self::T) -> Result<Self::T>;
}

struct AtX {
    x: BigRational,
    d: BigInt,
    y2: BigRational,
}

impl PsiRing for AtX {
    type T = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn two(&self) -> BigRational {
        BigRational::from_integer(2.into())
    }
    fn psi3(&self) -> BigRational {
        psi3_poly(&self.d).eval(&self.x)
    }
    fn psi4(&self) -> BigRational {
        psi4_poly(&self.d).eval(&self.x)
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn y2(&self) -> BigRational {
        self.y2.clone()
    }
    fn halve(&self, a: &BigRational) -> Result<BigRational> {
        Ok(a / BigRational::from_integer(2.into()))
    }
    fn div_y2(&self, a: &BigRational) -> Result<BigRational> {
        if self.y2.is_zero() {
            return domain("even division polynomial at a 2-torsion point");
        }
        Ok(a / &self.y2)
    }
}

struct Symbolic {
    d: BigInt,
}

impl Symbolic {
    fn cubic(&self) -> Poly {
        Poly(vec![BigInt::zero(), -(&self.d * &self.d), BigInt::zero(), BigInt::one()])
    }
}

impl PsiRing for Symbolic {
    type T = Poly;
    fn zero(&self) -> Poly {
        Poly(Vec::new())
    }
    fn one(&self) -> Poly {
        Poly(vec![BigInt::one()])
    }
    fn two(&self) -> Poly {
        Poly(vec![BigInt::from(2)])
    }
    fn psi3(&self) -> Poly {
        psi3_poly(&self.d)
    }
    fn psi4(&self) -> Poly {
        psi4_poly(&self.d)
    }
    fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        a.mul(b)
    }
    fn sub(&self, a: &Poly, b: &Poly) -> Poly {
        a.sub(b)
    }
    fn y2(&self) -> Poly {
        self.cubic()
    }
    fn halve(&self, a: &Poly) -> Result<Poly> {
        a.div_exact_int(&BigInt::from(2))
    }
    fn div_y2(&self, a: &Poly) -> Result<Poly> {
        a.div_exact_monic(&self.cubic())
    }
}

/// `c` when `has_y` is false, `c·y` otherwise.
#[derive(Clone)]
struct YVal<T> {
    c: T,
    has_y: bool,
}

struct Psi<'a, R: PsiRing> {
    ring: &'a R,
    memo: HashMap<u64, YVal<R::T>>,
}

impl<'a, R: PsiRing> Psi<'a, R> {
    fn new(ring: &'a R) -> Self {
        Psi { ring, memo: HashMap::new() }
    }

    fn mul(&self, a: &YVal<R::T>, b: &YVal<R::T>) -> YVal<R::T> {
        let c = self.ring.mul(&a.c, &b.c);
        if a.has_y && b.has_y {
            YVal { c: self.ring.mul(&c, &self.ring.y2()), has_y: false }
        } else {
            YVal { c, has_y: a.has_y || b.has_y }
        }
    }

    fn sub(&self, a: &YVal<R::T>, b: &YVal<R::T>) -> YVal<R::T> {
        debug_assert_eq!(a.has_y, b.has_y);
        YVal { c: self.ring.sub(&a.c, &b.c), has_y: a.has_y }
    }

    fn div_2y(&self, a: &YVal<R::T>) -> Result<YVal<R::T>> {
        let half = self.ring.halve(&a.c)?;
        if a.has_y {
            Ok(YVal { c: half, has_y: false })
        } else {
            Ok(YVal { c: self.ring.div_y2(&half)?, has_y: true })
        }
    }

    fn get(&mut self, n: u64) -> Result<YVal<R::T>> {
        if let Some(v) = self.memo.get(&n) {
            return Ok(v.clone());
        }
        let r = self.ring;
        let v = match n {
            0 => YVal { c: r.zero(), has_y: true },
            1 => YVal { c: r.one(), has_y: false },
            2 => YVal { c: r.two(), has_y: true },
            3 => YVal { c: r.psi3(), has_y: false },
            4 => YVal { c: r.psi4(), has_y: true },
            _ if n % 2 == 1 => {
                let k = n / 2;
                let (a, b, c, e) = (self.get(k + 2)?, self.get(k)?, self.get(k - 1)?, self.get(k + 1)?);
                let b3 = self.mul(&self.mul(&b, &b), &b);
                let e3 = self.mul(&self.mul(&e, &e), &e);
                self.sub(&self.mul(&a, &b3), &self.mul(&c, &e3))
            }
            _ => {
                let k = n / 2;
                let (pk, p2, m1, m2, p1) =
                    (self.get(k)?, self.get(k + 2)?, self.get(k - 1)?, self.get(k - 2)?, self.get(k + 1)?);
                let left = self.mul(&p2, &self.mul(&m1, &m1));
                let right = self.mul(&m2, &self.mul(&p1, &p1));
                let inner = self.sub(&left, &right);
                self.div_2y(&self.mul(&pk, &inner))?
            }
        };
        self.memo.insert(n, v.clone());
        Ok(v)
    }
}

fn affine(p: &CurvePoint) -> Result<(BigRational, BigRational)> {
    match (p.x(), p.y()) {
        (Some(x), Some(y)) => Ok((x.clone(), y.clone())),
        _ => domain("division polynomials need an affine point"),
    }
}

fn parity(m: u64) -> Parity {
    if m.is_multiple_of(2) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// `ψ_m(P)` for `m ≥ 1`.
pub fn psi_eval(m: u64, p: &CurvePoint) -> Result<DivPolyValue> {
    if m == 0 {
        return domain("psi_eval needs m >= 1");
    }
    let (x, y) = affine(p)?;
    let d = p.curve().d().clone();
    let value = if y.is_zero() {
        if m.is_multiple_of(2) {
            return domain(format!("psi_{m} at the 2-torsion point {p}"));
        }
        let ring = Symbolic { d };
        Psi::new(&ring).get(m)?.c.eval(&x)
    } else {
        let y2 = &y * &y;
        let ring = AtX { x, d, y2 };
        let v = Psi::new(&ring).get(m)?;
        if v.has_y {
            v.c * y
        } else {
            v.c
        }
    };
    Ok(DivPolyValue { m, value, parity_tag: parity(m) })
}

/// `ψ_m` as an integer polynomial in `x` (odd `m`) or the polynomial `ψ_m / y` (even `m`).
pub fn psi_polynomial(m: u64, d: &BigInt) -> Result<Vec<BigInt>> {
    let ring = Symbolic { d: d.clone() };
    Ok(Psi::new(&ring).get(m)?.c.0)
}

/// `x(mP) = x − ψ_{m+1}ψ_{m−1}/ψ_m²`.
pub fn x_multiple(m: u64, p: &CurvePoint) -> Result<BigRational> {
    if m == 0 {
        return domain("0·P is the point at infinity");
    }
    let (x, y) = affine(p)?;
    if y.is_zero() {
        if m.is_multiple_of(2) {
            return domain(format!("{m}·{p} is the point at infinity"));
        }
        return Ok(x);
    }
    let y2 = &y * &y;
    let ring = AtX { x: x.clone(), d: p.curve().d().clone(), y2: y2.clone() };
    let mut psi = Psi::new(&ring);
    let pm = psi.get(m)?;
    if pm.c.is_zero() {
        return domain(format!("{m}·{p} is the point at infinity"));
    }
    let (up, down) = (psi.get(m + 1)?, psi.get(m - 1)?);
    let num = psi.mul(&up, &down);
    let den = psi.mul(&pm, &pm);
    // Both products are y-free by parity.
    Ok(x - num.c / den.c)
}

/// Whether `ψ_m(x) > (1 − exp(C₂ log² m)(D/x)²)·m·x^{(m²−1)/2}` with `y = +√(x³ − D²x)`.
///
/// `x` need not be the abscissa of a rational point. The left side is exact;
/// the exponential is enclosed in a narrow rational interval and the
/// comparison is done after squaring, so it is exact except when the two
/// sides fall inside that interval, which is reported as a numeric error.
pub fn divpoly_lower_bound_check(m: u64, x: &BigRational, d: &BigInt, c2: f64) -> Result<bool> {
    if m == 0 {
        return domain("m must be positive");
    }
    let crit = 3.0 / (2.0 * LN_2);
    if !(c2 > crit) {
        return domain(format!("C2 = {c2} must exceed 3/(2 log 2) = {crit:.6}"));
    }
    let d_q = BigRational::from_integer(d.clone());
    if x <= &d_q || !d.is_positive() {
        return domain(format!("need x > D > 0, got x = {x}, D = {d}"));
    }
    let lm = (m as f64).ln();
    let log_ratio = crate::exact_arith::log_abs(x.numer())
        - crate::exact_arith::log_abs(x.denom())
        - crate::exact_arith::log_abs(d);
    if !(c2 * lm * lm < 2.0 * log_ratio) {
        return domain(format!("C2·log²m = {} is not below 2 log(x/D) = {}", c2 * lm * lm, 2.0 * log_ratio));
    }
    let e = (c2 * lm * lm).exp();
    let pad = 1e-12;
    let to_q = |v: f64| BigRational::from_float(v).ok_or_else(|| Error::Numeric(format!("non-finite exponential {v}")));
    let (e_lo, e_hi) = (to_q(e * (1.0 - pad))?, to_q(e * (1.0 + pad))?);
    let ratio2 = (&d_q / x) * (&d_q / x);
    let f_lo = BigRational::one() - e_hi * &ratio2;
    let f_hi = BigRational::one() - e_lo * &ratio2;
    if !f_lo.is_positive() {
        return Err(Error::Numeric("lower-bound factor not certifiably positive".into()));
    }

    let y2 = x * x * x - &d_q * &d_q * x;
    let ring = AtX { x: x.clone(), d: d.clone(), y2: y2.clone() };
    let v = Psi::new(&ring).get(m)?;
    let mq = BigRational::from_integer(BigInt::from(m));
    // Compare squares: odd m has ψ = c and RHS = F·m·x^k; even m has ψ = c·y and
    // RHS² = (F·m)²·x^{m²−1}.
    if !v.c.is_positive() {
        return Ok(false);
    }
    let (lhs2, base) = if v.has_y {
        (&v.c * &v.c * &y2, num_traits::pow(x.clone(), (m * m - 1) as usize))
    } else {
        let k = ((m * m - 1) / 2) as usize;
        let xk = num_traits::pow(x.clone(), k);
        (&v.c * &v.c, &xk * &xk)
    };
    let rhs2_lo = &f_lo * &f_lo * &mq * &mq * &base;
    let rhs2_hi = &f_hi * &f_hi * &mq * &mq * &base;
    if lhs2 > rhs2_hi {
        Ok(true)
    } else if lhs2 <= rhs2_lo {
        Ok(false)
    } else {
        Err(Error::Numeric(format!("psi_{m} comparison is within the enclosure width")))
    }
}

/// Convenience wrapper for a point on the curve.
pub fn divpoly_lower_bound_check_at(m: u64, p: &CurvePoint, c2: f64) -> Result<bool> {
    let (x, _) = affine(p)?;
    divpoly_lower_bound_check(m, &x, p.curve().d(), c2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterVerdict {
    pub m: u64,
    /// `|ψ_m(x)| > (2D)^{3m²/4}`, which rules out `mP` integral.
    pub excluded_by_bound: bool,
    /// Exact integrality of `x(mP)`.
    pub integral: bool,
}

/// Screens the odd multiples `mP`, `3 ≤ m ≤ m_max` (plus `m = 1`), for integrality.
pub fn small_multiple_filter(p: &CurvePoint, m_max: u64) -> Result<Vec<FilterVerdict>> {
    let (x, _) = affine(p)?;
    if !p.is_integral() {
        return domain(format!("small_multiple_filter needs an integral point, got {p}"));
    }
    let d = p.curve().d();
    if x <= BigRational::from_integer(d.clone()) {
        return domain(format!("small_multiple_filter needs x > D, got {p}"));
    }
    let two_d = d * BigInt::from(2);
    let mut out = vec![FilterVerdict { m: 1, excluded_by_bound: false, integral: true }];
    for m in (3..=m_max).step_by(2) {
        let psi = psi_eval(m, p)?.value;
        let psi_abs = psi.numer().abs();
        let lhs = num_traits::pow(psi_abs, 4);
        let rhs = num_traits::pow(two_d.clone(), (3 * m * m) as usize);
        let excluded_by_bound = lhs > rhs;
        let integral = x_multiple(m, p)?.is_integer();
        if excluded_by_bound && integral {
            return Err(Error::Invariant(format!("{m}·{p} is integral but the bound excluded it")));
        }
        out.push(FilterVerdict { m, excluded_by_bound, integral });
    }
    Ok(out)
}

/// `v_m = √(denominator of x(mP))`, checking `v_m | ψ_m` and
/// `|ψ_m|⁸ ≤ v_m⁸·(2D)^{6m²}` for an integral point. Returns whether both hold.
pub fn stange_sandwich(m: u64, p: &CurvePoint) -> Result<bool> {
    if !p.is_integral() {
        return domain(format!("sandwich check needs an integral point, got {p}"));
    }
    let xm = x_multiple(m, p)?;
    let v =
        exact_sqrt(xm.denom()).ok_or_else(|| Error::Invariant(format!("denominator of x({m}P) is not a square")))?;
    let psi = psi_eval(m, p)?.value;
    if !psi.is_integer() {
        return Err(Error::Invariant(format!("psi_{m} at an integral point is not an integer")));
    }
    let psi = psi.numer().abs();
    if psi.is_zero() || !(&psi % &v).is_zero() {
        return Ok(false);
    }
    let d = p.curve().d();
    let e = (6 * m * m).to_usize().expect("small exponent");
    let lhs = num_traits::pow(psi, 8);
    let rhs = num_traits::pow(v, 8) * num_traits::pow(d * BigInt::from(2), e);
    Ok(lhs <= rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Curve;

    fn pt(d: i64, x: i64, y: i64) -> CurvePoint {
        Curve::new(d).unwrap().point_int(x, y).unwrap()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn psi_examples() {
        let p = pt(6, -3, 9);
        assert_eq!(psi_eval(1, &p).unwrap().value, q(1));
        assert_eq!(psi_eval(2, &p).unwrap().value, q(18));
        assert_eq!(psi_eval(3, &p).unwrap().value, q(-2997));
        assert_eq!(psi_eval(2, &p).unwrap().parity_tag, Parity::Even);
        assert!(psi_eval(2, &pt(6, 6, 0)).is_err());
        assert!(psi_eval(3, &pt(6, 6, 0)).is_ok());
    }

    #[test]
    fn x_multiple_examples() {
        let p = pt(6, -3, 9);
        assert_eq!(x_multiple(1, &p).unwrap(), q(-3));
        assert_eq!(x_multiple(2, &p).unwrap(), BigRational::new(25.into(), 4.into()));
        assert!(x_multiple(2, &pt(6, 0, 0)).is_err());
        assert_eq!(x_multiple(3, &pt(6, 0, 0)).unwrap(), q(0));
    }

    #[test]
    fn x_multiple_matches_group_law() {
        for p in [pt(6, -3, 9), pt(6, 12, 36), pt(5, -4, 6), pt(14, 18, 48), pt(1254, -98, 12376)] {
            let mut acc = p.clone();
            for m in 2..=12 {
                acc = acc.add(&p).unwrap();
                assert_eq!(x_multiple(m, &p).unwrap(), acc.x().unwrap().clone(), "m={m} P={p}");
            }
        }
    }

    #[test]
    fn symbolic_and_pointwise_agree() {
        let p = pt(6, 294, 5040);
        for m in 1..=9u64 {
            let coeffs = psi_polynomial(m, &BigInt::from(6)).unwrap();
            let at = Poly(coeffs.clone()).eval(p.x().unwrap());
            let expected = if m % 2 == 0 { at * p.y().unwrap() } else { at };
            assert_eq!(psi_eval(m, &p).unwrap().value, expected);
            if m % 2 == 1 {
                assert_eq!(coeffs.len() as u64, (m * m - 1) / 2 + 1);
                assert_eq!(coeffs.last().unwrap(), &BigInt::from(m));
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        let d = BigInt::from(6);
        assert!(divpoly_lower_bound_check(2, &q(600), &d, DEFAULT_C2).unwrap());
        assert!(divpoly_lower_bound_check(3, &q(1_000_000), &d, DEFAULT_C2).unwrap());
        assert!(divpoly_lower_bound_check(1, &q(7), &d, DEFAULT_C2).unwrap());
        assert!(divpoly_lower_bound_check(5, &q(7), &d, DEFAULT_C2).is_err());
        assert!(divpoly_lower_bound_check(2, &q(600), &d, 2.0).is_err());
        for m in 2..=20 {
            assert!(divpoly_lower_bound_check(m, &q(10_000_000_000), &d, DEFAULT_C2).unwrap(), "m={m}");
        }
    }

    #[test]
    fn filter_on_pell_point() {
        let p = pt(6, 294, 5040);
        let v = small_multiple_filter(&p, 9).unwrap();
        assert_eq!(v.iter().map(|f| f.m).collect::<Vec<_>>(), vec![1, 3, 5, 7, 9]);
        assert!(v[0].integral);
        assert!(v[1..].iter().all(|f| !f.integral));
        assert!(small_multiple_filter(&pt(6, -3, 9), 5).is_err());
    }

    #[test]
    fn sandwich_small_cases() {
        for p in [pt(6, 294, 5040), pt(6, -3, 9), pt(1254, -1058, 21896)] {
            for m in 1..=9 {
                assert!(stange_sandwich(m, &p).unwrap(), "m={m} P={p}");
            }
        }
    }
}
