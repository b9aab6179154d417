//! Integer and rational primitives shared by the rest of the crate.
//!
//! Big integers and rationals are `num-bigint` / `num-rational` values; this
//! module adds the number-theoretic helpers the curve code needs: integer
//! square roots with a residue pre-filter, squarefree parts, factorization,
//! and logarithms of values too large for `f64`.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Result};

pub use num_rational::BigRational;

/// Trial division bound used before switching to Pollard rho.
const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

/// 64 * 63 * 65 * 11: quadratic-residue filter modulus for square tests.
const RESIDUE_MODULUS: u64 = 64 * 63 * 65 * 11;

struct ResidueTables {
    m64: [bool; 64],
    m63: [bool; 63],
    m65: [bool; 65],
    m11: [bool; 11],
}

fn residue_tables() -> &'static ResidueTables {
    static TABLES: OnceLock<ResidueTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut t = ResidueTables { m64: [false; 64], m63: [false; 63], m65: [false; 65], m11: [false; 11] };
        for i in 0..64u64 {
            t.m64[(i * i % 64) as usize] = true;
            t.m63[(i * i % 63) as usize] = true;
            t.m65[(i * i % 65) as usize] = true;
            t.m11[(i * i % 11) as usize] = true;
        }
        t
    })
}

#[inline]
fn passes_residue_filter(r: u64) -> bool {
    let t = residue_tables();
    t.m64[(r % 64) as usize] && t.m63[(r % 63) as usize] && t.m65[(r % 65) as usize] && t.m11[(r % 11) as usize]
}

/// `⌊√n⌋` for a non-negative big integer.
pub fn isqrt(n: &BigInt) -> Result<BigInt> {
    if n.is_negative() {
        return domain(format!("isqrt of negative value {n}"));
    }
    Ok(n.sqrt())
}

/// Returns `Some(√n)` when `n` is a perfect square.
pub fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = (n % BigInt::from(RESIDUE_MODULUS)).to_u64().unwrap_or(0);
    if !passes_residue_filter(r) {
        return None;
    }
    let root = n.sqrt();
    (&root * &root == *n).then_some(root)
}

pub fn is_square(n: &BigInt) -> bool {
    exact_sqrt(n).is_some()
}

/// `⌊√n⌋` on `u128`.
pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u128;
    // f64 is only accurate to ~53 bits; correct in both directions.
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Returns `Some(√n)` when `n` is a perfect square.
#[inline]
pub fn exact_sqrt_u128(n: u128) -> Option<u128> {
    if !passes_residue_filter((n % RESIDUE_MODULUS as u128) as u64) {
        return None;
    }
    let r = isqrt_u128(n);
    (r * r == n).then_some(r)
}

/// Squarefree `d` with `n = d·m²`; the sign of `n` is kept.
pub fn squarefree_part(n: &BigInt) -> Result<BigInt> {
    if n.is_zero() {
        return domain("squarefree part of zero");
    }
    let (fact, _) = factor_omega(&n.abs())?;
    let mut d = BigInt::one();
    for (p, e) in fact.iter() {
        if e % 2 == 1 {
            d *= p;
        }
    }
    if n.is_negative() {
        d = -d;
    }
    Ok(d)
}

/// Square class of a nonzero rational `r/s`, represented by `squarefree_part(r·s)`.
pub fn rational_square_class(q: &BigRational) -> Result<BigInt> {
    squarefree_part(&(q.numer() * q.denom()))
}

/// Squarefree part of `n` when every prime with odd exponent is known to lie in
/// `primes`. Returns `None` if the cofactor is not a perfect square, meaning the
/// assumption was wrong.
pub fn squarefree_part_over(n: &BigInt, primes: &[BigInt]) -> Option<BigInt> {
    if n.is_zero() {
        return None;
    }
    let mut rest = n.abs();
    let mut d = BigInt::one();
    for p in primes {
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(p);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e % 2 == 1 {
            d *= p;
        }
    }
    if !is_square(&rest) {
        return None;
    }
    if n.is_negative() {
        d = -d;
    }
    Some(d)
}

/// Prime factorization with strictly increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    factors: Vec<(BigInt, u32)>,
}

impl Factorization {
    fn from_primes(mut primes: Vec<BigInt>) -> Self {
        primes.sort();
        let mut factors: Vec<(BigInt, u32)> = Vec::new();
        for p in primes {
            match factors.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => factors.push((p, 1)),
            }
        }
        Factorization { factors }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BigInt, u32)> {
        self.factors.iter().map(|(p, e)| (p, *e))
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigInt> {
        self.factors.iter().map(|(p, _)| p)
    }

    /// Number of distinct primes.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|(_, e)| *e == 1)
    }

    /// Product of the prime powers.
    pub fn value(&self) -> BigInt {
        self.factors.iter().fold(BigInt::one(), |acc, (p, e)| acc * num_traits::pow(p.clone(), *e as usize))
    }

    /// All positive divisors that are products of distinct primes, ascending.
    pub fn squarefree_divisors(&self) -> Vec<BigInt> {
        let mut divs = vec![BigInt::one()];
        for (p, _) in &self.factors {
            let extra: Vec<BigInt> = divs.iter().map(|d| d * p).collect();
            divs.extend(extra);
        }
        divs.sort();
        divs
    }
}

/// Factor `n ≥ 1`, returning the factorization and its number of distinct primes.
pub fn factor_omega(n: &BigInt) -> Result<(Factorization, usize)> {
    if n.sign() != Sign::Plus {
        return domain(format!("factor_omega requires n >= 1, got {n}"));
    }
    let primes: Vec<BigInt> = match n.to_u64() {
        Some(small) => factor_u64(small).into_iter().map(BigInt::from).collect(),
        None => factor_big(n),
    };
    let f = Factorization::from_primes(primes);
    let omega = f.omega();
    Ok((f, omega))
}

/// Prime factors of `n` with multiplicity, ascending. `factor_u64(1)` is empty.
pub fn factor_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    while n.is_multiple_of(2) {
        out.push(2);
        n /= 2;
    }
    let mut p = 3u64;
    while p <= TRIAL_DIVISION_LIMIT && p * p <= n {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 2;
    }
    if n > 1 {
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            if m == 1 {
                continue;
            }
            if is_prime_u64(m) {
                out.push(m);
            } else {
                let f = rho_u64(m);
                stack.push(f);
                stack.push(m / f);
            }
        }
    }
    out.sort_unstable();
    out
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's variant of Pollard rho; `n` must be odd and composite. The
/// polynomial constant runs 1, 2, 3, ... so results are deterministic.
fn rho_u64(n: u64) -> u64 {
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            g = x.abs_diff(y).gcd(&n);
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn is_probable_prime_big(n: &BigInt) -> bool {
    let one = BigInt::one();
    let two = BigInt::from(2);
    if *n < two {
        return false;
    }
    for &p in &MR_BASES {
        let bp = BigInt::from(p);
        if (n % &bp).is_zero() {
            return *n == bp;
        }
    }
    let n1 = n - &one;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    'witness: for &a in &MR_BASES {
        let mut x = BigInt::from(a).modpow(&d, n);
        if x == one || x == n1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn rho_big(n: &BigInt) -> BigInt {
    let mut c = BigInt::one();
    loop {
        let f = |x: &BigInt| (x * x + &c) % n;
        let (mut x, mut y, mut g) = (BigInt::from(2), BigInt::from(2), BigInt::one());
        while g.is_one() {
            x = f(&x);
            y = f(&f(&y));
            g = (&x - &y).abs().gcd(n);
        }
        if &g != n {
            return g;
        }
        c += 1;
    }
}

fn factor_big(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut n = n.clone();
    let mut p = 2u64;
    while p <= TRIAL_DIVISION_LIMIT {
        let bp = BigInt::from(p);
        if &bp * &bp > n {
            break;
        }
        loop {
            let (q, r) = n.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            out.push(bp.clone());
            n = q;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if let Some(small) = m.to_u64() {
            out.extend(factor_u64(small).into_iter().map(BigInt::from));
        } else if is_probable_prime_big(&m) {
            out.push(m);
        } else {
            let f = rho_big(&m);
            stack.push(&m / &f);
            stack.push(f);
        }
    }
    out
}

/// Natural log of `|n|`, valid far beyond the `f64` range. `log_abs(0)` is `-inf`.
pub fn log_abs(n: &BigInt) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `log max(|numerator|, denominator)`: the Weil height of a rational.
pub fn rational_height(q: &BigRational) -> f64 {
    let n = q.numer().abs();
    let d = q.denom();
    if n >= *d {
        log_abs(&n)
    } else {
        log_abs(d)
    }
}

/// `a/b` as `f64` without overflow in the intermediate conversion.
pub fn ratio_to_f64(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let sign = if a.sign() == b.sign() { 1.0 } else { -1.0 };
    sign * (log_abs(a) - log_abs(b)).exp()
}

/// Precise `a/b` for values of moderate size: scales by 2^k before dividing so
/// the result keeps full `f64` precision.
pub fn ratio_to_f64_precise(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let (ab, bb) = (a.bits() as i64, b.bits() as i64);
    let shift = 64 - (ab - bb);
    let q = if shift >= 0 { (a << shift as u64) / b } else { (a >> (-shift) as u64) / b };
    let qf = q.to_f64().unwrap_or(f64::NAN);
    qf * 2f64.powi(-shift as i32)
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    ratio_to_f64_precise(q.numer(), q.denom())
}
