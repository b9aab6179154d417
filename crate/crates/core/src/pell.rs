//! Pell equations and the integral points in the torsion cosets.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::curve::{Curve, CurvePoint};
use crate::error::{domain, Error, Result};
use crate::exact_arith::{exact_sqrt, is_square, isqrt, BigRational};
use crate::point_search::{enumerate_integral_points, IntegralPointRecord};
use crate::ser;

/// The one parameter for which uniqueness of `s⁴ − D·(2uv)² = 1` has an exception.
pub const COHN_EXCEPTION: u64 = 1785;

/// Odd `k` covered by the direct search over `s_k = ((1+√2)ᵏ + (1−√2)ᵏ)/2`.
pub const FAMILY_MAX_K: u32 = 61;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PellFundamental {
    #[serde(with = "ser::bigint")]
    pub d: BigInt,
    #[serde(with = "ser::bigint")]
    pub v: BigInt,
    #[serde(with = "ser::bigint")]
    pub u: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DoublePellSolution {
    #[serde(with = "ser::bigint")]
    pub s: BigInt,
    #[serde(with = "ser::bigint")]
    pub u: BigInt,
    #[serde(with = "ser::bigint")]
    pub v: BigInt,
}

/// Minimal `(v, u)`, `u ≥ 1`, with `v² − D·u² = 1`, from the continued fraction of `√D`.
pub fn pell_fundamental(d: &BigInt) -> Result<PellFundamental> {
    if !d.is_positive() || is_square(d) {
        return domain(format!("Pell equation needs a positive non-square D, got {d}"));
    }
    let a0 = isqrt(d)?;
    let (mut m, mut q, mut a) = (BigInt::zero(), BigInt::one(), a0.clone());
    // Convergents h/k.
    let (mut h_prev, mut h) = (BigInt::one(), a0.clone());
    let (mut k_prev, mut k) = (BigInt::zero(), BigInt::one());
    loop {
        if &h * &h - d * &k * &k == BigInt::one() {
            return Ok(PellFundamental { d: d.clone(), v: h, u: k });
        }
        m = &q * &a - &m;
        q = (d - &m * &m) / &q;
        a = (&a0 + &m) / &q;
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
    }
}

/// The solution of `s² − 1 = 2Du²`, `s² + 1 = 2v²`, if any.
///
/// Any solution has `s² + 2uv√D = (v + u√D)²` with `(v, u)` fundamental, so only
/// `s² = 2v² − 1` for the fundamental `v` needs testing.
pub fn solve_double_pell(d: &BigInt) -> Result<Option<DoublePellSolution>> {
    if !d.is_positive() {
        return domain(format!("D must be positive, got {d}"));
    }
    if is_square(d) {
        return Ok(None);
    }
    let PellFundamental { v, u, .. } = pell_fundamental(d)?;
    let two_v2_minus_1 = BigInt::from(2) * &v * &v - 1;
    let Some(s) = exact_sqrt(&two_v2_minus_1) else {
        return Ok(None);
    };
    if &s * &s - 1 != BigInt::from(2) * d * &u * &u {
        return Err(Error::Invariant(format!("double Pell candidate s = {s} fails s^2 - 1 = 2Du^2")));
    }
    Ok(Some(DoublePellSolution { s, u, v }))
}

/// The non-torsion integral point in the coset of `(D, 0)`, when one exists:
/// `x = D·s² = (2v² − 1)D`.
pub fn ptors_extra(d: &BigInt) -> Result<Option<CurvePoint>> {
    let Some(sol) = solve_double_pell(d)? else {
        return Ok(None);
    };
    let curve = Curve::new(d.clone())?;
    let x = d * &sol.s * &sol.s;
    let rhs = &x * &x * &x - d * d * &x;
    let y = exact_sqrt(&rhs)
        .ok_or_else(|| Error::Invariant(format!("x = {x} from the Pell solution is not on {curve}")))?;
    let p = curve
        .point(BigRational::from_integer(x), BigRational::from_integer(y))
        .map_err(|e| Error::Invariant(e.to_string()))?;
    let t = curve.point_int(d.clone(), 0)?;
    if !p.same_coset(&t)? {
        return Err(Error::Invariant(format!("{p} is not in the coset of (D, 0)")));
    }
    Ok(Some(p))
}

/// `s_k = ((1+√2)ᵏ + (1−√2)ᵏ)/2` for `k = 0, 1, …, k_max`.
pub fn sqrt2_family(k_max: u32) -> Vec<BigInt> {
    // s_k satisfies s_{k+1} = 2 s_k + s_{k-1}.
    let mut out = vec![BigInt::one(), BigInt::one()];
    while out.len() <= k_max as usize {
        let n = out.len();
        let next = BigInt::from(2) * &out[n - 1] + &out[n - 2];
        out.push(next);
    }
    out.truncate(k_max as usize + 1);
    out
}

/// All odd-index members `s_k`, `k ≤ k_max`, of the √2 family with `(s² − 1)/(2D)` a
/// nonzero perfect square. Every solution of the double Pell system appears here.
pub fn family_search(d: &BigInt, k_max: u32) -> Vec<BigInt> {
    let two_d = BigInt::from(2) * d;
    sqrt2_family(k_max)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 1)
        .map(|(_, s)| s)
        .filter(|s| {
            let num: BigInt = s * s - 1;
            num.is_positive() && (&num % &two_d).is_zero() && is_square(&(num / &two_d))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorsionAuditReport {
    #[serde(with = "ser::bigint")]
    pub d: BigInt,
    #[serde(with = "ser::bigint")]
    pub x_max: BigInt,
    /// Points in the coset of `O`.
    pub identity_coset: Vec<IntegralPointRecord>,
    /// Non-torsion points sharing θ with `(0, 0)` or `(−D, 0)`.
    pub ntors_coset: Vec<IntegralPointRecord>,
    /// Non-torsion points sharing θ with `(D, 0)`.
    pub ptors_coset: Vec<IntegralPointRecord>,
    #[serde(with = "ser::opt_bigint")]
    pub pell_x: Option<BigInt>,
    /// Result of the direct √2-family search, recorded for the exceptional parameter.
    #[serde(with = "ser::vec_bigint")]
    pub family_solutions: Vec<BigInt>,
    pub passes: bool,
}

/// Checks the torsion-coset claims against an exhaustive enumeration up to `x_max`.
pub fn torsion_coset_audit(d: &BigInt, x_max: &BigInt) -> Result<TorsionAuditReport> {
    let curve = Curve::new(d.clone())?;
    let records = enumerate_integral_points(d, x_max)?;
    audit_records(&curve, x_max, &records)
}

/// Same as [`torsion_coset_audit`] on an existing enumeration.
pub fn audit_records(curve: &Curve, x_max: &BigInt, records: &[IntegralPointRecord]) -> Result<TorsionAuditReport> {
    let d = curve.d().clone();
    let torsion = curve.torsion_points();
    let keys: Vec<_> = torsion.iter().map(|t| t.theta()).collect::<Result<_>>()?;
    let (id_key, zero_key, plus_key, minus_key) = (&keys[0], &keys[1], &keys[2], &keys[3]);

    let nontorsion = |r: &&IntegralPointRecord| !r.y.is_zero();
    let identity_coset: Vec<_> = records.iter().filter(|r| &r.coset_key == id_key).cloned().collect();
    let ntors_coset: Vec<_> = records
        .iter()
        .filter(nontorsion)
        .filter(|r| &r.coset_key == zero_key || &r.coset_key == minus_key)
        .cloned()
        .collect();
    let ptors_coset: Vec<_> = records.iter().filter(nontorsion).filter(|r| &r.coset_key == plus_key).cloned().collect();

    let pell_x = ptors_extra(&d)?.map(|p| p.x().expect("affine").numer().clone());
    let family_solutions = if d == BigInt::from(COHN_EXCEPTION) { family_search(&d, FAMILY_MAX_K) } else { Vec::new() };

    let ptors_ok = match (ptors_coset.as_slice(), &pell_x) {
        ([], None) => true,
        ([], Some(px)) => px > x_max,
        ([only], Some(px)) => &only.x == px,
        _ => false,
    };
    let family_ok =
        family_solutions.len() <= 1 && family_solutions.first().is_none_or(|s| pell_x.as_ref() == Some(&(&d * s * s)));
    let passes = identity_coset.is_empty() && ntors_coset.is_empty() && ptors_ok && family_ok;
    Ok(TorsionAuditReport {
        d,
        x_max: x_max.clone(),
        identity_coset,
        ntors_coset,
        ptors_coset,
        pell_x,
        family_solutions,
        passes,
    })
}
