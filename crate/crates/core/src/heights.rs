//! Weil and canonical heights on `E_D(ℚ)`.
//!
//! Heights use the normalization `h(P) = log max(|r|, s)` for `x(P) = r/s`,
//! and `ĥ(P) = lim h(2ⁿP)/4ⁿ`. Some references carry an extra factor of 1/2;
//! multiply by 1/2 before comparing with them.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::curve::CurvePoint;
use crate::error::{domain, Error, Result};
use crate::exact_arith::{log_abs, ratio_to_f64_precise, rational_height};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Smallest tolerance we are willing to certify in double precision.
const MIN_TOL: f64 = 1e-13;

/// Exact doublings allowed before the series must be in its stable regime.
const MAX_EXACT_DOUBLINGS: u32 = 4;

pub const X_GE_D: &str = "x_ge_d_envelope";
pub const NEGATIVE_X: &str = "negative_x_envelope";
pub const DOUBLING: &str = "doubling_envelope";
pub const DOUBLE_LOWER: &str = "double_lower_bound";
pub const LANG_LOWER: &str = "lang_lower_bound";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightReport {
    pub weil: f64,
    pub canonical: f64,
    pub error_radius: f64,
    pub envelope_verdicts: BTreeMap<String, bool>,
}

impl HeightReport {
    pub fn all_pass(&self) -> bool {
        self.envelope_verdicts.values().all(|&v| v)
    }
}

/// `log max(|r|, s)` for `x(P) = r/s`; zero at infinity.
pub fn weil_height(p: &CurvePoint) -> f64 {
    p.x().map_or(0.0, rational_height)
}

/// `x = r/s` is in the regime where no later doubling cancels anything:
/// `r` odd, `s` even and `gcd(r, D) = 1`. From there on
/// `h(2Q) = 4h(Q) + 2 log(1 + t²)` with `t = Ds/r`.
fn is_stable(r: &BigInt, s: &BigInt, d: &BigInt) -> bool {
    r.is_positive() && r.is_odd() && s.is_even() && r.gcd(d).is_one()
}

/// Canonical height with a certified error radius `≤ tol`.
pub fn canonical_height(p: &CurvePoint, tol: f64) -> Result<HeightReport> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if tol < MIN_TOL {
        return Err(Error::Precision(format!("tolerance {tol:e} is below the certifiable floor {MIN_TOL:e}")));
    }
    let weil = weil_height(p);
    if p.is_torsion() {
        return Ok(HeightReport { weil, canonical: 0.0, error_radius: 0.0, envelope_verdicts: BTreeMap::new() });
    }
    let d = p.curve().d().clone();

    let mut q = p.clone();
    let mut k = 0u32;
    loop {
        let x = q.x().expect("non-torsion point is affine");
        if is_stable(x.numer(), x.denom(), &d) {
            break;
        }
        if k == MAX_EXACT_DOUBLINGS {
            return Err(Error::Invariant(format!("no stable doubling of {p} after {MAX_EXACT_DOUBLINGS} steps")));
        }
        q = q.double();
        k += 1;
    }
    let x = q.x().expect("affine");
    let (r, s) = (x.numer(), x.denom());
    let h_q = log_abs(r);
    let scale = 4f64.powi(k as i32);

    // Tail after n terms is at most 4^{-n}(log D + 4.6), divided by 4^k.
    let tail_const = log_abs(&d) + 4.6;
    let mut t = ratio_to_f64_precise(&(&d * s), r);
    let mut sum = 0.0;
    let mut weight = 1.0;
    let mut n = 0u32;
    let rounding = |n: u32, sum: f64| 8.0 * f64::EPSILON * (h_q + sum + 1.0 + 4.0 * n as f64) / scale;
    while tail_const * weight / scale + rounding(n, sum) > tol / 2.0 {
        sum += 0.5 * weight * (t * t).ln_1p();
        let t2 = t * t;
        t = 4.0 * t * (1.0 - t2) / ((1.0 + t2) * (1.0 + t2));
        weight *= 0.25;
        n += 1;
        if n > 200 {
            return Err(Error::Precision(format!("series did not reach tolerance {tol:e}")));
        }
    }
    let error_radius = tail_const * weight / scale + rounding(n, sum);
    if error_radius > tol {
        return Err(Error::Precision(format!("rounding error {error_radius:e} exceeds tolerance {tol:e}")));
    }
    Ok(HeightReport { weil, canonical: (h_q + sum) / scale, error_radius, envelope_verdicts: BTreeMap::new() })
}

/// Evaluates every applicable height inequality for a non-torsion point.
pub fn height_gap_report(p: &CurvePoint) -> Result<HeightReport> {
    height_gap_report_with_tol(p, DEFAULT_TOL)
}

pub fn height_gap_report_with_tol(p: &CurvePoint, tol: f64) -> Result<HeightReport> {
    if p.is_torsion() {
        return domain(format!("height envelopes need a non-torsion point, got {p}"));
    }
    let mut report = canonical_height(p, tol)?;
    let two_p = p.double();
    let report2 = canonical_height(&two_p, tol)?;
    let (h, hh, err) = (report.weil, report.canonical, report.error_radius);
    let d = p.curve().d();
    let log_d = log_abs(d);
    let x = p.x().expect("affine");
    let g = x.numer().gcd(d);
    let log_g = log_abs(&g);
    let within = |v: f64, lo: f64, hi: f64, slack: f64| v >= lo - slack && v <= hi + slack;

    let mut verdicts = BTreeMap::new();
    let diff = hh - h;
    if x.numer().is_positive() {
        let base = -log_g;
        verdicts.insert(X_GE_D.to_string(), within(diff, base - 2.0 * LN_2, base + 2.0 / 3.0 * LN_2, err));
    } else {
        let log_plus = rational_abs_log_plus(x);
        let base = log_d - log_g - log_plus;
        verdicts.insert(NEGATIVE_X.to_string(), within(diff, base - 2.0 * LN_2, base + 2.0 / 3.0 * LN_2, err));
    }
    let h2 = weil_height(&two_p);
    verdicts.insert(DOUBLING.to_string(), within(4.0 * hh - h2, -2.0 * LN_2, 2.0 / 3.0 * LN_2, 4.0 * err));
    verdicts.insert(DOUBLE_LOWER.to_string(), report2.canonical + report2.error_radius >= log_d - 2.0 * LN_2);
    verdicts.insert(LANG_LOWER.to_string(), hh + err >= 0.25 * log_d - 0.5 * LN_2);
    report.envelope_verdicts = verdicts;
    Ok(report)
}

/// `log⁺|x| = max(0, log|x|)`.
fn rational_abs_log_plus(x: &crate::BigRational) -> f64 {
    let (r, s) = (x.numer().abs(), x.denom());
    if r > *s {
        log_abs(&r) - log_abs(s)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Curve;
    use crate::BigRational;

    fn pt(d: i64, x: i64, y: i64) -> CurvePoint {
        Curve::new(d).unwrap().point_int(x, y).unwrap()
    }

    #[test]
    fn weil_examples() {
        let c = Curve::new(6).unwrap();
        assert_eq!(weil_height(&pt(6, 294, 5040)), 294f64.ln());
        assert_eq!(weil_height(&c.infinity()), 0.0);
        let q = c.point(BigRational::new(25.into(), 4.into()), BigRational::new((-35).into(), 8.into())).unwrap();
        assert_eq!(weil_height(&q), 25f64.ln());
    }

    #[test]
    fn torsion_is_zero() {
        for t in Curve::new(6).unwrap().torsion_points() {
            let rep = canonical_height(&t, DEFAULT_TOL).unwrap();
            assert_eq!(rep.canonical, 0.0);
        }
    }

    #[test]
    fn envelope_for_pell_point() {
        let rep = canonical_height(&pt(6, 294, 5040), DEFAULT_TOL).unwrap();
        assert!(rep.canonical > 2.5055 && rep.canonical < 4.3539, "{}", rep.canonical);
        assert!(rep.error_radius <= DEFAULT_TOL);
    }

    /// `|ĥ(P) − h(2ᵏP)/4ᵏ| ≤ 2 log 2 / 4ᵏ` for `k ≥ 1`, computed exactly.
    #[test]
    fn agrees_with_exact_doubling_oracle() {
        for p in [pt(6, -3, 9), pt(6, 294, 5040), pt(1254, -98, 12376), pt(5, -4, 6), pt(14, 18, 48)] {
            let rep = canonical_height(&p, DEFAULT_TOL).unwrap();
            let mut q = p.clone();
            for k in 1..=4 {
                q = q.double();
                let approx = weil_height(&q) / 4f64.powi(k);
                assert!(
                    (rep.canonical - approx).abs() <= 2.0 * LN_2 / 4f64.powi(k) + 1e-12,
                    "{p} k={k}: {} vs {approx}",
                    rep.canonical
                );
            }
        }
    }

    #[test]
    fn gap_report_examples() {
        for p in [pt(6, 294, 5040), pt(6, -3, 9), pt(1254, -98, 12376)] {
            let rep = height_gap_report(&p).unwrap();
            assert!(rep.all_pass(), "{p}: {:?}", rep.envelope_verdicts);
        }
        let rep = height_gap_report(&pt(6, -3, 9)).unwrap();
        assert!(rep.envelope_verdicts.contains_key(NEGATIVE_X));
        assert!(height_gap_report(&pt(6, 6, 0)).is_err());
    }

    #[test]
    fn quadratic_and_torsion_invariant() {
        let p = pt(1254, -1058, 21896);
        let h1 = canonical_height(&p, DEFAULT_TOL).unwrap().canonical;
        for m in 2..=5i64 {
            let hm = canonical_height(&p.scalar_mul(m), DEFAULT_TOL).unwrap().canonical;
            assert!((hm - (m * m) as f64 * h1).abs() <= (m * m) as f64 * DEFAULT_TOL, "m={m}");
        }
        for t in p.curve().torsion_points() {
            let ht = canonical_height(&p.add(&t).unwrap(), DEFAULT_TOL).unwrap().canonical;
            assert!((ht - h1).abs() <= 2.0 * DEFAULT_TOL);
        }
    }

    #[test]
    fn precision_floor() {
        let p = pt(6, 294, 5040);
        assert!(matches!(canonical_height(&p, 1e-15), Err(Error::Precision(_))));
        assert!(canonical_height(&p, 0.0).is_err());
        assert!(canonical_height(&p, 1e-12).is_ok());
    }
}
