//! Numeric audit of the explicit constant chains behind the large-point count.
//!
//! Each checked quantity is evaluated in `f64` and, independently, as an
//! [`Interval`] with exact rational endpoints (square roots enclosed at 256
//! bits). An item passes only when both agree that the relation holds.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::exact_arith::{log_abs, rational_to_f64, BigRational};
use crate::interval::Interval;

pub const DEFAULT_EPSILON: f64 = 0.00153;
pub const DEFAULT_LAMBDA: f64 = 0.000137;
pub const DEFAULT_DELTA: f64 = 0.0000684;
pub const DEFAULT_KAPPA: f64 = 7.516;
pub const DEFAULT_M: f64 = 276.1;
pub const DEFAULT_C: f64 = 0.861;
pub const DEFAULT_DEGREE: u32 = 4;
/// Bound on the number of large points per coset.
pub const LARGE_POINT_CAP: u32 = 30;
/// Bound on the number of medium-range points per coset.
pub const A1_CAP: u32 = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Relation::Lt => a < b,
            Relation::Gt => a > b,
            Relation::Le => a <= b,
            Relation::Ge => a >= b,
        }
    }

    fn certified(self, a: &Interval, b: &Interval) -> bool {
        match self {
            Relation::Lt => a.certainly_lt(b),
            Relation::Gt => a.certainly_gt(b),
            Relation::Le => a.hi() <= b.lo(),
            Relation::Ge => a.lo() >= b.hi(),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditItem {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub computed: f64,
    pub threshold: f64,
    pub relation: Relation,
    /// `computed relation threshold` in `f64`.
    pub verdict: bool,
    /// Rigorous enclosure of the computed value.
    pub enclosure: (f64, f64),
    /// The relation holds for every point of the enclosure.
    pub certified: bool,
    /// `|computed − threshold| / |threshold|`.
    pub relative_margin: f64,
}

impl AuditItem {
    fn new(
        name: &str,
        inputs: &[(&str, f64)],
        computed: (f64, Interval),
        threshold: (f64, Interval),
        relation: Relation,
    ) -> AuditItem {
        let (value, enclosure) = computed;
        let (bound, bound_exact) = threshold;
        AuditItem {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            computed: value,
            threshold: bound,
            relation,
            verdict: relation.holds(value, bound),
            enclosure: (rational_to_f64(enclosure.lo()), rational_to_f64(enclosure.hi())),
            certified: relation.certified(&enclosure, &bound_exact),
            relative_margin: (value - bound).abs() / bound.abs(),
        }
    }

    pub fn passes(&self) -> bool {
        self.verdict && self.certified
    }
}

/// Exact enclosure of an `f64` input.
fn exact(v: f64) -> Result<Interval> {
    BigRational::from_float(v).map(Interval::point).ok_or_else(|| Error::Domain(format!("non-finite input {v}")))
}

/// Lower bound for `x(P ± Q)` relative to `x` when `D < x ≤ X`.
pub fn sum_lower_bound(x: f64, big_x: f64, d: f64) -> Result<f64> {
    if !(d > 0.0 && d < x && x <= big_x) {
        return domain(format!("need 0 < D < x <= X, got D={d}, x={x}, X={big_x}"));
    }
    let b = big_x / x;
    let mu = (d / x).powi(2);
    let ratio = (b + mu) / ((b * b - mu).sqrt() + (b * (1.0 - mu)).sqrt());
    Ok(ratio * ratio * x)
}

/// `x(2Q)/x(Q) = (1 + μ²)²/(4(1 − μ²))` with `μ = D/x`.
pub fn double_ratio(x: f64, d: f64) -> Result<f64> {
    if !(d > 0.0 && x > d) {
        return domain(format!("need x > D > 0, got x={x}, D={d}"));
    }
    let mu2 = (d / x).powi(2);
    Ok((1.0 + mu2).powi(2) / (4.0 * (1.0 - mu2)))
}

/// Exact version of [`double_ratio`].
pub fn double_ratio_exact(x: &BigInt, d: &BigInt) -> Result<BigRational> {
    if !(d > &BigInt::from(0) && x > d) {
        return domain(format!("need x > D > 0, got x={x}, D={d}"));
    }
    let (x2, d2) = (x * x, d * d);
    let num: BigInt = (&x2 + &d2) * (&x2 + &d2);
    Ok(BigRational::new(num, BigInt::from(4) * &x2 * (&x2 - &d2)))
}

/// `8(1 − 63λ − 418δ)/((1 + √λ)²(1 + δ) + 16δ)`.
pub fn roth_exponent(lambda: f64, delta: f64) -> f64 {
    8.0 * (1.0 - 63.0 * lambda - 418.0 * delta) / ((1.0 + lambda.sqrt()).powi(2) * (1.0 + delta) + 16.0 * delta)
}

fn roth_exponent_interval(lambda: f64, delta: f64) -> Result<Interval> {
    let (l, d) = (exact(lambda)?, exact(delta)?);
    let one = Interval::int(1);
    let num = &Interval::int(8) * &(&(&one - &(&Interval::int(63) * &l)) - &(&Interval::int(418) * &d));
    let s = &one + &l.sqrt()?;
    let den = &(&(&s * &s) * &(&one + &d)) + &(&Interval::int(16) * &d);
    &num / &den
}

fn check_kappa_inputs(m: u32, big_m: f64, c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return domain(format!("c must lie in (0, 1), got {c}"));
    }
    if !(big_m >= 72.0) {
        return domain(format!("M must be at least 72, got {big_m}"));
    }
    if m == 0 {
        return domain("degree m must be positive");
    }
    Ok(())
}

/// `(c − 4√(m/M))⁻¹ (1 + (c⁻² + 1)/M) √(2m)`.
pub fn kappa_threshold(m: u32, big_m: f64, c: f64) -> Result<f64> {
    check_kappa_inputs(m, big_m, c)?;
    let mf = m as f64;
    let gap = c - 4.0 * (mf / big_m).sqrt();
    if !(gap > 0.0) {
        return domain(format!("c - 4 sqrt(m/M) = {gap} is not positive"));
    }
    Ok((1.0 + (c.powi(-2) + 1.0) / big_m) * (2.0 * mf).sqrt() / gap)
}

fn kappa_threshold_interval(m: u32, big_m: f64, c: f64) -> Result<Interval> {
    check_kappa_inputs(m, big_m, c)?;
    let (mi, bm, ci) = (Interval::int(m as i64), exact(big_m)?, exact(c)?);
    let gap = &ci - &(&Interval::int(4) * &(&mi / &bm)?.sqrt()?);
    if !gap.certainly_gt(&Interval::int(0)) {
        return domain("c - 4 sqrt(m/M) is not certifiably positive");
    }
    let c_inv2 = (&ci * &ci).recip()?;
    let factor = &Interval::int(1) + &(&(&c_inv2 + &Interval::int(1)) / &bm)?;
    &(&factor * &(&Interval::int(2) * &mi).sqrt()?) / &gap
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargePointBudget {
    /// Smallest `t` with `(κ − 1)ᵗ > M`.
    pub t: u32,
    /// Largest `s` with `3^{s−1}` below the medium-range bound.
    pub s: u32,
    pub medium_bound: f64,
    /// Bound on the medium-range points, `2s`.
    pub a1_bound: u32,
    /// `2s + t − 1`.
    pub budget: u32,
}

/// `(1 + 9/ε) M / ((c⁻² − 1)((1 − √λ)²(1 − δ) − 16δ))`.
pub fn medium_bound(eps: f64, lambda: f64, delta: f64, big_m: f64, c: f64) -> f64 {
    (1.0 + 9.0 / eps) * big_m / ((c.powi(-2) - 1.0) * ((1.0 - lambda.sqrt()).powi(2) * (1.0 - delta) - 16.0 * delta))
}

fn medium_bound_interval(eps: f64, lambda: f64, delta: f64, big_m: f64, c: f64) -> Result<Interval> {
    let one = Interval::int(1);
    let (e, l, d, bm, ci) = (exact(eps)?, exact(lambda)?, exact(delta)?, exact(big_m)?, exact(c)?);
    let num = &(&one + &(&Interval::int(9) / &e)?) * &bm;
    let s = &one - &l.sqrt()?;
    let chain = &(&(&s * &s) * &(&one - &d)) - &(&Interval::int(16) * &d);
    let den = &(&(&ci * &ci).recip()? - &one) * &chain;
    &num / &den
}

pub fn large_point_budget(
    eps: f64,
    lambda: f64,
    delta: f64,
    kappa: f64,
    big_m: f64,
    c: f64,
) -> Result<LargePointBudget> {
    for (name, v) in [("epsilon", eps), ("lambda", lambda), ("delta", delta), ("kappa", kappa), ("M", big_m), ("c", c)]
    {
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("{name} must be positive, got {v}"));
        }
    }
    if c >= 1.0 {
        return domain(format!("c must be below 1, got {c}"));
    }
    if kappa <= 2.0 {
        return Err(Error::Numeric(format!("kappa = {kappa} <= 2: (kappa - 1)^t never exceeds M")));
    }
    let mut t = 1u32;
    while (kappa - 1.0).powi(t as i32) <= big_m {
        t += 1;
    }
    let bound = medium_bound(eps, lambda, delta, big_m, c);
    if !(bound > 1.0) {
        return Err(Error::Numeric(format!("medium-range bound {bound} admits no s")));
    }
    let mut s = 1u32;
    while 3f64.powi(s as i32) < bound {
        s += 1;
    }
    Ok(LargePointBudget { t, s, medium_bound: bound, a1_bound: 2 * s, budget: 2 * s + t - 1 })
}

/// `log X − 3 log x + 4 log D` for consecutive x-coordinates.
pub fn repulsion_margin(xs: &[BigInt], d: &BigInt) -> Vec<f64> {
    let mut sorted = xs.to_vec();
    sorted.sort();
    let log_d = log_abs(d);
    sorted.windows(2).map(|w| log_abs(&w[1]) - 3.0 * log_abs(&w[0]) + 4.0 * log_d).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbcCeiling {
    /// `2(1 + 5ε)`.
    pub exponent: f64,
    /// `2(1 + ε)/(1 − 3ε)`.
    pub intermediate: f64,
}

pub fn abc_ceiling(eps: f64) -> Result<AbcCeiling> {
    if !(eps > 0.0 && eps < 1.0 / 15.0) {
        return domain(format!("epsilon {eps} outside (0, 1/15)"));
    }
    Ok(AbcCeiling { exponent: 2.0 * (1.0 + 5.0 * eps), intermediate: 2.0 * (1.0 + eps) / (1.0 - 3.0 * eps) })
}

/// `h₂ ≥ −2 log 2 + (κ − 1) h₁`.
pub fn strong_gap_check(h1: f64, h2: f64, kappa: f64) -> bool {
    h2 >= -2.0 * std::f64::consts::LN_2 + (kappa - 1.0) * h1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaConstraint {
    pub lambda: f64,
    pub s: u32,
    /// `(1 + ε)/(3^{s−1} ε)`.
    pub required_with_s_minus_1: f64,
    /// `(1 + ε)/(3^s ε)`.
    pub required_with_s: f64,
}

/// Both readings of the lower constraint on λ, recorded without a verdict.
pub fn lambda_constraint(eps: f64, lambda: f64, s: u32) -> LambdaConstraint {
    let f = |e: i32| (1.0 + eps) / (3f64.powi(e) * eps);
    LambdaConstraint { lambda, s, required_with_s_minus_1: f(s as i32 - 1), required_with_s: f(s as i32) }
}

fn pow_interval(base: f64, e: u32) -> Result<(f64, Interval)> {
    Ok((base.powi(e as i32), exact(base)?.powi(e)))
}

/// The audit with the default constant set.
pub fn default_audit() -> Result<Vec<AuditItem>> {
    let (eps, lambda, delta) = (DEFAULT_EPSILON, DEFAULT_LAMBDA, DEFAULT_DELTA);
    let (kappa, big_m, c, m) = (DEFAULT_KAPPA, DEFAULT_M, DEFAULT_C, DEFAULT_DEGREE);
    let kappa_i = exact(kappa)?;
    let mut items = Vec::new();

    items.push(AuditItem::new(
        "roth_exponent",
        &[("lambda", lambda), ("delta", delta)],
        (roth_exponent(lambda, delta), roth_exponent_interval(lambda, delta)?),
        (kappa, kappa_i.clone()),
        Relation::Gt,
    ));
    items.push(AuditItem::new(
        "kappa_threshold",
        &[("m", m as f64), ("M", big_m), ("c", c)],
        (kappa_threshold(m, big_m, c)?, kappa_threshold_interval(m, big_m, c)?),
        (kappa, kappa_i.clone()),
        Relation::Lt,
    ));

    let budget = large_point_budget(eps, lambda, delta, kappa, big_m, c)?;
    let gap = &kappa_i - &Interval::int(1);
    let t = budget.t;
    items.push(AuditItem::new(
        "gap_power",
        &[("kappa", kappa), ("M", big_m), ("t", t as f64)],
        ((kappa - 1.0).powi(t as i32), gap.powi(t)),
        (big_m, exact(big_m)?),
        Relation::Gt,
    ));
    if t > 1 {
        items.push(AuditItem::new(
            "gap_power_minimal",
            &[("kappa", kappa), ("M", big_m), ("t", (t - 1) as f64)],
            ((kappa - 1.0).powi(t as i32 - 1), gap.powi(t - 1)),
            (big_m, exact(big_m)?),
            Relation::Le,
        ));
    }

    let medium = (budget.medium_bound, medium_bound_interval(eps, lambda, delta, big_m, c)?);
    let inputs = [("epsilon", eps), ("lambda", lambda), ("delta", delta), ("M", big_m), ("c", c)];
    items.push(AuditItem::new(
        "medium_bound_admits_s",
        &inputs,
        medium.clone(),
        pow_interval(3.0, budget.s - 1)?,
        Relation::Gt,
    ));
    items.push(AuditItem::new(
        "medium_bound_excludes_s_plus_1",
        &inputs,
        medium,
        pow_interval(3.0, budget.s)?,
        Relation::Le,
    ));

    let a1 = budget.a1_bound as f64;
    items.push(AuditItem::new(
        "a1_bound",
        &[("s", budget.s as f64)],
        (a1, Interval::int(budget.a1_bound as i64)),
        (A1_CAP as f64, Interval::int(A1_CAP as i64)),
        Relation::Le,
    ));
    let total = budget.budget as f64;
    items.push(AuditItem::new(
        "large_point_budget",
        &[("s", budget.s as f64), ("t", t as f64)],
        (total, Interval::int(budget.budget as i64)),
        (LARGE_POINT_CAP as f64, Interval::int(LARGE_POINT_CAP as i64)),
        Relation::Le,
    ));

    let cap = Interval::point(BigRational::new(1.into(), 650.into()));
    items.push(AuditItem::new(
        "epsilon_admissible",
        &[("epsilon", eps)],
        (eps, exact(eps)?),
        (1.0 / 650.0, cap),
        Relation::Lt,
    ));
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sum_lower_bound_examples() {
        let d = 1e3;
        let x = 5.0 * d * d;
        let v = sum_lower_bound(x, 2.0 * x, d).unwrap() / x;
        assert!((v - (2.0 / (2.0 + 2f64.sqrt())).powi(2)).abs() < 1e-6);
        assert!((v - 0.3431).abs() < 1e-4);
        let v = sum_lower_bound(1e12, 1e12, 1.0).unwrap() / 1e12;
        assert!((v - 0.25).abs() < 1e-9);
        assert!(sum_lower_bound(5.0, 10.0, 5.0).is_err());
        assert!(sum_lower_bound(10.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn double_ratio_examples() {
        assert!((double_ratio(1e9, 1.0).unwrap() - 0.25).abs() < 1e-12);
        let v = double_ratio(1.0 + 2f64.sqrt(), 1.0).unwrap();
        let mu2 = 3.0 - 2.0 * 2f64.sqrt();
        assert!((v - (1.0 + mu2).powi(2) / (4.0 * (1.0 - mu2))).abs() < 1e-12);
        assert!((v - 0.4142).abs() < 1e-3);
        assert!(double_ratio(6.0, 6.0).is_err());

        let curve = crate::Curve::new(6).unwrap();
        let p = curve.point_int(294, 5040).unwrap();
        let x2 = p.double().x().unwrap().clone();
        let ratio = double_ratio_exact(&BigInt::from(294), &BigInt::from(6)).unwrap();
        assert_eq!(ratio, x2 / BigRational::from_integer(294.into()));
        assert!((double_ratio(294.0, 6.0).unwrap() - rational_to_f64(&ratio)).abs() < 1e-12);
    }

    #[test]
    fn roth_and_kappa_examples() {
        assert_eq!(roth_exponent(0.0, 0.0), 8.0);
        let r = roth_exponent(DEFAULT_LAMBDA, DEFAULT_DELTA);
        assert!((r - 7.5165).abs() < 1e-4 && r > DEFAULT_KAPPA);
        let k = kappa_threshold(4, 276.1, 0.861).unwrap();
        assert!((k - 7.5156).abs() < 1e-4 && k < DEFAULT_KAPPA);
        let limit = kappa_threshold(4, 1e15, 0.861).unwrap();
        assert!((limit - 8f64.sqrt() / 0.861).abs() < 1e-6);
        assert!(kappa_threshold(4, 276.1, 0.5).unwrap() > 100.0);
        assert!(kappa_threshold(4, 276.1, 0.48).is_err());
        assert!(kappa_threshold(4, 71.0, 0.861).is_err());
        assert!(kappa_threshold(4, 276.1, 1.0).is_err());
    }

    #[test]
    fn budget_defaults() {
        let b = large_point_budget(DEFAULT_EPSILON, DEFAULT_LAMBDA, DEFAULT_DELTA, DEFAULT_KAPPA, DEFAULT_M, DEFAULT_C)
            .unwrap();
        assert_eq!((b.t, b.s, b.budget, b.a1_bound), (3, 14, 30, 28));
        assert!((b.medium_bound - 4.77e6).abs() < 0.01e6);
        assert!(3f64.powi(13) < b.medium_bound && b.medium_bound < 3f64.powi(14));
        assert!((6.516f64.powi(3) - 276.66).abs() < 0.01);
        assert!(matches!(large_point_budget(0.1, 0.1, 0.1, 2.0, 10.0, 0.5), Err(Error::Numeric(_))));
    }

    #[test]
    fn default_audit_is_certified() {
        let items = default_audit().unwrap();
        assert_eq!(items.len(), 9);
        for item in &items {
            assert!(item.passes(), "{item:?}");
            assert_eq!(item.verdict, item.relation.holds(item.computed, item.threshold));
            let tol = 1e-12 * item.computed.abs().max(1.0);
            assert!(item.enclosure.0 - tol <= item.computed && item.computed <= item.enclosure.1 + tol);
            assert!(item.enclosure.1 - item.enclosure.0 <= 1e-12 * item.computed.abs().max(1.0));
        }
    }

    #[test]
    fn failing_relation_is_reported() {
        let item = AuditItem::new(
            "probe",
            &[],
            (roth_exponent(0.001, 0.0), roth_exponent_interval(0.001, 0.0).unwrap()),
            (7.9, exact(7.9).unwrap()),
            Relation::Gt,
        );
        assert!(!item.verdict && !item.certified && !item.passes());
    }

    #[test]
    fn repulsion_and_gap_examples() {
        let d = BigInt::from(10);
        let m = repulsion_margin(&[BigInt::from(100_000), BigInt::from(1000)], &d);
        assert_eq!(m.len(), 1);
        assert!(m[0].abs() < 1e-12);
        assert!(repulsion_margin(&[], &d).is_empty());
        assert!(strong_gap_check(0.0, 0.0, 7.516));
        assert!(!strong_gap_check(10.0, 60.0, 7.516));
        assert!(strong_gap_check(10.0, 70.0, 7.516));
    }

    #[test]
    fn abc_examples() {
        let a = abc_ceiling(0.01).unwrap();
        assert!((a.exponent - 2.1).abs() < 1e-12);
        assert!((a.intermediate - 2.0825).abs() < 1e-4 && a.intermediate < a.exponent);
        assert!((abc_ceiling(1e-12).unwrap().exponent - 2.0).abs() < 1e-10);
        assert!(abc_ceiling(0.1).is_err());
    }

    #[test]
    fn lambda_constraint_readings() {
        let l = lambda_constraint(DEFAULT_EPSILON, DEFAULT_LAMBDA, 14);
        assert!(l.required_with_s < DEFAULT_LAMBDA);
        assert!(l.required_with_s_minus_1 > DEFAULT_LAMBDA);
    }

    proptest! {
        #[test]
        fn sum_bound_exceeds_quarter(x in 2.0f64..1e12, b in 1.0f64..1e6, frac in 0.0f64..0.999) {
            let d = x * frac;
            prop_assume!(d > 0.0);
            let v = sum_lower_bound(x, x * b, d).unwrap();
            prop_assert!(v > x / 4.0);
        }

        #[test]
        fn roth_decreasing(l in 0.0f64..0.001, d in 0.0f64..0.001, step in 1e-6f64..1e-4) {
            prop_assert!(roth_exponent(l + step, d) < roth_exponent(l, d));
            prop_assert!(roth_exponent(l, d + step) < roth_exponent(l, d));
        }

        #[test]
        fn budget_monotone_in_m(m1 in 72.0f64..5000.0, extra in 0.0f64..5000.0) {
            let a = large_point_budget(DEFAULT_EPSILON, DEFAULT_LAMBDA, DEFAULT_DELTA, DEFAULT_KAPPA, m1, DEFAULT_C).unwrap();
            let b = large_point_budget(DEFAULT_EPSILON, DEFAULT_LAMBDA, DEFAULT_DELTA, DEFAULT_KAPPA, m1 + extra, DEFAULT_C).unwrap();
            prop_assert!(b.t >= a.t && b.s >= a.s);
        }
    }
}
