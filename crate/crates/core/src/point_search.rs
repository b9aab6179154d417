//! Integral points on `E_D`, their cosets modulo `2E_D(ℚ)`, and family scans.
//!
//! Enumeration uses the fact that every prime dividing `x` to an odd power
//! also divides `D` (it divides `x` and `y²`, hence `x² − D²`, hence `D²`).
//! So `x = ±d·w²` with `d` a squarefree divisor of `D`, and writing `D = d·e`
//! the curve equation becomes `y = d·w·z` with `z² = d·(w⁴ − e²)` for
//! positive `x` and `z² = d·(e² − w⁴)` for negative `x`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{Curve, SquareClassTriple};
use crate::error::{domain, Error, Result};
use crate::exact_arith::{exact_sqrt, exact_sqrt_u128, factor_omega, isqrt, isqrt_u128, log_abs};
use crate::pell::ptors_extra;
use crate::ser;

/// `ε` separating small from large points: large means `x > D^{2(1+ε)}`.
pub const SIZE_EPSILON: f64 = 0.00153;

/// Exponent of the default search ceiling `⌈D^{2.02}⌉`.
pub const DEFAULT_CEILING_EXPONENT: f64 = 2.02;

/// Above this `x_max` the enumeration switches from `u128` to big integers.
const U128_X_LIMIT: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Large,
}

/// One integral point, with `y ≥ 0` standing for the pair `(x, ±y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegralPointRecord {
    #[serde(rename = "D", with = "ser::bigint")]
    pub d: BigInt,
    #[serde(with = "ser::bigint")]
    pub x: BigInt,
    #[serde(with = "ser::bigint")]
    pub y: BigInt,
    pub coset_key: SquareClassTriple,
    pub size_class: SizeClass,
}

pub fn size_class(x: &BigInt, d: &BigInt) -> SizeClass {
    if x.is_positive() && log_abs(x) > 2.0 * (1.0 + SIZE_EPSILON) * log_abs(d) {
        SizeClass::Large
    } else {
        SizeClass::Small
    }
}

/// `⌈D^{2.02}⌉`, the default positive search ceiling.
pub fn default_x_max(d: &BigInt) -> BigInt {
    let v = (DEFAULT_CEILING_EXPONENT * log_abs(d)).exp().ceil();
    BigInt::from(v as u128).max(d.clone())
}

/// All integral points with `−D ≤ x ≤ 0` or `D ≤ x ≤ x_max`, sorted by `x`.
pub fn enumerate_integral_points(d: &BigInt, x_max: &BigInt) -> Result<Vec<IntegralPointRecord>> {
    let curve = Curve::new(d.clone())?;
    let x_max = x_max.max(d).clone();
    let (fact, _) = factor_omega(d)?;
    let divisors = fact.squarefree_divisors();
    let mut pairs: Vec<(BigInt, BigInt)> = vec![(BigInt::zero(), BigInt::zero())];
    match (d.to_u64(), x_max.to_u64()) {
        (Some(dd), Some(xm)) if xm < U128_X_LIMIT && dd < (1 << 40) => {
            for div in &divisors {
                let div = div.to_u64().expect("divisor of a u64");
                search_u128(dd, div, xm, &mut pairs);
            }
        }
        _ => {
            for div in &divisors {
                search_big(d, div, &x_max, &mut pairs)?;
            }
        }
    }
    pairs.sort();
    pairs
        .into_iter()
        .map(|(x, y)| {
            let p = curve.point_int(x.clone(), y.clone())?;
            Ok(IntegralPointRecord { d: d.clone(), size_class: size_class(&x, d), coset_key: p.theta()?, x, y })
        })
        .collect()
}

fn search_u128(d: u64, div: u64, x_max: u64, out: &mut Vec<(BigInt, BigInt)>) {
    let (dv, e) = (div as u128, (d / div) as u128);
    let e2 = e * e;
    // Negative side: d·w² ≤ D, i.e. w² ≤ e.
    let mut w: u128 = 1;
    while w * w <= e {
        let w4 = w * w * w * w;
        if let Some(z) = exact_sqrt_u128(dv * (e2 - w4)) {
            out.push((-BigInt::from(dv * w * w), BigInt::from(dv * w * z)));
        }
        w += 1;
    }
    // Positive side: e ≤ w² ≤ x_max/d.
    let mut w = isqrt_u128(e);
    if w * w < e {
        w += 1;
    }
    let w_hi = isqrt_u128((x_max / div) as u128);
    while w <= w_hi {
        let w4 = w * w * w * w;
        if let Some(z) = exact_sqrt_u128(dv * (w4 - e2)) {
            out.push((BigInt::from(dv * w * w), BigInt::from(dv * w * z)));
        }
        w += 1;
    }
}

fn search_big(d: &BigInt, div: &BigInt, x_max: &BigInt, out: &mut Vec<(BigInt, BigInt)>) -> Result<()> {
    let e = d / div;
    let e2 = &e * &e;
    let mut w = BigInt::one();
    while &w * &w <= e {
        let w2 = &w * &w;
        if let Some(z) = exact_sqrt(&(div * (&e2 - &w2 * &w2))) {
            out.push((-(div * &w2), div * &w * z));
        }
        w += 1;
    }
    let mut w = isqrt(&e)?;
    if &w * &w < e {
        w += 1;
    }
    let w_hi = isqrt(&(x_max / div))?;
    while w <= w_hi {
        let w2 = &w * &w;
        if let Some(z) = exact_sqrt(&(div * (&w2 * &w2 - &e2))) {
            out.push((div * &w2, div * &w * z));
        }
        w += 1;
    }
    Ok(())
}

/// Result of the default `points` search: everything up to `⌈D^{2.02}⌉`, plus the
/// Pell point of the `(D, 0)` coset when it lies above that ceiling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointListing {
    #[serde(rename = "D", with = "ser::bigint")]
    pub d: BigInt,
    #[serde(with = "ser::bigint")]
    pub x_max: BigInt,
    pub records: Vec<IntegralPointRecord>,
    pub pell_point_above_ceiling: bool,
}

pub fn enumerate_default(d: &BigInt) -> Result<PointListing> {
    let x_max = default_x_max(d);
    let mut records = enumerate_integral_points(d, &x_max)?;
    let mut above = false;
    if let Some(p) = ptors_extra(d)? {
        let x = p.x().expect("affine").numer().clone();
        if x > x_max {
            let y = p.y().expect("affine").numer().abs();
            records.push(IntegralPointRecord {
                d: d.clone(),
                size_class: size_class(&x, d),
                coset_key: p.theta()?,
                x,
                y,
            });
            above = true;
        }
    }
    Ok(PointListing { d: d.clone(), x_max, records, pell_point_above_ceiling: above })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CosetKind {
    /// Coset of `O`.
    Identity,
    /// Coset of `(0, 0)`.
    TorsionZero,
    /// Coset of `(−D, 0)`.
    TorsionMinusD,
    /// Coset of `(D, 0)`.
    TorsionPlusD,
    /// Non-torsion coset with `−D < x < 0`.
    Negative,
    /// Non-torsion coset with `x > D`.
    Positive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CosetReport {
    pub key: SquareClassTriple,
    pub kind: CosetKind,
    pub representative: IntegralPointRecord,
    pub members: Vec<IntegralPointRecord>,
    /// Distinct x-coordinates, so `±P` count once.
    pub pair_count: usize,
    /// Negative coset with more than one pair.
    pub exceptional: bool,
    /// A torsion coset holding more than the torsion point and the Pell point allow.
    pub exceeds_theorem_bound: bool,
}

/// Groups the points of one curve by θ-image, ordered by representative `x`.
pub fn classify_cosets(records: &[IntegralPointRecord]) -> Result<Vec<CosetReport>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let d = first.d.clone();
    if records.iter().any(|r| r.d != d) {
        return domain("classify_cosets needs records from a single curve");
    }
    let curve = Curve::new(d.clone())?;
    let torsion_keys: Vec<SquareClassTriple> =
        curve.torsion_points().iter().map(|t| t.theta()).collect::<Result<_>>()?;

    let mut groups: BTreeMap<SquareClassTriple, Vec<IntegralPointRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.coset_key.clone()).or_default().push(r.clone());
    }
    let mut out = Vec::with_capacity(groups.len());
    for (key, mut members) in groups {
        members.sort_by(|a, b| a.x.cmp(&b.x));
        members.dedup_by(|a, b| a.x == b.x);
        let representative =
            members.iter().min_by(|a, b| (a.x.abs(), &a.x).cmp(&(b.x.abs(), &b.x))).expect("non-empty group").clone();
        let pair_count = members.len();
        let nontorsion: Vec<&IntegralPointRecord> = members.iter().filter(|r| !r.y.is_zero()).collect();
        let kind = match torsion_keys.iter().position(|k| *k == key) {
            Some(0) => CosetKind::Identity,
            Some(1) => CosetKind::TorsionZero,
            Some(2) => CosetKind::TorsionPlusD,
            Some(3) => CosetKind::TorsionMinusD,
            _ if representative.x.is_negative() => CosetKind::Negative,
            _ => CosetKind::Positive,
        };
        let exceeds_theorem_bound = match kind {
            CosetKind::Identity => true,
            CosetKind::TorsionZero | CosetKind::TorsionMinusD => !nontorsion.is_empty(),
            CosetKind::TorsionPlusD => match nontorsion.as_slice() {
                [] => false,
                [only] => {
                    let pell = ptors_extra(&d)?;
                    pell.is_none_or(|p| p.x().expect("affine").numer() != &only.x)
                }
                _ => true,
            },
            CosetKind::Negative | CosetKind::Positive => false,
        };
        let exceptional = kind == CosetKind::Negative && pair_count > 1;
        out.push(CosetReport { key, kind, representative, members, pair_count, exceptional, exceeds_theorem_bound });
    }
    out.sort_by(|a, b| a.representative.x.cmp(&b.representative.x));
    Ok(out)
}

/// How far up the positive range a scan searches for each `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XMaxPolicy {
    /// Only `−D ≤ x ≤ 0` (and the torsion point `x = D`).
    NegativeOnly,
    Fixed(BigInt),
    /// `⌈D^{2.02}⌉`.
    Abc,
}

impl XMaxPolicy {
    pub fn x_max(&self, d: &BigInt) -> BigInt {
        match self {
            XMaxPolicy::NegativeOnly => d.clone(),
            XMaxPolicy::Fixed(n) => n.max(d).clone(),
            XMaxPolicy::Abc => default_x_max(d),
        }
    }
}

impl fmt::Display for XMaxPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XMaxPolicy::NegativeOnly => write!(f, "negative"),
            XMaxPolicy::Fixed(n) => write!(f, "fixed:{n}"),
            XMaxPolicy::Abc => write!(f, "abc"),
        }
    }
}

impl FromStr for XMaxPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" => Ok(XMaxPolicy::NegativeOnly),
            "abc" => Ok(XMaxPolicy::Abc),
            _ => match s.strip_prefix("fixed:").map(str::parse::<BigInt>) {
                Some(Ok(n)) if n.is_positive() => Ok(XMaxPolicy::Fixed(n)),
                _ => domain(format!("unknown x-max policy {s:?}; use negative, abc or fixed:N")),
            },
        }
    }
}

/// Per-`D` line of a scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DSummary {
    #[serde(rename = "D")]
    pub d: u64,
    #[serde(with = "ser::bigint")]
    pub x_max: BigInt,
    /// Distinct x-coordinates found.
    pub points: usize,
    pub cosets: usize,
    pub negative_points: usize,
    pub exceptional_cosets: Vec<CosetReport>,
    pub torsion_bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub d_from: u64,
    pub d_to: u64,
    pub policy: String,
    pub per_d: Vec<DSummary>,
}

impl ScanReport {
    /// Parameters with at least one exceptional coset, ascending.
    pub fn exceptional_ds(&self) -> Vec<u64> {
        self.per_d.iter().filter(|s| !s.exceptional_cosets.is_empty()).map(|s| s.d).collect()
    }

    pub fn torsion_violations(&self) -> usize {
        self.per_d.iter().map(|s| s.torsion_bound_violations).sum()
    }
}

/// Squarefree integers in `[from, to]`.
pub fn squarefree_range(from: u64, to: u64) -> Vec<u64> {
    if from > to {
        return Vec::new();
    }
    let from = from.max(1);
    let len = (to - from + 1) as usize;
    let mut ok = vec![true; len];
    let mut k: u64 = 2;
    while k * k <= to {
        let sq = k * k;
        let mut m = from.div_ceil(sq) * sq;
        while m <= to {
            ok[(m - from) as usize] = false;
            m += sq;
        }
        k += 1;
    }
    (from..=to).filter(|n| ok[(n - from) as usize]).collect()
}

fn scan_one(d: u64, policy: &XMaxPolicy) -> Result<DSummary> {
    let big = BigInt::from(d);
    let x_max = policy.x_max(&big);
    let records = enumerate_integral_points(&big, &x_max)?;
    let cosets = classify_cosets(&records)?;
    Ok(DSummary {
        d,
        points: records.len(),
        cosets: cosets.len(),
        negative_points: records.iter().filter(|r| r.x.is_negative()).count(),
        torsion_bound_violations: cosets.iter().filter(|c| c.exceeds_theorem_bound).count(),
        exceptional_cosets: cosets.into_iter().filter(|c| c.exceptional).collect(),
        x_max,
    })
}

/// Scans every squarefree `D` in `[d_from, d_to]` on `jobs` worker threads
/// (`0` means the available parallelism). Output order is ascending `D`
/// whatever the worker count.
pub fn scan_family(d_from: u64, d_to: u64, policy: &XMaxPolicy, jobs: usize) -> Result<ScanReport> {
    let ds = squarefree_range(d_from, d_to);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    let per_d = pool.install(|| ds.par_iter().map(|&d| scan_one(d, policy)).collect::<Result<Vec<_>>>())?;
    Ok(ScanReport { d_from, d_to, policy: policy.to_string(), per_d })
}

/// Per-coset and total bounds `30 + 1.89^{r+19r^{1/3}}` and `2^{2+r}` times that.
pub fn coset_count_bound(r: u32) -> (f64, f64) {
    let rf = r as f64;
    let per_coset = 30.0 + 1.89f64.powf(rf + 19.0 * rf.cbrt());
    (per_coset, 2f64.powf(2.0 + rf) * per_coset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_arith::is_square;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn xs(records: &[IntegralPointRecord]) -> Vec<i64> {
        records.iter().map(|r| r.x.to_i64().unwrap()).collect()
    }

    fn brute(d: i64, x_max: i64) -> Vec<i64> {
        (-d..=0)
            .chain(d..=x_max)
            .filter(|&x| {
                let v = big(x).pow(3) - big(d * d) * big(x);
                is_square(&v)
            })
            .collect()
    }

    #[test]
    fn enumeration_examples() {
        let e6 = enumerate_integral_points(&big(6), &big(1_000_000)).unwrap();
        assert_eq!(xs(&e6), vec![-6, -3, -2, 0, 6, 12, 18, 294]);
        let y294 = &e6.last().unwrap().y;
        assert_eq!(y294, &big(5040));
        let e1254 = enumerate_integral_points(&big(1254), &big(1_000_000)).unwrap();
        let x1254 = xs(&e1254);
        assert!(x1254.contains(&-98) && x1254.contains(&-1058));
        assert_eq!(xs(&enumerate_integral_points(&big(1), &big(1000)).unwrap()), vec![-1, 0, 1]);
        assert!(enumerate_integral_points(&big(12), &big(1000)).is_err());
    }

    #[test]
    fn matches_brute_force() {
        for d in squarefree_range(1, 120) {
            let d = d as i64;
            let fast = xs(&enumerate_integral_points(&big(d), &big(20_000)).unwrap());
            assert_eq!(fast, brute(d, 20_000), "D={d}");
        }
    }

    #[test]
    fn big_path_matches_u128_path() {
        for d in [6i64, 210, 1254] {
            let mut pairs = vec![];
            let (fact, _) = factor_omega(&big(d)).unwrap();
            for div in fact.squarefree_divisors() {
                search_big(&big(d), &div, &big(2_000_000), &mut pairs).unwrap();
            }
            pairs.sort();
            let mut fast: Vec<_> = enumerate_integral_points(&big(d), &big(2_000_000))
                .unwrap()
                .into_iter()
                .filter(|r| !r.x.is_zero())
                .map(|r| (r.x, r.y))
                .collect();
            fast.sort();
            assert_eq!(pairs, fast, "D={d}");
        }
    }

    #[test]
    fn six_has_seven_cosets() {
        let recs = enumerate_integral_points(&big(6), &big(1_000_000)).unwrap();
        let cosets = classify_cosets(&recs).unwrap();
        let groups: Vec<Vec<i64>> = cosets.iter().map(|c| xs(&c.members)).collect();
        assert_eq!(groups, vec![vec![-6], vec![-3], vec![-2], vec![0], vec![6, 294], vec![12], vec![18]]);
        assert!(cosets.iter().all(|c| !c.exceptional && !c.exceeds_theorem_bound));
        let plus = cosets.iter().find(|c| c.kind == CosetKind::TorsionPlusD).unwrap();
        assert_eq!(plus.pair_count, 2);
        assert!(classify_cosets(&[]).unwrap().is_empty());
    }

    #[test]
    fn exceptional_coset_for_1254() {
        let recs = enumerate_integral_points(&big(1254), &big(1_000_000)).unwrap();
        let cosets = classify_cosets(&recs).unwrap();
        let exc: Vec<_> = cosets.iter().filter(|c| c.exceptional).collect();
        assert_eq!(exc.len(), 1);
        assert_eq!(xs(&exc[0].members), vec![-1058, -98]);
        assert_eq!(exc[0].representative.x, big(-98));
    }

    #[test]
    fn default_listing_includes_pell_point() {
        let listing = enumerate_default(&big(6)).unwrap();
        assert_eq!(listing.x_max, big(38));
        assert!(listing.pell_point_above_ceiling);
        assert_eq!(xs(&listing.records), vec![-6, -3, -2, 0, 6, 12, 18, 294]);
        assert_eq!(listing.records[7].size_class, SizeClass::Large);
    }

    #[test]
    fn small_scan_and_policy_parsing() {
        let rep = scan_family(1, 100, &XMaxPolicy::NegativeOnly, 2).unwrap();
        assert!(rep.exceptional_ds().is_empty());
        assert_eq!(rep.per_d.len(), squarefree_range(1, 100).len());
        assert!(scan_family(10, 5, &XMaxPolicy::Abc, 1).unwrap().per_d.is_empty());
        let one = scan_family(1, 300, &XMaxPolicy::Abc, 1).unwrap();
        let many = scan_family(1, 300, &XMaxPolicy::Abc, 4).unwrap();
        assert_eq!(one, many);
        assert_eq!("fixed:1000".parse::<XMaxPolicy>().unwrap(), XMaxPolicy::Fixed(big(1000)));
        assert_eq!("negative".parse::<XMaxPolicy>().unwrap(), XMaxPolicy::NegativeOnly);
        assert!("fixed:-3".parse::<XMaxPolicy>().is_err());
    }

    #[test]
    fn squarefree_sieve() {
        assert_eq!(squarefree_range(1, 12), vec![1, 2, 3, 5, 6, 7, 10, 11]);
        assert_eq!(squarefree_range(7, 7), vec![7]);
        assert_eq!(squarefree_range(0, 1), vec![1]);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(coset_count_bound(0), (31.0, 124.0));
        let (p1, _) = coset_count_bound(1);
        assert!((p1 - 30.0 - 1.89f64.powi(20)).abs() < 1e-6);
        for r in 0..40 {
            assert!(coset_count_bound(r + 1).0 > coset_count_bound(r).0);
        }
    }
}
