//! Simultaneous Pell equations `aX² − bY² = d`, `bY² − cZ² = d`, their lift
//! to integral points on `E_{abcd}`, and the reduction of `A²X⁴ − BY² = C²`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::curve::{Curve, CurvePoint, SquareClassTriple};
use crate::error::{domain, Error, Result};
use crate::exact_arith::{exact_sqrt, exact_sqrt_u128, factor_omega, squarefree_part, BigRational};
use crate::ser;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimPellInstance {
    #[serde(with = "ser::bigint")]
    pub a: BigInt,
    #[serde(with = "ser::bigint")]
    pub b: BigInt,
    #[serde(with = "ser::bigint")]
    pub c: BigInt,
    #[serde(with = "ser::bigint")]
    pub d: BigInt,
}

impl SimPellInstance {
    /// Checks positivity and pairwise coprimality.
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>, d: impl Into<BigInt>) -> Result<Self> {
        let v = [a.into(), b.into(), c.into(), d.into()];
        if v.iter().any(|n| !n.is_positive()) {
            return domain(format!("coefficients must be positive: {v:?}"));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if !v[i].gcd(&v[j]).is_one() {
                    return domain(format!("coefficients {} and {} are not coprime", v[i], v[j]));
                }
            }
        }
        let [a, b, c, d] = v;
        Ok(SimPellInstance { a, b, c, d })
    }

    /// `D = abcd`.
    pub fn curve_parameter(&self) -> BigInt {
        &self.a * &self.b * &self.c * &self.d
    }

    pub fn is_solution(&self, s: &SimPellSolution) -> bool {
        let by2 = &self.b * &s.y * &s.y;
        &self.a * &s.x * &s.x - &by2 == self.d && &by2 - &self.c * &s.z * &s.z == self.d
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SimPellSolution {
    #[serde(rename = "X", with = "ser::bigint")]
    pub x: BigInt,
    #[serde(rename = "Y", with = "ser::bigint")]
    pub y: BigInt,
    #[serde(rename = "Z", with = "ser::bigint")]
    pub z: BigInt,
}

impl SimPellSolution {
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>, z: impl Into<BigInt>) -> Self {
        SimPellSolution { x: x.into(), y: y.into(), z: z.into() }
    }
}

/// All positive solutions with `X, Y, Z ≤ limit`, found by running over `Y`.
pub fn brute_count(inst: &SimPellInstance, limit: &BigInt) -> Vec<SimPellSolution> {
    let small = [&inst.a, &inst.b, &inst.c, &inst.d].iter().all(|n| n.bits() <= 30);
    match limit.to_u64() {
        Some(l) if small && l <= 1 << 30 => brute_count_u128(inst, l),
        _ => brute_count_big(inst, limit),
    }
}

fn brute_count_u128(inst: &SimPellInstance, limit: u64) -> Vec<SimPellSolution> {
    let [a, b, c, d] = [&inst.a, &inst.b, &inst.c, &inst.d].map(|n| n.to_u128().expect("checked size"));
    let lim = limit as u128;
    let mut out = Vec::new();
    for y in 1..=lim {
        let by2 = b * y * y;
        if by2 <= d {
            continue;
        }
        let (xs, zs) = (by2 + d, by2 - d);
        if xs % a != 0 || zs % c != 0 {
            continue;
        }
        let (Some(x), Some(z)) = (exact_sqrt_u128(xs / a), exact_sqrt_u128(zs / c)) else {
            continue;
        };
        if x <= lim && z <= lim && z > 0 {
            out.push(SimPellSolution::new(x, y, z));
        }
    }
    out
}

fn brute_count_big(inst: &SimPellInstance, limit: &BigInt) -> Vec<SimPellSolution> {
    let mut out = Vec::new();
    let mut y = BigInt::one();
    while &y <= limit {
        let by2 = &inst.b * &y * &y;
        if by2 > inst.d {
            let (xs, zs) = (&by2 + &inst.d, &by2 - &inst.d);
            if (&xs % &inst.a).is_zero() && (&zs % &inst.c).is_zero() {
                if let (Some(x), Some(z)) = (exact_sqrt(&(xs / &inst.a)), exact_sqrt(&(zs / &inst.c))) {
                    if &x <= limit && &z <= limit {
                        out.push(SimPellSolution { x, y: y.clone(), z });
                    }
                }
            }
        }
        y += 1;
    }
    out
}

/// The integral point `(ac(bY)², (abc)²XYZ)` on `E_{abcd}`.
///
/// `abcd` need not be squarefree; the curve is built with [`Curve::with_parameter`].
pub fn curve_lift(inst: &SimPellInstance, sol: &SimPellSolution) -> Result<CurvePoint> {
    if !inst.is_solution(sol) || !sol.x.is_positive() || !sol.y.is_positive() || !sol.z.is_positive() {
        return domain(format!("({}, {}, {}) does not solve the instance", sol.x, sol.y, sol.z));
    }
    let (a, b, c) = (&inst.a, &inst.b, &inst.c);
    let dd = inst.curve_parameter();
    let curve = Curve::with_parameter(dd.clone())?;
    let by = b * &sol.y;
    let x = a * c * &by * &by;
    let abc = a * b * c;
    let y = &abc * &abc * &sol.x * &sol.y * &sol.z;
    let p = curve.point(BigRational::from_integer(x.clone()), BigRational::from_integer(y))?;
    let cz = c * &sol.z;
    let ax = a * &sol.x;
    if &x - &dd != a * b * &cz * &cz || &x + &dd != b * c * &ax * &ax {
        return Err(Error::Invariant(format!("lift of {sol:?} breaks the factorization of x ± D")));
    }
    let expected =
        SquareClassTriple([squarefree_part(&(a * b))?, squarefree_part(&(a * c))?, squarefree_part(&(b * c))?]);
    if p.theta()? != expected {
        return Err(Error::Invariant(format!("theta of the lift {p} is not {expected}")));
    }
    Ok(p)
}

/// `15 + 1.89^{r+19r^{1/3}}` when the rank is known, else
/// `15 + 3.58^{ω+12ω^{1/3}}` with `ω = ω(abcd)`.
pub fn solution_bound(inst: &SimPellInstance, r: Option<u32>) -> Result<f64> {
    Ok(match r {
        Some(r) => rank_bound(r),
        None => {
            let (_, omega) = factor_omega(&inst.curve_parameter())?;
            omega_bound(omega as u32)
        }
    })
}

pub fn rank_bound(r: u32) -> f64 {
    let r = r as f64;
    15.0 + 1.89f64.powf(r + 19.0 * r.cbrt())
}

pub fn omega_bound(omega: u32) -> f64 {
    let w = omega as f64;
    15.0 + 3.58f64.powf(w + 12.0 * w.cbrt())
}

/// Splitting of a solution of `A²X⁴ − BY² = C²` into
/// `Ag(X/g)² − C/g = B₁Y₁²` and `Ag(X/g)² + C/g = B₂Y₂²` with `g = gcd(X, C)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuarticReduction {
    #[serde(with = "ser::bigint")]
    pub g: BigInt,
    #[serde(with = "ser::bigint")]
    pub b1: BigInt,
    #[serde(with = "ser::bigint")]
    pub y1: BigInt,
    #[serde(with = "ser::bigint")]
    pub b2: BigInt,
    #[serde(with = "ser::bigint")]
    pub y2: BigInt,
    /// `gcd` of the two left-hand sides; always 1 or 2.
    #[serde(with = "ser::bigint")]
    pub common_factor: BigInt,
    /// `Y / (g·Y₁·Y₂)`; 1 or 2.
    #[serde(with = "ser::bigint")]
    pub y_cofactor: BigInt,
    /// `B₁B₂ / B`; 1 or 4.
    #[serde(with = "ser::bigint")]
    pub b_ratio: BigInt,
    /// The pair as the simultaneous system `(B₂, Ag, B₁, C/g)` with solution
    /// `(Y₂, X/g, Y₁)`, when those coefficients are pairwise coprime.
    pub derived: Option<(SimPellInstance, SimPellSolution)>,
}

pub fn quartic_reduce(a: &BigInt, b: &BigInt, c: &BigInt, x: &BigInt, y: &BigInt) -> Result<QuarticReduction> {
    for (name, v) in [("A", a), ("B", b), ("C", c), ("X", x), ("Y", y)] {
        if !v.is_positive() {
            return domain(format!("{name} must be positive, got {v}"));
        }
    }
    for v in [a, b, c] {
        if squarefree_part(v)? != *v {
            return domain(format!("{v} is not squarefree"));
        }
    }
    if !a.gcd(b).is_one() || !a.gcd(c).is_one() || !b.gcd(c).is_one() {
        return domain(format!("A, B, C = {a}, {b}, {c} are not pairwise coprime"));
    }
    let x2 = x * x;
    if a * a * &x2 * &x2 - b * y * y != c * c {
        return domain(format!("({x}, {y}) does not solve A²X⁴ − BY² = C²"));
    }
    let g = x.gcd(c);
    let xg = x / &g;
    let cg = c / &g;
    let mid = a * &g * &xg * &xg;
    let (l1, l2) = (&mid - &cg, &mid + &cg);
    let (b1, b2) = (squarefree_part(&l1)?, squarefree_part(&l2)?);
    let sqrt_of = |l: &BigInt, bi: &BigInt| {
        exact_sqrt(&(l / bi)).ok_or_else(|| Error::Invariant(format!("{l}/{bi} is not a square")))
    };
    let (y1, y2) = (sqrt_of(&l1, &b1)?, sqrt_of(&l2, &b2)?);
    let common_factor = l1.gcd(&l2);
    let base = &g * &y1 * &y2;
    let (y_cofactor, rem) = y.div_rem(&base);
    let (b_ratio, brem) = (&b1 * &b2).div_rem(b);
    let small = |v: &BigInt, allowed: [i32; 2]| allowed.iter().any(|&k| *v == BigInt::from(k));
    if !rem.is_zero()
        || !brem.is_zero()
        || !small(&common_factor, [1, 2])
        || !small(&y_cofactor, [1, 2])
        || !small(&b_ratio, [1, 4])
    {
        return Err(Error::Invariant(format!(
            "unexpected splitting: gcd {common_factor}, Y = {y} vs gY1Y2 = {base}, B1B2 = {}",
            &b1 * &b2
        )));
    }
    let derived = SimPellInstance::new(b2.clone(), a * &g, b1.clone(), cg.clone())
        .ok()
        .map(|inst| (inst, SimPellSolution { x: y2.clone(), y: xg.clone(), z: y1.clone() }));
    if let Some((inst, sol)) = &derived {
        if !inst.is_solution(sol) {
            return Err(Error::Invariant("derived simultaneous system is not satisfied".into()));
        }
    }
    Ok(QuarticReduction { g, b1, y1, b2, y2, common_factor, y_cofactor, b_ratio, derived })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn brute_examples() {
        let inst = SimPellInstance::new(2, 1, 3, 1).unwrap();
        assert_eq!(brute_count(&inst, &big(10_000)), vec![SimPellSolution::new(5, 7, 4)]);
        assert_eq!(brute_count_big(&inst, &big(2000)), vec![SimPellSolution::new(5, 7, 4)]);
        assert!(brute_count(&inst, &big(4)).is_empty());
        let ones = SimPellInstance::new(1, 1, 1, 1).unwrap();
        assert!(brute_count(&ones, &big(1000)).is_empty());
        assert!(SimPellInstance::new(2, 4, 3, 1).is_err());
        assert!(SimPellInstance::new(0, 1, 3, 1).is_err());
    }

    #[test]
    fn lift_examples() {
        let inst = SimPellInstance::new(2, 1, 3, 1).unwrap();
        let p = curve_lift(&inst, &SimPellSolution::new(5, 7, 4)).unwrap();
        assert_eq!(p.to_string(), "(294, 5040)");
        assert_eq!(p.theta().unwrap(), SquareClassTriple::from_ints(2, 6, 3));
        assert!(curve_lift(&inst, &SimPellSolution::new(1, 1, 1)).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(rank_bound(0), 16.0);
        let inst = SimPellInstance::new(2, 1, 3, 1).unwrap();
        let w = solution_bound(&inst, None).unwrap();
        let expected = 15.0 + (3.58f64.ln() * (2.0 + 12.0 * 2f64.cbrt())).exp();
        assert!((w - expected).abs() / expected < 1e-12);
        assert!((w - 15.0).ln() > 21.7 && (w - 15.0).ln() < 21.9);
        for omega in 1..=20u32 {
            for r in 0..=(2 * omega).min(40) {
                assert!(rank_bound(r) <= omega_bound(omega), "r={r} omega={omega}");
            }
        }
    }

    #[test]
    fn quartic_example() {
        let q = quartic_reduce(&big(1), &big(5), &big(1), &big(3), &big(4)).unwrap();
        assert_eq!(
            (q.g.clone(), q.b1.clone(), q.y1.clone(), q.b2.clone(), q.y2.clone()),
            (big(1), big(2), big(2), big(10), big(1))
        );
        assert_eq!(q.b_ratio, big(4));
        assert_eq!(q.y_cofactor, big(2));
        assert_eq!(q.common_factor, big(2));
        assert!(q.derived.is_none());
        assert!(quartic_reduce(&big(1), &big(5), &big(1), &big(3), &big(5)).is_err());
        assert!(quartic_reduce(&big(1), &big(5), &big(1), &big(-3), &big(4)).is_err());
    }

    proptest! {
        /// Solutions of `X⁴ − BY² = C²` built from `X⁴ − C² = B·Y²` for small `X, C`.
        #[test]
        fn quartic_splitting_invariants(x in 2i64..400, c in 1i64..60) {
            let cb = big(c);
            prop_assume!(squarefree_part(&cb).unwrap() == cb);
            let lhs = big(x).pow(4) - big(c * c);
            prop_assume!(lhs.is_positive());
            let b = squarefree_part(&lhs).unwrap();
            prop_assume!(b.gcd(&cb).is_one());
            let y = exact_sqrt(&(&lhs / &b)).unwrap();
            let q = quartic_reduce(&big(1), &b, &cb, &big(x), &y).unwrap();
            prop_assert_eq!(&q.b1 * &q.b2, &b * &q.b_ratio);
            prop_assert_eq!(&q.g * &q.y1 * &q.y2 * &q.y_cofactor, y);
        }
    }
}
