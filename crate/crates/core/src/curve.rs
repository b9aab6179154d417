//! The curves `E_D : y² = x³ − D²x`, their group law over ℚ, and the
//! descent map θ into triples of square classes.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::exact_arith::{factor_omega, rational_square_class, squarefree_part, squarefree_part_over, BigRational};

/// A member of the family `y² = x³ − D²x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Curve {
    d: BigInt,
    /// Primes dividing `2D`: every square class in the image of θ is supported on them.
    bad_primes: Vec<BigInt>,
}

impl Curve {
    /// Curve for a squarefree `D ≥ 1`.
    pub fn new(d: impl Into<BigInt>) -> Result<Self> {
        let d = d.into();
        let curve = Self::with_parameter(d)?;
        if squarefree_part(&curve.d)? != curve.d {
            return domain(format!("D = {} is not squarefree", curve.d));
        }
        Ok(curve)
    }

    /// Curve for any `D ≥ 1`, squarefree or not.
    ///
    /// The group law and θ are valid for every `D`; results about integral
    /// points elsewhere in the crate assume `D` squarefree.
    pub fn with_parameter(d: impl Into<BigInt>) -> Result<Self> {
        let d = d.into();
        if d < BigInt::one() {
            return domain(format!("D must be positive, got {d}"));
        }
        let (fact, _) = factor_omega(&d)?;
        let mut bad_primes: Vec<BigInt> = fact.primes().cloned().collect();
        let two = BigInt::from(2);
        if !bad_primes.contains(&two) {
            bad_primes.insert(0, two);
        }
        Ok(Curve { d, bad_primes })
    }

    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn infinity(&self) -> CurvePoint {
        CurvePoint { curve: self.clone(), coords: None }
    }

    /// Affine point, checked to lie on the curve.
    pub fn point(&self, x: BigRational, y: BigRational) -> Result<CurvePoint> {
        if !self.contains(&x, &y) {
            return domain(format!("({x}, {y}) is not on E_{}", self.d));
        }
        Ok(CurvePoint { curve: self.clone(), coords: Some((x, y)) })
    }

    pub fn point_int(&self, x: impl Into<BigInt>, y: impl Into<BigInt>) -> Result<CurvePoint> {
        self.point(BigRational::from_integer(x.into()), BigRational::from_integer(y.into()))
    }

    pub fn contains(&self, x: &BigRational, y: &BigRational) -> bool {
        y * y == self.rhs(x)
    }

    /// `x³ − D²x`.
    pub fn rhs(&self, x: &BigRational) -> BigRational {
        let d2 = BigRational::from_integer(&self.d * &self.d);
        x * x * x - d2 * x
    }

    /// `{O, (0,0), (D,0), (−D,0)}`.
    pub fn torsion_points(&self) -> Vec<CurvePoint> {
        let zero = BigRational::zero();
        let d = BigRational::from_integer(self.d.clone());
        vec![
            self.infinity(),
            CurvePoint { curve: self.clone(), coords: Some((zero.clone(), zero.clone())) },
            CurvePoint { curve: self.clone(), coords: Some((d.clone(), zero.clone())) },
            CurvePoint { curve: self.clone(), coords: Some((-d, zero)) },
        ]
    }

    fn class_of(&self, n: &BigInt) -> Result<BigInt> {
        squarefree_part_over(n, &self.bad_primes).ok_or_else(|| {
            Error::Invariant(format!("square class of {n} not supported on primes of 2D = {}", 2 * &self.d))
        })
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E_{}", self.d)
    }
}

/// A rational point on a particular curve.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CurvePoint {
    curve: Curve,
    coords: Option<(BigRational, BigRational)>,
}

impl CurvePoint {
    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn is_infinity(&self) -> bool {
        self.coords.is_none()
    }

    pub fn x(&self) -> Option<&BigRational> {
        self.coords.as_ref().map(|(x, _)| x)
    }

    pub fn y(&self) -> Option<&BigRational> {
        self.coords.as_ref().map(|(_, y)| y)
    }

    pub fn is_integral(&self) -> bool {
        match &self.coords {
            None => false,
            Some((x, y)) => x.is_integer() && y.is_integer(),
        }
    }

    pub fn is_torsion(&self) -> bool {
        match &self.coords {
            None => true,
            Some((_, y)) => y.is_zero(),
        }
    }

    pub fn negate(&self) -> CurvePoint {
        CurvePoint { curve: self.curve.clone(), coords: self.coords.as_ref().map(|(x, y)| (x.clone(), -y)) }
    }

    fn same_curve(&self, other: &CurvePoint) -> Result<()> {
        if self.curve.d != other.curve.d {
            return domain(format!("points on different curves {} and {}", self.curve, other.curve));
        }
        Ok(())
    }

    /// Chord-and-tangent addition.
    pub fn add(&self, other: &CurvePoint) -> Result<CurvePoint> {
        self.same_curve(other)?;
        let ((x1, y1), (x2, y2)) = match (&self.coords, &other.coords) {
            (None, _) => return Ok(other.clone()),
            (_, None) => return Ok(self.clone()),
            (Some(p), Some(q)) => (p, q),
        };
        let slope = if x1 == x2 {
            if y1 != y2 || y1.is_zero() {
                return Ok(self.curve.infinity());
            }
            let d2 = BigRational::from_integer(&self.curve.d * &self.curve.d);
            (BigRational::from_integer(3.into()) * x1 * x1 - d2) / (y1 * BigRational::from_integer(2.into()))
        } else {
            (y2 - y1) / (x2 - x1)
        };
        let x3 = &slope * &slope - x1 - x2;
        let y3 = slope * (x1 - &x3) - y1;
        Ok(CurvePoint { curve: self.curve.clone(), coords: Some((x3, y3)) })
    }

    pub fn double(&self) -> CurvePoint {
        self.add(self).expect("same curve")
    }

    pub fn sub(&self, other: &CurvePoint) -> Result<CurvePoint> {
        self.add(&other.negate())
    }

    /// `m·P` by double-and-add.
    pub fn scalar_mul(&self, m: i64) -> CurvePoint {
        let base = if m < 0 { self.negate() } else { self.clone() };
        let mut k = m.unsigned_abs();
        let mut acc = self.curve.infinity();
        let mut pow = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.add(&pow).expect("same curve");
            }
            k >>= 1;
            if k > 0 {
                pow = pow.double();
            }
        }
        acc
    }

    /// Image under θ: square classes of `(x − D, x, x + D)`, with the torsion
    /// images fixed by the coset identities and `O ↦ (1, 1, 1)`.
    pub fn theta(&self) -> Result<SquareClassTriple> {
        let d = &self.curve.d;
        let (x, y) = match &self.coords {
            None => return Ok(SquareClassTriple::identity()),
            Some(c) => c,
        };
        let raw: [BigInt; 3] = if y.is_zero() {
            if x.is_zero() {
                [-d.clone(), BigInt::from(-1), d.clone()]
            } else if x.numer().is_negative() {
                [-(d * BigInt::from(2)), -d.clone(), BigInt::from(2)]
            } else {
                [BigInt::from(2), d.clone(), d * BigInt::from(2)]
            }
        } else {
            // x = r/s with s a square, so the class of x ± D is that of r ± D·s.
            let (r, s) = (x.numer(), x.denom());
            [r - d * s, r * s, r + d * s]
        };
        let classes = [self.curve.class_of(&raw[0])?, self.curve.class_of(&raw[1])?, self.curve.class_of(&raw[2])?];
        Ok(SquareClassTriple(classes))
    }

    /// Same coset of `2E_D(ℚ)`, i.e. equal θ-images.
    pub fn same_coset(&self, other: &CurvePoint) -> Result<bool> {
        self.same_curve(other)?;
        Ok(self.theta()? == other.theta()?)
    }
}

impl fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.coords {
            None => write!(f, "O"),
            Some((x, y)) => write!(f, "({x}, {y})"),
        }
    }
}

/// Three squarefree integers: the θ-image of a point and the key of its coset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SquareClassTriple(pub [BigInt; 3]);

impl SquareClassTriple {
    pub fn identity() -> Self {
        SquareClassTriple([BigInt::one(), BigInt::one(), BigInt::one()])
    }

    pub fn from_ints(a: i64, b: i64, c: i64) -> Self {
        SquareClassTriple([a.into(), b.into(), c.into()])
    }

    /// Componentwise product reduced to squarefree representatives.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = self.0.clone();
        for (o, b) in out.iter_mut().zip(other.0.iter()) {
            let g = o.gcd(b);
            let prod = (&*o / &g) * (b / &g);
            *o = squarefree_part(&prod)?;
        }
        Ok(SquareClassTriple(out))
    }

    /// Square classes of arbitrary nonzero rationals.
    pub fn of_rationals(values: [&BigRational; 3]) -> Result<Self> {
        Ok(SquareClassTriple([
            rational_square_class(values[0])?,
            rational_square_class(values[1])?,
            rational_square_class(values[2])?,
        ]))
    }
}

impl fmt::Display for SquareClassTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

impl Serialize for SquareClassTriple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(3))?;
        for c in &self.0 {
            seq.serialize_element(&c.to_string())?;
        }
        seq.end()
    }
}
