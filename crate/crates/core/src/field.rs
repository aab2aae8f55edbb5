//! Totally real fields of degree at most two, with exact element arithmetic.
//!
//! Elements are written `a + b*w` in the integral basis `(1, w)`, where
//! `w^2 = p*w + q`. Over `Q` the second coordinate is always zero.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{fmt_rat, isqrt, is_squarefree, rat_int, rat_to_f64, sign_surd, Rat};
use crate::error::{Error, Result};

/// Multiplication data of the integral basis: `w^2 = p*w + q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ring {
    d: u8,
    p: i64,
    q: i64,
}

impl Ring {
    pub const RATIONAL: Ring = Ring { d: 1, p: 0, q: 0 };

    pub fn quadratic(p: i64, q: i64) -> Ring {
        Ring { d: 2, p, q }
    }

    pub fn degree(&self) -> usize {
        self.d as usize
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// Field discriminant `p^2 + 4q` (1 over `Q`).
    pub fn disc(&self) -> i64 {
        if self.d == 1 {
            1
        } else {
            self.p * self.p + 4 * self.q
        }
    }

    /// `w` under the embedding `s`; the first embedding takes the larger root.
    pub fn omega(&self, s: usize) -> f64 {
        if self.d == 1 {
            return 0.0;
        }
        let r = (self.disc() as f64).sqrt();
        if s == 0 {
            (self.p as f64 + r) / 2.0
        } else {
            (self.p as f64 - r) / 2.0
        }
    }

    pub fn omegas(&self) -> [f64; 2] {
        [self.omega(0), self.omega(1)]
    }
}

/// An algebraic integer `a + b*w` with machine coordinates, for hot loops.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OInt {
    pub a: i128,
    pub b: i128,
}

impl OInt {
    pub const ZERO: OInt = OInt { a: 0, b: 0 };
    pub const ONE: OInt = OInt { a: 1, b: 0 };

    pub fn new(a: i128, b: i128) -> OInt {
        OInt { a, b }
    }

    pub fn int(a: i128) -> OInt {
        OInt { a, b: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn mul(self, o: OInt, ring: Ring) -> OInt {
        let bb = self.b * o.b;
        OInt {
            a: self.a * o.a + bb * ring.q as i128,
            b: self.a * o.b + self.b * o.a + bb * ring.p as i128,
        }
    }

    pub fn scale(self, k: i128) -> OInt {
        OInt { a: self.a * k, b: self.b * k }
    }

    pub fn norm(self, ring: Ring) -> i128 {
        if ring.d == 1 {
            return self.a;
        }
        self.a * self.a + self.a * self.b * ring.p as i128 - self.b * self.b * ring.q as i128
    }

    pub fn conj(self, ring: Ring) -> OInt {
        if ring.d == 1 {
            return self;
        }
        OInt { a: self.a + self.b * ring.p as i128, b: -self.b }
    }

    pub fn embed(self, ring: Ring, s: usize) -> f64 {
        self.a as f64 + self.b as f64 * ring.omega(s)
    }

    pub fn embed_with(self, omega: f64) -> f64 {
        self.a as f64 + self.b as f64 * omega
    }

    pub fn to_fe(self, ring: Ring) -> FieldElement {
        FieldElement::new(ring, Rat::from_integer(self.a.into()), Rat::from_integer(self.b.into()))
    }

    /// Exact sign under embedding `s`.
    pub fn sign_at(self, ring: Ring, s: usize) -> Ordering {
        self.to_fe(ring).sign_at(s)
    }
}

impl Add for OInt {
    type Output = OInt;
    fn add(self, o: OInt) -> OInt {
        OInt { a: self.a + o.a, b: self.b + o.b }
    }
}

impl Sub for OInt {
    type Output = OInt;
    fn sub(self, o: OInt) -> OInt {
        OInt { a: self.a - o.a, b: self.b - o.b }
    }
}

impl Neg for OInt {
    type Output = OInt;
    fn neg(self) -> OInt {
        OInt { a: -self.a, b: -self.b }
    }
}

/// An element of `F` with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    a: Rat,
    b: Rat,
    ring: Ring,
}

impl FieldElement {
    pub fn new(ring: Ring, a: Rat, b: Rat) -> FieldElement {
        let b = if ring.d == 1 { Rat::zero() } else { b };
        FieldElement { a, b, ring }
    }

    pub fn from_i64(ring: Ring, a: i64, b: i64) -> FieldElement {
        FieldElement::new(ring, rat_int(a), rat_int(b))
    }

    pub fn int(ring: Ring, n: i64) -> FieldElement {
        FieldElement::from_i64(ring, n, 0)
    }

    pub fn from_rat(ring: Ring, r: Rat) -> FieldElement {
        FieldElement::new(ring, r, Rat::zero())
    }

    pub fn zero(ring: Ring) -> FieldElement {
        FieldElement::int(ring, 0)
    }

    pub fn one(ring: Ring) -> FieldElement {
        FieldElement::int(ring, 1)
    }

    pub fn omega(ring: Ring) -> FieldElement {
        FieldElement::from_i64(ring, 0, 1)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn coords(&self) -> (&Rat, &Rat) {
        (&self.a, &self.b)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn is_integral(&self) -> bool {
        self.a.is_integer() && self.b.is_integer()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn to_oint(&self) -> Option<OInt> {
        if !self.is_integral() {
            return None;
        }
        Some(OInt { a: self.a.numer().to_i128()?, b: self.b.numer().to_i128()? })
    }

    pub fn conj(&self) -> FieldElement {
        if self.ring.d == 1 {
            return self.clone();
        }
        let p = rat_int(self.ring.p);
        FieldElement::new(self.ring, &self.a + &self.b * p, -&self.b)
    }

    pub fn norm(&self) -> Rat {
        if self.ring.d == 1 {
            return self.a.clone();
        }
        let p = rat_int(self.ring.p);
        let q = rat_int(self.ring.q);
        &self.a * &self.a + &self.a * &self.b * p - &self.b * &self.b * q
    }

    pub fn trace(&self) -> Rat {
        if self.ring.d == 1 {
            return self.a.clone();
        }
        rat_int(2) * &self.a + &self.b * rat_int(self.ring.p)
    }

    pub fn inv(&self) -> Option<FieldElement> {
        if self.is_zero() {
            return None;
        }
        if self.ring.d == 1 {
            return Some(FieldElement::from_rat(self.ring, self.a.recip()));
        }
        let n = self.norm();
        let c = self.conj();
        Some(FieldElement::new(self.ring, c.a / &n, c.b / &n))
    }

    pub fn pow(&self, k: i64) -> FieldElement {
        let base = if k < 0 { self.inv().expect("power of zero") } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = FieldElement::one(self.ring);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        acc
    }

    pub fn embed(&self, s: usize) -> f64 {
        rat_to_f64(&self.a) + rat_to_f64(&self.b) * self.ring.omega(s)
    }

    pub fn embeddings(&self) -> Vec<f64> {
        (0..self.ring.degree()).map(|s| self.embed(s)).collect()
    }

    /// Exact sign of the image under embedding `s`.
    pub fn sign_at(&self, s: usize) -> Ordering {
        if self.ring.d == 1 {
            return crate::arith::sign_of(&self.a);
        }
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        let u = &self.a + &self.b * rat_int(self.ring.p) * &half;
        let v = &self.b * &half;
        let v = if s == 0 { v } else { -v };
        sign_surd(&u, &v, self.ring.disc())
    }

    /// Exact comparison of two elements under embedding `s`.
    pub fn cmp_at(&self, other: &FieldElement, s: usize) -> Ordering {
        (self - other).sign_at(s)
    }

    pub fn is_totally_positive(&self) -> bool {
        (0..self.ring.degree()).all(|s| self.sign_at(s) == Ordering::Greater)
    }

    pub fn is_totally_nonnegative(&self) -> bool {
        (0..self.ring.degree()).all(|s| self.sign_at(s) != Ordering::Less)
    }

    /// Exact `x^s <= c^s` for rational `c >= 0` when `x^s >= 0`, via `(x^s)^k <= c^k`
    /// with `k` the degree; used for conditions of the shape `x^s <= y^(1/d)`.
    pub fn embed_pow_le(&self, s: usize, y: &Rat) -> bool {
        if self.sign_at(s) == Ordering::Less {
            return true;
        }
        let mut p = FieldElement::one(self.ring);
        for _ in 0..self.ring.degree() {
            p = &p * self;
        }
        FieldElement::from_rat(self.ring, y.clone()).cmp_at(&p, s) != Ordering::Less
    }

    pub fn to_strings(&self) -> Vec<String> {
        let mut v = vec![fmt_rat(&self.a)];
        if self.ring.d == 2 {
            v.push(fmt_rat(&self.b));
        }
        v
    }

    pub fn abs_embed_max(&self) -> f64 {
        self.embeddings().into_iter().map(f64::abs).fold(0.0, f64::max)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ring.d == 1 || self.b.is_zero() {
            return write!(f, "{}", fmt_rat(&self.a));
        }
        let b = if self.b.is_negative() {
            format!("- {}", fmt_rat(&-&self.b))
        } else {
            format!("+ {}", fmt_rat(&self.b))
        };
        write!(f, "{} {}*w", fmt_rat(&self.a), b)
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, o: &FieldElement) -> FieldElement {
        FieldElement::new(self.ring, &self.a + &o.a, &self.b + &o.b)
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, o: &FieldElement) -> FieldElement {
        FieldElement::new(self.ring, &self.a - &o.a, &self.b - &o.b)
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, o: &FieldElement) -> FieldElement {
        if self.ring.d == 1 {
            return FieldElement::new(self.ring, &self.a * &o.a, Rat::zero());
        }
        let bb = &self.b * &o.b;
        let a = &self.a * &o.a + &bb * rat_int(self.ring.q);
        let b = &self.a * &o.b + &self.b * &o.a + bb * rat_int(self.ring.p);
        FieldElement::new(self.ring, a, b)
    }
}

impl<'a> Div<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn div(self, o: &FieldElement) -> FieldElement {
        self * &o.inv().expect("division by zero")
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::new(self.ring, -&self.a, -&self.b)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, o: FieldElement) -> FieldElement {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, o: &FieldElement) -> FieldElement {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<FieldElement> for &'a FieldElement {
            type Output = FieldElement;
            fn $m(self, o: FieldElement) -> FieldElement {
                self.$m(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// Catalog of supported fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldTag {
    Q,
    Sqrt2,
    Sqrt5,
    SqrtD(i64),
}

impl FromStr for FieldTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<FieldTag> {
        let s = s.trim().trim_matches('"');
        match s {
            "Q" => Ok(FieldTag::Q),
            "Qsqrt2" => Ok(FieldTag::Sqrt2),
            "Qsqrt5" => Ok(FieldTag::Sqrt5),
            _ => {
                let d = s
                    .strip_prefix("QsqrtD:D=")
                    .ok_or_else(|| Error::UnknownField(s.to_string()))?;
                let d: i64 = d.trim().parse().map_err(|_| Error::UnknownField(s.to_string()))?;
                if d < 2 || !is_squarefree(d as u64) {
                    return Err(Error::BadDiscriminant(d));
                }
                Ok(FieldTag::SqrtD(d))
            }
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Q => write!(f, "Q"),
            FieldTag::Sqrt2 => write!(f, "Qsqrt2"),
            FieldTag::Sqrt5 => write!(f, "Qsqrt5"),
            FieldTag::SqrtD(d) => write!(f, "QsqrtD:D={d}"),
        }
    }
}

impl FieldTag {
    pub fn radicand(&self) -> Option<i64> {
        match self {
            FieldTag::Q => None,
            FieldTag::Sqrt2 => Some(2),
            FieldTag::Sqrt5 => Some(5),
            FieldTag::SqrtD(d) => Some(*d),
        }
    }
}

/// A fixed totally real field with its unit data.
#[derive(Clone, Debug)]
pub struct Field {
    tag: FieldTag,
    ring: Ring,
    /// Fundamental unit with first embedding greater than one.
    eps: Option<FieldElement>,
    /// Generator of the totally positive units, first embedding greater than one.
    eps_plus: Option<FieldElement>,
}

impl Field {
    pub fn new(tag: FieldTag) -> Result<Field> {
        let Some(d) = tag.radicand() else {
            return Ok(Field { tag, ring: Ring::RATIONAL, eps: None, eps_plus: None });
        };
        if d < 2 || !is_squarefree(d as u64) {
            return Err(Error::BadDiscriminant(d));
        }
        let ring = if d % 4 == 1 { Ring::quadratic(1, (d - 1) / 4) } else { Ring::quadratic(0, d) };
        let eps = match tag {
            FieldTag::Sqrt2 => FieldElement::from_i64(ring, 1, 1),
            FieldTag::Sqrt5 => FieldElement::from_i64(ring, 0, 1),
            _ => pell_unit(ring, d)?,
        };
        let n = eps.norm();
        if n.abs() != Rat::one() || !eps.is_integral() {
            return Err(Error::Invariant(format!("fundamental unit {eps} has norm {n}")));
        }
        // With norm +1 and first embedding > 1 the second embedding is positive too.
        let eps_plus = if n.is_negative() { &eps * &eps } else { eps.clone() };
        Ok(Field { tag, ring, eps: Some(eps), eps_plus: Some(eps_plus) })
    }

    pub fn rational() -> Field {
        Field::new(FieldTag::Q).expect("Q")
    }

    pub fn tag(&self) -> FieldTag {
        self.tag
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn degree(&self) -> usize {
        self.ring.degree()
    }

    pub fn elt(&self, a: i64, b: i64) -> FieldElement {
        FieldElement::from_i64(self.ring, a, b)
    }

    pub fn int(&self, n: i64) -> FieldElement {
        FieldElement::int(self.ring, n)
    }

    pub fn fundamental_unit(&self) -> Option<&FieldElement> {
        self.eps.as_ref()
    }

    pub fn totally_positive_unit(&self) -> Option<&FieldElement> {
        self.eps_plus.as_ref()
    }

    /// `(embeddings, exact norm)`.
    pub fn evaluate(&self, x: &FieldElement) -> (Vec<f64>, Rat) {
        (x.embeddings(), x.norm())
    }

    /// Parses a coordinate vector `["a", "b"]` (or `["a"]` over `Q`).
    pub fn parse_element(&self, coords: &[String]) -> Result<FieldElement> {
        if coords.is_empty() || coords.len() > self.degree() {
            return Err(Error::Shape(format!("element needs {} coordinates", self.degree())));
        }
        let a = crate::arith::parse_rat(&coords[0])?;
        let b = match coords.get(1) {
            Some(s) => crate::arith::parse_rat(s)?,
            None => Rat::zero(),
        };
        Ok(FieldElement::new(self.ring, a, b))
    }
}

/// Smallest unit greater than one of `Q(sqrt d)` by search on the Pell equation.
fn pell_unit(ring: Ring, d: i64) -> Result<FieldElement> {
    let four = d % 4 == 1;
    let k: i128 = if four { 4 } else { 1 };
    for y in 1..50_000_000i128 {
        let dy2 = d as i128 * y * y;
        for t in [-k, k] {
            let x2 = dy2 + t;
            if x2 <= 0 {
                continue;
            }
            let x = isqrt(x2 as u128) as i128;
            if x * x == x2 {
                // unit (x + y sqrt d)/2 or x + y sqrt d, written in the basis (1, w)
                let e = if four {
                    FieldElement::new(
                        ring,
                        Rat::new(BigInt::from(x - y), BigInt::from(2)),
                        Rat::from_integer(BigInt::from(y)),
                    )
                } else {
                    FieldElement::new(ring, Rat::from_integer(x.into()), Rat::from_integer(y.into()))
                };
                return Ok(e);
            }
        }
    }
    Err(Error::Invalid(format!("fundamental unit of Q(sqrt {d}) out of search range")))
}
