//! Totally definite quaternion algebras `(a, b)_F`, orders and their norm forms.

use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{factorize, gcd_i64, is_prime, is_squarefree, Rat};
use crate::enumerate::Region;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, FieldTag, Ring};
use crate::forms::{validate_form, QuadraticForm};
use crate::linalg::{det, hnf_rows, inverse, mat_vec, row_to_gcd, FMat};

/// `x0 + x1 i + x2 j + x3 ij`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quat(pub [FieldElement; 4]);

#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionAlgebra {
    ring: Ring,
    a: FieldElement,
    b: FieldElement,
}

impl Quat {
    pub fn zero(ring: Ring) -> Quat {
        Quat(std::array::from_fn(|_| FieldElement::zero(ring)))
    }

    pub fn one(ring: Ring) -> Quat {
        Quat::basis(ring, 0)
    }

    pub fn basis(ring: Ring, k: usize) -> Quat {
        Quat(std::array::from_fn(|i| FieldElement::int(ring, (i == k) as i64)))
    }

    pub fn from_rats(ring: Ring, c: [Rat; 4]) -> Quat {
        Quat(c.map(|x| FieldElement::from_rat(ring, x)))
    }

    pub fn scale(&self, s: &FieldElement) -> Quat {
        Quat(std::array::from_fn(|i| s * &self.0[i]))
    }

    pub fn conj(&self) -> Quat {
        let x = &self.0;
        Quat([x[0].clone(), -&x[1], -&x[2], -&x[3]])
    }

    pub fn trace(&self) -> FieldElement {
        &self.0[0] + &self.0[0]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn embed(&self, s: usize) -> [f64; 4] {
        std::array::from_fn(|i| self.0[i].embed(s))
    }
}

impl Add for &Quat {
    type Output = Quat;
    fn add(self, o: &Quat) -> Quat {
        Quat(std::array::from_fn(|i| &self.0[i] + &o.0[i]))
    }
}

impl Sub for &Quat {
    type Output = Quat;
    fn sub(self, o: &Quat) -> Quat {
        Quat(std::array::from_fn(|i| &self.0[i] - &o.0[i]))
    }
}

impl Neg for &Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat(std::array::from_fn(|i| -&self.0[i]))
    }
}

impl QuaternionAlgebra {
    pub fn new(a: FieldElement, b: FieldElement) -> Result<QuaternionAlgebra> {
        let ring = a.ring();
        if !(-&a).is_totally_positive() || !(-&b).is_totally_positive() {
            return Err(Error::NotDefinite);
        }
        Ok(QuaternionAlgebra { ring, a, b })
    }

    /// Hamilton quaternions `(-1, -1)_F`.
    pub fn hamilton(ring: Ring) -> QuaternionAlgebra {
        QuaternionAlgebra::new(FieldElement::int(ring, -1), FieldElement::int(ring, -1)).expect("definite")
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn params(&self) -> (&FieldElement, &FieldElement) {
        (&self.a, &self.b)
    }

    pub fn mul(&self, x: &Quat, y: &Quat) -> Quat {
        let (a, b) = (&self.a, &self.b);
        let ab = a * b;
        let [x0, x1, x2, x3] = &x.0;
        let [y0, y1, y2, y3] = &y.0;
        let z0 = &(&(x0 * y0) + &(a * &(x1 * y1))) + &(&(b * &(x2 * y2)) - &(&ab * &(x3 * y3)));
        let z1 = &(&(x0 * y1) + &(x1 * y0)) + &(&(b * &(x3 * y2)) - &(b * &(x2 * y3)));
        let z2 = &(&(x0 * y2) + &(x2 * y0)) + &(&(a * &(x1 * y3)) - &(a * &(x3 * y1)));
        let z3 = &(&(x0 * y3) + &(x3 * y0)) + &(&(x1 * y2) - &(x2 * y1));
        Quat([z0, z1, z2, z3])
    }

    /// Reduced norm `x x*`.
    pub fn nr(&self, x: &Quat) -> FieldElement {
        let [x0, x1, x2, x3] = &x.0;
        let ab = &self.a * &self.b;
        &(&(x0 * x0) - &(&self.a * &(x1 * x1))) + &(&(&ab * &(x3 * x3)) - &(&self.b * &(x2 * x2)))
    }

    /// `tr(x y*)`, twice the norm-form bilinear pairing.
    pub fn trace_pair(&self, x: &Quat, y: &Quat) -> FieldElement {
        self.mul(x, &y.conj()).trace()
    }

    /// Embedded reduced norm.
    pub fn nr_embed(&self, x: &[f64; 4], s: usize) -> f64 {
        let (a, b) = (self.a.embed(s), self.b.embed(s));
        x[0] * x[0] - a * x[1] * x[1] - b * x[2] * x[2] + a * b * x[3] * x[3]
    }

    /// Embedded product.
    pub fn mul_embed(&self, x: &[f64; 4], y: &[f64; 4], s: usize) -> [f64; 4] {
        let (a, b) = (self.a.embed(s), self.b.embed(s));
        [
            x[0] * y[0] + a * x[1] * y[1] + b * x[2] * y[2] - a * b * x[3] * y[3],
            x[0] * y[1] + x[1] * y[0] - b * x[2] * y[3] + b * x[3] * y[2],
            x[0] * y[2] + x[2] * y[0] + a * x[1] * y[3] - a * x[3] * y[1],
            x[0] * y[3] + x[3] * y[0] + x[1] * y[2] - x[2] * y[1],
        ]
    }
}

#[derive(Clone, Debug)]
pub struct QuaternionOrder {
    pub alg: QuaternionAlgebra,
    pub basis: Vec<Quat>,
    /// Gram `tr(g_i g_j*)`, so that the form is the reduced norm.
    pub norm_form: QuadraticForm,
    pub disc: FieldElement,
    /// `N(disc*)`, the square root of `|N(disc)|`.
    pub disc_star_norm: u64,
    /// Basis of the trace-zero part.
    pub trace_zero: Vec<Quat>,
    pub ternary: QuadraticForm,
    /// `coords * basis` maps `O_F`-coordinates to the algebra; its inverse is kept here.
    coord_inv: FMat,
}

/// The norm form in the basis `1, trace-zero basis`.
#[derive(Clone, Debug)]
pub struct SplitNormForm {
    pub quaternary: QuadraticForm,
    pub ternary: QuadraticForm,
    /// Columns are the new basis in the coordinates of the order basis.
    pub change: FMat,
    /// `[O : O_F 1 + O^0]`.
    pub index: u64,
}

fn coord_matrix(basis: &[Quat]) -> FMat {
    // Column k holds the coordinates of basis[k].
    (0..4).map(|i| basis.iter().map(|g| g.0[i].clone()).collect()).collect()
}

fn isqrt_exact(n: &BigInt) -> Option<u64> {
    let r = n.sqrt();
    (&r * &r == *n).then(|| r.to_u64()).flatten()
}

impl QuaternionOrder {
    /// Coordinates of `x` in the order basis.
    pub fn coords(&self, x: &Quat) -> Vec<FieldElement> {
        mat_vec(&self.coord_inv, &x.0)
    }

    pub fn contains(&self, x: &Quat) -> bool {
        self.coords(x).iter().all(FieldElement::is_integral)
    }

    pub fn element(&self, c: &[FieldElement]) -> Quat {
        let ring = self.alg.ring();
        self.basis.iter().zip(c).fold(Quat::zero(ring), |s, (g, x)| &s + &g.scale(x))
    }

    pub fn level_norm(&self) -> u64 {
        self.norm_form.level_norm()
    }

    pub fn split(&self) -> Result<SplitNormForm> {
        norm_form_split(self)
    }
}

/// Validates closure and computes the derived data.
pub fn order_from_basis(alg: &QuaternionAlgebra, basis: Vec<Quat>) -> Result<QuaternionOrder> {
    let ring = alg.ring();
    if basis.len() != 4 {
        return Err(Error::Shape(format!("an order basis has 4 elements, got {}", basis.len())));
    }
    let m = coord_matrix(&basis);
    if det(&m).is_zero() {
        return Err(Error::Dependent);
    }
    let coord_inv = inverse(&m)?;
    let in_span = |x: &Quat| mat_vec(&coord_inv, &x.0).iter().all(FieldElement::is_integral);
    if !in_span(&Quat::one(ring)) {
        return Err(Error::MissingOne);
    }
    for i in 0..4 {
        for j in 0..4 {
            if !in_span(&alg.mul(&basis[i], &basis[j])) {
                return Err(Error::NotClosed(i, j));
            }
        }
    }
    let gram: FMat = (0..4).map(|i| (0..4).map(|j| alg.trace_pair(&basis[i], &basis[j])).collect()).collect();
    let norm_form = validate_form(ring, gram)?;
    let disc = norm_form.det().clone();
    let nd = disc.norm().abs();
    let disc_star_norm = if nd.is_integer() { isqrt_exact(&nd.to_integer()) } else { None }
        .ok_or_else(|| Error::Invariant(format!("N(disc) = {nd} is not a square")))?;
    let (trace_zero, ternary) = trace_zero_part(alg, &basis)?;
    Ok(QuaternionOrder { alg: alg.clone(), basis, norm_form, disc, disc_star_norm, trace_zero, ternary, coord_inv })
}

fn trace_zero_part(alg: &QuaternionAlgebra, basis: &[Quat]) -> Result<(Vec<Quat>, QuadraticForm)> {
    let ring = alg.ring();
    let row: Vec<FieldElement> = basis.iter().map(Quat::trace).collect();
    let (_, v) = row_to_gcd(&row)?;
    let tz: Vec<Quat> = (1..4)
        .map(|k| (0..4).fold(Quat::zero(ring), |s, i| &s + &basis[i].scale(&v[i][k])))
        .collect();
    let gram: FMat = (0..3).map(|i| (0..3).map(|j| alg.trace_pair(&tz[i], &tz[j])).collect()).collect();
    Ok((tz, validate_form(ring, gram)?))
}

/// The norm form on `O_F 1 + O^0`, Gram `diag(2) + ternary`.
pub fn norm_form_split(o: &QuaternionOrder) -> Result<SplitNormForm> {
    let ring = o.alg.ring();
    let mut newb = vec![Quat::one(ring)];
    newb.extend(o.trace_zero.iter().cloned());
    let cols: Vec<Vec<FieldElement>> = newb.iter().map(|x| o.coords(x)).collect();
    let change: FMat = (0..4).map(|i| (0..4).map(|j| cols[j][i].clone()).collect()).collect();
    let quaternary = o.norm_form.transform(&change)?;
    let ternary = quaternary.split_ternary()?;
    let idx = det(&change).norm().abs();
    let index = idx.to_integer().to_u64().ok_or(Error::Invariant("index overflow".into()))?;
    if quaternary.det() != &(o.disc.clone() * (&det(&change) * &det(&change))) {
        return Err(Error::Invariant("split determinant mismatch".into()));
    }
    Ok(SplitNormForm { quaternary, ternary, change, index })
}

/// Table of `(a, b)` and a maximal order basis for the ramified primes over `Q`.
fn maximal_order(p: u64) -> Result<(QuaternionAlgebra, Vec<Quat>)> {
    let r = Ring::RATIONAL;
    let q = |c: [(i64, i64); 4]| Quat::from_rats(r, c.map(|(n, d)| Rat::new(n.into(), d.into())));
    let (a, b, basis) = match p {
        2 => (-1, -1, vec![
            q([(1, 1), (0, 1), (0, 1), (0, 1)]),
            q([(0, 1), (1, 1), (0, 1), (0, 1)]),
            q([(0, 1), (0, 1), (1, 1), (0, 1)]),
            q([(1, 2), (1, 2), (1, 2), (1, 2)]),
        ]),
        3 | 7 => (-1, -(p as i64), vec![
            q([(1, 1), (0, 1), (0, 1), (0, 1)]),
            q([(0, 1), (1, 1), (0, 1), (0, 1)]),
            q([(1, 2), (0, 1), (1, 2), (0, 1)]),
            q([(0, 1), (1, 2), (0, 1), (1, 2)]),
        ]),
        5 | 13 => (-2, -(p as i64), vec![
            q([(1, 1), (0, 1), (0, 1), (0, 1)]),
            q([(1, 2), (0, 1), (1, 2), (1, 2)]),
            q([(0, 1), (1, 4), (1, 2), (1, 4)]),
            q([(0, 1), (0, 1), (0, 1), (1, 1)]),
        ]),
        _ => return Err(Error::UnsupportedPrime(p)),
    };
    let alg = QuaternionAlgebra::new(FieldElement::int(r, a), FieldElement::int(r, b))?;
    Ok((alg, basis))
}

/// Eichler order of level `n` in the definite algebra over `Q` ramified at `p`, as
/// `O cap nu O nu^-1` for a primitive `nu in O` of reduced norm `n`.
pub fn builtin_eichler_order(p: u64, n: u64) -> Result<QuaternionOrder> {
    if !is_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    if n == 0 || !is_squarefree(n) || gcd_i64(p as i64, n as i64) != 1 {
        return Err(Error::BadLevel(p, n));
    }
    let (alg, basis) = maximal_order(p)?;
    let max = order_from_basis(&alg, basis)?;
    if n == 1 {
        return Ok(max);
    }
    let r = Ring::RATIONAL;
    let primes: Vec<i128> = factorize(n).into_iter().map(|(q, _)| q as i128).collect();
    let ell = max.norm_form.ellipsoid();
    let target = n as i128;
    let (cands, _) = ell.collect(&Region::ball(4, &[n as f64]), |x| max.norm_form.value_int(x).a == target);
    let nu = cands
        .iter()
        .find(|c| primes.iter().all(|q| c.iter().any(|v| v.a % q != 0)))
        .ok_or(Error::NoPrimitiveElement(n))?;
    let nu = max.element(&nu.iter().map(|v| v.to_fe(r)).collect::<Vec<_>>());
    let nu_c = nu.conj();
    // Integer matrix of x -> nu* x nu in the order basis.
    let lin: Vec<Vec<i64>> = (0..4)
        .map(|k| {
            let y = alg.mul(&alg.mul(&nu_c, &max.basis[k]), &nu);
            max.coords(&y).iter().map(|c| c.to_oint().expect("closed").a as i64).collect()
        })
        .collect();
    let ni = n as i64;
    let mut gens: Vec<Vec<BigInt>> = (0..4)
        .map(|k| (0..4).map(|i| BigInt::from(if i == k { ni } else { 0 })).collect())
        .collect();
    let mut c = [0i64; 4];
    loop {
        let ok = (0..4).all(|i| (0..4).map(|k| c[k] * lin[k][i]).sum::<i64>().rem_euclid(ni) == 0);
        if ok && c.iter().any(|&x| x != 0) {
            gens.push(c.iter().map(|&x| BigInt::from(x)).collect());
        }
        let mut k = 0;
        while k < 4 {
            c[k] += 1;
            if c[k] < ni {
                break;
            }
            c[k] = 0;
            k += 1;
        }
        if k == 4 {
            break;
        }
    }
    let h = hnf_rows(&gens);
    let basis: Vec<Quat> = h
        .iter()
        .map(|row| max.element(&row.iter().map(|x| FieldElement::from_rat(r, Rat::from_integer(x.clone()))).collect::<Vec<_>>()))
        .collect();
    let o = order_from_basis(&alg, basis)?;
    if o.disc_star_norm != p * n {
        return Err(Error::Invariant(format!("Eichler order has N(disc*) = {}", o.disc_star_norm)));
    }
    Ok(o)
}

/// `N(D_B N) prod_{p | D_B} (1 - 1/p) prod_{q | N} (1 - 1/q)^-1`.
pub fn class_number_estimate(p: u64, n: u64) -> f64 {
    let mut h = (p * n) as f64 * (1.0 - 1.0 / p as f64);
    for (q, _) in factorize(n) {
        h /= 1.0 - 1.0 / q as f64;
    }
    h
}

/// A scalar as a rational string or a coordinate vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoordJson {
    Rational(String),
    Vector(Vec<String>),
}

impl CoordJson {
    fn parse(&self, field: &Field) -> Result<FieldElement> {
        match self {
            CoordJson::Rational(s) => field.parse_element(std::slice::from_ref(s)),
            CoordJson::Vector(v) => field.parse_element(v),
        }
    }
}

/// JSON order description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderJson {
    pub field: String,
    pub a: CoordJson,
    pub b: CoordJson,
    pub basis: Vec<Vec<CoordJson>>,
}

impl OrderJson {
    pub fn load(&self) -> Result<(Field, QuaternionOrder)> {
        let field = Field::new(self.field.parse::<FieldTag>()?)?;
        let alg = QuaternionAlgebra::new(self.a.parse(&field)?, self.b.parse(&field)?)?;
        let basis = self
            .basis
            .iter()
            .map(|v| {
                let c: Vec<FieldElement> = v.iter().map(|c| c.parse(&field)).collect::<Result<_>>()?;
                let c: [FieldElement; 4] = c.try_into().map_err(|_| Error::Shape("basis vectors have 4 entries".into()))?;
                Ok(Quat(c))
            })
            .collect::<Result<Vec<_>>>()?;
        let o = order_from_basis(&alg, basis)?;
        Ok((field, o))
    }
}

/// Lipschitz order `Z<1, i, j, ij>` in the Hamilton quaternions.
pub fn lipschitz() -> QuaternionOrder {
    let r = Ring::RATIONAL;
    let alg = QuaternionAlgebra::hamilton(r);
    order_from_basis(&alg, (0..4).map(|k| Quat::basis(r, k)).collect()).expect("Lipschitz order")
}

/// Hurwitz order `Z<1, i, j, (1+i+j+ij)/2>`.
pub fn hurwitz() -> QuaternionOrder {
    builtin_eichler_order(2, 1).expect("Hurwitz order")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    #[test]
    fn lipschitz_and_hurwitz() {
        let l = lipschitz();
        assert_eq!(l.disc.norm(), rat_int(16));
        assert_eq!(l.disc_star_norm, 4);
        let two = crate::linalg::identity(Ring::RATIONAL, 4)
            .into_iter()
            .map(|r| r.into_iter().map(|x| &x * &FieldElement::int(Ring::RATIONAL, 2)).collect())
            .collect::<FMat>();
        assert_eq!(l.norm_form.gram(), &two);
        let s = l.split().unwrap();
        assert_eq!(s.index, 1);
        assert_eq!(s.ternary.det().norm(), rat_int(8));

        let h = hurwitz();
        assert_eq!(h.disc.norm(), rat_int(4));
        assert_eq!(h.disc_star_norm, 2);
        assert_eq!(h.level_norm(), 2);
        let s = h.split().unwrap();
        assert_eq!(s.index, 2);
        assert_eq!(s.quaternary.det().norm(), rat_int(16));
    }

    #[test]
    fn not_closed() {
        let r = Ring::RATIONAL;
        let alg = QuaternionAlgebra::hamilton(r);
        let mut b: Vec<Quat> = (0..4).map(|k| Quat::basis(r, k)).collect();
        b[3] = Quat::from_rats(r, [rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 2)]);
        assert!(matches!(order_from_basis(&alg, b), Err(Error::NotClosed(..))));
    }

    #[test]
    fn maximal_orders() {
        for p in [2, 3, 5, 7, 13] {
            let o = builtin_eichler_order(p, 1).unwrap();
            assert_eq!(o.disc_star_norm, p, "p = {p}");
            assert_eq!(o.level_norm(), p);
        }
    }

    #[test]
    fn eichler_levels() {
        let o = builtin_eichler_order(2, 3).unwrap();
        assert_eq!(o.disc_star_norm, 6);
        assert_eq!(o.disc.norm(), rat_int(36));
        assert_eq!(o.level_norm(), 6);
        assert!(matches!(builtin_eichler_order(2, 2), Err(Error::BadLevel(2, 2))));
        assert!(matches!(builtin_eichler_order(11, 1), Err(Error::UnsupportedPrime(11))));
        for (p, n) in [(3, 2), (5, 6), (7, 5), (13, 3), (2, 15)] {
            assert_eq!(builtin_eichler_order(p, n).unwrap().disc_star_norm, p * n);
        }
    }
}
