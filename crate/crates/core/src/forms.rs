//! Integral totally positive definite quadratic forms `Q(x) = x^T A x / 2`.

use std::cmp::Ordering;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::arith::{rat, Rat};
use crate::enumerate::Ellipsoid;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, FieldTag, OInt, Ring};
use crate::ideal::ideal_norm;
use crate::linalg::{congruence, det, inverse, FMat};

#[derive(Clone, Debug)]
pub struct QuadraticForm {
    ring: Ring,
    gram: FMat,
    /// `A` with the diagonal halved, as machine integers.
    coeffs: Vec<Vec<OInt>>,
    int_gram: Vec<Vec<OInt>>,
    det: FieldElement,
    level: u64,
}

impl PartialEq for QuadraticForm {
    fn eq(&self, other: &Self) -> bool {
        self.gram == other.gram
    }
}

/// Checks symmetry, integrality, even diagonal and total positivity, and computes the level.
pub fn validate_form(ring: Ring, gram: FMat) -> Result<QuadraticForm> {
    let n = gram.len();
    if n == 0 || gram.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("Gram matrix must be square, got {n} rows")));
    }
    for i in 0..n {
        for j in 0..n {
            if gram[i][j] != gram[j][i] {
                return Err(Error::NotSymmetric(i, j));
            }
            if !gram[i][j].is_integral() {
                return Err(Error::NotIntegral);
            }
        }
    }
    let half = FieldElement::from_rat(ring, rat(1, 2));
    for (i, row) in gram.iter().enumerate() {
        if !(&row[i] * &half).is_integral() {
            return Err(Error::OddDiagonal(i));
        }
    }
    for s in 0..ring.degree() {
        for k in 1..=n {
            let minor: FMat = gram[..k].iter().map(|r| r[..k].to_vec()).collect();
            if det(&minor).sign_at(s) != Ordering::Greater {
                return Err(Error::NotPositiveDefinite { embedding: s, minor: k });
            }
        }
    }
    let d = det(&gram);
    let level = level_norm(ring, &gram)?;
    let to_int = |x: &FieldElement| x.to_oint().ok_or(Error::NotIntegral);
    let int_gram = gram.iter().map(|r| r.iter().map(to_int).collect()).collect::<Result<Vec<Vec<OInt>>>>()?;
    let mut coeffs = int_gram.clone();
    for (i, row) in coeffs.iter_mut().enumerate() {
        row[i] = to_int(&(&gram[i][i] * &half))?;
    }
    Ok(QuadraticForm { ring, gram, coeffs, int_gram, det: d, level })
}

/// Norm of the level ideal, the inverse of the ideal generated by
/// `(A^-1)_ii / 2` and `(A^-1)_ij`.
fn level_norm(ring: Ring, gram: &FMat) -> Result<u64> {
    let inv = inverse(gram)?;
    let n = gram.len();
    let half = FieldElement::from_rat(ring, rat(1, 2));
    let mut gens = Vec::new();
    for i in 0..n {
        gens.push(&inv[i][i] * &half);
        for j in i + 1..n {
            gens.push(inv[i][j].clone());
        }
    }
    let na = ideal_norm(ring, &gens);
    let level = na.recip();
    if !level.is_integer() {
        return Err(Error::Invariant(format!("level norm {level} is not integral")));
    }
    let nl = FieldElement::from_rat(ring, level.clone());
    if gens.iter().any(|g| !(&nl * g).is_integral()) {
        return Err(Error::Invariant("N A^-1 is not integral".into()));
    }
    level.to_integer().try_into().map_err(|_| Error::Invariant("level too large".into()))
}

impl QuadraticForm {
    pub fn new(ring: Ring, gram: FMat) -> Result<QuadraticForm> {
        validate_form(ring, gram)
    }

    /// Form over `Q` from an integer Gram matrix.
    pub fn from_i64(rows: &[Vec<i64>]) -> Result<QuadraticForm> {
        let r = Ring::RATIONAL;
        let gram = rows.iter().map(|row| row.iter().map(|&x| FieldElement::int(r, x)).collect()).collect();
        validate_form(r, gram)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &FMat {
        &self.gram
    }

    pub fn int_gram(&self) -> &[Vec<OInt>] {
        &self.int_gram
    }

    pub fn det(&self) -> &FieldElement {
        &self.det
    }

    /// `|N(det A)|`.
    pub fn det_norm(&self) -> Rat {
        self.det.norm().abs()
    }

    pub fn level_norm(&self) -> u64 {
        self.level
    }

    /// Exact value `x^T A x / 2`.
    pub fn value(&self, x: &[FieldElement]) -> FieldElement {
        let mut s = FieldElement::zero(self.ring);
        let half = FieldElement::from_rat(self.ring, rat(1, 2));
        for i in 0..x.len() {
            for j in 0..x.len() {
                let t = &(&x[i] * &self.gram[i][j]) * &x[j];
                s = s + t;
            }
        }
        &s * &half
    }

    /// Exact value on an integral vector.
    pub fn value_int(&self, x: &[OInt]) -> OInt {
        let r = self.ring;
        let n = x.len();
        let mut s = OInt::ZERO;
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            // x_i (a_ii/2 x_i + sum_{j>i} a_ij x_j)
            let mut inner = self.coeffs[i][i].mul(x[i], r);
            for j in i + 1..n {
                if !x[j].is_zero() {
                    inner = inner + self.coeffs[i][j].mul(x[j], r);
                }
            }
            s = s + x[i].mul(inner, r);
        }
        s
    }

    /// Exact bilinear value `x^T A y / 2`.
    pub fn inner(&self, x: &[FieldElement], y: &[FieldElement]) -> FieldElement {
        let mut s = FieldElement::zero(self.ring);
        for i in 0..x.len() {
            for j in 0..y.len() {
                s = s + &(&x[i] * &self.gram[i][j]) * &y[j];
            }
        }
        &s * &FieldElement::from_rat(self.ring, rat(1, 2))
    }

    pub fn embedded_gram(&self, s: usize) -> Vec<Vec<f64>> {
        self.gram.iter().map(|r| r.iter().map(|x| x.embed(s)).collect()).collect()
    }

    pub fn ellipsoid(&self) -> Ellipsoid {
        Ellipsoid::from_gram(self.ring, &self.int_gram).expect("validated form is definite")
    }

    /// The form `U^T A U`.
    pub fn transform(&self, u: &FMat) -> Result<QuadraticForm> {
        validate_form(self.ring, congruence(&self.gram, u))
    }

    pub fn to_json(&self, tag: FieldTag) -> FormJson {
        FormJson {
            rank: self.rank(),
            field: tag.to_string(),
            gram: self.gram.iter().map(|r| r.iter().map(|x| x.to_strings()).collect()).collect(),
        }
    }

    /// Whether the form has the shape `y0^2 + Q~(y1, y2, y3)`.
    pub fn is_split(&self) -> bool {
        self.rank() == 4
            && self.gram[0][0] == FieldElement::int(self.ring, 2)
            && (1..4).all(|j| self.gram[0][j].is_zero())
    }

    /// The ternary part `Q~` of a split quaternary form.
    pub fn split_ternary(&self) -> Result<QuadraticForm> {
        if !self.is_split() {
            return Err(Error::NotSplit);
        }
        let g: FMat = self.gram[1..].iter().map(|r| r[1..].to_vec()).collect();
        validate_form(self.ring, g)
    }
}

/// JSON form description: Gram entries as coordinate vectors of rational strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormJson {
    pub rank: usize,
    pub field: String,
    pub gram: Vec<Vec<Vec<String>>>,
}

impl FormJson {
    pub fn load(&self) -> Result<(Field, QuadraticForm)> {
        let field = Field::new(self.field.parse()?)?;
        if self.gram.len() != self.rank {
            return Err(Error::Shape(format!("rank {} but {} rows", self.rank, self.gram.len())));
        }
        let gram = self
            .gram
            .iter()
            .map(|r| r.iter().map(|c| field.parse_element(c)).collect::<Result<Vec<_>>>())
            .collect::<Result<FMat>>()?;
        let q = validate_form(field.ring(), gram)?;
        Ok((field, q))
    }
}
