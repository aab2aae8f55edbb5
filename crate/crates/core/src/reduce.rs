//! Reduction to quasi-diagonal shape
//! `Q(Ux) = sum_j h_j (x_j + sum_{i>j} c_ji x_i)^2`.
//!
//! The `O_F`-lattice is viewed as a `Z`-lattice of rank `n d` with the trace form, which is
//! LLL-reduced; short vectors are then taken greedily as long as they span a direct summand.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::arith::{rat, rat_int, rat_to_f64, Rat};
use crate::enumerate::{Ellipsoid, Region};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, OInt, Ring};
use crate::forms::QuadraticForm;
use crate::ideal::generates_unit_ideal;
use crate::linalg::{det, is_unit, ldl_upper, lll_gram, FMat};

/// Realized constants of the size conditions.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SizeConstants {
    /// `max |a_ij^s| / a_jj^s` over `i != j`.
    pub offdiag: f64,
    /// `max h_j^s / h_{j+1}^s`.
    pub chain: f64,
    /// `max_j max_s h_j^s / min_s h_j^s`.
    pub balance: f64,
}

#[derive(Clone, Debug)]
pub struct ReducedForm {
    pub source: QuadraticForm,
    /// Columns are the new basis.
    pub u: FMat,
    /// `U^T A U`.
    pub reduced: QuadraticForm,
    pub h: Vec<FieldElement>,
    /// Upper unitriangular, `c[j][i]` for `i > j`.
    pub c: FMat,
    /// `prod h_j = det(U^T A U / 2)`.
    pub delta: FieldElement,
    pub sizes: SizeConstants,
}

/// Elements `v` of `O_F` as `Z`-coordinates in the basis `1, w`.
fn coords_of(x: &[OInt], d: usize) -> Vec<i128> {
    x.iter().flat_map(|v| if d == 1 { vec![v.a] } else { vec![v.a, v.b] }).collect()
}

fn from_coords(z: &[i128], d: usize) -> Vec<OInt> {
    if d == 1 {
        z.iter().map(|&a| OInt::int(a)).collect()
    } else {
        z.chunks(2).map(|c| OInt::new(c[0], c[1])).collect()
    }
}

/// Gram matrix of `x -> Tr Q(x)` on `Z^{nd}`, same halving convention as `A`.
fn trace_gram(q: &QuadraticForm) -> Vec<Vec<Rat>> {
    let ring = q.ring();
    let d = ring.degree();
    let n = q.rank();
    let w = FieldElement::omega(ring);
    let wp: Vec<FieldElement> = (0..2 * d).map(|k| w.pow(k as i64)).collect();
    let mut g = vec![vec![rat_int(0); n * d]; n * d];
    for i in 0..n {
        for j in 0..n {
            for s in 0..d {
                for t in 0..d {
                    g[i * d + s][j * d + t] = (&q.gram()[i][j] * &wp[s + t]).trace();
                }
            }
        }
    }
    g
}

fn last_nonzero(x: &[OInt]) -> Option<usize> {
    x.iter().rposition(|v| !v.is_zero())
}

/// Negates `x` unless its last nonzero entry is positive at the first embedding.
fn normalize_sign(x: &mut [OInt], ring: Ring) {
    if let Some(k) = last_nonzero(x) {
        if x[k].sign_at(ring, 0) == Ordering::Less {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Whether the `k x k` minors of the columns generate the unit ideal.
fn spans_summand(ring: Ring, cols: &[Vec<OInt>]) -> bool {
    let k = cols.len();
    let n = cols[0].len();
    let mut minors = Vec::new();
    for rows in subsets(n, k) {
        let m: FMat = rows.iter().map(|&r| cols.iter().map(|c| c[r].to_fe(ring)).collect()).collect();
        minors.push(det(&m));
    }
    generates_unit_ideal(ring, &minors)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    (0..(1u32 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect())
        .collect()
}

/// Greedy choice of short trace-form vectors spanning a basis of `O_F^n`.
fn short_basis(q: &QuadraticForm) -> Result<Vec<Vec<OInt>>> {
    let ring = q.ring();
    let d = ring.degree();
    let n = q.rank();
    let gt = trace_gram(q);
    let t = lll_gram(&gt, &rat(99, 100));
    let m = n * d;
    let t: Vec<Vec<i128>> = t
        .iter()
        .map(|r| r.iter().map(|x| x.to_i128().ok_or(Error::Invariant("transform overflow".into()))).collect())
        .collect::<Result<_>>()?;
    // Reduced Gram T G T^T, integral.
    let mut g = vec![vec![0i128; m]; m];
    for a in 0..m {
        for b in 0..m {
            let mut s = rat_int(0);
            for i in 0..m {
                for j in 0..m {
                    if t[a][i] != 0 && t[b][j] != 0 {
                        s += &gt[i][j] * Rat::from_integer(BigInt::from(t[a][i] * t[b][j]));
                    }
                }
            }
            g[a][b] = s.to_integer().to_i128().ok_or(Error::Invariant("gram overflow".into()))?;
        }
    }
    let gf: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    let ell = Ellipsoid::new(Ring::RATIONAL, &[gf])?;
    let value = |y: &[OInt]| -> i128 {
        let mut s = 0i128;
        for i in 0..m {
            let mut inner = g[i][i] / 2 * y[i].a;
            for j in i + 1..m {
                inner += g[i][j] * y[j].a;
            }
            s += y[i].a * inner;
        }
        s
    };
    let mut radius = (0..m).map(|i| g[i][i] / 2).max().unwrap_or(1).max(1);
    loop {
        let (ys, _) = ell.collect(&Region::ball(m, &[radius as f64]), |y| {
            y.iter().any(|v| !v.is_zero()) && value(y) <= radius
        });
        let mut cands: Vec<(i128, Vec<OInt>, Vec<i128>)> = ys
            .iter()
            .map(|y| {
                let mut z = vec![0i128; m];
                for (k, yk) in y.iter().enumerate() {
                    if yk.a != 0 {
                        for c in 0..m {
                            z[c] += yk.a * t[k][c];
                        }
                    }
                }
                let mut x = from_coords(&z, d);
                normalize_sign(&mut x, ring);
                let z = coords_of(&x, d);
                (value(y), x, z)
            })
            .collect();
        cands.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| last_nonzero(&a.1).cmp(&last_nonzero(&b.1)))
                .then_with(|| {
                    let ka: Vec<i128> = a.2.iter().map(|v| v.abs()).collect();
                    let kb: Vec<i128> = b.2.iter().map(|v| v.abs()).collect();
                    ka.cmp(&kb)
                })
                .then_with(|| a.2.cmp(&b.2))
        });
        cands.dedup_by(|a, b| a.2 == b.2);
        let mut chosen: Vec<Vec<OInt>> = Vec::new();
        for (_, x, _) in cands {
            let mut trial = chosen.clone();
            trial.push(x);
            if spans_summand(ring, &trial) {
                chosen = trial;
                if chosen.len() == n {
                    return Ok(chosen);
                }
            }
        }
        radius *= 2;
    }
}

fn column_matrix(ring: Ring, cols: &[Vec<OInt>]) -> FMat {
    let n = cols.len();
    (0..n).map(|i| (0..n).map(|j| cols[j][i].to_fe(ring)).collect()).collect()
}

fn half_ldl(a: &QuadraticForm) -> Result<(Vec<FieldElement>, FMat)> {
    let half = FieldElement::from_rat(a.ring(), rat(1, 2));
    let m: FMat = a.gram().iter().map(|r| r.iter().map(|x| x * &half).collect()).collect();
    ldl_upper(&m)
}

fn size_constants(a: &QuadraticForm, h: &[FieldElement]) -> SizeConstants {
    let d = a.ring().degree();
    let n = a.rank();
    let mut sc = SizeConstants { offdiag: 0.0, chain: 0.0, balance: 1.0 };
    for s in 0..d {
        let g = a.embedded_gram(s);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sc.offdiag = sc.offdiag.max(g[i][j].abs() / g[j][j]);
                }
            }
        }
        for j in 0..n.saturating_sub(1) {
            sc.chain = sc.chain.max(h[j].embed(s) / h[j + 1].embed(s));
        }
    }
    for hj in h {
        let e = hj.embeddings();
        let hi = e.iter().cloned().fold(f64::MIN, f64::max);
        let lo = e.iter().cloned().fold(f64::MAX, f64::min);
        sc.balance = sc.balance.max(hi / lo);
    }
    sc
}

/// Quasi-diagonal reduction of `q`; over a quadratic field the basis vectors are rescaled
/// by units so that every `h_j` has balanced conjugates.
pub fn reduce_form(field: &Field, q: &QuadraticForm) -> Result<ReducedForm> {
    let ring = q.ring();
    let mut cols = short_basis(q)?;
    let mut u = column_matrix(ring, &cols);
    let mut reduced = q.transform(&u)?;
    let (mut h, mut c) = half_ldl(&reduced)?;
    if let (Some(eps), Some(_)) = (field.fundamental_unit(), field.totally_positive_unit()) {
        let eps_neg = eps.norm() < rat_int(0);
        let mut changed = false;
        for (j, hj) in h.iter().enumerate() {
            let k = field.cone_exponent(hj)?;
            let e = if eps_neg { k } else { k.div_euclid(2) };
            if e == 0 {
                continue;
            }
            let v = eps.pow(e).to_oint().expect("unit is integral");
            for x in cols[j].iter_mut() {
                *x = x.mul(v, ring);
            }
            normalize_sign(&mut cols[j], ring);
            changed = true;
        }
        if changed {
            u = column_matrix(ring, &cols);
            reduced = q.transform(&u)?;
            (h, c) = half_ldl(&reduced)?;
        }
    }
    if !is_unit(&det(&u)) {
        return Err(Error::Invariant("reduction transform is not unimodular".into()));
    }
    let delta = h.iter().fold(FieldElement::one(ring), |p, x| &p * x);
    let sizes = size_constants(&reduced, &h);
    Ok(ReducedForm { source: q.clone(), u, reduced, h, c, delta, sizes })
}

impl ReducedForm {
    /// `sum_j h_j (x_j + sum_{i>j} c_ji x_i)^2`.
    pub fn expansion(&self, x: &[FieldElement]) -> FieldElement {
        let ring = self.source.ring();
        let n = x.len();
        let mut s = FieldElement::zero(ring);
        for j in 0..n {
            let mut t = x[j].clone();
            for i in j + 1..n {
                t = t + &self.c[j][i] * &x[i];
            }
            s = s + &self.h[j] * &(&t * &t);
        }
        s
    }

    pub fn u_int(&self) -> Vec<Vec<OInt>> {
        self.u.iter().map(|r| r.iter().map(|x| x.to_oint().expect("integral")).collect()).collect()
    }
}

/// Per embedding, the extreme eigenvalues of the reduced Gram matrix.
pub fn eigen_range(r: &ReducedForm) -> Vec<(f64, f64)> {
    let n = r.reduced.rank();
    (0..r.reduced.ring().degree())
        .map(|s| {
            let g = r.reduced.embedded_gram(s);
            let m = DMatrix::from_fn(n, n, |i, j| g[i][j]);
            let ev = SymmetricEigen::new(m).eigenvalues;
            let lo = ev.iter().cloned().fold(f64::MAX, f64::min);
            let hi = ev.iter().cloned().fold(f64::MIN, f64::max);
            (lo, hi)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SubdetReport {
    /// `prod_{j<n} N(h_j)`
    #[serde(serialize_with = "ser_rat")]
    pub lhs: Rat,
    /// `N(det A) / N(level)`
    #[serde(serialize_with = "ser_rat")]
    pub rhs: Rat,
    #[serde(serialize_with = "ser_rat")]
    pub ratio: Rat,
    /// Lower bound `2^{-d(n-2)}` for the ratio implied by integrality of `N A^-1`.
    #[serde(serialize_with = "ser_rat")]
    pub constant: Rat,
    pub holds: bool,
}

pub(crate) fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::arith::fmt_rat(r))
}

/// Compares `prod_{j<n} N(h_j)` with `N(det A)/N(level)`.
///
/// Since `N (A'^-1)_nn / 2` is integral and `(A'^-1)_nn = det A~' / det A'`, where `A~'` is the
/// leading `(n-1)`-minor, the ratio is at least `2^{-d(n-2)}`.
pub fn subdeterminant_check(r: &ReducedForm) -> Result<SubdetReport> {
    let n = r.h.len();
    if n < 2 {
        return Err(Error::Shape("sub-determinant check needs rank at least 2".into()));
    }
    let d = r.source.ring().degree() as i32;
    let lhs = r.h[..n - 1].iter().fold(Rat::one(), |p, h| p * h.norm().abs());
    let nl = rat_int(r.source.level_norm() as i64);
    let rhs = r.source.det_norm() / &nl;
    let ratio = &lhs / &rhs;
    let constant = Rat::new(BigInt::one(), BigInt::from(2).pow((d * (n as i32 - 2)) as u32));
    // Certificate N(level) |N(det A~')| >= 2^d |N(det A')|.
    let lead: FMat = r.reduced.gram()[..n - 1].iter().map(|row| row[..n - 1].to_vec()).collect();
    let cert = &nl * det(&lead).norm().abs() >= rat_int(2).pow(d) * r.reduced.det_norm();
    let holds = cert && ratio >= constant;
    Ok(SubdetReport { lhs, rhs, ratio, constant, holds })
}

/// Ratio of `N(det A')` to the norm of the balanced determinant, `2^{nd}`.
pub fn delta_normalization(r: &ReducedForm) -> f64 {
    rat_to_f64(&(r.reduced.det_norm() / r.delta.norm().abs()))
}
