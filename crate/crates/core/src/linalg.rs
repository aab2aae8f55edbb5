//! Exact linear algebra over `F`, `Z` and (Euclidean) `O_F`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{rat, round_rat, Rat};
use crate::error::{Error, Result};
use crate::field::{FieldElement, Ring};

pub type FMat = Vec<Vec<FieldElement>>;

pub fn identity(ring: Ring, n: usize) -> FMat {
    (0..n)
        .map(|i| (0..n).map(|j| FieldElement::int(ring, (i == j) as i64)).collect())
        .collect()
}

pub fn transpose(m: &FMat) -> FMat {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &FMat, b: &FMat) -> FMat {
    let ring = a[0][0].ring();
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s = FieldElement::zero(ring);
                    for t in 0..k {
                        s = s + &a[i][t] * &b[t][j];
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &FMat, x: &[FieldElement]) -> Vec<FieldElement> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(FieldElement::zero(x[0].ring()), |s, (r, v)| s + r * v))
        .collect()
}

/// `U^T A U`.
pub fn congruence(a: &FMat, u: &FMat) -> FMat {
    mat_mul(&transpose(u), &mat_mul(a, u))
}

pub fn det(m: &FMat) -> FieldElement {
    let n = m.len();
    let ring = m[0][0].ring();
    let mut a = m.clone();
    let mut d = FieldElement::one(ring);
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return FieldElement::zero(ring);
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        let piv = a[c][c].clone();
        d = &d * &piv;
        let inv = piv.inv().expect("nonzero pivot");
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] * &inv;
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] = &a[r][k] - &t;
            }
        }
    }
    d
}

pub fn inverse(m: &FMat) -> Result<FMat> {
    let n = m.len();
    let ring = m[0][0].ring();
    let mut a: FMat = m.clone();
    let mut b = identity(ring, n);
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).ok_or(Error::Singular)?;
        a.swap(p, c);
        b.swap(p, c);
        let inv = a[c][c].inv().expect("nonzero pivot");
        for k in 0..n {
            a[c][k] = &a[c][k] * &inv;
            b[c][k] = &b[c][k] * &inv;
        }
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for k in 0..n {
                let t = &f * &a[c][k];
                a[r][k] = &a[r][k] - &t;
                let t = &f * &b[c][k];
                b[r][k] = &b[r][k] - &t;
            }
        }
    }
    Ok(b)
}

/// Solves `M y = v` for square invertible `M`.
pub fn solve(m: &FMat, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
    Ok(mat_vec(&inverse(m)?, v))
}

/// Exact `LDL^T` of a symmetric matrix: returns `(h, c)` with `M = C^T diag(h) C`,
/// `C` upper unitriangular. Fails if a pivot vanishes.
pub fn ldl_upper(m: &FMat) -> Result<(Vec<FieldElement>, FMat)> {
    let n = m.len();
    let ring = m[0][0].ring();
    let mut a = m.clone();
    let mut h = Vec::with_capacity(n);
    let mut c = identity(ring, n);
    for j in 0..n {
        let piv = a[j][j].clone();
        let inv = piv.inv().ok_or(Error::Singular)?;
        for i in j + 1..n {
            c[j][i] = &a[j][i] * &inv;
        }
        for r in j + 1..n {
            for s in j + 1..n {
                let t = &c[j][r] * &a[j][s];
                a[r][s] = &a[r][s] - &t;
            }
        }
        h.push(piv);
    }
    Ok((h, c))
}

/// Real `LDL^T` of a symmetric matrix, same convention as [`ldl_upper`].
pub fn ldl_upper_f64(m: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut h = vec![0.0; n];
    let mut c = vec![vec![0.0; n]; n];
    for j in 0..n {
        let piv = a[j][j];
        if piv <= 0.0 {
            return None;
        }
        c[j][j] = 1.0;
        for i in j + 1..n {
            c[j][i] = a[j][i] / piv;
        }
        for r in j + 1..n {
            for s in j + 1..n {
                a[r][s] -= c[j][r] * a[j][s];
            }
        }
        h[j] = piv;
    }
    Some((h, c))
}

/// Exact LLL (with parameter `delta`) on a positive definite rational Gram matrix.
/// Returns the integer transform `T` (rows are the reduced basis in old coordinates).
pub fn lll_gram(gram: &[Vec<Rat>], delta: &Rat) -> Vec<Vec<BigInt>> {
    let n = gram.len();
    let mut t: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as i64)).collect())
        .collect();
    let mut g: Vec<Vec<Rat>> = gram.to_vec();
    let half = rat(1, 2);
    let gso = |g: &Vec<Vec<Rat>>| -> (Vec<Vec<Rat>>, Vec<Rat>) {
        let mut mu = vec![vec![Rat::zero(); n]; n];
        let mut bs = vec![Rat::zero(); n];
        let mut r = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut v = g[i][j].clone();
                for k in 0..j {
                    v -= &mu[j][k] * &r[i][k];
                }
                r[i][j] = v;
                if j < i {
                    mu[i][j] = &r[i][j] / &bs[j];
                }
            }
            bs[i] = r[i][i].clone();
        }
        (mu, bs)
    };
    // Row operation b_k -= q b_j applied to T and G.
    let reduce = |t: &mut Vec<Vec<BigInt>>, g: &mut Vec<Vec<Rat>>, k: usize, j: usize, q: &BigInt| {
        for c in 0..n {
            let v = &t[j][c] * q;
            t[k][c] -= v;
        }
        let qr = Rat::from_integer(q.clone());
        for c in 0..n {
            let v = &g[j][c] * &qr;
            g[k][c] -= v;
        }
        for c in 0..n {
            let v = &g[c][j] * &qr;
            g[c][k] -= v;
        }
    };
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let (mu, _) = gso(&g);
            if mu[k][j].abs() > half {
                let q = round_rat(&mu[k][j]);
                reduce(&mut t, &mut g, k, j, &q);
            }
        }
        let (mu, bs) = gso(&g);
        let lhs = &bs[k];
        let rhs = (delta - &mu[k][k - 1] * &mu[k][k - 1]) * &bs[k - 1];
        if *lhs >= rhs {
            k += 1;
        } else {
            t.swap(k, k - 1);
            g.swap(k, k - 1);
            for row in g.iter_mut() {
                row.swap(k, k - 1);
            }
            k = (k - 1).max(1);
        }
    }
    t
}

/// Row Hermite normal form of an integer matrix; zero rows dropped.
pub fn hnf_rows(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    if m.is_empty() {
        return m;
    }
    let ncols = m[0].len();
    let mut r = 0;
    for c in 0..ncols {
        // Euclid on column c among rows r..
        loop {
            let nz: Vec<usize> = (r..m.len()).filter(|&i| !m[i][c].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| m[i][c].abs()).unwrap();
            m.swap(r, p);
            let mut done = true;
            for i in r + 1..m.len() {
                if m[i][c].is_zero() {
                    continue;
                }
                let q = m[i][c].div_floor(&m[r][c]);
                for k in 0..ncols {
                    let v = &m[r][k] * &q;
                    m[i][k] -= v;
                }
                if !m[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if r < m.len() && !m[r][c].is_zero() {
            if m[r][c].is_negative() {
                for k in 0..ncols {
                    m[r][k] = -&m[r][k];
                }
            }
            for i in 0..r {
                let q = m[i][c].div_floor(&m[r][c]);
                if !q.is_zero() {
                    for k in 0..ncols {
                        let v = &m[r][k] * &q;
                        m[i][k] -= v;
                    }
                }
            }
            r += 1;
        }
    }
    m.truncate(r);
    m
}

/// Division with remainder in a norm-Euclidean `O_F`: returns `(q, r)` with `x = q y + r`,
/// `|N(r)| < |N(y)|`.
pub fn euclid_divmod(x: &FieldElement, y: &FieldElement) -> Result<(FieldElement, FieldElement)> {
    let ring = x.ring();
    let exact = x / y;
    let (a, b) = exact.coords();
    let (fa, fb) = (a.floor().to_integer(), b.floor().to_integer());
    let ny = y.norm().abs();
    let mut best: Option<(Rat, FieldElement, FieldElement)> = None;
    for da in 0..2i64 {
        for db in 0..2i64 {
            let q = FieldElement::new(
                ring,
                Rat::from_integer(&fa + BigInt::from(da)),
                Rat::from_integer(&fb + BigInt::from(db)),
            );
            let r = x - &(&q * y);
            let nr = r.norm().abs();
            if best.as_ref().map_or(true, |(bn, _, _)| nr < *bn) {
                best = Some((nr, q, r));
            }
        }
    }
    let (nr, q, r) = best.expect("candidates");
    if nr < ny {
        Ok((q, r))
    } else {
        Err(Error::NotEuclidean)
    }
}

/// Column operations bringing a row vector of integers to `(g, 0, .., 0)`.
/// Returns `(g, V)` with `V` unimodular over `O_F` and `row * V = (g, 0, .., 0)`.
pub fn row_to_gcd(row: &[FieldElement]) -> Result<(FieldElement, FMat)> {
    let n = row.len();
    let ring = row[0].ring();
    let mut r: Vec<FieldElement> = row.to_vec();
    let mut v = identity(ring, n);
    loop {
        let nz: Vec<usize> = (0..n).filter(|&i| !r[i].is_zero()).collect();
        if nz.len() <= 1 {
            if let Some(&p) = nz.first() {
                if p != 0 {
                    r.swap(0, p);
                    for row in v.iter_mut() {
                        row.swap(0, p);
                    }
                }
            }
            break;
        }
        let p = *nz
            .iter()
            .min_by(|&&i, &&j| r[i].norm().abs().cmp(&r[j].norm().abs()).then(i.cmp(&j)))
            .unwrap();
        for &i in &nz {
            if i == p {
                continue;
            }
            let (q, rem) = euclid_divmod(&r[i], &r[p])?;
            r[i] = rem;
            // column_i -= q column_p
            for row in v.iter_mut() {
                let t = &q * &row[p];
                row[i] = &row[i] - &t;
            }
        }
    }
    Ok((r[0].clone(), v))
}

pub fn to_i64_matrix(t: &[Vec<BigInt>]) -> Option<Vec<Vec<i64>>> {
    t.iter().map(|r| r.iter().map(|x| x.to_i64()).collect()).collect()
}

pub fn is_unit(x: &FieldElement) -> bool {
    x.is_integral() && x.norm().abs().is_one()
}
