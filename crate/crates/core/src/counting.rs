//! Exact representation counts, averaged sums and angularly constrained counts.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::arith::{fmt_rat, rat_to_f64, Rat};
use crate::enumerate::{Ellipsoid, Region};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, OInt, Ring};
use crate::forms::QuadraticForm;
use crate::linalg::ldl_upper_f64;
use crate::reduce::reduce_form;
use crate::units::for_each_in_box;

/// Tolerance for the floating constraints and direction normalization.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundTerm {
    pub name: String,
    pub value: f64,
}

/// A count together with the lemma's right hand side (constants 1, no epsilon powers).
#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub query: serde_json::Value,
    pub count: u64,
    pub bound_terms: Vec<BoundTerm>,
    pub bound: f64,
    pub ratio: Option<f64>,
    pub nodes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl CountReport {
    fn new(query: serde_json::Value, count: u64, nodes: u64, terms: Vec<(&str, f64)>, bound: f64) -> CountReport {
        let ratio = (bound > 0.0).then(|| count as f64 / bound);
        CountReport {
            query,
            count,
            bound_terms: terms.into_iter().map(|(n, v)| BoundTerm { name: n.to_string(), value: v }).collect(),
            bound,
            ratio,
            nodes,
            wall_ms: None,
        }
    }
}

fn fe_json(x: &FieldElement) -> serde_json::Value {
    json!(x.to_strings())
}

fn norm_f64(x: &FieldElement) -> f64 {
    rat_to_f64(&x.norm())
}

/// Exact `x / y` in `O_F`, if it exists.
pub fn div_exact(x: OInt, y: OInt, ring: Ring) -> Option<OInt> {
    let n = y.norm(ring);
    if n == 0 {
        return None;
    }
    let t = x.mul(y.conj(ring), ring);
    (t.a % n == 0 && t.b % n == 0).then(|| OInt::new(t.a / n, t.b / n))
}

/// The totally nonnegative square root of `x`, if there is one.
pub fn sqrt_nonneg(x: OInt, ring: Ring) -> Option<OInt> {
    let d = ring.degree();
    let mut s = [0.0; 2];
    for (k, v) in s.iter_mut().enumerate().take(d) {
        let e = x.embed(ring, k);
        if e < 0.0 {
            return None;
        }
        *v = e.sqrt();
    }
    let guess = if d == 1 {
        OInt::int(s[0].round() as i128)
    } else {
        let [w1, w2] = ring.omegas();
        let b = ((s[0] - s[1]) / (w1 - w2)).round();
        OInt::new((s[0] - b * w1).round() as i128, b as i128)
    };
    (guess.mul(guess, ring) == x && (0..d).all(|k| guess.sign_at(ring, k) != Ordering::Less)).then_some(guess)
}

fn is_integral_nonneg(ell: &FieldElement) -> Option<OInt> {
    if !ell.is_totally_nonnegative() {
        return None;
    }
    ell.to_oint()
}

/// All `x` with `Q(x) = ell`, sorted, and the number of search nodes.
pub fn enumerate_with_nodes(q: &QuadraticForm, ell: &FieldElement) -> (Vec<Vec<OInt>>, u64) {
    let n = q.rank();
    let Some(target) = is_integral_nonneg(ell) else {
        return (Vec::new(), 0);
    };
    if target.is_zero() {
        return (vec![vec![OInt::ZERO; n]], 1);
    }
    let ell_e = ell.embeddings();
    q.ellipsoid().collect(&Region::shell(n, &ell_e), |x| q.value_int(x) == target)
}

/// All integral `x` with `Q(x) = ell`, in lexicographic order.
pub fn enumerate_representations(q: &QuadraticForm, ell: &FieldElement) -> Vec<Vec<OInt>> {
    enumerate_with_nodes(q, ell).0
}

/// `r_Q(ell)` and the node count.
pub fn representation_number(q: &QuadraticForm, ell: &FieldElement) -> (u64, u64) {
    let n = q.rank();
    let Some(target) = is_integral_nonneg(ell) else {
        return (0, 0);
    };
    if target.is_zero() {
        return (1, 1);
    }
    q.ellipsoid().count(&Region::shell(n, &ell.embeddings()), |x| q.value_int(x) == target)
}

/// `r_Q(ell)` against `N(ell)^{1/2}` (ternary) or `N(ell)` (quaternary).
pub fn rep_count(q: &QuadraticForm, ell: &FieldElement) -> CountReport {
    let (count, nodes) = representation_number(q, ell);
    let nl = norm_f64(ell).abs();
    let (name, bound) = match q.rank() {
        3 => ("N(l)^(1/2)", nl.sqrt()),
        4 => ("N(l)", nl),
        _ => ("1", 1.0),
    };
    let query = json!({"op": "rep_count", "rank": q.rank(), "ell": fe_json(ell)});
    CountReport::new(query, count, nodes, vec![(name, bound)], bound)
}

/// Counts of every value of a form on the vectors with `Q^s <= limit[s]`: dense over `Z`,
/// hashed otherwise.
pub enum ValueHistogram {
    Dense(Vec<u64>),
    Sparse(HashMap<OInt, u64>),
}

/// Integer Fincke-Pohst over `Z^n`: values are updated incrementally, so the innermost
/// loop costs a few integer operations per point. Parallel over the last coordinate.
fn dense_histogram(q: &QuadraticForm, top: i64) -> (Vec<u64>, u64) {
    let n = q.rank();
    let a: Vec<Vec<i64>> = q.int_gram().iter().map(|r| r.iter().map(|x| x.a as i64).collect()).collect();
    let half: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|&x| x as f64 / 2.0).collect()).collect();
    let (h, c) = ldl_upper_f64(&half).expect("definite form");
    let len = top.max(0) as usize + 1;
    let slack = 1e-9 * (top.max(1) as f64);

    struct Walk<'a> {
        a: &'a [Vec<i64>],
        h: &'a [f64],
        c: &'a [Vec<f64>],
        top: i64,
        slack: f64,
    }
    impl Walk<'_> {
        /// Coordinates `k+1..n` fixed in `x`; `lin[i] = sum_{j>k} a_ij x_j`, `val` their exact value,
        /// `rem` the remaining budget of the LDL sum.
        #[allow(clippy::too_many_arguments)]
        fn go(&self, k: usize, x: &mut [i64], lin: &mut [i64], val: i64, rem: f64, hist: &mut [u64], nodes: &mut u64) {
            let center = -(k + 1..x.len()).map(|j| self.c[k][j] * x[j] as f64).sum::<f64>();
            let r = ((rem + self.slack).max(0.0) / self.h[k]).sqrt();
            let (lo, hi) = ((center - r).ceil() as i64, (center + r).floor() as i64);
            let hk = self.a[k][k] / 2;
            for xk in lo..=hi {
                *nodes += 1;
                let v = val + xk * lin[k] + hk * xk * xk;
                if k == 0 {
                    if (0..=self.top).contains(&v) {
                        hist[v as usize] += 1;
                    }
                    continue;
                }
                let d = xk as f64 - center;
                x[k] = xk;
                for i in 0..k {
                    lin[i] += self.a[i][k] * xk;
                }
                self.go(k - 1, x, lin, v, rem - self.h[k] * d * d, hist, nodes);
                for i in 0..k {
                    lin[i] -= self.a[i][k] * xk;
                }
            }
            x[k] = 0;
        }
    }

    let w = Walk { a: &a, h: &h, c: &c, top, slack };
    let last = n - 1;
    let r = ((top as f64 + slack) / h[last]).sqrt().floor() as i64;
    (-r..=r)
        .into_par_iter()
        .fold(
            || (vec![0u64; len], 0u64),
            |(mut hist, mut nodes), xl| {
                nodes += 1;
                let d = xl as f64;
                let rem = top as f64 - h[last] * d * d;
                let val = a[last][last] / 2 * xl * xl;
                if n == 1 {
                    if (0..=top).contains(&val) {
                        hist[val as usize] += 1;
                    }
                } else {
                    let mut x = vec![0i64; n];
                    x[last] = xl;
                    let mut lin: Vec<i64> = (0..n).map(|i| a[i][last] * xl).collect();
                    w.go(last - 1, &mut x, &mut lin, val, rem, &mut hist, &mut nodes);
                }
                (hist, nodes)
            },
        )
        .reduce(
            || (vec![0u64; len], 0),
            |(mut h1, n1), (h2, n2)| {
                h1.iter_mut().zip(h2).for_each(|(x, y)| *x += y);
                (h1, n1 + n2)
            },
        )
}

impl ValueHistogram {
    /// Histogram and node count.
    pub fn new(q: &QuadraticForm, limit: &[f64]) -> (ValueHistogram, u64) {
        if q.ring().degree() == 1 {
            let top = (limit[0].max(0.0) + 1e-9).floor() as i64;
            let (h, nodes) = dense_histogram(q, top);
            (ValueHistogram::Dense(h), nodes)
        } else {
            let (h, nodes) = q.ellipsoid().fold(
                &Region::ball(q.rank(), limit),
                HashMap::new,
                |h: &mut HashMap<OInt, u64>, x| *h.entry(q.value_int(x)).or_insert(0) += 1,
                |mut a, b| {
                    for (k, v) in b {
                        *a.entry(k).or_insert(0) += v;
                    }
                    a
                },
            );
            (ValueHistogram::Sparse(h), nodes)
        }
    }

    pub fn get(&self, v: OInt) -> u64 {
        match self {
            ValueHistogram::Dense(h) => usize::try_from(v.a).ok().and_then(|i| h.get(i)).copied().unwrap_or(0),
            ValueHistogram::Sparse(h) => h.get(&v).copied().unwrap_or(0),
        }
    }
}

/// Representation numbers of a split form `y0^2 + Q~` from a histogram of `Q~`.
pub struct SplitCounter {
    ring: Ring,
    hist: ValueHistogram,
    limit: Vec<f64>,
    pub nodes: u64,
}

impl SplitCounter {
    /// Histogram of `Q~` on all vectors with `Q~^s <= limit[s]`.
    pub fn new(q: &QuadraticForm, limit: &[f64]) -> Result<SplitCounter> {
        let t = q.split_ternary()?;
        let (hist, nodes) = ValueHistogram::new(&t, limit);
        Ok(SplitCounter { ring: q.ring(), hist, limit: limit.to_vec(), nodes })
    }

    pub fn count(&self, ell: OInt) -> Result<u64> {
        let r = self.ring;
        let d = r.degree();
        let e: Vec<f64> = (0..d).map(|s| ell.embed(r, s)).collect();
        if e.iter().any(|&x| x < 0.0) {
            return Ok(0);
        }
        if e.iter().zip(&self.limit).any(|(x, l)| *x > *l) {
            return Err(Error::Invalid("target beyond the histogram range".into()));
        }
        let hi: Vec<f64> = e.iter().map(|x| x.sqrt() + 1e-9).collect();
        let lo: Vec<f64> = hi.iter().map(|x| -x).collect();
        let mut total = 0;
        for_each_in_box(r, &lo, &hi, |y0| total += self.hist.get(ell - y0.mul(y0, r)));
        Ok(total)
    }
}

/// Ranges of the averaged sums.
#[derive(Clone, Debug)]
pub enum AvgMode {
    /// `sum r(l)`, `0 <= l^s <= y^{1/d}`.
    E3 { y: Rat },
    /// `sum r(l1 l2^2)`.
    E2 { y1: Rat, y2: Rat },
    /// `sum r(l^2)`.
    E1 { y: Rat },
}

impl AvgMode {
    pub fn name(&self) -> &'static str {
        match self {
            AvgMode::E3 { .. } => "e3",
            AvgMode::E2 { .. } => "e2",
            AvgMode::E1 { .. } => "e1",
        }
    }
}

/// Default bound on `max_s h_1^s` for the modes that need `h_1` of size one.
pub const H1_THRESHOLD: f64 = 2.0;

/// Totally nonnegative integers with every conjugate at most `y^{1/d}`.
pub fn nonneg_in_range(ring: Ring, y: &Rat) -> Vec<OInt> {
    let d = ring.degree();
    let top = rat_to_f64(y).max(0.0).powf(1.0 / d as f64) * (1.0 + 1e-9) + 1e-9;
    let mut out = Vec::new();
    for_each_in_box(ring, &vec![0.0; d], &vec![top; d], |x| {
        if in_range(x, ring, y) {
            out.push(x);
        }
    });
    out.sort();
    out
}

fn in_range(x: OInt, ring: Ring, y: &Rat) -> bool {
    let d = ring.degree();
    let yf = rat_to_f64(y);
    let mut clear = true;
    for s in 0..d {
        let e = x.embed(ring, s);
        let p = e.abs().powi(d as i32);
        if e < -1e-9 * (1.0 + e.abs()) || p > yf * (1.0 + 1e-9) + 1e-9 {
            if e < 0.0 || p > yf {
                return false;
            }
        }
        if e.abs() < 1e-9 || (p - yf).abs() <= 1e-9 * (1.0 + yf) {
            clear = false;
        }
    }
    if clear {
        return true;
    }
    let fe = x.to_fe(ring);
    fe.is_totally_nonnegative() && (0..ring.degree()).all(|s| fe.embed_pow_le(s, y))
}

/// Exact averaged sum of representation numbers, compared with the three-term bound.
pub fn averaged_sum(field: &Field, q: &QuadraticForm, mode: &AvgMode, h1_threshold: f64) -> Result<CountReport> {
    if q.rank() != 4 {
        return Err(Error::Shape("averaged sums need a quaternary form".into()));
    }
    let ring = q.ring();
    let d = ring.degree() as f64;
    if !matches!(mode, AvgMode::E3 { .. }) {
        let r = reduce_form(field, q)?;
        let w = r.h[0].embeddings().into_iter().fold(f64::MIN, f64::max);
        if w > h1_threshold {
            return Err(Error::HOneWitness(w, h1_threshold));
        }
    }
    let nd = rat_to_f64(&q.det_norm());
    let nl = q.level_norm() as f64;
    let ell = q.ellipsoid();
    let three = |a: f64, b: f64, c: f64| vec![("N(D)^-1/2", a / nd.sqrt()), ("(N(D)/N(n))^-1/2", b / (nd / nl).sqrt()), ("1", c)];
    let (count, nodes, terms, query) = match mode {
        AvgMode::E3 { y } => {
            let yf = rat_to_f64(y);
            let rad = vec![yf.max(0.0).powf(1.0 / d); ring.degree()];
            let (c, nodes) = ell.count(&Region::ball(4, &rad), |x| in_range(q.value_int(x), ring, y));
            (c, nodes, three(yf * yf, yf.powf(1.5), yf), json!({"y": fmt_rat(y)}))
        }
        AvgMode::E1 { y } => {
            let yf = rat_to_f64(y);
            let rad = vec![yf.max(0.0).powf(2.0 / d); ring.degree()];
            let (c, nodes) = ell.count(&Region::ball(4, &rad), |x| {
                sqrt_nonneg(q.value_int(x), ring).is_some_and(|l| in_range(l, ring, y))
            });
            (c, nodes, three(yf.powi(3), yf * yf, yf), json!({"y": fmt_rat(y)}))
        }
        AvgMode::E2 { y1, y2 } => {
            let (f1, f2) = (rat_to_f64(y1), rat_to_f64(y2));
            let r1 = nonneg_in_range(ring, y1);
            let r2 = nonneg_in_range(ring, y2);
            let zero_pairs = (r1.len() + r2.len()) as u64 - 1;
            let l2: Vec<(OInt, OInt)> =
                r2.iter().filter(|v| !v.is_zero()).map(|&v| (v, v.mul(v, ring))).collect();
            let rad = vec![(f1 * f2 * f2).max(0.0).powf(1.0 / d); ring.degree()];
            let (parts, nodes) = ell.search(&Region::ball(4, &rad), || 0u64, |acc, x| {
                let m = q.value_int(x);
                if m.is_zero() {
                    *acc += zero_pairs;
                    return;
                }
                for &(_, sq) in &l2 {
                    if let Some(l1) = div_exact(m, sq, ring) {
                        if in_range(l1, ring, y1) {
                            *acc += 1;
                        }
                    }
                }
            });
            let t = f1 * f2 * f2;
            let terms = vec![
                ("N(D)^-1/2", f1 * t.powf(1.5) / nd.sqrt()),
                ("(N(D)/N(n))^-1/2", f1 * t / (nd / nl).sqrt()),
                ("1", f1 * t.sqrt()),
            ];
            (parts.into_iter().sum(), nodes, terms, json!({"y1": fmt_rat(y1), "y2": fmt_rat(y2)}))
        }
    };
    let bound = terms.iter().map(|t| t.1).sum();
    let query = json!({"op": "averaged_sum", "mode": mode.name(), "range": query});
    Ok(CountReport::new(query, count, nodes, terms, bound))
}

/// `a x^2 + b xy + c y^2 + d x + e y + f` over `O_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryPoly {
    pub coeffs: [OInt; 6],
}

impl BinaryPoly {
    pub fn new(a: OInt, b: OInt, c: OInt, d: OInt, e: OInt, f: OInt) -> BinaryPoly {
        BinaryPoly { coeffs: [a, b, c, d, e, f] }
    }

    pub fn eval(&self, x: OInt, y: OInt, ring: Ring) -> OInt {
        let [a, b, c, d, e, f] = self.coeffs;
        let m = |u: OInt, v: OInt| u.mul(v, ring);
        m(a, m(x, x)) + m(b, m(x, y)) + m(c, m(y, y)) + m(d, x) + m(e, y) + f
    }

    /// Sum over embeddings of the absolute values of all coefficients.
    pub fn height(&self, ring: Ring) -> f64 {
        (0..ring.degree()).map(|s| self.coeffs.iter().map(|c| c.embed(ring, s).abs()).sum::<f64>()).sum()
    }
}

/// Number of solutions of `P(x, y) = ell`, found inside the ellipse cut out by the
/// definite quadratic part.
pub fn binary_inhomogeneous_count(ring: Ring, p: &BinaryPoly, ell: OInt) -> Result<CountReport> {
    let [a, b, c, d, e, f] = p.coeffs;
    let deg = ring.degree();
    let mut grams = Vec::new();
    let mut center = Vec::new();
    let mut radius = [0.0; 2];
    for s in 0..deg {
        let emb = |v: OInt| v.embed(ring, s);
        let (a2, bb, c2) = (2.0 * emb(a), emb(b), 2.0 * emb(c));
        let det = a2 * c2 - bb * bb;
        if !(a2 > 0.0 && det > 0.0) {
            return Err(Error::Degenerate);
        }
        // P = Q(x - x0) + P(x0) with x0 = -M^-1 (d, e).
        let (l1, l2) = (emb(d), emb(e));
        let x0 = -(c2 * l1 - bb * l2) / det;
        let y0 = -(-bb * l1 + a2 * l2) / det;
        let p0 = 0.5 * (a2 * x0 * x0 + 2.0 * bb * x0 * y0 + c2 * y0 * y0) + l1 * x0 + l2 * y0 + emb(f);
        grams.push(vec![vec![a2, bb], vec![bb, c2]]);
        center.push(vec![x0, y0]);
        radius[s] = emb(ell) - p0;
    }
    let query = json!({"op": "binary_inhomogeneous_count", "ell": fe_json(&ell.to_fe(ring))});
    let h = p.height(ring);
    if radius[..deg].iter().any(|&r| r < -1e-9 * (1.0 + r.abs())) {
        return Ok(CountReport::new(query, 0, 0, vec![("H(P)", h)], h));
    }
    let el = Ellipsoid::new(ring, &grams)?;
    let region = Region { center, radius, shell: false };
    let (count, nodes) = el.count(&region, |x| p.eval(x[0], x[1], ring) == ell);
    Ok(CountReport::new(query, count, nodes, vec![("H(P)", h)], h))
}

/// Arguments of the three archimedean estimates.
#[derive(Clone, Debug)]
pub enum ArchArgs {
    /// `Q(x) = Q(y) = 1`, `<y, x>^2 >= 1 - eta`.
    A { x: [f64; 3], y: [f64; 3], eta: f64 },
    /// `Q(y_i) = ell`, `|<y_i, x>| <= (ell eta)^{1/2}`.
    B { x: [f64; 3], ys: [[f64; 3]; 3], ell: f64, eta: f64 },
    /// `Q(y) = ell`.
    C { y: [f64; 3], ell: f64 },
}

pub(crate) fn q3(g: &Matrix3<f64>, x: &[f64; 3], y: &[f64; 3]) -> f64 {
    let (x, y) = (nalgebra::Vector3::from(*x), nalgebra::Vector3::from(*y));
    0.5 * x.dot(&(g * y))
}

fn norm2(x: &[f64; 3]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(lhs, rhs)` of the archimedean estimates for the real ternary form with Gram `g`.
/// Fails if the smallest eigenvalue is below `min_eig` or a hypothesis is violated.
pub fn arch_geometry(g: &[[f64; 3]; 3], args: &ArchArgs, min_eig: f64) -> Result<(f64, f64)> {
    let m = Matrix3::from_fn(|i, j| g[i][j]);
    let ev = SymmetricEigen::new(m).eigenvalues;
    if ev.min() < min_eig {
        return Err(Error::Invalid(format!("smallest eigenvalue {} below {min_eig}", ev.min())));
    }
    let tol = CONSTRAINT_TOL;
    let near = |v: f64, t: f64| (v - t).abs() <= tol * (1.0 + t.abs());
    match args {
        ArchArgs::A { x, y, eta } => {
            if !near(q3(&m, x, x), 1.0) || !near(q3(&m, y, y), 1.0) {
                return Err(Error::Invalid("points must lie on Q = 1".into()));
            }
            let ip = q3(&m, y, x);
            if ip * ip < 1.0 - eta - tol {
                return Err(Error::Invalid("angle hypothesis fails".into()));
            }
            let dp = norm2(&[y[0] + x[0], y[1] + x[1], y[2] + x[2]]);
            let dm = norm2(&[y[0] - x[0], y[1] - x[1], y[2] - x[2]]);
            Ok((dp.min(dm), eta.sqrt()))
        }
        ArchArgs::B { x, ys, ell, eta } => {
            for y in ys {
                if !near(q3(&m, y, y), *ell) {
                    return Err(Error::Invalid("points must lie on Q = ell".into()));
                }
                if q3(&m, y, x).abs() > (ell * eta).sqrt() * (1.0 + tol) {
                    return Err(Error::Invalid("inner product hypothesis fails".into()));
                }
            }
            let dm = DMatrix::from_fn(3, 3, |i, j| ys[j][i]);
            Ok((dm.determinant().abs(), ell.powf(1.5) * eta.sqrt()))
        }
        ArchArgs::C { y, ell } => {
            if !near(q3(&m, y, y), *ell) {
                return Err(Error::Invalid("point must lie on Q = ell".into()));
            }
            Ok((norm2(y), ell.sqrt()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    NearTorus,
    NearEquator,
    Unconstrained,
}

impl std::str::FromStr for ConstraintMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "near-torus" => Ok(ConstraintMode::NearTorus),
            "near-equator" => Ok(ConstraintMode::NearEquator),
            "unconstrained" => Ok(ConstraintMode::Unconstrained),
            _ => Err(Error::Parse(format!("unknown constraint mode {s}"))),
        }
    }
}

/// A count of `Q(y) = ell` with angular conditions at every embedding.
#[derive(Clone, Debug)]
pub struct ConstrainedCountQuery {
    pub form: QuadraticForm,
    pub ell: FieldElement,
    pub directions: Vec<[f64; 3]>,
    pub eta: Vec<f64>,
    pub mode: ConstraintMode,
}

/// Per embedding, the normalized torus and equator statistics of one solution.
#[derive(Clone, Debug)]
pub struct SolutionStats {
    pub torus: Vec<f64>,
    pub equator: Vec<f64>,
}

impl ConstrainedCountQuery {
    pub fn validate(&self) -> Result<()> {
        if !self.form.is_split() {
            return Err(Error::NotSplit);
        }
        let d = self.form.ring().degree();
        if self.directions.len() != d || self.eta.len() != d {
            return Err(Error::Shape(format!("need {d} directions and thresholds")));
        }
        let t = self.form.split_ternary()?;
        for (j, x) in self.directions.iter().enumerate() {
            let g = t.embedded_gram(j);
            let m = Matrix3::from_fn(|a, b| g[a][b]);
            if (q3(&m, x, x) - 1.0).abs() > CONSTRAINT_TOL {
                return Err(Error::DirectionNotUnit(j));
            }
        }
        if self.eta.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Invalid("thresholds must be positive".into()));
        }
        if !self.ell.is_totally_positive() {
            return Err(Error::NotTotallyPositive);
        }
        Ok(())
    }

    /// `(bound1, bound2)` with constants 1.
    pub fn bounds(&self) -> (f64, f64) {
        let nl = norm_f64(&self.ell);
        let ne: f64 = self.eta.iter().product();
        let b1 = ne.sqrt() * nl + 1.0 + (nl.powf(1.5) * ne.sqrt()).min(nl.sqrt());
        let b2 = 1.0 + (ne.powf(3.0 / 11.0) * nl.powf(12.0 / 11.0)).min(nl);
        (b1, b2)
    }
}

/// All solutions of `Q(y) = ell` with their constraint statistics.
pub fn solution_stats(q: &ConstrainedCountQuery) -> Result<(Vec<SolutionStats>, u64)> {
    q.validate()?;
    let ring = q.form.ring();
    let d = ring.degree();
    let t = q.form.split_ternary()?;
    let grams: Vec<Matrix3<f64>> = (0..d)
        .map(|s| {
            let g = t.embedded_gram(s);
            Matrix3::from_fn(|a, b| g[a][b])
        })
        .collect();
    let ell_e = q.ell.embeddings();
    let (sols, nodes) = enumerate_with_nodes(&q.form, &q.ell);
    let stats = sols
        .iter()
        .map(|y| {
            let mut st = SolutionStats { torus: Vec::with_capacity(d), equator: Vec::with_capacity(d) };
            for s in 0..d {
                let y0 = y[0].embed(ring, s);
                let yt = [y[1].embed(ring, s), y[2].embed(ring, s), y[3].embed(ring, s)];
                let ip = q3(&grams[s], &yt, &q.directions[s]);
                let qt = q3(&grams[s], &yt, &yt);
                st.torus.push((y0 * y0 + ip * ip) / ell_e[s]);
                st.equator.push((qt - ip * ip) / ell_e[s]);
            }
            st
        })
        .collect();
    Ok((stats, nodes))
}

/// Number of solutions whose statistics satisfy the thresholds `eta`.
pub fn count_within(stats: &[SolutionStats], mode: ConstraintMode, eta: &[f64]) -> u64 {
    let ok = |v: &[f64]| v.iter().zip(eta).all(|(x, e)| *x <= e + CONSTRAINT_TOL);
    stats
        .iter()
        .filter(|s| match mode {
            ConstraintMode::NearTorus => ok(&s.torus),
            ConstraintMode::NearEquator => ok(&s.equator),
            ConstraintMode::Unconstrained => true,
        })
        .count() as u64
}

pub fn constrained_count(q: &ConstrainedCountQuery) -> Result<CountReport> {
    let (stats, nodes) = solution_stats(q)?;
    let count = count_within(&stats, q.mode, &q.eta);
    let (b1, b2) = q.bounds();
    let nl = norm_f64(&q.ell);
    let bound = match q.mode {
        ConstraintMode::NearTorus => b1,
        ConstraintMode::NearEquator => b2,
        ConstraintMode::Unconstrained => nl,
    };
    let query = json!({
        "op": "constrained_count",
        "mode": q.mode,
        "ell": fe_json(&q.ell),
        "eta": q.eta,
        "directions": q.directions,
    });
    Ok(CountReport::new(query, count, nodes, vec![("bound1", b1), ("bound2", b2)], bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::{hurwitz, lipschitz};

    fn z(n: i128) -> OInt {
        OInt::int(n)
    }

    #[test]
    fn representation_examples() {
        let r = Ring::RATIONAL;
        let l = lipschitz().norm_form;
        assert_eq!(enumerate_representations(&l, &FieldElement::int(r, 1)).len(), 8);
        assert_eq!(enumerate_representations(&l, &FieldElement::int(r, 3)).len(), 32);
        assert_eq!(enumerate_representations(&l, &FieldElement::int(r, 0)), vec![vec![OInt::ZERO; 4]]);
        assert_eq!(rep_count(&hurwitz().norm_form, &FieldElement::int(r, 1)).count, 24);
        let t = QuadraticForm::from_i64(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]).unwrap();
        assert_eq!(rep_count(&t, &FieldElement::int(r, 2)).count, 12);
    }

    #[test]
    fn averaged_examples() {
        let f = Field::rational();
        let l = lipschitz().norm_form;
        let rep = averaged_sum(&f, &l, &AvgMode::E3 { y: Rat::from_integer(10.into()) }, H1_THRESHOLD).unwrap();
        assert_eq!(rep.count, 1 + (1..=10u64).map(|n| 8 * crate::arith::sigma(n) - if n % 4 == 0 { 32 * crate::arith::sigma(n / 4) } else { 0 }).sum::<u64>());
        let rep = averaged_sum(&f, &l, &AvgMode::E3 { y: crate::arith::rat(1, 2) }, H1_THRESHOLD).unwrap();
        assert_eq!(rep.count, 1);
    }

    #[test]
    fn binary_examples() {
        let r = Ring::RATIONAL;
        let p = BinaryPoly::new(z(1), z(0), z(1), z(0), z(0), z(0));
        assert_eq!(binary_inhomogeneous_count(r, &p, z(5)).unwrap().count, 8);
        assert_eq!(binary_inhomogeneous_count(r, &p, z(-1)).unwrap().count, 0);
        let p = BinaryPoly::new(z(1), z(0), z(1), z(1), z(0), z(0));
        assert_eq!(binary_inhomogeneous_count(r, &p, z(0)).unwrap().count, 2);
        let p = BinaryPoly::new(z(1), z(2), z(1), z(0), z(0), z(0));
        assert!(matches!(binary_inhomogeneous_count(r, &p, z(1)), Err(Error::Degenerate)));
    }

    #[test]
    fn constrained_examples() {
        let r = Ring::RATIONAL;
        let form = lipschitz().norm_form;
        let q = |mode, eta| ConstrainedCountQuery {
            form: form.clone(),
            ell: FieldElement::int(r, 1),
            directions: vec![[0.0, 0.0, 1.0]],
            eta: vec![eta],
            mode,
        };
        assert_eq!(constrained_count(&q(ConstraintMode::NearTorus, 0.5)).unwrap().count, 4);
        assert_eq!(constrained_count(&q(ConstraintMode::NearTorus, 2.0)).unwrap().count, 8);
        assert_eq!(constrained_count(&q(ConstraintMode::NearEquator, 0.5)).unwrap().count, 4);
        assert_eq!(constrained_count(&q(ConstraintMode::NearEquator, 1.0)).unwrap().count, 8);
        let mut bad = q(ConstraintMode::NearTorus, 0.5);
        bad.directions = vec![[0.0, 0.0, 2.0]];
        assert!(matches!(constrained_count(&bad), Err(Error::DirectionNotUnit(0))));
    }

    #[test]
    fn arch_examples() {
        let g = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        let e3 = [0.0, 0.0, 1.0];
        let (l, _) = arch_geometry(&g, &ArchArgs::A { x: e3, y: e3, eta: 0.1 }, 0.5).unwrap();
        assert_eq!(l, 0.0);
        let phi = 0.7f64;
        let y = [phi.sin(), 0.0, phi.cos()];
        let (l, r) = arch_geometry(&g, &ArchArgs::A { x: e3, y, eta: 1.0 - phi.cos().powi(2) }, 0.5).unwrap();
        assert!((l - 2.0 * (phi / 2.0).sin()).abs() < 1e-12 && l <= 2.0 * r);
        let (l, r) = arch_geometry(&g, &ArchArgs::C { y: [3.0, 4.0, 0.0], ell: 25.0 }, 0.5).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn split_counter_matches() {
        let r = Ring::RATIONAL;
        let s = lipschitz().split().unwrap();
        let c = SplitCounter::new(&s.quaternary, &[60.0]).unwrap();
        for n in 1..=60 {
            let (direct, _) = representation_number(&s.quaternary, &FieldElement::int(r, n));
            assert_eq!(c.count(OInt::int(n as i128)).unwrap(), direct);
        }
    }
}
