//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use supnorm::forms::QuadraticForm;
use supnorm::{FieldElement, OInt};

/// Sum of divisors by trial division.
pub fn sigma(n: u64) -> u64 {
    (1..=n).filter(|d| n % d == 0).sum()
}

/// Number of ways to write `n` as a sum of four squares, `8 sigma(n) - 32 sigma(n/4)`.
pub fn r4(n: u64) -> u64 {
    if n == 0 {
        return 1;
    }
    let s4 = if n % 4 == 0 { sigma(n / 4) } else { 0 };
    8 * sigma(n) - 32 * s4
}

type Pair = (i128, i128);

/// `O_F` arithmetic on coordinate pairs in the basis `1, w`, `w^2 = p w + q`.
#[derive(Clone, Copy, Debug)]
pub struct PairRing {
    pub p: i128,
    pub q: i128,
    pub d: usize,
}

impl PairRing {
    pub fn mul(&self, x: Pair, y: Pair) -> Pair {
        (x.0 * y.0 + x.1 * y.1 * self.q, x.0 * y.1 + x.1 * y.0 + x.1 * y.1 * self.p)
    }

    pub fn omegas(&self) -> [f64; 2] {
        let disc = ((self.p * self.p + 4 * self.q) as f64).sqrt();
        [(self.p as f64 + disc) / 2.0, (self.p as f64 - disc) / 2.0]
    }

    /// All `x` with `|x^s| <= bound[s]` for every embedding.
    pub fn box_points(&self, bound: &[f64]) -> Vec<Pair> {
        if self.d == 1 {
            let b = bound[0].floor() as i128;
            return (-b..=b).map(|a| (a, 0)).collect();
        }
        let [w1, w2] = self.omegas();
        let bb = ((bound[0] + bound[1]) / (w1 - w2)).ceil() as i128;
        let mut out = Vec::new();
        for b in -bb..=bb {
            let lo = (-bound[0] - b as f64 * w1).ceil() as i128;
            let hi = (bound[0] - b as f64 * w1).floor() as i128;
            for a in lo..=hi {
                let e2 = a as f64 + b as f64 * w2;
                if e2.abs() <= bound[1] {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

fn pair(x: &FieldElement) -> Pair {
    let o = x.to_oint().expect("integral entry");
    (o.a, o.b)
}

/// All solutions of `Q(x) = l` for every target, by scanning the coordinate box
/// `|x_i^s| <= (2 l_max^s (A^s)^{-1}_ii)^{1/2}`.
pub fn brute_force(q: &QuadraticForm, targets: &[FieldElement]) -> HashMap<OInt, Vec<Vec<OInt>>> {
    let ring = q.ring();
    let d = ring.degree();
    let pr = PairRing { p: ring.p() as i128, q: ring.q() as i128, d };
    let n = q.rank();
    let a: Vec<Vec<Pair>> = q.gram().iter().map(|r| r.iter().map(pair).collect()).collect();
    let want: HashSet<Pair> = targets.iter().map(pair).collect();
    let lmax: Vec<f64> = (0..d).map(|s| targets.iter().map(|x| x.embed(s)).fold(0.0, f64::max)).collect();
    let bounds: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..d)
                .map(|s| {
                    let g = q.embedded_gram(s);
                    let m = DMatrix::from_fn(n, n, |r, c| g[r][c]);
                    let inv = m.try_inverse().expect("definite");
                    (2.0 * lmax[s] * inv[(i, i)]).sqrt() * (1.0 + 1e-9) + 1e-9
                })
                .collect()
        })
        .collect();
    let pts: Vec<Vec<Pair>> = bounds.iter().map(|b| pr.box_points(b)).collect();
    let mut out: HashMap<OInt, Vec<Vec<OInt>>> = HashMap::new();
    let mut x = vec![(0i128, 0i128); n];
    let mut idx = vec![0usize; n];
    if pts.iter().any(|p| p.is_empty()) {
        return out;
    }
    loop {
        for i in 0..n {
            x[i] = pts[i][idx[i]];
        }
        // sum_ij a_ij x_i x_j = 2 Q(x)
        let mut s = (0i128, 0i128);
        for i in 0..n {
            for j in 0..n {
                let t = pr.mul(pr.mul(a[i][j], x[i]), x[j]);
                s = (s.0 + t.0, s.1 + t.1);
            }
        }
        let v = (s.0 / 2, s.1 / 2);
        if want.contains(&v) {
            out.entry(OInt::new(v.0, v.1)).or_default().push(x.iter().map(|p| OInt::new(p.0, p.1)).collect());
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < pts[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == n {
                for v in out.values_mut() {
                    v.sort();
                }
                return out;
            }
        }
    }
}

fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `P_n^{(a,b)}(t) = sum_s C(n+a, n-s) C(n+b, s) ((t-1)/2)^s ((t+1)/2)^{n-s}`.
pub fn jacobi_binomial(n: u64, a: u64, b: u64, t: &BigRational) -> BigRational {
    let two = BigRational::from_integer(2.into());
    let u = (t - BigRational::one()) / &two;
    let v = (t + BigRational::one()) / &two;
    (0..=n)
        .map(|s| {
            let c = BigRational::from_integer(binom(n + a, n - s) * binom(n + b, s));
            c * num_traits::pow(u.clone(), s as usize) * num_traits::pow(v.clone(), (n - s) as usize)
        })
        .fold(BigRational::zero(), |acc, x| acc + x)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `int_{-1}^1 f(t) (1-t)^a (1+t)^b dt` for polynomial `f` of degree at most `2 * nodes - 1 - a - b`.
pub fn jacobi_weighted_integral(f: impl Fn(f64) -> f64, a: u32, b: u32, nodes: usize) -> f64 {
    gauss_legendre(nodes)
        .into_iter()
        .map(|(x, w)| w * f(x) * (1.0 - x).powi(a as i32) * (1.0 + x).powi(b as i32))
        .sum()
}
