//! Jacobi polynomials, SU(2) matrix coefficients and the SO(4) character.

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;

use crate::arith::{rat_int, Rat};
use crate::error::{Error, Result};
use crate::quaternion::{Quat, QuaternionAlgebra};

/// `P_n^{(a,b)}(t)` by the three-term recurrence.
pub fn jacobi_eval(n: u32, a: u32, b: u32, t: f64) -> f64 {
    let mut out = 0.0;
    jacobi_run(n, a, b, t, |k, v| {
        if k == n {
            out = v;
        }
    });
    out
}

/// Calls `f(k, P_k(t))` for `k = 0..=n`.
pub fn jacobi_run(n: u32, a: u32, b: u32, t: f64, mut f: impl FnMut(u32, f64)) {
    let (a, b) = (a as f64, b as f64);
    let mut p0 = 1.0;
    f(0, p0);
    if n == 0 {
        return;
    }
    let mut p1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * t;
    f(1, p1);
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * k * (k + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (a * a - b * b);
        let c3 = (s - 2.0) * (s - 1.0) * s;
        let c4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        let p2 = ((c2 + c3 * t) * p1 - c4 * p0) / c1;
        p0 = p1;
        p1 = p2;
        f(k as u32, p1);
    }
}

/// `P_n^{(a,b)}(t)` in exact arithmetic, by the same recurrence.
pub fn jacobi_exact(n: u32, a: u32, b: u32, t: &Rat) -> Rat {
    let r = |x: i64| rat_int(x);
    let (a, b) = (a as i64, b as i64);
    let mut p0 = Rat::one();
    if n == 0 {
        return p0;
    }
    let mut p1 = Rat::new((a - b).into(), 2.into()) + Rat::new((a + b + 2).into(), 2.into()) * t;
    for k in 2..=n as i64 {
        let s = 2 * k + a + b;
        let c1 = r(2 * k * (k + a + b) * (s - 2));
        let c2 = r((s - 1) * (a * a - b * b));
        let c3 = r((s - 2) * (s - 1) * s);
        let c4 = r(2 * (k + a - 1) * (k + b - 1) * s);
        let p2 = ((c2 + c3 * t) * &p1 - c4 * &p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |p, k| p * k)
}

/// `int_{-1}^1 P_n^2 (1-t)^a (1+t)^b dt
///  = 2^{a+b+1}/(2n+a+b+1) (n+a)!(n+b)!/((n+a+b)! n!)`.
pub fn jacobi_norm_exact(n: u32, a: u32, b: u32) -> Rat {
    let (n, a, b) = (n as u64, a as u64, b as u64);
    let num = (BigInt::one() << (a + b + 1) as usize) * factorial(n + a) * factorial(n + b);
    let den = BigInt::from(2 * n + a + b + 1) * factorial(n + a + b) * factorial(n);
    Rat::new(num, den)
}

fn check_coeff(m: u32, l: i32, t: f64) -> Result<()> {
    if l.unsigned_abs() > m {
        return Err(Error::Invalid(format!("|l| = {} exceeds m = {m}", l.abs())));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Invalid(format!("t = {t} outside [-1, 1]")));
    }
    Ok(())
}

/// `|p_{m,l}(t)| = ((1+t)/2)^{|l|} |P_{m-|l|}^{(0,2|l|)}(t)|`.
pub fn matrix_coeff(m: u32, l: i32, t: f64) -> Result<f64> {
    check_coeff(m, l, t)?;
    let la = l.unsigned_abs();
    Ok(((1.0 + t) / 2.0).powi(la as i32) * jacobi_eval(m - la, 0, 2 * la, t).abs())
}

/// `min(1, ((|l|+1)/(m+1))^{1/2} (1-t^2)^{-1/4})`.
pub fn decay_bound(m: u32, l: i32, t: f64) -> Result<f64> {
    if t * t >= 1.0 {
        return Err(Error::DecayDomain);
    }
    let r = ((l.unsigned_abs() as f64 + 1.0) / (m as f64 + 1.0)).sqrt() * (1.0 - t * t).powf(-0.25);
    Ok(r.min(1.0))
}

/// `|p_{m,l}(t)|` divided by the decay bound.
pub fn decay_margin(m: u32, l: i32, t: f64) -> Result<f64> {
    let b = decay_bound(m, l, t)?;
    Ok(matrix_coeff(m, l, t)? / b)
}

/// `prod_s |p_{m_s, l_s}(t_s)|`.
pub fn product_coeff(ms: &[u32], ls: &[i32], ts: &[f64]) -> Result<f64> {
    if ms.len() != ls.len() || ms.len() != ts.len() {
        return Err(Error::Shape("weight, index and parameter tuples differ in length".into()));
    }
    ms.iter().zip(ls).zip(ts).map(|((&m, &l), &t)| matrix_coeff(m, l, t)).product()
}

/// `sin((m+1)theta) / ((m+1) sin theta)` with `t = cos theta`.
pub fn so4_character(m: u32, t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Invalid(format!("t = {t} outside [-1, 1]")));
    }
    // Chebyshev U_m(t).
    let (mut u0, mut u1) = (1.0, 2.0 * t);
    if m == 0 {
        return Ok(1.0);
    }
    for _ in 1..m {
        let u2 = 2.0 * t * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    Ok(u1 / (m as f64 + 1.0))
}

/// `min(1, 1/((m+1)(1-t^2)^{1/2}))`.
pub fn so4_character_bound(m: u32, t: f64) -> f64 {
    let s = (1.0 - t * t).max(0.0).sqrt();
    if s == 0.0 {
        1.0
    } else {
        (1.0 / ((m as f64 + 1.0) * s)).min(1.0)
    }
}

/// `<x, y> = tr(x y*)/2` at embedding `s`, on embedded coordinates.
fn inner_embed(alg: &QuaternionAlgebra, x: &[f64; 4], y: &[f64; 4], s: usize) -> f64 {
    let (a, b) = alg.params();
    let (a, b) = (a.embed(s), b.embed(s));
    x[0] * y[0] - a * x[1] * y[1] - b * x[2] * y[2] + a * b * x[3] * y[3]
}

fn pure(x: &[f64; 3]) -> [f64; 4] {
    [0.0, x[0], x[1], x[2]]
}

/// `t_s = -1 + 2 (<g,1>^2 + <g,x_s>^2) / nr(g)^s`, with `x_s` given in the coordinates
/// of `i, j, ij` and of reduced norm one.
pub fn t_parameter(alg: &QuaternionAlgebra, g: &Quat, dirs: &[[f64; 3]]) -> Result<Vec<f64>> {
    let nr = alg.nr(g);
    (0..alg.ring().degree())
        .map(|s| {
            let l = nr.embed(s);
            if l == 0.0 {
                return Err(Error::ZeroTarget(s));
            }
            let ge = g.embed(s);
            let x = pure(&dirs[s]);
            let one = [1.0, 0.0, 0.0, 0.0];
            let (p, q) = (inner_embed(alg, &ge, &one, s), inner_embed(alg, &ge, &x, s));
            Ok((-1.0 + 2.0 * (p * p + q * q) / l).clamp(-1.0, 1.0))
        })
        .collect()
}

/// `<x_s, g x_s g^{-1}>` directly.
pub fn t_parameter_rotation(alg: &QuaternionAlgebra, g: &Quat, dirs: &[[f64; 3]]) -> Result<Vec<f64>> {
    let nr = alg.nr(g);
    (0..alg.ring().degree())
        .map(|s| {
            let l = nr.embed(s);
            if l == 0.0 {
                return Err(Error::ZeroTarget(s));
            }
            let ge = g.embed(s);
            let gc = [ge[0], -ge[1], -ge[2], -ge[3]];
            let x = pure(&dirs[s]);
            let y = alg.mul_embed(&alg.mul_embed(&ge, &x, s), &gc, s);
            Ok(inner_embed(alg, &x, &y, s) / l)
        })
        .collect()
}

/// One row of a decay scan.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DecayRow {
    pub m: u32,
    pub l: i32,
    pub t: f64,
    pub coeff: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Decay margins on `m <= m_max`, `|l| <= m^{l_exp}` and the given `t` values, by one
/// recurrence run per `(|l|, t)`. Rows are ordered by `m`, then `l`, then `t`.
pub fn decay_scan(m_max: u32, l_exp: f64, ts: &[f64]) -> Result<Vec<DecayRow>> {
    if ts.iter().any(|t| t * t >= 1.0) {
        return Err(Error::DecayDomain);
    }
    let lmax = |m: u32| ((m as f64).powf(l_exp) + 1e-9).floor() as u32;
    let mut rows = Vec::new();
    for la in 0..=m_max {
        if lmax(m_max) < la {
            break;
        }
        for &t in ts {
            let pre = ((1.0 + t) / 2.0).powi(la as i32);
            jacobi_run(m_max - la, 0, 2 * la, t, |n, p| {
                let m = n + la;
                if la > lmax(m) {
                    return;
                }
                let coeff = pre * p.abs();
                for l in if la == 0 { vec![0] } else { vec![-(la as i32), la as i32] } {
                    let bound = decay_bound(m, l, t).expect("checked domain");
                    rows.push(DecayRow { m, l, t, coeff, bound, ratio: coeff / bound });
                }
            });
        }
    }
    rows.sort_by(|a, b| (a.m, a.l).cmp(&(b.m, b.l)).then(a.t.total_cmp(&b.t)));
    Ok(rows)
}

/// `n` equally spaced points of `[-tmax, tmax]`.
pub fn t_grid(n: usize, tmax: f64) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n).map(|k| -tmax + 2.0 * tmax * k as f64 / (n - 1) as f64).collect()
}
