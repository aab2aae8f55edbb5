//! Units, integers in boxes, the fundamental cone and prime generators.

use std::cmp::Ordering;

use crate::arith::{kronecker, primes_up_to};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, OInt, Ring};

/// Relative slack on real box bounds.
const BOX_SLACK: f64 = 1e-12;

/// Calls `f` on every `x in O_F` with `lo[s] <= x^s <= hi[s]` for each embedding `s`.
pub fn for_each_in_box(ring: Ring, lo: &[f64], hi: &[f64], mut f: impl FnMut(OInt)) {
    if ring.degree() == 1 {
        if lo[0] > hi[0] {
            return;
        }
        let (a0, a1) = (lo[0].ceil() as i128, hi[0].floor() as i128);
        for a in a0..=a1 {
            f(OInt::int(a));
        }
        return;
    }
    if lo[0] > hi[0] || lo[1] > hi[1] {
        return;
    }
    let [w1, w2] = ring.omegas();
    let dw = w1 - w2;
    let b0 = ((lo[0] - hi[1]) / dw).ceil() as i128;
    let b1 = ((hi[0] - lo[1]) / dw).floor() as i128;
    for b in b0..=b1 {
        let bf = b as f64;
        let alo = (lo[0] - bf * w1).max(lo[1] - bf * w2);
        let ahi = (hi[0] - bf * w1).min(hi[1] - bf * w2);
        if alo > ahi {
            continue;
        }
        for a in (alo.ceil() as i128)..=(ahi.floor() as i128) {
            f(OInt::new(a, b));
        }
    }
}

fn within(x: f64, bound: f64) -> bool {
    x.abs() <= bound * (1.0 + BOX_SLACK)
}

impl Field {
    /// All units `u` with `|u^s| <= a[s]` for every embedding.
    pub fn units_in_box(&self, a: &[f64]) -> Vec<FieldElement> {
        let mut out = Vec::new();
        let Some(eps) = self.fundamental_unit() else {
            if within(1.0, a[0]) {
                out.push(self.int(-1));
                out.push(self.int(1));
            }
            return out;
        };
        let l = eps.embed(0).ln();
        let kmin = (-(a[1].ln()) / l).floor() as i64 - 1;
        let kmax = (a[0].ln() / l).ceil() as i64 + 1;
        for k in kmin..=kmax {
            let u = eps.pow(k);
            if (0..2).all(|s| within(u.embed(s), a[s])) {
                out.push(-&u);
                out.push(u);
            }
        }
        out
    }

    /// Scale `log(2 + prod a)^(d-1)` against which unit counts are fitted.
    pub fn unit_count_scale(&self, a: &[f64]) -> f64 {
        let prod: f64 = a.iter().product();
        (2.0 + prod).ln().powi(self.degree() as i32 - 1)
    }

    /// All nonzero integers with `|x^s| <= a[s]`.
    pub fn integers_in_box(&self, a: &[f64]) -> Vec<FieldElement> {
        let ring = self.ring();
        let hi: Vec<f64> = a.iter().map(|&x| x * (1.0 + BOX_SLACK)).collect();
        let lo: Vec<f64> = hi.iter().map(|x| -x).collect();
        let mut out = Vec::new();
        for_each_in_box(ring, &lo, &hi, |x| {
            if !x.is_zero() && (0..ring.degree()).all(|s| within(x.embed(ring, s), a[s])) {
                out.push(x.to_fe(ring));
            }
        });
        out
    }

    /// Exact membership in the fundamental cone for totally positive units.
    pub fn in_cone(&self, x: &FieldElement) -> bool {
        if !x.is_totally_positive() {
            return false;
        }
        let Some(ep) = self.totally_positive_unit() else {
            return true;
        };
        let z = x / &x.conj();
        z.cmp_at(&ep.conj(), 0) != Ordering::Less && z.cmp_at(ep, 0) == Ordering::Less
    }

    /// Returns `(u, y)` with `u` a totally positive unit and `y = u x` in the cone.
    pub fn cone_reduce(&self, x: &FieldElement) -> Result<(FieldElement, FieldElement)> {
        let k = self.cone_exponent(x)?;
        let Some(ep) = self.totally_positive_unit() else {
            return Ok((self.int(1), x.clone()));
        };
        let u = ep.pow(k);
        let y = &u * x;
        Ok((u, y))
    }

    /// The exponent `k` with `eps_plus^k x` in the cone.
    pub fn cone_exponent(&self, x: &FieldElement) -> Result<i64> {
        if !x.is_totally_positive() {
            return Err(Error::NotTotallyPositive);
        }
        let Some(ep) = self.totally_positive_unit() else {
            return Ok(0);
        };
        let l = ep.embed(0).ln();
        let z1 = x.embed(0) / x.embed(1);
        let t = z1.ln() / (2.0 * l);
        let mut k = if t.is_finite() { -(t + 0.5).floor() as i64 } else { 0 };
        let mut y = x * &ep.pow(k);
        let epc = ep.conj();
        let epi = ep.inv().expect("unit");
        loop {
            let z = &y / &y.conj();
            if z.cmp_at(&epc, 0) == Ordering::Less {
                y = &y * ep;
                k += 1;
            } else if z.cmp_at(ep, 0) != Ordering::Less {
                y = &y * &epi;
                k -= 1;
            } else {
                return Ok(k);
            }
        }
    }

    /// All totally positive integers in the cone with norm at most `nmax`, sorted by
    /// norm and then by the first embedding.
    pub fn cone_integers(&self, nmax: u64) -> Vec<FieldElement> {
        let ring = self.ring();
        if ring.degree() == 1 {
            return (1..=nmax as i64).map(|n| self.int(n)).collect();
        }
        let ep = self.totally_positive_unit().expect("quadratic field").embed(0);
        let b = (nmax as f64 * ep).sqrt() * (1.0 + 1e-9) + 1e-9;
        let mut out: Vec<(i128, FieldElement)> = Vec::new();
        for_each_in_box(ring, &[0.0, 0.0], &[b, b], |x| {
            let n = x.norm(ring);
            if n > 0 && n as u64 <= nmax {
                let fe = x.to_fe(ring);
                if self.in_cone(&fe) {
                    out.push((n, fe));
                }
            }
        });
        out.sort_by(|(n1, x), (n2, y)| n1.cmp(n2).then_with(|| x.cmp_at(y, 0)));
        out.into_iter().map(|(_, x)| x).collect()
    }

    /// One totally positive cone generator for each principal prime ideal with norm in
    /// `[nmin, nmax]` lying over a rational prime that divides no entry of `avoid`.
    /// Over a quadratic field only narrowly principal primes are found.
    pub fn principal_primes_in_cone(&self, nmin: u64, nmax: u64, avoid: &[u64]) -> Vec<FieldElement> {
        let excluded = |p: u64| avoid.iter().any(|&a| a != 0 && a % p == 0);
        let ring = self.ring();
        let mut out: Vec<(u64, FieldElement)> = Vec::new();
        for p in primes_up_to(nmax) {
            if excluded(p) {
                continue;
            }
            if ring.degree() == 1 {
                if p >= nmin {
                    out.push((p, self.int(p as i64)));
                }
                continue;
            }
            if kronecker(ring.disc(), p) == -1 {
                let n = p * p;
                if n >= nmin && n <= nmax {
                    out.push((n, self.int(p as i64)));
                }
                continue;
            }
            if p < nmin {
                continue;
            }
            let ep = self.totally_positive_unit().expect("quadratic field").embed(0);
            let b = (p as f64 * ep).sqrt() * (1.0 + 1e-9) + 1e-9;
            let mut gens = Vec::new();
            for_each_in_box(ring, &[0.0, 0.0], &[b, b], |x| {
                if x.norm(ring) == p as i128 {
                    let fe = x.to_fe(ring);
                    if self.in_cone(&fe) {
                        gens.push(fe);
                    }
                }
            });
            out.extend(gens.into_iter().map(|g| (p, g)));
        }
        out.sort_by(|(n1, x), (n2, y)| n1.cmp(n2).then_with(|| x.cmp_at(y, 0)));
        out.into_iter().map(|(_, g)| g).collect()
    }
}
