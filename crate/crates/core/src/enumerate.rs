//! Depth-first enumeration of `O_F`-points in products of ellipsoids.
//!
//! For each embedding the form is split as `sum_j h_j (x_j + sum_{i>j} c_ji x_i)^2`.
//! Coordinates are fixed from the last to the first; every coordinate ranges over the
//! `O_F`-points of a box given by one interval per embedding. Pruning is done in floating
//! point with a widened radius, so callers must confirm membership exactly.

use rayon::prelude::*;

use crate::arith::PRUNE_WIDEN;
use crate::error::{Error, Result};
use crate::field::{OInt, Ring};
use crate::linalg::ldl_upper_f64;

#[derive(Clone, Debug)]
pub struct Ellipsoid {
    ring: Ring,
    n: usize,
    omega: [f64; 2],
    /// `h[j][s]`
    h: Vec<[f64; 2]>,
    /// `c[j][i][s]` for `i > j`
    c: Vec<Vec<[f64; 2]>>,
}

/// Center and per-embedding radii of one search.
#[derive(Clone, Debug)]
pub struct Region {
    /// `center[s][i]`
    pub center: Vec<Vec<f64>>,
    pub radius: [f64; 2],
    /// Only points near the boundary are wanted; the first coordinate is then restricted
    /// to the two ends of its interval.
    pub shell: bool,
}

impl Region {
    pub fn ball(n: usize, radius: &[f64]) -> Region {
        let mut r = [0.0; 2];
        r[..radius.len()].copy_from_slice(radius);
        Region { center: vec![vec![0.0; n]; radius.len()], radius: r, shell: false }
    }

    pub fn shell(n: usize, radius: &[f64]) -> Region {
        Region { shell: true, ..Region::ball(n, radius) }
    }
}

struct Walk<'a> {
    e: &'a Ellipsoid,
    center: &'a [Vec<f64>],
    radius: [f64; 2],
    target: [f64; 2],
    shell: bool,
}

impl Ellipsoid {
    /// `grams[s]` is the real Gram matrix `A^s` of `Q^s(x) = x^T A^s x / 2`.
    pub fn new(ring: Ring, grams: &[Vec<Vec<f64>>]) -> Result<Ellipsoid> {
        let n = grams[0].len();
        let mut h = vec![[0.0; 2]; n];
        let mut c = vec![vec![[0.0; 2]; n]; n];
        for (s, g) in grams.iter().enumerate() {
            let half: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| x / 2.0).collect()).collect();
            let (hs, cs) = ldl_upper_f64(&half)
                .ok_or(Error::NotPositiveDefinite { embedding: s, minor: 0 })?;
            for j in 0..n {
                h[j][s] = hs[j];
                for i in j + 1..n {
                    c[j][i][s] = cs[j][i];
                }
            }
        }
        let omega = if ring.degree() == 2 { ring.omegas() } else { [0.0; 2] };
        Ok(Ellipsoid { ring, n, omega, h, c })
    }

    /// Ellipsoid of an integral Gram matrix.
    pub fn from_gram(ring: Ring, gram: &[Vec<OInt>]) -> Result<Ellipsoid> {
        let grams: Vec<Vec<Vec<f64>>> = (0..ring.degree())
            .map(|s| gram.iter().map(|r| r.iter().map(|x| x.embed(ring, s)).collect()).collect())
            .collect();
        Ellipsoid::new(ring, &grams)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    fn widen(&self, radius: [f64; 2]) -> Option<[f64; 2]> {
        let mut out = [0.0; 2];
        for s in 0..self.ring.degree() {
            let r = radius[s];
            let w = r + r.abs() * PRUNE_WIDEN + PRUNE_WIDEN;
            if w < 0.0 {
                return None;
            }
            out[s] = w;
        }
        Some(out)
    }

    /// Interval for coordinate `j` given the embedded later coordinates `xe`.
    fn interval(&self, w: &Walk, j: usize, xe: &[[f64; 2]], part: [f64; 2]) -> Option<([f64; 2], [f64; 2], [f64; 2])> {
        let d = self.ring.degree();
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut u = [0.0; 2];
        for s in 0..d {
            let mut t = w.center[s][j];
            for i in j + 1..self.n {
                t -= self.c[j][i][s] * (xe[i][s] - w.center[s][i]);
            }
            let rem = w.radius[s] - part[s];
            if rem < 0.0 {
                return None;
            }
            let r = (rem / self.h[j][s]).sqrt() + PRUNE_WIDEN;
            u[s] = t;
            lo[s] = t - r;
            hi[s] = t + r;
        }
        Some((lo, hi, u))
    }

    fn candidates(&self, lo: [f64; 2], hi: [f64; 2], mut f: impl FnMut(OInt)) {
        if self.ring.degree() == 1 {
            if lo[0] > hi[0] {
                return;
            }
            let (a0, a1) = (lo[0].ceil() as i128, hi[0].floor() as i128);
            for a in a0..=a1 {
                f(OInt::int(a));
            }
            return;
        }
        let [w1, w2] = self.omega;
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

    #[allow(clippy::too_many_arguments)]
    fn step<A>(
        &self,
        w: &Walk,
        j: usize,
        v: OInt,
        u: [f64; 2],
        x: &mut [OInt],
        xe: &mut [[f64; 2]],
        part: [f64; 2],
        acc: &mut A,
        visit: &(impl Fn(&mut A, &[OInt]) + Sync),
        nodes: &mut u64,
    ) {
        *nodes += 1;
        x[j] = v;
        let mut np = part;
        for s in 0..self.ring.degree() {
            let ve = if s == 0 { v.embed_with(self.omega[0]) } else { v.embed_with(self.omega[1]) };
            xe[j][s] = ve;
            np[s] += self.h[j][s] * (ve - u[s]) * (ve - u[s]);
        }
        if j == 0 {
            visit(acc, x);
        } else {
            self.level(w, j - 1, x, xe, np, acc, visit, nodes);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn level<A>(
        &self,
        w: &Walk,
        j: usize,
        x: &mut [OInt],
        xe: &mut [[f64; 2]],
        part: [f64; 2],
        acc: &mut A,
        visit: &(impl Fn(&mut A, &[OInt]) + Sync),
        nodes: &mut u64,
    ) {
        let Some((lo, hi, u)) = self.interval(w, j, xe, part) else {
            return;
        };
        if j > 0 || !w.shell {
            self.candidates(lo, hi, |v| self.step(w, j, v, u, x, xe, part, acc, visit, nodes));
            return;
        }
        let windows = self.shell_windows(w, part, u);
        if self.ring.degree() == 1 {
            for a in &windows[0] {
                self.candidates([a[0], 0.0], [a[1], 0.0], |v| self.step(w, j, v, u, x, xe, part, acc, visit, nodes));
            }
            return;
        }
        for a in &windows[0] {
            for b in &windows[1] {
                let lo = [a[0], b[0]];
                let hi = [a[1], b[1]];
                self.candidates(lo, hi, |v| self.step(w, j, v, u, x, xe, part, acc, visit, nodes));
            }
        }
    }

    /// Per embedding, the (merged) windows around both ends of the first coordinate's
    /// interval; as `[lo, hi]` pairs.
    fn shell_windows(&self, w: &Walk, part: [f64; 2], u: [f64; 2]) -> Vec<Vec<[f64; 2]>> {
        (0..self.ring.degree())
            .map(|s| {
                let rad = w.target[s];
                let err = rad.abs() * 1e-9 + 1e-9;
                let rem = rad - part[s];
                let h = self.h[0][s];
                let r_lo = ((rem - err).max(0.0) / h).sqrt() - PRUNE_WIDEN;
                let r_hi = ((rem + err).max(0.0) / h).sqrt() + PRUNE_WIDEN;
                if r_lo <= 0.0 {
                    vec![[u[s] - r_hi, u[s] + r_hi]]
                } else {
                    vec![[u[s] - r_hi, u[s] - r_lo], [u[s] + r_lo, u[s] + r_hi]]
                }
            })
            .collect()
    }

    /// Visits every candidate `x` of the region. The region is split over the values of
    /// the last coordinate; each part gets a fresh accumulator from `init`, and the
    /// accumulators are returned in a fixed order together with the node count.
    pub fn search<A, I, V>(&self, region: &Region, init: I, visit: V) -> (Vec<A>, u64)
    where
        A: Send,
        I: Fn() -> A + Sync,
        V: Fn(&mut A, &[OInt]) + Sync,
    {
        let n = self.n;
        let Some(radius) = self.widen(region.radius) else {
            return (Vec::new(), 0);
        };
        let w = Walk { e: self, center: &region.center, radius, target: region.radius, shell: region.shell };
        let xe0 = vec![[0.0; 2]; n];
        let Some((lo, hi, u)) = self.interval(&w, n - 1, &xe0, [0.0; 2]) else {
            return (Vec::new(), 0);
        };
        let mut tops = Vec::new();
        self.candidates(lo, hi, |v| tops.push(v));
        let parts: Vec<(A, u64)> = tops
            .par_iter()
            .map(|&v| {
                let mut acc = init();
                let mut nodes = 0;
                let mut x = vec![OInt::ZERO; n];
                let mut xe = vec![[0.0; 2]; n];
                w.e.step(&w, n - 1, v, u, &mut x, &mut xe, [0.0; 2], &mut acc, &visit, &mut nodes);
                (acc, nodes)
            })
            .collect();
        let nodes = parts.iter().map(|p| p.1).sum();
        (parts.into_iter().map(|p| p.0).collect(), nodes)
    }

    /// Like `search`, but merges accumulators with `merge` as parts finish, so only a few
    /// are alive at once. The result is independent of scheduling only when `merge` is
    /// associative and commutative on the values produced.
    pub fn fold<A, I, V, M>(&self, region: &Region, init: I, visit: V, merge: M) -> (A, u64)
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        V: Fn(&mut A, &[OInt]) + Sync,
        M: Fn(A, A) -> A + Sync + Send,
    {
        let n = self.n;
        let Some(radius) = self.widen(region.radius) else {
            return (init(), 0);
        };
        let w = Walk { e: self, center: &region.center, radius, target: region.radius, shell: region.shell };
        let xe0 = vec![[0.0; 2]; n];
        let Some((lo, hi, u)) = self.interval(&w, n - 1, &xe0, [0.0; 2]) else {
            return (init(), 0);
        };
        let mut tops = Vec::new();
        self.candidates(lo, hi, |v| tops.push(v));
        tops.par_iter()
            .fold(
                || (init(), 0u64),
                |(mut acc, mut nodes), &v| {
                    let mut x = vec![OInt::ZERO; n];
                    let mut xe = vec![[0.0; 2]; n];
                    w.e.step(&w, n - 1, v, u, &mut x, &mut xe, [0.0; 2], &mut acc, &visit, &mut nodes);
                    (acc, nodes)
                },
            )
            .reduce(|| (init(), 0), |a, b| (merge(a.0, b.0), a.1 + b.1))
    }

    /// Collects the vectors accepted by `keep`, in lexicographic order.
    pub fn collect<K>(&self, region: &Region, keep: K) -> (Vec<Vec<OInt>>, u64)
    where
        K: Fn(&[OInt]) -> bool + Sync,
    {
        let (parts, nodes) = self.search(region, Vec::new, |acc: &mut Vec<Vec<OInt>>, x| {
            if keep(x) {
                acc.push(x.to_vec());
            }
        });
        let mut out: Vec<Vec<OInt>> = parts.into_iter().flatten().collect();
        out.sort();
        (out, nodes)
    }

    /// Counts the vectors accepted by `keep`.
    pub fn count<K>(&self, region: &Region, keep: K) -> (u64, u64)
    where
        K: Fn(&[OInt]) -> bool + Sync,
    {
        let (parts, nodes) = self.search(region, || 0u64, |acc, x| {
            if keep(x) {
                *acc += 1;
            }
        });
        (parts.into_iter().sum(), nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_sum_of_two_squares() {
        let r = Ring::RATIONAL;
        let g = vec![vec![OInt::int(2), OInt::ZERO], vec![OInt::ZERO, OInt::int(2)]];
        let e = Ellipsoid::from_gram(r, &g).unwrap();
        let (c, _) = e.count(&Region::ball(2, &[5.0]), |x| x[0].a * x[0].a + x[1].a * x[1].a == 5);
        assert_eq!(c, 8);
        let (c, _) = e.count(&Region::ball(2, &[10.0]), |x| x[0].a * x[0].a + x[1].a * x[1].a <= 10);
        assert_eq!(c, 37);
        let (c, _) = e.count(&Region::shell(2, &[25.0]), |x| x[0].a * x[0].a + x[1].a * x[1].a == 25);
        assert_eq!(c, 12);
    }

    #[test]
    fn quadratic_box() {
        // x^2 over Z[sqrt 2] with both conjugates at most 3 in absolute value.
        let r = Ring::quadratic(0, 2);
        let g = vec![vec![OInt::int(2)]];
        let e = Ellipsoid::from_gram(r, &g).unwrap();
        let (c, _) = e.count(&Region::ball(1, &[9.0, 9.0]), |x| !x[0].is_zero());
        assert_eq!(c, 14);
        // x^2 = 3 + 2 sqrt 2 has the solutions +-(1 + sqrt 2).
        let t = [3.0 + 2.0 * 2f64.sqrt(), 3.0 - 2.0 * 2f64.sqrt()];
        let (v, _) = e.collect(&Region::shell(1, &t), |x| x[0].mul(x[0], r) == OInt::new(3, 2));
        assert_eq!(v, vec![vec![OInt::new(-1, -1)], vec![OInt::new(1, 1)]]);
    }
}
