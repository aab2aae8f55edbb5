//! Amplifier sets, the geometric side of the pre-trace inequality, and the exact exponent
//! optimizations.

use nalgebra::Matrix3;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{ceil_rat, fmt_rat, floor_rat, rat, rat_int, rat_to_f64, Rat};
use crate::counting::{q3, representation_number, SplitCounter, CONSTRAINT_TOL};
use crate::enumerate::Region;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::forms::QuadraticForm;
use crate::special::{product_coeff, so4_character};

/// The four generator lists for one amplifier length `L`.
#[derive(Clone, Debug)]
pub struct AmplifierSets {
    pub l: Rat,
    pub sets: [Vec<FieldElement>; 4],
    pub exclusions: Vec<u64>,
}

impl AmplifierSets {
    pub fn sizes(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.sets[i].len())
    }

    /// Largest conjugate of any listed generator, per embedding.
    pub fn max_embeddings(&self, d: usize) -> Vec<f64> {
        let mut m = vec![0.0f64; d];
        for x in self.sets.iter().flatten() {
            for (s, v) in m.iter_mut().enumerate() {
                *v = v.max(x.embed(s));
            }
        }
        m
    }
}

fn u64_window(lo: &Rat, hi: &Rat) -> Option<(u64, u64)> {
    let a = ceil_rat(lo).max(0.into());
    let b = floor_rat(hi);
    let a = u64::try_from(a).ok()?;
    let b = u64::try_from(b).ok()?;
    (a <= b).then_some((a, b))
}

/// Prime generators in the cone with norm in `[L, 2L]` and `[L^2, 4L^2]`, the products
/// `l1 l2^2` of the first kind, and the squares of the second kind, all coprime to
/// `exclusions`.
pub fn build_sets(field: &Field, l: &Rat, exclusions: &[u64]) -> Result<AmplifierSets> {
    if *l < Rat::one() {
        return Err(Error::Invalid(format!("amplifier length {} below 1", fmt_rat(l))));
    }
    let primes = |lo: Rat, hi: Rat| match u64_window(&lo, &hi) {
        Some((a, b)) => field.principal_primes_in_cone(a, b, exclusions),
        None => Vec::new(),
    };
    let two = rat_int(2);
    let l1 = primes(l.clone(), &two * l);
    let l2 = primes(l * l, &two * &two * l * l);
    let mut l3 = Vec::new();
    for a in &l1 {
        for b in &l1 {
            let x = a * &(b * b);
            l3.push(field.cone_reduce(&x)?.1);
        }
    }
    sort_generators(&mut l3);
    l3.dedup();
    let mut l4 = l2.iter().map(|x| field.cone_reduce(&(x * x)).map(|r| r.1)).collect::<Result<Vec<_>>>()?;
    sort_generators(&mut l4);
    Ok(AmplifierSets { l: l.clone(), sets: [l1, l2, l3, l4], exclusions: exclusions.to_vec() })
}

fn sort_generators(v: &mut [FieldElement]) {
    v.sort_by(|x, y| x.norm().cmp(&y.norm()).then_with(|| x.cmp_at(y, 0)));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffMode {
    Matrix,
    Character,
    Trivial,
}

impl std::str::FromStr for CoeffMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" => Ok(CoeffMode::Matrix),
            "character" => Ok(CoeffMode::Character),
            "trivial" => Ok(CoeffMode::Trivial),
            _ => Err(Error::Parse(format!("unknown coefficient mode {s}"))),
        }
    }
}

/// Weights and directions for one geometric-side evaluation.
#[derive(Clone, Debug)]
pub struct GeometricQuery {
    pub directions: Vec<[f64; 3]>,
    pub m: Vec<u32>,
    pub l: Vec<i32>,
    pub mode: CoeffMode,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TermRow {
    pub i: usize,
    pub ell: Vec<String>,
    pub norm: String,
    pub count: u64,
    pub weighted: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GeometricReport {
    pub mode: CoeffMode,
    pub l: String,
    pub m_abs: u64,
    pub sizes: [usize; 4],
    pub terms: Vec<TermRow>,
    pub counts: [u64; 4],
    pub s: [f64; 4],
    pub b: f64,
    pub proxy: f64,
}

/// `|m| = prod (m_s + 1)`.
pub fn weight_dimension(m: &[u32]) -> u64 {
    m.iter().map(|&x| x as u64 + 1).product()
}

fn validate_geometric(q: &QuadraticForm, g: &GeometricQuery) -> Result<Vec<Matrix3<f64>>> {
    if !q.is_split() {
        return Err(Error::NotSplit);
    }
    let d = q.ring().degree();
    if g.m.len() != d || g.l.len() != d {
        return Err(Error::Shape(format!("need {d} weights and indices")));
    }
    if let Some((m, l)) = g.m.iter().zip(&g.l).find(|(m, l)| l.unsigned_abs() > **m) {
        return Err(Error::Invalid(format!("|l| = {} exceeds m = {m}", l.abs())));
    }
    let t = q.split_ternary()?;
    let grams: Vec<Matrix3<f64>> = (0..d)
        .map(|s| {
            let g = t.embedded_gram(s);
            Matrix3::from_fn(|a, b| g[a][b])
        })
        .collect();
    if g.mode == CoeffMode::Matrix {
        if g.directions.len() != d {
            return Err(Error::Shape(format!("need {d} directions")));
        }
        for (s, x) in g.directions.iter().enumerate() {
            if (q3(&grams[s], x, x) - 1.0).abs() > CONSTRAINT_TOL {
                return Err(Error::DirectionNotUnit(s));
            }
        }
    }
    Ok(grams)
}

/// `(r(ell), sum over Q(y) = ell of w(y))` by direct enumeration.
fn weighted_count(q: &QuadraticForm, grams: &[Matrix3<f64>], g: &GeometricQuery, ell: &FieldElement) -> (u64, f64) {
    let ring = q.ring();
    let d = ring.degree();
    let target = ell.to_oint().expect("integral generator");
    let ell_e = ell.embeddings();
    let (parts, _) = q.ellipsoid().search(&Region::shell(4, &ell_e), || (0u64, 0.0f64), |acc, y| {
        if q.value_int(y) != target {
            return;
        }
        let mut ts = [0.0; 2];
        for s in 0..d {
            let y0 = y[0].embed(ring, s);
            ts[s] = match g.mode {
                CoeffMode::Matrix => {
                    let yt = [y[1].embed(ring, s), y[2].embed(ring, s), y[3].embed(ring, s)];
                    let ip = q3(&grams[s], &yt, &g.directions[s]);
                    (-1.0 + 2.0 * (y0 * y0 + ip * ip) / ell_e[s]).clamp(-1.0, 1.0)
                }
                _ => (y0 / ell_e[s].sqrt()).clamp(-1.0, 1.0),
            };
        }
        let w = match g.mode {
            CoeffMode::Matrix => product_coeff(&g.m, &g.l, &ts[..d]).expect("validated"),
            CoeffMode::Character => {
                g.m.iter().zip(&ts).map(|(&m, &t)| so4_character(m, t).expect("clamped")).product()
            }
            CoeffMode::Trivial => 1.0,
        };
        acc.0 += 1;
        acc.1 += w;
    });
    parts.into_iter().fold((0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1))
}

/// `B = |m|^k (1/L + sum_i L^{-2-i/2} S_i)` with `k = 2` in character mode and `k = 1`
/// otherwise.
pub fn geometric_side(q: &QuadraticForm, sets: &AmplifierSets, g: &GeometricQuery) -> Result<GeometricReport> {
    let grams = validate_geometric(q, g)?;
    let ring = q.ring();
    let jobs: Vec<(usize, &FieldElement)> =
        sets.sets.iter().enumerate().flat_map(|(i, v)| v.iter().map(move |x| (i, x))).collect();
    let rows: Vec<(u64, f64)> = if g.mode == CoeffMode::Trivial {
        let limit = sets.max_embeddings(ring.degree());
        if jobs.is_empty() {
            Vec::new()
        } else {
            let sc = SplitCounter::new(q, &limit)?;
            jobs.par_iter()
                .map(|(_, x)| {
                    let c = sc.count(x.to_oint().expect("integral generator"))?;
                    Ok((c, c as f64))
                })
                .collect::<Result<_>>()?
        }
    } else {
        jobs.par_iter().map(|(_, x)| weighted_count(q, &grams, g, x)).collect()
    };
    let mut counts = [0u64; 4];
    let mut s = [0.0f64; 4];
    let mut terms = Vec::with_capacity(jobs.len());
    for ((i, x), (c, w)) in jobs.iter().zip(&rows) {
        counts[*i] += c;
        s[*i] += w;
        terms.push(TermRow { i: i + 1, ell: x.to_strings(), norm: fmt_rat(&x.norm()), count: *c, weighted: *w });
    }
    let lf = rat_to_f64(&sets.l);
    let dim = weight_dimension(&g.m);
    let pre = if g.mode == CoeffMode::Character { (dim * dim) as f64 } else { dim as f64 };
    let b = pre * amplified_sum(lf, &s);
    Ok(GeometricReport {
        mode: g.mode,
        l: fmt_rat(&sets.l),
        m_abs: dim,
        sizes: sets.sizes(),
        terms,
        counts,
        s,
        b,
        proxy: b.sqrt(),
    })
}

/// `1/L + sum_i L^{-2-i/2} S_i`.
pub fn amplified_sum(l: f64, s: &[f64; 4]) -> f64 {
    let mut acc = 1.0 / l;
    for (k, v) in s.iter().enumerate() {
        let i = (k + 1) as f64;
        acc += l.powf(-2.0 - i / 2.0) * v;
    }
    acc
}

/// `r(ell)` for every generator, by direct enumeration, in set order.
pub fn set_counts(q: &QuadraticForm, sets: &AmplifierSets) -> [Vec<u64>; 4] {
    [0, 1, 2, 3].map(|i| sets.sets[i].par_iter().map(|x| representation_number(q, x).0).collect())
}

/// Minimizes `max_k (a_k t + b_k)` over `t >= 0`; terms are `(a_k, b_k)`. Returns the
/// smallest minimizer and the minimum.
pub fn balance_exponents(terms: &[(Rat, Rat)]) -> Result<(Rat, Rat)> {
    if terms.is_empty() {
        return Err(Error::Invalid("no terms".into()));
    }
    if terms.iter().all(|(a, _)| a.is_negative()) {
        return Err(Error::Unbounded);
    }
    let f = |t: &Rat| terms.iter().map(|(a, b)| a * t + b).max().expect("nonempty");
    let mut cands = vec![Rat::zero()];
    for (i, (a1, b1)) in terms.iter().enumerate() {
        for (a2, b2) in &terms[i + 1..] {
            if a1 != a2 {
                let t = (b2 - b1) / (a1 - a2);
                if !t.is_negative() {
                    cands.push(t);
                }
            }
        }
    }
    cands.sort();
    let mut best: Option<(Rat, Rat)> = None;
    for t in cands {
        let v = f(&t);
        if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
            best = Some((t, v));
        }
    }
    Ok(best.expect("nonempty"))
}

/// An affine function `a beta + b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Affine {
    pub a: Rat,
    pub b: Rat,
}

impl Affine {
    fn new(a: Rat, b: Rat) -> Affine {
        Affine { a, b }
    }

    fn konst(b: Rat) -> Affine {
        Affine::new(Rat::zero(), b)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        &self.a * x + &self.b
    }

    fn add(&self, o: &Affine) -> Affine {
        Affine::new(&self.a + &o.a, &self.b + &o.b)
    }
}

/// The lines entering the profile for one `(kappa, i)`:
/// `[0, -1/2 - beta/4, i k/2, 3 i k/2 + beta/2, 12 i k/11 + 3 beta/11, i k]`.
fn profile_lines(kappa: &Rat, i: u32) -> [Affine; 6] {
    let ik = kappa * rat_int(i as i64);
    [
        Affine::konst(Rat::zero()),
        Affine::new(rat(-1, 4), rat(-1, 2)),
        Affine::konst(&ik / rat_int(2)),
        Affine::new(rat(1, 2), &ik * rat(3, 2)),
        Affine::new(rat(3, 11), &ik * rat(12, 11)),
        Affine::konst(ik.clone()),
    ]
}

fn profile_base(kappa: &Rat, i: u32) -> Rat {
    let mi = rat_int(i.min(2) as i64);
    Rat::one() + kappa * (mi - rat_int(2) - rat(i as i64, 2))
}

/// `1 + k(min(i,2) - 2 - i/2) + min(0, -1/2 - beta/4)
///   + max(0, min(i k/2, 3 i k/2 + beta/2), min(12 i k/11 + 3 beta/11, i k))`.
pub fn profile_eval(kappa: &Rat, i: u32, beta: &Rat) -> Rat {
    let ik = kappa * rat_int(i as i64);
    let m1 = Rat::zero().min(rat(-1, 2) - beta / rat_int(4));
    let a = (&ik / rat_int(2)).min(&ik * rat(3, 2) + beta / rat_int(2));
    let b = (&ik * rat(12, 11) + beta * rat(3, 11)).min(ik.clone());
    profile_base(kappa, i) + m1 + Rat::zero().max(a).max(b)
}

/// The branch of the profile active at `beta`.
fn profile_branch(kappa: &Rat, i: u32, beta: &Rat) -> Affine {
    let [zero, q, p1, p2, r1, r2] = profile_lines(kappa, i);
    let pick_min = |x: Affine, y: Affine| if x.eval(beta) <= y.eval(beta) { x } else { y };
    let pick_max = |x: Affine, y: Affine| if x.eval(beta) >= y.eval(beta) { x } else { y };
    let m1 = pick_min(zero.clone(), q);
    let a = pick_min(p1, p2);
    let b = pick_min(r1, r2);
    let m2 = pick_max(pick_max(zero, a), b);
    Affine::konst(profile_base(kappa, i)).add(&m1).add(&m2)
}

/// One linear piece of a profile on `[lo, hi]`; `lo = None` is `-infinity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub lo: Option<Rat>,
    pub hi: Rat,
    pub f: Affine,
}

/// The profile of one `i` as exact linear pieces on `beta <= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    pub i: u32,
    pub pieces: Vec<Piece>,
}

impl Profile {
    pub fn new(kappa: &Rat, i: u32) -> Profile {
        let lines = profile_lines(kappa, i);
        let mut bps: Vec<Rat> = Vec::new();
        for (k, x) in lines.iter().enumerate() {
            for y in &lines[k + 1..] {
                if x.a != y.a {
                    let t = (&y.b - &x.b) / (&x.a - &y.a);
                    if t < Rat::zero() {
                        bps.push(t);
                    }
                }
            }
        }
        bps.push(Rat::zero());
        bps.sort();
        bps.dedup();
        let mut pieces: Vec<Piece> = Vec::new();
        let mut lo: Option<Rat> = None;
        for hi in bps {
            let mid = match &lo {
                None => &hi - Rat::one(),
                Some(l) => (l + &hi) / rat_int(2),
            };
            let f = profile_branch(kappa, i, &mid);
            match pieces.last_mut() {
                Some(p) if p.f == f => p.hi = hi.clone(),
                _ => pieces.push(Piece { lo: lo.clone(), hi: hi.clone(), f }),
            }
            lo = Some(hi);
        }
        Profile { i, pieces }
    }

    /// Value from the piece containing `beta`.
    pub fn eval(&self, beta: &Rat) -> Rat {
        let p = self
            .pieces
            .iter()
            .find(|p| *beta <= p.hi)
            .unwrap_or_else(|| self.pieces.last().expect("nonempty"));
        p.f.eval(beta)
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> Vec<Rat> {
        self.pieces.iter().filter_map(|p| p.lo.clone()).collect()
    }

    /// Adjacent pieces agree at every shared breakpoint.
    pub fn is_continuous(&self) -> bool {
        self.pieces.windows(2).all(|w| w[0].f.eval(&w[0].hi) == w[1].f.eval(&w[0].hi))
    }

    /// Vertices `(beta, value)` on `[lo, 0]`.
    pub fn polyline(&self, lo: &Rat) -> Vec<(Rat, Rat)> {
        let mut xs = vec![lo.clone()];
        xs.extend(self.breakpoints().into_iter().filter(|b| b > lo));
        xs.push(Rat::zero());
        xs.dedup();
        xs.into_iter().map(|b| {
            let v = self.eval(&b);
            (b, v)
        }).collect()
    }
}

/// Where the maximum is attained: `beta` in `[lo, hi]`, `lo = None` for `-infinity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgMax {
    pub i: u32,
    pub lo: Option<Rat>,
    pub hi: Rat,
}

#[derive(Clone, Debug)]
pub struct ProfileOptimum {
    pub kappa: Rat,
    pub max: Rat,
    pub per_i: Vec<Rat>,
    pub argmax: Vec<ArgMax>,
    pub profiles: Vec<Profile>,
}

/// Exact maximum over `i in 1..=4` and `beta <= 0`.
pub fn optimize_profile(kappa: &Rat) -> Result<ProfileOptimum> {
    if kappa.is_negative() {
        return Err(Error::Invalid("kappa must be nonnegative".into()));
    }
    let profiles: Vec<Profile> = (1..=4).map(|i| Profile::new(kappa, i)).collect();
    let mut per_i = Vec::new();
    for p in &profiles {
        let first = &p.pieces[0];
        if first.f.a.is_negative() {
            return Err(Error::Unbounded);
        }
        let m = p
            .pieces
            .iter()
            .map(|q| q.f.eval(&q.hi))
            .chain(std::iter::once(first.f.eval(&first.hi)))
            .max()
            .expect("nonempty");
        per_i.push(m);
    }
    let max = per_i.iter().max().expect("four profiles").clone();
    let mut argmax = Vec::new();
    for p in &profiles {
        let mut cur: Option<ArgMax> = None;
        for q in &p.pieces {
            let at_hi = q.f.eval(&q.hi) == max;
            let flat = q.f.a.is_zero() && at_hi;
            let at_lo = q.lo.as_ref().is_some_and(|l| q.f.eval(l) == max);
            if flat {
                cur = Some(match cur.take() {
                    Some(c) if c.hi == *q.lo.as_ref().unwrap_or(&q.hi) => ArgMax { hi: q.hi.clone(), ..c },
                    Some(c) => {
                        argmax.push(c);
                        ArgMax { i: p.i, lo: q.lo.clone(), hi: q.hi.clone() }
                    }
                    None => ArgMax { i: p.i, lo: q.lo.clone(), hi: q.hi.clone() },
                });
                continue;
            }
            if at_lo {
                let l = q.lo.clone().expect("checked");
                let covered = cur.as_ref().is_some_and(|c| c.hi == l);
                if !covered {
                    if let Some(c) = cur.take() {
                        argmax.push(c);
                    }
                    cur = Some(ArgMax { i: p.i, lo: Some(l.clone()), hi: l });
                }
            }
            if at_hi {
                if let Some(c) = cur.take() {
                    argmax.push(c);
                }
                cur = Some(ArgMax { i: p.i, lo: Some(q.hi.clone()), hi: q.hi.clone() });
            }
        }
        if let Some(c) = cur {
            argmax.push(c);
        }
    }
    argmax.dedup();
    Ok(ProfileOptimum { kappa: kappa.clone(), max, per_i, argmax, profiles })
}

/// Maxima of `optimize_profile` at `lo, lo + step, ..., hi`.
pub fn kappa_scan(lo: &Rat, hi: &Rat, step: &Rat) -> Result<Vec<(Rat, Rat)>> {
    if !step.is_positive() {
        return Err(Error::Invalid("step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut k = lo.clone();
    while k <= *hi {
        out.push((k.clone(), optimize_profile(&k)?.max));
        k += step;
    }
    Ok(out)
}

/// Rows `(i, beta, value)` of the four polylines on `[lo, 0]`.
pub fn profile_rows(opt: &ProfileOptimum, lo: &Rat) -> Vec<(u32, Rat, Rat)> {
    opt.profiles
        .iter()
        .flat_map(|p| p.polyline(lo).into_iter().map(move |(b, v)| (p.i, b, v)))
        .collect()
}

pub fn profile_csv(opt: &ProfileOptimum, lo: &Rat) -> String {
    let mut s = String::from("i,beta,value\n");
    for (i, b, v) in profile_rows(opt, lo) {
        s.push_str(&format!("{i},{},{}\n", fmt_rat(&b), fmt_rat(&v)));
    }
    s
}

/// Interpolation weight `theta` on the eigenvalue bound and the joint saving `c` with
/// `(V^{-s_V})^{1-theta} (|lambda|^{-s_l})^theta = (|lambda|^{1/2} V)^{-c}`.
pub fn hybrid_interpolate(s_v: &Rat, s_l: &Rat) -> Result<(Rat, Rat)> {
    if !s_v.is_positive() || !s_l.is_positive() {
        return Err(Error::NonPositiveSaving);
    }
    let den = s_v + rat_int(2) * s_l;
    let theta = s_v / &den;
    let c = rat_int(2) * s_v * s_l / den;
    Ok((theta, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldTag;
    use crate::quaternion::lipschitz;

    #[test]
    fn sets_over_q() {
        let f = Field::rational();
        let s = build_sets(&f, &rat_int(3), &[2]).unwrap();
        let ints = |v: &[FieldElement]| v.iter().map(|x| x.to_oint().unwrap().a).collect::<Vec<_>>();
        assert_eq!(ints(&s.sets[0]), vec![3, 5]);
        assert_eq!(ints(&s.sets[1]), vec![11, 13, 17, 19, 23, 29, 31]);
        assert_eq!(ints(&s.sets[2]), vec![27, 45, 75, 125]);
        assert_eq!(ints(&s.sets[3]), vec![121, 169, 289, 361, 529, 841, 961]);
        let e = build_sets(&f, &rat(7, 2), &[2, 3, 5, 7]).unwrap();
        assert!(e.sets[0].is_empty() && e.sets[2].is_empty());
        assert!(build_sets(&f, &rat(1, 2), &[]).is_err());
    }

    #[test]
    fn sets_over_sqrt2() {
        let f = Field::new(FieldTag::Sqrt2).unwrap();
        let s = build_sets(&f, &rat_int(4), &[]).unwrap();
        let n7: Vec<_> = s.sets[0].iter().filter(|x| x.norm() == rat_int(7)).collect();
        assert_eq!(n7.len(), 2);
        assert!(s.sets.iter().flatten().all(|x| f.in_cone(x)));
    }

    #[test]
    fn geometric_trivial_lipschitz() {
        let f = Field::rational();
        let o = lipschitz();
        let q = o.split().unwrap().quaternary;
        let sets = build_sets(&f, &rat_int(3), &[2]).unwrap();
        let g = GeometricQuery { directions: vec![[1.0, 0.0, 0.0]], m: vec![0], l: vec![0], mode: CoeffMode::Trivial };
        let r = geometric_side(&q, &sets, &g).unwrap();
        assert_eq!(r.counts[0], 80);
        let gm = GeometricQuery { mode: CoeffMode::Matrix, ..g.clone() };
        let rm = geometric_side(&q, &sets, &gm).unwrap();
        assert_eq!(rm.s, r.s);
        assert_eq!(rm.b, r.b);
        let empty = build_sets(&f, &rat(7, 2), &[2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]).unwrap();
        let re = geometric_side(&q, &empty, &g).unwrap();
        assert_eq!(re.b, 1.0 / 3.5);
    }

    #[test]
    fn profile_values() {
        let k = rat(3, 20);
        assert_eq!(profile_eval(&k, 2, &rat_int(-2)), rat(17, 20));
        assert_eq!(profile_eval(&k, 4, &rat(-1, 5)), rat(17, 20));
        assert_eq!(profile_eval(&k, 1, &Rat::zero()), rat(17, 40));
        let opt = optimize_profile(&k).unwrap();
        assert_eq!(opt.max, rat(17, 20));
        assert_eq!(
            opt.argmax,
            vec![
                ArgMax { i: 2, lo: None, hi: rat_int(-2) },
                ArgMax { i: 4, lo: Some(rat(-1, 5)), hi: rat(-1, 5) },
            ]
        );
        assert!(opt.profiles.iter().all(|p| p.is_continuous()));
        assert_eq!(optimize_profile(&Rat::zero()).unwrap().max, Rat::one());
    }

    #[test]
    fn kappa_scan_minimum() {
        let scan = kappa_scan(&rat(1, 10), &rat(1, 5), &rat(1, 400)).unwrap();
        assert_eq!(scan.len(), 41);
        let best = scan.iter().map(|(_, v)| v).min().unwrap();
        let at: Vec<_> = scan.iter().filter(|(_, v)| v == best).map(|(k, _)| k.clone()).collect();
        assert_eq!(at, vec![rat(3, 20)], "{scan:?}");
    }

    #[test]
    fn balance_and_hybrid() {
        let terms = vec![(rat(-1, 1), rat(0, 1)), (rat(1, 2), rat(-1, 2)), (rat(2, 1), rat(-1, 1))];
        assert_eq!(balance_exponents(&terms).unwrap(), (rat(1, 3), rat(-1, 3)));
        assert!(matches!(balance_exponents(&[(rat(-1, 1), Rat::zero())]), Err(Error::Unbounded)));
        assert_eq!(balance_exponents(&[(Rat::zero(), Rat::zero())]).unwrap(), (Rat::zero(), Rat::zero()));
        assert_eq!(hybrid_interpolate(&rat(1, 6), &rat(3, 80)).unwrap(), (rat(20, 29), rat(3, 58)));
        assert!(hybrid_interpolate(&Rat::zero(), &rat(1, 2)).is_err());
    }
}
