//! Acceptance suite: one pass/fail line per criterion; exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supnorm::amplifier::{
    balance_exponents, build_sets, profile_rows, geometric_side, hybrid_interpolate, optimize_profile, profile_eval,
    ArgMax, CoeffMode, GeometricQuery,
};
use supnorm::arith::{rat, rat_int, Rat};
use supnorm::counting::{constrained_count, enumerate_representations, rep_count, representation_number, ConstrainedCountQuery, ConstraintMode};
use supnorm::forms::QuadraticForm;
use supnorm::linalg::{det, mat_vec};
use supnorm::quaternion::{Quat, QuaternionAlgebra};
use supnorm::reduce::reduce_form;
use supnorm::reports::{corpus, decay_summary, default_directions, lemma_scan, load_builtin, volume_terms, LemmaScanConfig, Source};
use supnorm::special::{
    decay_scan, jacobi_eval, jacobi_norm_exact, matrix_coeff, so4_character, so4_character_bound, t_grid, t_parameter,
    t_parameter_rotation,
};
use supnorm::{Field, FieldElement};

/// Outcome of one criterion: pass flag, a summary, and a canonical serialization of the
/// computed data for the determinism comparison.
struct Outcome {
    pass: bool,
    detail: String,
    digest: String,
}

fn outcome(fails: Vec<String>, detail: String, digest: String) -> Outcome {
    let pass = fails.is_empty();
    let detail = if pass { detail } else { format!("{detail}; failures: {}", fails.join(" | ")) };
    Outcome { pass, detail, digest }
}

fn sources() -> Vec<Source> {
    corpus().iter().map(|c| load_builtin(c.name).expect("builtin loads")).collect()
}

/// Every form of the corpus: norm forms, split forms of orders, plain forms.
fn corpus_forms() -> Vec<(String, Field, QuadraticForm)> {
    let mut out = Vec::new();
    for s in sources() {
        out.push((s.name.clone(), s.field.clone(), s.form.clone()));
        if s.order.is_some() {
            out.push((format!("{} split", s.name), s.field.clone(), s.split_form().expect("order splits")));
        }
    }
    out
}

fn c1() -> Outcome {
    let mut fails = Vec::new();
    let opt = optimize_profile(&rat(3, 20)).expect("profile");
    if opt.max != rat(17, 20) {
        fails.push(format!("max {}", opt.max));
    }
    let want = vec![ArgMax { i: 2, lo: None, hi: rat_int(-2) }, ArgMax { i: 4, lo: Some(rat(-1, 5)), hi: rat(-1, 5) }];
    if opt.argmax != want {
        fails.push(format!("argmax {:?}", opt.argmax));
    }
    let (t, v) = balance_exponents(&volume_terms()).expect("balance");
    if (t.clone(), v.clone()) != (rat(1, 3), rat(-1, 3)) || &v / rat_int(2) != rat(-1, 6) {
        fails.push(format!("balance {t} {v}"));
    }
    let (th, c) = hybrid_interpolate(&rat(1, 6), &rat(3, 80)).expect("hybrid");
    if (th.clone(), c.clone()) != (rat(20, 29), rat(3, 58)) || c < rat(1, 20) {
        fails.push(format!("hybrid {th} {c}"));
    }
    let detail = format!("max {} at i=2 beta<=-2 and i=4 beta=-1/5; t*={t} value={v}; theta={th} c={c}", opt.max);
    outcome(fails, detail, String::new())
}

fn c2() -> Outcome {
    let mut fails = Vec::new();
    let k = rat(3, 20);
    let opt = optimize_profile(&k).expect("profile");
    let lo = rat_int(-3);
    let rows = profile_rows(&opt, &lo);
    for p in &opt.profiles {
        if !p.is_continuous() {
            fails.push(format!("i={} discontinuous", p.i));
        }
    }
    // Linear interpolation of the emitted vertices.
    let interp = |i: u32, b: &Rat| -> Rat {
        let pts: Vec<&(u32, Rat, Rat)> = rows.iter().filter(|r| r.0 == i).collect();
        for w in pts.windows(2) {
            let ((_, b0, v0), (_, b1, v1)) = (w[0], w[1]);
            if b0 <= b && b <= b1 {
                return v0 + (v1 - v0) * (b - b0) / (b1 - b0);
            }
        }
        panic!("beta outside the polyline");
    };
    let step = rat(1, 1000);
    let mut b = lo.clone();
    let mut grid_max = vec![Rat::zero(); 4];
    let mut top_points: Vec<(u32, Rat)> = Vec::new();
    let mut points = 0;
    while b <= Rat::zero() {
        let mut best = None::<Rat>;
        for i in 1..=4u32 {
            let direct = profile_eval(&k, i, &b);
            let poly = interp(i, &b);
            if direct != poly || direct != opt.profiles[i as usize - 1].eval(&b) {
                fails.push(format!("i={i} beta={b}: direct {direct} polyline {poly}"));
            }
            if direct > grid_max[i as usize - 1] {
                grid_max[i as usize - 1] = direct.clone();
            }
            if direct == rat(17, 20) {
                top_points.push((i, b.clone()));
            }
            best = Some(best.map_or(direct.clone(), |x: Rat| x.max(direct)));
        }
        if best.expect("four values") > rat(17, 20) {
            fails.push(format!("pointwise max above 17/20 at {b}"));
        }
        b += &step;
        points += 1;
    }
    let at_stated = top_points
        .iter()
        .all(|(i, b)| (*i == 2 && *b <= rat_int(-2)) || (*i == 4 && *b == rat(-1, 5)));
    if !at_stated || !top_points.contains(&(4, rat(-1, 5))) || !top_points.contains(&(2, rat_int(-2))) {
        fails.push(format!("maximum attained at {:?}", top_points.iter().take(5).collect::<Vec<_>>()));
    }
    // Per-i maxima agree with the exact maxima within one grid cell of slope at most 1.
    for (i, (g, m)) in grid_max.iter().zip(&opt.per_i).enumerate() {
        if g > m || m - g > step {
            fails.push(format!("i={} grid max {g} vs {m}", i + 1));
        }
    }
    let detail = format!("{} vertices, {points} grid points, pointwise max 17/20", rows.len());
    outcome(fails, detail, String::new())
}

fn c3() -> Outcome {
    let mut fails = Vec::new();
    let mut digest = String::new();
    let mut checked = 0usize;
    for (name, field, q) in corpus_forms() {
        let ells = field.cone_integers(200);
        let brute = common::brute_force(&q, &ells);
        for l in &ells {
            let got = enumerate_representations(&q, l);
            let want = brute.get(&l.to_oint().expect("integral")).cloned().unwrap_or_default();
            if got != want {
                fails.push(format!("{name} l={l}: {} vs {}", got.len(), want.len()));
            }
            digest.push_str(&format!("{name} {l} {}\n", got.len()));
            checked += 1;
        }
    }
    let lip = load_builtin("lipschitz").expect("builtin");
    for n in (1..=199u64).step_by(2) {
        let (c, _) = representation_number(&lip.form, &lip.field.int(n as i64));
        if c != 8 * common::sigma(n) {
            fails.push(format!("lipschitz r({n}) = {c}"));
        }
        digest.push_str(&format!("lip {n} {c}\n"));
    }
    outcome(fails, format!("{checked} (form, l) pairs match brute force; r(l) = 8 sigma(l) for odd l <= 199"), digest)
}

fn c4() -> Outcome {
    let mut fails = Vec::new();
    let mut digest = String::new();
    let grid = [0.01, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0];
    let mut checked = 0;
    for name in ["lipschitz", "hurwitz", "eichler-2-3"] {
        let s = load_builtin(name).expect("builtin");
        let form = s.split_form().expect("split");
        let dirs = default_directions(&form).expect("directions");
        for l in s.field.cone_integers(100) {
            let r = rep_count(&form, &l).count;
            let q = |eta: f64, mode| ConstrainedCountQuery { form: form.clone(), ell: l.clone(), directions: dirs.clone(), eta: vec![eta], mode };
            let torus = constrained_count(&q(2.0, ConstraintMode::NearTorus)).expect("count").count;
            let equator = constrained_count(&q(1.0, ConstraintMode::NearEquator)).expect("count").count;
            if torus != r || equator != r {
                fails.push(format!("{name} l={l}: r={r} torus={torus} equator={equator}"));
            }
            for mode in [ConstraintMode::NearTorus, ConstraintMode::NearEquator] {
                let counts: Vec<u64> = grid.iter().map(|&e| constrained_count(&q(e, mode)).expect("count").count).collect();
                if counts.windows(2).any(|w| w[1] < w[0]) {
                    fails.push(format!("{name} l={l} {mode:?} not monotone: {counts:?}"));
                }
                digest.push_str(&format!("{name} {l} {mode:?} {counts:?}\n"));
            }
            checked += 1;
        }
    }
    outcome(fails, format!("{checked} (order, l) pairs; boundary identities and monotonicity hold"), digest)
}

fn c5() -> Outcome {
    let mut fails = Vec::new();
    let cfg = LemmaScanConfig { max_norm: 10_000, max_norm_quadratic: 400, full_form_max: 300, eta: vec![1.0 / 16.0, 0.25, 1.0] };
    let scan = lemma_scan(&sources(), &cfg).expect("scan");
    let mut parts = Vec::new();
    for s in &scan.summaries {
        parts.push(format!("{} max {:.3} (median {:.3}, {} rows)", s.family, s.max, s.median, s.rows));
        if !s.guard {
            fails.push(format!("{}: max {} above 10 x median {}", s.family, s.max, s.median));
        }
    }
    let digest = serde_json::to_string(&scan).expect("serializable");
    let detail = format!("{}; {} skipped", parts.join(", "), scan.skipped.len());
    outcome(fails, detail, digest)
}

fn c6() -> Outcome {
    let mut fails = Vec::new();
    for m in 0..=200u32 {
        for l in -(m as i32)..=m as i32 {
            if matrix_coeff(m, l, 1.0) != Ok(1.0) {
                fails.push(format!("p_({m},{l})(1) != 1"));
            }
        }
    }
    let mut worst_norm = 0.0f64;
    for n in 0..=30u32 {
        for (a, b) in [(0, 0), (0, 2), (0, 6), (1, 2), (3, 1), (0, 20)] {
            let exact = supnorm::arith::rat_to_f64(&jacobi_norm_exact(n, a, b));
            let quad = common::jacobi_weighted_integral(|t| jacobi_eval(n, a, b, t).powi(2), a, b, 64);
            let rel = (quad - exact).abs() / exact;
            worst_norm = worst_norm.max(rel);
            if rel > 1e-10 {
                fails.push(format!("norm ({n},{a},{b}): {quad} vs {exact}"));
            }
        }
    }
    let ts = t_grid(199, 0.99);
    let rows = decay_scan(200, 0.9, &ts).expect("scan");
    let summary = decay_summary(&rows, 200, 5);
    if !summary.max.is_finite() || !summary.stable {
        fails.push(format!("decay grid {:?}", summary.block_max));
    }
    let _ = std::fs::write(
        std::env::temp_dir().join("decay_grid_summary.json"),
        serde_json::to_string(&summary).expect("serializable"),
    );
    let mut char_points = 0;
    for m in 0..100u32 {
        for k in 0..1000 {
            let t = -1.0 + 2.0 * k as f64 / 999.0;
            let v = so4_character(m, t).expect("in range");
            if v.abs() > so4_character_bound(m, t) + 1e-12 {
                fails.push(format!("character m={m} t={t}"));
            }
            char_points += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let r = supnorm::field::Ring::RATIONAL;
    let alg = QuaternionAlgebra::hamilton(r);
    let mut worst_t = 0.0f64;
    for _ in 0..1000 {
        let c: [Rat; 4] = std::array::from_fn(|_| rat(rng.gen_range(-20..=20), rng.gen_range(1..=5)));
        if c.iter().all(Zero::is_zero) {
            continue;
        }
        let g = Quat::from_rats(r, c);
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let x = [v[0] / nv, v[1] / nv, v[2] / nv];
        let a = t_parameter(&alg, &g, &[x]).expect("nonzero")[0];
        let b = t_parameter_rotation(&alg, &g, &[x]).expect("nonzero")[0];
        worst_t = worst_t.max((a - b).abs());
    }
    if worst_t > 1e-9 {
        fails.push(format!("t two-formula gap {worst_t}"));
    }
    let detail = format!(
        "decay grid max {:.6} at (m,l,t)={:?}, block maxima {:?}; norm rel err {worst_norm:.1e}; {char_points} character points; t gap {worst_t:.1e}",
        summary.max,
        summary.argmax,
        summary.block_max.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
    );
    let digest = serde_json::to_string(&summary).expect("serializable");
    outcome(fails, detail, digest)
}

fn c7() -> Outcome {
    let mut fails = Vec::new();
    let mut digest = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, field, q) in corpus_forms() {
        let ring = q.ring();
        let d = ring.degree();
        let n = q.rank();
        let r = match reduce_form(&field, &q) {
            Ok(r) => r,
            Err(e) => {
                fails.push(format!("{name}: {e}"));
                continue;
            }
        };
        for _ in 0..1000 {
            let x: Vec<FieldElement> = (0..n)
                .map(|_| FieldElement::from_i64(ring, rng.gen_range(-1000..=1000), if d == 1 { 0 } else { rng.gen_range(-1000..=1000) }))
                .collect();
            let ux = mat_vec(&r.u, &x);
            let v = q.value(&ux);
            if v != r.reduced.value(&x) || v != r.expansion(&x) {
                fails.push(format!("{name}: identity fails at {x:?}"));
                break;
            }
        }
        if det(&r.u).norm().abs() != Rat::one() {
            fails.push(format!("{name}: det U not a unit"));
        }
        let prod = r.h.iter().fold(Rat::one(), |p, h| p * h.norm().abs());
        if prod * rat_int(2).pow((n * d) as i32) != q.det_norm().abs() {
            fails.push(format!("{name}: prod N(h_j) mismatch"));
        }
        for l in field.cone_integers(100) {
            let a = representation_number(&q, &l).0;
            let b = representation_number(&r.reduced, &l).0;
            if a != b {
                fails.push(format!("{name} l={l}: {a} vs {b}"));
            }
        }
        digest.push_str(&format!(
            "{name} {:?} {:?}\n",
            r.u.iter().map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            r.h.iter().map(|x| x.to_string()).collect::<Vec<_>>()
        ));
    }
    outcome(fails, format!("{} forms: identity on 1000 vectors, unit det U, determinant product, r(l) invariance", corpus_forms().len()), digest)
}

fn c8() -> Outcome {
    let mut fails = Vec::new();
    let mut digest = String::new();
    let src = load_builtin("lipschitz").expect("builtin");
    let split = src.split_form().expect("split");
    let dirs = default_directions(&split).expect("directions");
    for l in [3, 5, 10] {
        let sets = build_sets(&src.field, &rat_int(l), &[2]).expect("sets");
        let g = GeometricQuery { directions: dirs.clone(), m: vec![0], l: vec![0], mode: CoeffMode::Trivial };
        let rep = geometric_side(&split, &sets, &g).expect("geometric side");
        let lf = l as f64;
        let mut want = 1.0 / lf;
        for (k, set) in sets.sets.iter().enumerate() {
            let s: u64 = set.iter().map(|x| common::r4(x.to_oint().expect("integral").a as u64)).sum();
            if rep.counts[k] != s || rep.s[k] != s as f64 {
                fails.push(format!("L={l} i={}: {} vs {s}", k + 1, rep.counts[k]));
            }
            want += lf.powf(-2.0 - (k + 1) as f64 / 2.0) * s as f64;
        }
        if rep.b != want {
            fails.push(format!("L={l}: B {} vs {want}", rep.b));
        }
        if l <= 5 {
            let gm = GeometricQuery { mode: CoeffMode::Matrix, ..g.clone() };
            let rm = geometric_side(&split, &sets, &gm).expect("matrix mode");
            if rm.s != rep.s || rm.b != rep.b || rm.counts != rep.counts {
                fails.push(format!("L={l}: matrix mode at m=0 differs"));
            }
        }
        digest.push_str(&serde_json::to_string(&rep).expect("serializable"));
        digest.push('\n');
    }
    outcome(fails, "trivial mode matches 8 sigma sums at L=3,5,10; matrix mode at m=0 matches at L=3,5".into(), digest)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool").install(f)
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let criteria: Vec<Criterion> = vec![
        (1, "exponent reproduction", c1, Duration::from_secs(1)),
        (2, "profile polylines", c2, Duration::from_secs(1)),
        (3, "counting oracle equivalence", c3, Duration::from_secs(300)),
        (4, "constrained-count boundary identities", c4, Duration::from_secs(60)),
        (5, "lemma-ratio stability", c5, Duration::from_secs(600)),
        (6, "special functions", c6, Duration::from_secs(60)),
        (7, "reduction", c7, Duration::from_secs(60)),
        (8, "geometric-side cross-check", c8, Duration::from_secs(120)),
    ];
    let mut all_pass = true;
    let mut digests = Vec::new();
    for (id, name, f, budget) in &criteria {
        let start = Instant::now();
        let o = in_pool(8, f);
        let el = start.elapsed();
        let pass = o.pass && el <= *budget;
        all_pass &= pass;
        let verdict = if pass { "PASS" } else { "FAIL" };
        let time = if el <= *budget { format!("{:.2}s", el.as_secs_f64()) } else { format!("{:.2}s over budget {:?}", el.as_secs_f64(), budget) };
        println!("criterion {id} [{verdict}] {name} ({time}): {}", o.detail);
        if *id >= 3 {
            digests.push((*id, f, o.digest));
        }
    }
    let start = Instant::now();
    let mut diffs = Vec::new();
    for (id, f, d8) in &digests {
        let d1 = in_pool(1, f).digest;
        if d1 != *d8 {
            diffs.push(id.to_string());
        }
    }
    let pass = diffs.is_empty();
    all_pass &= pass;
    println!(
        "criterion 9 [{}] determinism at 1 and 8 threads ({:.2}s): {}",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64(),
        if pass { "criteria 3-8 byte-identical".to_string() } else { format!("differs for criteria {}", diffs.join(", ")) }
    );
    if !all_pass {
        std::process::exit(1);
    }
}
