//! Experiment configuration, the builtin corpus and the batch commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::amplifier::{
    balance_exponents, build_sets, profile_csv, geometric_side, hybrid_interpolate, optimize_profile, CoeffMode,
    GeometricQuery,
};
use crate::arith::{factorize, fmt_rat, parse_rat, rat, rat_int, rat_to_f64, Rat};
use crate::counting::{
    averaged_sum, count_within, rep_count, solution_stats, AvgMode, ConstrainedCountQuery,
    ConstraintMode, CountReport, SplitCounter, ValueHistogram, H1_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElement, FieldTag};
use crate::forms::{FormJson, QuadraticForm};
use crate::linalg::{mat_vec, FMat};
use crate::quaternion::{builtin_eichler_order, hurwitz, lipschitz, order_from_basis, OrderJson, Quat, QuaternionAlgebra, QuaternionOrder};
use crate::reduce::{eigen_range, reduce_form, subdeterminant_check};
use crate::special::{decay_scan, matrix_coeff, t_grid, DecayRow};

/// Flat `key=value` settings; later sources override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
            c.set(k.trim(), v.trim());
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    pub fn set(&mut self, k: &str, v: &str) {
        self.values.insert(k.to_string(), v.to_string());
    }

    pub fn merge(&mut self, other: &ExperimentConfig) {
        for (k, v) in &other.values {
            self.set(k, v);
        }
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.values.get(k).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, k: &str, default: T) -> Result<T> {
        match self.get(k) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad value for {k}: {v}"))),
        }
    }

    pub fn rat(&self, k: &str, default: Rat) -> Result<Rat> {
        self.get(k).map_or(Ok(default), parse_rat)
    }

    pub fn u64(&self, k: &str, default: u64) -> Result<u64> {
        self.parsed(k, default)
    }

    pub fn f64(&self, k: &str, default: f64) -> Result<f64> {
        self.parsed(k, default)
    }

    pub fn flag(&self, k: &str) -> Result<bool> {
        self.parsed(k, false)
    }

    /// Comma separated list.
    pub fn list<T: std::str::FromStr>(&self, k: &str) -> Result<Option<Vec<T>>> {
        self.get(k)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Parse(format!("bad entry in {k}: {x}"))))
                    .collect()
            })
            .transpose()
    }

    pub fn threads(&self) -> Result<usize> {
        Ok(self.u64("threads", 0)? as usize)
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64("seed", 0)
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }
}

/// One builtin experiment input.
#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub field: &'static str,
    pub kind: &'static str,
    pub summary: &'static str,
}

pub fn corpus() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry { name: "lipschitz", field: "Q", kind: "order", summary: "Lipschitz order, sum of four squares" },
        CorpusEntry { name: "hurwitz", field: "Q", kind: "order", summary: "Hurwitz order, maximal at 2" },
        CorpusEntry { name: "eichler-2-3", field: "Q", kind: "order", summary: "Eichler order of level 3 ramified at 2" },
        CorpusEntry { name: "lipschitz-qsqrt2", field: "Qsqrt2", kind: "order", summary: "Z[sqrt2]<1, i, j, ij>" },
        CorpusEntry { name: "three-squares", field: "Q", kind: "form", summary: "x^2 + y^2 + z^2" },
        CorpusEntry { name: "skewed-lipschitz", field: "Q", kind: "form", summary: "sum of four squares in a skew basis" },
        CorpusEntry { name: "unit-skewed-qsqrt2", field: "Qsqrt2", kind: "form", summary: "diag(eps^2, eps^-2, 1, 1)" },
    ]
}

/// A loaded corpus entry or file.
#[derive(Clone, Debug)]
pub struct Source {
    pub name: String,
    pub field: Field,
    pub form: QuadraticForm,
    pub order: Option<QuaternionOrder>,
}

impl Source {
    /// The form in the shape `y0^2 + Q~`.
    pub fn split_form(&self) -> Result<QuadraticForm> {
        match &self.order {
            Some(o) => Ok(o.split()?.quaternary),
            None if self.form.is_split() => Ok(self.form.clone()),
            None => Err(Error::NotSplit),
        }
    }

    /// The ternary form of trace-zero elements, or the form itself if ternary.
    pub fn ternary_form(&self) -> Option<QuadraticForm> {
        if self.form.rank() == 3 {
            return Some(self.form.clone());
        }
        self.split_form().ok()?.split_ternary().ok()
    }

    /// Rational primes below the discriminant.
    pub fn exclusions(&self) -> Vec<u64> {
        let n = match &self.order {
            Some(o) => o.disc_star_norm,
            None => self.form.level_norm(),
        };
        factorize(n).into_iter().map(|(p, _)| p).collect()
    }
}

fn order_source(name: &str, field: Field, o: QuaternionOrder) -> Source {
    Source { name: name.into(), field, form: o.norm_form.clone(), order: Some(o) }
}

fn form_source(name: &str, field: Field, form: QuadraticForm) -> Source {
    Source { name: name.into(), field, form, order: None }
}

fn int_matrix(rows: &[[i64; 4]]) -> FMat {
    rows.iter().map(|r| r.iter().map(|&x| FieldElement::int(crate::field::Ring::RATIONAL, x)).collect()).collect()
}

pub fn load_builtin(name: &str) -> Result<Source> {
    let q = Field::rational;
    match name {
        "lipschitz" => Ok(order_source(name, q(), lipschitz())),
        "hurwitz" => Ok(order_source(name, q(), hurwitz())),
        "eichler-2-3" => Ok(order_source(name, q(), builtin_eichler_order(2, 3)?)),
        "lipschitz-qsqrt2" => {
            let f = Field::new(FieldTag::Sqrt2)?;
            let alg = QuaternionAlgebra::hamilton(f.ring());
            let o = order_from_basis(&alg, (0..4).map(|k| Quat::basis(f.ring(), k)).collect())?;
            Ok(order_source(name, f, o))
        }
        "three-squares" => {
            Ok(form_source(name, q(), QuadraticForm::from_i64(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]])?))
        }
        "skewed-lipschitz" => {
            let u = int_matrix(&[[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [0, 0, 0, 1]]);
            Ok(form_source(name, q(), lipschitz().norm_form.transform(&u)?))
        }
        "unit-skewed-qsqrt2" => {
            let f = Field::new(FieldTag::Sqrt2)?;
            let e2 = f.elt(3, 2);
            let two = f.int(2);
            let z = f.int(0);
            let g = vec![
                vec![&two * &e2, z.clone(), z.clone(), z.clone()],
                vec![z.clone(), &two * &e2.inv().expect("unit"), z.clone(), z.clone()],
                vec![z.clone(), z.clone(), two.clone(), z.clone()],
                vec![z.clone(), z.clone(), z, two],
            ];
            Ok(form_source(name, f.clone(), QuadraticForm::new(f.ring(), g)?))
        }
        _ => Err(Error::Parse(format!("unknown builtin {name}"))),
    }
}

/// Reads `builtin=NAME`, `form=PATH` or `order=PATH`.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Source> {
    let read = |p: &str| std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{p}: {e}")));
    if let Some(b) = cfg.get("builtin") {
        return load_builtin(b);
    }
    if let Some(p) = cfg.get("form") {
        let j: FormJson = serde_json::from_str(&read(p)?).map_err(|e| Error::Parse(e.to_string()))?;
        let (f, q) = j.load()?;
        return Ok(form_source(p, f, q));
    }
    if let Some(p) = cfg.get("order") {
        let j: OrderJson = serde_json::from_str(&read(p)?).map_err(|e| Error::Parse(e.to_string()))?;
        let (f, o) = j.load()?;
        return Ok(order_source(p, f, o));
    }
    Err(Error::Parse("one of builtin, form or order is required".into()))
}

/// Unit vector `e1 / Q~(e1)^{1/2}` at every embedding.
pub fn default_directions(split: &QuadraticForm) -> Result<Vec<[f64; 3]>> {
    let t = split.split_ternary()?;
    Ok((0..t.ring().degree())
        .map(|s| {
            let g = t.embedded_gram(s);
            [1.0 / (g[0][0] / 2.0).sqrt(), 0.0, 0.0]
        })
        .collect())
}

fn parse_element(field: &Field, s: &str) -> Result<FieldElement> {
    let parts: Vec<String> = s.split(',').map(|x| x.trim().to_string()).collect();
    field.parse_element(&parts)
}

/// Sorted median.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LemmaRow {
    pub family: String,
    pub source: String,
    pub query: String,
    pub count: u64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FamilySummary {
    pub family: String,
    pub rows: usize,
    pub max: f64,
    /// Median over the rows with a nonzero count.
    pub median: f64,
    pub guard: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LemmaScan {
    pub rows: Vec<LemmaRow>,
    pub skipped: Vec<String>,
    pub summaries: Vec<FamilySummary>,
}

/// Ranges of one lemma scan.
#[derive(Clone, Debug)]
pub struct LemmaScanConfig {
    /// Largest `N(l)` over `Q` for the representation numbers.
    pub max_norm: u64,
    /// Largest `N(l)` over quadratic fields.
    pub max_norm_quadratic: u64,
    /// Largest `N(l)` for the unsplit norm forms of orders.
    pub full_form_max: u64,
    pub eta: Vec<f64>,
}

impl LemmaScanConfig {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<LemmaScanConfig> {
        Ok(LemmaScanConfig {
            max_norm: cfg.u64("max_norm", 10_000)?,
            max_norm_quadratic: cfg.u64("max_norm_quadratic", 400)?,
            full_form_max: cfg.u64("full_form_max", 300)?,
            eta: cfg.list("eta")?.unwrap_or_else(|| vec![1.0 / 16.0, 0.25, 1.0]),
        })
    }
}

/// `l` values for the constrained counts: all small norms and a geometric ladder.
fn constrained_sample(all: &[FieldElement], max_norm: u64) -> Vec<FieldElement> {
    let ladder: Vec<u64> = (0..=32).map(|k| (10f64.powf(k as f64 / 8.0)).round() as u64).collect();
    let mut out = Vec::new();
    for x in all {
        let n = rat_to_f64(&x.norm()) as u64;
        if n <= 30 || (ladder.contains(&n) && n <= max_norm) {
            out.push(x.clone());
        }
    }
    out
}

/// Ratios count/bound for the representation, averaged and constrained counting lemmas
/// over `sources`. The guard requires every ratio to stay within ten times the family
/// median.
pub fn lemma_scan(sources: &[Source], cfg: &LemmaScanConfig) -> Result<LemmaScan> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for src in sources {
        let f = &src.field;
        let d = f.degree();
        let nmax = if d == 1 { cfg.max_norm } else { cfg.max_norm_quadratic };
        let ells = f.cone_integers(nmax);
        let limit = (0..d).map(|s| ells.iter().map(|x| x.embed(s)).fold(0.0, f64::max)).collect::<Vec<_>>();
        let push = |rows: &mut Vec<LemmaRow>, fam: &str, q: String, count: u64, bound: f64| {
            rows.push(LemmaRow { family: fam.into(), source: src.name.clone(), query: q, count, bound, ratio: count as f64 / bound });
        };
        if let Some(t) = src.ternary_form() {
            let (h, _) = ValueHistogram::new(&t, &limit);
            for x in &ells {
                let c = h.get(x.to_oint().expect("integral"));
                push(&mut rows, "ternary", format!("l={x}"), c, rat_to_f64(&x.norm()).sqrt());
            }
        }
        let Ok(split) = src.split_form() else {
            continue;
        };
        let sc = SplitCounter::new(&split, &limit)?;
        for x in &ells {
            let c = sc.count(x.to_oint().expect("integral"))?;
            push(&mut rows, "quaternary", format!("split l={x}"), c, rat_to_f64(&x.norm()));
        }
        if src.order.is_some() {
            let fmax = if d == 1 { cfg.full_form_max } else { cfg.full_form_max.min(nmax) };
            for x in ells.iter().filter(|x| rat_to_f64(&x.norm()) <= fmax as f64) {
                let r = rep_count(&src.form, x);
                push(&mut rows, "quaternary", format!("full l={x}"), r.count, r.bound);
            }
        }
        let ys: Vec<AvgMode> = if d == 1 {
            let mut v: Vec<AvgMode> = [10, 30, 100, 300, 1000].iter().map(|&y| AvgMode::E3 { y: rat_int(y) }).collect();
            v.extend([(5, 5), (10, 5), (10, 10), (20, 10)].iter().map(|&(a, b)| AvgMode::E2 { y1: rat_int(a), y2: rat_int(b) }));
            v.extend([5, 10, 20, 40].iter().map(|&y| AvgMode::E1 { y: rat_int(y) }));
            v
        } else {
            let mut v: Vec<AvgMode> = [10, 30, 100].iter().map(|&y| AvgMode::E3 { y: rat_int(y) }).collect();
            v.extend([(5, 3), (10, 3)].iter().map(|&(a, b)| AvgMode::E2 { y1: rat_int(a), y2: rat_int(b) }));
            v.extend([5, 10].iter().map(|&y| AvgMode::E1 { y: rat_int(y) }));
            v
        };
        for m in &ys {
            match averaged_sum(f, &split, m, H1_THRESHOLD) {
                Ok(r) => push(&mut rows, &format!("averaged-{}", m.name()), r.query["range"].to_string(), r.count, r.bound),
                Err(Error::HOneWitness(w, t)) => {
                    skipped.push(format!("{} {}: h1 = {w} above {t}", src.name, m.name()));
                }
                Err(e) => return Err(e),
            }
        }
        let dirs = default_directions(&split)?;
        for x in constrained_sample(&ells, nmax) {
            let mut q = ConstrainedCountQuery {
                form: split.clone(),
                ell: x.clone(),
                directions: dirs.clone(),
                eta: vec![1.0; d],
                mode: ConstraintMode::NearTorus,
            };
            let (stats, _) = solution_stats(&q)?;
            for &e in &cfg.eta {
                q.eta = vec![e; d];
                let (b1, b2) = q.bounds();
                let ct = count_within(&stats, ConstraintMode::NearTorus, &q.eta);
                let ce = count_within(&stats, ConstraintMode::NearEquator, &q.eta);
                push(&mut rows, "constrained-torus", format!("l={x} eta={e}"), ct, b1);
                push(&mut rows, "constrained-equator", format!("l={x} eta={e}"), ce, b2);
            }
        }
    }
    let mut fams: Vec<String> = rows.iter().map(|r| r.family.clone()).collect();
    fams.dedup();
    fams.sort();
    fams.dedup();
    let summaries = fams
        .into_iter()
        .map(|fam| {
            let rs: Vec<&LemmaRow> = rows.iter().filter(|r| r.family == fam).collect();
            let max = rs.iter().map(|r| r.ratio).fold(0.0, f64::max);
            let pos: Vec<f64> = rs.iter().filter(|r| r.count > 0).map(|r| r.ratio).collect();
            let med = median(&pos);
            FamilySummary { family: fam, rows: rs.len(), max, median: med, guard: max <= 10.0 * med }
        })
        .collect();
    Ok(LemmaScan { rows, skipped, summaries })
}

/// Commands of the batch runner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Reduce,
    Count,
    LemmaCheck,
    DecayScan,
    Amplify,
    Exponents,
    Corpus,
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Command> {
        Ok(match s {
            "reduce" => Command::Reduce,
            "count" => Command::Count,
            "lemma-check" => Command::LemmaCheck,
            "decay-scan" => Command::DecayScan,
            "amplify" => Command::Amplify,
            "exponents" => Command::Exponents,
            "corpus" => Command::Corpus,
            _ => return Err(Error::Parse(format!("unknown command {s}"))),
        })
    }
}

/// What a command produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Output {
    pub stdout: String,
    /// `(file name, contents)` written under the output directory.
    pub files: Vec<(String, String)>,
    pub violations: Vec<String>,
}

impl Output {
    fn line(&mut self, s: impl AsRef<str>) {
        self.stdout.push_str(s.as_ref());
        self.stdout.push('\n');
    }
}

fn to_json<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("serializable")
}

fn strings(m: &FMat) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
}

fn run_reduce(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let src = load_source(cfg)?;
    let r = reduce_form(&src.field, &src.form)?;
    let sub = subdeterminant_check(&r)?;
    let ring = src.form.ring();
    let n = src.form.rank();
    let samples = cfg.u64("samples", 1000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
    let mut identity = true;
    for _ in 0..samples {
        let x: Vec<FieldElement> = (0..n)
            .map(|_| FieldElement::from_i64(ring, rng.gen_range(-50..=50), if ring.degree() == 1 { 0 } else { rng.gen_range(-50..=50) }))
            .collect();
        let ux = mat_vec(&r.u, &x);
        if src.form.value(&ux) != r.reduced.value(&x) || r.expansion(&x) != r.reduced.value(&x) {
            identity = false;
        }
    }
    let two_nd = rat_int(2).pow((n * ring.degree()) as i32);
    let dets = r.h.iter().fold(Rat::one(), |p, h| p * h.norm()) * &two_nd == src.form.det_norm();
    if !identity {
        out.violations.push("U^T A U identity failed".into());
    }
    if !dets {
        out.violations.push("product of N(h_j) differs from N(det)".into());
    }
    if !sub.holds {
        out.violations.push("sub-determinant inequality failed".into());
    }
    let rep = json!({
        "source": src.name,
        "field": src.field.tag().to_string(),
        "rank": n,
        "u": strings(&r.u),
        "h": r.h.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "c": strings(&r.c),
        "delta": r.delta.to_string(),
        "sizes": r.sizes,
        "eigen_range": eigen_range(&r),
        "subdet": sub,
        "identity_samples": samples,
        "identity": identity,
        "det_product": dets,
    });
    out.line(rep.to_string());
    Ok(())
}

fn run_count(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let src = load_source(cfg)?;
    let kind = cfg.get("kind").unwrap_or("rep");
    let form = if cfg.flag("split")? || kind == "constrained" || kind.starts_with('e') {
        src.split_form()?
    } else {
        src.form.clone()
    };
    let start = std::time::Instant::now();
    let mut rep: CountReport = match kind {
        "rep" => {
            let ell = parse_element(&src.field, cfg.get("ell").ok_or_else(|| Error::Parse("ell is required".into()))?)?;
            rep_count(&form, &ell)
        }
        "constrained" => {
            let ell = parse_element(&src.field, cfg.get("ell").ok_or_else(|| Error::Parse("ell is required".into()))?)?;
            let d = src.field.degree();
            let eta = cfg.f64("eta", 1.0)?;
            let mode: ConstraintMode = cfg.get("constraint").unwrap_or("near-torus").parse()?;
            let q = ConstrainedCountQuery { directions: default_directions(&form)?, form, ell, eta: vec![eta; d], mode };
            crate::counting::constrained_count(&q)?
        }
        "e3" => averaged_sum(&src.field, &form, &AvgMode::E3 { y: cfg.rat("y", rat_int(10))? }, cfg.f64("threshold", H1_THRESHOLD)?)?,
        "e1" => averaged_sum(&src.field, &form, &AvgMode::E1 { y: cfg.rat("y", rat_int(10))? }, cfg.f64("threshold", H1_THRESHOLD)?)?,
        "e2" => averaged_sum(
            &src.field,
            &form,
            &AvgMode::E2 { y1: cfg.rat("y1", rat_int(5))?, y2: cfg.rat("y2", rat_int(5))? },
            cfg.f64("threshold", H1_THRESHOLD)?,
        )?,
        _ => return Err(Error::Parse(format!("unknown count kind {kind}"))),
    };
    if cfg.flag("timing")? {
        rep.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    out.line(to_json(&rep));
    Ok(())
}

fn run_lemma_check(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let names: Vec<String> = cfg
        .list("sources")?
        .unwrap_or_else(|| corpus().iter().map(|c| c.name.to_string()).collect());
    let sources = names.iter().map(|n| load_builtin(n)).collect::<Result<Vec<_>>>()?;
    let scan = lemma_scan(&sources, &LemmaScanConfig::from_config(cfg)?)?;
    let mut rows = String::new();
    for r in &scan.rows {
        rows.push_str(&to_json(r));
        rows.push('\n');
    }
    out.files.push(("lemma_rows.jsonl".into(), rows));
    for s in &scan.skipped {
        out.line(json!({ "skipped": s }).to_string());
    }
    for s in &scan.summaries {
        out.line(to_json(s));
        if !s.guard {
            out.violations.push(format!("{}: max ratio {} above ten times the median {}", s.family, s.max, s.median));
        }
    }
    Ok(())
}

/// Grid maximum of the decay margins and the per-block maxima in `m`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DecaySummary {
    pub rows: usize,
    pub max: f64,
    pub argmax: (u32, i32, f64),
    pub block_max: Vec<f64>,
    pub stable: bool,
    pub identity_at_one: bool,
}

pub fn decay_summary(rows: &[DecayRow], m_max: u32, blocks: usize) -> DecaySummary {
    let mut best = (f64::MIN, (0, 0, 0.0));
    let mut block_max = vec![0.0f64; blocks];
    for r in rows {
        if r.ratio > best.0 {
            best = (r.ratio, (r.m, r.l, r.t));
        }
        let b = (r.m as usize * blocks / (m_max as usize + 1)).min(blocks - 1);
        block_max[b] = block_max[b].max(r.ratio);
    }
    let stable = best.0.is_finite() && block_max[1..].windows(2).all(|w| w[1] <= w[0]) && block_max[1..].iter().all(|&b| b <= block_max[0]);
    let identity_at_one = (0..=m_max).all(|m| (-(m as i32)..=m as i32).all(|l| matrix_coeff(m, l, 1.0) == Ok(1.0)));
    DecaySummary { rows: rows.len(), max: best.0, argmax: best.1, block_max, stable, identity_at_one }
}

fn run_decay_scan(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let m_max = cfg.u64("m_max", 200)? as u32;
    let l_exp = cfg.f64("l_exp", 0.9)?;
    let ts = t_grid(cfg.u64("t_points", 199)? as usize, cfg.f64("t_max", 0.99)?);
    let rows = decay_scan(m_max, l_exp, &ts)?;
    let s = decay_summary(&rows, m_max, cfg.u64("blocks", 5)? as usize);
    if !s.stable {
        out.violations.push("decay margin grid maximum grows with m".into());
    }
    if !s.identity_at_one {
        out.violations.push("p_{m,l}(1) differs from 1".into());
    }
    let mut csv = String::from("m,l,t,coeff,bound,ratio\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.m, r.l, r.t, r.coeff, r.bound, r.ratio);
    }
    if cfg.out_dir().is_some() {
        out.files.push(("decay_scan.csv".into(), csv));
    } else {
        out.stdout.push_str(&csv);
    }
    out.files.push(("decay_summary.json".into(), to_json(&s)));
    out.line(to_json(&s));
    Ok(())
}

fn run_amplify(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let src = load_source(cfg)?;
    let split = src.split_form()?;
    let d = src.field.degree();
    let l = cfg.rat("length", rat_int(3))?;
    let mode: CoeffMode = cfg.get("mode").unwrap_or("trivial").parse()?;
    let m: Vec<u32> = cfg.list("m")?.unwrap_or_else(|| vec![0; d]);
    let li: Vec<i32> = cfg.list("l")?.unwrap_or_else(|| vec![0; d]);
    let excl: Vec<u64> = cfg.list("exclude")?.unwrap_or_else(|| src.exclusions());
    let sets = build_sets(&src.field, &l, &excl)?;
    let g = GeometricQuery { directions: default_directions(&split)?, m, l: li, mode };
    let rep = geometric_side(&split, &sets, &g)?;
    let sets_json: Vec<Vec<Vec<String>>> = sets.sets.iter().map(|v| v.iter().map(|x| x.to_strings()).collect()).collect();
    let j = json!({ "source": src.name, "exclusions": excl, "sets": sets_json, "report": rep });
    out.line(j.to_string());
    Ok(())
}

/// `1/L + L^{1/2} V^{-1/2} + L^2 V^{-1}` as `(L, V)` exponents.
pub fn volume_terms() -> Vec<(Rat, Rat)> {
    vec![(rat(-1, 1), Rat::zero()), (rat(1, 2), rat(-1, 2)), (rat(2, 1), rat(-1, 1))]
}

fn run_exponents(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let kappa = cfg.rat("kappa", rat(3, 20))?;
    let opt = optimize_profile(&kappa)?;
    let (t, v) = balance_exponents(&volume_terms())?;
    let s_v = -&v / rat_int(2);
    let s_l = (Rat::one() - &opt.max) / rat_int(4);
    out.line(format!("kappa {}", fmt_rat(&kappa)));
    out.line(format!("max {}", fmt_rat(&opt.max)));
    let am: Vec<String> = opt
        .argmax
        .iter()
        .map(|a| match &a.lo {
            None => format!("i={} beta<={}", a.i, fmt_rat(&a.hi)),
            Some(lo) if *lo == a.hi => format!("i={} beta={}", a.i, fmt_rat(lo)),
            Some(lo) => format!("i={} {}<=beta<={}", a.i, fmt_rat(lo), fmt_rat(&a.hi)),
        })
        .collect();
    out.line(format!("argmax {}", am.join("; ")));
    out.line(format!("per_i {}", opt.per_i.iter().map(fmt_rat).collect::<Vec<_>>().join(",")));
    out.line(format!("volume t={} value={} saving={}", fmt_rat(&t), fmt_rat(&v), fmt_rat(&s_v)));
    out.line(format!("eigenvalue saving={}", fmt_rat(&s_l)));
    let mut hybrid = serde_json::Value::Null;
    match hybrid_interpolate(&s_v, &s_l) {
        Ok((theta, c)) => {
            let ok = c >= rat(1, 20);
            out.line(format!("hybrid theta={} c={} at_least_1/20={ok}", fmt_rat(&theta), fmt_rat(&c)));
            hybrid = json!({ "theta": fmt_rat(&theta), "c": fmt_rat(&c), "at_least_1/20": ok });
        }
        Err(Error::NonPositiveSaving) => out.line("hybrid none (no eigenvalue saving)"),
        Err(e) => return Err(e),
    }
    let csv = profile_csv(&opt, &cfg.rat("beta_min", rat_int(-3))?);
    out.stdout.push_str(&csv);
    if opt.profiles.iter().any(|p| !p.is_continuous()) {
        out.violations.push("profile is discontinuous".into());
    }
    let j = json!({
        "kappa": fmt_rat(&kappa),
        "max": fmt_rat(&opt.max),
        "argmax": am,
        "per_i": opt.per_i.iter().map(fmt_rat).collect::<Vec<_>>(),
        "volume": { "t": fmt_rat(&t), "value": fmt_rat(&v), "saving": fmt_rat(&s_v) },
        "eigenvalue_saving": fmt_rat(&s_l),
        "hybrid": hybrid,
    });
    out.files.push(("exponents.json".into(), j.to_string()));
    out.files.push(("profiles.csv".into(), csv));
    Ok(())
}

/// Runs one command on the current thread pool.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Output> {
    let mut out = Output::default();
    match cmd {
        Command::Reduce => run_reduce(cfg, &mut out)?,
        Command::Count => run_count(cfg, &mut out)?,
        Command::LemmaCheck => run_lemma_check(cfg, &mut out)?,
        Command::DecayScan => run_decay_scan(cfg, &mut out)?,
        Command::Amplify => run_amplify(cfg, &mut out)?,
        Command::Exponents => run_exponents(cfg, &mut out)?,
        Command::Corpus => {
            for c in corpus() {
                out.line(to_json(&c));
            }
        }
    }
    Ok(out)
}

/// `0` on success, `1` on an invariant violation, `2` on bad input.
pub fn exit_code(r: &Result<Output>) -> i32 {
    match r {
        Ok(o) if o.violations.is_empty() => 0,
        Ok(_) | Err(Error::Invariant(_)) => 1,
        Err(_) => 2,
    }
}

/// Runs `cmd` on a pool of `threads` threads (`0` for the default) and writes the
/// produced files.
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<Output> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads()?)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let out = pool.install(|| run(cmd, cfg))?;
    if let Some(dir) = cfg.out_dir() {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        for (name, body) in &out.files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::parse("# c\nkappa = 3/20\n\nm=1,2 # two\n").unwrap();
        assert_eq!(c.rat("kappa", Rat::zero()).unwrap(), rat(3, 20));
        assert_eq!(c.list::<u32>("m").unwrap(), Some(vec![1, 2]));
        assert!(ExperimentConfig::parse("novalue").is_err());
        assert!(c.u64("kappa", 0).is_err());
    }

    #[test]
    fn corpus_loads() {
        let names: Vec<&str> = corpus().iter().map(|c| c.name).collect();
        for n in ["lipschitz", "hurwitz", "eichler-2-3"] {
            assert!(names.contains(&n));
        }
        for c in corpus() {
            let s = load_builtin(c.name).unwrap();
            assert_eq!(s.field.tag().to_string(), c.field);
        }
        assert_eq!(load_builtin("eichler-2-3").unwrap().exclusions(), vec![2, 3]);
    }

    #[test]
    fn exponents_command() {
        let mut c = ExperimentConfig::default();
        c.set("kappa", "3/20");
        let o = run(Command::Exponents, &c).unwrap();
        assert!(o.stdout.contains("max 17/20"));
        assert!(o.stdout.contains("theta=20/29 c=3/58"));
        assert_eq!(exit_code(&Ok(o)), 0);
        c.set("kappa", "0");
        let o = run(Command::Exponents, &c).unwrap();
        assert!(o.stdout.contains("max 1\n"));
    }

    #[test]
    fn count_command() {
        let mut c = ExperimentConfig::default();
        c.set("builtin", "lipschitz");
        c.set("ell", "3");
        let o = run(Command::Count, &c).unwrap();
        let j: serde_json::Value = serde_json::from_str(o.stdout.trim()).unwrap();
        assert_eq!(j["count"], 32);
        c.set("builtin", "nope");
        assert_eq!(exit_code(&run(Command::Count, &c)), 2);
    }
}
