use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use supnorm::reports::{execute, exit_code, Command, ExperimentConfig};

/// Batch runner for reduction, counting, special-function and amplifier experiments.
#[derive(Parser)]
#[command(name = "supnorm", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// key=value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 for one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for JSON and CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Attach wall-clock times to count reports.
    #[arg(long, global = true)]
    timing: bool,
    /// Extra settings.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Default)]
struct SourceArgs {
    /// Builtin corpus entry.
    #[arg(long)]
    builtin: Option<String>,
    /// Quadratic form JSON file.
    #[arg(long)]
    form: Option<String>,
    /// Quaternion order JSON file.
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Target, as comma separated coordinates in the basis 1, w.
    #[arg(long, allow_hyphen_values = true)]
    ell: Option<String>,
    /// rep, constrained, e3, e2 or e1.
    #[arg(long)]
    kind: Option<String>,
    /// Count on the split form of an order.
    #[arg(long)]
    split: bool,
    #[arg(long)]
    eta: Option<String>,
    /// near-torus, near-equator or unconstrained.
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long)]
    y1: Option<String>,
    #[arg(long)]
    y2: Option<String>,
}

#[derive(Args)]
struct LemmaArgs {
    /// Comma separated corpus names.
    #[arg(long)]
    sources: Option<String>,
    #[arg(long)]
    max_norm: Option<String>,
    #[arg(long)]
    max_norm_quadratic: Option<String>,
}

#[derive(Args)]
struct DecayArgs {
    #[arg(long)]
    m_max: Option<String>,
    #[arg(long)]
    l_exp: Option<String>,
    #[arg(long)]
    t_points: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
}

#[derive(Args)]
struct AmplifyArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Amplifier length L.
    #[arg(long = "length", short = 'L')]
    length: Option<String>,
    /// matrix, character or trivial.
    #[arg(long)]
    mode: Option<String>,
    /// Weights m, one per embedding.
    #[arg(long)]
    m: Option<String>,
    /// Indices l, one per embedding.
    #[arg(long, allow_hyphen_values = true)]
    l: Option<String>,
    /// Rational primes to avoid; defaults to the discriminant support.
    #[arg(long)]
    exclude: Option<String>,
}

#[derive(Args)]
struct ExponentArgs {
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quasi-diagonal reduction and its invariants.
    Reduce(SourceArgs),
    /// Representation, averaged and constrained counts.
    Count(CountArgs),
    /// Count/bound ratios over the corpus.
    LemmaCheck(LemmaArgs),
    /// Decay margins of the matrix coefficients (CSV).
    DecayScan(DecayArgs),
    /// Geometric side of the amplified inequality.
    Amplify(AmplifyArgs),
    /// Exact exponent optimizations and the profile polylines.
    Exponents(ExponentArgs),
    /// List the builtin corpus.
    Corpus,
}

type Pairs = Vec<(&'static str, Option<String>)>;

fn source_pairs(s: SourceArgs) -> Pairs {
    vec![("builtin", s.builtin), ("form", s.form), ("order", s.order)]
}

fn bool_pair(k: &'static str, b: bool) -> (&'static str, Option<String>) {
    (k, b.then(|| "true".to_string()))
}

fn split(cmd: Cmd) -> (Command, Pairs) {
    match cmd {
        Cmd::Reduce(s) => (Command::Reduce, source_pairs(s)),
        Cmd::Count(a) => {
            let mut p = source_pairs(a.source);
            p.extend([
                ("ell", a.ell),
                ("kind", a.kind),
                bool_pair("split", a.split),
                ("eta", a.eta),
                ("constraint", a.constraint),
                ("y", a.y),
                ("y1", a.y1),
                ("y2", a.y2),
            ]);
            (Command::Count, p)
        }
        Cmd::LemmaCheck(a) => (
            Command::LemmaCheck,
            vec![("sources", a.sources), ("max_norm", a.max_norm), ("max_norm_quadratic", a.max_norm_quadratic)],
        ),
        Cmd::DecayScan(a) => (
            Command::DecayScan,
            vec![("m_max", a.m_max), ("l_exp", a.l_exp), ("t_points", a.t_points), ("t_max", a.t_max)],
        ),
        Cmd::Amplify(a) => {
            let mut p = source_pairs(a.source);
            p.extend([("length", a.length), ("mode", a.mode), ("m", a.m), ("l", a.l), ("exclude", a.exclude)]);
            (Command::Amplify, p)
        }
        Cmd::Exponents(a) => (Command::Exponents, vec![("kappa", a.kappa)]),
        Cmd::Corpus => (Command::Corpus, Vec::new()),
    }
}

fn config(cli: &Cli, pairs: Pairs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    let globals = [
        ("threads", cli.threads.map(|t| t.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("seed", cli.seed.map(|s| s.to_string())),
        bool_pair("timing", cli.timing),
    ];
    for (k, v) in pairs.into_iter().chain(globals) {
        if let Some(v) = v {
            cfg.set(k, &v);
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got {kv}"))?;
        cfg.set(k.trim(), v.trim());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let cmd = std::mem::replace(&mut cli.command, Cmd::Corpus);
    let (command, pairs) = split(cmd);
    let cfg = match config(&cli, pairs) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let res = execute(command, &cfg);
    match &res {
        Ok(out) => {
            print!("{}", out.stdout);
            for v in &out.violations {
                eprintln!("violation: {v}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&res) as u8)
}
