//! `cent`: batch front-end for compound-entropy.
//!
//! Every subcommand writes a machine-readable result (JSON, or CSV for
//! paths) to standard output or `--output`. Exit status is 0 when every
//! non-vacuous check passes, 1 when a conclusion fails, and 2 on usage or
//! input errors.

mod parse;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use compound_entropy::combinatorics::{
    enumerate_independent_sets, graph_entropy_bound, matroid_sequence, GraphicMatroid, IndependenceOracle, SetSystem,
    SimpleGraph, UniformMatroid,
};
use compound_entropy::compound::{self, compound, compound_binomial, CompoundingDist};
use compound_entropy::info::{entropy, relative_entropy};
use compound_entropy::semigroup::{energy_binomial_path, energy_poisson_path, linspace};
use compound_entropy::verify::{self, cpo_for_scan, VerificationReport};
use compound_entropy::{Base, ParamVector, Pmf, Settings};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "cent", version, about = "Compound distributions, entropy and log-concavity checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Tolerance for shape tests and inequality checks.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = compound_entropy::DEFAULT_TOL, value_parser = positive)]
    tol: f64,
    /// Mass allowed to be discarded when truncating infinite supports.
    #[arg(long, global = true, allow_negative_numbers = true, default_value_t = compound_entropy::DEFAULT_TAIL_EPS, value_parser = positive)]
    tail_eps: f64,
    /// Logarithm base for reported entropies.
    #[arg(long, global = true, value_enum, default_value_t = BaseArg::Nat)]
    base: BaseArg,
    /// Seed for random sweeps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of grid points (or sampled parameter vectors).
    #[arg(long, global = true, default_value_t = 21)]
    grid: usize,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum BaseArg {
    Nat,
    Bit,
}

impl From<BaseArg> for Base {
    fn from(b: BaseArg) -> Base {
        match b {
            BaseArg::Nat => Base::Nat,
            BaseArg::Bit => Base::Bit,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Panjer,
    Mixture,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Condition {
    /// Compound Bernoulli sum threshold (needs --params and --q).
    BernoulliSum,
    /// Critical rate for compound Poisson (needs --lambda and --q).
    Necessary,
    /// Hansen's condition (needs --lambda and --q).
    Hansen,
    /// Q on {1, 2} (needs --p and --q).
    TwoPoint,
    /// Geometric Q (needs --p and --a).
    Geometric,
    /// Monotone log-ratio condition (needs --p and --q).
    Weak,
}

/// A distribution described on the command line.
#[derive(Args, Debug, Clone)]
struct Dist {
    /// Base pmf: point:k, uniform:a,b, bernoulli:p, binomial:n,p,
    /// poisson:lambda, geometric:a, ulc:max,lambda, weights:..., file:path.
    #[arg(long)]
    p: Option<String>,
    /// Compounding distribution: uniform:a,b, geometric:p, point:k,
    /// weights:..., file:path.
    #[arg(long)]
    q: Option<String>,
    /// Compound Poisson rate; uses --q.
    #[arg(long, conflicts_with_all = ["p", "cbin", "params"])]
    cpo: Option<f64>,
    /// Compound binomial `n,p`; uses --q (default point:1).
    #[arg(long, conflicts_with_all = ["p", "params"])]
    cbin: Option<String>,
    /// Bernoulli parameters of a (compound) Bernoulli sum.
    #[arg(long, conflicts_with = "p")]
    params: Option<String>,
    /// Construction used for --cpo.
    #[arg(long, value_enum, default_value_t = Method::Panjer)]
    method: Method,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a pmf as JSON.
    Pmf(Dist),
    /// Entropy of a pmf, optionally with the relative entropy to a reference.
    Entropy {
        #[command(flatten)]
        dist: Dist,
        /// Reference distribution for the relative entropy, written like --p.
        #[arg(long)]
        reference: Option<String>,
    },
    /// Shape verdicts of a pmf, or one of the sufficient/necessary
    /// log-concavity conditions.
    Logconcave {
        #[command(flatten)]
        dist: Dist,
        #[arg(long, value_enum)]
        condition: Option<Condition>,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// Geometric parameter for --condition geometric.
        #[arg(long)]
        a: Option<f64>,
    },
    /// Compound Poisson maximum-entropy sweep over random ultra-log-concave P.
    MaxentPoisson {
        #[arg(long)]
        q: String,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Compound binomial maximum-entropy sweep over `--grid` random parameter
    /// vectors.
    MaxentBinomial {
        #[arg(long)]
        q: String,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// The compound binomial counterexample entropies.
    Chi,
    /// Hansen's sufficient condition and identity for compound Poisson.
    Hansen {
        #[arg(long)]
        q: String,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Last index of the Panjer pmf that is checked.
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// E(alpha) along the thinning semigroup towards compound Poisson.
    SemigroupPath {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// E(t) along the Bernoulli-parameter path towards compound binomial.
    BinomialPath {
        #[arg(long)]
        params: String,
        #[arg(long)]
        q: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Independent-set counts and entropy bound for a graph.
    Graph {
        /// Edge-list file: vertex count, then one `u v` pair per line.
        #[arg(long, conflicts_with = "family")]
        file: Option<PathBuf>,
        /// path:n, cycle:n, complete:n, star:k or empty:n.
        #[arg(long)]
        family: Option<String>,
        /// Use the line graph.
        #[arg(long)]
        line: bool,
        #[arg(long, default_value = "point:1")]
        q: String,
    },
    /// Independent-set counts, axioms and entropy bound for a matroid.
    Matroid {
        /// JSON list of independent sets, or {"ground_size", "independent"}.
        #[arg(long, conflicts_with_all = ["uniform", "graphic"])]
        file: Option<PathBuf>,
        /// Uniform matroid `r,n`.
        #[arg(long, conflicts_with = "graphic")]
        uniform: Option<String>,
        /// Cycle matroid of an edge-list graph file.
        #[arg(long)]
        graphic: Option<PathBuf>,
        #[arg(long, default_value = "point:1")]
        q: String,
    },
}

/// What a command produced, and whether its checks passed.
struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn json(value: &Value, ok: bool) -> Self {
        Outcome { text: serde_json::to_string_pretty(value).expect("json") + "\n", ok }
    }

    fn report(r: &VerificationReport) -> Self {
        Outcome { text: r.to_json() + "\n", ok: r.ok() }
    }
}

fn settings(c: &Common) -> Settings {
    Settings { tol: c.tol, tail_eps: c.tail_eps }
}

fn require_seed(c: &Common) -> Result<u64> {
    c.seed.context("--seed is required for this sweep")
}

fn q_or_delta(c: &Common, q: &Option<String>) -> Result<CompoundingDist> {
    parse::compounding(q.as_deref().unwrap_or("point:1"), c.tail_eps)
}

fn build(c: &Common, d: &Dist) -> Result<Pmf> {
    if let Some(lambda) = d.cpo {
        let q = parse::compounding(d.q.as_deref().context("--cpo needs --q")?, c.tail_eps)?;
        return Ok(match d.method {
            Method::Panjer => compound::compound_poisson(lambda, &q, c.tail_eps, 0)?,
            Method::Mixture => compound::compound_poisson_mixture(lambda, &q, c.tail_eps)?,
        });
    }
    if let Some(np) = &d.cbin {
        let v = parse::params(np)?;
        let [n, p] = v[..] else { bail!("--cbin expects n,p") };
        if n < 0.0 || n.fract() != 0.0 {
            bail!("--cbin: n must be a nonnegative integer");
        }
        return Ok(compound_binomial(n as usize, p, &q_or_delta(c, &d.q)?)?);
    }
    let base = match (&d.params, &d.p) {
        (Some(list), _) => compound::bernoulli_sum(&ParamVector::new(parse::params(list)?)?),
        (None, Some(spec)) => parse::pmf(spec, c.tail_eps, c.seed)?,
        (None, None) => bail!("give a distribution with --p, --params, --cpo or --cbin"),
    };
    match &d.q {
        Some(q) => Ok(compound(&parse::compounding(q, c.tail_eps)?, &base)),
        None => Ok(base),
    }
}

fn shape_json(p: &Pmf, tol: f64) -> Value {
    json!({
        "log_concave": p.is_log_concave(tol),
        "ultra_log_concave": p.is_ultra_log_concave(tol),
        "unimodal": p.is_unimodal(),
    })
}

fn graph_from(file: &Option<PathBuf>, family: &Option<String>) -> Result<SimpleGraph> {
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(SimpleGraph::parse(&text)?);
    }
    let spec = family.as_deref().context("give --file or --family")?;
    let (kind, n) = spec.split_once(':').context("--family expects kind:n")?;
    let n: usize = n.trim().parse().with_context(|| format!("--family {spec:?}"))?;
    Ok(match kind {
        "path" => SimpleGraph::path(n)?,
        "cycle" => SimpleGraph::cycle(n)?,
        "complete" => SimpleGraph::complete(n)?,
        "star" => SimpleGraph::star(n)?,
        "empty" => SimpleGraph::empty(n)?,
        _ => bail!("unknown graph family {kind:?}"),
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    let s = settings(c);
    let base: Base = c.base.into();
    Ok(match &cli.command {
        Command::Pmf(d) => Outcome { text: build(c, d)?.to_json() + "\n", ok: true },
        Command::Entropy { dist, reference } => {
            let p = build(c, dist)?;
            let mut out = json!({ "base": base, "entropy": entropy(&p, base).value });
            if let Some(r) = reference {
                let r = parse::pmf(r, c.tail_eps, c.seed)?;
                out["relative_entropy"] = json!(relative_entropy(&p, &r, base)?.value);
            }
            Outcome::json(&out, true)
        }
        Command::Logconcave { dist, condition, lambda, a } => {
            let need_lambda = || lambda.context("this condition needs --lambda");
            let need_q = || parse::compounding(dist.q.as_deref().context("this condition needs --q")?, c.tail_eps);
            let need_p = || parse::pmf(dist.p.as_deref().context("this condition needs --p")?, c.tail_eps, c.seed);
            match condition {
                None => Outcome::json(&shape_json(&build(c, dist)?, c.tol), true),
                Some(Condition::BernoulliSum) => {
                    let params = ParamVector::new(parse::params(dist.params.as_deref().context("needs --params")?)?)?;
                    Outcome::report(&verify::check_bernoulli_sum_lc(&params, &need_q()?, &s))
                }
                Some(Condition::Necessary) => {
                    Outcome::report(&verify::check_necessary_condition(need_lambda()?, &need_q()?, &s)?)
                }
                Some(Condition::Hansen) => Outcome::report(&verify::check_hansen(need_lambda()?, &need_q()?, 200, &s)?),
                Some(Condition::TwoPoint) => Outcome::report(&verify::check_q2pt(&need_p()?, &need_q()?, &s)?),
                Some(Condition::Geometric) => {
                    let a = a.context("this condition needs --a")?;
                    Outcome::report(&verify::check_geometric_compound(&need_p()?, a, &s)?)
                }
                Some(Condition::Weak) => {
                    let w = verify::check_weak_condition(&need_p()?, &need_q()?, &s);
                    Outcome::json(&serde_json::to_value(&w)?, w.verdict.holds)
                }
            }
        }
        Command::MaxentPoisson { q, lambda, trials } => {
            let q = parse::compounding(q, c.tail_eps)?;
            Outcome::report(&verify::verify_maxent_poisson(&q, *lambda, *trials, require_seed(c)?, &s)?)
        }
        Command::MaxentBinomial { q, n, lambda } => {
            let q = parse::compounding(q, c.tail_eps)?;
            Outcome::report(&verify::verify_maxent_binomial(&q, *n, *lambda, c.grid, require_seed(c)?, &s)?)
        }
        Command::Chi => {
            let report = verify::chi_counterexample(&s)?;
            let (cbin, cbp, cpo) = verify::chi_entropies(base, &s)?;
            let out = json!({
                "base": base,
                "entropies": { "compound_binomial": cbin, "compound_bernoulli_sum": cbp, "compound_poisson": cpo },
                "report": serde_json::to_value(&report)?,
            });
            Outcome::json(&out, report.ok())
        }
        Command::Hansen { q, lambda, n } => {
            Outcome::report(&verify::check_hansen(*lambda, &parse::compounding(q, c.tail_eps)?, *n, &s)?)
        }
        Command::SemigroupPath { p, q, format } => {
            let p = parse::pmf(p, c.tail_eps, c.seed)?;
            let q = parse::compounding(q, c.tail_eps)?;
            let path = energy_poisson_path(&p, &q, &linspace(0.0, 1.0, c.grid), c.tail_eps)?;
            let hypotheses = p.is_ultra_log_concave(c.tol).holds
                && q.is_log_concave(c.tol).holds
                && cpo_for_scan(p.mean(), &q, &s)?.is_log_concave(c.tol).holds;
            let ok = path.monotone_ok || !hypotheses;
            match format {
                Format::Csv => Outcome { text: path.to_csv(), ok },
                Format::Json => Outcome::json(
                    &json!({
                        "alphas": path.alphas,
                        "energies": path.energies,
                        "monotone_ok": path.monotone_ok,
                        "hypotheses_hold": hypotheses,
                        "discarded_mass": path.discarded_mass,
                    }),
                    ok,
                ),
            }
        }
        Command::BinomialPath { params, q, format } => {
            let p = ParamVector::new(parse::params(params)?)?.sorted_desc();
            let q = parse::compounding(q, c.tail_eps)?;
            let v = p.as_slice();
            if v.len() < 2 {
                bail!("--params needs at least two entries");
            }
            let grid = if v[0] == v[1] { 1 } else { c.grid };
            let path = energy_binomial_path(&p, &q, &linspace(0.0, (v[0] - v[1]) / 2.0, grid))?;
            let hypotheses = q.is_log_concave(c.tol).holds && path.reference.is_log_concave(c.tol).holds;
            let ok = path.monotone_ok || !hypotheses;
            match format {
                Format::Csv => Outcome { text: path.to_csv(), ok },
                Format::Json => Outcome::json(
                    &json!({
                        "ts": path.ts,
                        "energies": path.energies,
                        "monotone_ok": path.monotone_ok,
                        "hypotheses_hold": hypotheses,
                        "discarded_mass": path.discarded_mass,
                    }),
                    ok,
                ),
            }
        }
        Command::Graph { file, family, line, q } => {
            let mut g = graph_from(file, family)?;
            if *line {
                g = g.line_graph()?;
            }
            let q = parse::compounding(q, c.tail_eps)?;
            let report = graph_entropy_bound(&g, &q, &s)?;
            let out = json!({
                "counts": enumerate_independent_sets(&g),
                "claw_free": g.is_claw_free(),
                "report": serde_json::to_value(&report)?,
            });
            Outcome::json(&out, report.ok())
        }
        Command::Matroid { file, uniform, graphic, q } => {
            let m: Box<dyn IndependenceOracle> = if let Some(path) = file {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Box::new(SetSystem::from_json(&text)?)
            } else if let Some(rn) = uniform {
                let v = parse::params(rn)?;
                let [r, n] = v[..] else { bail!("--uniform expects r,n") };
                Box::new(UniformMatroid { rank: r as usize, n: n as usize })
            } else if let Some(path) = graphic {
                Box::new(GraphicMatroid::new(&graph_from(&Some(path.clone()), &None)?)?)
            } else {
                bail!("give --file, --uniform or --graphic");
            };
            let q = parse::compounding(q, c.tail_eps)?;
            let (counts, report) = matroid_sequence(m.as_ref(), &q, &s)?;
            Outcome::json(&json!({ "counts": counts, "report": serde_json::to_value(&report)? }), report.ok())
        }
    })
}

fn emit(c: &Common, text: &str) -> Result<()> {
    match &c.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit(&cli.common, &outcome.text) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
