mod cache;
mod compute;
mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdp_core::analysis::{
    channel_capacity, posterior_uncertainty, prior_uncertainty, refines, type_capacity_closed_form, type_capacity_lp,
    CapacityMode, CapacityReport, Refinement,
};
use mdp_core::loss::LossFunction;
use mdp_core::mechanisms::{check_dx_private, uniform_prior, validate_prior, Channel, DpCheck};
use mdp_core::optimality::{check_universal_l_optimal, CheckMode, OptimalityVerdict, DEFAULT_STRATEGY_BUDGET};
use mdp_core::scalar::{format_decimal, format_rational, serde_rational};
use mdp_core::{Error, MetricSpace, MetricSpec, Rational};
use serde::de::DeserializeOwned;
use serde_json::json;

use cache::Cache;
use compute::{kernels_payload, vertices_payload, Ctx};
use reproduce::Table;

#[derive(Parser)]
#[command(
    name = "mdp",
    version,
    about = "Vertices, kernels, refinement, optimality, and capacities of metric privacy types"
)]
struct Cli {
    /// Output encoding; text by default (csv for `reproduce`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Bypass the enumeration cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Cache directory (default: $MDP_CACHE_DIR or ~/.cache/mdp-workbench).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// On a cache hit, recompute and fail unless the payloads are byte-identical.
    #[arg(long, global = true)]
    verify_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mult,
    Add,
}

impl From<ModeArg> for CapacityMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mult => CapacityMode::Multiplicative,
            ModeArg::Add => CapacityMode::Additive,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Exact,
    Sample,
}

#[derive(Subcommand)]
enum Command {
    /// Extreme points of the posterior polytope.
    Vertices {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Abort (exit 3) after this many search nodes.
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Kernel mechanisms of the type.
    Kernels {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Checks a channel against the type's privacy constraints.
    CheckDp {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        metric: PathBuf,
    },
    /// Posterior distributions and their weights.
    ToHyper {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Decides whether A is a post-processing of B.
    Refines {
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        a: PathBuf,
        /// Exit 1 when the refinement does not hold.
        #[arg(long = "assert")]
        assert_holds: bool,
    },
    /// Expected loss before and after observing the channel.
    Utility {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        loss: PathBuf,
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Largest capacity over all mechanisms of the type.
    Capacity {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Use the closed form (line and discrete only).
        #[arg(long)]
        closed_form: bool,
    },
    /// Capacity of a single channel.
    ChannelCapacity {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Universal optimality of a channel for a loss, against the type's kernels.
    Optimal {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        loss: PathBuf,
        #[arg(long)]
        metric: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: CheckArg,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Strategy evaluations allowed in exact mode.
        #[arg(long, default_value_t = DEFAULT_STRATEGY_BUDGET)]
        budget: u64,
    },
    /// Recomputes a reference table and flags each cell.
    Reproduce {
        #[arg(long, value_enum)]
        table: Table,
        #[arg(long)]
        max_n: Option<usize>,
    },
}

enum Failure {
    Property(String),
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceLimit { .. } | Error::IterationLimit(_) => Failure::Budget(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_metric(path: &Path) -> std::result::Result<MetricSpace, Failure> {
    let spec: MetricSpec = read_json(path)?;
    Ok(spec.build()?)
}

#[derive(serde::Deserialize)]
struct PriorJson(#[serde(with = "serde_rational::vec")] Vec<Rational>);

fn read_prior(path: Option<&Path>, n: usize) -> std::result::Result<Vec<Rational>, Failure> {
    match path {
        None => Ok(uniform_prior(n)),
        Some(p) => {
            let prior: PriorJson = read_json(p)?;
            validate_prior(&prior.0, n)?;
            Ok(prior.0)
        }
    }
}

fn fmt_vec(v: &[Rational]) -> String {
    format!("({})", v.iter().map(format_rational).collect::<Vec<_>>().join(", "))
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialise")
}

fn channel_text(c: &Channel<Rational>) -> String {
    let mut out = format!("  {}\n", c.y_labels().join("\t"));
    for (x, label) in c.x_labels().iter().enumerate() {
        let row: Vec<String> = (0..c.n_outputs()).map(|y| format_rational(c.get(x, y))).collect();
        out.push_str(&format!("{label}: {}\n", row.join("\t")));
    }
    out
}

fn channel_csv(c: &Channel<Rational>) -> String {
    let mut out = format!("x,{}\n", c.y_labels().join(","));
    for (x, label) in c.x_labels().iter().enumerate() {
        let row: Vec<String> = (0..c.n_outputs()).map(|y| format_rational(c.get(x, y))).collect();
        out.push_str(&format!("{label},{}\n", row.join(",")));
    }
    out
}

fn capacity_output(report: &CapacityReport, format: Format) -> String {
    match format {
        Format::Json => pretty(&serde_json::to_value(report).expect("report serialises")),
        Format::Csv => {
            format!("mode,method,value\n{:?},{:?},{}\n", report.mode, report.method, format_rational(&report.value))
        }
        Format::Text => {
            let mut out = format_rational(&report.value);
            if report.precision_digits.is_some() {
                out.push_str(&format!("\n≈ {}", format_decimal(&report.value, 6)));
            }
            out
        }
    }
}

fn ctx(cli: &Cli) -> Ctx {
    let cache = (!cli.no_cache).then(|| Cache::new(cli.cache_dir.clone().unwrap_or_else(cache::default_dir)));
    Ctx { cache, verify: cli.verify_cache }
}

fn write_or_return(out: &Option<PathBuf>, text: String) -> Outcome {
    match out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn run(cli: &Cli) -> Outcome {
    let format = cli.format.unwrap_or(Format::Text);
    match &cli.command {
        Command::Vertices { metric, out, limit } => {
            let space = read_metric(metric)?;
            let vertices = ctx(cli).vertices(&space, *limit)?;
            let text = match format {
                Format::Json => vertices_payload(&vertices),
                Format::Csv => {
                    let mut s = space.labels().join(",");
                    s.push('\n');
                    for v in &vertices {
                        s.push_str(&rationals(v).join(","));
                        s.push('\n');
                    }
                    s
                }
                Format::Text => {
                    let mut s = format!("{} vertices\n", vertices.len());
                    for v in &vertices {
                        s.push_str(&fmt_vec(v));
                        s.push('\n');
                    }
                    s
                }
            };
            write_or_return(out, text)
        }
        Command::Kernels { metric, out, limit } => {
            let space = read_metric(metric)?;
            let c = ctx(cli);
            let vertices = c.vertices(&space, *limit)?;
            let kernels = c.kernels(&space, &vertices, *limit)?;
            let text = match format {
                Format::Json => kernels_payload(&kernels),
                Format::Csv => {
                    let mut s = String::from("kernel,vertex,outer\n");
                    for (i, k) in kernels.iter().enumerate() {
                        for (v, o) in k.vertex_indices.iter().zip(k.hyper.outers()) {
                            s.push_str(&format!("{i},{v},{}\n", format_rational(o)));
                        }
                    }
                    s
                }
                Format::Text => {
                    let mut s = format!("{} kernels\n", kernels.len());
                    for (i, k) in kernels.iter().enumerate() {
                        s.push_str(&format!(
                            "#{i} vertices {:?} outers {}\n",
                            k.vertex_indices,
                            fmt_vec(k.hyper.outers())
                        ));
                    }
                    s
                }
            };
            write_or_return(out, text)
        }
        Command::CheckDp { channel, metric } => {
            let space = read_metric(metric)?;
            let c: Channel<Rational> = read_json(channel)?;
            match check_dx_private(&c, &space)? {
                DpCheck::Ok => Ok(match format {
                    Format::Json => pretty(&json!({"private": true, "violations": []})),
                    _ => "ok".into(),
                }),
                DpCheck::Violations(vs) => {
                    let ratio = |r: &Option<Rational>| r.as_ref().map(format_rational).unwrap_or_else(|| "inf".into());
                    let report = match format {
                        Format::Json => pretty(&json!({
                            "private": false,
                            "violations": vs.iter().map(|v| json!({"x": v.x, "x_prime": v.x_prime, "y": v.y, "ratio": ratio(&v.ratio)})).collect::<Vec<_>>(),
                        })),
                        Format::Csv => {
                            let mut s = String::from("x,x_prime,y,ratio\n");
                            for v in &vs {
                                s.push_str(&format!("{},{},{},{}\n", v.x, v.x_prime, v.y, ratio(&v.ratio)));
                            }
                            s
                        }
                        Format::Text => vs
                            .iter()
                            .map(|v| {
                                format!(
                                    "violation: C[{},{}] / C[{},{}] = {}",
                                    v.x,
                                    v.y,
                                    v.x_prime,
                                    v.y,
                                    ratio(&v.ratio)
                                )
                            })
                            .collect::<Vec<_>>()
                            .join("\n"),
                    };
                    Err(Failure::Property(report))
                }
            }
        }
        Command::ToHyper { channel, prior } => {
            let c: Channel<Rational> = read_json(channel)?;
            let prior = read_prior(prior.as_deref(), c.n_inputs())?;
            let h = c.to_hyper(&prior)?;
            Ok(match format {
                Format::Json => pretty(&serde_json::to_value(&h).expect("hyper serialises")),
                Format::Csv => {
                    let mut s = format!("outer,{}\n", c.x_labels().join(","));
                    for (o, inner) in h.outers().iter().zip(h.inners()) {
                        s.push_str(&format!("{},{}\n", format_rational(o), rationals(inner).join(",")));
                    }
                    s
                }
                Format::Text => h
                    .outers()
                    .iter()
                    .zip(h.inners())
                    .map(|(o, inner)| format!("{} : {}", format_rational(o), fmt_vec(inner)))
                    .collect::<Vec<_>>()
                    .join("\n"),
            })
        }
        Command::Refines { b, a, assert_holds } => {
            let b: Channel<Rational> = read_json(b)?;
            let a: Channel<Rational> = read_json(a)?;
            let result = refines(&b, &a)?;
            let text = match (&result, format) {
                (Refinement::Yes(p), Format::Json) => pretty(&json!({"refines": true, "witness": p})),
                (Refinement::No, Format::Json) => pretty(&json!({"refines": false})),
                (Refinement::Yes(p), Format::Csv) => channel_csv(p),
                (Refinement::Yes(p), Format::Text) => format!("yes\n{}", channel_text(p)),
                (Refinement::No, _) => "no".into(),
            };
            if *assert_holds && !result.holds() {
                return Err(Failure::Property(text));
            }
            Ok(text)
        }
        Command::Utility { channel, loss, prior } => {
            let c: Channel<Rational> = read_json(channel)?;
            let l: LossFunction<Rational> = read_json(loss)?;
            let prior = read_prior(prior.as_deref(), c.n_inputs())?;
            let before = prior_uncertainty(&l, &prior)?;
            let after = posterior_uncertainty(&l, &prior, &c)?;
            Ok(match format {
                Format::Json => pretty(
                    &json!({"prior_uncertainty": format_rational(&before), "posterior_uncertainty": format_rational(&after)}),
                ),
                Format::Csv => format!(
                    "prior_uncertainty,posterior_uncertainty\n{},{}\n",
                    format_rational(&before),
                    format_rational(&after)
                ),
                Format::Text => format!("prior {}\nposterior {}", format_rational(&before), format_rational(&after)),
            })
        }
        Command::Capacity { metric, mode, closed_form } => {
            let spec: MetricSpec = read_json(metric)?;
            let report = if *closed_form {
                type_capacity_closed_form(&spec.kind, &spec.base, (*mode).into())?
            } else {
                type_capacity_lp(&spec.build()?, (*mode).into())?
            };
            Ok(capacity_output(&report, format))
        }
        Command::ChannelCapacity { channel, mode } => {
            let c: Channel<Rational> = read_json(channel)?;
            Ok(capacity_output(&channel_capacity(&c, (*mode).into()), format))
        }
        Command::Optimal { channel, loss, metric, mode, samples, seed, budget } => {
            let space = read_metric(metric)?;
            let c: Channel<Rational> = read_json(channel)?;
            let l: LossFunction<Rational> = read_json(loss)?;
            if !check_dx_private(&c, &space)?.is_ok() {
                return Err(Failure::Usage("the channel is not private for this metric".into()));
            }
            let cx = ctx(cli);
            let kernels = cx.kernels(&space, &cx.vertices(&space, None)?, None)?;
            let mode = match mode {
                CheckArg::Exact => CheckMode::Exact { budget: *budget },
                CheckArg::Sample => CheckMode::Sampled { count: *samples, seed: *seed },
            };
            let l = l.with_x_labels(c.x_labels().to_vec())?;
            let verdict = check_universal_l_optimal(&c, &l, &kernels, mode)?;
            let text = match format {
                Format::Json => pretty(&serde_json::to_value(&verdict).expect("verdict serialises")),
                _ => match &verdict {
                    OptimalityVerdict::Optimal => "optimal".into(),
                    OptimalityVerdict::Counterexample { prior, rival_index, margin, .. } => format!(
                        "counterexample: kernel #{rival_index} has lower expected loss by {} at prior {}",
                        format_rational(margin),
                        fmt_vec(prior)
                    ),
                    OptimalityVerdict::Unknown { samples, reason } => {
                        format!("unknown after {samples} priors: {reason}")
                    }
                },
            };
            match (&verdict, mode) {
                (OptimalityVerdict::Counterexample { .. }, _) => Err(Failure::Property(text)),
                (OptimalityVerdict::Unknown { .. }, CheckMode::Exact { .. }) => Err(Failure::Budget(text)),
                _ => Ok(text),
            }
        }
        Command::Reproduce { table, max_n } => {
            let rows = reproduce::run(*table, max_n.unwrap_or(table.default_max()), &ctx(cli))?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => reproduce::to_csv(&rows),
                Format::Json => pretty(&reproduce::to_json(&rows)),
                Format::Text => reproduce::to_text(&rows),
            };
            if rows.iter().all(|r| r.all_match()) {
                Ok(text)
            } else {
                Err(Failure::Property(text))
            }
        }
    }
}

fn emit(text: &str) {
    if text.is_empty() {
        return;
    }
    if text.ends_with('\n') {
        print!("{text}");
    } else {
        println!("{text}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match run(&cli) {
        Ok(text) => {
            emit(&text);
            ExitCode::SUCCESS
        }
        Err(Failure::Property(text)) => {
            emit(&text);
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
