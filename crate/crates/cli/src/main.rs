use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cofair_core::cofair::{cofair, dual_audit, CofairInput};
use cofair_core::experiment::{run_experiment, ExperimentSpec, JOBS_ENV};
use cofair_core::feasibility::{check_primal, deadlines, edd_feasible_order, DeadlineVector, Feasibility, SigmaOrder};
use cofair_core::io::{batch_to_json, load_batch};
use cofair_core::lp::min_slowdown_lp;
use cofair_core::metrics::OutcomeReport;
use cofair_core::model::{Batch, PhiMode};
use cofair_core::mps::mps_with_loads;
use cofair_core::sim::{simulate_order, IntraCoflowPolicy, SimConfig};
use cofair_core::workload::{generate, GenConfig, VolumeLaw, WeightMode, WorkloadKind};
use cofair_core::{Rational, Scalar};

#[derive(Parser)]
#[command(name = "coflowctl", version, about = "Slowdown-constrained coflow scheduling tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum primal slowdown E^p and the isolation-rate ranking.
    Mps {
        batch: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check whether an order (or any order) meets the slowdown deadlines.
    Feascheck {
        batch: PathBuf,
        #[arg(long = "E")]
        target: String,
        /// Coflow ids, highest priority first: `2,1` or `[2,1]`.
        #[arg(long)]
        order: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Primal-dual ordering with its dual certificate.
    Cofair {
        batch: PathBuf,
        /// Slowdown target, or `auto` for E^p.
        #[arg(long = "E", default_value = "auto")]
        target: String,
        /// JSON array of multipliers in batch order.
        #[arg(long)]
        alpha: Option<PathBuf>,
        /// Drop the deadlines.
        #[arg(long)]
        sincronia: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Greedy fluid simulation of a priority order.
    Simulate {
        batch: PathBuf,
        /// Coflow ids as JSON (`[2,1]`), comma list, or a path to a JSON file.
        #[arg(long)]
        order: String,
        /// Slowdown target for scoring; defaults to E^p.
        #[arg(long = "E")]
        target: Option<String>,
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_enum, default_value_t = Policy::FlowId)]
        policy: Policy,
        #[command(flatten)]
        common: Common,
    },
    /// Exact small-scale oracles.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Generate a synthetic batch.
    Gen(GenArgs),
    /// Batch experiments.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Smallest slowdown whose slotted LP is feasible.
    MinSlowdown {
        batch: PathBuf,
        #[arg(long, value_enum, default_value_t = Phi::Unit)]
        phi: Phi,
        /// Slot length.
        #[arg(long, default_value = "1")]
        dt: String,
        #[arg(long, default_value = "1e-3")]
        tol: String,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    Run {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = JOBS_ENV)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value_t = Phi::Unit)]
    phi: Phi,
    /// Exact rational arithmetic.
    #[arg(long)]
    exact: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phi {
    Unit,
    Volume,
    File,
}

impl From<Phi> for PhiMode {
    fn from(p: Phi) -> Self {
        match p {
            Phi::Unit => PhiMode::Unit,
            Phi::Volume => PhiMode::Volume,
            Phi::File => PhiMode::File,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    FlowId,
    MaxMin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Wn,
    Mr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Exp,
    Gamma,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long = "N")]
    coflows: usize,
    #[arg(long = "M")]
    servers: usize,
    /// Fraction of wide coflows (WN).
    #[arg(long)]
    q: Option<f64>,
    /// Maximum mappers (MR).
    #[arg(long)]
    m: Option<usize>,
    /// Maximum reducers (MR).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Phi::Unit)]
    phi: Phi,
    #[arg(long, value_enum, default_value_t = Law::Exp)]
    volume: Law,
    #[arg(long, default_value_t = 10.0)]
    mean: f64,
    #[arg(long, default_value_t = 3.0)]
    sd: f64,
    /// Draw weights uniformly from `lo,hi`.
    #[arg(long)]
    weights: Option<String>,
}

/// Parse `x` or `a/b` into a scalar.
fn parse_scalar<S: Scalar>(text: &str) -> Result<S> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once('/') {
        let a: S = parse_scalar(a)?;
        let b: S = parse_scalar(b)?;
        if b.is_zero() {
            bail!("zero denominator in `{text}`");
        }
        return Ok(a / b);
    }
    let v: f64 = text.parse().with_context(|| format!("`{text}` is not a number"))?;
    S::from_f64_value(v).ok_or_else(|| anyhow!("`{text}` is not representable"))
}

fn number<S: Scalar>(v: &S) -> Value {
    if S::EXACT {
        json!(v.to_string())
    } else {
        json!(v.to_f64_value())
    }
}

fn numbers<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(number).collect())
}

fn parse_ids(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let body = if Path::new(text).is_file() { fs::read_to_string(text)? } else { text.to_string() };
    let body = body.trim();
    if body.starts_with('[') {
        return Ok(serde_json::from_str(body)?);
    }
    body.split(',').map(|s| s.trim().parse::<usize>().with_context(|| format!("bad coflow id `{s}`"))).collect()
}

fn load<S: Scalar>(path: &Path, phi: Phi) -> Result<Batch<S>> {
    let batch = load_batch::<S>(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(batch.with_phi(phi.into()))
}

/// Write to stdout; a closed pipe is not an error.
fn out(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
}

fn emit(v: &Value) {
    out(&(serde_json::to_string_pretty(v).expect("json values serialize") + "\n"));
}

fn cmd_mps<S: Scalar>(path: &Path, phi: Phi) -> Result<()> {
    let batch = load::<S>(path, phi)?;
    let loads = batch.loads();
    let out = mps_with_loads(&batch, &loads)?;
    let ids: Vec<usize> = out.ranking.order.iter().map(|&j| batch.coflow(j).id).collect();
    emit(&json!({
        "slowdown": number(&out.slowdown),
        "bottleneck": out.bottleneck.number(),
        "ranking": ids,
        "rates": numbers(&out.ranking.rates),
    }));
    Ok(())
}

fn target_or_auto<S: Scalar>(batch: &Batch<S>, text: &str) -> Result<S> {
    if text == "auto" {
        Ok(mps_with_loads(batch, &batch.loads())?.slowdown)
    } else {
        parse_scalar(text)
    }
}

fn cmd_feascheck<S: Scalar>(path: &Path, phi: Phi, target: &str, order: Option<&str>) -> Result<bool> {
    let batch = load::<S>(path, phi)?;
    let loads = batch.loads();
    let e = target_or_auto(&batch, target)?;
    let dl = deadlines(&batch, &e)?;
    let verdict = match order {
        Some(text) => {
            let sigma = SigmaOrder::from_ids(&batch, &loads, &parse_ids(text)?)?;
            match check_primal(&loads, &sigma.order, &dl)? {
                None => Feasibility::Feasible(sigma),
                Some(v) => Feasibility::Infeasible(v),
            }
        }
        None => edd_feasible_order(&batch, &loads, &dl)?,
    };
    let feasible = verdict.is_feasible();
    let body = match verdict {
        Feasibility::Feasible(sigma) => json!({
            "feasible": true,
            "target": number(&e),
            "order": sigma.ids(&batch),
            "bounds": numbers(&sigma.bounds),
        }),
        Feasibility::Infeasible(v) => json!({
            "feasible": false,
            "target": number(&e),
            "violation": {
                "port": v.port.number(),
                "position": v.position + 1,
                "coflow": batch.coflow(v.coflow).id,
                "prefix_time": number(&v.prefix_time),
                "deadline": number(&v.deadline),
            },
        }),
    };
    emit(&body);
    Ok(feasible)
}

fn cmd_cofair<S: Scalar>(path: &Path, phi: Phi, target: &str, alpha: Option<&Path>, sincronia: bool) -> Result<bool> {
    let batch = load::<S>(path, phi)?;
    let loads = batch.loads();
    let (e, dl) = if sincronia {
        (None, DeadlineVector::unbounded(batch.len()))
    } else {
        let e = target_or_auto(&batch, target)?;
        let dl = deadlines(&batch, &e)?;
        (Some(e), dl)
    };
    let mut input = CofairInput::new(&batch, &loads, &dl);
    if let Some(p) = alpha {
        let raw: Vec<Value> = serde_json::from_str(&fs::read_to_string(p)?)?;
        let values = raw
            .iter()
            .map(|v| match v {
                Value::String(s) => parse_scalar::<S>(s),
                other => parse_scalar::<S>(&other.to_string()),
            })
            .collect::<Result<Vec<S>>>()?;
        input = input.with_alpha(values);
    }
    let out = match cofair(&input) {
        Ok(o) => o,
        Err(err) if err.is_infeasible() => {
            emit(&json!({ "feasible": false, "target": e.as_ref().map(number), "error": err.to_string() }));
            return Ok(true);
        }
        Err(err) => return Err(err.into()),
    };
    let audit = dual_audit(&loads, &out.certificate, &dl, &out.sigma);
    let entries: Vec<Value> = out
        .certificate
        .entries
        .iter()
        .map(|d| {
            json!({
                "step": d.step,
                "port": d.port.number(),
                "tail": d.tail.iter().map(|&j| batch.coflow(j).id).collect::<Vec<_>>(),
                "pivot": batch.coflow(d.pivot).id,
                "y": number(&d.value),
            })
        })
        .collect();
    let audit_json = match &audit {
        Ok(r) => json!({
            "passed": true,
            "dual_objective": r.dual_objective.as_ref().map(number),
            "primal_objective": number(&r.primal_objective),
            "max_constraint_error": number(&r.max_constraint_error),
        }),
        Err(f) => json!({ "passed": false, "failure": f.to_string() }),
    };
    emit(&json!({
        "feasible": true,
        "target": e.as_ref().map(number),
        "order": out.sigma.ids(&batch),
        "bounds": numbers(&out.sigma.bounds),
        "certificate": entries,
        "audit": audit_json,
    }));
    Ok(audit.is_ok())
}

struct SimArgs<'a> {
    order: &'a str,
    target: Option<&'a str>,
    trace: bool,
    format: Format,
    policy: Policy,
}

fn cmd_simulate<S: Scalar>(path: &Path, phi: Phi, args: SimArgs<'_>) -> Result<()> {
    let batch = load::<S>(path, phi)?;
    let loads = batch.loads();
    let sigma = SigmaOrder::from_ids(&batch, &loads, &parse_ids(args.order)?)?;
    let target = match args.target {
        Some(t) => target_or_auto(&batch, t)?,
        None => target_or_auto(&batch, "auto").context("releases are non-zero: pass --E")?,
    };
    let policy = match args.policy {
        Policy::FlowId => IntraCoflowPolicy::FlowIdOrder,
        Policy::MaxMin => IntraCoflowPolicy::MaxMin,
    };
    let sim = simulate_order(&batch, &sigma.order, SimConfig { policy, record_trace: args.trace })?;
    let report = OutcomeReport::new(&batch, &sim.ccts, &target)?;
    match args.format {
        Format::Csv => out(&report.to_csv()?),
        Format::Json => {
            let coflows: Vec<Value> = report
                .coflows
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "cct": number(&c.cct),
                        "isolation": number(&c.isolation),
                        "slowdown": number(&c.slowdown),
                        "progress": number(&c.progress),
                        "stretch": number(&c.stretch),
                        "violated": c.violated,
                    })
                })
                .collect();
            let mut body = json!({
                "target": number(&report.target),
                "weighted_cct": number(&report.weighted_cct),
                "stretch_sum": number(&report.stretch_sum),
                "jain": number(&report.jain),
                "violation_fraction": report.violation_fraction,
                "coflows": coflows,
            });
            if let Some(trace) = &sim.trace {
                let intervals: Vec<Value> = trace
                    .iter()
                    .map(|t| {
                        json!({
                            "start": number(&t.start),
                            "end": number(&t.end),
                            "rates": t.rates.iter().map(|r| json!({
                                "coflow": r.coflow,
                                "flow": r.flow,
                                "rate": number(&r.rate),
                            })).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                body["trace"] = Value::Array(intervals);
            }
            emit(&body);
        }
    }
    Ok(())
}

fn cmd_min_slowdown(path: &Path, phi: Phi, dt: &str, tol: &str) -> Result<()> {
    let batch = load::<Rational>(path, phi)?;
    let dt: Rational = parse_scalar(dt)?;
    let tol: Rational = parse_scalar(tol)?;
    let search = min_slowdown_lp(&batch, &dt, &tol)?;
    let ep = batch.require_zero_release().ok().and_then(|_| mps_with_loads(&batch, &batch.loads()).ok());
    emit(&json!({
        "min_slowdown": search.target.to_f64_value(),
        "min_slowdown_exact": search.target.to_string(),
        "infeasible_below": search.infeasible_below.as_ref().map(|v| v.to_f64_value()),
        "primal_slowdown": ep.as_ref().map(|m| m.slowdown.to_f64_value()),
        "probes": search.probes,
    }));
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let kind = match a.kind {
        Kind::Wn => WorkloadKind::Wn { q: a.q.ok_or_else(|| anyhow!("wn needs --q"))? },
        Kind::Mr => WorkloadKind::Mr {
            mappers: a.m.ok_or_else(|| anyhow!("mr needs --m"))?,
            reducers: a.r.ok_or_else(|| anyhow!("mr needs --r"))?,
        },
    };
    let volume = match a.volume {
        Law::Exp => VolumeLaw::Exponential { mean: a.mean },
        Law::Gamma => VolumeLaw::Gamma { mean: a.mean, sd: a.sd },
    };
    let weights = match &a.weights {
        None => WeightMode::Unit,
        Some(text) => {
            let (lo, hi) = text.split_once(',').ok_or_else(|| anyhow!("--weights expects lo,hi"))?;
            WeightMode::Uniform { lo: lo.trim().parse()?, hi: hi.trim().parse()? }
        }
    };
    let cfg = GenConfig { kind, coflows: a.coflows, servers: a.servers, volume, seed: a.seed, phi: a.phi.into(), weights };
    let text = batch_to_json(&generate(&cfg)?)?;
    match &a.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out(&(text + "\n")),
    }
    Ok(())
}

fn cmd_experiment(spec_path: &Path, out: Option<&Path>, jobs: Option<usize>) -> Result<bool> {
    let spec = ExperimentSpec::from_json(&fs::read_to_string(spec_path)?)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| spec.output.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set `output` in the spec"))?;
    let result = run_experiment(&spec, jobs)?;
    result.write(&dir)?;
    let failures = result.verification_failures();
    eprintln!("{} instances written to {}", result.instances.len(), dir.display());
    if failures > 0 {
        eprintln!("{failures} schedules failed re-verification");
    }
    Ok(failures == 0)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Mps { batch, common } => {
            if common.exact {
                cmd_mps::<Rational>(&batch, common.phi)?
            } else {
                cmd_mps::<f64>(&batch, common.phi)?
            }
            Ok(true)
        }
        Command::Feascheck { batch, target, order, common } => {
            // Infeasibility is an answer, not a failure.
            if common.exact {
                cmd_feascheck::<Rational>(&batch, common.phi, &target, order.as_deref())?;
            } else {
                cmd_feascheck::<f64>(&batch, common.phi, &target, order.as_deref())?;
            }
            Ok(true)
        }
        Command::Cofair { batch, target, alpha, sincronia, common } => {
            let ok = if common.exact {
                cmd_cofair::<Rational>(&batch, common.phi, &target, alpha.as_deref(), sincronia)?
            } else {
                cmd_cofair::<f64>(&batch, common.phi, &target, alpha.as_deref(), sincronia)?
            };
            Ok(ok)
        }
        Command::Simulate { batch, order, target, trace, format, policy, common } => {
            let args = SimArgs { order: &order, target: target.as_deref(), trace, format, policy };
            if common.exact {
                cmd_simulate::<Rational>(&batch, common.phi, args)?
            } else {
                cmd_simulate::<f64>(&batch, common.phi, args)?
            }
            Ok(true)
        }
        Command::Oracle { command: OracleCommand::MinSlowdown { batch, phi, dt, tol } } => {
            cmd_min_slowdown(&batch, phi, &dt, &tol)?;
            Ok(true)
        }
        Command::Gen(args) => {
            cmd_gen(&args)?;
            Ok(true)
        }
        Command::Experiment { command: ExperimentCommand::Run { spec, out, jobs } } => cmd_experiment(&spec, out.as_deref(), jobs),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
