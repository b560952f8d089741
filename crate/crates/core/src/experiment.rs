//! Batch experiments: generate instances, schedule them with CO-FAIR and the
//! unconstrained (Sincronia) ordering, simulate, and aggregate metrics.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cofair::{cofair, CofairInput};
use crate::error::{Error, Result};
use crate::feasibility::{deadlines, primal_feasible, DeadlineVector};
use crate::io::load_batch;
use crate::metrics::OutcomeReport;
use crate::model::{Batch, PhiMode};
use crate::mps::mps_with_loads;
use crate::scalar::Scalar;
use crate::sim::{simulate_order, IntraCoflowPolicy, SimConfig};
use crate::workload::{GenConfig, Generator};

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "COFAIR_JOBS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum SchedulerSpec {
    /// Slowdown target `multiplier · E^p`.
    Cofair {
        #[serde(default = "one")]
        multiplier: f64,
    },
    /// Same ordering with no deadlines.
    Sincronia,
}

fn one() -> f64 {
    1.0
}

impl SchedulerSpec {
    pub fn label(&self) -> String {
        match self {
            SchedulerSpec::Cofair { multiplier } if *multiplier == 1.0 => "cofair".into(),
            SchedulerSpec::Cofair { multiplier } => format!("cofair-x{multiplier}"),
            SchedulerSpec::Sincronia => "sincronia".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// `repetitions` instances from one generator configuration.
    Generate(GenConfig),
    /// One instance per batch file.
    Files(Vec<PathBuf>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: Source,
    #[serde(default = "one_rep")]
    pub repetitions: usize,
    pub schedulers: Vec<SchedulerSpec>,
    #[serde(default = "unit_phi")]
    pub phi: PhiMode,
    /// Overrides the generator seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub intra_coflow: IntraCoflowPolicy,
}

fn one_rep() -> usize {
    1
}

fn unit_phi() -> PhiMode {
    PhiMode::Unit
}

impl ExperimentSpec {
    pub fn generated(cfg: GenConfig, repetitions: usize, schedulers: Vec<SchedulerSpec>) -> Self {
        ExperimentSpec {
            phi: cfg.phi,
            seed: Some(cfg.seed),
            source: Source::Generate(cfg),
            repetitions,
            schedulers,
            output: None,
            intra_coflow: IntraCoflowPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.schedulers.is_empty() {
            return Err(Error::InvalidConfig("no schedulers selected".into()));
        }
        for s in &self.schedulers {
            if let SchedulerSpec::Cofair { multiplier } = s {
                if !(*multiplier >= 1.0 && multiplier.is_finite()) {
                    return Err(Error::InvalidConfig(format!("cofair multiplier {multiplier} must be >= 1")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Materialise every instance.
    pub fn batches(&self) -> Result<Vec<Batch<f64>>> {
        match &self.source {
            Source::Generate(cfg) => {
                let mut cfg = cfg.clone();
                cfg.phi = self.phi;
                if let Some(seed) = self.seed {
                    cfg.seed = seed;
                }
                let g = Generator::new(cfg)?;
                (0..self.repetitions as u64).map(|k| g.instance(k)).collect()
            }
            Source::Files(files) if files.is_empty() => Err(Error::InvalidConfig("no batch files given".into())),
            Source::Files(files) => files.iter().map(|p| Ok(load_batch::<f64>(p)?.with_phi(self.phi))).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub scheduler: String,
    /// Slowdown target the report is scored against.
    pub target: f64,
    /// Coflow ids, highest priority first.
    pub order: Vec<usize>,
    pub report: Option<OutcomeReport<f64>>,
    pub error: Option<String>,
    /// `false` when a produced order failed re-verification.
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceResult {
    pub instance: usize,
    pub primal_slowdown: Option<f64>,
    pub runs: Vec<RunOutcome>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub instances: Vec<InstanceResult>,
    pub schedulers: Vec<String>,
}

fn failed(scheduler: String, target: f64, msg: String) -> RunOutcome {
    RunOutcome { scheduler, target, order: Vec::new(), report: None, error: Some(msg), verified: true }
}

fn run_one(batch: &Batch<f64>, spec: &SchedulerSpec, ep: f64, policy: IntraCoflowPolicy) -> RunOutcome {
    let label = spec.label();
    let loads = batch.loads();
    let (target, dl) = match spec {
        SchedulerSpec::Cofair { multiplier } => {
            let e = ep * multiplier;
            match deadlines(batch, &e) {
                Ok(d) => (e, d),
                Err(err) => return failed(label, e, err.to_string()),
            }
        }
        SchedulerSpec::Sincronia => (ep, DeadlineVector::unbounded(batch.len())),
    };
    let out = match cofair(&CofairInput::new(batch, &loads, &dl)) {
        Ok(o) => o,
        Err(err) => return failed(label, target, err.to_string()),
    };
    let order_ids = out.sigma.ids(batch);
    if !primal_feasible(&loads, &out.sigma, &dl) {
        return RunOutcome {
            scheduler: label,
            target,
            order: order_ids,
            report: None,
            error: Some("order failed primal re-verification".into()),
            verified: false,
        };
    }
    let result = simulate_order(batch, &out.sigma.order, SimConfig { policy, record_trace: false })
        .and_then(|sim| OutcomeReport::new(batch, &sim.ccts, &target));
    match result {
        Ok(report) => RunOutcome { scheduler: label, target, order: order_ids, report: Some(report), error: None, verified: true },
        Err(err) => failed(label, target, err.to_string()),
    }
}

fn run_instance(k: usize, batch: &Batch<f64>, spec: &ExperimentSpec) -> InstanceResult {
    let ep = batch
        .require_zero_release()
        .and_then(|_| mps_with_loads(batch, &batch.loads()))
        .map(|m| m.slowdown);
    let runs = spec
        .schedulers
        .iter()
        .map(|s| match &ep {
            Ok(e) => run_one(batch, s, *e, spec.intra_coflow),
            Err(err) => failed(s.label(), f64::NAN, err.to_string()),
        })
        .collect();
    InstanceResult { instance: k, primal_slowdown: ep.ok(), runs }
}

/// Run every instance on a pool of `jobs` workers (all cores when `None`).
/// Results come back in instance order regardless of scheduling.
pub fn run_batches(batches: &[Batch<f64>], spec: &ExperimentSpec, jobs: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let instances =
        pool.install(|| batches.par_iter().enumerate().map(|(k, b)| run_instance(k, b, spec)).collect::<Vec<_>>());
    Ok(ExperimentResult { instances, schedulers: spec.schedulers.iter().map(|s| s.label()).collect() })
}

pub fn run_experiment(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let batches = spec.batches()?;
    run_batches(&batches, spec, jobs)
}

/// Empirical CCDF at each distinct sample value `v`: `(v, P(X ≥ v))`, sorted
/// by value. The last pair carries the mass of the maximum.
pub fn ccdf<S: Scalar>(samples: &[S]) -> Result<Vec<(S, f64)>> {
    if samples.is_empty() {
        return Err(Error::Empty("ccdf samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("comparable samples"));
    let n = sorted.len() as f64;
    let mut out: Vec<(S, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        if out.last().is_some_and(|(u, _)| u == v) {
            continue;
        }
        out.push((v.clone(), (sorted.len() - i) as f64 / n));
    }
    Ok(out)
}

/// Right-continuous empirical CCDF `P(X > x)`.
pub fn ccdf_at<S: Scalar>(samples: &[S], x: &S) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("ccdf samples"));
    }
    Ok(samples.iter().filter(|s| *s > x).count() as f64 / samples.len() as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct SchedulerSummary {
    pub scheduler: String,
    pub instances: usize,
    pub failures: usize,
    pub verification_failures: usize,
    pub mean_weighted_cct: Option<f64>,
    /// Σ wCCT / Σ wCCT of sincronia over instances where both ran.
    pub normalized_weighted_cct: Option<f64>,
    pub mean_jain: Option<f64>,
    /// Violating coflows over all scored coflows.
    pub violation_fraction: Option<f64>,
    /// `(Ê_j / E, P(X ≥ ·))`.
    pub slowdown_ratio_ccdf: Vec<(f64, f64)>,
    pub stretch_ccdf: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub mean_primal_slowdown: Option<f64>,
    pub schedulers: Vec<SchedulerSummary>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

impl ExperimentResult {
    pub fn verification_failures(&self) -> usize {
        self.instances.iter().flat_map(|i| &i.runs).filter(|r| !r.verified).count()
    }

    fn run<'a>(&'a self, inst: &'a InstanceResult, label: &str) -> Option<&'a OutcomeReport<f64>> {
        inst.runs.iter().find(|r| r.scheduler == label).and_then(|r| r.report.as_ref())
    }

    /// Per-coflow rows: instance, scheduler, coflow, CCT, C0, slowdown, SI.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance", "scheduler", "coflow", "cct", "c0", "slowdown", "si"])?;
        for inst in &self.instances {
            for run in &inst.runs {
                let Some(report) = &run.report else { continue };
                for c in &report.coflows {
                    w.write_record([
                        inst.instance.to_string(),
                        run.scheduler.clone(),
                        c.id.to_string(),
                        c.cct.to_string(),
                        c.isolation.to_string(),
                        c.slowdown.to_string(),
                        c.stretch.to_string(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn summary(&self) -> Summary {
        let eps: Vec<f64> = self.instances.iter().filter_map(|i| i.primal_slowdown).collect();
        let has_baseline = self.schedulers.iter().any(|s| s == "sincronia");
        let schedulers = self
            .schedulers
            .iter()
            .map(|label| {
                let runs: Vec<&RunOutcome> =
                    self.instances.iter().flat_map(|i| i.runs.iter().filter(|r| &r.scheduler == label)).collect();
                let reports: Vec<&OutcomeReport<f64>> = runs.iter().filter_map(|r| r.report.as_ref()).collect();
                let wcct: Vec<f64> = reports.iter().map(|r| r.weighted_cct).collect();
                let (mut num, mut den) = (0.0, 0.0);
                if has_baseline {
                    for inst in &self.instances {
                        if let (Some(a), Some(b)) = (self.run(inst, label), self.run(inst, "sincronia")) {
                            num += a.weighted_cct;
                            den += b.weighted_cct;
                        }
                    }
                }
                let scored: usize = reports.iter().map(|r| r.coflows.len()).sum();
                let violating: usize = reports.iter().map(|r| r.coflows.iter().filter(|c| c.violated).count()).sum();
                let ratios: Vec<f64> = reports.iter().flat_map(|r| r.coflows.iter().map(move |c| c.slowdown / r.target)).collect();
                let stretch: Vec<f64> = reports.iter().flat_map(|r| r.coflows.iter().map(|c| c.stretch)).collect();
                SchedulerSummary {
                    scheduler: label.clone(),
                    instances: runs.len(),
                    failures: runs.iter().filter(|r| r.error.is_some()).count(),
                    verification_failures: runs.iter().filter(|r| !r.verified).count(),
                    mean_weighted_cct: mean(&wcct),
                    normalized_weighted_cct: (den > 0.0).then(|| num / den),
                    mean_jain: mean(&reports.iter().map(|r| r.jain).collect::<Vec<_>>()),
                    violation_fraction: (scored > 0).then(|| violating as f64 / scored as f64),
                    slowdown_ratio_ccdf: ccdf(&ratios).unwrap_or_default(),
                    stretch_ccdf: ccdf(&stretch).unwrap_or_default(),
                }
            })
            .collect();
        Summary { instances: self.instances.len(), mean_primal_slowdown: mean(&eps), schedulers }
    }

    /// Write `results.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.csv"), self.to_csv()?)?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary())?)?;
        Ok(())
    }
}
