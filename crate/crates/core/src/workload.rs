//! Seeded synthetic batches: wide-narrow (WN) and map-reduce (MR).
//!
//! Every coflow draws from its own ChaCha stream, so coflow `j` of instance `k`
//! does not depend on how many numbers other coflows consumed.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Batch, Coflow, Fabric, Flow, PhiMode, PortId};

pub const DEFAULT_MEAN_VOLUME: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadKind {
    /// Fraction `q` of wide coflows, the rest single flows.
    Wn { q: f64 },
    /// Up to `mappers` ingress and `reducers` egress ports per coflow.
    Mr { mappers: usize, reducers: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum VolumeLaw {
    Exponential { mean: f64 },
    Gamma { mean: f64, sd: f64 },
}

impl Default for VolumeLaw {
    fn default() -> Self {
        VolumeLaw::Exponential { mean: DEFAULT_MEAN_VOLUME }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum WeightMode {
    #[default]
    Unit,
    Uniform { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    #[serde(flatten)]
    pub kind: WorkloadKind,
    #[serde(rename = "N")]
    pub coflows: usize,
    #[serde(rename = "M")]
    pub servers: usize,
    #[serde(default)]
    pub volume: VolumeLaw,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit_phi")]
    pub phi: PhiMode,
    #[serde(default)]
    pub weights: WeightMode,
}

fn unit_phi() -> PhiMode {
    PhiMode::Unit
}

impl GenConfig {
    pub fn wn(coflows: usize, servers: usize, q: f64, seed: u64) -> Self {
        GenConfig {
            kind: WorkloadKind::Wn { q },
            coflows,
            servers,
            volume: VolumeLaw::default(),
            seed,
            phi: PhiMode::Unit,
            weights: WeightMode::Unit,
        }
    }

    pub fn mr(coflows: usize, servers: usize, mappers: usize, reducers: usize, seed: u64) -> Self {
        GenConfig { kind: WorkloadKind::Mr { mappers, reducers }, ..GenConfig::wn(coflows, servers, 0.0, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.coflows == 0 {
            return bad("N must be at least 1".into());
        }
        if self.servers == 0 {
            return bad("M must be at least 1".into());
        }
        match self.kind {
            WorkloadKind::Wn { q } if !(0.0..=1.0).contains(&q) => return bad(format!("q = {q} is outside [0, 1]")),
            WorkloadKind::Mr { mappers, reducers }
                if mappers == 0 || reducers == 0 || mappers > self.servers || reducers > self.servers =>
            {
                return bad(format!("need 1 <= m, r <= M, got m = {mappers}, r = {reducers}, M = {}", self.servers));
            }
            _ => {}
        }
        match self.volume {
            VolumeLaw::Exponential { mean } if !(mean > 0.0 && mean.is_finite()) => {
                return bad(format!("mean volume {mean} must be positive"))
            }
            VolumeLaw::Gamma { mean, sd } if !(mean > 0.0 && sd > 0.0 && mean.is_finite() && sd.is_finite()) => {
                return bad(format!("gamma volume needs positive mean and sd, got {mean}, {sd}"))
            }
            _ => {}
        }
        if let WeightMode::Uniform { lo, hi } = self.weights {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad(format!("weight range [{lo}, {hi}] must be positive and ordered"));
            }
        }
        if self.phi == PhiMode::File {
            return bad("generated batches need phi = unit or volume".into());
        }
        Ok(())
    }
}

enum Sampler {
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
}

impl Sampler {
    fn new(law: &VolumeLaw) -> Result<Self> {
        let err = |e: &dyn std::fmt::Display| Error::InvalidConfig(e.to_string());
        Ok(match *law {
            VolumeLaw::Exponential { mean } => Sampler::Exp(Exp::new(1.0 / mean).map_err(|e| err(&e))?),
            VolumeLaw::Gamma { mean, sd } => {
                Sampler::Gamma(Gamma::new((mean / sd).powi(2), sd * sd / mean).map_err(|e| err(&e))?)
            }
        })
    }

    /// Strictly positive draw.
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        loop {
            let v = match self {
                Sampler::Exp(d) => d.sample(rng),
                Sampler::Gamma(d) => d.sample(rng),
            };
            if v > 0.0 {
                return v;
            }
        }
    }
}

/// Produces independent instances of one configuration.
#[derive(Clone, Debug)]
pub struct Generator {
    cfg: GenConfig,
}

impl Generator {
    pub fn new(cfg: GenConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Generator { cfg })
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    /// Stream 0 of each instance drives batch-level choices; coflow `j` uses
    /// stream `j + 1`.
    fn stream(&self, instance: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream((instance << 32) | stream);
        rng
    }

    pub fn instance(&self, index: u64) -> Result<Batch<f64>> {
        let cfg = &self.cfg;
        let m = cfg.servers;
        let sampler = Sampler::new(&cfg.volume)?;
        let wide = match cfg.kind {
            WorkloadKind::Wn { q } => {
                let count = (q * cfg.coflows as f64).round() as usize;
                let mut idx: Vec<usize> = (0..cfg.coflows).collect();
                idx.shuffle(&mut self.stream(index, 0));
                let mut wide = vec![false; cfg.coflows];
                for &j in &idx[..count.min(cfg.coflows)] {
                    wide[j] = true;
                }
                wide
            }
            WorkloadKind::Mr { .. } => Vec::new(),
        };

        let mut coflows = Vec::with_capacity(cfg.coflows);
        for j in 0..cfg.coflows {
            let mut rng = self.stream(index, j as u64 + 1);
            let egress = |k: usize| PortId(m + k);
            let pairs: Vec<(usize, usize)> = match cfg.kind {
                WorkloadKind::Wn { .. } if wide[j] => {
                    let width = rng.random_range(m.div_ceil(3)..=m);
                    sample(&mut rng, m, width).into_iter().map(|a| (a, rng.random_range(0..m))).collect()
                }
                WorkloadKind::Wn { .. } => vec![(rng.random_range(0..m), rng.random_range(0..m))],
                WorkloadKind::Mr { mappers, reducers } => {
                    let mc = rng.random_range(1..=mappers);
                    let rc = rng.random_range(1..=reducers);
                    let ins = sample(&mut rng, m, mc).into_vec();
                    let outs = sample(&mut rng, m, rc).into_vec();
                    ins.iter().flat_map(|&a| outs.iter().map(move |&b| (a, b))).collect()
                }
            };
            let flows = pairs.into_iter().map(|(a, b)| Flow::new(PortId(a), egress(b), sampler.draw(&mut rng))).collect();
            let weight = match cfg.weights {
                WeightMode::Unit => 1.0,
                WeightMode::Uniform { lo, hi } if hi > lo => rng.random_range(lo..hi),
                WeightMode::Uniform { lo, .. } => lo,
            };
            coflows.push(Coflow::new(j + 1, flows).with_weight(weight));
        }
        Ok(Batch::new(Fabric::new(m)?, coflows)?.with_phi(cfg.phi))
    }
}

pub fn generate(cfg: &GenConfig) -> Result<Batch<f64>> {
    Generator::new(cfg.clone())?.instance(0)
}

/// Wide-narrow batch; `cfg.kind` must be WN.
pub fn gen_wn(cfg: &GenConfig) -> Result<Batch<f64>> {
    match cfg.kind {
        WorkloadKind::Wn { .. } => generate(cfg),
        _ => Err(Error::InvalidConfig("gen_wn needs a WN configuration".into())),
    }
}

/// Map-reduce batch; `cfg.kind` must be MR.
pub fn gen_mr(cfg: &GenConfig) -> Result<Batch<f64>> {
    match cfg.kind {
        WorkloadKind::Mr { .. } => generate(cfg),
        _ => Err(Error::InvalidConfig("gen_mr needs an MR configuration".into())),
    }
}
