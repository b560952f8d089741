//! Big Switch fabric, coflows, batches and per-port load aggregation.
//!
//! The fabric has `M` servers. Ports are numbered `0..M` on the ingress side and
//! `M..2M` on the egress side internally; files and user-facing output use the
//! 1-based numbering `1..=2M`.

use std::collections::HashSet;
use std::fmt;


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{max_of, sum_of, Scalar};

/// Port index, 0-based. `PortId(0)` is the first ingress port.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortId(pub usize);

impl PortId {
    /// 1-based port number as used in batch files.
    pub fn number(self) -> usize {
        self.0 + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        n.checked_sub(1).map(PortId)
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "port {}", self.number())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fabric<S> {
    servers: usize,
    capacities: Vec<S>,
}

impl<S: Scalar> Fabric<S> {
    /// Unit-capacity fabric with `servers` ingress and `servers` egress ports.
    pub fn new(servers: usize) -> Result<Self> {
        if servers == 0 {
            return Err(Error::EmptyFabric);
        }
        Ok(Fabric { servers, capacities: vec![S::one(); 2 * servers] })
    }

    pub fn with_capacities(servers: usize, capacities: Vec<S>) -> Result<Self> {
        if servers == 0 {
            return Err(Error::EmptyFabric);
        }
        if capacities.len() != 2 * servers {
            return Err(Error::CapacityCount { expected: 2 * servers, got: capacities.len() });
        }
        for (i, c) in capacities.iter().enumerate() {
            if !(*c > S::zero()) || !c.to_f64_value().is_finite() {
                return Err(Error::InvalidCapacity { port: i + 1 });
            }
        }
        Ok(Fabric { servers, capacities })
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn port_count(&self) -> usize {
        2 * self.servers
    }

    pub fn ports(&self) -> impl Iterator<Item = PortId> {
        (0..self.port_count()).map(PortId)
    }

    pub fn capacity(&self, port: PortId) -> &S {
        &self.capacities[port.0]
    }

    pub fn capacities(&self) -> &[S] {
        &self.capacities
    }

    pub fn is_ingress(&self, port: PortId) -> bool {
        port.0 < self.servers
    }

    pub fn is_egress(&self, port: PortId) -> bool {
        port.0 >= self.servers && port.0 < 2 * self.servers
    }

    pub fn is_unit(&self) -> bool {
        self.capacities.iter().all(|c| c.is_one())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flow<S> {
    pub ingress: PortId,
    pub egress: PortId,
    pub volume: S,
}

impl<S> Flow<S> {
    pub fn new(ingress: PortId, egress: PortId, volume: S) -> Self {
        Flow { ingress, egress, volume }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coflow<S> {
    pub id: usize,
    pub flows: Vec<Flow<S>>,
    pub release: S,
    pub weight: S,
    /// Slowdown weight: how much this coflow's relative delay counts.
    pub phi: S,
}

impl<S: Scalar> Coflow<S> {
    /// Coflow released at 0 with unit weight and unit slowdown weight.
    pub fn new(id: usize, flows: Vec<Flow<S>>) -> Self {
        Coflow { id, flows, release: S::zero(), weight: S::one(), phi: S::one() }
    }

    pub fn with_release(mut self, release: S) -> Self {
        self.release = release;
        self
    }

    pub fn with_weight(mut self, weight: S) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_phi(mut self, phi: S) -> Self {
        self.phi = phi;
        self
    }

    /// Total volume `V_j`.
    pub fn volume(&self) -> S {
        sum_of(self.flows.iter().map(|f| &f.volume))
    }
}

/// How the slowdown weights of a batch are assigned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiMode {
    /// `φ_j = 1`: plain slowdown.
    Unit,
    /// `φ_j = V_j`: port-occupation slowdown.
    Volume,
    /// Keep the values already in the batch.
    File,
}

impl std::str::FromStr for PhiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" | "1" => Ok(PhiMode::Unit),
            "volume" | "v" => Ok(PhiMode::Volume),
            "file" => Ok(PhiMode::File),
            other => Err(Error::Parse(format!("unknown phi mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch<S> {
    fabric: Fabric<S>,
    coflows: Vec<Coflow<S>>,
}

fn finite<S: Scalar>(v: &S) -> bool {
    v.to_f64_value().is_finite()
}

impl<S: Scalar> Batch<S> {
    pub fn new(fabric: Fabric<S>, coflows: Vec<Coflow<S>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &coflows {
            if !seen.insert(c.id) {
                return Err(Error::DuplicateCoflowId(c.id));
            }
            if c.flows.is_empty() {
                return Err(Error::EmptyCoflow(c.id));
            }
            for f in &c.flows {
                if !fabric.is_ingress(f.ingress) {
                    return Err(Error::InvalidPort { coflow: c.id, port: f.ingress.number(), side: "ingress" });
                }
                if !fabric.is_egress(f.egress) {
                    return Err(Error::InvalidPort { coflow: c.id, port: f.egress.number(), side: "egress" });
                }
                if !(f.volume > S::zero()) || !finite(&f.volume) {
                    return Err(Error::NonPositive { coflow: c.id, what: "flow volume" });
                }
            }
            if !(c.weight > S::zero()) || !finite(&c.weight) {
                return Err(Error::NonPositive { coflow: c.id, what: "weight" });
            }
            if !(c.phi > S::zero()) || !finite(&c.phi) {
                return Err(Error::NonPositive { coflow: c.id, what: "phi" });
            }
            if c.release < S::zero() || !finite(&c.release) {
                return Err(Error::Negative { coflow: c.id, what: "release" });
            }
        }
        Ok(Batch { fabric, coflows })
    }

    pub fn fabric(&self) -> &Fabric<S> {
        &self.fabric
    }

    pub fn coflows(&self) -> &[Coflow<S>] {
        &self.coflows
    }

    pub fn coflow(&self, index: usize) -> &Coflow<S> {
        &self.coflows[index]
    }

    pub fn len(&self) -> usize {
        self.coflows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coflows.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.coflows.iter().map(|c| c.id).collect()
    }

    /// Position of coflow `id` in the batch.
    pub fn index_of(&self, id: usize) -> Result<usize> {
        self.coflows.iter().position(|c| c.id == id).ok_or(Error::UnknownCoflow(id))
    }

    pub fn loads(&self) -> PortLoads<S> {
        build_port_loads(self)
    }

    pub fn weights(&self) -> Vec<S> {
        self.coflows.iter().map(|c| c.weight.clone()).collect()
    }

    pub fn phis(&self) -> Vec<S> {
        self.coflows.iter().map(|c| c.phi.clone()).collect()
    }

    /// Isolation completion time `C_j^0` of the coflow with the given id.
    pub fn isolation_cct(&self, id: usize) -> Result<S> {
        let j = self.index_of(id)?;
        Ok(self.isolation_cct_at(j))
    }

    /// `C_j^0` for the coflow at position `j`.
    pub fn isolation_cct_at(&self, j: usize) -> S {
        self.coflows[j].release.clone() + self.isolation_span_at(j)
    }

    /// `C_j^0 - r_j`: the bottleneck-port volume divided by its capacity.
    pub fn isolation_span_at(&self, j: usize) -> S {
        let mut per_port = vec![S::zero(); self.fabric.port_count()];
        for f in &self.coflows[j].flows {
            per_port[f.ingress.0] = per_port[f.ingress.0].clone() + f.volume.clone();
            per_port[f.egress.0] = per_port[f.egress.0].clone() + f.volume.clone();
        }
        let times: Vec<S> = per_port
            .into_iter()
            .enumerate()
            .map(|(p, v)| v / self.fabric.capacities[p].clone())
            .collect();
        max_of(&times).unwrap_or_else(S::zero)
    }

    /// Replace every `φ_j` according to `mode`.
    pub fn with_phi(&self, mode: PhiMode) -> Self {
        let mut out = self.clone();
        for c in &mut out.coflows {
            match mode {
                PhiMode::Unit => c.phi = S::one(),
                PhiMode::Volume => c.phi = c.volume(),
                PhiMode::File => {}
            }
        }
        out
    }

    pub fn with_weights(&self, weights: &[S]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: weights.len() });
        }
        let mut out = self.clone();
        for (c, w) in out.coflows.iter_mut().zip(weights) {
            c.weight = w.clone();
        }
        Batch::new(out.fabric, out.coflows)
    }

    pub fn with_releases(&self, releases: &[S]) -> Result<Self> {
        if releases.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: releases.len() });
        }
        let mut out = self.clone();
        for (c, r) in out.coflows.iter_mut().zip(releases) {
            c.release = r.clone();
        }
        Batch::new(out.fabric, out.coflows)
    }

    /// Fails with [`Error::NonzeroRelease`] unless every release time is zero.
    pub fn require_zero_release(&self) -> Result<()> {
        match self.coflows.iter().find(|c| !c.release.is_zero()) {
            Some(c) => Err(Error::NonzeroRelease(c.id)),
            None => Ok(()),
        }
    }

    /// Re-express the batch in another scalar type.
    pub fn convert<T: Scalar>(&self) -> Result<Batch<T>> {
        let conv = |v: &S| -> Result<T> {
            let f = v.to_f64_value();
            T::from_f64_value(f).ok_or(Error::Unrepresentable(f))
        };
        let caps = self.fabric.capacities.iter().map(conv).collect::<Result<Vec<_>>>()?;
        let fabric = Fabric::with_capacities(self.fabric.servers, caps)?;
        let mut coflows = Vec::with_capacity(self.len());
        for c in &self.coflows {
            let flows = c
                .flows
                .iter()
                .map(|f| Ok(Flow::new(f.ingress, f.egress, conv(&f.volume)?)))
                .collect::<Result<Vec<_>>>()?;
            coflows.push(Coflow {
                id: c.id,
                flows,
                release: conv(&c.release)?,
                weight: conv(&c.weight)?,
                phi: conv(&c.phi)?,
            });
        }
        Batch::new(fabric, coflows)
    }

    /// Sub-batch containing the coflows at the given positions, in that order.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        let coflows = positions.iter().map(|&j| self.coflows[j].clone()).collect();
        Batch::new(self.fabric.clone(), coflows)
    }
}

/// Per-port, per-coflow volume table `p_{ℓj}` with port totals and active sets.
#[derive(Clone, Debug)]
pub struct PortLoads<S> {
    capacities: Vec<S>,
    // [port][coflow]
    load: Vec<Vec<S>>,
    totals: Vec<S>,
    active: Vec<Vec<usize>>,
    ports_of: Vec<Vec<PortId>>,
}

pub fn build_port_loads<S: Scalar>(batch: &Batch<S>) -> PortLoads<S> {
    let ports = batch.fabric.port_count();
    let n = batch.len();
    let mut load = vec![vec![S::zero(); n]; ports];
    for (j, c) in batch.coflows.iter().enumerate() {
        for f in &c.flows {
            load[f.ingress.0][j] = load[f.ingress.0][j].clone() + f.volume.clone();
            load[f.egress.0][j] = load[f.egress.0][j].clone() + f.volume.clone();
        }
    }
    let totals = load.iter().map(|row| sum_of(row)).collect();
    let active: Vec<Vec<usize>> = load
        .iter()
        .map(|row| (0..n).filter(|&j| row[j] > S::zero()).collect())
        .collect();
    let mut ports_of = vec![Vec::new(); n];
    for (p, act) in active.iter().enumerate() {
        for &j in act {
            ports_of[j].push(PortId(p));
        }
    }
    PortLoads { capacities: batch.fabric.capacities.clone(), load, totals, active, ports_of }
}

impl<S: Scalar> PortLoads<S> {
    pub fn port_count(&self) -> usize {
        self.capacities.len()
    }

    pub fn coflow_count(&self) -> usize {
        self.ports_of.len()
    }

    pub fn ports(&self) -> impl Iterator<Item = PortId> {
        (0..self.port_count()).map(PortId)
    }

    /// `p_{ℓj}`.
    pub fn volume(&self, port: PortId, j: usize) -> &S {
        &self.load[port.0][j]
    }

    /// `p_{ℓj} / B_ℓ`: time coflow `j` needs on port `ℓ` alone.
    pub fn time(&self, port: PortId, j: usize) -> S {
        self.load[port.0][j].clone() / self.capacities[port.0].clone()
    }

    pub fn capacity(&self, port: PortId) -> &S {
        &self.capacities[port.0]
    }

    /// `V_ℓ`.
    pub fn total(&self, port: PortId) -> &S {
        &self.totals[port.0]
    }

    /// Coflows with `p_{ℓj} > 0`, ascending.
    pub fn active(&self, port: PortId) -> &[usize] {
        &self.active[port.0]
    }

    /// Ports where coflow `j` has traffic, ascending.
    pub fn ports_of(&self, j: usize) -> &[PortId] {
        &self.ports_of[j]
    }

    pub fn is_active(&self, port: PortId, j: usize) -> bool {
        self.load[port.0][j] > S::zero()
    }

    /// `V_ℓ(A)` for the coflow set given as a membership mask.
    pub fn set_volume(&self, port: PortId, members: &[bool]) -> S {
        self.active[port.0]
            .iter()
            .filter(|&&j| members[j])
            .fold(S::zero(), |acc, &j| acc + self.load[port.0][j].clone())
    }

    /// `T_ℓ(A) = V_ℓ(A) / B_ℓ`.
    pub fn set_time(&self, port: PortId, members: &[bool]) -> S {
        self.set_volume(port, members) / self.capacities[port.0].clone()
    }

    /// `C_j^0 - r_j = max_ℓ p_{ℓj} / B_ℓ`.
    pub fn isolation_span(&self, j: usize) -> S {
        let times: Vec<S> = self.ports_of[j].iter().map(|&p| self.time(p, j)).collect();
        max_of(&times).unwrap_or_else(S::zero)
    }
}
