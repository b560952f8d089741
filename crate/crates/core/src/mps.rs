//! Minimum primal slowdown.
//!
//! Sort coflows by decreasing isolation rate `R̃_j = φ_j / C_j^0`, then on each
//! port take the largest `R̃_j · (prefix load through j) / B_ℓ` over the coflows
//! active there. The maximum over ports is `E^p`, the smallest slowdown target
//! for which some priority order meets every prefix deadline.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Batch, PortId, PortLoads};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize)]
pub struct RateRanking<S> {
    /// `R̃_j` per coflow, batch order.
    pub rates: Vec<S>,
    /// Coflow positions by decreasing `R̃_j`, ties by ascending coflow id.
    pub order: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MpsResult<S> {
    pub slowdown: S,
    /// Port achieving the maximum estimate.
    pub bottleneck: PortId,
    pub ranking: RateRanking<S>,
}

/// `R̃_j = φ_j / (C_j^0 - r_j)`.
pub fn isolation_rates<S: Scalar>(batch: &Batch<S>, loads: &PortLoads<S>) -> Vec<S> {
    (0..batch.len()).map(|j| batch.coflow(j).phi.clone() / loads.isolation_span(j)).collect()
}

pub fn rate_ranking<S: Scalar>(batch: &Batch<S>, loads: &PortLoads<S>) -> RateRanking<S> {
    let rates = isolation_rates(batch, loads);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| {
        rates[b]
            .partial_cmp(&rates[a])
            .unwrap_or(Ordering::Equal)
            .then(batch.coflow(a).id.cmp(&batch.coflow(b).id))
    });
    RateRanking { rates, order }
}

pub fn mps<S: Scalar>(batch: &Batch<S>) -> Result<MpsResult<S>> {
    let loads = batch.loads();
    mps_with_loads(batch, &loads)
}

pub fn mps_with_loads<S: Scalar>(batch: &Batch<S>, loads: &PortLoads<S>) -> Result<MpsResult<S>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    batch.require_zero_release()?;
    let ranking = rate_ranking(batch, loads);
    let mut best: Option<(S, PortId)> = None;
    for port in loads.ports() {
        let cap = loads.capacity(port).clone();
        let mut prefix = S::zero();
        for &j in &ranking.order {
            let p = loads.volume(port, j);
            if !(*p > S::zero()) {
                continue;
            }
            prefix = prefix + p.clone();
            let z = ranking.rates[j].clone() * prefix.clone() / cap.clone();
            if best.as_ref().map_or(true, |(b, _)| z > *b) {
                best = Some((z, port));
            }
        }
    }
    let (slowdown, bottleneck) = best.expect("non-empty batch has at least one active port");
    Ok(MpsResult { slowdown, bottleneck, ranking })
}
