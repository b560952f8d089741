//! Fairness and efficiency metrics over simulated completion times.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Batch;
use crate::scalar::{approx_le, sum_of, Scalar};

/// `Ê_j = φ_j (Ĉ_j - r_j) / (C_j^0 - r_j)`.
pub fn experimental_slowdown<S: Scalar>(cct: &S, isolation: &S, release: &S, phi: &S) -> Result<S> {
    let span = isolation.clone() - release.clone();
    if !(span > S::zero()) {
        return Err(Error::NonPositiveParameter("isolation time minus release"));
    }
    Ok(phi.clone() * (cct.clone() - release.clone()) / span)
}

/// Per-coflow `max(0, Ê_j / E - 1)` and their sum. Float excesses within the
/// tolerance count as zero.
pub fn stretch_index<S: Scalar>(slowdowns: &[S], target: &S) -> Result<(Vec<S>, S)> {
    if !(*target > S::zero()) {
        return Err(Error::NonPositiveParameter("target slowdown E"));
    }
    let per: Vec<S> = slowdowns
        .iter()
        .map(|e| {
            let excess = e.clone() / target.clone() - S::one();
            if excess > S::tolerance() { excess } else { S::zero() }
        })
        .collect();
    let total = sum_of(&per);
    Ok((per, total))
}

/// Jain's fairness index `(Σ R)^2 / (K Σ R^2)`.
pub fn jain_index<S: Scalar>(rates: &[S]) -> Result<S> {
    if rates.is_empty() {
        return Err(Error::Empty("progress rates"));
    }
    if rates.iter().any(|r| !(*r > S::zero())) {
        return Err(Error::NonPositiveParameter("progress rate"));
    }
    let sum = sum_of(rates);
    let sq = rates.iter().fold(S::zero(), |acc, r| acc + r.clone() * r.clone());
    Ok(sum.clone() * sum / (S::from_count(rates.len()) * sq))
}

/// `Σ w_j Ĉ_j`.
pub fn weighted_cct<S: Scalar>(ccts: &[S], weights: &[S]) -> Result<S> {
    if ccts.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: ccts.len(), got: weights.len() });
    }
    Ok(ccts.iter().zip(weights).fold(S::zero(), |acc, (c, w)| acc + c.clone() * w.clone()))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoflowOutcome<S> {
    pub id: usize,
    pub cct: S,
    pub isolation: S,
    pub slowdown: S,
    /// Average service rate `V_j / (Ĉ_j - r_j)`.
    pub progress: S,
    pub stretch: S,
    pub violated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutcomeReport<S> {
    pub target: S,
    pub coflows: Vec<CoflowOutcome<S>>,
    pub weighted_cct: S,
    pub stretch_sum: S,
    pub jain: S,
    pub violation_fraction: f64,
}

impl<S: Scalar> OutcomeReport<S> {
    /// Build a report from per-coflow completion times (batch order) against the
    /// slowdown target `target`. A coflow violates when `Ê_j > E` beyond tolerance.
    pub fn new(batch: &Batch<S>, ccts: &[S], target: &S) -> Result<Self> {
        if ccts.len() != batch.len() {
            return Err(Error::LengthMismatch { expected: batch.len(), got: ccts.len() });
        }
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut slowdowns = Vec::with_capacity(batch.len());
        let mut progress = Vec::with_capacity(batch.len());
        let mut isolation = Vec::with_capacity(batch.len());
        for (j, c) in batch.coflows().iter().enumerate() {
            let c0 = batch.isolation_cct_at(j);
            if !approx_le(&c0, &ccts[j]) {
                return Err(Error::BeatsIsolation {
                    coflow: c.id,
                    cct: ccts[j].to_f64_value(),
                    isolation: c0.to_f64_value(),
                });
            }
            let e = experimental_slowdown(&ccts[j], &c0, &c.release, &c.phi).map_err(|_| Error::DegenerateCoflow(c.id))?;
            slowdowns.push(e);
            progress.push(c.volume() / (ccts[j].clone() - c.release.clone()));
            isolation.push(c0);
        }
        let (stretch, stretch_sum) = stretch_index(&slowdowns, target)?;
        let weighted = weighted_cct(ccts, &batch.weights())?;
        let jain = jain_index(&progress)?;
        let coflows: Vec<CoflowOutcome<S>> = batch
            .coflows()
            .iter()
            .enumerate()
            .map(|(j, c)| CoflowOutcome {
                id: c.id,
                cct: ccts[j].clone(),
                isolation: isolation[j].clone(),
                violated: !approx_le(&slowdowns[j], target),
                slowdown: slowdowns[j].clone(),
                progress: progress[j].clone(),
                stretch: stretch[j].clone(),
            })
            .collect();
        let violations = coflows.iter().filter(|c| c.violated).count();
        Ok(OutcomeReport {
            target: target.clone(),
            violation_fraction: violations as f64 / coflows.len() as f64,
            coflows,
            weighted_cct: weighted,
            stretch_sum,
            jain,
        })
    }

    /// One CSV row per coflow.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["coflow", "cct", "isolation", "slowdown", "progress", "stretch", "violated"])?;
        for c in &self.coflows {
            w.write_record([
                c.id.to_string(),
                c.cct.to_f64_value().to_string(),
                c.isolation.to_f64_value().to_string(),
                c.slowdown.to_f64_value().to_string(),
                c.progress.to_f64_value().to_string(),
                c.stretch.to_f64_value().to_string(),
                c.violated.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Batch-level summary as JSON.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "target": self.target.to_f64_value(),
            "coflows": self.coflows.len(),
            "weighted_cct": self.weighted_cct.to_f64_value(),
            "stretch_sum": self.stretch_sum.to_f64_value(),
            "jain": self.jain.to_f64_value(),
            "violation_fraction": self.violation_fraction,
        })
    }
}
