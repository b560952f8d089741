//! Independent verification of a dual certificate.

use serde::Serialize;
use thiserror::Error;

use super::DualCertificate;
use crate::feasibility::{check_primal, DeadlineVector, SigmaOrder};
use crate::model::{PortId, PortLoads};
use crate::scalar::Scalar;

/// `f_ℓ(S) = ½ [(Σ_{j∈S} t_{ℓj})² + Σ_{j∈S} t_{ℓj}²]` with `t = p / B`.
pub fn parallel_bound<S: Scalar>(loads: &PortLoads<S>, port: PortId, set: &[usize]) -> S {
    let mut sum = S::zero();
    let mut squares = S::zero();
    for &j in set {
        let t = loads.time(port, j);
        squares = squares + t.clone() * t.clone();
        sum = sum + t;
    }
    S::half() * (sum.clone() * sum + squares)
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport<S> {
    /// `Σ y f_μ(F) - Σ α_j D_j`; `None` when a positive multiplier sits on a
    /// coflow without deadline (the objective is unbounded below).
    pub dual_objective: Option<S>,
    /// `Σ w_j C_j` of the audited order.
    pub primal_objective: S,
    /// Largest absolute error over the dual equality constraints (0 when exact).
    pub max_constraint_error: S,
}

#[derive(Debug, Error, PartialEq)]
pub enum AuditFailure {
    #[error("certificate covers {got} coflows, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("dual constraint of coflow position {coflow}: lhs {lhs} != w + alpha = {rhs}")]
    Constraint { coflow: usize, lhs: f64, rhs: f64 },
    #[error("negative dual value {value} at step {step}")]
    NegativeDual { step: usize, value: f64 },
    #[error("audited order is not primal-feasible")]
    OrderNotFeasible,
    #[error("weak duality violated: dual {dual} > primal {primal}")]
    WeakDuality { dual: f64, primal: f64 },
}

/// Checks (a) every dual equality constraint, (b) non-negativity of every dual
/// value, and (c) weak duality against the primal-feasible order `sigma`.
///
/// For exact scalars the constraints must hold with equality; for floats the
/// error is measured relative to `max(1, w_j + α_j)`.
pub fn dual_audit<S: Scalar>(
    loads: &PortLoads<S>,
    cert: &DualCertificate<S>,
    deadlines: &DeadlineVector<S>,
    sigma: &SigmaOrder<S>,
) -> Result<AuditReport<S>, AuditFailure> {
    let n = loads.coflow_count();
    for len in [cert.weights.len(), cert.alpha.len(), deadlines.len(), sigma.bounds.len()] {
        if len != n {
            return Err(AuditFailure::Shape { expected: n, got: len });
        }
    }
    for e in &cert.entries {
        if e.value < -S::tolerance() {
            return Err(AuditFailure::NegativeDual { step: e.step, value: e.value.to_f64_value() });
        }
    }

    let mut lhs = vec![S::zero(); n];
    for e in &cert.entries {
        for &j in &e.tail {
            lhs[j] = lhs[j].clone() + e.value.clone() * loads.time(e.port, j);
        }
    }
    let mut max_err = S::zero();
    for j in 0..n {
        let rhs = cert.weights[j].clone() + cert.alpha[j].clone();
        let err = (lhs[j].clone() - rhs.clone()).abs();
        let scale = if rhs > S::one() { rhs.clone() } else { S::one() };
        let holds = if S::EXACT { err.is_zero() } else { err <= S::tolerance() * scale };
        if !holds {
            return Err(AuditFailure::Constraint { coflow: j, lhs: lhs[j].to_f64_value(), rhs: rhs.to_f64_value() });
        }
        if err > max_err {
            max_err = err;
        }
    }

    if !matches!(check_primal(loads, &sigma.order, deadlines), Ok(None)) {
        return Err(AuditFailure::OrderNotFeasible);
    }
    let primal = sigma.weighted_bound(&cert.weights);

    let mut dual = cert
        .entries
        .iter()
        .fold(S::zero(), |acc, e| acc + e.value.clone() * parallel_bound(loads, e.port, &e.tail));
    let mut bounded = true;
    for (j, a) in cert.alpha.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        match deadlines.get(j) {
            Some(d) => dual = dual - a.clone() * d.clone(),
            None => bounded = false,
        }
    }
    let dual_objective = bounded.then_some(dual);
    if let Some(d) = &dual_objective {
        let scale = if primal > S::one() { primal.clone() } else { S::one() };
        if !(*d <= primal.clone() + S::tolerance() * scale) {
            return Err(AuditFailure::WeakDuality { dual: d.to_f64_value(), primal: primal.to_f64_value() });
        }
    }
    Ok(AuditReport { dual_objective, primal_objective: primal, max_constraint_error: max_err })
}
