//! Multipliers that make the primal-dual ordering reproduce a chosen order.
//!
//! Giving the coflow that must go `k`-th a combined weight `κ w + α` that is a
//! geometric factor `γ` below the one going `(k-1)`-th makes it the strict Smith
//! minimum at its step, as long as `γ < 1 / (1 + ρ)` where `ρ` is the spread
//! between the largest and smallest processing times. `κ` is then chosen small
//! enough that the original weights cannot disturb the chain.

use serde::Serialize;
use thiserror::Error;

use super::{cofair_with_pivot, tail_feasible, CofairError, CofairInput, MostCharged, PivotRule};
use crate::error::Error;
use crate::feasibility::{check_primal, DeadlineVector, SigmaOrder};
use crate::model::{Batch, PortId, PortLoads};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize)]
pub struct Steering<S> {
    pub alpha: Vec<S>,
    pub kappa: S,
}

#[derive(Debug, Error)]
pub enum SteerError {
    #[error("target order is not primal-feasible")]
    TargetInfeasible,
    #[error("step {step}: coflow position {coflow} has no traffic on pivot {port}, no multiplier can select it")]
    OffBottleneck { step: usize, coflow: usize, port: PortId },
    #[error("numerical margins collapsed: rerun produced a different order")]
    MarginCollapse,
    #[error(transparent)]
    Cofair(#[from] CofairError),
    #[error(transparent)]
    Input(#[from] Error),
}

/// Find `(α, κ)` with `max α = 1` and `κ ≤ 1` such that the ordering run on
/// weights `κ w` and multipliers `α` outputs `target`. The result is verified
/// by rerunning the ordering.
pub fn steer_alpha<S: Scalar>(
    batch: &Batch<S>,
    loads: &PortLoads<S>,
    target: &SigmaOrder<S>,
    deadlines: &DeadlineVector<S>,
    weights: &[S],
) -> Result<Steering<S>, SteerError> {
    steer_alpha_with_pivot(batch, loads, target, deadlines, weights, &MostCharged)
}

pub fn steer_alpha_with_pivot<S: Scalar, P: PivotRule<S>>(
    batch: &Batch<S>,
    loads: &PortLoads<S>,
    target: &SigmaOrder<S>,
    deadlines: &DeadlineVector<S>,
    weights: &[S],
    rule: &P,
) -> Result<Steering<S>, SteerError> {
    let n = batch.len();
    if weights.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: weights.len() }.into());
    }
    if check_primal(loads, &target.order, deadlines)?.is_some() {
        return Err(SteerError::TargetInfeasible);
    }

    // The pivot port of each step depends only on the unscheduled set, which
    // the target fixes. Every target coflow must use its step's pivot.
    let mut members = vec![true; n];
    for k in (1..=n).rev() {
        let j = target.order[k - 1];
        let tail = tail_feasible(loads, &members, deadlines);
        let port = rule.pivot(loads, &members, &tail).expect("non-empty set carries traffic");
        if !loads.is_active(port, j) {
            return Err(SteerError::OffBottleneck { step: k, coflow: j, port });
        }
        members[j] = false;
    }

    let times: Vec<S> = loads
        .ports()
        .flat_map(|p| loads.active(p).iter().map(move |&j| (p, j)))
        .map(|(p, j)| loads.time(p, j))
        .collect();
    let mut tmin = times[0].clone();
    let mut tmax = times[0].clone();
    for t in &times {
        if *t < tmin {
            tmin = t.clone();
        }
        if *t > tmax {
            tmax = t.clone();
        }
    }
    let spread = tmax / tmin;
    let two = S::one() + S::one();
    let gamma = S::one() / (two.clone() * (S::one() + spread.clone()));

    let mut alpha = vec![S::zero(); n];
    let mut level = S::one();
    for &j in &target.order {
        alpha[j] = level.clone();
        level = level * gamma.clone();
    }
    // `level` is now γ^n.
    let wmax = weights.iter().skip(1).fold(weights[0].clone(), |m, w| if *w > m { w.clone() } else { m });
    let mut kappa = level / (two * spread * S::from_count(n) * wmax);
    if kappa > S::one() {
        kappa = S::one();
    }

    let scaled: Vec<S> = weights.iter().map(|w| w.clone() * kappa.clone()).collect();
    let input = CofairInput::new(batch, loads, deadlines).with_weights(scaled).with_alpha(alpha.clone());
    let out = cofair_with_pivot(&input, rule)?;
    if out.sigma.order != target.order {
        return Err(SteerError::MarginCollapse);
    }
    Ok(Steering { alpha, kappa })
}
