//! Primal-dual priority ordering under slowdown deadlines.
//!
//! The order is built back to front. At every step the unscheduled set `A`
//! picks a pivot bottleneck port `μ` and the set `F(A)` of coflows that may
//! legally finish last (their deadline covers the load of `A` on each of their
//! ports). Among the members of `F(A)` active on `μ`, the one with the smallest
//! residual-weight to processing-time ratio (Smith rule) goes last. Its ratio
//! becomes the dual value `y_{μ,F(A)}`, which is charged against the residual
//! weights of the other members of `F(A)`.
//!
//! Processing times are `p_{ℓj} / B_ℓ`, so heterogeneous capacities are handled
//! by working in time units throughout.

mod dual;
mod steer;

pub use dual::{dual_audit, parallel_bound, AuditFailure, AuditReport};
pub use steer::{steer_alpha, SteerError, Steering};

use serde::Serialize;
use thiserror::Error;

use crate::error::Error;
use crate::feasibility::{DeadlineVector, SigmaOrder};
use crate::model::{Batch, PortId, PortLoads};
use crate::scalar::{approx_le, Scalar};

/// Chooses the pivot bottleneck port for an unscheduled set.
pub trait PivotRule<S: Scalar> {
    /// `members` is the unscheduled set as a mask, `tail` its feasible tail
    /// coflows. Returns `None` only when the set carries no traffic.
    fn pivot(&self, loads: &PortLoads<S>, members: &[bool], tail: &[usize]) -> Option<PortId>;
}

/// The port with the largest remaining load time `T_ℓ(A)`; ties go to the
/// lowest port number.
#[derive(Clone, Copy, Debug, Default)]
pub struct MostCharged;

impl<S: Scalar> PivotRule<S> for MostCharged {
    fn pivot(&self, loads: &PortLoads<S>, members: &[bool], _tail: &[usize]) -> Option<PortId> {
        pivot_bottleneck(loads, members)
    }
}

pub fn pivot_bottleneck<S: Scalar>(loads: &PortLoads<S>, members: &[bool]) -> Option<PortId> {
    let mut best: Option<(S, PortId)> = None;
    for port in loads.ports() {
        let t = loads.set_time(port, members);
        if !(t > S::zero()) {
            continue;
        }
        if best.as_ref().map_or(true, |(b, _)| t > *b) {
            best = Some((t, port));
        }
    }
    best.map(|(_, p)| p)
}

/// Members `j` of the set whose deadline covers `T_ℓ(A)` on every port where `j`
/// has traffic. Ascending batch position.
pub fn tail_feasible<S: Scalar>(loads: &PortLoads<S>, members: &[bool], deadlines: &DeadlineVector<S>) -> Vec<usize> {
    let times: Vec<Option<S>> = loads
        .ports()
        .map(|p| loads.active(p).iter().any(|&j| members[j]).then(|| loads.set_time(p, members)))
        .collect();
    (0..members.len())
        .filter(|&j| members[j])
        .filter(|&j| match deadlines.get(j) {
            None => true,
            Some(d) => loads.ports_of(j).iter().all(|p| times[p.0].as_ref().map_or(true, |t| approx_le(t, d))),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualEntry<S> {
    /// Number of unscheduled coflows at this step (`k`); the pivot gets
    /// priority position `k` (1-based).
    pub step: usize,
    pub port: PortId,
    /// Feasible tail set `F_k`, batch positions.
    pub tail: Vec<usize>,
    pub value: S,
    /// Batch position of the coflow scheduled last at this step.
    pub pivot: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualCertificate<S> {
    /// One entry per step, in execution order (`k = N, N-1, ..., 1`).
    pub entries: Vec<DualEntry<S>>,
    pub weights: Vec<S>,
    pub alpha: Vec<S>,
    /// Residual weights of every coflow after each step (scheduled coflows read 0).
    pub residual_trace: Vec<Vec<S>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CofairOutput<S> {
    pub sigma: SigmaOrder<S>,
    pub certificate: DualCertificate<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InfeasibleReason {
    /// No coflow can finish last: `F_k` is empty.
    EmptyTailSet,
    /// Tail coflows exist, but none has traffic on the pivot bottleneck, so that
    /// port's last coflow misses its deadline whatever the order.
    NoTailOnBottleneck,
}

#[derive(Debug, Error)]
pub enum CofairError {
    #[error("no primal-feasible order: step {step} ({reason:?}, pivot {port:?})")]
    Infeasible { step: usize, port: Option<PortId>, reason: InfeasibleReason },
    #[error("residual weight of coflow position {coflow} went negative at step {step}")]
    NegativeResidual { step: usize, coflow: usize },
    #[error(transparent)]
    Input(#[from] Error),
}

impl CofairError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, CofairError::Infeasible { .. })
    }
}

/// Everything the ordering needs besides the pivot rule.
#[derive(Clone, Debug)]
pub struct CofairInput<'a, S> {
    pub batch: &'a Batch<S>,
    pub loads: &'a PortLoads<S>,
    pub deadlines: &'a DeadlineVector<S>,
    pub weights: Vec<S>,
    pub alpha: Vec<S>,
}

impl<'a, S: Scalar> CofairInput<'a, S> {
    /// Batch weights, zero multipliers.
    pub fn new(batch: &'a Batch<S>, loads: &'a PortLoads<S>, deadlines: &'a DeadlineVector<S>) -> Self {
        CofairInput { batch, loads, deadlines, weights: batch.weights(), alpha: vec![S::zero(); batch.len()] }
    }

    pub fn with_weights(mut self, weights: Vec<S>) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_alpha(mut self, alpha: Vec<S>) -> Self {
        self.alpha = alpha;
        self
    }

    fn validate(&self) -> Result<(), Error> {
        let n = self.batch.len();
        for len in [self.weights.len(), self.alpha.len(), self.deadlines.len(), self.loads.coflow_count()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        self.batch.require_zero_release()?;
        if let Some(j) = self.weights.iter().position(|w| !(*w > S::zero())) {
            return Err(Error::NonPositive { coflow: self.batch.coflow(j).id, what: "weight" });
        }
        if let Some(j) = self.alpha.iter().position(|a| *a < S::zero()) {
            return Err(Error::Negative { coflow: self.batch.coflow(j).id, what: "alpha" });
        }
        Ok(())
    }
}

pub fn cofair<S: Scalar>(input: &CofairInput<'_, S>) -> Result<CofairOutput<S>, CofairError> {
    cofair_with_pivot(input, &MostCharged)
}

pub fn cofair_with_pivot<S: Scalar, P: PivotRule<S>>(
    input: &CofairInput<'_, S>,
    rule: &P,
) -> Result<CofairOutput<S>, CofairError> {
    input.validate()?;
    let loads = input.loads;
    let n = input.batch.len();
    let ids = input.batch.ids();
    let mut members = vec![true; n];
    let mut residual: Vec<S> = input.weights.iter().zip(&input.alpha).map(|(w, a)| w.clone() + a.clone()).collect();
    let mut order = vec![0usize; n];
    let mut entries = Vec::with_capacity(n);
    let mut trace = Vec::with_capacity(n);

    for k in (1..=n).rev() {
        let tail = tail_feasible(loads, &members, input.deadlines);
        let port = rule.pivot(loads, &members, &tail);
        if tail.is_empty() {
            return Err(CofairError::Infeasible { step: k, port, reason: InfeasibleReason::EmptyTailSet });
        }
        let Some(mu) = port else {
            return Err(CofairError::Infeasible { step: k, port, reason: InfeasibleReason::NoTailOnBottleneck });
        };

        // Smith rule over the tail coflows that use the bottleneck.
        let mut pick: Option<(usize, S)> = None;
        for &j in &tail {
            if !loads.is_active(mu, j) {
                continue;
            }
            let ratio = residual[j].clone() / loads.time(mu, j);
            let better = match &pick {
                None => true,
                Some((b, r)) => ratio < *r || (ratio == *r && ids[j] < ids[*b]),
            };
            if better {
                pick = Some((j, ratio));
            }
        }
        let Some((pivot, y)) = pick else {
            return Err(CofairError::Infeasible { step: k, port: Some(mu), reason: InfeasibleReason::NoTailOnBottleneck });
        };

        for &j in &tail {
            if j == pivot || !loads.is_active(mu, j) {
                continue;
            }
            let next = residual[j].clone() - y.clone() * loads.time(mu, j);
            if next < S::zero() {
                if next < -S::tolerance() {
                    return Err(CofairError::NegativeResidual { step: k, coflow: j });
                }
                residual[j] = S::zero();
            } else {
                residual[j] = next;
            }
        }
        residual[pivot] = S::zero();
        members[pivot] = false;
        order[k - 1] = pivot;
        entries.push(DualEntry { step: k, port: mu, tail, value: y, pivot });
        trace.push(residual.clone());
    }

    let sigma = SigmaOrder::new(loads, order)?;
    Ok(CofairOutput {
        sigma,
        certificate: DualCertificate {
            entries,
            weights: input.weights.clone(),
            alpha: input.alpha.clone(),
            residual_trace: trace,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{deadlines, primal_feasible};
    use crate::fixtures;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn members(n: usize, set: &[usize]) -> Vec<bool> {
        let mut m = vec![false; n];
        for &j in set {
            m[j] = true;
        }
        m
    }

    #[test]
    fn pivot_examples() {
        let b = fixtures::crossing_pair::<BigRational>(3, 1);
        let loads = b.loads();
        assert_eq!(pivot_bottleneck(&loads, &[true, true]), Some(PortId(0)));
        assert_eq!(pivot_bottleneck(&loads, &members(2, &[1])), Some(PortId(0)));
        let single = fixtures::single_flow(2.0);
        assert_eq!(pivot_bottleneck(&single.loads(), &[true]), Some(PortId(0)));
        assert_eq!(pivot_bottleneck(&loads, &[false, false]), None);
    }

    #[test]
    fn tail_examples() {
        let b = fixtures::crossing_pair::<BigRational>(3, 1);
        let loads = b.loads();
        let d = deadlines(&b, &ratio(5, 3)).unwrap();
        assert_eq!(tail_feasible(&loads, &[true, true], &d), vec![0]);
        let un = DeadlineVector::unbounded(2);
        assert_eq!(tail_feasible(&loads, &[true, true], &un), vec![0, 1]);

        let b = fixtures::shared_link_pair::<BigRational>();
        let d = deadlines(&b, &ratio(5, 3)).unwrap();
        assert_eq!(tail_feasible(&b.loads(), &[true, true], &d), vec![1]);
    }

    #[test]
    fn crossing_pair_run() {
        let b = fixtures::crossing_pair::<BigRational>(3, 1);
        let loads = b.loads();
        let d = deadlines(&b, &ratio(5, 3)).unwrap();
        let out = cofair(&CofairInput::new(&b, &loads, &d)).unwrap();
        assert_eq!(out.sigma.ids(&b), vec![2, 1]);
        assert_eq!(out.sigma.bounds, vec![ratio(5, 1), ratio(2, 1)]);
        let first = &out.certificate.entries[0];
        assert_eq!((first.step, first.port, first.tail.clone(), first.pivot), (2, PortId(0), vec![0], 0));
        assert_eq!(first.value, ratio(1, 3));
        let second = &out.certificate.entries[1];
        assert_eq!(second.value, ratio(1, 2));
        assert!(primal_feasible(&loads, &out.sigma, &d));
    }

    #[test]
    fn shared_link_infeasible() {
        let b = fixtures::shared_link_pair::<BigRational>();
        let loads = b.loads();
        let d = deadlines(&b, &ratio(1, 1)).unwrap();
        match cofair(&CofairInput::new(&b, &loads, &d)) {
            Err(CofairError::Infeasible { step, reason, .. }) => {
                assert_eq!(step, 2);
                assert_eq!(reason, InfeasibleReason::EmptyTailSet);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unconstrained_is_smith_order() {
        let b = fixtures::shared_link_pair::<BigRational>();
        let loads = b.loads();
        let d = DeadlineVector::unbounded(2);
        let out = cofair(&CofairInput::new(&b, &loads, &d)).unwrap();
        assert_eq!(out.sigma.ids(&b), vec![1, 2]);
        assert_eq!(out.sigma.weighted_bound(&b.weights()), ratio(7, 1));
        // B pivots first with y = 1/3; A keeps 1 - 2/3 = 1/3 and pivots with 1/6.
        let ys: Vec<_> = out.certificate.entries.iter().map(|e| e.value.clone()).collect();
        assert_eq!(ys, vec![ratio(1, 3), ratio(1, 6)]);
        assert_eq!(out.certificate.residual_trace[0], vec![ratio(1, 3), ratio(0, 1)]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = fixtures::shared_link_pair::<f64>();
        let loads = b.loads();
        let d = DeadlineVector::unbounded(2);
        let input = CofairInput::new(&b, &loads, &d).with_alpha(vec![-1.0, 0.0]);
        assert!(matches!(cofair(&input), Err(CofairError::Input(_))));
        let input = CofairInput::new(&b, &loads, &d).with_weights(vec![0.0, 1.0]);
        assert!(matches!(cofair(&input), Err(CofairError::Input(_))));
        let input = CofairInput::new(&b, &loads, &d).with_weights(vec![1.0]);
        assert!(matches!(cofair(&input), Err(CofairError::Input(_))));
    }
}
