//! Slowdown deadlines and primal feasibility of priority orders.
//!
//! A target slowdown `E` turns into a per-coflow deadline
//! `D_j = E (C_j^0 - r_j) / φ_j`. A priority order `σ` is primal-feasible when,
//! for every position `k` and every port where `σ(k)` has traffic, the load of
//! `σ(1..=k)` on that port (in time units) does not exceed `D_{σ(k)}`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Batch, PortId, PortLoads};
use crate::mps::rate_ranking;
use crate::scalar::{approx_le, max_of, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeadlineVector<S> {
    /// Slowdown target the deadlines were derived from; `None` when unbounded.
    pub target: Option<S>,
    /// `D_j` per coflow in batch order; `None` means no deadline.
    pub deadlines: Vec<Option<S>>,
}

impl<S: Scalar> DeadlineVector<S> {
    /// No slowdown constraint at all.
    pub fn unbounded(n: usize) -> Self {
        DeadlineVector { target: None, deadlines: vec![None; n] }
    }

    pub fn len(&self) -> usize {
        self.deadlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deadlines.is_empty()
    }

    pub fn get(&self, j: usize) -> Option<&S> {
        self.deadlines[j].as_ref()
    }

    /// `value <= D_j` within tolerance (always true without a deadline).
    pub fn meets(&self, j: usize, value: &S) -> bool {
        self.deadlines[j].as_ref().map_or(true, |d| approx_le(value, d))
    }

    /// Compare two deadlines, `None` being latest.
    pub fn cmp_deadline(&self, a: usize, b: usize) -> Ordering {
        match (&self.deadlines[a], &self.deadlines[b]) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(x), Some(y)) => x.partial_cmp(y).unwrap_or(Ordering::Equal),
        }
    }
}

/// `D_j = E (C_j^0 - r_j) / φ_j` for every coflow of the batch.
pub fn deadlines<S: Scalar>(batch: &Batch<S>, target: &S) -> Result<DeadlineVector<S>> {
    if !(*target > S::zero()) {
        return Err(Error::NonPositiveParameter("target slowdown E"));
    }
    let deadlines = (0..batch.len())
        .map(|j| Some(target.clone() * batch.isolation_span_at(j) / batch.coflow(j).phi.clone()))
        .collect();
    Ok(DeadlineVector { target: Some(target.clone()), deadlines })
}

/// A priority order with its prefix completion bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaOrder<S> {
    /// `order[k]` is the batch position of the coflow with the `k`-th priority.
    pub order: Vec<usize>,
    /// `C_j` per coflow in batch order: the largest prefix load (in time) among
    /// the ports where `j` has traffic.
    pub bounds: Vec<S>,
}

impl<S: Scalar> SigmaOrder<S> {
    pub fn new(loads: &PortLoads<S>, order: Vec<usize>) -> Result<Self> {
        check_permutation(&order, loads.coflow_count())?;
        let n = order.len();
        let mut bounds = vec![S::zero(); n];
        let mut prefix: Vec<S> = vec![S::zero(); loads.port_count()];
        for &j in &order {
            for &p in loads.ports_of(j) {
                prefix[p.0] = prefix[p.0].clone() + loads.volume(p, j).clone();
            }
            let times: Vec<S> = loads
                .ports_of(j)
                .iter()
                .map(|&p| prefix[p.0].clone() / loads.capacity(p).clone())
                .collect();
            bounds[j] = max_of(&times).unwrap_or_else(S::zero);
        }
        Ok(SigmaOrder { order, bounds })
    }

    /// Order expressed with coflow ids.
    pub fn ids<T: Scalar>(&self, batch: &Batch<T>) -> Vec<usize> {
        self.order.iter().map(|&j| batch.coflows()[j].id).collect()
    }

    /// Build from coflow ids.
    pub fn from_ids<T: Scalar>(batch: &Batch<T>, loads: &PortLoads<S>, ids: &[usize]) -> Result<Self> {
        let order = ids.iter().map(|&id| batch.index_of(id)).collect::<Result<Vec<_>>>()?;
        SigmaOrder::new(loads, order)
    }

    /// Position of each coflow in the order.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (k, &j) in self.order.iter().enumerate() {
            pos[j] = k;
        }
        pos
    }

    /// `Σ w_j C_j`.
    pub fn weighted_bound(&self, weights: &[S]) -> S {
        self.bounds.iter().zip(weights).fold(S::zero(), |acc, (c, w)| acc + c.clone() * w.clone())
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::NotAPermutation(format!("expected {n} entries, got {}", order.len())));
    }
    let mut seen = vec![false; n];
    for &j in order {
        if j >= n || seen[j] {
            return Err(Error::NotAPermutation(format!("position {j} repeated or out of range")));
        }
        seen[j] = true;
    }
    Ok(())
}

/// Why an order (or every order) misses a deadline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimalViolation<S> {
    pub port: PortId,
    /// 0-based priority position of the coflow that misses its deadline.
    pub position: usize,
    /// Batch position of that coflow.
    pub coflow: usize,
    pub prefix_time: S,
    pub deadline: S,
    /// `deadline - prefix_time` (negative).
    pub slack: S,
}

/// First violation of the prefix-deadline condition, scanning positions then ports.
pub fn check_primal<S: Scalar>(
    loads: &PortLoads<S>,
    order: &[usize],
    deadlines: &DeadlineVector<S>,
) -> Result<Option<PrimalViolation<S>>> {
    check_permutation(order, loads.coflow_count())?;
    if deadlines.len() != order.len() {
        return Err(Error::LengthMismatch { expected: order.len(), got: deadlines.len() });
    }
    let mut prefix: Vec<S> = vec![S::zero(); loads.port_count()];
    for (k, &j) in order.iter().enumerate() {
        for &p in loads.ports_of(j) {
            prefix[p.0] = prefix[p.0].clone() + loads.volume(p, j).clone();
        }
        let Some(d) = deadlines.get(j) else { continue };
        for &p in loads.ports_of(j) {
            let t = prefix[p.0].clone() / loads.capacity(p).clone();
            if !approx_le(&t, d) {
                return Ok(Some(PrimalViolation {
                    port: p,
                    position: k,
                    coflow: j,
                    slack: d.clone() - t.clone(),
                    prefix_time: t,
                    deadline: d.clone(),
                }));
            }
        }
    }
    Ok(None)
}

pub fn primal_feasible<S: Scalar>(loads: &PortLoads<S>, sigma: &SigmaOrder<S>, deadlines: &DeadlineVector<S>) -> bool {
    matches!(check_primal(loads, &sigma.order, deadlines), Ok(None))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Feasibility<S> {
    Feasible(SigmaOrder<S>),
    Infeasible(PrimalViolation<S>),
}

impl<S> Feasibility<S> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn order(&self) -> Option<&SigmaOrder<S>> {
        match self {
            Feasibility::Feasible(s) => Some(s),
            Feasibility::Infeasible(_) => None,
        }
    }
}

/// Build a primal-feasible order back to front: among the unscheduled coflows,
/// the one with the latest deadline goes last (ties: the larger id goes last).
/// If that coflow cannot finish last on one of its ports, no order works.
pub fn edd_feasible_order<S: Scalar>(
    batch: &Batch<S>,
    loads: &PortLoads<S>,
    deadlines: &DeadlineVector<S>,
) -> Result<Feasibility<S>> {
    batch.require_zero_release()?;
    let n = batch.len();
    if deadlines.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: deadlines.len() });
    }
    let mut members = vec![true; n];
    let mut reversed = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let last = (0..n)
            .filter(|&j| members[j])
            .max_by(|&a, &b| deadlines.cmp_deadline(a, b).then(batch.coflow(a).id.cmp(&batch.coflow(b).id)))
            .expect("unscheduled set is non-empty");
        if let Some(d) = deadlines.get(last) {
            for &p in loads.ports_of(last) {
                let t = loads.set_time(p, &members);
                if !approx_le(&t, d) {
                    return Ok(Feasibility::Infeasible(PrimalViolation {
                        port: p,
                        position: k,
                        coflow: last,
                        slack: d.clone() - t.clone(),
                        prefix_time: t,
                        deadline: d.clone(),
                    }));
                }
            }
        }
        members[last] = false;
        reversed.push(last);
    }
    reversed.reverse();
    Ok(Feasibility::Feasible(SigmaOrder::new(loads, reversed)?))
}

/// Check the order by decreasing `R̃_j`. Primal feasibility at a given target
/// holds exactly when this order passes.
pub fn ranked_order_feasible<S: Scalar>(
    batch: &Batch<S>,
    loads: &PortLoads<S>,
    deadlines: &DeadlineVector<S>,
) -> Result<Feasibility<S>> {
    let ranking = rate_ranking(batch, loads);
    match check_primal(loads, &ranking.order, deadlines)? {
        None => Ok(Feasibility::Feasible(SigmaOrder::new(loads, ranking.order)?)),
        Some(v) => Ok(Feasibility::Infeasible(v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::PhiMode;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn ex1() -> Batch<BigRational> {
        fixtures::crossing_pair(3, 1)
    }

    #[test]
    fn deadline_examples() {
        let d = deadlines(&ex1(), &ratio(5, 3)).unwrap();
        assert_eq!(d.deadlines, vec![Some(ratio(5, 1)), Some(ratio(10, 3))]);
        let d = deadlines(&ex1().with_phi(PhiMode::Volume), &ratio(10, 1)).unwrap();
        assert_eq!(d.deadlines, vec![Some(ratio(10, 3)), Some(ratio(5, 1))]);
        let d = deadlines(&ex1(), &ratio(1, 1)).unwrap();
        assert_eq!(d.deadlines, vec![Some(ratio(3, 1)), Some(ratio(2, 1))]);
        assert!(deadlines(&ex1(), &ratio(0, 1)).is_err());
    }

    #[test]
    fn sigma_bounds() {
        let b = ex1();
        let s = SigmaOrder::new(&b.loads(), vec![1, 0]).unwrap();
        assert_eq!(s.bounds, vec![ratio(5, 1), ratio(2, 1)]);
        assert_eq!(s.ids(&b), vec![2, 1]);
        assert!(SigmaOrder::new(&b.loads(), vec![1, 1]).is_err());
        assert!(SigmaOrder::new(&b.loads(), vec![0]).is_err());
    }

    #[test]
    fn primal_examples() {
        let b = ex1();
        let loads = b.loads();
        let d = deadlines(&b, &ratio(5, 3)).unwrap();
        let good = SigmaOrder::new(&loads, vec![1, 0]).unwrap();
        assert!(primal_feasible(&loads, &good, &d));
        let bad = SigmaOrder::new(&loads, vec![0, 1]).unwrap();
        assert!(!primal_feasible(&loads, &bad, &d));
        let v = check_primal(&loads, &bad.order, &d).unwrap().unwrap();
        assert_eq!((v.position, v.coflow, v.port), (1, 1, PortId(0)));
        assert_eq!(v.prefix_time, ratio(5, 1));

        let single = fixtures::single_flow(ratio(4, 1));
        let l = single.loads();
        let d = deadlines(&single, &ratio(1, 1)).unwrap();
        assert!(primal_feasible(&l, &SigmaOrder::new(&l, vec![0]).unwrap(), &d));
    }

    #[test]
    fn edd_examples() {
        let b = ex1();
        let loads = b.loads();
        let d = deadlines(&b, &ratio(5, 3)).unwrap();
        let f = edd_feasible_order(&b, &loads, &d).unwrap();
        assert_eq!(f.order().unwrap().order, vec![1, 0]);

        let d = deadlines(&b, &ratio(3, 2)).unwrap();
        match edd_feasible_order(&b, &loads, &d).unwrap() {
            Feasibility::Infeasible(v) => {
                assert_eq!(v.port, PortId(0));
                assert_eq!(v.prefix_time, ratio(5, 1));
                assert_eq!(v.deadline, ratio(9, 2));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(!ranked_order_feasible(&b, &loads, &d).unwrap().is_feasible());
    }

    #[test]
    fn unbounded_deadlines_are_always_met() {
        let b = ex1();
        let loads = b.loads();
        let d = DeadlineVector::unbounded(2);
        assert!(edd_feasible_order(&b, &loads, &d).unwrap().is_feasible());
        assert!(check_primal(&loads, &[0, 1], &d).unwrap().is_none());
    }
}
