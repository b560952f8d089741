//! Exhaustive permutation oracles.
//!
//! Both objectives depend on a permutation only through, for each coflow, the
//! set scheduled up to and including it: the coflow placed last in a set `S`
//! sees prefix load `load(S)` on every port. A dynamic program over subsets
//! therefore covers all `N!` orders in `O(2^N · N)` steps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::DeadlineVector;
use crate::model::{Batch, PortLoads};
use crate::mps::isolation_rates;
use crate::scalar::{approx_le, Scalar};

pub const MAX_PRIMAL_COFLOWS: usize = 8;
pub const MAX_WCCT_COFLOWS: usize = 7;

/// `(S, j) -> max_{ℓ ∋ j} load_ℓ(S) / B_ℓ` for every subset `S` and member `j`.
struct SubsetTimes<S> {
    /// Indexed by subset mask, then batch position; `None` when `j ∉ S`.
    finish: Vec<Vec<Option<S>>>,
}

impl<S: Scalar> SubsetTimes<S> {
    fn new(loads: &PortLoads<S>, n: usize) -> Self {
        let ports = loads.port_count();
        let mut load: Vec<Vec<S>> = vec![vec![S::zero(); ports]; 1 << n];
        let mut finish = vec![vec![None; n]; 1 << n];
        for mask in 1usize..1 << n {
            let low = mask.trailing_zeros() as usize;
            let mut l = load[mask & (mask - 1)].clone();
            for &p in loads.ports_of(low) {
                l[p.0] = l[p.0].clone() + loads.volume(p, low).clone();
            }
            for j in (0..n).filter(|j| mask >> j & 1 == 1) {
                let mut t = S::zero();
                for &p in loads.ports_of(j) {
                    let v = l[p.0].clone() / loads.capacity(p).clone();
                    if v > t {
                        t = v;
                    }
                }
                finish[mask][j] = Some(t);
            }
            load[mask] = l;
        }
        SubsetTimes { finish }
    }

    fn at(&self, mask: usize, j: usize) -> &S {
        self.finish[mask][j].as_ref().expect("member of the subset")
    }
}

/// `min_σ max_{ℓ, k} R̃_{σ(k)} · (prefix load through σ(k) on ℓ) / B_ℓ`, over
/// ports where `σ(k)` has traffic.
pub fn brute_min_primal_slowdown<S: Scalar>(batch: &Batch<S>) -> Result<S> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if n > MAX_PRIMAL_COFLOWS {
        return Err(Error::TooLarge { what: "coflows for brute force", limit: MAX_PRIMAL_COFLOWS, got: n });
    }
    batch.require_zero_release()?;
    let loads = batch.loads();
    let rates = isolation_rates(batch, &loads);
    let times = SubsetTimes::new(&loads, n);
    let mut best: Vec<Option<S>> = vec![None; 1 << n];
    best[0] = Some(S::zero());
    for mask in 1usize..1 << n {
        for j in (0..n).filter(|j| mask >> j & 1 == 1) {
            let rest = best[mask ^ (1 << j)].clone().expect("smaller subsets come first");
            let z = rates[j].clone() * times.at(mask, j).clone();
            let v = if z > rest { z } else { rest };
            if best[mask].as_ref().map_or(true, |b| v < *b) {
                best[mask] = Some(v);
            }
        }
    }
    Ok(best[(1 << n) - 1].clone().expect("full set reached"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WcctOptimum<S> {
    /// `Σ w_j C_j` with `C_j` the largest prefix time over `j`'s ports.
    pub value: S,
    /// Optimal order as batch positions.
    pub order: Vec<usize>,
}

/// Smallest `Σ w_j C_j` over primal-feasible permutations, ports treated as
/// independent machines. `None` when no permutation meets the deadlines.
pub fn brute_opt_wcct<S: Scalar>(batch: &Batch<S>, weights: &[S], deadlines: &DeadlineVector<S>) -> Result<Option<WcctOptimum<S>>> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if n > MAX_WCCT_COFLOWS {
        return Err(Error::TooLarge { what: "coflows for brute force", limit: MAX_WCCT_COFLOWS, got: n });
    }
    for len in [weights.len(), deadlines.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    batch.require_zero_release()?;
    let loads = batch.loads();
    let times = SubsetTimes::new(&loads, n);
    // Best value of scheduling exactly the subset first, with its last coflow.
    let mut best: Vec<Option<(S, usize)>> = vec![None; 1 << n];
    let mut reachable = vec![false; 1 << n];
    reachable[0] = true;
    for mask in 1usize..1 << n {
        for j in (0..n).filter(|j| mask >> j & 1 == 1) {
            let rest = mask ^ (1 << j);
            if !reachable[rest] {
                continue;
            }
            let finish = times.at(mask, j);
            if !deadlines.get(j).map_or(true, |d| approx_le(finish, d)) {
                continue;
            }
            let before = best[rest].as_ref().map_or_else(S::zero, |(v, _)| v.clone());
            let v = before + weights[j].clone() * finish.clone();
            if best[mask].as_ref().map_or(true, |(b, _)| v < *b) {
                best[mask] = Some((v, j));
            }
            reachable[mask] = true;
        }
    }
    let full = (1 << n) - 1;
    let Some((value, _)) = best[full].clone() else {
        return Ok(None);
    };
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    while mask != 0 {
        let (_, last) = best[mask].as_ref().expect("reachable subset");
        order.push(*last);
        mask ^= 1 << last;
    }
    order.reverse();
    Ok(Some(WcctOptimum { value, order }))
}
