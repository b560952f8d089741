//! Fluid, event-driven simulation of a σ-order greedy scheduler.
//!
//! Between two events every released, unfinished flow gets a constant rate.
//! Rates are granted by scanning coflows in priority order and, inside a
//! coflow, flows by index; each flow takes what is left on both its ports.
//! Events are flow completions and coflow releases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::check_permutation;
use crate::metrics::OutcomeReport;
use crate::model::Batch;
use crate::scalar::Scalar;

/// How a coflow splits the capacity left to it among its own flows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraCoflowPolicy {
    /// Lowest flow index first, each flow greedy.
    #[default]
    FlowIdOrder,
    /// Max-min fair split of the residual capacity among the coflow's flows.
    MaxMin,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SimConfig {
    pub policy: IntraCoflowPolicy,
    pub record_trace: bool,
}

/// Rate of one flow during an interval. `coflow` is the coflow id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowRate<S> {
    pub coflow: usize,
    pub flow: usize,
    pub rate: S,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceInterval<S> {
    pub start: S,
    pub end: S,
    /// Flows with a positive rate only.
    pub rates: Vec<FlowRate<S>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimOutcome<S> {
    /// Completion time per coflow, batch order.
    pub ccts: Vec<S>,
    pub trace: Option<Vec<TraceInterval<S>>>,
}

/// Mutable simulation state.
#[derive(Clone, Debug)]
pub struct SimState<S> {
    pub clock: S,
    /// `[coflow][flow]` remaining volume, batch order.
    pub remaining: Vec<Vec<S>>,
    pub released: Vec<bool>,
    pub finished: Vec<bool>,
}

impl<S: Scalar> SimState<S> {
    pub fn new(batch: &Batch<S>) -> Self {
        let remaining = batch.coflows().iter().map(|c| c.flows.iter().map(|f| f.volume.clone()).collect()).collect();
        let mut state = SimState {
            clock: S::zero(),
            remaining,
            released: vec![false; batch.len()],
            finished: vec![false; batch.len()],
        };
        state.release_due(batch);
        state
    }

    fn release_due(&mut self, batch: &Batch<S>) {
        for (j, c) in batch.coflows().iter().enumerate() {
            if !self.released[j] && c.release <= self.clock {
                self.released[j] = true;
            }
        }
    }

    fn next_release(&self, batch: &Batch<S>) -> Option<S> {
        batch
            .coflows()
            .iter()
            .enumerate()
            .filter(|(j, _)| !self.released[*j])
            .map(|(_, c)| c.release.clone())
            .fold(None, |m: Option<S>, r| match m {
                Some(x) if x <= r => Some(x),
                _ => Some(r),
            })
    }

    fn pending(&self, j: usize) -> bool {
        self.released[j] && !self.finished[j]
    }
}

/// One allocation pass: `[coflow][flow]` rates for the current state.
pub fn rate_step<S: Scalar>(batch: &Batch<S>, state: &SimState<S>, order: &[usize], policy: IntraCoflowPolicy) -> Vec<Vec<S>> {
    let fabric = batch.fabric();
    let mut residual: Vec<S> = fabric.capacities().to_vec();
    let mut rates: Vec<Vec<S>> = batch.coflows().iter().map(|c| vec![S::zero(); c.flows.len()]).collect();
    for &j in order {
        if !state.pending(j) {
            continue;
        }
        let flows = &batch.coflow(j).flows;
        let live: Vec<usize> = (0..flows.len()).filter(|&i| state.remaining[j][i] > S::zero()).collect();
        match policy {
            IntraCoflowPolicy::FlowIdOrder => {
                for i in live {
                    let (a, b) = (flows[i].ingress.0, flows[i].egress.0);
                    let r = if residual[a] < residual[b] { residual[a].clone() } else { residual[b].clone() };
                    if !positive(&r, fabric.capacity(flows[i].ingress)) {
                        continue;
                    }
                    residual[a] = clamp(residual[a].clone() - r.clone());
                    residual[b] = clamp(residual[b].clone() - r.clone());
                    rates[j][i] = r;
                }
            }
            IntraCoflowPolicy::MaxMin => {
                let ends: Vec<(usize, usize)> = live.iter().map(|&i| (flows[i].ingress.0, flows[i].egress.0)).collect();
                let share = water_fill(&ends, &mut residual);
                for (k, i) in live.into_iter().enumerate() {
                    rates[j][i] = share[k].clone();
                }
            }
        }
    }
    rates
}

fn clamp<S: Scalar>(v: S) -> S {
    if v <= S::tolerance() { S::zero() } else { v }
}

fn positive<S: Scalar>(r: &S, scale: &S) -> bool {
    if S::EXACT { *r > S::zero() } else { *r > S::tolerance() * scale.clone() }
}

/// Progressive filling over flows given as `(ingress, egress)` port pairs.
/// Consumes the granted rates from `residual`.
fn water_fill<S: Scalar>(ends: &[(usize, usize)], residual: &mut [S]) -> Vec<S> {
    let mut rate = vec![S::zero(); ends.len()];
    let mut frozen: Vec<bool> = ends.iter().map(|&(a, b)| residual[a].is_zero() || residual[b].is_zero()).collect();
    loop {
        let mut users = vec![0usize; residual.len()];
        for (k, &(a, b)) in ends.iter().enumerate() {
            if !frozen[k] {
                users[a] += 1;
                users[b] += 1;
            }
        }
        let level = users
            .iter()
            .enumerate()
            .filter(|(_, &u)| u > 0)
            .map(|(p, &u)| residual[p].clone() / S::from_count(u))
            .fold(None, |m: Option<S>, x| match m {
                Some(y) if y <= x => Some(y),
                _ => Some(x),
            });
        let Some(level) = level else { break };
        for (k, &(a, b)) in ends.iter().enumerate() {
            if !frozen[k] {
                rate[k] = rate[k].clone() + level.clone();
                residual[a] = clamp(residual[a].clone() - level.clone());
                residual[b] = clamp(residual[b].clone() - level.clone());
            }
        }
        for (k, &(a, b)) in ends.iter().enumerate() {
            if residual[a].is_zero() || residual[b].is_zero() {
                frozen[k] = true;
            }
        }
    }
    rate
}

/// Run the greedy scheduler for priority `order` (batch positions, first =
/// highest priority) until every coflow finishes.
pub fn simulate_order<S: Scalar>(batch: &Batch<S>, order: &[usize], config: SimConfig) -> Result<SimOutcome<S>> {
    check_permutation(order, batch.len())?;
    let mut state = SimState::new(batch);
    let mut ccts = vec![S::zero(); batch.len()];
    let mut trace = config.record_trace.then(Vec::new);
    let mut left = batch.len();
    while left > 0 {
        let rates = rate_step(batch, &state, order, config.policy);
        let mut dt: Option<S> = None;
        for (j, row) in rates.iter().enumerate() {
            for (i, r) in row.iter().enumerate() {
                if *r > S::zero() {
                    let t = state.remaining[j][i].clone() / r.clone();
                    if dt.as_ref().map_or(true, |d| t < *d) {
                        dt = Some(t);
                    }
                }
            }
        }
        if let Some(release) = state.next_release(batch) {
            let t = release - state.clock.clone();
            if dt.as_ref().map_or(true, |d| t < *d) {
                dt = Some(t);
            }
        }
        let dt = dt.ok_or_else(|| Error::Stalled(state.clock.to_f64_value()))?;
        let end = state.clock.clone() + dt.clone();
        if let Some(tr) = trace.as_mut() {
            let mut active = Vec::new();
            for (j, row) in rates.iter().enumerate() {
                for (i, r) in row.iter().enumerate() {
                    if *r > S::zero() {
                        active.push(FlowRate { coflow: batch.coflow(j).id, flow: i, rate: r.clone() });
                    }
                }
            }
            tr.push(TraceInterval { start: state.clock.clone(), end: end.clone(), rates: active });
        }
        for (j, row) in rates.iter().enumerate() {
            for (i, r) in row.iter().enumerate() {
                if *r > S::zero() {
                    let rem = state.remaining[j][i].clone() - r.clone() * dt.clone();
                    let scale = batch.coflow(j).flows[i].volume.clone();
                    let done = if S::EXACT { rem <= S::zero() } else { rem <= S::tolerance() * (S::one() + scale) };
                    state.remaining[j][i] = if done { S::zero() } else { rem };
                }
            }
        }
        state.clock = end;
        for j in 0..batch.len() {
            if state.pending(j) && state.remaining[j].iter().all(|v| v.is_zero()) {
                state.finished[j] = true;
                ccts[j] = state.clock.clone();
                left -= 1;
            }
        }
        state.release_due(batch);
    }
    Ok(SimOutcome { ccts, trace })
}

/// Simulate and score against slowdown target `target`.
pub fn simulate<S: Scalar>(batch: &Batch<S>, order: &[usize], target: &S) -> Result<OutcomeReport<S>> {
    let out = simulate_order(batch, order, SimConfig::default())?;
    OutcomeReport::new(batch, &out.ccts, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        ratio(n, 1)
    }

    #[test]
    fn single_flow_runs_at_full_rate() {
        let b = fixtures::single_flow(ratio(7, 2));
        let out = simulate_order(&b, &[0], SimConfig::default()).unwrap();
        assert_eq!(out.ccts, vec![ratio(7, 2)]);
    }

    #[test]
    fn crossing_pair_trace() {
        let b = fixtures::crossing_pair::<BigRational>(3, 1);
        let cfg = SimConfig { record_trace: true, ..Default::default() };
        let out = simulate_order(&b, &[1, 0], cfg).unwrap();
        assert_eq!(out.ccts, vec![q(5), q(2)]);
        let trace = out.trace.unwrap();
        let spans: Vec<_> = trace.iter().map(|t| (t.start.clone(), t.end.clone())).collect();
        assert_eq!(spans, vec![(q(0), q(1)), (q(1), q(2)), (q(2), q(5))]);
        let flows = |k: usize| trace[k].rates.iter().map(|r| (r.coflow, r.flow)).collect::<Vec<_>>();
        assert_eq!(flows(0), vec![(2, 0), (2, 2)]);
        assert_eq!(flows(1), vec![(2, 1), (2, 3)]);
        assert_eq!(flows(2), vec![(1, 0), (1, 1), (1, 2)]);
        assert!(trace.iter().all(|t| t.rates.iter().all(|r| r.rate == q(1))));
    }

    #[test]
    fn crossing_pair_report() {
        let b = fixtures::crossing_pair::<BigRational>(3, 1);
        let report = simulate(&b, &[1, 0], &ratio(5, 3)).unwrap();
        let e: Vec<_> = report.coflows.iter().map(|c| c.slowdown.clone()).collect();
        assert_eq!(e, vec![ratio(5, 3), q(1)]);
        assert_eq!(report.stretch_sum, q(0));
    }

    #[test]
    fn late_release_waits() {
        let b = fixtures::shared_link_pair::<BigRational>().with_releases(&[q(0), q(4)]).unwrap();
        let out = simulate_order(&b, &[0, 1], SimConfig::default()).unwrap();
        assert_eq!(out.ccts, vec![q(2), q(7)]);
    }

    #[test]
    fn release_preempts_lower_priority() {
        let b = fixtures::shared_link_pair::<BigRational>().with_releases(&[q(1), q(0)]).unwrap();
        let out = simulate_order(&b, &[0, 1], SimConfig::default()).unwrap();
        // B runs [0,1), A takes over [1,3), B resumes [3,5).
        assert_eq!(out.ccts, vec![q(3), q(5)]);
    }

    #[test]
    fn same_coflow_flows_share_ingress_in_index_order() {
        use crate::model::{Coflow, Fabric, Flow, PortId};
        let fabric = Fabric::<BigRational>::new(2).unwrap();
        let c = Coflow::new(1, vec![Flow::new(PortId(0), PortId(2), q(1)), Flow::new(PortId(0), PortId(3), q(1))]);
        let b = Batch::new(fabric, vec![c]).unwrap();
        let state = SimState::new(&b);
        let r = rate_step(&b, &state, &[0], IntraCoflowPolicy::FlowIdOrder);
        assert_eq!(r[0], vec![q(1), q(0)]);
        let r = rate_step(&b, &state, &[0], IntraCoflowPolicy::MaxMin);
        assert_eq!(r[0], vec![ratio(1, 2), ratio(1, 2)]);
        let out = simulate_order(&b, &[0], SimConfig { policy: IntraCoflowPolicy::MaxMin, record_trace: false }).unwrap();
        assert_eq!(out.ccts, vec![q(2)]);
    }

    #[test]
    fn bad_order_is_rejected() {
        let b = fixtures::shared_link_pair::<f64>();
        assert!(simulate_order(&b, &[0], SimConfig::default()).is_err());
        assert!(simulate_order(&b, &[0, 0], SimConfig::default()).is_err());
    }

    #[test]
    fn float_matches_exact() {
        let b = fixtures::crossing_pair::<f64>(3, 1);
        let out = simulate_order(&b, &[1, 0], SimConfig::default()).unwrap();
        assert!((out.ccts[0] - 5.0).abs() < 1e-9 && (out.ccts[1] - 2.0).abs() < 1e-9);
    }
}
