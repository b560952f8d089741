//! Slotted feasibility LP for a slowdown target and the search for its
//! smallest feasible target.
//!
//! Slot `t ≥ 1` covers `[(t-1)Δ, tΔ]`. Flow `i` of coflow `j` may send in slot
//! `t` when `(t-1)Δ ≥ r_j` and `tΔ ≤ r_j + D_j`. Variables are volumes
//! `u = v·x`, so every coefficient is 0 or 1. Consecutive slots that admit the
//! same set of flows are merged into one block with capacity `B_ℓ Δ` times its
//! length: spreading a block solution evenly over its slots recovers a per-slot
//! solution, so the merge does not change feasibility.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::simplex::{LinearProgram, LpStatus, Relation};
use crate::error::{Error, Result};
use crate::feasibility::deadlines;
use crate::model::{Batch, PortId};
use crate::scalar::Scalar;

/// Largest number of LP variables accepted.
pub const MAX_VARIABLES: usize = 5000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Aggregation {
    /// One column per flow and slot.
    PerSlot,
    /// One column per flow and block of slots with identical windows.
    #[default]
    Blocks,
}

/// Half-open slot range `[first, last]` (1-based, inclusive).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlotBlock {
    pub first: u64,
    pub last: u64,
}

impl SlotBlock {
    pub fn len(&self) -> u64 {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

#[derive(Clone, Debug)]
struct Column {
    coflow: usize,
    flow: usize,
    block: usize,
}

/// The feasibility LP for one `(batch, E, Δ)`.
#[derive(Clone, Debug)]
pub struct TimeIndexedLp {
    pub slot: BigRational,
    /// Allowed slot window per coflow; `None` when the window is empty.
    pub windows: Vec<Option<SlotBlock>>,
    pub blocks: Vec<SlotBlock>,
    columns: Vec<Column>,
    program: LinearProgram,
    /// `true` when some coflow has an empty window.
    trivially_infeasible: bool,
}

/// Volumes per flow and block from a feasible solve.
#[derive(Clone, Debug)]
pub struct SlotSchedule {
    pub blocks: Vec<SlotBlock>,
    /// `(coflow position, flow index, block index, volume)`.
    pub assignments: Vec<(usize, usize, usize, BigRational)>,
}

fn floor_int(x: &BigRational) -> i64 {
    x.floor().to_integer().to_i64().expect("slot index fits in i64")
}

fn ceil_int(x: &BigRational) -> i64 {
    x.ceil().to_integer().to_i64().expect("slot index fits in i64")
}

impl TimeIndexedLp {
    pub fn build(batch: &Batch<BigRational>, target: &BigRational, slot: &BigRational, aggregation: Aggregation) -> Result<Self> {
        if !slot.is_positive() {
            return Err(Error::NonPositiveParameter("slot duration"));
        }
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let dl = deadlines(batch, target)?;
        let mut windows = Vec::with_capacity(batch.len());
        let mut trivially_infeasible = false;
        for (j, c) in batch.coflows().iter().enumerate() {
            let first = ceil_int(&(&c.release / slot)) + 1;
            let end = &c.release + dl.get(j).expect("finite target gives finite deadlines");
            let last = floor_int(&(end / slot));
            if last < first {
                trivially_infeasible = true;
                windows.push(None);
            } else {
                windows.push(Some(SlotBlock { first: first as u64, last: last as u64 }));
            }
        }

        let blocks = match aggregation {
            Aggregation::Blocks => {
                let mut cuts: Vec<u64> = windows.iter().flatten().flat_map(|w| [w.first, w.last + 1]).collect();
                cuts.sort_unstable();
                cuts.dedup();
                cuts.windows(2).map(|w| SlotBlock { first: w[0], last: w[1] - 1 }).collect::<Vec<_>>()
            }
            Aggregation::PerSlot => {
                let count: u64 = windows
                    .iter()
                    .zip(batch.coflows())
                    .filter_map(|(w, c)| w.as_ref().map(|w| w.len() * c.flows.len() as u64))
                    .sum();
                if count > MAX_VARIABLES as u64 {
                    return Err(Error::TooLarge { what: "time-indexed LP variables", limit: MAX_VARIABLES, got: count as usize });
                }
                let lo = windows.iter().flatten().map(|w| w.first).min().unwrap_or(1);
                let hi = windows.iter().flatten().map(|w| w.last).max().unwrap_or(0);
                (lo..=hi).map(|t| SlotBlock { first: t, last: t }).collect()
            }
        };

        let mut columns = Vec::new();
        let mut by_block: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
        for (j, c) in batch.coflows().iter().enumerate() {
            let Some(w) = &windows[j] else { continue };
            for i in 0..c.flows.len() {
                for (b, blk) in blocks.iter().enumerate() {
                    if blk.first >= w.first && blk.last <= w.last {
                        by_block[b].push(columns.len());
                        columns.push(Column { coflow: j, flow: i, block: b });
                    }
                }
            }
        }
        if columns.len() > MAX_VARIABLES {
            return Err(Error::TooLarge { what: "time-indexed LP variables", limit: MAX_VARIABLES, got: columns.len() });
        }

        let mut program = LinearProgram::new(columns.len());
        let one = BigRational::one();
        // Completion: each flow ships its whole volume inside its window.
        let mut per_flow: Vec<Vec<Vec<usize>>> = batch.coflows().iter().map(|c| vec![Vec::new(); c.flows.len()]).collect();
        for (k, col) in columns.iter().enumerate() {
            per_flow[col.coflow][col.flow].push(k);
        }
        for (j, c) in batch.coflows().iter().enumerate() {
            if windows[j].is_none() {
                continue;
            }
            for (i, f) in c.flows.iter().enumerate() {
                let terms = per_flow[j][i].iter().map(|&k| (k, one.clone())).collect();
                program.add(terms, Relation::Eq, f.volume.clone());
            }
        }
        // Capacity per port and block, skipped when it cannot bind.
        let fabric = batch.fabric();
        for (b, blk) in blocks.iter().enumerate() {
            let cap_scale = slot * BigRational::from_integer(blk.len().into());
            for port in fabric.ports() {
                let mut terms = Vec::new();
                let mut reach = BigRational::zero();
                for &k in &by_block[b] {
                    let col = &columns[k];
                    let f = &batch.coflow(col.coflow).flows[col.flow];
                    if f.ingress == port || f.egress == port {
                        terms.push((k, one.clone()));
                        reach = reach + &f.volume;
                    }
                }
                let cap = fabric.capacity(port) * &cap_scale;
                if reach > cap {
                    program.add(terms, Relation::Le, cap);
                }
            }
        }
        Ok(TimeIndexedLp { slot: slot.clone(), windows, blocks, columns, program, trivially_infeasible })
    }

    pub fn variables(&self) -> usize {
        self.columns.len()
    }

    pub fn rows(&self) -> usize {
        self.program.constraints.len()
    }

    /// Solve; `Some(schedule)` when feasible.
    pub fn solve(&self) -> Option<SlotSchedule> {
        if self.trivially_infeasible {
            return None;
        }
        match self.program.solve() {
            LpStatus::Optimal { x, .. } => {
                let assignments = self
                    .columns
                    .iter()
                    .zip(x)
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(c, v)| (c.coflow, c.flow, c.block, v))
                    .collect();
                Some(SlotSchedule { blocks: self.blocks.clone(), assignments })
            }
            LpStatus::Infeasible => None,
            LpStatus::Unbounded => unreachable!("zero objective cannot be unbounded"),
        }
    }
}

impl SlotSchedule {
    /// Replay slot by slot: every flow completes inside its window and no port
    /// exceeds `B_ℓ Δ` in any slot. Block volumes are spread evenly.
    pub fn verify(&self, batch: &Batch<BigRational>, lp: &TimeIndexedLp) -> std::result::Result<(), String> {
        let mut shipped: Vec<Vec<BigRational>> = batch.coflows().iter().map(|c| vec![BigRational::zero(); c.flows.len()]).collect();
        let ports = batch.fabric().port_count();
        for (b, blk) in self.blocks.iter().enumerate() {
            let len = BigRational::from_integer(blk.len().into());
            let mut per_port = vec![BigRational::zero(); ports];
            for (j, i, bb, v) in &self.assignments {
                if *bb != b {
                    continue;
                }
                if v.is_negative() {
                    return Err(format!("negative volume for coflow {} flow {i}", batch.coflow(*j).id));
                }
                let w = lp.windows[*j].as_ref().ok_or("assignment for a coflow with no window")?;
                if blk.first < w.first || blk.last > w.last {
                    return Err(format!("coflow {} sends outside its window", batch.coflow(*j).id));
                }
                let f = &batch.coflow(*j).flows[*i];
                let per_slot = v / &len;
                per_port[f.ingress.0] = &per_port[f.ingress.0] + &per_slot;
                per_port[f.egress.0] = &per_port[f.egress.0] + &per_slot;
                shipped[*j][*i] = &shipped[*j][*i] + v;
            }
            for (p, used) in per_port.iter().enumerate() {
                let cap = batch.fabric().capacity(PortId(p)) * &lp.slot;
                if *used > cap {
                    return Err(format!("{} over capacity in slots {}..={}", PortId(p), blk.first, blk.last));
                }
            }
        }
        for (j, c) in batch.coflows().iter().enumerate() {
            for (i, f) in c.flows.iter().enumerate() {
                if shipped[j][i] != f.volume {
                    return Err(format!("coflow {} flow {i} ships {} of {}", c.id, shipped[j][i], f.volume));
                }
            }
        }
        Ok(())
    }
}

/// Feasibility of slowdown target `target` at slot length `slot`. The batch
/// carries `φ_j`; deadlines round down to whole slots.
pub fn lp_feasible(batch: &Batch<BigRational>, target: &BigRational, slot: &BigRational) -> Result<bool> {
    Ok(TimeIndexedLp::build(batch, target, slot, Aggregation::Blocks)?.solve().is_some())
}

#[derive(Clone, Debug)]
pub struct SlowdownSearch {
    /// Smallest feasible target found.
    pub target: BigRational,
    /// Largest target probed infeasible, if any.
    pub infeasible_below: Option<BigRational>,
    pub probes: usize,
}

/// Upper bound from running the coflows one after another in release order,
/// each starting on a slot boundary and taking its isolation span rounded up.
fn sequential_target(batch: &Batch<BigRational>, slot: &BigRational) -> BigRational {
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| batch.coflow(a).release.cmp(&batch.coflow(b).release));
    let mut clock = BigRational::zero();
    let mut worst = BigRational::zero();
    for j in order {
        let c = batch.coflow(j);
        let start_slot = ceil_int(&(&c.release / slot)).max(ceil_int(&(&clock / slot)));
        let span = batch.isolation_span_at(j);
        let slots = ceil_int(&(&span / slot));
        clock = slot * BigRational::from_integer((start_slot + slots).into());
        let e = &c.phi * (&clock - &c.release) / span;
        if e > worst {
            worst = e;
        }
    }
    worst
}

/// Smallest slowdown target whose slotted LP is feasible.
///
/// Feasibility only changes where some window end `⌊(r_j + D_j)/Δ⌋` moves,
/// i.e. at `E = φ_j (tΔ - r_j) / (C_j^0 - r_j)`. The search bisects over these
/// breakpoints and stops once the feasible and infeasible probes are within
/// `tol`, so the reported target is feasible and at most `tol` above the
/// slotted optimum.
pub fn min_slowdown_lp(batch: &Batch<BigRational>, slot: &BigRational, tol: &BigRational) -> Result<SlowdownSearch> {
    if !tol.is_positive() {
        return Err(Error::NonPositiveParameter("tolerance"));
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let lower = batch.coflows().iter().map(|c| c.phi.clone()).max().expect("non-empty");
    let upper = sequential_target(batch, slot);

    let mut candidates = vec![upper.clone()];
    for (j, c) in batch.coflows().iter().enumerate() {
        let span = batch.isolation_span_at(j);
        // t ranges over window ends whose target lies in [lower, upper].
        let t_lo = ceil_int(&((&c.release + &lower * &span / &c.phi) / slot));
        let t_hi = floor_int(&((&c.release + &upper * &span / &c.phi) / slot));
        for t in t_lo..=t_hi {
            let e = &c.phi * (slot * BigRational::from_integer(t.into()) - &c.release) / &span;
            if e >= lower && e <= upper {
                candidates.push(e);
            }
        }
    }
    candidates.sort();
    candidates.dedup();

    let mut hi = candidates.len() - 1;
    let mut probes = 1;
    if !lp_feasible(batch, &candidates[hi], slot)? {
        return Err(Error::InvalidConfig("sequential schedule target not LP-feasible".into()));
    }
    probes += 1;
    if lp_feasible(batch, &candidates[0], slot)? {
        return Ok(SlowdownSearch { target: candidates[0].clone(), infeasible_below: None, probes });
    }
    // Invariant: candidates[lo] infeasible, candidates[hi] feasible.
    let mut lo = 0;
    while hi - lo > 1 && &candidates[hi] - &candidates[lo] > *tol {
        let mid = (lo + hi) / 2;
        probes += 1;
        if lp_feasible(batch, &candidates[mid], slot)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SlowdownSearch { target: candidates[hi].clone(), infeasible_below: Some(candidates[lo].clone()), probes })
}

/// Convert an `f64` slot length or target to an exact rational.
pub fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_f64_value(v).ok_or(Error::Unrepresentable(v))
}
