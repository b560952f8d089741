#![allow(dead_code)]

use cofair_core::workload::{generate, GenConfig, WeightMode};
use cofair_core::{DeadlineVector, ExactBatch, PhiMode, PortId, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random WN or MR batch in exact arithmetic. Weights are drawn from
/// `[1, 4]`, φ alternates between unit and volume.
pub fn random_batch(seed: u64, max_n: usize, max_m: usize) -> ExactBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range(2..=max_m);
    let mut cfg = if rng.random_bool(0.5) {
        GenConfig::wn(n, m, rng.random_range(0.1..0.6), rng.random())
    } else {
        let mappers = rng.random_range(1..=m);
        let reducers = rng.random_range(1..=m);
        GenConfig::mr(n, m, mappers, reducers, rng.random())
    };
    cfg.phi = if rng.random_bool(0.5) { PhiMode::Unit } else { PhiMode::Volume };
    cfg.weights = WeightMode::Uniform { lo: 1.0, hi: 4.0 };
    generate(&cfg).unwrap().convert().unwrap()
}

/// Same as [`random_batch`] with unit weights.
pub fn random_unit_batch(seed: u64, max_n: usize, max_m: usize) -> ExactBatch {
    let b = random_batch(seed, max_n, max_m);
    b.with_weights(&vec![Rational::one(); b.len()]).unwrap()
}

/// Tiny batch with integer volumes in `1..=4` on a fabric of 2 or 3 servers.
pub fn tiny_integer_batch(seed: u64, max_n: usize) -> ExactBatch {
    use cofair_core::{Batch, Coflow, Fabric, Flow};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(2..=3);
    let n = rng.random_range(2..=max_n);
    let coflows = (1..=n)
        .map(|id| {
            let width = rng.random_range(1..=2);
            let flows = (0..width)
                .map(|_| {
                    let i = rng.random_range(0..m);
                    let e = m + rng.random_range(0..m);
                    Flow::new(PortId(i), PortId(e), Rational::from_integer(BigInt::from(rng.random_range(1..=4i64))))
                })
                .collect();
            Coflow::new(id, flows)
        })
        .collect();
    Batch::new(Fabric::new(m).unwrap(), coflows).unwrap()
}

/// Per-port processing times `t[ℓ][j] = p_{ℓj} / B_ℓ`, summed straight from
/// the flow list.
pub fn processing_times(batch: &ExactBatch) -> Vec<Vec<Rational>> {
    let ports = batch.fabric().port_count();
    let mut t = vec![vec![Rational::zero(); batch.len()]; ports];
    for (j, c) in batch.coflows().iter().enumerate() {
        for f in &c.flows {
            for p in [f.ingress, f.egress] {
                t[p.0][j] += &f.volume / batch.fabric().capacity(p);
            }
        }
    }
    t
}

#[derive(Debug)]
pub struct Elimination {
    /// Indexed by step `k - 1`.
    pub ports: Vec<PortId>,
    pub tails: Vec<Vec<usize>>,
    pub y: Vec<Rational>,
}

/// Rebuild the dual values of an order by back substitution.
///
/// For each step `k` the unscheduled set is `σ(1..k)`; the pivot port is its
/// most loaded port (lowest index on ties) and the tail set holds the members
/// whose deadline covers the set load on each of their ports. The equation of
/// `σ(k)` involves only steps `k' ≥ k`, so solving from `k = N` down gives a
/// triangular system.
pub fn eliminate(
    batch: &ExactBatch,
    order: &[usize],
    deadlines: &DeadlineVector<Rational>,
    weights: &[Rational],
    alpha: &[Rational],
) -> Option<Elimination> {
    let n = batch.len();
    let t = processing_times(batch);
    let mut ports = vec![PortId(0); n];
    let mut tails = vec![Vec::new(); n];
    for k in (1..=n).rev() {
        let set = &order[..k];
        let load: Vec<Rational> = t.iter().map(|row| set.iter().map(|&j| &row[j]).sum()).collect();
        let mut mu = None;
        for (p, l) in load.iter().enumerate() {
            if l.is_zero() {
                continue;
            }
            if mu.map_or(true, |m: usize| *l > load[m]) {
                mu = Some(p);
            }
        }
        ports[k - 1] = PortId(mu?);
        tails[k - 1] = set
            .iter()
            .copied()
            .filter(|&j| match deadlines.get(j) {
                None => true,
                Some(d) => (0..t.len()).all(|p| t[p][j].is_zero() || load[p] <= *d),
            })
            .collect();
        tails[k - 1].sort_unstable();
    }

    let mut y = vec![Rational::zero(); n];
    for k in (1..=n).rev() {
        let j = order[k - 1];
        let mut rhs = &weights[j] + &alpha[j];
        for later in k + 1..=n {
            if tails[later - 1].contains(&j) {
                rhs -= &y[later - 1] * &t[ports[later - 1].0][j];
            }
        }
        let coeff = &t[ports[k - 1].0][j];
        if coeff.is_zero() || !tails[k - 1].contains(&j) {
            return None;
        }
        y[k - 1] = rhs / coeff;
    }
    Some(Elimination { ports, tails, y })
}

pub fn rational(v: f64) -> Rational {
    Rational::from_float(v).unwrap()
}

pub fn verdict(index: usize, name: &str, ok: bool, detail: impl std::fmt::Display) {
    println!("criterion {index:>2} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}
