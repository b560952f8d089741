mod common;

use cofair_core::cofair::{cofair, dual_audit, steer_alpha, CofairInput, SteerError};
use cofair_core::experiment::{ccdf, ccdf_at};
use cofair_core::feasibility::{deadlines, edd_feasible_order, primal_feasible, DeadlineVector};
use cofair_core::lp::{brute_min_primal_slowdown, lp_feasible, min_slowdown_lp};
use cofair_core::mps::mps;
use cofair_core::scalar::ratio;
use cofair_core::sim::{rate_step, simulate_order, IntraCoflowPolicy, SimConfig, SimState};
use cofair_core::workload::{generate, GenConfig};
use cofair_core::{ExactBatch, PhiMode, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

use common::{eliminate, processing_times, random_batch, tiny_integer_batch};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn reversed(b: &ExactBatch) -> ExactBatch {
    let positions: Vec<usize> = (0..b.len()).rev().collect();
    b.select(&positions).unwrap()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn ingress_and_egress_carry_the_same_volume(seed in any::<u64>()) {
        let b = random_batch(seed, 10, 8);
        let loads = b.loads();
        let m = b.fabric().servers();
        let ingress: Rational = (0..m).map(|p| loads.total(cofair_core::PortId(p)).clone()).sum();
        let egress: Rational = (m..2 * m).map(|p| loads.total(cofair_core::PortId(p)).clone()).sum();
        let flows: Rational = b.coflows().iter().map(|c| c.volume()).sum();
        prop_assert_eq!(&ingress, &egress);
        prop_assert_eq!(ingress, flows);
    }

    #[test]
    fn primal_slowdown_ignores_batch_order(seed in any::<u64>()) {
        let b = random_batch(seed, 10, 6);
        prop_assert_eq!(mps(&b).unwrap().slowdown, mps(&reversed(&b)).unwrap().slowdown);
    }

    #[test]
    fn primal_slowdown_matches_brute_force(seed in any::<u64>()) {
        let b = random_batch(seed, 6, 5);
        let ep = mps(&b).unwrap().slowdown;
        prop_assert_eq!(&ep, &brute_min_primal_slowdown(&b).unwrap());
        let max_phi = b.phis().into_iter().max().unwrap();
        prop_assert!(ep >= max_phi);
    }

    #[test]
    fn cofair_output_is_feasible_and_certified(seed in any::<u64>(), slack in 10i64..30) {
        let b = random_batch(seed, 9, 6);
        let loads = b.loads();
        let e = mps(&b).unwrap().slowdown * ratio(slack, 10);
        let d = deadlines(&b, &e).unwrap();
        let out = cofair(&CofairInput::new(&b, &loads, &d)).unwrap();
        prop_assert!(primal_feasible(&loads, &out.sigma, &d));
        let audit = dual_audit(&loads, &out.certificate, &d, &out.sigma).unwrap();
        prop_assert!(audit.max_constraint_error.is_zero());
        prop_assert!(audit.dual_objective.unwrap() <= audit.primal_objective);
    }

    #[test]
    fn cofair_matches_edd_on_feasibility(seed in any::<u64>(), scale in 5i64..15) {
        let b = random_batch(seed, 9, 6);
        let loads = b.loads();
        let e = mps(&b).unwrap().slowdown * ratio(scale, 10);
        let Ok(d) = deadlines(&b, &e) else { return Ok(()) };
        let edd = edd_feasible_order(&b, &loads, &d).unwrap().is_feasible();
        prop_assert_eq!(cofair(&CofairInput::new(&b, &loads, &d)).is_ok(), edd);
    }

    #[test]
    fn elimination_reproduces_duals_with_multipliers(seed in any::<u64>(), a in 0i64..5) {
        let b = random_batch(seed, 8, 5);
        let loads = b.loads();
        let d = deadlines(&b, &(mps(&b).unwrap().slowdown * ratio(3, 2))).unwrap();
        let alpha: Vec<Rational> = (0..b.len()).map(|j| ratio((a * j as i64) % 3, 4)).collect();
        let input = CofairInput::new(&b, &loads, &d).with_alpha(alpha);
        let out = cofair(&input).unwrap();
        let el = eliminate(&b, &out.sigma.order, &d, &input.weights, &input.alpha).unwrap();
        for entry in &out.certificate.entries {
            prop_assert_eq!(&el.y[entry.step - 1], &entry.value);
            prop_assert_eq!(el.ports[entry.step - 1], entry.port);
        }
    }

    #[test]
    fn steering_reproduces_any_reachable_target(seed in any::<u64>()) {
        let b = random_batch(seed, 7, 5);
        let loads = b.loads();
        let d = deadlines(&b, &(mps(&b).unwrap().slowdown * Rational::from_integer(2.into()))).unwrap();
        let target = edd_feasible_order(&b, &loads, &d).unwrap().order().cloned().unwrap();
        match steer_alpha(&b, &loads, &target, &d, &b.weights()) {
            Ok(s) => {
                prop_assert_eq!(s.alpha.iter().max().unwrap(), &Rational::one());
                prop_assert!(s.kappa > Rational::zero() && s.kappa <= Rational::one());
                let w: Vec<Rational> = b.weights().iter().map(|w| w * &s.kappa).collect();
                let out = cofair(&CofairInput::new(&b, &loads, &d).with_weights(w).with_alpha(s.alpha)).unwrap();
                prop_assert_eq!(out.sigma.order, target.order);
            }
            Err(SteerError::OffBottleneck { .. }) => {}
            Err(e) => prop_assert!(false, "steering failed: {e}"),
        }
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn fluid_schedule_respects_capacity_and_conserves_volume(seed in any::<u64>(), releases in any::<bool>()) {
        let mut b = random_batch(seed, 7, 5);
        if releases {
            let r: Vec<Rational> = (0..b.len()).map(|j| ratio((j as i64 * 7 + seed as i64 % 5).rem_euclid(4), 2)).collect();
            b = b.with_releases(&r).unwrap();
        }
        let order: Vec<usize> = (0..b.len()).collect();
        let out = simulate_order(&b, &order, SimConfig { record_trace: true, ..SimConfig::default() }).unwrap();
        let trace = out.trace.unwrap();
        let ports = b.fabric().port_count();
        let mut sent: Vec<Vec<Rational>> = b.coflows().iter().map(|c| vec![Rational::zero(); c.flows.len()]).collect();
        for iv in &trace {
            prop_assert!(iv.end > iv.start);
            let mut used = vec![Rational::zero(); ports];
            for fr in &iv.rates {
                let j = b.index_of(fr.coflow).unwrap();
                let c = b.coflow(j);
                prop_assert!(iv.start >= c.release);
                let f = &c.flows[fr.flow];
                used[f.ingress.0] += &fr.rate;
                used[f.egress.0] += &fr.rate;
                sent[j][fr.flow] += &fr.rate * (&iv.end - &iv.start);
            }
            for (p, u) in used.iter().enumerate() {
                prop_assert!(u <= b.fabric().capacity(cofair_core::PortId(p)));
            }
        }
        for (j, c) in b.coflows().iter().enumerate() {
            for (i, f) in c.flows.iter().enumerate() {
                prop_assert_eq!(&sent[j][i], &f.volume);
            }
            prop_assert!(out.ccts[j] >= b.isolation_cct_at(j));
        }
    }

    #[test]
    fn priority_scan_saturates_earlier_flows(seed in any::<u64>(), drop in any::<u64>()) {
        let b = random_batch(seed, 8, 5);
        let loads = b.loads();
        let out = cofair(&CofairInput::new(&b, &loads, &DeadlineVector::unbounded(b.len()))).unwrap();
        let mut state = SimState::new(&b);
        // Pretend some flows already finished.
        for (j, flows) in state.remaining.iter_mut().enumerate() {
            for (i, v) in flows.iter_mut().enumerate() {
                if drop >> ((j * 7 + i) % 64) & 1 == 1 {
                    *v = Rational::zero();
                }
            }
            state.finished[j] = flows.iter().all(|v| v.is_zero());
        }
        let rates = rate_step(&b, &state, &out.sigma.order, IntraCoflowPolicy::FlowIdOrder);
        let mut residual: Vec<Rational> = b.fabric().capacities().to_vec();
        for &j in &out.sigma.order {
            for (i, f) in b.coflow(j).flows.iter().enumerate() {
                let r = &rates[j][i];
                if state.remaining[j][i].is_zero() || state.finished[j] {
                    prop_assert!(r.is_zero());
                    continue;
                }
                let free = residual[f.ingress.0].clone().min(residual[f.egress.0].clone());
                prop_assert_eq!(r, &free);
                residual[f.ingress.0] -= r;
                residual[f.egress.0] -= r;
            }
        }
    }

    #[test]
    fn completion_within_twice_the_prefix_bound(seed in any::<u64>()) {
        let b = random_batch(seed, 8, 5);
        let loads = b.loads();
        let d = deadlines(&b, &mps(&b).unwrap().slowdown).unwrap();
        let out = cofair(&CofairInput::new(&b, &loads, &d)).unwrap();
        let sim = simulate_order(&b, &out.sigma.order, SimConfig::default()).unwrap();
        for j in 0..b.len() {
            prop_assert!(sim.ccts[j] <= Rational::from_integer(2.into()) * &out.sigma.bounds[j]);
        }
    }

    #[test]
    fn generated_batches_are_well_formed(
        n in 1usize..40, m in 1usize..20, q in 0.0f64..=1.0, seed in any::<u64>(), wide in any::<bool>(),
    ) {
        let cfg = if wide { GenConfig::wn(n, m, q, seed) } else { GenConfig::mr(n, m, m.min(3), m.min(2), seed) };
        let b = generate(&cfg).unwrap();
        prop_assert_eq!(b.len(), n);
        prop_assert_eq!(b.fabric().servers(), m);
        for c in b.coflows() {
            prop_assert!(!c.flows.is_empty());
            for f in &c.flows {
                prop_assert!(f.ingress.0 < m && f.egress.0 >= m && f.egress.0 < 2 * m);
                prop_assert!(f.volume > 0.0 && f.volume.is_finite());
            }
        }
        if wide {
            let wide_count = b.coflows().iter().filter(|c| c.flows.len() > 1).count();
            prop_assert!(wide_count <= (q * n as f64).round() as usize);
        }
        prop_assert_eq!(generate(&cfg).unwrap(), b);
    }

    #[test]
    fn ccdf_is_a_tail_distribution(samples in prop::collection::vec(0u32..50, 1..60)) {
        let xs: Vec<f64> = samples.iter().map(|&v| f64::from(v) / 4.0).collect();
        let c = ccdf(&xs).unwrap();
        prop_assert_eq!(c[0].1, 1.0);
        for w in c.windows(2) {
            prop_assert!(w[0].0 < w[1].0 && w[0].1 > w[1].1);
        }
        for (v, p) in &c {
            let direct = xs.iter().filter(|x| *x >= v).count() as f64 / xs.len() as f64;
            prop_assert_eq!(*p, direct);
            prop_assert!(ccdf_at(&xs, v).unwrap() < *p);
        }
        prop_assert_eq!(ccdf_at(&xs, &c.last().unwrap().0).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn lp_feasibility_is_monotone(seed in any::<u64>(), step in 1i64..6) {
        let b = tiny_integer_batch(seed, 4);
        let slot = Rational::one();
        let e = min_slowdown_lp(&b, &slot, &ratio(1, 1000)).unwrap().target;
        prop_assert!(lp_feasible(&b, &(&e + ratio(step, 4)), &slot).unwrap());
        prop_assert!(lp_feasible(&b, &e, &ratio(1, 2)).unwrap());
        prop_assert!(lp_feasible(&b, &e, &ratio(1, 4)).unwrap());
    }

    #[test]
    fn primal_slowdown_never_exceeds_lp_slowdown(seed in any::<u64>(), volume in any::<bool>()) {
        let mut b = tiny_integer_batch(seed, 4);
        if volume {
            b = b.with_phi(PhiMode::Volume);
        }
        let ep = mps(&b).unwrap().slowdown;
        let tol = ratio(1, 1000);
        let search = min_slowdown_lp(&b, &ratio(1, 2), &tol).unwrap();
        prop_assert!(ep <= &search.target + &tol);
        if let Some(below) = search.infeasible_below {
            prop_assert!(!lp_feasible(&b, &below, &ratio(1, 2)).unwrap());
        }
    }
}

#[test]
fn processing_times_agree_with_port_loads() {
    let b = random_batch(3, 8, 4);
    let loads = b.loads();
    let t = processing_times(&b);
    for p in loads.ports() {
        for j in 0..b.len() {
            assert_eq!(t[p.0][j], loads.time(p, j));
        }
    }
}
