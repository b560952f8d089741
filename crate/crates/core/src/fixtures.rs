//! Small hand-checkable instances used in tests, docs and CLI demos.

use crate::model::{Batch, Coflow, Fabric, Flow, PortId};
use crate::scalar::Scalar;

fn s<S: Scalar>(v: i64) -> S {
    S::from_i64(v).expect("small integer")
}

/// Three-server fabric with two coflows competing on ports 1, 3 and 5.
///
/// Coflow 1 sends `u` from each ingress port to the egress port opposite it
/// (1→4, 2→5, 3→6). Coflow 2 sends `v` on 1→4, 1→5, 3→5 and 3→6, so it loads
/// ports 1, 3 and 5 with `2v` and ports 4 and 6 with `v`.
pub fn crossing_pair<S: Scalar>(u: i64, v: i64) -> Batch<S> {
    let fabric = Fabric::new(3).expect("three servers");
    let p = |n: usize| PortId(n - 1);
    let c1 = Coflow::new(
        1,
        vec![Flow::new(p(1), p(4), s(u)), Flow::new(p(2), p(5), s(u)), Flow::new(p(3), p(6), s(u))],
    );
    let c2 = Coflow::new(
        2,
        vec![
            Flow::new(p(1), p(4), s(v)),
            Flow::new(p(1), p(5), s(v)),
            Flow::new(p(3), p(5), s(v)),
            Flow::new(p(3), p(6), s(v)),
        ],
    );
    Batch::new(fabric, vec![c1, c2]).expect("valid fixture")
}

/// One-server fabric with two single-flow coflows sharing the only link:
/// `A` (id 1) carries 2 units, `B` (id 2) carries 3 units.
pub fn shared_link_pair<S: Scalar>() -> Batch<S> {
    let fabric = Fabric::new(1).expect("one server");
    let a = Coflow::new(1, vec![Flow::new(PortId(0), PortId(1), s(2))]);
    let b = Coflow::new(2, vec![Flow::new(PortId(0), PortId(1), s(3))]);
    Batch::new(fabric, vec![a, b]).expect("valid fixture")
}

/// A single coflow with one flow on a one-server fabric.
pub fn single_flow<S: Scalar>(volume: S) -> Batch<S> {
    let fabric = Fabric::new(1).expect("one server");
    Batch::new(fabric, vec![Coflow::new(1, vec![Flow::new(PortId(0), PortId(1), volume)])]).expect("valid fixture")
}
