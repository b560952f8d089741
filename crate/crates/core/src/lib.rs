//! Slowdown-constrained coflow scheduling on a Big Switch fabric.
//!
//! The core is generic over [`Scalar`]: `f64`, `f32` and exact rationals.
//! Experiments run in `f64`; oracles and audits run in [`Rational`].

pub mod cofair;
pub mod error;
pub mod experiment;
pub mod feasibility;
pub mod fixtures;
pub mod io;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod mps;
pub mod scalar;
pub mod sim;
pub mod workload;

pub use cofair::{cofair, dual_audit, steer_alpha, CofairError, CofairInput, CofairOutput, DualCertificate};
pub use error::{Error, Result};
pub use feasibility::{check_primal, deadlines, primal_feasible, DeadlineVector, SigmaOrder};
pub use metrics::OutcomeReport;
pub use model::{Batch, Coflow, Fabric, Flow, PhiMode, PortId, PortLoads};
pub use mps::{mps, MpsResult};
pub use scalar::Scalar;
pub use sim::{simulate, simulate_order};

pub type Rational = num_rational::BigRational;

pub type Batch64 = Batch<f64>;
pub type ExactBatch = Batch<Rational>;
pub type Loads64 = PortLoads<f64>;
pub type ExactLoads = PortLoads<Rational>;
