//! Exact oracles for small instances: the slotted feasibility LP, the search
//! for its smallest feasible slowdown, and brute-force permutation bounds.

pub mod brute;
pub mod simplex;
pub mod time_indexed;

pub use brute::{brute_min_primal_slowdown, brute_opt_wcct, WcctOptimum};
pub use simplex::{LinearProgram, LpStatus, Relation};
pub use time_indexed::{exact, lp_feasible, min_slowdown_lp, Aggregation, SlotSchedule, SlowdownSearch, TimeIndexedLp};
