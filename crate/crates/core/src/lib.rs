//! Energy-efficient power and transfer-duration allocation for a wirelessly
//! powered link: a multi-antenna base station charges a single-antenna node by
//! energy beamforming, and the node spends the harvested energy on its uplink.
//!
//! - [`model`]: closed-form harvested power, rates, efficiency and constraints.
//! - [`solver`]: Dinkelbach outer loop over a Lagrangian dual inner solve, plus
//!   the fixed-power baseline.
//! - [`oracle`]: brute-force grid maximizer used to validate the solver.
//! - [`channel_mc`]: Monte Carlo checks of the channel-hardening approximation.
//! - [`cli`]: JSON-configured command-line harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel_mc;
pub mod cli;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod solver;

pub use model::{Allocation, ConstraintVariant, FeasibilityStatus, SystemParams};
pub use oracle::GridSpec;
pub use solver::{DualState, Solution, SolveStatus, SolverConfig};
