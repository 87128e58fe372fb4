//! Exact solver for the quay crane scheduling problem with container groups.
//!
//! The problem is decomposed into a min-max crane routing master problem and
//! a scheduling slave problem on a disjunctive graph. The master yields lower
//! bounds, the slave yields feasible schedules, and combinatorial cuts derived
//! from each schedule steer the master away from routings that cannot improve
//! the incumbent. [`decomp::run`] drives the loop until both bounds meet.

pub mod budget;
pub mod decomp;
pub mod master;
pub mod model;
pub mod oracle;
pub mod slave;
pub mod taskset;

pub use model::{Instance, Node, Time};
