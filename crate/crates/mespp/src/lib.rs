//! Planning toolkit for multi-robot efficient search of a moving target on a
//! graph-represented environment.
//!
//! A team of searchers moves on an undirected graph trying to intercept a
//! target that follows a known Markov motion model before a mission deadline.
//! The toolkit provides:
//!
//! - [`graph`]: environment graphs, hop distances, per-searcher reachability;
//! - [`belief`]: the exact probabilistic machinery (motion and capture
//!   matrices, belief recursion, discounted reward) that also serves as the
//!   ground-truth evaluator for any joint plan;
//! - [`milp`]: mixed-integer linear programming formulations of the planning
//!   problem (same-vertex capture, ranged capture, ranged capture with false
//!   negatives);
//! - [`solver`]: LP-format serialization, an external-solver subprocess
//!   driver, and an exhaustive joint-path enumeration baseline;
//! - [`planner`]: centralized offline planning and distributed online
//!   implicit coordination with receding-horizon replanning;
//! - [`simulator`]: Monte-Carlo mission execution and the experiment harness.

pub mod belief;
pub mod error;
pub mod graph;
pub mod instance;
pub mod milp;
pub mod planner;
pub mod simulator;
pub mod solver;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
