//! Multi-agent, multi-objective optimization by interleaving Laplacian
//! consensus on priority vectors with a prioritized gradient-consensus
//! update of each agent's decision vector.
//!
//! Each agent `i` owns one convex objective `f_i` and a priority row
//! `w^i` over all objectives. Priorities reach consensus on the column means
//! `w̄` of the initial priorities, so the network ends up minimizing the
//! weighted sum `Σ_j w̄_j f_j`. Varying the initial priorities traces the
//! Pareto front.

pub mod bounds;
pub mod engine;
pub mod fixtures;
pub mod graph;
pub mod mixing;
pub mod objectives;
pub mod priorities;
pub mod report;
pub mod scenario;
pub mod verify;

pub use engine::{pareto_sweep, run, RunConfig, RunResult};
pub use graph::Graph;
pub use objectives::{Objective, WeightedProblem};
pub use priorities::PriorityMatrix;
pub use scenario::{parse_scenario, Scenario};
