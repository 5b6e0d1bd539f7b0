#![forbid(unsafe_code)]

//! Deterministic simulation and interaction-range optimization for
//! consensus-driven multi-agent swarms under predator attack.
//!
//! The crate has two simulation engines and a common experiment driver:
//!
//! - [`consensus1d`]: scalar agents that repeatedly average their state over
//!   range-limited neighbors, optionally repelled by a stationary predator.
//! - [`flock`]: constant-speed agents in up to three dimensions whose
//!   headings follow the neighbor-mean velocity, escaping a constant-velocity
//!   predator.
//! - [`sweep`]: seeded Monte-Carlo batches over a grid of interaction ranges,
//!   selecting the range that maximizes an escape objective.
//!
//! [`graph`] supplies the shared radius-graph machinery, [`config`] /
//! [`output`] / [`cli`] the declarative run format, serialization, and the
//! command-line interface.

pub mod cli;
pub mod config;
pub mod consensus1d;
pub mod flock;
pub mod graph;
pub mod output;
pub mod sweep;

pub use consensus1d::{
    critical_strength, simulate_1d, steady_state_set_member, step_1d, ForceLaw, Predator1D,
    Sim1DParams, SteadyStateReport, Trajectory1D,
};
pub use flock::{
    consensus_force, escape_force, simulate_flock, step_flock, DistanceSeries, FlockParams,
    FlockSnapshot, FlockState, PredatorND,
};
pub use graph::{
    build_graph, build_graph_1d, build_graph_points, consensus_matrices, ComponentLabeling,
    ConsensusMatrices, InteractionGraph, Norm,
};
pub use sweep::{
    run_sweep, sample_initial_1d, sample_initial_flock, select_optimum, trial_seed, Objective,
    SweepConfig, SweepModel, SweepResult,
};
