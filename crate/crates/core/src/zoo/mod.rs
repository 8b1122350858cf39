//! Asynchronous cluster-wise zeroth-order block coordinate descent.

mod advisor;
mod block;
mod engine;
mod estimator;
mod objective;
mod schedule;
mod trace;

pub use advisor::{advise_parameters, failure_probability, AdvisorInput, AdvisorOutput, AdvisorVariant};
pub use block::BlockVector;
pub use engine::{
    global_estimate, run_async_zoo, run_async_zoo_with, run_centralized_zoo, run_centralized_zoo_with,
    AgentUpdate, AsyncZoo, ZooConfig, DEFAULT_GUARD,
};
pub use estimator::{effective_weight, extrapolate, one_point_gradient, sample_unit_sphere, CyclicCap, WeightCaps};
pub use objective::{NetworkedObjective, PairwiseDisplacement, Quadratic, ZeroObjective};
pub use schedule::{make_cyclic_schedule, make_shuffled_schedule, validate_schedule, ScheduleReport, UpdateSchedule};
pub use trace::{fmt_float, parse_trace_csv, IterationRecord, RunTrace, TraceRow, TRACE_HEADER};
