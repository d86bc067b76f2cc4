//! Analytic planner and simulator for the RAMP optical-circuit-switched
//! network: contention-free collective schedules from closed-form maps,
//! functional verification against brute-force semantics, and completion
//! time, cost, power and optical-budget estimation with electrically
//! switched baselines.

pub mod baselines;
pub mod config;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod funcsim;
pub mod params;
pub mod physmodel;
pub mod topo;
pub mod transcoder;
pub mod workloads;

pub use engine::{
    plan_collective, plan_collective_rooted, CollectiveOp, CollectivePlan, Variant4,
};
pub use error::{Error, Result};
pub use params::{derived_quantities, min_message_per_slot, NodeCoord, RampParams, SubnetKind};
pub use transcoder::{build_schedule, verify_contention, Schedule, ScheduleConfig, Transfer};
