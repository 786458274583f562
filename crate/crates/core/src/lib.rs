//! Schedulability and local-memory analysis for sporadic 3-phase tasks.
//!
//! Every task is split into a read phase, an execution phase and a write
//! phase. Read and write phases use the shared bus and are non-preemptive;
//! only one memory phase may be active on the bus at a time, granted by
//! nominal priority across all cores. Execution phases only touch the
//! core-local scratchpad and may be preempted by local tasks whose nominal
//! priority exceeds the running task's preemption threshold. Preempted tasks
//! stay resident in local memory (keep-in-core) until they finish.
//!
//! The crate is organised as follows:
//!
//! - [`task_model`]: tasks, platforms, systems, category classification,
//!   rate-monotonic priorities, worst-fit mapping, validation and the
//!   JSON task-set format.
//! - [`rta`]: worst-case response-time analysis under preemption thresholds.
//! - [`mem_analysis`]: worst-case preemption-chain memory per core.
//! - [`threshold_assign`]: maximal preemption-threshold assignment.
//! - [`sched_sim`]: a discrete-event simulator of the execution model, used
//!   as a dominance oracle for the analyses.
//! - [`taskset_gen`]: synthetic task-set generation.
//! - [`experiment`]: sweeps, validation campaigns and file entry points.

pub mod error;
pub mod experiment;
pub mod mem_analysis;
pub mod rta;
pub mod sched_sim;
pub mod task_model;
pub mod taskset_gen;
pub mod threshold_assign;

pub use error::{Error, Result};
pub use task_model::{
    Bytes, Category, CoreId, MemoryLayout, Platform, Priority, System, Task, TaskId, Time,
};
