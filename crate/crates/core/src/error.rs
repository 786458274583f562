use thiserror::Error;

use crate::task_model::{Finding, TaskId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("task `{0}` not found in system")]
    NotFound(TaskId),

    #[error("system rejected with {} finding(s): {}", .0.len(), join_findings(.0))]
    InvalidSystem(Vec<Finding>),

    #[error("utilization {total} is infeasible for {n} task(s) capped at 1 each")]
    InfeasibleUtilization { n: usize, total: f64 },

    #[error("execution phase would be empty (C={wcet}, gamma={gamma})")]
    EmptyExecutionPhase { wcet: u64, gamma: f64 },

    #[error("task-set generation gave up after {attempts} consecutive rejections; last: {last}")]
    GenerationExhausted { attempts: u32, last: String },

    #[error("{local} tasks on core exceed the brute-force limit of {limit}")]
    TooManyTasks { local: usize, limit: usize },

    #[error("duplicate nominal priority {0}")]
    DuplicatePriority(u32),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_findings(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
