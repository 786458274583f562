use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mem_analysis::MemoryReport;
use crate::rta::SystemAnalysis;
use crate::task_model::{Bytes, CoreId, System, TaskId, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Read,
    Write,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Release,
    ReadStart,
    ReadEnd,
    Preempt,
    Resume,
    ExecEnd,
    WriteStart,
    WriteEnd,
    DeadlineMiss,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: Time,
    pub core: CoreId,
    pub task: TaskId,
    pub job: u64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusGrant {
    pub core: CoreId,
    pub task: TaskId,
    pub job: u64,
    pub phase: Phase,
    pub start: Time,
    pub end: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub task: TaskId,
    pub task_index: usize,
    /// Job number of the task, from 0.
    pub job: u64,
    pub core: CoreId,
    pub release: Time,
    /// Absolute deadline.
    pub deadline: Time,
    pub read_start: Option<Time>,
    pub read_end: Option<Time>,
    /// Execution intervals; more than one when preempted.
    pub exec: Vec<(Time, Time)>,
    pub write_start: Option<Time>,
    pub write_end: Option<Time>,
    pub response: Option<Time>,
    pub missed: bool,
}

impl JobRecord {
    pub(super) fn new(
        task: TaskId,
        task_index: usize,
        job: u64,
        core: CoreId,
        release: Time,
        deadline: Time,
    ) -> Self {
        JobRecord {
            task,
            task_index,
            job,
            core,
            release,
            deadline,
            read_start: None,
            read_end: None,
            exec: Vec::new(),
            write_start: None,
            write_end: None,
            response: None,
            missed: false,
        }
    }

    pub fn exec_time(&self) -> Time {
        self.exec.iter().map(|(a, b)| b - a).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTrace {
    pub task_ids: Vec<TaskId>,
    pub cores: usize,
    pub jobs: Vec<JobRecord>,
    pub bus: Vec<BusGrant>,
    /// Per core: `(time, bytes)` after every change.
    pub occupancy: Vec<Vec<(Time, Bytes)>>,
    pub peak_memory: Vec<Bytes>,
    pub preemptions: u64,
    pub deadline_misses: u64,
    pub events: Vec<SimEvent>,
    /// The time limit was hit with jobs still pending.
    pub incomplete: bool,
    pub end_time: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub id: TaskId,
    pub jobs: usize,
    pub max_response: Option<Time>,
    pub misses: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreSummary {
    pub core: CoreId,
    pub peak_memory: Bytes,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSummary {
    pub tasks: Vec<TaskSummary>,
    pub cores: Vec<CoreSummary>,
    pub bus_grants: usize,
    pub preemptions: u64,
    pub deadline_misses: u64,
    pub incomplete: bool,
    pub end_time: Time,
}

impl SimSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

impl SimTrace {
    pub(super) fn empty(sys: &System) -> Self {
        let cores = sys.platform.cores;
        SimTrace {
            task_ids: sys.tasks.iter().map(|t| t.id.clone()).collect(),
            cores,
            jobs: Vec::new(),
            bus: Vec::new(),
            occupancy: vec![Vec::new(); cores],
            peak_memory: vec![0; cores],
            preemptions: 0,
            deadline_misses: 0,
            events: Vec::new(),
            incomplete: false,
            end_time: 0,
        }
    }

    pub fn jobs_of(&self, task_index: usize) -> impl Iterator<Item = &JobRecord> {
        self.jobs.iter().filter(move |j| j.task_index == task_index)
    }

    /// Largest observed response of a task; `None` without finished jobs.
    pub fn max_response(&self, task_index: usize) -> Option<Time> {
        self.jobs_of(task_index).filter_map(|j| j.response).max()
    }

    pub fn summary(&self) -> SimSummary {
        SimSummary {
            tasks: self
                .task_ids
                .iter()
                .enumerate()
                .map(|(k, id)| TaskSummary {
                    id: id.clone(),
                    jobs: self.jobs_of(k).count(),
                    max_response: self.max_response(k),
                    misses: self.jobs_of(k).filter(|j| j.missed).count(),
                })
                .collect(),
            cores: self
                .peak_memory
                .iter()
                .enumerate()
                .map(|(core, &peak_memory)| CoreSummary { core, peak_memory })
                .collect(),
            bus_grants: self.bus.len(),
            preemptions: self.preemptions,
            deadline_misses: self.deadline_misses,
            incomplete: self.incomplete,
            end_time: self.end_time,
        }
    }

    /// One JSON object per event and line.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let line = serde_json::to_string(e).expect("event serializes");
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A job took longer than the analysed WCRT of its task.
    Response {
        task: TaskId,
        job: u64,
        observed: Option<Time>,
        bound: Time,
    },
    /// A core held more memory than its analysed peak.
    Memory {
        core: CoreId,
        observed: Bytes,
        bound: Bytes,
    },
}

/// Observed behaviour exceeding the analytic bounds. Tasks whose analysis
/// diverged have no finite bound and are skipped; unfinished jobs of the
/// other tasks count as violations.
pub fn check_dominance(
    trace: &SimTrace,
    analysis: &SystemAnalysis,
    memory: &MemoryReport,
) -> Result<Vec<Violation>> {
    let ids: Vec<&TaskId> = analysis.results.iter().map(|r| &r.task).collect();
    if ids.len() != trace.task_ids.len() || ids.iter().zip(&trace.task_ids).any(|(a, b)| *a != b)
    {
        return Err(Error::InvalidArgument(
            "trace and analysis describe different task sets".into(),
        ));
    }
    if memory.cores.len() != trace.cores {
        return Err(Error::InvalidArgument(
            "trace and memory report describe different platforms".into(),
        ));
    }
    let mut out = Vec::new();
    for job in &trace.jobs {
        let r = &analysis.results[job.task_index];
        if r.diverged {
            continue;
        }
        let late = job.response.is_none_or(|resp| resp > r.wcrt);
        if late {
            out.push(Violation::Response {
                task: job.task.clone(),
                job: job.job,
                observed: job.response,
                bound: r.wcrt,
            });
        }
    }
    for c in &memory.cores {
        let observed = trace.peak_memory[c.core];
        if observed > c.peak_bound {
            out.push(Violation::Memory {
                core: c.core,
                observed,
                bound: c.peak_bound,
            });
        }
    }
    Ok(out)
}
