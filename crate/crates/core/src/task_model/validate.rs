use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{Bytes, CoreId, Priority, System, TaskId, Time};

/// One problem found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    InvalidPlatform { cores: usize, spm: Bytes },
    DuplicateId { task: TaskId },
    CoreOutOfRange { task: TaskId, core: CoreId },
    ZeroPeriod { task: TaskId },
    EmptyExecution { task: TaskId },
    DeadlineExceedsPeriod { task: TaskId, deadline: Time, period: Time },
    ZeroPriority { task: TaskId },
    ThresholdBelowPriority { task: TaskId, priority: Priority, threshold: Priority },
    DuplicatePriority { first: TaskId, second: TaskId, priority: Priority },
    FootprintMismatch { task: TaskId, memory: Bytes, layout: Bytes },
    /// A memory phase of `task` is longer than the period of the
    /// higher-priority task `victim`, which then cannot meet its deadline.
    BlockingExceedsPeriod { task: TaskId, victim: TaskId, phase: Time, period: Time },
    MemoryExceedsSpm { task: TaskId, memory: Bytes, spm: Bytes },
}

impl Finding {
    /// Findings that only concern local-memory capacity. They are reported by
    /// [`validate`] but do not prevent timing analysis.
    pub fn is_memory_only(&self) -> bool {
        matches!(self, Finding::MemoryExceedsSpm { .. })
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::InvalidPlatform { cores, spm } => {
                write!(f, "invalid platform (cores={cores}, spm={spm})")
            }
            Finding::DuplicateId { task } => write!(f, "duplicate task id `{task}`"),
            Finding::CoreOutOfRange { task, core } => {
                write!(f, "task `{task}` mapped to nonexistent core {core}")
            }
            Finding::ZeroPeriod { task } => write!(f, "task `{task}` has zero period"),
            Finding::EmptyExecution { task } => {
                write!(f, "task `{task}` has an empty execution phase")
            }
            Finding::DeadlineExceedsPeriod {
                task,
                deadline,
                period,
            } => write!(f, "task `{task}`: deadline {deadline} exceeds period {period}"),
            Finding::ZeroPriority { task } => write!(f, "task `{task}` has priority 0"),
            Finding::ThresholdBelowPriority {
                task,
                priority,
                threshold,
            } => write!(
                f,
                "task `{task}`: threshold below priority ({threshold} < {priority})"
            ),
            Finding::DuplicatePriority {
                first,
                second,
                priority,
            } => write!(f, "tasks `{first}` and `{second}` share priority {priority}"),
            Finding::FootprintMismatch {
                task,
                memory,
                layout,
            } => write!(
                f,
                "task `{task}`: footprint {memory} differs from code+data+stack {layout}"
            ),
            Finding::BlockingExceedsPeriod {
                task,
                victim,
                phase,
                period,
            } => write!(
                f,
                "task `{task}`: blocking exceeds period (memory phase {phase} > period {period} of `{victim}`)"
            ),
            Finding::MemoryExceedsSpm { task, memory, spm } => write!(
                f,
                "task `{task}`: footprint {memory} exceeds local memory {spm}"
            ),
        }
    }
}

/// Structural and feasibility checks on a system. An empty result means the
/// system is well-formed for every analysis in this crate.
pub fn validate(sys: &System) -> Vec<Finding> {
    let mut out = Vec::new();
    let platform = sys.platform;
    if platform.cores == 0 || platform.spm == 0 {
        out.push(Finding::InvalidPlatform {
            cores: platform.cores,
            spm: platform.spm,
        });
    }

    let mut ids: HashMap<&TaskId, ()> = HashMap::new();
    let mut prios: HashMap<Priority, &TaskId> = HashMap::new();
    for (k, t) in sys.tasks.iter().enumerate() {
        let id = &t.id;
        if ids.insert(id, ()).is_some() {
            out.push(Finding::DuplicateId { task: id.clone() });
        }
        let core = sys.assignment.get(k).copied().unwrap_or(usize::MAX);
        if core >= platform.cores {
            out.push(Finding::CoreOutOfRange {
                task: id.clone(),
                core,
            });
        }
        if t.period == 0 {
            out.push(Finding::ZeroPeriod { task: id.clone() });
        }
        if t.exec == 0 {
            out.push(Finding::EmptyExecution { task: id.clone() });
        }
        if t.deadline > t.period {
            out.push(Finding::DeadlineExceedsPeriod {
                task: id.clone(),
                deadline: t.deadline,
                period: t.period,
            });
        }
        if t.priority == 0 {
            out.push(Finding::ZeroPriority { task: id.clone() });
        }
        if t.threshold < t.priority {
            out.push(Finding::ThresholdBelowPriority {
                task: id.clone(),
                priority: t.priority,
                threshold: t.threshold,
            });
        }
        if let Some(first) = prios.insert(t.priority, id) {
            out.push(Finding::DuplicatePriority {
                first: first.clone(),
                second: id.clone(),
                priority: t.priority,
            });
        }
        if let Some(layout) = t.layout {
            if layout.footprint() != t.memory {
                out.push(Finding::FootprintMismatch {
                    task: id.clone(),
                    memory: t.memory,
                    layout: layout.footprint(),
                });
            }
        }
    }

    // Shortest period among strictly higher priorities, per task.
    let mut by_prio: Vec<usize> = (0..sys.tasks.len()).collect();
    by_prio.sort_by(|&a, &b| sys.tasks[b].priority.cmp(&sys.tasks[a].priority));
    let mut shortest: Option<usize> = None;
    let mut k = 0;
    while k < by_prio.len() {
        let level = sys.tasks[by_prio[k]].priority;
        let mut end = k;
        while end < by_prio.len() && sys.tasks[by_prio[end]].priority == level {
            end += 1;
        }
        if let Some(h) = shortest {
            let victim = &sys.tasks[h];
            for &j in &by_prio[k..end] {
                let t = &sys.tasks[j];
                let phase = t.read.max(t.write);
                if phase > victim.period {
                    out.push(Finding::BlockingExceedsPeriod {
                        task: t.id.clone(),
                        victim: victim.id.clone(),
                        phase,
                        period: victim.period,
                    });
                }
            }
        }
        for &j in &by_prio[k..end] {
            if shortest.is_none_or(|h| sys.tasks[j].period < sys.tasks[h].period) {
                shortest = Some(j);
            }
        }
        k = end;
    }

    for t in &sys.tasks {
        if t.memory > platform.spm {
            out.push(Finding::MemoryExceedsSpm {
                task: t.id.clone(),
                memory: t.memory,
                spm: platform.spm,
            });
        }
    }
    out
}
