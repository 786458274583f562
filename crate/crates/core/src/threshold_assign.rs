//! Maximal preemption-threshold assignment.
//!
//! Starting from the fully preemptive configuration, each task's threshold
//! is raised one priority level at a time, highest nominal priority first.
//! Raising `θ_i` to `θ_i + 1` only changes the category of the local task
//! whose nominal priority is exactly `θ_i + 1` (it stops preempting `i` and
//! starts being blocked by it), so only that task needs re-checking. Levels
//! held by remote tasks are free: thresholds act locally.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rta::{self, RtaConfig, TaskAnalysis};
use crate::task_model::{Priority, System, TaskId};

/// One attempted increment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub task: TaskId,
    pub old: Priority,
    pub new: Priority,
    pub affected: Option<TaskId>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentOutcome {
    /// Final threshold per task.
    pub thresholds: BTreeMap<TaskId, Priority>,
    /// Thresholds of the input system.
    pub before: BTreeMap<TaskId, Priority>,
    /// Final full-system verdict.
    pub schedulable: bool,
    /// Whether the fully preemptive starting point was schedulable. When it
    /// is not, no increment is attempted.
    pub start_schedulable: bool,
    pub iterations: u64,
    pub reverts: u64,
    pub audit: Vec<AuditEntry>,
    /// Disagreements between per-increment checks and the final full
    /// analysis.
    pub diagnostics: Vec<String>,
}

impl AssignmentOutcome {
    /// Thresholds in task order of `sys`.
    pub fn thresholds_for(&self, sys: &System) -> Vec<Priority> {
        sys.tasks.iter().map(|t| self.thresholds[&t.id]).collect()
    }

    /// `sys` with the assigned thresholds.
    pub fn apply(&self, sys: &System) -> Result<System> {
        sys.with_thresholds(&self.thresholds_for(sys))
    }
}

/// The local task of `sys` whose nominal priority is `theta_new`, if any.
pub fn affected_task(id: &TaskId, theta_new: Priority, sys: &System) -> Result<Option<TaskId>> {
    let index = sys.index_of(id)?;
    Ok(affected_index(sys, index, theta_new).map(|k| sys.tasks[k].id.clone()))
}

fn affected_index(sys: &System, index: usize, theta_new: Priority) -> Option<usize> {
    let core = sys.core_of(index);
    sys.local_tasks(core)
        .find(|&k| k != index && sys.tasks[k].priority == theta_new)
}

fn check_unique_priorities(sys: &System) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for t in &sys.tasks {
        if !seen.insert(t.priority) {
            return Err(Error::DuplicatePriority(t.priority));
        }
    }
    Ok(())
}

/// Maximal threshold assignment for `sys`. Input thresholds are ignored;
/// the search always starts from `θ = P`.
pub fn mptaa(sys: &System, config: &RtaConfig) -> Result<AssignmentOutcome> {
    check_unique_priorities(sys)?;
    let before = sys
        .tasks
        .iter()
        .map(|t| (t.id.clone(), t.threshold))
        .collect();
    let mut work = sys.fully_preemptive();
    let check = RtaConfig {
        stop_at_first_miss: true,
        ..config.clone()
    };
    let start_schedulable = rta::is_schedulable(&work, &check);
    let mut outcome = AssignmentOutcome {
        thresholds: BTreeMap::new(),
        before,
        schedulable: false,
        start_schedulable,
        iterations: 0,
        reverts: 0,
        audit: Vec::new(),
        diagnostics: Vec::new(),
    };

    if start_schedulable {
        let top = work.top_priority();
        let mut order: Vec<usize> = (0..work.len()).collect();
        order.sort_by(|&a, &b| {
            work.tasks[b]
                .priority
                .cmp(&work.tasks[a].priority)
                .then_with(|| work.tasks[a].id.cmp(&work.tasks[b].id))
        });
        for i in order {
            while work.tasks[i].threshold < top {
                let old = work.tasks[i].threshold;
                let new = old + 1;
                outcome.iterations += 1;
                let affected = affected_index(&work, i, new);
                work.tasks[i].threshold = new;
                let accepted = match affected {
                    None => true,
                    Some(j) => TaskAnalysis::for_index(&work, j, &check).wcrt().schedulable,
                };
                outcome.audit.push(AuditEntry {
                    task: work.tasks[i].id.clone(),
                    old,
                    new,
                    affected: affected.map(|j| work.tasks[j].id.clone()),
                    accepted,
                });
                if !accepted {
                    work.tasks[i].threshold = old;
                    outcome.reverts += 1;
                    break;
                }
            }
        }
    }

    let full = rta::analyze_unchecked(&work, config);
    if start_schedulable && !full.schedulable {
        for r in full.results.iter().filter(|r| !r.schedulable) {
            outcome.diagnostics.push(format!(
                "task `{}` misses its deadline under the final assignment (wcrt {} > {})",
                r.task, r.wcrt, r.deadline
            ));
        }
    }
    outcome.schedulable = full.schedulable;
    outcome.thresholds = work
        .tasks
        .iter()
        .map(|t| (t.id.clone(), t.threshold))
        .collect();
    Ok(outcome)
}
