//! Tasks, platforms and systems.
//!
//! All timing parameters are integer microseconds and all sizes are bytes.
//! Priorities are positive integers where a larger value means a higher
//! priority; a task's preemption threshold is never below its nominal
//! priority.

mod category;
pub mod io;
mod mapping;
mod validate;

use serde::{Deserialize, Serialize};

pub use category::{classify, classify_levels, relative_sets, Category, RelativeSets};
pub use mapping::{assign_rm_priorities, worst_fit_map};
pub use validate::{validate, Finding};

use crate::error::{Error, Result};

/// Time in microseconds.
pub type Time = u64;
/// Memory size in bytes.
pub type Bytes = u64;
/// Nominal priority or preemption threshold; larger is higher.
pub type Priority = u32;
/// Zero-based core index.
pub type CoreId = usize;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub String);

impl TaskId {
    pub fn new(id: impl Into<String>) -> Self {
        TaskId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TaskId {
    fn from(s: &str) -> Self {
        TaskId(s.to_owned())
    }
}

/// Breakdown of a task's memory footprint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryLayout {
    /// Code size.
    pub code: Bytes,
    /// Total data size.
    pub data: Bytes,
    /// Maximum stack usage.
    pub stack: Bytes,
    /// Data read in the read phase.
    pub read: Bytes,
    /// Data written in the write phase.
    pub write: Bytes,
}

impl MemoryLayout {
    pub fn footprint(&self) -> Bytes {
        self.code + self.data + self.stack
    }
}

/// One sporadic 3-phase task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub id: TaskId,
    /// Minimum inter-arrival time.
    pub period: Time,
    /// Relative deadline, at most `period`.
    pub deadline: Time,
    /// Memory footprint resident from read start to write end.
    pub memory: Bytes,
    pub priority: Priority,
    pub threshold: Priority,
    pub read: Time,
    pub exec: Time,
    pub write: Time,
    pub layout: Option<MemoryLayout>,
}

impl Task {
    /// A task with implicit deadline, priority and threshold 1, and no
    /// memory footprint.
    pub fn new(id: impl Into<String>, period: Time, read: Time, exec: Time, write: Time) -> Self {
        Task {
            id: TaskId::new(id),
            period,
            deadline: period,
            memory: 0,
            priority: 1,
            threshold: 1,
            read,
            exec,
            write,
            layout: None,
        }
    }

    pub fn with_priority(mut self, priority: Priority, threshold: Priority) -> Self {
        self.priority = priority;
        self.threshold = threshold;
        self
    }

    pub fn with_deadline(mut self, deadline: Time) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn with_memory(mut self, memory: Bytes) -> Self {
        self.memory = memory;
        self
    }

    pub fn with_layout(mut self, layout: MemoryLayout) -> Self {
        self.memory = layout.footprint();
        self.layout = Some(layout);
        self
    }

    /// Total worst-case execution time over the three phases.
    pub fn wcet(&self) -> Time {
        self.read + self.exec + self.write
    }

    /// Bus time of one job: read plus write phase.
    pub fn memory_phases(&self) -> Time {
        self.read + self.write
    }

    pub fn utilization(&self) -> f64 {
        self.wcet() as f64 / self.period as f64
    }
}

/// Core count and per-core local memory size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Platform {
    pub cores: usize,
    pub spm: Bytes,
}

impl Platform {
    pub fn new(cores: usize, spm: Bytes) -> Self {
        Platform { cores, spm }
    }
}

/// A platform, a task set and a static partitioning of the tasks onto cores.
///
/// `assignment[k]` is the core of `tasks[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    pub platform: Platform,
    pub tasks: Vec<Task>,
    pub assignment: Vec<CoreId>,
}

impl System {
    pub fn new(platform: Platform, tasks: Vec<Task>, assignment: Vec<CoreId>) -> Result<Self> {
        if tasks.len() != assignment.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tasks but {} core assignments",
                tasks.len(),
                assignment.len()
            )));
        }
        Ok(System {
            platform,
            tasks,
            assignment,
        })
    }

    /// All tasks on a single core.
    pub fn uniprocessor(spm: Bytes, tasks: Vec<Task>) -> Self {
        let assignment = vec![0; tasks.len()];
        System {
            platform: Platform::new(1, spm),
            tasks,
            assignment,
        }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn core_of(&self, index: usize) -> CoreId {
        self.assignment[index]
    }

    pub fn index_of(&self, id: &TaskId) -> Result<usize> {
        self.tasks
            .iter()
            .position(|t| &t.id == id)
            .ok_or_else(|| Error::NotFound(id.clone()))
    }

    pub fn task(&self, id: &TaskId) -> Result<&Task> {
        self.index_of(id).map(|k| &self.tasks[k])
    }

    /// Indices of the tasks mapped to `core`, in task order.
    pub fn local_tasks(&self, core: CoreId) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == core)
            .map(|(k, _)| k)
    }

    /// Highest nominal priority in the system (0 when empty).
    pub fn top_priority(&self) -> Priority {
        self.tasks.iter().map(|t| t.priority).max().unwrap_or(0)
    }

    /// Least common multiple of all periods, saturating at `u64::MAX`.
    pub fn hyperperiod(&self) -> Time {
        lcm_saturating(self.tasks.iter().map(|t| t.period))
    }

    pub fn thresholds(&self) -> Vec<Priority> {
        self.tasks.iter().map(|t| t.threshold).collect()
    }

    /// Copy of the system with thresholds equal to nominal priorities
    /// (fully preemptive execution phases).
    pub fn fully_preemptive(&self) -> System {
        let mut sys = self.clone();
        for t in &mut sys.tasks {
            t.threshold = t.priority;
        }
        sys
    }

    /// Copy of the system with every threshold at the top priority
    /// (non-preemptive execution phases).
    pub fn non_preemptive(&self) -> System {
        let top = self.top_priority();
        let mut sys = self.clone();
        for t in &mut sys.tasks {
            t.threshold = top.max(t.priority);
        }
        sys
    }

    pub fn with_thresholds(&self, thresholds: &[Priority]) -> Result<System> {
        if thresholds.len() != self.tasks.len() {
            return Err(Error::InvalidArgument(format!(
                "{} thresholds for {} tasks",
                thresholds.len(),
                self.tasks.len()
            )));
        }
        let mut sys = self.clone();
        for (t, &th) in sys.tasks.iter_mut().zip(thresholds) {
            t.threshold = th;
        }
        Ok(sys)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub(crate) fn lcm_saturating(values: impl IntoIterator<Item = Time>) -> Time {
    let mut acc: u64 = 1;
    for v in values {
        if v == 0 {
            continue;
        }
        let g = gcd(acc, v);
        acc = match (acc / g).checked_mul(v) {
            Some(x) => x,
            None => return u64::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wcet_is_phase_sum() {
        let t = Task::new("a", 10, 1, 4, 2);
        assert_eq!(t.wcet(), 7);
        assert_eq!(t.memory_phases(), 3);
    }

    #[test]
    fn layout_sets_footprint() {
        let layout = MemoryLayout {
            code: 100,
            data: 20,
            stack: 30,
            read: 18,
            write: 12,
        };
        let t = Task::new("a", 10, 1, 4, 2).with_layout(layout);
        assert_eq!(t.memory, 150);
    }

    #[test]
    fn hyperperiod_of_automotive_periods() {
        let periods = [1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 1_000_000];
        assert_eq!(lcm_saturating(periods), 1_000_000);
        assert_eq!(lcm_saturating([u64::MAX - 1, u64::MAX - 2]), u64::MAX);
    }

    #[test]
    fn assignment_length_checked() {
        let r = System::new(Platform::new(1, 10), vec![Task::new("a", 10, 0, 1, 0)], vec![]);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn threshold_presets() {
        let sys = System::uniprocessor(
            10,
            vec![
                Task::new("a", 10, 0, 1, 0).with_priority(1, 2),
                Task::new("b", 10, 0, 1, 0).with_priority(3, 3),
            ],
        );
        assert_eq!(sys.fully_preemptive().thresholds(), vec![1, 3]);
        assert_eq!(sys.non_preemptive().thresholds(), vec![3, 3]);
    }
}
