//! Worst-case response-time analysis for 3-phase tasks under partitioned
//! fixed-priority scheduling with preemption thresholds.
//!
//! For a task `i` the analysis bounds four kinds of delay:
//!
//! - intra-core interference from local higher-or-equal priority tasks,
//! - intra-core blocking by one local lower-priority task,
//! - inter-core interference from remote higher-or-equal priority memory
//!   phases on the bus,
//! - inter-core blocking by remote lower-priority memory phases that were
//!   granted just before a local request.
//!
//! These feed three fixed-point iterations: the level-i active period, the
//! read-phase start of every job inside it, and the write-phase finish of
//! every job. The WCRT is the largest finish-minus-release over those jobs.
//!
//! Before a job starts, every local task with `P >= P_i` can delay it
//! ([`HepScope::Cde`]); once its read phase has started only tasks with
//! `P > θ_i` can ([`HepScope::EOnly`]).

mod report;

use serde::{Deserialize, Serialize};

pub use report::{AnalysisReport, JobReport, TaskReport, Verdict};

use crate::error::{Error, Result};
use crate::task_model::{
    lcm_saturating, validate, Category, Finding, RelativeSets, System, TaskId, Time,
};

/// How many releases of a sporadic task fit in a window of length `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReleaseMode {
    /// `⌈t/T⌉`: releases in a half-open window.
    Ceil,
    /// `⌊t/T⌋ + 1`: also counts a release exactly at the end of the window.
    FloorPlusOne,
}

/// Which local higher-or-equal priority tasks are considered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HepScope {
    /// Categories C, D and E (all local tasks with `P_j >= P_i`).
    Cde,
    /// Category E only (local tasks with `P_j > θ_i`).
    EOnly,
}

/// Maximum number of releases of a task with period `period` in a window of
/// length `t`.
pub fn eta_plus(t: Time, period: Time, mode: ReleaseMode) -> Result<u64> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    Ok(releases(t, period, mode))
}

#[inline]
fn releases(t: Time, period: Time, mode: ReleaseMode) -> u64 {
    match mode {
        ReleaseMode::Ceil => t.div_ceil(period),
        ReleaseMode::FloorPlusOne => t / period + 1,
    }
}

/// Bound on iterate values above which a fixed point counts as diverged.
pub const CAP_CEILING: Time = 1 << 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtaConfig {
    /// Override for the divergence cap. The default is twice the hyperperiod
    /// of the core's tasks, clamped at [`CAP_CEILING`].
    pub divergence_cap: Option<Time>,
    /// Iteration budget per fixed point; exhausting it counts as divergence.
    pub max_iterations: u64,
    /// Stop enumerating jobs once one misses its deadline. The verdict is
    /// unchanged; the reported WCRT is then only a lower bound of the full
    /// analysis result.
    pub stop_at_first_miss: bool,
    /// Mutation-testing switch: analyse as if intra-core blocking were zero.
    /// Unsound; only used to check that the simulator catches it.
    pub drop_intra_blocking: bool,
}

impl Default for RtaConfig {
    fn default() -> Self {
        RtaConfig {
            divergence_cap: None,
            max_iterations: 1_000_000,
            stop_at_first_miss: false,
            drop_intra_blocking: false,
        }
    }
}

/// Result of one fixed-point iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixpoint {
    /// The fixed point, or the first iterate above the cap when diverged.
    pub value: Time,
    pub diverged: bool,
    pub iterations: u64,
}

#[derive(Clone, Copy, Debug)]
struct Demand {
    period: Time,
    cost: Time,
}

impl Demand {
    #[inline]
    fn over(&self, window: Time, mode: ReleaseMode) -> Time {
        releases(window, self.period, mode).saturating_mul(self.cost)
    }
}

fn total(demands: &[Demand], window: Time, mode: ReleaseMode) -> Time {
    demands
        .iter()
        .fold(0, |acc: Time, d| acc.saturating_add(d.over(window, mode)))
}

fn count(demands: &[Demand], window: Time, mode: ReleaseMode) -> u64 {
    demands
        .iter()
        .fold(0, |acc: u64, d| acc.saturating_add(releases(window, d.period, mode)))
}

/// Per-job bounds inside the active period, offsets relative to its start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobBound {
    /// Job number, starting at 1.
    pub k: u64,
    pub release: Time,
    pub start: Time,
    pub finish: Time,
    pub response: Time,
}

/// Analysis outcome for one task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtaResult {
    pub task: TaskId,
    /// Length of the level-i active period.
    pub active_period: Time,
    /// Number of jobs of the task inside the active period.
    pub jobs_in_period: u64,
    pub jobs: Vec<JobBound>,
    pub wcrt: Time,
    pub deadline: Time,
    pub schedulable: bool,
    pub diverged: bool,
    /// Job enumeration stopped early at the first deadline miss.
    pub truncated: bool,
    pub iterations: u64,
}

impl RtaResult {
    /// Signed `D - wcrt`.
    pub fn slack(&self) -> i64 {
        self.deadline as i64 - self.wcrt as i64
    }
}

/// Precomputed interference structure of one task under analysis.
pub struct TaskAnalysis {
    index: usize,
    id: TaskId,
    period: Time,
    deadline: Time,
    wcet: Time,
    cde: Vec<Demand>,
    e_only: Vec<Demand>,
    remote_hep: Vec<Demand>,
    remote_lp: Vec<Demand>,
    // (phase length, period) of every remote lower-priority read and write
    // phase, longest first.
    remote_lp_phases: Vec<(Time, Time)>,
    blocking: Time,
    cap: Time,
    config: RtaConfig,
}

impl TaskAnalysis {
    pub fn new(sys: &System, id: &TaskId, config: &RtaConfig) -> Result<Self> {
        let index = sys.index_of(id)?;
        Ok(Self::for_index(sys, index, config))
    }

    pub fn for_index(sys: &System, index: usize, config: &RtaConfig) -> Self {
        let me = &sys.tasks[index];
        let sets = RelativeSets::for_index(sys, index);
        let demand = |k: usize, memory_only: bool| {
            let t = &sys.tasks[k];
            Demand {
                period: t.period,
                cost: if memory_only {
                    t.memory_phases()
                } else {
                    t.wcet()
                },
            }
        };
        let cde: Vec<Demand> = sets.hep_local.iter().map(|&k| demand(k, false)).collect();
        let e_only = sets
            .local(Category::E)
            .iter()
            .map(|&k| demand(k, false))
            .collect();
        let remote_hep = sets.hep_remote.iter().map(|&k| demand(k, true)).collect();
        let remote_lp = sets.lp_remote.iter().map(|&k| demand(k, true)).collect();
        let mut remote_lp_phases: Vec<(Time, Time)> = sets
            .lp_remote
            .iter()
            .flat_map(|&k| {
                let t = &sys.tasks[k];
                [(t.read, t.period), (t.write, t.period)]
            })
            .collect();
        remote_lp_phases.sort_by_key(|&(len, _)| std::cmp::Reverse(len));

        let from_a = sets
            .local(Category::A)
            .iter()
            .map(|&k| sys.tasks[k].read.max(sys.tasks[k].write));
        let from_bf = sets
            .local(Category::B)
            .iter()
            .chain(sets.local(Category::F))
            .map(|&k| sys.tasks[k].wcet());
        let blocking = if config.drop_intra_blocking {
            0
        } else {
            from_a.chain(from_bf).max().unwrap_or(0)
        };

        let cap = config.divergence_cap.unwrap_or_else(|| {
            let core = sys.core_of(index);
            let lcm = lcm_saturating(sys.local_tasks(core).map(|k| sys.tasks[k].period));
            lcm.saturating_mul(2).min(CAP_CEILING)
        });

        TaskAnalysis {
            index,
            id: me.id.clone(),
            period: me.period,
            deadline: me.deadline,
            wcet: me.wcet(),
            cde,
            e_only,
            remote_hep,
            remote_lp,
            remote_lp_phases,
            blocking,
            cap,
            config: config.clone(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn divergence_cap(&self) -> Time {
        self.cap
    }

    fn scope(&self, scope: HepScope) -> &[Demand] {
        match scope {
            HepScope::Cde => &self.cde,
            HepScope::EOnly => &self.e_only,
        }
    }

    /// Work of local higher-or-equal priority tasks in `scope` released in a
    /// window of length `window`.
    pub fn intra_interference(&self, window: Time, scope: HepScope, mode: ReleaseMode) -> Time {
        total(self.scope(scope), window, mode)
    }

    /// Longest blocking by a single local lower-priority task: one memory
    /// phase of a category-A task, or the whole execution of a B or F task.
    pub fn intra_blocking(&self) -> Time {
        self.blocking
    }

    /// Bus time of remote higher-or-equal priority tasks released in the
    /// window. Remote thresholds play no role.
    pub fn inter_interference(&self, window: Time, mode: ReleaseMode) -> Time {
        total(&self.remote_hep, window, mode)
    }

    /// How many times the task can suffer inter-core blocking: two direct
    /// blockings plus two per local interfering job.
    pub fn phi(&self, window: Time, scope: HepScope, mode: ReleaseMode) -> u64 {
        count(self.scope(scope), window, mode)
            .saturating_mul(2)
            .saturating_add(2)
    }

    /// How many inter-core blockings remote lower-priority jobs can cause in
    /// the window (two per job).
    pub fn mu(&self, window: Time, mode: ReleaseMode) -> u64 {
        count(&self.remote_lp, window, mode).saturating_mul(2)
    }

    /// Inter-core blocking: all remote lower-priority memory phases in the
    /// window when they are no more than `phi`, otherwise the `phi` longest
    /// of them.
    pub fn inter_blocking(&self, window: Time, scope: HepScope, mode: ReleaseMode) -> Time {
        let phi = self.phi(window, scope, mode);
        let mu = self.mu(window, mode);
        if phi >= mu {
            return total(&self.remote_lp, window, mode);
        }
        let mut budget = phi;
        let mut sum: Time = 0;
        for &(len, period) in &self.remote_lp_phases {
            if budget == 0 {
                break;
            }
            let take = releases(window, period, mode).min(budget);
            sum = sum.saturating_add(take.saturating_mul(len));
            budget -= take;
        }
        sum
    }

    fn iterate(&self, seed: Time, f: impl Fn(Time) -> Time) -> Fixpoint {
        let mut current = seed;
        let mut iterations = 0;
        loop {
            if current > self.cap {
                return Fixpoint {
                    value: current,
                    diverged: true,
                    iterations,
                };
            }
            if iterations >= self.config.max_iterations {
                return Fixpoint {
                    value: current,
                    diverged: true,
                    iterations,
                };
            }
            iterations += 1;
            let next = f(current);
            debug_assert!(next >= current, "non-monotone iterate {next} < {current}");
            if next <= current {
                return Fixpoint {
                    value: current,
                    diverged: false,
                    iterations,
                };
            }
            current = next;
        }
    }

    /// Length of the longest level-i active period.
    pub fn active_period(&self) -> Fixpoint {
        use ReleaseMode::Ceil;
        let seed = self.blocking.saturating_add(self.wcet);
        self.iterate(seed, |l| {
            self.intra_interference(l, HepScope::Cde, Ceil)
                .saturating_add(self.blocking)
                .saturating_add(releases(l, self.period, Ceil).saturating_mul(self.wcet))
                .saturating_add(self.inter_interference(l, Ceil))
                .saturating_add(self.inter_blocking(l, HepScope::Cde, Ceil))
        })
    }

    /// Latest read-phase start of job `k` (1-based), relative to the start of
    /// the active period.
    pub fn start_time(&self, k: u64) -> Result<Fixpoint> {
        if k < 1 {
            return Err(Error::InvalidArgument("job index starts at 1".into()));
        }
        Ok(self.start_time_from(k, 0))
    }

    // Iteration may begin at any point not above the least fixed point;
    // `floor` lets job k start from the start time of job k-1.
    fn start_time_from(&self, k: u64, floor: Time) -> Fixpoint {
        use ReleaseMode::FloorPlusOne as Fp1;
        let own = (k - 1).saturating_mul(self.wcet);
        let seed = self.blocking.saturating_add(own).max(floor);
        self.iterate(seed, |s| {
            self.intra_interference(s, HepScope::Cde, Fp1)
                .saturating_add(self.blocking)
                .saturating_add(self.inter_interference(s, Fp1))
                .saturating_add(self.inter_blocking(s, HepScope::Cde, Fp1))
                .saturating_add(own)
        })
    }

    /// Delay terms that can hit the job after its read phase has started,
    /// evaluated over `[0, window)`.
    fn after_start(&self, window: Time, mode: ReleaseMode) -> Time {
        self.intra_interference(window, HepScope::EOnly, mode)
            .saturating_add(self.inter_interference(window, mode))
            .saturating_add(self.inter_blocking(window, HepScope::EOnly, mode))
    }

    /// Latest write-phase finish of job `k` given its read start `start`.
    ///
    /// Only delays arising in `(start, finish)` are added; intra-core
    /// blocking was already paid before the start.
    pub fn finish_time(&self, k: u64, start: Time) -> Result<Fixpoint> {
        if k < 1 {
            return Err(Error::InvalidArgument("job index starts at 1".into()));
        }
        Ok(self.finish_from(start))
    }

    fn finish_from(&self, start: Time) -> Fixpoint {
        let before = self.after_start(start, ReleaseMode::FloorPlusOne);
        let base = start.saturating_add(self.wcet);
        self.iterate(base, |f| {
            let extra = self
                .after_start(f, ReleaseMode::Ceil)
                .saturating_sub(before);
            base.saturating_add(extra)
        })
    }

    /// Full pipeline: active period, job count, per-job start and finish,
    /// and the maximum response time.
    pub fn wcrt(&self) -> RtaResult {
        let period_fp = self.active_period();
        let mut iterations = period_fp.iterations;
        let mut result = RtaResult {
            task: self.id.clone(),
            active_period: period_fp.value,
            jobs_in_period: 0,
            jobs: Vec::new(),
            wcrt: period_fp.value,
            deadline: self.deadline,
            schedulable: false,
            diverged: period_fp.diverged,
            truncated: false,
            iterations: 0,
        };
        if period_fp.diverged {
            result.iterations = iterations;
            return result;
        }
        let jobs = period_fp.value.div_ceil(self.period);
        result.jobs_in_period = jobs;
        result.wcrt = 0;
        let mut previous_start = 0;
        for k in 1..=jobs {
            let s = self.start_time_from(k, previous_start);
            iterations += s.iterations;
            if s.diverged {
                result.diverged = true;
                result.wcrt = result.wcrt.max(s.value);
                break;
            }
            previous_start = s.value;
            let f = self.finish_from(s.value);
            iterations += f.iterations;
            if f.diverged {
                result.diverged = true;
                result.wcrt = result.wcrt.max(f.value);
                break;
            }
            let release = (k - 1).saturating_mul(self.period);
            let response = f.value.saturating_sub(release);
            result.jobs.push(JobBound {
                k,
                release,
                start: s.value,
                finish: f.value,
                response,
            });
            result.wcrt = result.wcrt.max(response);
            if self.config.stop_at_first_miss && response > self.deadline && k < jobs {
                result.truncated = true;
                break;
            }
        }
        result.iterations = iterations;
        result.schedulable = !result.diverged && result.wcrt <= self.deadline;
        result
    }
}

/// WCRT of the task `id` in `sys`.
pub fn wcrt(sys: &System, id: &TaskId, config: &RtaConfig) -> Result<RtaResult> {
    Ok(TaskAnalysis::new(sys, id, config)?.wcrt())
}

/// Per-task results and the system verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemAnalysis {
    pub results: Vec<RtaResult>,
    pub schedulable: bool,
}

impl SystemAnalysis {
    pub fn result(&self, id: &TaskId) -> Option<&RtaResult> {
        self.results.iter().find(|r| &r.task == id)
    }
}

/// Findings that stop the timing analysis. Memory-capacity findings are left
/// to the memory analysis.
pub fn blocking_findings(sys: &System) -> Vec<Finding> {
    validate(sys)
        .into_iter()
        .filter(|f| !f.is_memory_only())
        .collect()
}

/// Analyse every task of a validated system.
pub fn analyze(sys: &System, config: &RtaConfig) -> Result<SystemAnalysis> {
    let findings = blocking_findings(sys);
    if !findings.is_empty() {
        return Err(Error::InvalidSystem(findings));
    }
    Ok(analyze_unchecked(sys, config))
}

/// [`analyze`] without the validation gate.
pub fn analyze_unchecked(sys: &System, config: &RtaConfig) -> SystemAnalysis {
    let results: Vec<RtaResult> = (0..sys.len())
        .map(|k| TaskAnalysis::for_index(sys, k, config).wcrt())
        .collect();
    let schedulable = results.iter().all(|r| r.schedulable);
    SystemAnalysis {
        results,
        schedulable,
    }
}

/// Verdict only; stops at the first unschedulable task.
pub fn is_schedulable(sys: &System, config: &RtaConfig) -> bool {
    let config = RtaConfig {
        stop_at_first_miss: true,
        ..config.clone()
    };
    (0..sys.len()).all(|k| TaskAnalysis::for_index(sys, k, &config).wcrt().schedulable)
}
