//! Discrete-event simulator of the 3-phase execution model.
//!
//! Rules, per instant, in this order:
//!
//! 1. the bus phase ending now completes (a write end pops the job from its
//!    core's resident stack, a read end starts the execution phase),
//! 2. execution phases ending now complete and post a write request,
//! 3. jobs due now are released,
//! 4. scheduling decisions repeat until nothing changes.
//!
//! Each core keeps a stack of resident jobs; only the top one can run. An
//! executing top is paused as soon as a ready local job with nominal priority
//! above its threshold exists, and that job then requests the bus for its
//! read phase. Read and write phases are never interrupted. The bus serves
//! at most one phase at a time and, when free, grants the pending request
//! with the highest nominal priority. A job's footprint counts as resident
//! from its read grant until its write completes.

mod trace;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use trace::{
    check_dominance, BusGrant, EventKind, JobRecord, Phase, SimEvent, SimSummary, SimTrace,
    Violation,
};

use crate::error::{Error, Result};
use crate::task_model::{Bytes, CoreId, Priority, System, Time};

/// Longest horizon [`simulate`] accepts.
pub const MAX_HORIZON: Time = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReleasePattern {
    /// First release at 0, then strictly every `T`.
    Synchronous,
    /// Sporadic: first release in `[0, max_delay]`, then every `T` plus an
    /// extra delay drawn from `[0, max_delay]`.
    Jittered { seed: u64, max_delay: Time },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Jobs are released strictly before this time.
    pub horizon: Time,
    pub release: ReleasePattern,
    /// Per-task delay of the first release, in task order. Missing entries
    /// are 0.
    pub offsets: Vec<Time>,
    /// The run stops here even if jobs are still pending. Defaults to a few
    /// horizons past the last release.
    pub time_limit: Option<Time>,
}

impl SimConfig {
    pub fn new(horizon: Time) -> Self {
        SimConfig {
            horizon,
            release: ReleasePattern::Synchronous,
            offsets: Vec::new(),
            time_limit: None,
        }
    }

    pub fn with_offsets(mut self, offsets: Vec<Time>) -> Self {
        self.offsets = offsets;
        self
    }

    pub fn jittered(horizon: Time, seed: u64, max_delay: Time) -> Self {
        SimConfig {
            horizon,
            release: ReleasePattern::Jittered { seed, max_delay },
            offsets: Vec::new(),
            time_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Waiting,
    Reading,
    Executing,
    Paused,
    WritePending,
    Writing,
    Done,
}

struct Job {
    task: usize,
    stage: Stage,
    remaining: Time,
    resumed_at: Time,
}

#[derive(Clone, Copy)]
struct BusSlot {
    job: usize,
    phase: Phase,
    end: Time,
}

struct Engine<'a> {
    sys: &'a System,
    jobs: Vec<Job>,
    records: Vec<JobRecord>,
    queues: Vec<VecDeque<usize>>,
    active: Vec<Option<usize>>,
    next_seq: Vec<u64>,
    next_release: Vec<Option<Time>>,
    local: Vec<Vec<usize>>,
    stacks: Vec<Vec<usize>>,
    occupancy: Vec<Bytes>,
    bus: Option<BusSlot>,
    rng: Option<(ChaCha8Rng, Time)>,
    horizon: Time,
    trace: SimTrace,
}

impl<'a> Engine<'a> {
    fn new(sys: &'a System, cfg: &SimConfig) -> Self {
        let n = sys.len();
        let cores = sys.platform.cores;
        let mut rng = match cfg.release {
            ReleasePattern::Synchronous => None,
            ReleasePattern::Jittered { seed, max_delay } => {
                Some((ChaCha8Rng::seed_from_u64(seed), max_delay))
            }
        };
        let next_release = (0..n)
            .map(|k| {
                let offset = cfg.offsets.get(k).copied().unwrap_or(0);
                let first = match &mut rng {
                    None => offset,
                    Some((r, max)) => offset.saturating_add(r.random_range(0..=*max)),
                };
                (first < cfg.horizon).then_some(first)
            })
            .collect();
        let mut local = vec![Vec::new(); cores];
        for k in 0..n {
            local[sys.core_of(k)].push(k);
        }
        Engine {
            sys,
            jobs: Vec::new(),
            records: Vec::new(),
            queues: vec![VecDeque::new(); n],
            active: vec![None; n],
            next_seq: vec![0; n],
            next_release,
            local,
            stacks: vec![Vec::new(); cores],
            occupancy: vec![0; cores],
            bus: None,
            rng,
            horizon: cfg.horizon,
            trace: SimTrace::empty(sys),
        }
    }

    fn event(&mut self, time: Time, job: usize, kind: EventKind) {
        let r = &self.records[job];
        self.trace.events.push(SimEvent {
            time,
            core: r.core,
            task: r.task.clone(),
            job: r.job,
            kind,
        });
    }

    fn set_occupancy(&mut self, core: CoreId, time: Time, value: Bytes) {
        self.occupancy[core] = value;
        self.trace.occupancy[core].push((time, value));
        let peak = &mut self.trace.peak_memory[core];
        *peak = (*peak).max(value);
    }

    fn release_due(&mut self, now: Time) {
        for task in 0..self.sys.len() {
            while self.next_release[task] == Some(now) {
                let t = &self.sys.tasks[task];
                let seq = self.next_seq[task];
                self.next_seq[task] += 1;
                let idx = self.jobs.len();
                self.jobs.push(Job {
                    task,
                    stage: Stage::Waiting,
                    remaining: t.exec,
                    resumed_at: 0,
                });
                self.records.push(JobRecord::new(
                    t.id.clone(),
                    task,
                    seq,
                    self.sys.core_of(task),
                    now,
                    now.saturating_add(t.deadline),
                ));
                self.queues[task].push_back(idx);
                self.event(now, idx, EventKind::Release);
                let gap = match &mut self.rng {
                    None => t.period,
                    Some((r, max)) => t.period.saturating_add(r.random_range(0..=*max)),
                };
                let next = now.saturating_add(gap);
                self.next_release[task] = (next < self.horizon).then_some(next);
            }
        }
    }

    // Highest-priority local task whose oldest pending job may start, above
    // `floor` if given.
    fn candidate(&self, core: CoreId, floor: Option<Priority>) -> Option<usize> {
        self.local[core]
            .iter()
            .copied()
            .filter(|&k| self.active[k].is_none() && !self.queues[k].is_empty())
            .filter(|&k| floor.is_none_or(|f| self.sys.tasks[k].priority > f))
            .max_by_key(|&k| self.sys.tasks[k].priority)
    }

    fn pause(&mut self, job: usize, now: Time) {
        let j = &mut self.jobs[job];
        let ran = now - j.resumed_at;
        j.remaining -= ran;
        j.stage = Stage::Paused;
        let start = j.resumed_at;
        if ran > 0 {
            self.records[job].exec.push((start, now));
        }
        self.trace.preemptions += 1;
        self.event(now, job, EventKind::Preempt);
    }

    fn resume(&mut self, job: usize, now: Time) {
        let j = &mut self.jobs[job];
        j.stage = Stage::Executing;
        j.resumed_at = now;
        self.event(now, job, EventKind::Resume);
    }

    fn finish_exec(&mut self, job: usize, now: Time) {
        let j = &mut self.jobs[job];
        let start = j.resumed_at;
        j.remaining = 0;
        j.stage = Stage::WritePending;
        if now > start {
            self.records[job].exec.push((start, now));
        }
        self.event(now, job, EventKind::ExecEnd);
    }

    fn complete_bus(&mut self, slot: BusSlot, now: Time) {
        let job = slot.job;
        let core = self.records[job].core;
        match slot.phase {
            Phase::Read => {
                self.records[job].read_end = Some(now);
                let j = &mut self.jobs[job];
                j.stage = Stage::Executing;
                j.resumed_at = now;
                self.event(now, job, EventKind::ReadEnd);
            }
            Phase::Write => {
                let top = self.stacks[core].pop();
                debug_assert_eq!(top, Some(job), "write end must pop the stack top");
                let task = self.jobs[job].task;
                self.jobs[job].stage = Stage::Done;
                self.active[task] = None;
                let occ = self.occupancy[core] - self.sys.tasks[task].memory;
                self.set_occupancy(core, now, occ);
                let rec = &mut self.records[job];
                rec.write_end = Some(now);
                rec.response = Some(now - rec.release);
                rec.missed = now > rec.deadline;
                self.event(now, job, EventKind::WriteEnd);
                if self.records[job].missed {
                    self.trace.deadline_misses += 1;
                    self.event(now, job, EventKind::DeadlineMiss);
                }
            }
        }
    }

    fn grant(&mut self, job: usize, phase: Phase, now: Time) -> BusSlot {
        let task = self.jobs[job].task;
        let t = &self.sys.tasks[task];
        let core = self.sys.core_of(task);
        let len = match phase {
            Phase::Read => t.read,
            Phase::Write => t.write,
        };
        let (memory, end) = (t.memory, now + len);
        match phase {
            Phase::Read => {
                let front = self.queues[task].pop_front();
                debug_assert_eq!(front, Some(job));
                self.active[task] = Some(job);
                self.stacks[core].push(job);
                let occ = self.occupancy[core] + memory;
                self.set_occupancy(core, now, occ);
                self.jobs[job].stage = Stage::Reading;
                self.records[job].read_start = Some(now);
                self.event(now, job, EventKind::ReadStart);
            }
            Phase::Write => {
                self.jobs[job].stage = Stage::Writing;
                self.records[job].write_start = Some(now);
                self.event(now, job, EventKind::WriteStart);
            }
        }
        self.trace.bus.push(BusGrant {
            core,
            task: t.id.clone(),
            job: self.records[job].job,
            phase,
            start: now,
            end,
        });
        BusSlot { job, phase, end }
    }

    fn request(&self, core: CoreId) -> Option<(Priority, usize, Phase)> {
        let tasks = &self.sys.tasks;
        match self.stacks[core].last() {
            None => self
                .candidate(core, None)
                .map(|k| (tasks[k].priority, self.queues[k][0], Phase::Read)),
            Some(&top) => {
                let t = &tasks[self.jobs[top].task];
                match self.jobs[top].stage {
                    Stage::WritePending => Some((t.priority, top, Phase::Write)),
                    Stage::Paused => self
                        .candidate(core, Some(t.threshold))
                        .map(|k| (tasks[k].priority, self.queues[k][0], Phase::Read)),
                    _ => None,
                }
            }
        }
    }

    fn decide(&mut self, now: Time) {
        loop {
            let mut changed = false;
            for core in 0..self.stacks.len() {
                let Some(&top) = self.stacks[core].last() else {
                    continue;
                };
                let threshold = self.sys.tasks[self.jobs[top].task].threshold;
                match self.jobs[top].stage {
                    Stage::Executing if self.jobs[top].remaining == 0 => {
                        self.finish_exec(top, now);
                        changed = true;
                    }
                    Stage::Executing => {
                        if self.candidate(core, Some(threshold)).is_some() {
                            self.pause(top, now);
                            changed = true;
                        }
                    }
                    Stage::Paused => {
                        if self.candidate(core, Some(threshold)).is_none() {
                            self.resume(top, now);
                            changed = true;
                        }
                    }
                    _ => {}
                }
            }
            if self.bus.is_none() {
                let best = (0..self.stacks.len())
                    .filter_map(|c| self.request(c))
                    .max_by_key(|&(p, _, _)| p);
                if let Some((_, job, phase)) = best {
                    let slot = self.grant(job, phase, now);
                    if slot.end == now {
                        self.complete_bus(slot, now);
                    } else {
                        self.bus = Some(slot);
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn next_instant(&self) -> Option<Time> {
        let bus = self.bus.map(|b| b.end);
        let exec = self.stacks.iter().filter_map(|s| {
            let &top = s.last()?;
            let j = &self.jobs[top];
            (j.stage == Stage::Executing).then(|| j.resumed_at + j.remaining)
        });
        let releases = self.next_release.iter().flatten().copied();
        bus.into_iter().chain(exec).chain(releases).min()
    }

    fn run(mut self, limit: Time) -> SimTrace {
        let mut now = 0;
        loop {
            if let Some(slot) = self.bus {
                if slot.end == now {
                    self.bus = None;
                    self.complete_bus(slot, now);
                }
            }
            for core in 0..self.stacks.len() {
                if let Some(&top) = self.stacks[core].last() {
                    let j = &self.jobs[top];
                    if j.stage == Stage::Executing && j.resumed_at + j.remaining == now {
                        self.finish_exec(top, now);
                    }
                }
            }
            self.release_due(now);
            self.decide(now);
            match self.next_instant() {
                None => break,
                Some(t) if t > limit => {
                    self.trace.incomplete = true;
                    break;
                }
                Some(t) => now = t,
            }
        }
        self.trace.end_time = now;
        for (rec, job) in self.records.iter_mut().zip(&self.jobs) {
            if job.stage != Stage::Done {
                rec.missed = true;
                self.trace.deadline_misses += 1;
            }
        }
        self.trace.jobs = self.records;
        self.trace
    }
}

/// Simulate `sys` under `cfg`.
pub fn simulate(sys: &System, cfg: &SimConfig) -> Result<SimTrace> {
    if cfg.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if cfg.horizon > MAX_HORIZON {
        return Err(Error::InvalidArgument(format!(
            "horizon {} exceeds the limit {MAX_HORIZON}",
            cfg.horizon
        )));
    }
    if let Some(t) = sys.tasks.iter().find(|t| t.period == 0) {
        return Err(Error::InvalidArgument(format!(
            "task `{}` has zero period",
            t.id
        )));
    }
    let max_period = sys.tasks.iter().map(|t| t.period).max().unwrap_or(0);
    let slack = match cfg.release {
        ReleasePattern::Synchronous => 0,
        ReleasePattern::Jittered { max_delay, .. } => max_delay,
    } + cfg.offsets.iter().copied().max().unwrap_or(0);
    let limit = cfg.time_limit.unwrap_or_else(|| {
        cfg.horizon
            .saturating_mul(4)
            .max(cfg.horizon.saturating_add(max_period.saturating_add(slack).saturating_mul(4)))
    });
    Ok(Engine::new(sys, cfg).run(limit))
}

#[cfg(test)]
mod tests;
