//! Worst-case local-memory demand under keep-in-core preemption.
//!
//! A preempted job keeps its whole footprint resident until it completes, so
//! the memory in use on a core is the sum over a stack of nested
//! preemptions. Such a stack is a chain of tasks where each one can preempt
//! the previous: `θ_prev < P_next`. Because `P ≤ θ`, priorities strictly
//! increase along a chain, which makes the maximum-weight chain a longest
//! path in a DAG ordered by priority.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task_model::{Bytes, CoreId, System, TaskId};

/// Largest number of local tasks [`brute_force_chain`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreemptionChain {
    /// Base task first, each later task preempting the one before it.
    pub tasks: Vec<TaskId>,
    pub total_memory: Bytes,
}

// Heavier first, then shorter, then smaller ids.
fn better(a: &PreemptionChain, b: &PreemptionChain) -> Ordering {
    b.total_memory
        .cmp(&a.total_memory)
        .then(a.tasks.len().cmp(&b.tasks.len()))
        .then_with(|| a.tasks.cmp(&b.tasks))
}

fn can_preempt(sys: &System, lower: usize, upper: usize) -> bool {
    sys.tasks[lower].threshold < sys.tasks[upper].priority
}

/// Best chain for every local task of `core`, indexed like `System::tasks`
/// (other cores' slots are `None`).
fn chains_on_core(sys: &System, core: CoreId) -> Vec<Option<PreemptionChain>> {
    let mut local: Vec<usize> = sys.local_tasks(core).collect();
    // Chains only climb, so solve from the top priority down.
    local.sort_by(|&a, &b| {
        sys.tasks[b]
            .priority
            .cmp(&sys.tasks[a].priority)
            .then_with(|| sys.tasks[a].id.cmp(&sys.tasks[b].id))
    });
    let mut best: Vec<Option<PreemptionChain>> = vec![None; sys.len()];
    for (pos, &a) in local.iter().enumerate() {
        let me = &sys.tasks[a];
        let mut chosen = PreemptionChain {
            tasks: vec![me.id.clone()],
            total_memory: me.memory,
        };
        for &b in &local[..pos] {
            if !can_preempt(sys, a, b) {
                continue;
            }
            let tail = best[b].as_ref().expect("higher tasks solved first");
            let mut tasks = Vec::with_capacity(tail.tasks.len() + 1);
            tasks.push(me.id.clone());
            tasks.extend(tail.tasks.iter().cloned());
            let candidate = PreemptionChain {
                tasks,
                total_memory: me.memory.saturating_add(tail.total_memory),
            };
            if better(&candidate, &chosen) == Ordering::Less {
                chosen = candidate;
            }
        }
        best[a] = Some(chosen);
    }
    best
}

/// Heaviest preemption chain based at `id`.
pub fn max_chain(id: &TaskId, sys: &System) -> Result<PreemptionChain> {
    let index = sys.index_of(id)?;
    let mut all = chains_on_core(sys, sys.core_of(index));
    Ok(all[index].take().expect("task is local to its own core"))
}

/// Exhaustive search over all chains based at `id`; a test oracle for
/// [`max_chain`].
pub fn brute_force_chain(id: &TaskId, sys: &System) -> Result<PreemptionChain> {
    let index = sys.index_of(id)?;
    let local: Vec<usize> = sys.local_tasks(sys.core_of(index)).collect();
    if local.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyTasks {
            local: local.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    fn walk(
        sys: &System,
        local: &[usize],
        path: &mut Vec<usize>,
        best: &mut Option<PreemptionChain>,
    ) {
        let chain = PreemptionChain {
            tasks: path.iter().map(|&k| sys.tasks[k].id.clone()).collect(),
            total_memory: path.iter().map(|&k| sys.tasks[k].memory).sum(),
        };
        if best
            .as_ref()
            .is_none_or(|b| better(&chain, b) == Ordering::Less)
        {
            *best = Some(chain);
        }
        let last = *path.last().expect("non-empty path");
        for &next in local {
            if can_preempt(sys, last, next) {
                path.push(next);
                walk(sys, local, path, best);
                path.pop();
            }
        }
    }

    let mut best = None;
    walk(sys, &local, &mut vec![index], &mut best);
    Ok(best.expect("the singleton chain exists"))
}

/// Heaviest chain among all tasks of `core`, if the core has any task.
pub fn core_witness(core: CoreId, sys: &System) -> Option<PreemptionChain> {
    chains_on_core(sys, core)
        .into_iter()
        .flatten()
        .min_by(better)
}

/// Worst-case memory in use on `core`.
pub fn core_peak_bound(core: CoreId, sys: &System) -> Bytes {
    core_witness(core, sys).map_or(0, |c| c.total_memory)
}

/// Largest [`core_peak_bound`] over all cores.
pub fn system_peak_bound(sys: &System) -> Bytes {
    (0..sys.platform.cores)
        .map(|c| core_peak_bound(c, sys))
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreMemory {
    pub core: CoreId,
    pub peak_bound: Bytes,
    pub witness_chain: Vec<TaskId>,
    #[serde(rename = "S")]
    pub spm: Bytes,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub cores: Vec<CoreMemory>,
    pub feasible: bool,
}

impl MemoryReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A core is feasible when its worst chain fits in the local memory.
pub fn memory_feasible(sys: &System) -> MemoryReport {
    let spm = sys.platform.spm;
    let cores: Vec<CoreMemory> = (0..sys.platform.cores)
        .map(|core| {
            let witness = core_witness(core, sys);
            let peak_bound = witness.as_ref().map_or(0, |c| c.total_memory);
            CoreMemory {
                core,
                peak_bound,
                witness_chain: witness.map(|c| c.tasks).unwrap_or_default(),
                spm,
                feasible: peak_bound <= spm,
            }
        })
        .collect();
    let feasible = cores.iter().all(|c| c.feasible);
    MemoryReport { cores, feasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task_model::{Platform, Task};
    use proptest::prelude::*;

    fn three(theta_i: u32) -> System {
        System::uniprocessor(
            32768,
            vec![
                Task::new("i", 100, 1, 1, 1)
                    .with_priority(1, theta_i)
                    .with_memory(10),
                Task::new("a", 100, 1, 1, 1).with_priority(2, 2).with_memory(20),
                Task::new("b", 100, 1, 1, 1).with_priority(3, 3).with_memory(5),
            ],
        )
    }

    fn ids(c: &PreemptionChain) -> Vec<&str> {
        c.tasks.iter().map(TaskId::as_str).collect()
    }

    #[test]
    fn three_task_example() {
        let sys = three(1);
        let c = max_chain(&TaskId::new("i"), &sys).unwrap();
        assert_eq!(ids(&c), ["i", "a", "b"]);
        assert_eq!(c.total_memory, 35);
        assert_eq!(brute_force_chain(&TaskId::new("i"), &sys).unwrap(), c);
        assert_eq!(core_peak_bound(0, &sys), 35);
    }

    #[test]
    fn threshold_blocks_preemptors() {
        let sys = three(3);
        let c = max_chain(&TaskId::new("i"), &sys).unwrap();
        assert_eq!(ids(&c), ["i"]);
        assert_eq!(c.total_memory, 10);
    }

    #[test]
    fn singleton_and_empty_core() {
        let sys = System::new(
            Platform::new(2, 100),
            vec![Task::new("x", 10, 1, 1, 1).with_memory(10)],
            vec![0],
        )
        .unwrap();
        assert_eq!(max_chain(&TaskId::new("x"), &sys).unwrap().total_memory, 10);
        assert_eq!(core_peak_bound(0, &sys), 10);
        assert_eq!(core_peak_bound(1, &sys), 0);
        assert!(matches!(
            max_chain(&TaskId::new("y"), &sys),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn feasibility_verdicts() {
        let sys = three(1);
        let r = memory_feasible(&sys);
        assert!(r.feasible);
        assert_eq!(r.cores[0].peak_bound, 35);
        let mut tight = sys;
        tight.platform.spm = 30;
        let r = memory_feasible(&tight);
        assert!(!r.feasible && !r.cores[0].feasible);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["cores"][0]["S"], 30);
        assert_eq!(v["cores"][0]["witness_chain"][2], "b");
    }

    #[test]
    fn chain_bound_is_not_the_sum() {
        // a and b share a level of nesting: b cannot preempt a.
        let sys = System::uniprocessor(
            60,
            vec![
                Task::new("i", 100, 1, 1, 1).with_priority(1, 1).with_memory(20),
                Task::new("a", 100, 1, 1, 1).with_priority(2, 3).with_memory(30),
                Task::new("b", 100, 1, 1, 1).with_priority(3, 3).with_memory(30),
            ],
        );
        let total: Bytes = sys.tasks.iter().map(|t| t.memory).sum();
        assert!(total > sys.platform.spm);
        assert!(memory_feasible(&sys).feasible);
        for t in &sys.tasks {
            let dp = max_chain(&t.id, &sys).unwrap();
            assert_eq!(dp, brute_force_chain(&t.id, &sys).unwrap());
        }
    }

    #[test]
    fn brute_force_guard() {
        let tasks = (0..21)
            .map(|k| Task::new(format!("t{k:02}"), 10, 1, 1, 1).with_priority(k + 1, k + 1))
            .collect();
        let sys = System::uniprocessor(100, tasks);
        assert!(matches!(
            brute_force_chain(&TaskId::new("t00"), &sys),
            Err(Error::TooManyTasks { local: 21, .. })
        ));
    }

    #[test]
    fn zero_weight_ties_prefer_short_chains() {
        let sys = System::uniprocessor(
            100,
            vec![
                Task::new("i", 10, 1, 1, 1).with_priority(1, 1).with_memory(5),
                Task::new("z", 10, 1, 1, 1).with_priority(2, 2),
            ],
        );
        assert_eq!(ids(&max_chain(&TaskId::new("i"), &sys).unwrap()), ["i"]);
    }

    fn core_system() -> impl Strategy<Value = System> {
        (1usize..=10).prop_flat_map(|n| {
            (
                prop::collection::vec(0u64..50, n),
                prop::collection::vec(0u32..10, n),
                prop::collection::vec(0usize..2, n),
                Just(n),
            )
                .prop_map(|(mem, bumps, cores, n)| {
                    let tasks = (0..n)
                        .map(|k| {
                            let p = k as u32 + 1;
                            Task::new(format!("t{k}"), 10, 1, 1, 1)
                                .with_priority(p, (p + bumps[k]).min(n as u32))
                                .with_memory(mem[k])
                        })
                        .collect();
                    System::new(Platform::new(2, 1000), tasks, cores).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn dp_matches_brute_force(sys in core_system()) {
            for t in &sys.tasks {
                let dp = max_chain(&t.id, &sys).unwrap();
                let bf = brute_force_chain(&t.id, &sys).unwrap();
                prop_assert_eq!(dp.total_memory, bf.total_memory);
                prop_assert_eq!(&dp, &bf);
                for pair in dp.tasks.windows(2) {
                    let lo = sys.task(&pair[0]).unwrap();
                    let hi = sys.task(&pair[1]).unwrap();
                    prop_assert!(lo.threshold < hi.priority);
                }
            }
        }

        #[test]
        fn raising_thresholds_never_increases_peak(sys in core_system(), k in 0usize..10) {
            let k = k % sys.len();
            let top = sys.top_priority();
            let mut raised = sys.clone();
            if raised.tasks[k].threshold < top {
                raised.tasks[k].threshold += 1;
            }
            for c in 0..2 {
                prop_assert!(core_peak_bound(c, &raised) <= core_peak_bound(c, &sys));
            }
        }

        #[test]
        fn fp_and_np_extremes(sys in core_system()) {
            let fp = sys.fully_preemptive();
            let np = sys.non_preemptive();
            for c in 0..2 {
                let local: Vec<_> = fp.local_tasks(c).collect();
                let sum: Bytes = local.iter().map(|&k| fp.tasks[k].memory).sum();
                let max = local.iter().map(|&k| fp.tasks[k].memory).max().unwrap_or(0);
                prop_assert_eq!(core_peak_bound(c, &fp), sum);
                prop_assert_eq!(core_peak_bound(c, &np), max);
            }
        }
    }
}
