use super::*;
use crate::mem_analysis::memory_feasible;
use crate::rta::{analyze_unchecked, RtaConfig};
use crate::task_model::{Platform, Task, TaskId};
use proptest::prelude::*;

fn task(id: &str, period: Time, r: Time, e: Time, w: Time, p: u32, th: u32, m: Bytes) -> Task {
    Task::new(id, period, r, e, w)
        .with_priority(p, th)
        .with_memory(m)
}

#[test]
fn single_task_no_contention() {
    let sys = System::uniprocessor(1000, vec![task("a", 10, 1, 4, 1, 1, 1, 64)]);
    let tr = simulate(&sys, &SimConfig::new(20)).unwrap();
    let resp: Vec<_> = tr.jobs.iter().map(|j| j.response.unwrap()).collect();
    assert_eq!(resp, vec![6, 6]);
    assert_eq!(tr.peak_memory, vec![64]);
    assert_eq!(tr.preemptions, 0);
    let a = analyze_unchecked(&sys, &RtaConfig::default());
    let v = check_dominance(&tr, &a, &memory_feasible(&sys)).unwrap();
    assert!(v.is_empty());
}

#[test]
fn preemption_keeps_victim_resident() {
    let sys = System::uniprocessor(
        1000,
        vec![
            task("lo", 100, 1, 10, 1, 1, 1, 100),
            task("hi", 6, 1, 1, 1, 2, 2, 50),
        ],
    );
    let tr = simulate(&sys, &SimConfig::new(7)).unwrap();
    let lo = tr.jobs_of(0).next().unwrap();
    // hi runs 0..3, lo reads 3..4, hi's second job releases at 6.
    assert_eq!(lo.read_start, Some(3));
    assert_eq!(lo.exec[0], (4, 6));
    let hi2 = tr.jobs_of(1).nth(1).unwrap();
    assert_eq!(hi2.read_start, Some(6));
    assert_eq!(hi2.write_end, Some(9));
    assert_eq!(lo.exec[1], (9, 17));
    assert_eq!(lo.write_end, Some(18));
    assert_eq!(tr.peak_memory, vec![150]);
    assert!(tr.occupancy[0].contains(&(6, 150)));
    assert!(tr.occupancy[0].contains(&(9, 100)));
    assert_eq!(tr.preemptions, 1);
}

#[test]
fn threshold_blocks_preemption() {
    let sys = System::uniprocessor(
        1000,
        vec![
            task("lo", 100, 1, 10, 1, 1, 2, 100),
            task("hi", 6, 1, 1, 1, 2, 2, 50),
        ],
    );
    let tr = simulate(&sys, &SimConfig::new(7)).unwrap();
    assert_eq!(tr.preemptions, 0);
    let hi2 = tr.jobs_of(1).nth(1).unwrap();
    assert_eq!(hi2.read_start, Some(15));
    assert_eq!(tr.peak_memory, vec![100]);
}

#[test]
fn bus_is_non_preemptive() {
    let sys = System::new(
        Platform::new(2, 1000),
        vec![
            task("lo", 100, 5, 1, 1, 1, 1, 1),
            task("hi", 100, 2, 1, 1, 2, 2, 1),
        ],
        vec![0, 1],
    )
    .unwrap();
    let tr = simulate(&sys, &SimConfig::new(3).with_offsets(vec![0, 2])).unwrap();
    let lo = tr.jobs_of(0).next().unwrap();
    let hi = tr.jobs_of(1).next().unwrap();
    assert_eq!(lo.read_start, Some(0));
    assert_eq!(lo.read_end, Some(5));
    // hi asks at its release but waits for lo's read.
    assert_eq!(hi.release, 2);
    assert_eq!(hi.read_start, Some(5));
    // lo's write request at 6 waits for hi's read in turn.
    assert_eq!(lo.write_start, Some(7));
    assert_eq!(hi.write_start, Some(8));
}

#[test]
fn write_request_uses_nominal_priority() {
    // At 2, a's write and b's read compete; b has the higher nominal
    // priority even though a's threshold is as high.
    let sys = System::new(
        Platform::new(2, 1000),
        vec![
            task("a", 100, 1, 1, 1, 1, 2, 1),
            task("b", 100, 1, 1, 1, 2, 2, 1),
        ],
        vec![0, 1],
    )
    .unwrap();
    let tr = simulate(&sys, &SimConfig::new(3).with_offsets(vec![0, 2])).unwrap();
    let a = tr.jobs_of(0).next().unwrap();
    let b = tr.jobs_of(1).next().unwrap();
    assert_eq!(a.exec, vec![(1, 2)]);
    assert_eq!(b.read_start, Some(2));
    assert_eq!(a.write_start, Some(3));
}

#[test]
fn preempts_at_exec_start() {
    // hi is released while lo reads; lo is displaced before executing.
    let sys = System::uniprocessor(
        1000,
        vec![
            task("lo", 100, 4, 3, 1, 1, 1, 10),
            task("hi", 100, 1, 1, 1, 2, 2, 10),
        ],
    );
    let tr = simulate(&sys, &SimConfig::new(3).with_offsets(vec![0, 2])).unwrap();
    let lo = tr.jobs_of(0).next().unwrap();
    let hi = tr.jobs_of(1).next().unwrap();
    assert_eq!(lo.read_end, Some(4));
    assert_eq!(hi.read_start, Some(4));
    assert_eq!(lo.exec, vec![(7, 10)]);
    assert_eq!(tr.preemptions, 1);
}

#[test]
fn zero_length_phases() {
    let sys = System::uniprocessor(1000, vec![task("a", 10, 0, 3, 0, 1, 1, 8)]);
    let tr = simulate(&sys, &SimConfig::new(30)).unwrap();
    assert!(tr.jobs.iter().all(|j| j.response == Some(3)));
    assert_eq!(tr.peak_memory, vec![8]);
}

#[test]
fn deadline_misses_are_recorded() {
    let sys = System::uniprocessor(
        1000,
        vec![
            task("hi", 10, 1, 6, 1, 2, 2, 1),
            task("lo", 20, 1, 8, 1, 1, 1, 1),
        ],
    );
    let tr = simulate(&sys, &SimConfig::new(200)).unwrap();
    assert!(tr.deadline_misses > 0);
    assert!(tr.jobs.iter().any(|j| j.missed));
}

#[test]
fn config_errors() {
    let sys = System::uniprocessor(1000, vec![task("a", 10, 1, 1, 1, 1, 1, 1)]);
    assert!(simulate(&sys, &SimConfig::new(0)).is_err());
    assert!(simulate(&sys, &SimConfig::new(MAX_HORIZON + 1)).is_err());
}

#[test]
fn dominance_detects_corruption() {
    let sys = System::uniprocessor(
        1000,
        vec![
            task("hi", 10, 1, 2, 1, 2, 2, 10),
            task("lo", 20, 1, 3, 1, 1, 1, 10),
        ],
    );
    let tr = simulate(&sys, &SimConfig::new(40)).unwrap();
    let mem = memory_feasible(&sys);
    let mut a = analyze_unchecked(&sys, &RtaConfig::default());
    assert!(check_dominance(&tr, &a, &mem).unwrap().is_empty());
    a.results[0].wcrt = 0;
    let v = check_dominance(&tr, &a, &mem).unwrap();
    assert!(v.iter().any(|x| matches!(x, Violation::Response { .. })));

    let mut small = mem.clone();
    small.cores[0].peak_bound = 1;
    let v = check_dominance(&tr, &analyze_unchecked(&sys, &RtaConfig::default()), &small)
        .unwrap();
    assert!(matches!(v[..], [Violation::Memory { .. }]));

    let other = System::uniprocessor(1000, vec![task("x", 10, 1, 1, 1, 1, 1, 1)]);
    let b = analyze_unchecked(&other, &RtaConfig::default());
    assert!(matches!(
        check_dominance(&tr, &b, &mem),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn exports() {
    let sys = System::uniprocessor(1000, vec![task("a", 10, 1, 4, 1, 1, 1, 64)]);
    let tr = simulate(&sys, &SimConfig::new(20)).unwrap();
    let lines: Vec<_> = tr.events_jsonl().lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), tr.events.len());
    let first: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(first["kind"], "release");
    for key in ["time", "core", "task", "job"] {
        assert!(first.get(key).is_some());
    }
    let s = tr.summary();
    assert_eq!(s.tasks[0].max_response, Some(6));
    assert_eq!(s.cores[0].peak_memory, 64);
    assert!(s.to_json().contains("peak_memory"));
    assert_eq!(s.tasks[0].id, TaskId::new("a"));
}

fn random_system(cores: usize) -> impl Strategy<Value = (System, u64)> {
    (2usize..7).prop_flat_map(move |n| {
        (
            prop::collection::vec(
                (
                    prop::sample::select(vec![20u64, 25, 40, 50, 100]),
                    0u64..4,
                    1u64..6,
                    0u64..4,
                    1u64..100,
                    0u32..4,
                ),
                n,
            ),
            prop::collection::vec(0..cores, n),
            any::<u64>(),
        )
            .prop_map(move |(specs, mapping, seed)| {
                let mut tasks: Vec<Task> = specs
                    .iter()
                    .enumerate()
                    .map(|(k, &(t, r, e, w, m, _))| {
                        Task::new(format!("t{k}"), t, r, e, w).with_memory(m)
                    })
                    .collect();
                crate::task_model::assign_rm_priorities(&mut tasks);
                for (t, s) in tasks.iter_mut().zip(&specs) {
                    t.threshold = (t.priority + s.5).min(n as u32);
                }
                (System::new(Platform::new(cores, 1 << 20), tasks, mapping).unwrap(), seed)
            })
    })
}

fn check_invariants(sys: &System, tr: &SimTrace) -> std::result::Result<(), TestCaseError> {
    let mut grants = tr.bus.clone();
    grants.sort_by_key(|g| (g.start, g.end));
    for pair in grants.windows(2) {
        prop_assert!(pair[0].end <= pair[1].start, "bus overlap {:?}", pair);
    }
    for j in &tr.jobs {
        let t = &sys.tasks[j.task_index];
        if j.write_end.is_none() {
            continue;
        }
        prop_assert_eq!(j.exec_time(), t.exec);
        let rs = j.read_start.unwrap();
        let re = j.read_end.unwrap();
        let ws = j.write_start.unwrap();
        prop_assert!(j.release <= rs && rs + t.read == re);
        prop_assert!(j.exec.iter().all(|&(a, b)| a >= re && b <= ws && a < b));
        prop_assert!(ws + t.write == j.write_end.unwrap());
    }
    // LIFO residency per core.
    let mut stacks: Vec<Vec<(TaskId, u64)>> = vec![Vec::new(); sys.platform.cores];
    for e in &tr.events {
        match e.kind {
            EventKind::ReadStart => stacks[e.core].push((e.task.clone(), e.job)),
            EventKind::WriteEnd => {
                let top = stacks[e.core].pop();
                prop_assert_eq!(top, Some((e.task.clone(), e.job)));
            }
            _ => {}
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn trace_invariants((sys, seed) in random_system(3)) {
        let tr = simulate(&sys, &SimConfig::new(400)).unwrap();
        check_invariants(&sys, &tr)?;
        let jit = simulate(&sys, &SimConfig::jittered(400, seed, 15)).unwrap();
        check_invariants(&sys, &jit)?;
    }

    #[test]
    fn deterministic((sys, seed) in random_system(3)) {
        let cfg = SimConfig::jittered(300, seed, 10);
        prop_assert_eq!(simulate(&sys, &cfg).unwrap(), simulate(&sys, &cfg).unwrap());
    }

    #[test]
    fn non_preemptive_never_preempts((sys, _) in random_system(3)) {
        let np = sys.non_preemptive();
        let tr = simulate(&np, &SimConfig::new(400)).unwrap();
        prop_assert_eq!(tr.preemptions, 0);
    }

    #[test]
    fn analysis_dominates_simulation((sys, seed) in random_system(1)) {
        let a = analyze_unchecked(&sys, &RtaConfig::default());
        let mem = memory_feasible(&sys);
        let horizon = 2 * sys.hyperperiod();
        for cfg in [SimConfig::new(horizon), SimConfig::jittered(horizon, seed, 7)] {
            let tr = simulate(&sys, &cfg).unwrap();
            let v = check_dominance(&tr, &a, &mem).unwrap();
            // Tasks with a finite analysed bound should never be exceeded,
            // whatever the verdict of the other tasks.
            let v: Vec<_> = v.into_iter().filter(|x| match x {
                Violation::Response { task, .. } => a.result(task).unwrap().schedulable,
                Violation::Memory { .. } => true,
            }).collect();
            prop_assert!(v.is_empty(), "{:?}", v);
        }
    }
}
