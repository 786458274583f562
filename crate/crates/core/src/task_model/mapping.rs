use std::cmp::Ordering;

use super::{CoreId, Priority, Task};

/// Rate-monotonic priorities: shorter period gets higher priority, ties go to
/// the smaller task id. Priorities are `1..=n` and thresholds start equal to
/// the nominal priority.
pub fn assign_rm_priorities(tasks: &mut [Task]) {
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by(|&a, &b| {
        tasks[a]
            .period
            .cmp(&tasks[b].period)
            .then_with(|| tasks[a].id.cmp(&tasks[b].id))
    });
    let n = tasks.len() as Priority;
    for (rank, &k) in order.iter().enumerate() {
        let p = n - rank as Priority;
        tasks[k].priority = p;
        tasks[k].threshold = p;
    }
}

// u_a vs u_b without rounding: C_a/T_a vs C_b/T_b.
fn cmp_utilization(a: &Task, b: &Task) -> Ordering {
    let lhs = a.wcet() as u128 * b.period as u128;
    let rhs = b.wcet() as u128 * a.period as u128;
    lhs.cmp(&rhs)
}

/// Worst-fit partitioning: tasks in decreasing utilization (stable on task
/// order) each go to the currently least-loaded core, lowest index on ties.
/// Overloaded cores are allowed.
pub fn worst_fit_map(tasks: &[Task], cores: usize) -> Vec<CoreId> {
    let cores = cores.max(1);
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by(|&a, &b| cmp_utilization(&tasks[b], &tasks[a]));
    let mut load = vec![0.0f64; cores];
    let mut assignment = vec![0; tasks.len()];
    for k in order {
        let mut best = 0;
        for c in 1..cores {
            if load[c] < load[best] {
                best = c;
            }
        }
        load[best] += tasks[k].utilization();
        assignment[k] = best;
    }
    assignment
}
