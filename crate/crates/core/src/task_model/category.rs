use serde::{Deserialize, Serialize};

use super::{Priority, System, Task, TaskId};
use crate::error::{Error, Result};

/// Relation of another task `j` to a reference task `i`, by nominal
/// priorities `P` and thresholds `θ`.
///
/// | | predicate |
/// |---|---|
/// | A | `Pj ≤ θj < Pi` |
/// | B | `Pj < Pi ≤ θj < θi` |
/// | C | `Pi ≤ Pj ≤ θj ≤ θi` |
/// | D | `Pi ≤ Pj ≤ θi < θj` |
/// | E | `θi < Pj` |
/// | F | `Pj < Pi ≤ θi ≤ θj` |
///
/// A, B and F are lower priority; C, D and E are higher or equal. Only E
/// tasks can preempt the execution phase of `i`; B and F tasks block `i`
/// for their whole execution; A tasks block it for one memory phase at most.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::A,
        Category::B,
        Category::C,
        Category::D,
        Category::E,
        Category::F,
    ];

    /// Higher or equal nominal priority than the reference task.
    pub fn is_hep(self) -> bool {
        matches!(self, Category::C | Category::D | Category::E)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Category of a task with levels `(pj, tj)` relative to one with `(pi, ti)`.
///
/// Total over all inputs; for valid tasks (`P ≤ θ`) the result is the
/// unique category whose predicate holds.
pub fn classify_levels(pi: Priority, ti: Priority, pj: Priority, tj: Priority) -> Category {
    if pj < pi {
        if tj < pi {
            Category::A
        } else if tj < ti {
            Category::B
        } else {
            Category::F
        }
    } else if pj > ti {
        Category::E
    } else if tj <= ti {
        Category::C
    } else {
        Category::D
    }
}

/// Category of `tau_j` relative to `tau_i`.
pub fn classify(tau_i: &Task, tau_j: &Task) -> Result<Category> {
    if tau_i.id == tau_j.id {
        return Err(Error::InvalidArgument(format!(
            "cannot classify task `{}` against itself",
            tau_i.id
        )));
    }
    Ok(classify_levels(
        tau_i.priority,
        tau_i.threshold,
        tau_j.priority,
        tau_j.threshold,
    ))
}

/// Other tasks of a system partitioned relative to one reference task.
///
/// All entries are indices into `System::tasks`, in task order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelativeSets {
    pub hep_local: Vec<usize>,
    pub lp_local: Vec<usize>,
    pub hep_remote: Vec<usize>,
    pub lp_remote: Vec<usize>,
    by_category: [Vec<usize>; 6],
}

impl RelativeSets {
    pub fn for_index(sys: &System, index: usize) -> Self {
        let me = &sys.tasks[index];
        let core = sys.core_of(index);
        let mut sets = RelativeSets::default();
        for (k, other) in sys.tasks.iter().enumerate() {
            if k == index {
                continue;
            }
            let hep = other.priority >= me.priority;
            if sys.core_of(k) == core {
                let cat =
                    classify_levels(me.priority, me.threshold, other.priority, other.threshold);
                sets.by_category[cat.slot()].push(k);
                if hep {
                    sets.hep_local.push(k);
                } else {
                    sets.lp_local.push(k);
                }
            } else if hep {
                sets.hep_remote.push(k);
            } else {
                sets.lp_remote.push(k);
            }
        }
        sets
    }

    /// Local tasks in category `cat`.
    pub fn local(&self, cat: Category) -> &[usize] {
        &self.by_category[cat.slot()]
    }
}

/// Relative sets of the task with id `id`.
pub fn relative_sets(id: &TaskId, sys: &System) -> Result<RelativeSets> {
    let index = sys.index_of(id)?;
    Ok(RelativeSets::for_index(sys, index))
}
