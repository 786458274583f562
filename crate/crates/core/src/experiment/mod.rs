//! Sweeps over generated task sets, validation campaigns and single-file
//! entry points.

mod files;
mod sweep;
mod validation;

use serde::{Deserialize, Serialize};

pub use files::{analyze_file, generate_file, mptaa_file, simulate_file, FileAnalysis, FileMptaa, FileSimulation};
pub use sweep::{run_sweep, SweepRow, SweepSpec, SweepTable, SweepVariable, CSV_HEADER};
pub use validation::{
    run_validation, SchemeCheck, ValidationReport, ValidationScale, ValidationViolation,
};

use crate::mem_analysis::system_peak_bound;
use crate::rta::{self, RtaConfig};
use crate::task_model::{Bytes, System};
use crate::threshold_assign::mptaa;

/// How thresholds are configured before analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// Non-preemptive: every threshold at the top priority.
    NP,
    /// Fully preemptive: `θ = P`.
    FP,
    /// Maximal threshold assignment, applied to FP-schedulable sets.
    PT,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::NP, Scheme::FP, Scheme::PT];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::NP => "NP",
            Scheme::FP => "FP",
            Scheme::PT => "PT",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s.to_ascii_uppercase().as_str() {
            "NP" => Some(Scheme::NP),
            "FP" => Some(Scheme::FP),
            "PT" => Some(Scheme::PT),
            _ => None,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A system configured for one scheme, with its verdicts.
#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub system: System,
    pub schedulable: bool,
    /// Largest per-core memory bound.
    pub peak: Bytes,
}

impl SchemeRun {
    pub fn memory_ok(&self, spm: Bytes) -> bool {
        self.peak <= spm
    }
}

/// Configure `sys` for `scheme` and analyse it. For PT, an FP-unschedulable
/// set keeps its FP thresholds and is reported unschedulable.
pub fn run_scheme(sys: &System, scheme: Scheme, config: &RtaConfig) -> SchemeRun {
    let (system, schedulable) = match scheme {
        Scheme::NP => {
            let s = sys.non_preemptive();
            let ok = rta::is_schedulable(&s, config);
            (s, ok)
        }
        Scheme::FP => {
            let s = sys.fully_preemptive();
            let ok = rta::is_schedulable(&s, config);
            (s, ok)
        }
        Scheme::PT => match mptaa(sys, config) {
            Ok(out) if out.start_schedulable => {
                let s = out.apply(sys).expect("assignment keeps P <= θ");
                (s, out.schedulable)
            }
            _ => (sys.fully_preemptive(), false),
        },
    };
    let peak = system_peak_bound(&system);
    SchemeRun {
        scheme,
        system,
        schedulable,
        peak,
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at sweep point `point`.
pub fn trial_seed(seed: u64, point: u64, trial: u64) -> u64 {
    splitmix(seed ^ splitmix(point ^ splitmix(trial)))
}
