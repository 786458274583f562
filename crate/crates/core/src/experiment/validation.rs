use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{run_scheme, trial_seed, Scheme};
use crate::mem_analysis::{brute_force_chain, max_chain, memory_feasible};
use crate::rta::{analyze_unchecked, RtaConfig};
use crate::sched_sim::{check_dominance, simulate, SimConfig, Violation, MAX_HORIZON};
use crate::task_model::io::TaskSetFile;
use crate::task_model::{System, Time};
use crate::taskset_gen::{generate_with_provenance, GenConfig, PeriodModel};

/// Population and simulation settings of a validation campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationScale {
    /// Task count, drawn uniformly from the inclusive range.
    pub n: (usize, usize),
    pub cores: usize,
    /// Total utilization, drawn uniformly.
    pub utilization: (f64, f64),
    pub spm: u64,
    /// Simulated length in hyperperiods.
    pub hyperperiods: u64,
    /// Maximum release delay; synchronous periodic releases when `None`.
    pub jitter: Option<Time>,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub rta: RtaConfig,
}

impl Default for ValidationScale {
    /// Desk scale: up to 8 tasks on 2 cores with automotive periods,
    /// simulated for two hyperperiods.
    fn default() -> Self {
        ValidationScale {
            n: (2, 8),
            cores: 2,
            utilization: (0.2, 1.0),
            spm: 32 * 1024,
            hyperperiods: 2,
            jitter: None,
            seed: 0,
            schemes: Scheme::ALL.to_vec(),
            rta: RtaConfig::default(),
        }
    }
}

/// Bounds exceeded by one configured system, with the system itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationViolation {
    pub system: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub violations: Vec<Violation>,
    pub taskset: Value,
}

/// Counters for one scheme.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeCheck {
    pub scheme: Scheme,
    /// Configured systems that were simulated.
    pub instances: usize,
    /// Instances whose analysis found every task schedulable; only these have
    /// their response times checked.
    pub schedulable: usize,
    pub jobs: usize,
    pub preemptions: u64,
    pub violating: usize,
}

impl SchemeCheck {
    fn new(scheme: Scheme) -> Self {
        SchemeCheck {
            scheme,
            instances: 0,
            schedulable: 0,
            jobs: 0,
            preemptions: 0,
            violating: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub requested: usize,
    pub generated: usize,
    pub generation_failures: usize,
    pub schemes: Vec<SchemeCheck>,
    pub chain_checks: usize,
    pub chain_mismatches: Vec<String>,
    /// Instances that could not be simulated.
    pub errors: Vec<String>,
    pub diverged_tasks: usize,
    /// Longest single system analysis, in milliseconds.
    pub slowest_analysis_ms: u64,
    pub violations: Vec<ValidationViolation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.chain_mismatches.is_empty() && self.errors.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn check(&self, scheme: Scheme) -> Option<&SchemeCheck> {
        self.schemes.iter().find(|c| c.scheme == scheme)
    }
}

struct SystemOutcome {
    generated: bool,
    checks: Vec<SchemeCheck>,
    chain_checks: usize,
    chain_mismatches: Vec<String>,
    errors: Vec<String>,
    diverged: usize,
    slowest_ms: u64,
    violations: Vec<ValidationViolation>,
}

impl ValidationScale {
    /// Generator configuration of system `index` of a campaign.
    pub fn system_config(&self, index: usize) -> GenConfig {
        gen_config(self, index)
    }
}

fn gen_config(scale: &ValidationScale, index: usize) -> GenConfig {
    let seed = trial_seed(scale.seed, 0, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(scale.n.0..=scale.n.1);
    let (lo, hi) = scale.utilization;
    let utilization = if hi > lo { rng.random_range(lo..hi) } else { lo };
    GenConfig {
        n,
        utilization,
        cores: scale.cores,
        spm: scale.spm,
        period_model: PeriodModel::Automotive,
        seed: trial_seed(scale.seed, 1, index as u64),
        ..GenConfig::default()
    }
}

fn sim_config(sys: &System, scale: &ValidationScale, seed: u64) -> SimConfig {
    let horizon = sys
        .hyperperiod()
        .saturating_mul(scale.hyperperiods.max(1))
        .min(MAX_HORIZON);
    match scale.jitter {
        Some(d) => SimConfig::jittered(horizon, seed, d),
        None => SimConfig::new(horizon),
    }
}

fn check_system(scale: &ValidationScale, index: usize) -> SystemOutcome {
    let mut out = SystemOutcome {
        generated: false,
        checks: scale
            .schemes
            .iter()
            .map(|&s| SchemeCheck::new(s))
            .collect(),
        chain_checks: 0,
        chain_mismatches: Vec::new(),
        errors: Vec::new(),
        diverged: 0,
        slowest_ms: 0,
        violations: Vec::new(),
    };
    let cfg = gen_config(scale, index);
    let Ok(generated) = generate_with_provenance(&cfg) else {
        return out;
    };
    out.generated = true;
    let base = generated.system;
    let fp_ok = run_scheme(&base, Scheme::FP, &scale.rta).schedulable;

    for (slot, &scheme) in scale.schemes.iter().enumerate() {
        if scheme == Scheme::PT && !fp_ok {
            continue;
        }
        let sys = run_scheme(&base, scheme, &scale.rta).system;
        let started = Instant::now();
        let analysis = analyze_unchecked(&sys, &scale.rta);
        out.slowest_ms = out.slowest_ms.max(started.elapsed().as_millis() as u64);
        out.diverged += analysis.results.iter().filter(|r| r.diverged).count();
        let memory = memory_feasible(&sys);

        for t in &sys.tasks {
            out.chain_checks += 1;
            let fast = max_chain(&t.id, &sys).map(|c| c.total_memory);
            let slow = brute_force_chain(&t.id, &sys).map(|c| c.total_memory);
            if fast.as_ref().ok() != slow.as_ref().ok() {
                out.chain_mismatches.push(format!(
                    "system {index} {scheme} task {}: {fast:?} vs {slow:?}",
                    t.id
                ));
            }
        }

        let check = &mut out.checks[slot];
        check.instances += 1;
        if analysis.schedulable {
            check.schedulable += 1;
        }
        let trace = match simulate(&sys, &sim_config(&sys, scale, cfg.seed)) {
            Ok(t) => t,
            Err(e) => {
                out.errors
                    .push(format!("system {index} {scheme}: simulation failed: {e}"));
                continue;
            }
        };
        check.jobs += trace.jobs.len();
        check.preemptions += trace.preemptions;
        let found: Vec<Violation> = check_dominance(&trace, &analysis, &memory)
            .expect("trace matches its own system")
            .into_iter()
            .filter(|v| analysis.schedulable || matches!(v, Violation::Memory { .. }))
            .collect();
        if !found.is_empty() {
            check.violating += 1;
            let file = TaskSetFile::from_system(&sys, Some(generated.provenance.clone()));
            out.violations.push(ValidationViolation {
                system: index,
                seed: cfg.seed,
                scheme,
                violations: found,
                taskset: serde_json::to_value(&file).expect("task set serializes"),
            });
        }
    }
    out
}

/// Generate `count` small systems and compare, for every selected scheme,
/// simulation against the analytic bounds and the chain DP against brute
/// force. Response times are checked on instances the analysis deems
/// schedulable; memory bounds on every instance. PT is only instantiated for
/// FP-schedulable systems.
pub fn run_validation(count: usize, scale: &ValidationScale) -> ValidationReport {
    let outcomes: Vec<SystemOutcome> = (0..count)
        .into_par_iter()
        .map(|i| check_system(scale, i))
        .collect();
    let mut report = ValidationReport {
        requested: count,
        schemes: scale
            .schemes
            .iter()
            .map(|&s| SchemeCheck::new(s))
            .collect(),
        ..ValidationReport::default()
    };
    for o in outcomes {
        if o.generated {
            report.generated += 1;
        } else {
            report.generation_failures += 1;
        }
        for (acc, c) in report.schemes.iter_mut().zip(&o.checks) {
            acc.instances += c.instances;
            acc.schedulable += c.schedulable;
            acc.jobs += c.jobs;
            acc.preemptions += c.preemptions;
            acc.violating += c.violating;
        }
        report.chain_checks += o.chain_checks;
        report.chain_mismatches.extend(o.chain_mismatches);
        report.errors.extend(o.errors);
        report.diverged_tasks += o.diverged;
        report.slowest_analysis_ms = report.slowest_analysis_ms.max(o.slowest_ms);
        report.violations.extend(o.violations);
    }
    report
}
