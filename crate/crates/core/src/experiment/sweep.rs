use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scheme, trial_seed, Scheme};
use crate::error::{Error, Result};
use crate::rta::RtaConfig;
use crate::task_model::Bytes;
use crate::taskset_gen::{generate, GenConfig};

pub const CSV_HEADER: &str = "x,scheme,schedulable_pct,sched_mem_pct,trials,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Scratchpad size, in KB.
    Spm,
    Cores,
    Utilization,
}

impl SweepVariable {
    pub fn parse(s: &str) -> Option<SweepVariable> {
        match s {
            "spm" => Some(SweepVariable::Spm),
            "cores" => Some(SweepVariable::Cores),
            "utilization" | "util" => Some(SweepVariable::Utilization),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub trials: usize,
    pub base: GenConfig,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    #[serde(default)]
    pub rta: RtaConfig,
}

impl SweepSpec {
    /// Default range for `variable` over the default generator
    /// configuration, 500 trials per point.
    pub fn new(variable: SweepVariable) -> Self {
        let (start, stop, step) = match variable {
            SweepVariable::Spm => (16.0, 112.0, 8.0),
            SweepVariable::Cores => (2.0, 34.0, 2.0),
            SweepVariable::Utilization => (0.1, 3.4, 0.3),
        };
        SweepSpec {
            variable,
            start,
            stop,
            step,
            trials: 500,
            base: GenConfig::default(),
            schemes: Scheme::ALL.to_vec(),
            seed: 0,
            rta: RtaConfig::default(),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let x = ((self.start + f64::from(k) * self.step) * 1e6).round() / 1e6;
            if x > self.stop + 1e-9 {
                break;
            }
            out.push(x);
            k += 1;
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return bad("sweep range must be finite");
        }
        if self.step <= 0.0 || self.start > self.stop {
            return bad("sweep range is empty");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected");
        }
        match self.variable {
            SweepVariable::Spm if self.start < 0.0 => bad("negative scratchpad size"),
            SweepVariable::Cores if self.start < 1.0 || self.step.fract() != 0.0 || self.start.fract() != 0.0 => {
                bad("core counts must be positive integers")
            }
            SweepVariable::Utilization if self.start <= 0.0 => bad("utilization must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub scheme: Scheme,
    pub schedulable_pct: f64,
    pub sched_mem_pct: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.2},{:.2},{},{}",
                r.x, r.scheme, r.schedulable_pct, r.sched_mem_pct, r.trials, r.seed
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn rows_of(&self, scheme: Scheme) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }
}

/// Per trial and scheme: schedulable and the peak memory bound.
type Outcome = Vec<Option<(bool, Bytes)>>;

fn evaluate(cfg: &GenConfig, schemes: &[Scheme], rta: &RtaConfig) -> Outcome {
    match generate(cfg) {
        Ok(sys) => schemes
            .iter()
            .map(|&s| {
                let run = run_scheme(&sys, s, rta);
                Some((run.schedulable, run.peak))
            })
            .collect(),
        Err(_) => vec![None; schemes.len()],
    }
}

#[derive(Clone, Copy, Default)]
struct Counts {
    sched: usize,
    sched_mem: usize,
}

fn rows_for(x: f64, spm: Bytes, outcomes: &[Outcome], spec: &SweepSpec, seed: u64) -> Vec<SweepRow> {
    let mut counts = vec![Counts::default(); spec.schemes.len()];
    for o in outcomes {
        for (c, r) in counts.iter_mut().zip(o) {
            if let Some((ok, peak)) = *r {
                if ok {
                    c.sched += 1;
                    if peak <= spm {
                        c.sched_mem += 1;
                    }
                }
            }
        }
    }
    let pct = |k: usize| 100.0 * k as f64 / spec.trials as f64;
    spec.schemes
        .iter()
        .zip(&counts)
        .map(|(&scheme, c)| SweepRow {
            x,
            scheme,
            schedulable_pct: pct(c.sched),
            sched_mem_pct: pct(c.sched_mem),
            trials: spec.trials,
            seed,
        })
        .collect()
}

/// Run a sweep. Trials of a point run in parallel; a trial whose generation
/// fails counts as unschedulable for every scheme. Sweeping the scratchpad
/// size reuses one task set per trial across all points.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.check()?;
    spec.base.check()?;
    let points = spec.points();
    let mut rows = Vec::new();
    let trials = spec.trials as u64;
    match spec.variable {
        SweepVariable::Spm => {
            let outcomes: Vec<Outcome> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let cfg = GenConfig {
                        seed: trial_seed(spec.seed, 0, t),
                        ..spec.base.clone()
                    };
                    evaluate(&cfg, &spec.schemes, &spec.rta)
                })
                .collect();
            for &x in &points {
                let spm = (x * 1024.0).round() as Bytes;
                rows.extend(rows_for(x, spm, &outcomes, spec, spec.seed));
            }
        }
        SweepVariable::Cores | SweepVariable::Utilization => {
            for (p, &x) in points.iter().enumerate() {
                let mut base = spec.base.clone();
                match spec.variable {
                    SweepVariable::Cores => base.cores = x.round() as usize,
                    _ => base.utilization = x,
                }
                base.check()?;
                let outcomes: Vec<Outcome> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let cfg = GenConfig {
                            seed: trial_seed(spec.seed, p as u64 + 1, t),
                            ..base.clone()
                        };
                        evaluate(&cfg, &spec.schemes, &spec.rta)
                    })
                    .collect();
                rows.extend(rows_for(x, base.spm, &outcomes, spec, spec.seed));
            }
        }
    }
    Ok(SweepTable {
        variable: spec.variable,
        rows,
    })
}
