use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::mem_analysis::{memory_feasible, MemoryReport};
use crate::rta::{analyze, AnalysisReport, RtaConfig};
use crate::sched_sim::{check_dominance, simulate, SimConfig, SimSummary, SimTrace, Violation, MAX_HORIZON};
use crate::task_model::io::TaskSetFile;
use crate::task_model::{System, Time};
use crate::taskset_gen::{generate_with_provenance, GenConfig};
use crate::threshold_assign::{mptaa, AssignmentOutcome};

fn load(path: &Path) -> Result<System> {
    TaskSetFile::read(path)?.to_system()
}

#[derive(Clone, Debug, Serialize)]
pub struct FileAnalysis {
    pub timing: AnalysisReport,
    pub memory: MemoryReport,
}

impl FileAnalysis {
    pub fn schedulable(&self) -> bool {
        self.timing.schedulable
    }
}

/// Timing and memory analysis of a task-set file. Files with findings other
/// than memory oversize are rejected with those findings.
pub fn analyze_file(path: impl AsRef<Path>, config: &RtaConfig) -> Result<FileAnalysis> {
    let sys = load(path.as_ref())?;
    let analysis = analyze(&sys, config)?;
    Ok(FileAnalysis {
        timing: AnalysisReport::from(&analysis),
        memory: memory_feasible(&sys),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FileSimulation {
    pub summary: SimSummary,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub trace: SimTrace,
}

/// Simulate a task-set file and check the trace against the analysis. The
/// horizon defaults to two hyperperiods.
pub fn simulate_file(
    path: impl AsRef<Path>,
    horizon: Option<Time>,
    config: &RtaConfig,
) -> Result<FileSimulation> {
    let sys = load(path.as_ref())?;
    let analysis = analyze(&sys, config)?;
    let horizon = horizon.unwrap_or_else(|| sys.hyperperiod().saturating_mul(2).min(MAX_HORIZON));
    let trace = simulate(&sys, &SimConfig::new(horizon))?;
    let violations = check_dominance(&trace, &analysis, &memory_feasible(&sys))?;
    Ok(FileSimulation {
        summary: trace.summary(),
        violations,
        trace,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FileMptaa {
    pub outcome: AssignmentOutcome,
    /// The input with the assigned thresholds.
    pub taskset: TaskSetFile,
}

pub fn mptaa_file(path: impl AsRef<Path>, config: &RtaConfig) -> Result<FileMptaa> {
    let sys = load(path.as_ref())?;
    let outcome = mptaa(&sys, config)?;
    let assigned = outcome.apply(&sys)?;
    Ok(FileMptaa {
        outcome,
        taskset: TaskSetFile::from_system(&assigned, None),
    })
}

/// Generate a task set and, given a path, write it there.
pub fn generate_file(cfg: &GenConfig, path: Option<&Path>) -> Result<TaskSetFile> {
    let g = generate_with_provenance(cfg)?;
    let file = TaskSetFile::from_system(&g.system, Some(g.provenance));
    if let Some(p) = path {
        file.write(p)?;
    }
    Ok(file)
}
