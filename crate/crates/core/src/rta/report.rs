use serde::{Deserialize, Serialize};

use super::{RtaResult, SystemAnalysis};
use crate::task_model::{TaskId, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Schedulable,
    Unschedulable,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobReport {
    pub k: u64,
    pub release: Time,
    pub s_r: Time,
    pub f_w: Time,
    pub response: Time,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskReport {
    pub id: TaskId,
    #[serde(rename = "L")]
    pub active_period: Time,
    #[serde(rename = "K")]
    pub jobs_in_period: u64,
    pub jobs: Vec<JobReport>,
    pub wcrt: Time,
    pub deadline: Time,
    pub slack: i64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schedulable: bool,
    pub tasks: Vec<TaskReport>,
}

impl From<&RtaResult> for TaskReport {
    fn from(r: &RtaResult) -> Self {
        let verdict = if r.diverged {
            Verdict::Diverged
        } else if r.schedulable {
            Verdict::Schedulable
        } else {
            Verdict::Unschedulable
        };
        TaskReport {
            id: r.task.clone(),
            active_period: r.active_period,
            jobs_in_period: r.jobs_in_period,
            jobs: r
                .jobs
                .iter()
                .map(|j| JobReport {
                    k: j.k,
                    release: j.release,
                    s_r: j.start,
                    f_w: j.finish,
                    response: j.response,
                })
                .collect(),
            wcrt: r.wcrt,
            deadline: r.deadline,
            slack: r.slack(),
            verdict,
        }
    }
}

impl From<&SystemAnalysis> for AnalysisReport {
    fn from(a: &SystemAnalysis) -> Self {
        AnalysisReport {
            schedulable: a.schedulable,
            tasks: a.results.iter().map(TaskReport::from).collect(),
        }
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
