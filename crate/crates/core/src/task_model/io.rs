//! JSON task-set files.
//!
//! ```json
//! {
//!   "platform": { "cores": 2, "S": 32768 },
//!   "tasks": [
//!     { "id": "t0", "T": 10000, "D": 10000, "M": 4096, "P": 2, "theta": 2,
//!       "Cr": 50, "Ce": 900, "Cw": 10, "core": 0 }
//!   ]
//! }
//! ```
//!
//! Times are microseconds, sizes bytes. Each task may additionally carry the
//! layout fields `Im`, `Dm`, `Ms`, `Rm`, `Wm` (all or none); when present,
//! `M` must equal `Im + Dm + Ms`. A top-level `generator` object records
//! how a generated set was produced and is passed through untouched.
//! Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Bytes, CoreId, MemoryLayout, Platform, Priority, System, Task, TaskId, Time};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformRecord {
    pub cores: usize,
    #[serde(rename = "S")]
    pub spm: Bytes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct TaskRecord {
    pub id: TaskId,
    pub T: Time,
    pub D: Time,
    pub M: Bytes,
    pub P: Priority,
    pub theta: Priority,
    pub Cr: Time,
    pub Ce: Time,
    pub Cw: Time,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Im: Option<Bytes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Dm: Option<Bytes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Ms: Option<Bytes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Rm: Option<Bytes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Wm: Option<Bytes>,
    pub core: CoreId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSetFile {
    pub platform: PlatformRecord,
    pub tasks: Vec<TaskRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Value>,
}

impl TaskRecord {
    fn from_task(t: &Task, core: CoreId) -> Self {
        let l = t.layout;
        TaskRecord {
            id: t.id.clone(),
            T: t.period,
            D: t.deadline,
            M: t.memory,
            P: t.priority,
            theta: t.threshold,
            Cr: t.read,
            Ce: t.exec,
            Cw: t.write,
            Im: l.map(|l| l.code),
            Dm: l.map(|l| l.data),
            Ms: l.map(|l| l.stack),
            Rm: l.map(|l| l.read),
            Wm: l.map(|l| l.write),
            core,
        }
    }

    fn to_task(&self) -> Result<Task> {
        let layout = match (self.Im, self.Dm, self.Ms, self.Rm, self.Wm) {
            (None, None, None, None, None) => None,
            (Some(code), Some(data), Some(stack), Some(read), Some(write)) => Some(MemoryLayout {
                code,
                data,
                stack,
                read,
                write,
            }),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "task `{}`: layout fields Im, Dm, Ms, Rm, Wm must be given together",
                    self.id
                )))
            }
        };
        Ok(Task {
            id: self.id.clone(),
            period: self.T,
            deadline: self.D,
            memory: self.M,
            priority: self.P,
            threshold: self.theta,
            read: self.Cr,
            exec: self.Ce,
            write: self.Cw,
            layout,
        })
    }
}

impl TaskSetFile {
    pub fn from_system(sys: &System, generator: Option<Value>) -> Self {
        TaskSetFile {
            platform: PlatformRecord {
                cores: sys.platform.cores,
                spm: sys.platform.spm,
            },
            tasks: sys
                .tasks
                .iter()
                .zip(&sys.assignment)
                .map(|(t, &c)| TaskRecord::from_task(t, c))
                .collect(),
            generator,
        }
    }

    pub fn to_system(&self) -> Result<System> {
        let tasks = self
            .tasks
            .iter()
            .map(TaskRecord::to_task)
            .collect::<Result<Vec<_>>>()?;
        let assignment = self.tasks.iter().map(|r| r.core).collect();
        System::new(
            Platform::new(self.platform.cores, self.platform.spm),
            tasks,
            assignment,
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("task set serializes");
        s.push('\n');
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Parse a task-set document straight into a [`System`].
pub fn parse_system(text: &str) -> Result<System> {
    TaskSetFile::parse(text)?.to_system()
}

pub fn system_to_json(sys: &System) -> String {
    TaskSetFile::from_system(sys, None).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{
  "platform": { "cores": 1, "S": 1024 },
  "tasks": [
    { "id": "a", "T": 100, "D": 100, "M": 10, "P": 1, "theta": 1,
      "Cr": 1, "Ce": 5, "Cw": 1, "core": 0 }
  ]
}"#;

    #[test]
    fn parses_minimal_file() {
        let sys = parse_system(ONE).unwrap();
        assert_eq!(sys.tasks.len(), 1);
        assert_eq!(sys.tasks[0].wcet(), 7);
        assert_eq!(sys.platform.spm, 1024);
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let file = TaskSetFile::parse(ONE).unwrap();
        let once = file.to_json();
        let twice = TaskSetFile::parse(&once).unwrap().to_json();
        assert_eq!(once, twice);
    }

    #[test]
    fn missing_field_reports_location() {
        let bad = ONE.replace("\"Ce\": 5, ", "");
        let err = TaskSetFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("Ce"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = ONE.replace("\"core\": 0", "\"core\": 0, \"colour\": 3");
        assert!(TaskSetFile::parse(&bad).is_err());
    }

    #[test]
    fn partial_layout_rejected() {
        let bad = ONE.replace("\"core\": 0", "\"core\": 0, \"Im\": 3");
        let file = TaskSetFile::parse(&bad).unwrap();
        assert!(file.to_system().is_err());
    }
}
