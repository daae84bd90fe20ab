use std::fmt;

use serde::{Deserialize, Serialize};

use crate::accounts::AccountId;
use crate::domain::{JobSpec, Timestamp};
use crate::store::UpsertReport;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub String);

impl JobId {
    pub fn generate() -> Self {
        JobId(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for JobId {
    fn from(s: &str) -> Self {
        JobId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JobState {
    Active,
    Deleted,
}

impl JobState {
    pub fn token(self) -> &'static str {
        match self {
            JobState::Active => "ACTIVE",
            JobState::Deleted => "DELETED",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "ACTIVE" => Some(JobState::Active),
            "DELETED" => Some(JobState::Deleted),
            _ => None,
        }
    }
}

/// A registered search that is re-run against the archive until deleted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: JobId,
    pub owner: AccountId,
    pub spec: JobSpec,
    pub created_at: Timestamp,
    pub state: JobState,
    pub last_poll_at: Option<Timestamp>,
    pub last_report: Option<PollReport>,
}

impl Job {
    pub fn new(owner: AccountId, spec: JobSpec, created_at: Timestamp) -> Self {
        Job {
            job_id: JobId::generate(),
            owner,
            spec,
            created_at,
            state: JobState::Active,
            last_poll_at: None,
            last_report: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.state == JobState::Active
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollError {
    pub kind: String,
    pub message: String,
}

/// Outcome of one pass over a job's result pages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollReport {
    pub started_at: Timestamp,
    pub finished_at: Timestamp,
    pub pages_fetched: u32,
    pub upsert: UpsertReport,
    pub errors: Vec<PollError>,
}
