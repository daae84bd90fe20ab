//! Job registration, continuous collection and CSV export.

mod cycle;
mod export;
mod model;
mod scheduler;

use std::sync::Arc;

use crate::accounts::{authorize, Account, Action, Resource};
use crate::clock::Clock;
use crate::domain::{validate_job_spec, JobSpecDraft, SpecViolation};
use crate::store::{AdQuery, JobFilter, Store, StoreError};

pub use cycle::{run_poll_cycle, CycleLimits};
pub use export::{csv_row, CsvExport, CSV_HEADER};
pub use model::{Job, JobId, JobState, PollError, PollReport};
pub use scheduler::{Scheduler, SchedulerConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JobError {
    #[error("not permitted")]
    Unauthorized,
    #[error("invalid job options")]
    InvalidSpec(Vec<SpecViolation>),
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error(transparent)]
    Storage(StoreError),
}

impl From<StoreError> for JobError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownJob(id) | StoreError::JobDeleted(id) => JobError::UnknownJob(id),
            StoreError::Unauthorized => JobError::Unauthorized,
            other => JobError::Storage(other),
        }
    }
}

pub const DEFAULT_LIST_LIMIT: usize = 50;

/// User-facing job operations, each checked against the access policy.
#[derive(Clone)]
pub struct JobManager {
    store: Arc<Store>,
    scheduler: Scheduler,
    clock: Arc<dyn Clock>,
}

impl JobManager {
    pub fn new(store: Arc<Store>, scheduler: Scheduler, clock: Arc<dyn Clock>) -> Self {
        JobManager { store, scheduler, clock }
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    /// Validates and persists a job for `owner`, then queues its first
    /// cycle.
    pub fn register_job(&self, owner: &Account, draft: &JobSpecDraft) -> Result<Job, JobError> {
        if !authorize(owner, Action::CreateJob, Resource::None).is_allowed() {
            return Err(JobError::Unauthorized);
        }
        let spec = validate_job_spec(draft).map_err(JobError::InvalidSpec)?;
        let job = Job::new(owner.account_id.clone(), spec, self.clock.now());
        self.store.put_job(&job)?;
        self.scheduler.enqueue(job.job_id.clone());
        tracing::info!(job = %job.job_id, owner = %owner.account_id, "job registered");
        Ok(job)
    }

    fn load_for(&self, user: &Account, id: &JobId, action: Action) -> Result<Job, JobError> {
        if !user.is_approved() {
            return Err(JobError::Unauthorized);
        }
        let job = self.store.get_job(id)?;
        if !authorize(user, action, Resource::Job(&job)).is_allowed() {
            return Err(JobError::Unauthorized);
        }
        Ok(job)
    }

    pub fn get_job(&self, user: &Account, id: &JobId) -> Result<Job, JobError> {
        self.load_for(user, id, Action::ReadJob)
    }

    /// Jobs visible to `user` whose search term contains `query`.
    pub fn list_jobs(&self, user: &Account, query: Option<&str>, limit: usize, offset: usize) -> Result<Vec<Job>, JobError> {
        if !authorize(user, Action::ListJobs, Resource::None).is_allowed() {
            return Err(JobError::Unauthorized);
        }
        Ok(self.store.list_jobs(&JobFilter {
            viewer: user.account_id.clone(),
            viewer_is_manager: user.is_manager(),
            query: query.map(str::to_string).filter(|q| !q.is_empty()),
            limit,
            offset,
        })?)
    }

    /// Soft-deletes a job. A cycle in flight stops at its next page
    /// boundary.
    pub fn delete_job(&self, user: &Account, id: &JobId) -> Result<(), JobError> {
        self.load_for(user, id, Action::DeleteJob)?;
        self.store.delete_job(id)?;
        tracing::info!(job = %id, by = %user.account_id, "job deleted");
        Ok(())
    }

    /// The job's ads as CSV, in `(analysis_time, ad_id)` order.
    pub fn export_csv(&self, user: &Account, id: &JobId) -> Result<CsvExport, JobError> {
        self.load_for(user, id, Action::ExportJob)?;
        let ads = self.store.query_ads(&AdQuery::for_user(user.account_id.clone()).jobs([id.clone()]))?;
        Ok(CsvExport::new(ads))
    }
}
