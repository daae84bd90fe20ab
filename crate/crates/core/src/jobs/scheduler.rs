use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use tokio::sync::{Notify, Semaphore};
use tokio::task::JoinSet;

use crate::clock::Clock;
use crate::domain::Timestamp;
use crate::provider::AdProvider;
use crate::store::{Store, StoreError};

use super::cycle::{run_poll_cycle, CycleLimits};
use super::{JobId, PollReport};

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerConfig {
    pub poll_interval_s: i64,
    pub worker_count: usize,
    pub limits: CycleLimits,
    /// How often the background loop looks for due jobs.
    pub tick_interval: Duration,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            poll_interval_s: 300,
            worker_count: 4,
            limits: CycleLimits::default(),
            tick_interval: Duration::from_secs(5),
        }
    }
}

struct Inner {
    store: Arc<Store>,
    provider: Arc<dyn AdProvider>,
    clock: Arc<dyn Clock>,
    config: SchedulerConfig,
    workers: Arc<Semaphore>,
    in_flight: Mutex<HashSet<JobId>>,
    queued: Mutex<Vec<JobId>>,
    tasks: Mutex<JoinSet<()>>,
    wake: Notify,
}

/// Dispatches due jobs to a bounded pool of workers. A job is never in
/// two cycles at once.
#[derive(Clone)]
pub struct Scheduler {
    inner: Arc<Inner>,
}

impl Scheduler {
    pub fn new(
        store: Arc<Store>,
        provider: Arc<dyn AdProvider>,
        clock: Arc<dyn Clock>,
        config: SchedulerConfig,
    ) -> Self {
        let workers = Arc::new(Semaphore::new(config.worker_count.max(1)));
        Scheduler {
            inner: Arc::new(Inner {
                store,
                provider,
                clock,
                config,
                workers,
                in_flight: Mutex::new(HashSet::new()),
                queued: Mutex::new(Vec::new()),
                tasks: Mutex::new(JoinSet::new()),
                wake: Notify::new(),
            }),
        }
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.inner.config
    }

    /// Asks for a cycle of `job` at the next tick, and wakes the loop.
    pub fn enqueue(&self, job: JobId) {
        let mut q = self.inner.queued.lock();
        if !q.contains(&job) {
            q.push(job);
        }
        drop(q);
        self.inner.wake.notify_one();
    }

    pub fn queued(&self) -> Vec<JobId> {
        self.inner.queued.lock().clone()
    }

    pub fn in_flight(&self) -> Vec<JobId> {
        let mut v: Vec<_> = self.inner.in_flight.lock().iter().cloned().collect();
        v.sort();
        v
    }

    /// Finds jobs due at `now` (never polled, polled at least one interval
    /// ago, or explicitly enqueued), dispatches those not already running,
    /// and returns the due list. Must be called inside a tokio runtime.
    pub fn tick(&self, now: Timestamp) -> Result<Vec<JobId>, StoreError> {
        let mut due = self.inner.store.due_jobs(now, self.inner.config.poll_interval_s)?;
        for id in std::mem::take(&mut *self.inner.queued.lock()) {
            if !due.contains(&id) && self.inner.store.get_job(&id).is_ok() {
                due.push(id);
            }
        }
        for id in &due {
            self.dispatch(id.clone());
        }
        Ok(due)
    }

    fn dispatch(&self, id: JobId) {
        if !self.inner.in_flight.lock().insert(id.clone()) {
            return;
        }
        let inner = self.inner.clone();
        self.inner.tasks.lock().spawn(async move {
            let permit = inner.workers.clone().acquire_owned().await;
            if permit.is_ok() {
                run_job(&inner, &id).await;
            }
            inner.in_flight.lock().remove(&id);
        });
    }

    /// Runs one cycle for `id` right now on the caller's task, honouring
    /// per-job exclusion but not the worker bound.
    pub async fn run_now(&self, id: &JobId) -> Option<PollReport> {
        if !self.inner.in_flight.lock().insert(id.clone()) {
            return None;
        }
        let report = run_job(&self.inner, id).await;
        self.inner.in_flight.lock().remove(id);
        report
    }

    /// Waits for every dispatched cycle to finish.
    pub async fn wait_idle(&self) {
        loop {
            let mut set = std::mem::take(&mut *self.inner.tasks.lock());
            if set.is_empty() {
                return;
            }
            while let Some(res) = set.join_next().await {
                if let Err(e) = res {
                    tracing::error!(error = %e, "poll task failed");
                }
            }
        }
    }

    /// Background loop: ticks every `tick_interval` or when woken by
    /// [`Scheduler::enqueue`], until `shutdown` resolves.
    pub async fn run(self, shutdown: impl std::future::Future<Output = ()>) {
        tokio::pin!(shutdown);
        let mut interval = tokio::time::interval(self.inner.config.tick_interval);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            tokio::select! {
                _ = &mut shutdown => break,
                _ = interval.tick() => {}
                _ = self.inner.wake.notified() => {}
            }
            if let Err(e) = self.tick(self.inner.clock.now()) {
                tracing::error!(error = %e, "scheduler tick failed");
            }
        }
        self.wait_idle().await;
    }
}

async fn run_job(inner: &Inner, id: &JobId) -> Option<PollReport> {
    let job = match inner.store.get_job(id) {
        Ok(job) => job,
        Err(e) => {
            tracing::debug!(job = %id, error = %e, "skipping job");
            return None;
        }
    };
    let report = run_poll_cycle(&inner.store, inner.provider.as_ref(), inner.clock.as_ref(), &job, &inner.config.limits).await;
    tracing::info!(
        job = %id,
        pages = report.pages_fetched,
        inserted = report.upsert.inserted,
        updated = report.upsert.updated,
        unchanged = report.upsert.unchanged,
        errors = report.errors.len(),
        "poll cycle finished"
    );
    Some(report)
}
