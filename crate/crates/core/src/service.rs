//! Wires configuration into a running service.

use std::sync::Arc;

use thiserror::Error;

use crate::accounts::Accounts;
use crate::analysis::{Gazetteer, GazetteerError, ImageCache};
use crate::api::{router, AppState};
use crate::clock::{Clock, SystemClock};
use crate::config::{Config, ProviderMode};
use crate::jobs::{CycleLimits, JobManager, Scheduler, SchedulerConfig};
use crate::provider::{
    seed_simulated, AdProvider, GraphProvider, LiveGraphProvider, LiveProvider, RateLimiter, SimulatedGraphProvider,
    SimulatedProvider,
};
use crate::store::{Store, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error("fixture: {0}")]
    Fixture(String),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Serve(std::io::Error),
}

/// Everything a running instance needs, built from one [`Config`].
pub struct Service {
    pub config: Config,
    pub state: Arc<AppState>,
    pub scheduler: Scheduler,
}

impl Service {
    pub fn build(config: Config) -> Result<Self, ServiceError> {
        Self::build_with_clock(config, Arc::new(SystemClock))
    }

    pub fn build_with_clock(config: Config, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let store = Arc::new(Store::open(&config.data_dir)?);
        let gazetteer = match &config.gazetteer_path {
            Some(p) => Gazetteer::load(p)?,
            None => Gazetteer::bundled(),
        };
        let (provider, graph): (Arc<dyn AdProvider>, Arc<dyn GraphProvider>) = match config.provider.mode {
            ProviderMode::Simulated => {
                let page_size = config.provider.live.page_size as usize;
                let sim = match &config.provider.fixture_path {
                    Some(p) => SimulatedProvider::load_jsonl(p).map_err(|e| ServiceError::Fixture(e.to_string()))?,
                    None => seed_simulated(config.provider.simulated_seed, config.provider.simulated_ads),
                };
                (Arc::new(sim.with_page_size(page_size)), Arc::new(SimulatedGraphProvider::with_fixture_pages()))
            }
            ProviderMode::Live => {
                let limiter = Arc::new(RateLimiter::new(config.provider.live.max_requests_per_minute));
                (
                    Arc::new(LiveProvider::new(config.provider.live.clone(), limiter.clone())),
                    Arc::new(LiveGraphProvider::new(config.provider.live.clone(), limiter)),
                )
            }
        };
        let scheduler = Scheduler::new(
            store.clone(),
            provider,
            clock.clone(),
            SchedulerConfig {
                poll_interval_s: config.poll_interval_s,
                worker_count: config.worker_count,
                limits: CycleLimits { max_pages_per_cycle: config.max_pages_per_cycle, ..CycleLimits::default() },
                ..SchedulerConfig::default()
            },
        );
        let images = ImageCache::new(store.images_dir(), graph, clock.clone()).with_ttl_secs(config.image_ttl_s);
        let state = Arc::new(AppState {
            accounts: Accounts::new(store.clone(), clock.clone()),
            jobs: JobManager::new(store.clone(), scheduler.clone(), clock),
            gazetteer: Arc::new(gazetteer),
            images: Arc::new(images),
            default_threshold_km: config.cluster_threshold_km,
            store,
        });
        Ok(Service { config, state, scheduler })
    }

    pub fn router(&self) -> axum::Router {
        router(self.state.clone(), self.config.static_dir.as_deref())
    }

    /// Serves HTTP and runs the scheduler until `shutdown` resolves.
    pub async fn serve(self, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
        let addr = self.config.listen_addr.clone();
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|source| ServiceError::Bind { addr: addr.clone(), source })?;
        tracing::info!(addr = %addr, "listening");
        let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);
        let mut sched_rx = stop_rx.clone();
        let scheduler = tokio::spawn(self.scheduler.clone().run(async move {
            let _ = sched_rx.wait_for(|s| *s).await;
        }));
        let app = self.router();
        let mut http_rx = stop_rx;
        let result = axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                tokio::select! {
                    _ = shutdown => {}
                    _ = http_rx.wait_for(|s| *s) => {}
                }
            })
            .await;
        let _ = stop_tx.send(true);
        let _ = scheduler.await;
        result.map_err(ServiceError::Serve)
    }
}
