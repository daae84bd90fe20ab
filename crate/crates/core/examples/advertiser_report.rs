//! Advertiser ranking with profile images fetched through the on-disk cache.

use std::sync::Arc;

use adtracker::analysis::{advertiser_report_with_images, ImageCache};
use adtracker::clock::SystemClock;
use adtracker::config::Config;
use adtracker::domain::JobSpecDraft;
use adtracker::provider::{fixture_job_spec, SimulatedGraphProvider};
use adtracker::service::Service;
use adtracker::store::AdQuery;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = Config { data_dir: dir.path().into(), ..Config::default() };
    config.provider.simulated_ads = 120;
    let service = Service::build(config)?;
    let boss = service.state.accounts.bootstrap_manager("manager@example.org", "correct horse battery staple")?;
    let job = service.state.jobs.register_job(&boss, &JobSpecDraft::from(&fixture_job_spec()))?;
    service.state.jobs.scheduler().run_now(&job.job_id).await;

    let images = ImageCache::new(
        service.state.store.images_dir(),
        Arc::new(SimulatedGraphProvider::with_fixture_pages()),
        Arc::new(SystemClock),
    );
    let query = AdQuery::for_user(boss.account_id.clone());
    let entries = advertiser_report_with_images(&service.state.store, &query, &images).await?;
    for e in &entries {
        println!(
            "{:<14} {:<32} ads {:>3}  impressions {:>12.0}  image {}",
            e.page_id,
            e.page_name,
            e.ad_count,
            e.total_weighted_impressions,
            e.profile_image_ref.as_deref().unwrap_or("-")
        );
    }
    println!("images cached under {}", images.dir().display());
    Ok(())
}
