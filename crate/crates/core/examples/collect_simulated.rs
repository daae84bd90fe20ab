//! Registers a job against the seeded simulated archive and runs two poll
//! cycles. The second cycle finds nothing new.

use std::sync::Arc;

use adtracker::clock::ManualClock;
use adtracker::config::Config;
use adtracker::domain::{JobSpecDraft, Timestamp};
use adtracker::provider::fixture_job_spec;
use adtracker::service::Service;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = Config { data_dir: dir.path().into(), ..Config::default() };
    config.provider.simulated_ads = 60;
    config.provider.live.page_size = 25;

    let clock = Arc::new(ManualClock::new(Timestamp::from_epoch_seconds(1_700_000_000)));
    let service = Service::build_with_clock(config, clock.clone())?;
    let boss = service.state.accounts.bootstrap_manager("manager@example.org", "correct horse battery staple")?;

    let jobs = &service.state.jobs;
    let job = jobs.register_job(&boss, &JobSpecDraft::from(&fixture_job_spec()))?;
    println!("registered job {} for {:?}", job.job_id, job.spec.search_term);

    for cycle in 1..=2 {
        let report = jobs.scheduler().run_now(&job.job_id).await.expect("job idle");
        let u = &report.upsert;
        println!(
            "cycle {cycle}: {} pages, inserted {} updated {} unchanged {} invalid {}",
            report.pages_fetched, u.inserted, u.updated, u.unchanged, u.skipped_invalid
        );
        clock.advance(300);
    }
    println!("store holds {} ads", service.state.store.ad_count()?);
    Ok(())
}
