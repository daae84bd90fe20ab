//! Regional analysis over a simulated collection: geographic clusters and the
//! per-region ranking, at a few clustering thresholds.

use adtracker::analysis::{regional_report, Gazetteer};
use adtracker::config::Config;
use adtracker::domain::JobSpecDraft;
use adtracker::provider::fixture_job_spec;
use adtracker::service::Service;
use adtracker::store::AdQuery;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = Config { data_dir: dir.path().into(), ..Config::default() };
    config.provider.simulated_ads = 200;
    let service = Service::build(config)?;
    let boss = service.state.accounts.bootstrap_manager("manager@example.org", "correct horse battery staple")?;
    let job = service.state.jobs.register_job(&boss, &JobSpecDraft::from(&fixture_job_spec()))?;
    service.state.jobs.scheduler().run_now(&job.job_id).await;

    let gazetteer = Gazetteer::bundled();
    let query = AdQuery::for_user(boss.account_id.clone());
    for threshold in [0.0, 100.0, 1000.0] {
        let report = regional_report(&service.state.store, &gazetteer, &query, threshold)?;
        println!("threshold {threshold} km: {} clusters", report.clusters.len());
        for c in report.clusters.iter().take(3) {
            let names: Vec<_> = c.members.iter().map(|m| format!("{}/{}", m.country_code, m.region_name)).collect();
            println!("  ({:.2}, {:.2}) reach {:.3} ads {}  {}", c.centroid.lat, c.centroid.lon, c.weighted_reach, c.raw_count, names.join(", "));
        }
    }

    let report = regional_report(&service.state.store, &gazetteer, &query, 100.0)?;
    println!("top regions:");
    for r in report.ranks.iter().take(10) {
        println!("  {:<3} {:<24} reach {:>8.3}  ads {}", r.country_code, r.region_name, r.weighted_reach, r.raw_count);
    }
    println!("unresolved regions: {}", report.unresolved.len());
    Ok(())
}
