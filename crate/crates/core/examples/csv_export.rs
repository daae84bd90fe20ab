//! Collects a job and writes its CSV export to stdout (or the path given as
//! the first argument).

use std::io::Write;

use adtracker::config::Config;
use adtracker::domain::JobSpecDraft;
use adtracker::provider::fixture_job_spec;
use adtracker::service::Service;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = Config { data_dir: dir.path().into(), ..Config::default() };
    config.provider.simulated_ads = 12;
    let service = Service::build(config)?;
    let boss = service.state.accounts.bootstrap_manager("manager@example.org", "correct horse battery staple")?;

    let jobs = &service.state.jobs;
    let job = jobs.register_job(&boss, &JobSpecDraft::from(&fixture_job_spec()))?;
    jobs.scheduler().run_now(&job.job_id).await;

    let export = jobs.export_csv(&boss, &job.job_id)?;
    eprintln!("{} rows", export.row_count());
    let mut out: Box<dyn Write> = match std::env::args().nth(1) {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    // chunked, the same way the HTTP endpoint streams it
    for chunk in export.chunks() {
        out.write_all(&chunk)?;
    }
    Ok(())
}
