//! Runs the HTTP API against the simulated archive until Ctrl-C. Prints a
//! manager token so the endpoints can be tried with curl.

use adtracker::config::Config;
use adtracker::service::Service;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = Config {
        data_dir: dir.path().into(),
        listen_addr: "127.0.0.1:8080".into(),
        poll_interval_s: 60,
        ..Config::default()
    };
    let addr = config.listen_addr.clone();
    let service = Service::build(config)?;
    service.state.accounts.bootstrap_manager("manager@example.org", "correct horse battery staple")?;
    let session = service.state.accounts.login("manager@example.org", "correct horse battery staple")?;

    println!("listening on http://{addr}");
    println!("export TOKEN={}", session.token);
    println!("curl -H \"Authorization: Bearer $TOKEN\" http://{addr}/api/v1/jobs");
    service
        .serve(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
