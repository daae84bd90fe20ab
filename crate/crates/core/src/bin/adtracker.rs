use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adtracker::accounts::Accounts;
use adtracker::clock::SystemClock;
use adtracker::config::Config;
use adtracker::service::Service;
use adtracker::store::Store;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adtracker", version, about = "Ad archive monitor")]
struct Cli {
    /// TOML config file; ADTRACKER_* variables override its values.
    #[arg(long, global = true, env = "ADTRACKER_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API and the polling scheduler.
    Serve,
    /// Create the first manager account. Reads the password from stdin.
    BootstrapManager {
        #[arg(long)]
        email: String,
    },
}

fn read_password() -> std::io::Result<String> {
    eprint!("password: ");
    std::io::stderr().flush()?;
    let mut line = String::new();
    std::io::stdin().lock().read_line(&mut line)?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn bootstrap(config: &Config, email: &str) -> Result<(), String> {
    let store = Store::open(&config.data_dir).map_err(|e| e.to_string())?;
    let password = read_password().map_err(|e| e.to_string())?;
    let accounts = Accounts::new(std::sync::Arc::new(store), std::sync::Arc::new(SystemClock));
    let account = accounts.bootstrap_manager(email, &password).map_err(|e| e.to_string())?;
    println!("manager {} created ({})", account.email, account.account_id.as_str());
    Ok(())
}

async fn serve(config: Config) -> Result<(), String> {
    let service = Service::build(config).map_err(|e| e.to_string())?;
    service
        .serve(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();
    let result = Config::load(cli.config.as_deref()).map_err(|e| e.to_string());
    let result = match (result, cli.command) {
        (Err(e), _) => Err(e),
        (Ok(config), Command::Serve) => serve(config).await,
        (Ok(config), Command::BootstrapManager { email }) => bootstrap(&config, &email),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
