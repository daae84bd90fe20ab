//! Sign-up, manager review and login. Only approved accounts get data access.

use std::sync::Arc;

use adtracker::accounts::{authorize, AccountStatus, Accounts, Action, Attestation, Resource};
use adtracker::clock::SystemClock;
use adtracker::store::Store;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = Arc::new(Store::open(dir.path())?);
    let accounts = Accounts::new(store, Arc::new(SystemClock));

    let boss = accounts.bootstrap_manager("manager@example.org", "correct horse battery staple")?;
    let attest = Attestation { identity_confirmed: true, developer_account: true };
    let alice = accounts.sign_up("alice@example.org", "alice's long passphrase", attest.clone())?;
    let mallory = accounts.sign_up("mallory@example.org", "mallory's long passphrase", attest)?;
    println!("pending: {:?}", accounts.pending()?.iter().map(|a| &a.email).collect::<Vec<_>>());

    let alice = accounts.review(&boss, &alice.account_id, AccountStatus::Approved)?;
    let mallory = accounts.review(&boss, &mallory.account_id, AccountStatus::Rejected)?;

    for account in [&alice, &mallory] {
        let decision = authorize(account, Action::ReadAnalysis, Resource::None);
        println!("{} is {:?}; read analysis: {:?}", account.email, account.status, decision);
    }

    let session = accounts.login("alice@example.org", "alice's long passphrase")?;
    let who = accounts.authenticate(&session.token)?;
    println!("token authenticates {} until {}", who.email, session.expires_at);
    match accounts.login("alice@example.org", "wrong") {
        Err(e) => println!("bad password: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
