//! Reviewed sign-up, manager approval, bearer sessions and the access
//! policy for jobs and data.

mod model;
mod policy;

use std::sync::Arc;

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use rand::RngCore;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::clock::Clock;
use crate::domain::Timestamp;
use crate::store::{Store, StoreError};

pub use model::{Account, AccountId, AccountStatus, Attestation, Role};
pub use policy::{authorize, Action, Decision, Resource};

pub const MIN_PASSWORD_CHARS: usize = 12;
pub const SESSION_TTL_SECS: i64 = 24 * 3600;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AccountError {
    #[error("email already registered")]
    EmailTaken,
    #[error("password must be at least {MIN_PASSWORD_CHARS} characters")]
    WeakPassword,
    #[error("not a valid email address")]
    InvalidEmail,
    #[error("wrong email or password")]
    InvalidCredentials,
    #[error("missing, unknown or expired session")]
    Unauthenticated,
    #[error("not permitted")]
    Unauthorized,
    #[error("account already reviewed")]
    InvalidState,
    #[error("unknown account {0}")]
    UnknownAccount(String),
    #[error("review decision must be APPROVED or REJECTED")]
    InvalidDecision,
    #[error(transparent)]
    Storage(StoreError),
}

impl From<StoreError> for AccountError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::EmailTaken => AccountError::EmailTaken,
            StoreError::InvalidState => AccountError::InvalidState,
            StoreError::UnknownAccount(id) => AccountError::UnknownAccount(id),
            other => AccountError::Storage(other),
        }
    }
}

/// A freshly issued bearer token. Only its SHA-256 is persisted.
#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub token: String,
    pub expires_at: Timestamp,
    pub account: Account,
}

pub struct Accounts {
    store: Arc<Store>,
    clock: Arc<dyn Clock>,
}

fn normalize_email(email: &str) -> Result<String, AccountError> {
    let email = email.trim().to_lowercase();
    match email.split_once('@') {
        Some((local, domain)) if !local.is_empty() && domain.contains('.') && !domain.starts_with('.') => Ok(email),
        _ => Err(AccountError::InvalidEmail),
    }
}

fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn hash_password(password: &str) -> Result<String, AccountError> {
    let salt = SaltString::generate(&mut argon2::password_hash::rand_core::OsRng);
    Argon2::default()
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| AccountError::Storage(StoreError::StorageFailure(e.to_string())))
}

fn verify_password(password: &str, stored: &str) -> bool {
    PasswordHash::new(stored)
        .map(|parsed| Argon2::default().verify_password(password.as_bytes(), &parsed).is_ok())
        .unwrap_or(false)
}

impl Accounts {
    pub fn new(store: Arc<Store>, clock: Arc<dyn Clock>) -> Self {
        Accounts { store, clock }
    }

    fn create(&self, email: &str, password: &str, role: Role, status: AccountStatus, attestation: Attestation) -> Result<Account, AccountError> {
        let email = normalize_email(email)?;
        if password.chars().count() < MIN_PASSWORD_CHARS {
            return Err(AccountError::WeakPassword);
        }
        if self.store.get_account_by_email(&email)?.is_some() {
            return Err(AccountError::EmailTaken);
        }
        let account = Account {
            account_id: AccountId::generate(),
            email,
            password_hash: hash_password(password)?,
            role,
            status,
            attestation,
            created_at: self.clock.now(),
        };
        self.store.insert_account(&account)?;
        Ok(account)
    }

    /// Registers a researcher awaiting manager review.
    pub fn sign_up(&self, email: &str, password: &str, attestation: Attestation) -> Result<Account, AccountError> {
        self.create(email, password, Role::Researcher, AccountStatus::Pending, attestation)
    }

    /// Creates an approved manager. Used once at deploy time.
    pub fn bootstrap_manager(&self, email: &str, password: &str) -> Result<Account, AccountError> {
        let attested = Attestation { identity_confirmed: true, developer_account: true };
        self.create(email, password, Role::Manager, AccountStatus::Approved, attested)
    }

    pub fn review(&self, reviewer: &Account, target: &AccountId, decision: AccountStatus) -> Result<Account, AccountError> {
        if !authorize(reviewer, Action::ReviewAccount, Resource::None).is_allowed() {
            return Err(AccountError::Unauthorized);
        }
        if decision == AccountStatus::Pending {
            return Err(AccountError::InvalidDecision);
        }
        let account = self.store.decide_account(target, decision)?;
        tracing::info!(account = %target, reviewer = %reviewer.account_id, status = decision.token(), "account reviewed");
        Ok(account)
    }

    pub fn get(&self, id: &AccountId) -> Result<Account, AccountError> {
        self.store.get_account(id)?.ok_or_else(|| AccountError::UnknownAccount(id.to_string()))
    }

    pub fn pending(&self) -> Result<Vec<Account>, AccountError> {
        Ok(self.store.list_accounts(Some(AccountStatus::Pending))?)
    }

    /// Checks credentials and issues a 24 h bearer token. Any status may
    /// log in; the access policy decides what the session can do.
    pub fn login(&self, email: &str, password: &str) -> Result<Session, AccountError> {
        let email = normalize_email(email).map_err(|_| AccountError::InvalidCredentials)?;
        let account = self.store.get_account_by_email(&email)?.ok_or(AccountError::InvalidCredentials)?;
        if !verify_password(password, &account.password_hash) {
            return Err(AccountError::InvalidCredentials);
        }
        let mut raw = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut raw);
        let token = hex::encode(raw);
        let expires_at = self.clock.now().plus_seconds(SESSION_TTL_SECS);
        self.store.insert_session(&token_digest(&token), &account.account_id, expires_at)?;
        Ok(Session { token, expires_at, account })
    }

    /// Resolves a bearer token to its account and slides the expiry
    /// forward by another full TTL.
    pub fn authenticate(&self, token: &str) -> Result<Account, AccountError> {
        let digest = token_digest(token);
        let (account_id, expires_at) = self.store.get_session(&digest)?.ok_or(AccountError::Unauthenticated)?;
        let now = self.clock.now();
        if expires_at <= now {
            return Err(AccountError::Unauthenticated);
        }
        let account = self.store.get_account(&account_id)?.ok_or(AccountError::Unauthenticated)?;
        self.store.extend_session(&digest, now.plus_seconds(SESSION_TTL_SECS))?;
        Ok(account)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ManualClock;

    fn setup() -> (tempfile::TempDir, Arc<Store>, Arc<ManualClock>, Accounts) {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        let clock = Arc::new(ManualClock::new(Timestamp::from_epoch_seconds(1_000_000)));
        let accounts = Accounts::new(store.clone(), clock.clone());
        (dir, store, clock, accounts)
    }

    const PW: &str = "correct horse battery";

    #[test]
    fn sign_up_paths() {
        let (_d, _s, _c, accounts) = setup();
        let both = Attestation { identity_confirmed: true, developer_account: true };
        let a = accounts.sign_up("Researcher@Example.org", PW, both).unwrap();
        assert_eq!(a.status, AccountStatus::Pending);
        assert_eq!(a.role, Role::Researcher);
        assert_eq!(a.email, "researcher@example.org");
        assert_eq!(accounts.sign_up("researcher@example.org", PW, both).unwrap_err(), AccountError::EmailTaken);
        assert_eq!(accounts.sign_up("new@example.org", "abcdef", both).unwrap_err(), AccountError::WeakPassword);
        assert_eq!(accounts.sign_up("nobody", PW, both).unwrap_err(), AccountError::InvalidEmail);
    }

    #[test]
    fn review_transitions() {
        let (_d, _s, _c, accounts) = setup();
        let boss = accounts.bootstrap_manager("boss@example.org", PW).unwrap();
        assert!(boss.is_manager());
        let a = accounts.sign_up("a@example.org", PW, Attestation::default()).unwrap();
        let b = accounts.sign_up("b@example.org", PW, Attestation::default()).unwrap();
        let researcher = accounts.review(&boss, &a.account_id, AccountStatus::Approved).unwrap();
        assert_eq!(researcher.status, AccountStatus::Approved);
        assert_eq!(
            accounts.review(&researcher, &b.account_id, AccountStatus::Approved).unwrap_err(),
            AccountError::Unauthorized
        );
        assert_eq!(
            accounts.review(&boss, &a.account_id, AccountStatus::Approved).unwrap_err(),
            AccountError::InvalidState
        );
        assert_eq!(
            accounts.review(&boss, &b.account_id, AccountStatus::Pending).unwrap_err(),
            AccountError::InvalidDecision
        );
        assert_eq!(accounts.review(&boss, &b.account_id, AccountStatus::Rejected).unwrap().status, AccountStatus::Rejected);
        assert_eq!(
            accounts.review(&boss, &b.account_id, AccountStatus::Approved).unwrap_err(),
            AccountError::InvalidState
        );
    }

    #[test]
    fn sessions_expire_and_slide() {
        let (_d, _s, clock, accounts) = setup();
        accounts.sign_up("a@example.org", PW, Attestation::default()).unwrap();
        assert_eq!(accounts.login("a@example.org", "wrong password!!").unwrap_err(), AccountError::InvalidCredentials);
        assert_eq!(accounts.login("z@example.org", PW).unwrap_err(), AccountError::InvalidCredentials);
        let session = accounts.login("A@example.org", PW).unwrap();
        assert_eq!(accounts.authenticate(&session.token).unwrap().email, "a@example.org");
        clock.advance(SESSION_TTL_SECS - 10);
        assert!(accounts.authenticate(&session.token).is_ok());
        clock.advance(SESSION_TTL_SECS - 10);
        assert!(accounts.authenticate(&session.token).is_ok(), "use renews the session");
        clock.advance(SESSION_TTL_SECS);
        assert_eq!(accounts.authenticate(&session.token).unwrap_err(), AccountError::Unauthenticated);
        assert_eq!(accounts.authenticate("bogus").unwrap_err(), AccountError::Unauthenticated);
    }

    #[test]
    fn no_plaintext_secrets_on_disk() {
        let (dir, store, _c, accounts) = setup();
        accounts.sign_up("a@example.org", PW, Attestation::default()).unwrap();
        let session = accounts.login("a@example.org", PW).unwrap();
        let stored = store.get_account_by_email("a@example.org").unwrap().unwrap();
        assert!(stored.password_hash.starts_with("$argon2id$"));
        drop(accounts);
        drop(store);
        for entry in walk(dir.path()) {
            let bytes = std::fs::read(&entry).unwrap();
            for needle in [PW.as_bytes(), session.token.as_bytes()] {
                assert!(
                    !bytes.windows(needle.len()).any(|w| w == needle),
                    "secret found in {}",
                    entry.display()
                );
            }
        }
    }

    fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
        let mut out = Vec::new();
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn account_json_omits_hash() {
        let (_d, _s, _c, accounts) = setup();
        let a = accounts.sign_up("a@example.org", PW, Attestation::default()).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(!json.contains("password") && !json.contains("argon2"));
    }
}
