//! Durable, deduplicating storage for ads, jobs, accounts and sessions.
//!
//! Backed by a single SQLite database under `<data_dir>/store/`. Every
//! write batch runs in one transaction; all access goes through one
//! connection guarded by a mutex, so readers always see whole batches.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use serde::{Deserialize, Serialize};

use crate::accounts::{Account, AccountId, AccountStatus, Attestation, Role};
use crate::domain::{AdRecord, Timestamp};
use crate::jobs::{Job, JobId, JobState, PollReport};

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS ads (
    ad_id         TEXT PRIMARY KEY,
    page_id       TEXT NOT NULL,
    analysis_time INTEGER NOT NULL,
    first_seen    INTEGER NOT NULL,
    last_seen     INTEGER NOT NULL,
    record        TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS ads_by_time ON ads(analysis_time, ad_id);
CREATE TABLE IF NOT EXISTS jobs (
    job_id       TEXT PRIMARY KEY,
    owner        TEXT NOT NULL,
    state        TEXT NOT NULL,
    visibility   TEXT NOT NULL,
    search_term  TEXT NOT NULL,
    created_at   INTEGER NOT NULL,
    last_poll_at INTEGER,
    spec         TEXT NOT NULL,
    last_report  TEXT
);
CREATE TABLE IF NOT EXISTS job_ads (
    job_id TEXT NOT NULL,
    ad_id  TEXT NOT NULL,
    PRIMARY KEY (job_id, ad_id)
);
CREATE INDEX IF NOT EXISTS job_ads_by_ad ON job_ads(ad_id);
CREATE TABLE IF NOT EXISTS accounts (
    account_id         TEXT PRIMARY KEY,
    email              TEXT NOT NULL UNIQUE,
    password_hash      TEXT NOT NULL,
    role               TEXT NOT NULL,
    status             TEXT NOT NULL,
    identity_confirmed INTEGER NOT NULL,
    developer_account  INTEGER NOT NULL,
    created_at         INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    token_hash TEXT PRIMARY KEY,
    account_id TEXT NOT NULL,
    expires_at INTEGER NOT NULL
);
";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("job {0} is deleted")]
    JobDeleted(JobId),
    #[error("unknown account {0}")]
    UnknownAccount(String),
    #[error("email already registered")]
    EmailTaken,
    #[error("account is not pending review")]
    InvalidState,
    #[error("requesting account is not approved")]
    Unauthorized,
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

impl From<rusqlite::Error> for StoreError {
    fn from(e: rusqlite::Error) -> Self {
        StoreError::StorageFailure(e.to_string())
    }
}

impl From<serde_json::Error> for StoreError {
    fn from(e: serde_json::Error) -> Self {
        StoreError::StorageFailure(format!("corrupt row: {e}"))
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Per-batch ingest counts. The four fields always sum to the batch size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpsertReport {
    pub inserted: u64,
    pub updated: u64,
    pub unchanged: u64,
    pub skipped_invalid: u64,
}

impl UpsertReport {
    pub fn total(&self) -> u64 {
        self.inserted + self.updated + self.unchanged + self.skipped_invalid
    }

    pub fn absorb(&mut self, other: UpsertReport) {
        self.inserted += other.inserted;
        self.updated += other.updated;
        self.unchanged += other.unchanged;
        self.skipped_invalid += other.skipped_invalid;
    }
}

/// Selects ads for analysis or export. `time_window` is inclusive on
/// both ends and applies to [`AdRecord::analysis_time`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdQuery {
    pub time_window: Option<(Timestamp, Timestamp)>,
    pub job_ids: Option<BTreeSet<JobId>>,
    pub page_ids: Option<BTreeSet<String>>,
    pub requesting_user: AccountId,
}

impl AdQuery {
    pub fn for_user(user: AccountId) -> Self {
        AdQuery { time_window: None, job_ids: None, page_ids: None, requesting_user: user }
    }

    pub fn window(mut self, start: Timestamp, end: Timestamp) -> Self {
        self.time_window = Some((start, end));
        self
    }

    pub fn jobs(mut self, ids: impl IntoIterator<Item = JobId>) -> Self {
        self.job_ids = Some(ids.into_iter().collect());
        self
    }

    pub fn pages(mut self, ids: impl IntoIterator<Item = String>) -> Self {
        self.page_ids = Some(ids.into_iter().collect());
        self
    }
}

/// Filter for [`Store::list_jobs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobFilter {
    pub viewer: AccountId,
    pub viewer_is_manager: bool,
    pub query: Option<String>,
    pub limit: usize,
    pub offset: usize,
}

pub struct Store {
    conn: Mutex<Connection>,
    data_dir: PathBuf,
    fault_after_writes: Mutex<Option<usize>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("data_dir", &self.data_dir).finish()
    }
}

fn ts(secs: i64) -> Timestamp {
    Timestamp::from_epoch_seconds(secs)
}

struct JobRow {
    job_id: String,
    owner: String,
    state: String,
    created_at: i64,
    last_poll_at: Option<i64>,
    spec: String,
    last_report: Option<String>,
}

fn job_from_row(row: &rusqlite::Row<'_>) -> rusqlite::Result<JobRow> {
    Ok(JobRow {
        job_id: row.get("job_id")?,
        owner: row.get("owner")?,
        state: row.get("state")?,
        created_at: row.get("created_at")?,
        last_poll_at: row.get("last_poll_at")?,
        spec: row.get("spec")?,
        last_report: row.get("last_report")?,
    })
}

fn finish_job(row: JobRow) -> Result<Job> {
    Ok(Job {
        job_id: JobId(row.job_id),
        owner: AccountId(row.owner),
        spec: serde_json::from_str(&row.spec)?,
        created_at: ts(row.created_at),
        state: JobState::from_token(&row.state)
            .ok_or_else(|| StoreError::StorageFailure(format!("bad job state {:?}", row.state)))?,
        last_poll_at: row.last_poll_at.map(ts),
        last_report: row.last_report.map(|r| serde_json::from_str(&r)).transpose()?,
    })
}

fn account_from_row(row: &rusqlite::Row<'_>) -> rusqlite::Result<Account> {
    let role: String = row.get("role")?;
    let status: String = row.get("status")?;
    Ok(Account {
        account_id: AccountId(row.get("account_id")?),
        email: row.get("email")?,
        password_hash: row.get("password_hash")?,
        role: Role::from_token(&role).unwrap_or(Role::Researcher),
        status: AccountStatus::from_token(&status).unwrap_or(AccountStatus::Rejected),
        attestation: Attestation {
            identity_confirmed: row.get("identity_confirmed")?,
            developer_account: row.get("developer_account")?,
        },
        created_at: ts(row.get("created_at")?),
    })
}

fn ad_from_row(row: &rusqlite::Row<'_>) -> rusqlite::Result<(String, i64, i64)> {
    Ok((row.get("record")?, row.get("first_seen")?, row.get("last_seen")?))
}

fn finish_ad((record, first, last): (String, i64, i64)) -> Result<AdRecord> {
    let mut ad: AdRecord = serde_json::from_str(&record)?;
    ad.first_seen = Some(ts(first));
    ad.last_seen = Some(ts(last));
    Ok(ad)
}

fn record_json(ad: &AdRecord) -> Result<String> {
    let stripped = AdRecord { first_seen: None, last_seen: None, ..ad.clone() };
    Ok(serde_json::to_string(&stripped)?)
}

fn id_list<'a>(ids: impl IntoIterator<Item = &'a str>) -> String {
    serde_json::to_string(&ids.into_iter().collect::<Vec<_>>()).unwrap_or_else(|_| "[]".into())
}

impl Store {
    /// Opens (creating if needed) the store under `data_dir`.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self> {
        let data_dir = data_dir.as_ref().to_path_buf();
        let io = |e: std::io::Error| StoreError::StorageFailure(e.to_string());
        std::fs::create_dir_all(data_dir.join("store")).map_err(io)?;
        std::fs::create_dir_all(data_dir.join("images")).map_err(io)?;
        let conn = Connection::open(data_dir.join("store").join("adtracker.sqlite3"))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn: Mutex::new(conn), data_dir, fault_after_writes: Mutex::new(None) })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn images_dir(&self) -> PathBuf {
        self.data_dir.join("images")
    }

    /// Makes the next ad batch fail with `StorageFailure` after `writes`
    /// row writes, for exercising rollback. Cleared after it fires.
    #[doc(hidden)]
    pub fn inject_write_fault(&self, writes: Option<usize>) {
        *self.fault_after_writes.lock() = writes;
    }

    // ---- ads ----

    /// Inserts or refreshes a batch of ads and links each to `job_id`.
    /// The whole batch commits or none of it does.
    pub fn upsert_ads(&self, job_id: &JobId, ads: &[AdRecord], now: Timestamp) -> Result<UpsertReport> {
        let mut conn = self.conn.lock();
        let tx = conn.transaction()?;
        let fault = self.fault_after_writes.lock().take();
        let report = Self::upsert_in(&tx, job_id, ads, now, fault)?;
        tx.commit()?;
        Ok(report)
    }

    fn upsert_in(
        tx: &Transaction<'_>,
        job_id: &JobId,
        ads: &[AdRecord],
        now: Timestamp,
        fault: Option<usize>,
    ) -> Result<UpsertReport> {
        let state: Option<String> = tx
            .query_row("SELECT state FROM jobs WHERE job_id = ?1", [job_id.as_str()], |r| r.get(0))
            .optional()?;
        match state.as_deref().and_then(JobState::from_token) {
            None => return Err(StoreError::UnknownJob(job_id.clone())),
            Some(JobState::Deleted) => return Err(StoreError::JobDeleted(job_id.clone())),
            Some(JobState::Active) => {}
        }

        let mut report = UpsertReport::default();
        let mut writes = 0usize;
        let mut tick = || -> Result<()> {
            writes += 1;
            match fault {
                Some(limit) if writes > limit => Err(StoreError::StorageFailure("injected write fault".into())),
                _ => Ok(()),
            }
        };
        let now = now.epoch_seconds();

        for ad in ads {
            if !ad.is_valid() {
                tracing::warn!(ad_id = %ad.ad_id, "skipping schema-invalid ad");
                report.skipped_invalid += 1;
                continue;
            }
            let existing: Option<String> = tx
                .query_row("SELECT record FROM ads WHERE ad_id = ?1", [&ad.ad_id], |r| r.get(0))
                .optional()?;
            let json = record_json(ad)?;
            tick()?;
            match existing {
                None => {
                    tx.execute(
                        "INSERT INTO ads (ad_id, page_id, analysis_time, first_seen, last_seen, record)
                         VALUES (?1, ?2, ?3, ?4, ?4, ?5)",
                        params![ad.ad_id, ad.page_id, ad.analysis_time().epoch_seconds(), now, json],
                    )?;
                    report.inserted += 1;
                }
                Some(old_json) => {
                    let old: AdRecord = serde_json::from_str(&old_json)?;
                    if old.same_content(ad) {
                        tx.execute(
                            "UPDATE ads SET last_seen = max(last_seen, ?2) WHERE ad_id = ?1",
                            params![ad.ad_id, now],
                        )?;
                        report.unchanged += 1;
                    } else {
                        if old.identity_differs(ad) {
                            tracing::warn!(ad_id = %ad.ad_id, "archive changed identity fields of a known ad");
                        }
                        tx.execute(
                            "UPDATE ads SET page_id = ?2, analysis_time = ?3, last_seen = max(last_seen, ?4),
                             record = ?5 WHERE ad_id = ?1",
                            params![ad.ad_id, ad.page_id, ad.analysis_time().epoch_seconds(), now, json],
                        )?;
                        report.updated += 1;
                    }
                }
            }
            tick()?;
            tx.execute(
                "INSERT OR IGNORE INTO job_ads (job_id, ad_id) VALUES (?1, ?2)",
                params![job_id.as_str(), ad.ad_id],
            )?;
        }
        Ok(report)
    }

    /// Ads linked to jobs the requesting user may read, filtered and
    /// ordered by `(analysis_time, ad_id)`.
    pub fn query_ads(&self, q: &AdQuery) -> Result<Vec<AdRecord>> {
        if let Some((start, end)) = q.time_window {
            if start > end {
                return Ok(Vec::new());
            }
        }
        let conn = self.conn.lock();
        let viewer = Self::account_in(&conn, &q.requesting_user)?.ok_or(StoreError::Unauthorized)?;
        if !viewer.is_approved() {
            return Err(StoreError::Unauthorized);
        }
        let visible = Self::visible_job_ids_in(&conn, &viewer)?;
        let job_ids: Vec<&str> = visible
            .iter()
            .filter(|id| q.job_ids.as_ref().is_none_or(|f| f.contains(*id)))
            .map(JobId::as_str)
            .collect();
        let pages = q.page_ids.as_ref().map(|p| id_list(p.iter().map(String::as_str)));
        let (start, end) = match q.time_window {
            Some((s, e)) => (Some(s.epoch_seconds()), Some(e.epoch_seconds())),
            None => (None, None),
        };
        let mut stmt = conn.prepare_cached(
            "SELECT a.record, a.first_seen, a.last_seen FROM ads a
             WHERE EXISTS (SELECT 1 FROM job_ads ja
                           WHERE ja.ad_id = a.ad_id AND ja.job_id IN (SELECT value FROM json_each(?1)))
               AND (?2 IS NULL OR a.page_id IN (SELECT value FROM json_each(?2)))
               AND (?3 IS NULL OR a.analysis_time >= ?3)
               AND (?4 IS NULL OR a.analysis_time <= ?4)
             ORDER BY a.analysis_time, a.ad_id",
        )?;
        let rows = stmt.query_map(params![id_list(job_ids), pages, start, end], ad_from_row)?;
        rows.map(|r| finish_ad(r?)).collect()
    }

    fn visible_job_ids_in(conn: &Connection, viewer: &Account) -> Result<Vec<JobId>> {
        let mut stmt = conn.prepare_cached(
            "SELECT job_id FROM jobs WHERE state = 'ACTIVE'
             AND (?2 OR owner = ?1 OR visibility = 'PUBLIC') ORDER BY job_id",
        )?;
        let rows = stmt.query_map(params![viewer.account_id.as_str(), viewer.is_manager()], |r| {
            r.get::<_, String>(0)
        })?;
        Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?.into_iter().map(JobId).collect())
    }

    pub fn get_ad(&self, ad_id: &str) -> Result<Option<AdRecord>> {
        let conn = self.conn.lock();
        conn.query_row("SELECT record, first_seen, last_seen FROM ads WHERE ad_id = ?1", [ad_id], ad_from_row)
            .optional()?
            .map(finish_ad)
            .transpose()
    }

    /// Every stored ad ordered by id, with seen timestamps.
    pub fn all_ads(&self) -> Result<Vec<AdRecord>> {
        let conn = self.conn.lock();
        let mut stmt = conn.prepare("SELECT record, first_seen, last_seen FROM ads ORDER BY ad_id")?;
        let rows = stmt.query_map([], ad_from_row)?;
        rows.map(|r| finish_ad(r?)).collect()
    }

    pub fn ad_count(&self) -> Result<u64> {
        let conn = self.conn.lock();
        Ok(conn.query_row("SELECT count(*) FROM ads", [], |r| r.get::<_, i64>(0))? as u64)
    }

    /// All job-to-ad links, ordered.
    pub fn links(&self) -> Result<Vec<(JobId, String)>> {
        let conn = self.conn.lock();
        let mut stmt = conn.prepare("SELECT job_id, ad_id FROM job_ads ORDER BY job_id, ad_id")?;
        let rows = stmt.query_map([], |r| Ok((JobId(r.get(0)?), r.get(1)?)))?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    // ---- jobs ----

    pub fn put_job(&self, job: &Job) -> Result<()> {
        let conn = self.conn.lock();
        let report = job.last_report.as_ref().map(serde_json::to_string).transpose()?;
        conn.execute(
            "INSERT INTO jobs (job_id, owner, state, visibility, search_term, created_at, last_poll_at, spec, last_report)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)
             ON CONFLICT(job_id) DO UPDATE SET owner = ?2, state = ?3, visibility = ?4, search_term = ?5,
                 created_at = ?6, last_poll_at = ?7, spec = ?8, last_report = ?9",
            params![
                job.job_id.as_str(),
                job.owner.as_str(),
                job.state.token(),
                job.spec.visibility.token(),
                job.spec.search_term,
                job.created_at.epoch_seconds(),
                job.last_poll_at.map(Timestamp::epoch_seconds),
                serde_json::to_string(&job.spec)?,
                report,
            ],
        )?;
        Ok(())
    }

    /// Looks up a live job. Deleted jobs are reported as unknown.
    pub fn get_job(&self, id: &JobId) -> Result<Job> {
        match self.get_job_any_state(id)? {
            Some(job) if job.is_active() => Ok(job),
            _ => Err(StoreError::UnknownJob(id.clone())),
        }
    }

    /// Looks up a job row including soft-deleted ones.
    pub fn get_job_any_state(&self, id: &JobId) -> Result<Option<Job>> {
        let conn = self.conn.lock();
        conn.query_row("SELECT * FROM jobs WHERE job_id = ?1", [id.as_str()], job_from_row)
            .optional()?
            .map(finish_job)
            .transpose()
    }

    pub fn job_state(&self, id: &JobId) -> Result<Option<JobState>> {
        let conn = self.conn.lock();
        let state: Option<String> =
            conn.query_row("SELECT state FROM jobs WHERE job_id = ?1", [id.as_str()], |r| r.get(0)).optional()?;
        Ok(state.as_deref().and_then(JobState::from_token))
    }

    /// Marks a job deleted and drops its ad links. Ads stay, since other
    /// jobs may still link them.
    pub fn delete_job(&self, id: &JobId) -> Result<()> {
        let mut conn = self.conn.lock();
        let tx = conn.transaction()?;
        let changed = tx.execute(
            "UPDATE jobs SET state = 'DELETED' WHERE job_id = ?1 AND state = 'ACTIVE'",
            [id.as_str()],
        )?;
        if changed == 0 {
            return Err(StoreError::UnknownJob(id.clone()));
        }
        tx.execute("DELETE FROM job_ads WHERE job_id = ?1", [id.as_str()])?;
        tx.commit()?;
        Ok(())
    }

    /// Live jobs visible to the viewer whose search term contains the
    /// query (case-insensitive), oldest first.
    pub fn list_jobs(&self, filter: &JobFilter) -> Result<Vec<Job>> {
        let conn = self.conn.lock();
        let mut stmt = conn.prepare_cached(
            "SELECT * FROM jobs WHERE state = 'ACTIVE'
             AND (?2 OR owner = ?1 OR visibility = 'PUBLIC')
             ORDER BY created_at, job_id",
        )?;
        let rows = stmt.query_map(params![filter.viewer.as_str(), filter.viewer_is_manager], job_from_row)?;
        let needle = filter.query.as_deref().map(str::to_lowercase).unwrap_or_default();
        let mut out = Vec::new();
        let mut skipped = 0;
        for row in rows {
            let job = finish_job(row?)?;
            if !job.spec.search_term.to_lowercase().contains(&needle) {
                continue;
            }
            if skipped < filter.offset {
                skipped += 1;
                continue;
            }
            if out.len() == filter.limit {
                break;
            }
            out.push(job);
        }
        Ok(out)
    }

    /// Live jobs never polled or last polled at or before `now - interval_s`.
    pub fn due_jobs(&self, now: Timestamp, interval_s: i64) -> Result<Vec<JobId>> {
        let conn = self.conn.lock();
        let mut stmt = conn.prepare_cached(
            "SELECT job_id FROM jobs WHERE state = 'ACTIVE'
             AND (last_poll_at IS NULL OR last_poll_at <= ?1)
             ORDER BY created_at, job_id",
        )?;
        let cutoff = now.epoch_seconds().saturating_sub(interval_s);
        let rows = stmt.query_map([cutoff], |r| r.get::<_, String>(0))?;
        Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?.into_iter().map(JobId).collect())
    }

    /// Stores a cycle's report and its start time as the last poll time.
    /// Works on deleted jobs too, so interrupted cycles stay explainable.
    pub fn record_poll(&self, id: &JobId, report: &PollReport) -> Result<()> {
        let conn = self.conn.lock();
        let changed = conn.execute(
            "UPDATE jobs SET last_poll_at = ?2, last_report = ?3 WHERE job_id = ?1",
            params![id.as_str(), report.started_at.epoch_seconds(), serde_json::to_string(report)?],
        )?;
        if changed == 0 {
            return Err(StoreError::UnknownJob(id.clone()));
        }
        Ok(())
    }

    // ---- accounts ----

    pub fn insert_account(&self, account: &Account) -> Result<()> {
        let conn = self.conn.lock();
        let res = conn.execute(
            "INSERT INTO accounts (account_id, email, password_hash, role, status,
                                   identity_confirmed, developer_account, created_at)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
            params![
                account.account_id.as_str(),
                account.email,
                account.password_hash,
                account.role.token(),
                account.status.token(),
                account.attestation.identity_confirmed,
                account.attestation.developer_account,
                account.created_at.epoch_seconds(),
            ],
        );
        match res {
            Ok(_) => Ok(()),
            Err(rusqlite::Error::SqliteFailure(e, _)) if e.code == rusqlite::ErrorCode::ConstraintViolation => {
                Err(StoreError::EmailTaken)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn account_in(conn: &Connection, id: &AccountId) -> Result<Option<Account>> {
        Ok(conn
            .query_row("SELECT * FROM accounts WHERE account_id = ?1", [id.as_str()], account_from_row)
            .optional()?)
    }

    pub fn get_account(&self, id: &AccountId) -> Result<Option<Account>> {
        Self::account_in(&self.conn.lock(), id)
    }

    pub fn get_account_by_email(&self, email: &str) -> Result<Option<Account>> {
        let conn = self.conn.lock();
        Ok(conn.query_row("SELECT * FROM accounts WHERE email = ?1", [email], account_from_row).optional()?)
    }

    pub fn list_accounts(&self, status: Option<AccountStatus>) -> Result<Vec<Account>> {
        let conn = self.conn.lock();
        let mut stmt = conn
            .prepare_cached("SELECT * FROM accounts WHERE ?1 IS NULL OR status = ?1 ORDER BY created_at, email")?;
        let rows = stmt.query_map([status.map(AccountStatus::token)], account_from_row)?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Moves a pending account to `decision`. Fails with `InvalidState`
    /// if the account was already decided.
    pub fn decide_account(&self, id: &AccountId, decision: AccountStatus) -> Result<Account> {
        let conn = self.conn.lock();
        let changed = conn.execute(
            "UPDATE accounts SET status = ?2 WHERE account_id = ?1 AND status = 'PENDING'",
            params![id.as_str(), decision.token()],
        )?;
        let account = Self::account_in(&conn, id)?.ok_or_else(|| StoreError::UnknownAccount(id.to_string()))?;
        if changed == 0 {
            return Err(StoreError::InvalidState);
        }
        Ok(account)
    }

    pub fn insert_session(&self, token_hash: &str, account: &AccountId, expires_at: Timestamp) -> Result<()> {
        let conn = self.conn.lock();
        conn.execute(
            "INSERT INTO sessions (token_hash, account_id, expires_at) VALUES (?1, ?2, ?3)",
            params![token_hash, account.as_str(), expires_at.epoch_seconds()],
        )?;
        Ok(())
    }

    /// Returns the session's account and expiry, if the session exists.
    pub fn get_session(&self, token_hash: &str) -> Result<Option<(AccountId, Timestamp)>> {
        let conn = self.conn.lock();
        Ok(conn
            .query_row(
                "SELECT account_id, expires_at FROM sessions WHERE token_hash = ?1",
                [token_hash],
                |r| Ok((AccountId(r.get(0)?), ts(r.get(1)?))),
            )
            .optional()?)
    }

    pub fn extend_session(&self, token_hash: &str, expires_at: Timestamp) -> Result<()> {
        let conn = self.conn.lock();
        conn.execute(
            "UPDATE sessions SET expires_at = ?2 WHERE token_hash = ?1",
            params![token_hash, expires_at.epoch_seconds()],
        )?;
        Ok(())
    }

    pub fn purge_sessions(&self, now: Timestamp) -> Result<usize> {
        let conn = self.conn.lock();
        Ok(conn.execute("DELETE FROM sessions WHERE expires_at <= ?1", [now.epoch_seconds()])?)
    }
}
