//! Deterministic offline archive.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use async_trait::async_trait;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{spec_matches, AdProvider, Page, PageCursor, ProviderError};
use crate::domain::{
    ActiveStatus, AdCategory, AdRecord, Platform, Visibility, DemographicShare, Gender, InsightRange, JobSpec, RegionalShare, Timestamp, SENTINEL_UPPER,
};

/// Every generated ad mentions this word, so a job searching for it with
/// status `ALL` and [`FIXTURE_COUNTRIES`] matches the whole fixture.
pub const FIXTURE_KEYWORD: &str = "vote";

pub const FIXTURE_COUNTRIES: &[&str] = &["CA", "US", "GB", "BR"];

/// Regions the generator distributes reach over.
pub const FIXTURE_REGIONS: &[(&str, &str)] = &[
    ("CA", "Ontario"),
    ("CA", "Quebec"),
    ("CA", "British Columbia"),
    ("CA", "Alberta"),
    ("CA", "Manitoba"),
    ("CA", "Nova Scotia"),
    ("US", "California"),
    ("US", "Texas"),
    ("US", "New York"),
    ("US", "New Jersey"),
    ("US", "Pennsylvania"),
    ("US", "Florida"),
    ("US", "Washington"),
    ("US", "Oregon"),
    ("GB", "England"),
    ("GB", "Scotland"),
    ("GB", "Wales"),
    ("GB", "Northern Ireland"),
    ("BR", "São Paulo"),
    ("BR", "Rio de Janeiro"),
    ("BR", "Minas Gerais"),
    ("BR", "Bahia"),
];

struct FixturePage {
    id: &'static str,
    name: &'static str,
    renamed: &'static str,
    funder: &'static str,
    country: &'static str,
    currency: &'static str,
}

const PAGES: &[FixturePage] = &[
    FixturePage { id: "100200300401", name: "Northern Voices", renamed: "Northern Voices Canada", funder: "Northern Voices Society", country: "CA", currency: "CAD" },
    FixturePage { id: "100200300402", name: "Prairie Action", renamed: "Prairie Action Network", funder: "Prairie Action Inc.", country: "CA", currency: "CAD" },
    FixturePage { id: "100200300403", name: "Coastal Future", renamed: "Coastal Future BC", funder: "Coastal Future Fund", country: "CA", currency: "CAD" },
    FixturePage { id: "100200300404", name: "Citizens for Main Street", renamed: "Main Street Citizens", funder: "Main Street PAC", country: "US", currency: "USD" },
    FixturePage { id: "100200300405", name: "Liberty Forward", renamed: "Liberty Forward Action", funder: "Liberty Forward, Inc.", country: "US", currency: "USD" },
    FixturePage { id: "100200300406", name: "Clean Air Now", renamed: "Clean Air Now!", funder: "Clean Air Coalition", country: "US", currency: "USD" },
    FixturePage { id: "100200300407", name: "Heartland Families", renamed: "Heartland Families United", funder: "Heartland Families Trust", country: "US", currency: "USD" },
    FixturePage { id: "100200300408", name: "Britain Decides", renamed: "Britain Decides 2021", funder: "Britain Decides Ltd", country: "GB", currency: "GBP" },
    FixturePage { id: "100200300409", name: "Fair Shares UK", renamed: "Fair Shares", funder: "Fair Shares Campaign", country: "GB", currency: "GBP" },
    FixturePage { id: "100200300410", name: "Voz do Povo", renamed: "Voz do Povo Brasil", funder: "Instituto Voz do Povo", country: "BR", currency: "BRL" },
    FixturePage { id: "100200300411", name: "Amazônia Viva", renamed: "Amazônia Viva Já", funder: "Associação Amazônia Viva", country: "BR", currency: "BRL" },
    FixturePage { id: "100200300412", name: "Open Ballot", renamed: "Open Ballot Project", funder: "Open Ballot Foundation", country: "US", currency: "USD" },
];

const ISSUES: &[&str] = &[
    "climate policy",
    "healthcare",
    "\"fair\" taxes",
    "immigration",
    "housing, rent and wages",
    "the election",
    "public schools",
    "Trump's record",
];

const OPENERS: &[&str] = &[
    "Stand up, speak out:",
    "Paid message about",
    "Your neighbours care about",
    "Did you know? Facts on",
    "Time to decide on",
];

const CLOSERS: &[&str] = &[
    "Make your vote count.",
    "Register to vote today!",
    "Every vote matters, so show up.",
    "Vote early.\nBring a friend.",
];

const AGE_BANDS: &[&str] = &["18-24", "25-34", "35-44", "45-54", "55-64", "65+"];
const GENDERS: &[Gender] = &[Gender::Female, Gender::Male, Gender::Unknown];

const SPEND_BANDS: &[(u64, u64)] = &[(0, 99), (100, 499), (500, 999), (1000, 4999), (5000, 9999), (10000, 49999)];
const IMPRESSION_BANDS: &[(u64, u64)] = &[
    (0, 999),
    (1000, 4999),
    (5000, 9999),
    (10000, 49999),
    (50000, 99999),
    (100000, 199999),
    (1000000, SENTINEL_UPPER),
];
const REACH_BANDS: &[(u64, u64)] = &[(1000, 5000), (5001, 10000), (10001, 50000), (50001, 100000), (1000001, SENTINEL_UPPER)];

/// Start of the generator's two-year timestamp window (2020-01-01T00:00:00Z).
const WINDOW_START: i64 = 1_577_836_800;
const WINDOW_LEN: i64 = 2 * 365 * 86_400;
const DAY: i64 = 86_400;

pub(crate) fn fixture_page_ids() -> impl Iterator<Item = &'static str> {
    PAGES.iter().map(|p| p.id)
}

/// Splits `total` into `parts` positive integers, in random order.
fn integer_split(rng: &mut ChaCha8Rng, total: u32, parts: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = (1..total).collect::<Vec<_>>();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(parts);
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn band(rng: &mut ChaCha8Rng, bands: &[(u64, u64)]) -> InsightRange {
    let (lower, upper) = bands[rng.gen_range(0..bands.len())];
    InsightRange { lower, upper }
}

fn generate_ad(rng: &mut ChaCha8Rng, index: usize) -> AdRecord {
    let page = &PAGES[rng.gen_range(0..PAGES.len())];
    let ad_id = format!("{:08}{:06}", rng.gen_range(10_000_000u32..100_000_000), index);
    let issue = ISSUES[rng.gen_range(0..ISSUES.len())];
    let body = format!(
        "{} {}. {}",
        OPENERS[rng.gen_range(0..OPENERS.len())],
        issue,
        CLOSERS[rng.gen_range(0..CLOSERS.len())]
    );
    let page_name = if rng.gen_bool(0.1) { page.renamed } else { page.name };

    let creation = WINDOW_START + rng.gen_range(0..WINDOW_LEN);
    let delivery_start = rng.gen_bool(0.9).then(|| creation + rng.gen_range(0..7 * DAY));
    let delivery_stop = if rng.gen_bool(0.35) {
        Some(delivery_start.unwrap_or(creation) + rng.gen_range(DAY..60 * DAY))
    } else {
        None
    };

    let has_link = rng.gen_bool(0.6);
    let slug = issue.replace(['"', ',', '\''], "").replace(' ', "-");
    let has_spend = rng.gen_bool(0.9);

    let regions: Vec<&(&str, &str)> = FIXTURE_REGIONS.iter().filter(|(c, _)| *c == page.country).collect();
    let n_regions = rng.gen_range(1..=regions.len().min(4));
    let chosen: Vec<_> = regions.choose_multiple(rng, n_regions).cloned().collect();
    let regional_total = if rng.gen_bool(0.8) { 100 } else { rng.gen_range(95..100) };
    let regional_distribution = chosen
        .into_iter()
        .zip(integer_split(rng, regional_total, n_regions))
        .map(|((country, region), pct)| RegionalShare {
            country_code: (*country).to_string(),
            region_name: (*region).to_string(),
            percentage: pct as f64,
        })
        .collect();

    let mut buckets: Vec<(&str, Gender)> =
        AGE_BANDS.iter().flat_map(|a| GENDERS.iter().map(move |g| (*a, *g))).collect();
    buckets.shuffle(rng);
    let n_buckets = rng.gen_range(2..=6);
    let demographic_distribution = buckets
        .into_iter()
        .take(n_buckets)
        .zip(integer_split(rng, 100, n_buckets))
        .map(|((age, gender), pct)| DemographicShare {
            age_range: age.to_string(),
            gender,
            percentage: pct as f64,
        })
        .collect();

    AdRecord {
        snapshot_url: Some(format!("https://www.facebook.com/ads/archive/render_ad/?id={ad_id}")),
        ad_id,
        page_id: page.id.to_string(),
        page_name: page_name.to_string(),
        creation_time: Timestamp::from_epoch_seconds(creation),
        body,
        link_caption: has_link.then(|| "example.org".to_string()),
        link_description: has_link.then(|| format!("What {} means for you", issue)),
        link_title: has_link.then(|| format!("Learn more: {}", slug)),
        spend: has_spend.then(|| band(rng, SPEND_BANDS)),
        currency: has_spend.then(|| page.currency.to_string()),
        funded_entity: Some(page.funder.to_string()),
        delivery_start: delivery_start.map(Timestamp::from_epoch_seconds),
        delivery_stop: delivery_stop.map(Timestamp::from_epoch_seconds),
        impressions: Some(band(rng, IMPRESSION_BANDS)),
        potential_reach: rng.gen_bool(0.8).then(|| band(rng, REACH_BANDS)),
        regional_distribution,
        demographic_distribution,
        first_seen: None,
        last_seen: None,
    }
}

/// A private job that matches every generated fixture record.
pub fn fixture_job_spec() -> JobSpec {
    JobSpec {
        search_term: FIXTURE_KEYWORD.into(),
        reached_countries: FIXTURE_COUNTRIES.iter().map(|c| c.to_string()).collect(),
        active_status: ActiveStatus::All,
        category: AdCategory::PoliticalAndIssue,
        platforms: vec![Platform::Facebook],
        visibility: Visibility::Private,
    }
}

/// An in-memory archive serving a fixed record list in order.
#[derive(Debug, Clone)]
pub struct SimulatedProvider {
    records: Vec<AdRecord>,
    page_size: usize,
}

/// Generates `n_ads` records deterministically from `seed`.
///
/// Records are generated one after another from a single stream, so the
/// fixture for `(seed, n)` is a prefix of the fixture for `(seed, n + k)`.
pub fn seed_simulated(seed: u64, n_ads: usize) -> SimulatedProvider {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n_ads).map(|i| generate_ad(&mut rng, i)).collect();
    SimulatedProvider::from_records(records)
}

fn spec_fingerprint(spec: &JobSpec) -> u64 {
    // FNV-1a over the canonical JSON form; stable across processes.
    let bytes = serde_json::to_vec(spec).unwrap_or_default();
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl SimulatedProvider {
    pub const DEFAULT_PAGE_SIZE: usize = 100;

    pub fn from_records(records: Vec<AdRecord>) -> Self {
        SimulatedProvider { records, page_size: Self::DEFAULT_PAGE_SIZE }
    }

    pub fn with_page_size(mut self, page_size: usize) -> Self {
        self.page_size = page_size.max(1);
        self
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn records(&self) -> &[AdRecord] {
        &self.records
    }

    /// Fixture records matching `spec`, in serving order.
    pub fn matching<'a>(&'a self, spec: &'a JobSpec) -> impl Iterator<Item = &'a AdRecord> + 'a {
        self.records.iter().filter(move |ad| spec_matches(spec, ad))
    }

    /// Loads a JSON Lines fixture, one record object per line. Blank lines
    /// are skipped.
    pub fn load_jsonl(path: &Path) -> std::io::Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut records = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ad: AdRecord = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", lineno + 1))
            })?;
            records.push(ad);
        }
        Ok(Self::from_records(records))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for ad in &self.records {
            serde_json::to_writer(&mut out, ad)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn cursor_for(&self, spec: &JobSpec, offset: usize) -> PageCursor {
        PageCursor::new(format!("sim-{offset}-{:016x}", spec_fingerprint(spec))).expect("non-empty token")
    }

    fn decode_cursor(&self, spec: &JobSpec, cursor: &PageCursor) -> Result<usize, ProviderError> {
        let invalid = || ProviderError::InvalidCursor(cursor.as_str().to_string());
        let rest = cursor.as_str().strip_prefix("sim-").ok_or_else(invalid)?;
        let (offset, fp) = rest.split_once('-').ok_or_else(invalid)?;
        if fp != format!("{:016x}", spec_fingerprint(spec)) {
            return Err(invalid());
        }
        offset.parse().map_err(|_| invalid())
    }
}

#[async_trait]
impl AdProvider for SimulatedProvider {
    async fn fetch_page(&self, spec: &JobSpec, cursor: Option<&PageCursor>) -> Result<Page, ProviderError> {
        let offset = match cursor {
            Some(c) => self.decode_cursor(spec, c)?,
            None => 0,
        };
        let mut matching = self.matching(spec).skip(offset);
        let ads: Vec<AdRecord> = matching.by_ref().take(self.page_size).cloned().collect();
        let next = matching
            .next()
            .is_some()
            .then(|| self.cursor_for(spec, offset + ads.len()));
        Ok(Page { ads, next, malformed: Vec::new() })
    }
}
