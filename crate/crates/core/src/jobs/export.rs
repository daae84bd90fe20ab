//! CSV export of a job's ads (RFC 4180, UTF-8, CRLF line ends).

use crate::domain::{AdRecord, InsightRange, Timestamp};

pub const CSV_HEADER: [&str; 21] = [
    "ad_id",
    "page_id",
    "page_name",
    "creation_time",
    "body",
    "link_caption",
    "link_description",
    "link_title",
    "snapshot_url",
    "spend_lower",
    "spend_upper",
    "currency",
    "funded_entity",
    "delivery_start",
    "delivery_stop",
    "impressions_lower",
    "impressions_upper",
    "potential_reach_lower",
    "potential_reach_upper",
    "regional_distribution",
    "demographic_distribution",
];

const ROWS_PER_CHUNK: usize = 256;

fn opt(s: &Option<String>) -> String {
    s.clone().unwrap_or_default()
}

fn time(t: Option<Timestamp>) -> String {
    t.map(Timestamp::to_rfc3339).unwrap_or_default()
}

fn bounds(r: Option<InsightRange>) -> (String, String) {
    match r {
        Some(r) => (r.lower.to_string(), r.upper.to_string()),
        None => (String::new(), String::new()),
    }
}

/// One CSV row in [`CSV_HEADER`] order.
pub fn csv_row(ad: &AdRecord) -> [String; 21] {
    let (spend_lower, spend_upper) = bounds(ad.spend);
    let (imp_lower, imp_upper) = bounds(ad.impressions);
    let (reach_lower, reach_upper) = bounds(ad.potential_reach);
    [
        ad.ad_id.clone(),
        ad.page_id.clone(),
        ad.page_name.clone(),
        ad.creation_time.to_rfc3339(),
        ad.body.clone(),
        opt(&ad.link_caption),
        opt(&ad.link_description),
        opt(&ad.link_title),
        opt(&ad.snapshot_url),
        spend_lower,
        spend_upper,
        opt(&ad.currency),
        opt(&ad.funded_entity),
        time(ad.delivery_start),
        time(ad.delivery_stop),
        imp_lower,
        imp_upper,
        reach_lower,
        reach_upper,
        serde_json::to_string(&ad.regional_distribution).unwrap_or_else(|_| "[]".into()),
        serde_json::to_string(&ad.demographic_distribution).unwrap_or_else(|_| "[]".into()),
    ]
}

fn encode<I, R>(rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

/// A ready-to-stream export. Iterating yields the header chunk followed by
/// chunks of encoded rows.
#[derive(Debug, Clone)]
pub struct CsvExport {
    ads: Vec<AdRecord>,
}

impl CsvExport {
    /// `ads` must already be in export order.
    pub fn new(ads: Vec<AdRecord>) -> Self {
        CsvExport { ads }
    }

    pub fn row_count(&self) -> usize {
        self.ads.len()
    }

    pub fn ads(&self) -> &[AdRecord] {
        &self.ads
    }

    pub fn chunks(self) -> impl Iterator<Item = Vec<u8>> + Send + 'static {
        let header = encode(std::iter::once(CSV_HEADER));
        let mut ads = self.ads.into_iter().peekable();
        std::iter::once(header).chain(std::iter::from_fn(move || {
            ads.peek()?;
            let batch: Vec<[String; 21]> = ads.by_ref().take(ROWS_PER_CHUNK).map(|ad| csv_row(&ad)).collect();
            Some(encode(batch))
        }))
    }

    pub fn to_bytes(self) -> Vec<u8> {
        self.chunks().flatten().collect()
    }
}
