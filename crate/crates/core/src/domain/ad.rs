use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::country::is_iso_alpha2;
use super::range::InsightRange;
use super::time::Timestamp;

/// Rounding slack allowed when a provider's regional percentages are summed.
pub const REGIONAL_SUM_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalShare {
    pub country_code: String,
    pub region_name: String,
    pub percentage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub fn from_label(label: &str) -> Self {
        match label.trim().to_ascii_lowercase().as_str() {
            "female" => Gender::Female,
            "male" => Gender::Male,
            _ => Gender::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicShare {
    pub age_range: String,
    pub gender: Gender,
    pub percentage: f64,
}

/// One archived advertisement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdRecord {
    pub ad_id: String,
    pub page_id: String,
    pub page_name: String,
    pub creation_time: Timestamp,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub link_caption: Option<String>,
    #[serde(default)]
    pub link_description: Option<String>,
    #[serde(default)]
    pub link_title: Option<String>,
    #[serde(default)]
    pub snapshot_url: Option<String>,
    #[serde(default)]
    pub spend: Option<InsightRange>,
    #[serde(default)]
    pub currency: Option<String>,
    #[serde(default)]
    pub funded_entity: Option<String>,
    #[serde(default)]
    pub delivery_start: Option<Timestamp>,
    #[serde(default)]
    pub delivery_stop: Option<Timestamp>,
    #[serde(default)]
    pub impressions: Option<InsightRange>,
    #[serde(default)]
    pub potential_reach: Option<InsightRange>,
    #[serde(default)]
    pub regional_distribution: Vec<RegionalShare>,
    #[serde(default)]
    pub demographic_distribution: Vec<DemographicShare>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_seen: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_seen: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdViolation {
    #[error("ad_id is empty")]
    EmptyAdId,
    #[error("page_id is empty")]
    EmptyPageId,
    #[error("delivery_start after delivery_stop")]
    DeliveryWindowInverted,
    #[error("{0} range has lower > upper")]
    InvertedRange(&'static str),
    #[error("spend given without currency")]
    SpendWithoutCurrency,
    #[error("currency {0:?} is not a 3-letter code")]
    BadCurrency(String),
    #[error("snapshot_url {0:?} is not an absolute URL")]
    BadSnapshotUrl(String),
    #[error("first_seen after last_seen")]
    SeenInverted,
    #[error("country code {0:?} in regional distribution")]
    BadRegionCountry(String),
    #[error("percentage {0} outside [0, 100]")]
    PercentageOutOfRange(f64),
    #[error("region {0}/{1} listed twice")]
    DuplicateRegion(String, String),
    #[error("regional percentages sum to {0}")]
    RegionalSumTooLarge(f64),
    #[error("demographic bucket {0}/{1:?} listed twice")]
    DuplicateDemographic(String, Gender),
}

fn valid_percentage(p: f64) -> bool {
    p.is_finite() && (0.0..=100.0).contains(&p)
}

impl AdRecord {
    /// Checks every record-level invariant and returns all failures.
    pub fn violations(&self) -> Vec<AdViolation> {
        let mut out = Vec::new();
        if self.ad_id.trim().is_empty() {
            out.push(AdViolation::EmptyAdId);
        }
        if self.page_id.trim().is_empty() {
            out.push(AdViolation::EmptyPageId);
        }
        if let (Some(start), Some(stop)) = (self.delivery_start, self.delivery_stop) {
            if start > stop {
                out.push(AdViolation::DeliveryWindowInverted);
            }
        }
        for (name, range) in [
            ("spend", &self.spend),
            ("impressions", &self.impressions),
            ("potential_reach", &self.potential_reach),
        ] {
            if matches!(range, Some(r) if !r.is_valid()) {
                out.push(AdViolation::InvertedRange(name));
            }
        }
        match (&self.spend, &self.currency) {
            (Some(_), None) => out.push(AdViolation::SpendWithoutCurrency),
            (_, Some(c)) if c.len() != 3 || !c.bytes().all(|b| b.is_ascii_uppercase()) => {
                out.push(AdViolation::BadCurrency(c.clone()))
            }
            _ => {}
        }
        if let Some(url) = &self.snapshot_url {
            if url::Url::parse(url).map(|u| u.cannot_be_a_base()).unwrap_or(true) {
                out.push(AdViolation::BadSnapshotUrl(url.clone()));
            }
        }
        if let (Some(first), Some(last)) = (self.first_seen, self.last_seen) {
            if first > last {
                out.push(AdViolation::SeenInverted);
            }
        }

        let mut regions = HashSet::new();
        let mut regional_sum = 0.0;
        for share in &self.regional_distribution {
            if !is_iso_alpha2(&share.country_code) {
                out.push(AdViolation::BadRegionCountry(share.country_code.clone()));
            }
            if !valid_percentage(share.percentage) {
                out.push(AdViolation::PercentageOutOfRange(share.percentage));
            } else {
                regional_sum += share.percentage;
            }
            if !regions.insert((share.country_code.as_str(), share.region_name.as_str())) {
                out.push(AdViolation::DuplicateRegion(
                    share.country_code.clone(),
                    share.region_name.clone(),
                ));
            }
        }
        if regional_sum > 100.0 + REGIONAL_SUM_TOLERANCE {
            out.push(AdViolation::RegionalSumTooLarge(regional_sum));
        }

        let mut buckets = HashSet::new();
        for share in &self.demographic_distribution {
            if !valid_percentage(share.percentage) {
                out.push(AdViolation::PercentageOutOfRange(share.percentage));
            }
            if !buckets.insert((share.age_range.as_str(), share.gender)) {
                out.push(AdViolation::DuplicateDemographic(share.age_range.clone(), share.gender));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// The time an ad is placed at for windowed analysis: when delivery
    /// started, or when it was created if it never ran.
    pub fn analysis_time(&self) -> Timestamp {
        self.delivery_start.unwrap_or(self.creation_time)
    }

    /// The archive considers an ad active while it has no stop time.
    pub fn is_active(&self) -> bool {
        self.delivery_stop.is_none()
    }

    /// Text fields searched by keyword matching.
    pub fn searchable_text(&self) -> impl Iterator<Item = &str> {
        [
            Some(self.body.as_str()),
            self.link_title.as_deref(),
            self.link_caption.as_deref(),
            self.link_description.as_deref(),
            Some(self.page_name.as_str()),
        ]
        .into_iter()
        .flatten()
    }

    /// Equality ignoring the store-managed seen timestamps.
    pub fn same_content(&self, other: &AdRecord) -> bool {
        let strip = |r: &AdRecord| AdRecord { first_seen: None, last_seen: None, ..r.clone() };
        strip(self) == strip(other)
    }

    /// True when fields other than the archive-revised ones differ.
    pub fn identity_differs(&self, other: &AdRecord) -> bool {
        self.page_id != other.page_id
            || self.page_name != other.page_name
            || self.creation_time != other.creation_time
            || self.body != other.body
            || self.link_caption != other.link_caption
            || self.link_description != other.link_description
            || self.link_title != other.link_title
            || self.snapshot_url != other.snapshot_url
            || self.currency != other.currency
            || self.funded_entity != other.funded_entity
            || self.delivery_start != other.delivery_start
    }
}
