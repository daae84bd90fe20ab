//! Record schema for archived ads and job options, plus the parsing and
//! validation rules every other module relies on.

mod ad;
pub mod country;
mod job_spec;
mod range;
mod time;

pub use ad::{AdRecord, AdViolation, DemographicShare, Gender, RegionalShare, REGIONAL_SUM_TOLERANCE};
pub use job_spec::{
    validate_job_spec, ActiveStatus, AdCategory, JobSpec, JobSpecDraft, Platform, SpecViolation, Visibility,
};
pub use range::{parse_insight_range, InsightRange, MalformedRange, SENTINEL_UPPER};
pub use time::{Timestamp, TimestampError};

#[cfg(test)]
pub(crate) use ad::tests::minimal as minimal_ad;
