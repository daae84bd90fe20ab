use std::fmt;

use serde::{Deserialize, Serialize};

use super::country::resolve_country;

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $token)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }

            pub fn from_token(token: &str) -> Option<Self> {
                match token {
                    $($token => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

token_enum! {
    /// Delivery status filter. `Active` means eligible for delivery.
    ActiveStatus { Active => "ACTIVE", Inactive => "INACTIVE", All => "ALL" }
}

token_enum! {
    AdCategory { PoliticalAndIssue => "POLITICAL_AND_ISSUE" }
}

token_enum! {
    Platform {
        Facebook => "FACEBOOK",
        Instagram => "INSTAGRAM",
        Messenger => "MESSENGER",
        Whatsapp => "WHATSAPP",
        Oculus => "OCULUS",
    }
}

token_enum! {
    Visibility { Private => "PRIVATE", Public => "PUBLIC" }
}

/// The options a user picks when registering a job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobSpec {
    pub search_term: String,
    pub reached_countries: Vec<String>,
    pub active_status: ActiveStatus,
    pub category: AdCategory,
    pub platforms: Vec<Platform>,
    pub visibility: Visibility,
}

/// Untyped job options as submitted by a client. Validation turns a
/// draft into a [`JobSpec`] or reports every problem at once.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JobSpecDraft {
    #[serde(default)]
    pub search_term: String,
    #[serde(default)]
    pub reached_countries: Vec<String>,
    #[serde(default)]
    pub active_status: String,
    #[serde(default)]
    pub category: String,
    #[serde(default)]
    pub platforms: Vec<String>,
    #[serde(default)]
    pub visibility: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "violation", content = "value")]
pub enum SpecViolation {
    #[error("search term is empty")]
    EmptySearchTerm,
    #[error("no reached countries given")]
    EmptyCountryList,
    #[error("unknown country code {0:?}")]
    UnknownCountryCode(String),
    #[error("country {0} listed twice")]
    DuplicateCountry(String),
    #[error("no platforms given")]
    EmptyPlatformList,
    #[error("platform {0} listed twice")]
    DuplicatePlatform(String),
    #[error("unknown {field} token {token:?}")]
    UnknownEnumToken { field: String, token: String },
}

impl SpecViolation {
    /// The draft field the violation belongs to.
    pub fn field(&self) -> &str {
        match self {
            SpecViolation::EmptySearchTerm => "search_term",
            SpecViolation::EmptyCountryList
            | SpecViolation::UnknownCountryCode(_)
            | SpecViolation::DuplicateCountry(_) => "reached_countries",
            SpecViolation::EmptyPlatformList | SpecViolation::DuplicatePlatform(_) => "platforms",
            SpecViolation::UnknownEnumToken { field, .. } => field,
        }
    }
}

fn unknown(field: &str, token: &str) -> SpecViolation {
    SpecViolation::UnknownEnumToken { field: field.to_string(), token: token.to_string() }
}

/// Validates a draft, returning the typed spec or all violations found.
///
/// Country labels go through the alias table, so `"Canada"` and `"ca"`
/// both become `"CA"`.
pub fn validate_job_spec(draft: &JobSpecDraft) -> Result<JobSpec, Vec<SpecViolation>> {
    let mut violations = Vec::new();

    let search_term = draft.search_term.trim().to_string();
    if search_term.is_empty() {
        violations.push(SpecViolation::EmptySearchTerm);
    }

    let mut countries: Vec<String> = Vec::new();
    if draft.reached_countries.is_empty() {
        violations.push(SpecViolation::EmptyCountryList);
    }
    for label in &draft.reached_countries {
        match resolve_country(label) {
            Some(code) if countries.contains(&code) => {
                violations.push(SpecViolation::DuplicateCountry(code))
            }
            Some(code) => countries.push(code),
            None => violations.push(SpecViolation::UnknownCountryCode(label.clone())),
        }
    }

    let active_status = ActiveStatus::from_token(&draft.active_status);
    if active_status.is_none() {
        violations.push(unknown("active_status", &draft.active_status));
    }
    let category = AdCategory::from_token(&draft.category);
    if category.is_none() {
        violations.push(unknown("category", &draft.category));
    }
    let visibility = Visibility::from_token(&draft.visibility);
    if visibility.is_none() {
        violations.push(unknown("visibility", &draft.visibility));
    }

    let mut platforms = Vec::new();
    if draft.platforms.is_empty() {
        violations.push(SpecViolation::EmptyPlatformList);
    }
    for token in &draft.platforms {
        match Platform::from_token(token) {
            Some(p) if platforms.contains(&p) => {
                violations.push(SpecViolation::DuplicatePlatform(p.token().to_string()))
            }
            Some(p) => platforms.push(p),
            None => violations.push(unknown("platforms", token)),
        }
    }

    match (active_status, category, visibility) {
        (Some(active_status), Some(category), Some(visibility)) if violations.is_empty() => Ok(JobSpec {
            search_term,
            reached_countries: countries,
            active_status,
            category,
            platforms,
            visibility,
        }),
        _ => Err(violations),
    }
}

impl JobSpec {
    /// Re-checks a typed spec (e.g. one loaded from storage).
    pub fn validate(&self) -> Result<(), Vec<SpecViolation>> {
        validate_job_spec(&JobSpecDraft::from(self)).map(|_| ())
    }

    /// Case-insensitive keyword test used by list filtering and the
    /// simulated archive.
    pub fn term_matches(&self, text: &str) -> bool {
        text.to_lowercase().contains(&self.search_term.to_lowercase())
    }
}

impl From<&JobSpec> for JobSpecDraft {
    fn from(spec: &JobSpec) -> Self {
        JobSpecDraft {
            search_term: spec.search_term.clone(),
            reached_countries: spec.reached_countries.clone(),
            active_status: spec.active_status.token().to_string(),
            category: spec.category.token().to_string(),
            platforms: spec.platforms.iter().map(|p| p.token().to_string()).collect(),
            visibility: spec.visibility.token().to_string(),
        }
    }
}
