use std::fmt;

use serde::{Deserialize, Serialize};

/// Upper bound recorded for open-ended ranges such as `">1000000"`.
pub const SENTINEL_UPPER: u64 = 1_000_000_000_000;

/// A closed interval of archive-reported quantities (spend, impressions,
/// audience size). The archive only ever reports these as bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InsightRange {
    pub lower: u64,
    pub upper: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed range {0:?}")]
pub struct MalformedRange(pub String);

impl InsightRange {
    pub fn new(lower: u64, upper: u64) -> Result<Self, MalformedRange> {
        if lower > upper {
            return Err(MalformedRange(format!("{lower}-{upper}")));
        }
        Ok(InsightRange { lower, upper })
    }

    pub fn exact(value: u64) -> Self {
        InsightRange { lower: value, upper: value }
    }

    pub fn is_open_ended(&self) -> bool {
        self.upper == SENTINEL_UPPER
    }

    /// Single scalar used for sorting and summing ranges. Open-ended
    /// ranges contribute their lower bound.
    pub fn midpoint(&self) -> f64 {
        if self.is_open_ended() {
            self.lower as f64
        } else {
            (self.lower as f64 + self.upper as f64) / 2.0
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lower <= self.upper
    }
}

impl fmt::Display for InsightRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_open_ended() {
            write!(f, ">{}", self.lower)
        } else if self.lower == self.upper {
            write!(f, "{}", self.lower)
        } else {
            write!(f, "{}-{}", self.lower, self.upper)
        }
    }
}

impl std::str::FromStr for InsightRange {
    type Err = MalformedRange;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_insight_range(s)
    }
}

fn parse_count(text: &str) -> Option<u64> {
    let text = text.trim();
    if text.is_empty() || text.starts_with(',') || text.ends_with(',') || text.contains(",,") {
        return None;
    }
    let digits: String = text.chars().filter(|c| *c != ',').collect();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses an archive range string.
///
/// Accepted forms, with optional thousands separators:
///
/// | text     | result                      |
/// |----------|-----------------------------|
/// | `L-U`    | `(L, U)`                    |
/// | `N`      | `(N, N)`                    |
/// | `<U`     | `(0, U - 1)`                |
/// | `>L`     | `(L, SENTINEL_UPPER)`       |
pub fn parse_insight_range(text: &str) -> Result<InsightRange, MalformedRange> {
    let malformed = || MalformedRange(text.to_string());
    let t = text.trim();

    if let Some(rest) = t.strip_prefix('<') {
        let upper = parse_count(rest).ok_or_else(malformed)?;
        if upper == 0 {
            return Err(malformed());
        }
        return Ok(InsightRange { lower: 0, upper: upper - 1 });
    }
    if let Some(rest) = t.strip_prefix('>') {
        let lower = parse_count(rest).ok_or_else(malformed)?;
        if lower > SENTINEL_UPPER {
            return Err(malformed());
        }
        return Ok(InsightRange { lower, upper: SENTINEL_UPPER });
    }
    match t.split_once('-') {
        Some((l, u)) => {
            let lower = parse_count(l).ok_or_else(malformed)?;
            let upper = parse_count(u).ok_or_else(malformed)?;
            InsightRange::new(lower, upper).map_err(|_| malformed())
        }
        None => parse_count(t).map(InsightRange::exact).ok_or_else(malformed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(parse_insight_range("1000-4999").unwrap(), InsightRange { lower: 1000, upper: 4999 });
        assert_eq!(parse_insight_range("0").unwrap(), InsightRange { lower: 0, upper: 0 });
        assert_eq!(parse_insight_range("<100").unwrap(), InsightRange { lower: 0, upper: 99 });
        assert_eq!(
            parse_insight_range(">1000000").unwrap(),
            InsightRange { lower: 1_000_000, upper: SENTINEL_UPPER }
        );
        assert_eq!(parse_insight_range("1,000-4,999").unwrap(), InsightRange { lower: 1000, upper: 4999 });
    }

    #[test]
    fn rejects_bad_ranges() {
        for bad in ["5000-100", "", "abc", "-5", "1-2-3", "<0", "1,,000", ",100", "1.5", "<", ">", "10-", " - "] {
            assert!(parse_insight_range(bad).is_err(), "{bad:?} should be rejected");
        }
    }

    #[test]
    fn midpoints() {
        assert_eq!(InsightRange { lower: 1000, upper: 4999 }.midpoint(), 2999.5);
        assert_eq!(InsightRange { lower: 0, upper: 0 }.midpoint(), 0.0);
        assert_eq!(InsightRange { lower: 5000, upper: SENTINEL_UPPER }.midpoint(), 5000.0);
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(a in 0u64..=1_000_000_000, b in 0u64..=1_000_000_000) {
            let (l, u) = if a <= b { (a, b) } else { (b, a) };
            let parsed = parse_insight_range(&format!("{l}-{u}")).unwrap();
            prop_assert_eq!(parsed, InsightRange { lower: l, upper: u });
        }

        #[test]
        fn display_round_trips(l in 0u64..1_000_000_000, span in 0u64..1_000_000) {
            let r = InsightRange { lower: l, upper: l + span };
            prop_assert_eq!(parse_insight_range(&r.to_string()).unwrap(), r);
        }
    }
}
