//! Service configuration: a TOML file with `ADTRACKER_*` environment overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::ProviderConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Live,
    Simulated,
}

/// Archive connection plus the simulated-fixture knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSection {
    pub mode: ProviderMode,
    #[serde(flatten)]
    pub live: ProviderConfig,
    pub simulated_seed: u64,
    pub simulated_ads: usize,
    /// JSON Lines fixture; replaces the seeded generator when set.
    pub fixture_path: Option<PathBuf>,
}

impl Default for ProviderSection {
    fn default() -> Self {
        ProviderSection {
            mode: ProviderMode::Simulated,
            live: ProviderConfig::default(),
            simulated_seed: 7,
            simulated_ads: 200,
            fixture_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen_addr: String,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub gazetteer_path: Option<PathBuf>,
    pub poll_interval_s: i64,
    pub worker_count: usize,
    pub max_pages_per_cycle: u32,
    pub cluster_threshold_km: f64,
    pub image_ttl_s: i64,
    pub provider: ProviderSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            listen_addr: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            static_dir: None,
            gazetteer_path: None,
            poll_interval_s: 300,
            worker_count: 4,
            max_pages_per_cycle: 40,
            cluster_threshold_km: crate::analysis::DEFAULT_THRESHOLD_KM,
            image_ttl_s: crate::analysis::DEFAULT_IMAGE_TTL_SECS,
            provider: ProviderSection::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("environment variable {var}: cannot parse {value:?}")]
    Env { var: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn parse_env<T: FromStr>(var: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Env { var: var.to_string(), value: value.to_string() })
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` if given, then applies overrides from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?;
                Self::from_toml_str(&text)?
            }
            None => Config::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        macro_rules! env {
            ($var:literal, $field:expr) => {
                if let Some(v) = get($var) {
                    $field = parse_env($var, &v)?;
                }
            };
        }
        env!("ADTRACKER_LISTEN_ADDR", self.listen_addr);
        env!("ADTRACKER_DATA_DIR", self.data_dir);
        env!("ADTRACKER_POLL_INTERVAL_S", self.poll_interval_s);
        env!("ADTRACKER_WORKER_COUNT", self.worker_count);
        env!("ADTRACKER_MAX_PAGES_PER_CYCLE", self.max_pages_per_cycle);
        env!("ADTRACKER_CLUSTER_THRESHOLD_KM", self.cluster_threshold_km);
        env!("ADTRACKER_PAGE_SIZE", self.provider.live.page_size);
        env!("ADTRACKER_BASE_URL", self.provider.live.base_url);
        env!("ADTRACKER_ACCESS_TOKEN", self.provider.live.access_token);
        env!("ADTRACKER_MAX_REQUESTS_PER_MINUTE", self.provider.live.max_requests_per_minute);
        if let Some(v) = get("ADTRACKER_PROVIDER_MODE") {
            self.provider.mode = match v.trim() {
                "live" => ProviderMode::Live,
                "simulated" => ProviderMode::Simulated,
                _ => return Err(ConfigError::Env { var: "ADTRACKER_PROVIDER_MODE".into(), value: v }),
            };
        }
        if let Some(v) = get("ADTRACKER_STATIC_DIR") {
            self.static_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = get("ADTRACKER_GAZETTEER_PATH") {
            self.gazetteer_path = Some(PathBuf::from(v));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.listen_addr.parse::<std::net::SocketAddr>().is_err() {
            return bad(format!("listen_addr {:?} is not host:port", self.listen_addr));
        }
        if self.poll_interval_s <= 0 {
            return bad("poll_interval_s must be positive".into());
        }
        if self.worker_count == 0 {
            return bad("worker_count must be positive".into());
        }
        if self.max_pages_per_cycle == 0 {
            return bad("max_pages_per_cycle must be positive".into());
        }
        if !(self.cluster_threshold_km >= 0.0) {
            return bad("cluster_threshold_km must be non-negative".into());
        }
        if self.image_ttl_s < 0 {
            return bad("image_ttl_s must be non-negative".into());
        }
        self.provider.live.validate().map_err(ConfigError::Invalid)?;
        if self.provider.mode == ProviderMode::Live && self.provider.live.access_token.is_empty() {
            return bad("live provider needs access_token".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults_validate() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.listen_addr, "127.0.0.1:8080");
        assert_eq!(Config::from_toml_str("").unwrap(), c);
    }

    #[test]
    fn file_then_env() {
        let text = r#"
            data_dir = "/var/lib/adtracker"
            worker_count = 2
            [provider]
            mode = "live"
            access_token = "from-file"
            page_size = 50
        "#;
        let mut c = Config::from_toml_str(text).unwrap();
        assert_eq!(c.provider.mode, ProviderMode::Live);
        assert_eq!(c.provider.live.page_size, 50);
        let env: HashMap<&str, &str> =
            [("ADTRACKER_WORKER_COUNT", "8"), ("ADTRACKER_ACCESS_TOKEN", "from-env"), ("ADTRACKER_PROVIDER_MODE", "simulated")]
                .into();
        c.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(c.worker_count, 8);
        assert_eq!(c.provider.live.access_token, "from-env");
        assert_eq!(c.provider.mode, ProviderMode::Simulated);
        assert_eq!(c.data_dir, PathBuf::from("/var/lib/adtracker"));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(Config::from_toml_str("wokers = 3"), Err(ConfigError::Parse(_))));
        let mut c = Config::default();
        assert!(matches!(c.apply_env(|_| Some("many".into())), Err(ConfigError::Env { .. })));
        let c = Config { worker_count: 0, ..Config::default() };
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.provider.live.page_size = 251;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.provider.mode = ProviderMode::Live;
        assert!(c.validate().is_err());
    }
}
