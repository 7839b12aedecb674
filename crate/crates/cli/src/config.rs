//! `luxner.toml`: endpoint, grounding, scoring, cache and report defaults.
//! Every section and key is optional.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use luxner::llm_bench::{Alignment, GroundingPolicy};
use serde::Deserialize;

pub const DEFAULT_PATH: &str = "luxner.toml";
pub const DEFAULT_KEY_ENV: &str = "LUXNER_API_KEY";

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub endpoint: Endpoint,
    pub grounding: Grounding,
    pub scoring: Scoring,
    pub cache: Cache,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Endpoint {
    pub base_url: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grounding {
    pub case_insensitive: bool,
    pub alignment: Alignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scoring {
    /// Count each distinct (name, label) answer once per document.
    pub type_level: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Cache {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Report {
    pub per_label: bool,
}

impl Default for Endpoint {
    fn default() -> Self {
        Endpoint {
            base_url: None,
            model: None,
            api_key_env: DEFAULT_KEY_ENV.to_string(),
            timeout_secs: 120.0,
            max_in_flight: 4,
        }
    }
}

impl Default for Grounding {
    fn default() -> Self {
        let p = GroundingPolicy::default();
        Grounding {
            case_insensitive: p.case_insensitive,
            alignment: p.alignment,
        }
    }
}

impl Default for Report {
    fn default() -> Self {
        Report { per_label: true }
    }
}

impl Grounding {
    pub fn policy(self) -> GroundingPolicy {
        GroundingPolicy {
            case_insensitive: self.case_insensitive,
            alignment: self.alignment,
        }
    }
}

impl Endpoint {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint.max_in_flight < 1 {
            bail!("endpoint.max_in_flight must be at least 1");
        }
        if !(self.endpoint.timeout_secs > 0.0 && self.endpoint.timeout_secs.is_finite()) {
            bail!("endpoint.timeout_secs must be a positive number");
        }
        if self.endpoint.api_key_env.is_empty() {
            bail!("endpoint.api_key_env must not be empty");
        }
        Ok(())
    }

    /// An explicit path must exist; the default location is optional.
    pub fn load(explicit: Option<&Path>) -> Result<Config> {
        let (path, required) = match explicit {
            Some(p) => (p.to_path_buf(), true),
            None => (PathBuf::from(DEFAULT_PATH), false),
        };
        match std::fs::read_to_string(&path) {
            Ok(text) => Config::parse(&text).with_context(|| format!("config {}", path.display())),
            Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => Ok(Config::default()),
            Err(e) => Err(e).with_context(|| format!("config {}", path.display())),
        }
    }
}
