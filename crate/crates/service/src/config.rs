use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use vaxledger_core::clock::SystemClock;
use vaxledger_core::crypto::SecretCodeMode;
use vaxledger_core::engine::{Engine, EngineConfig};
use vaxledger_core::entropy::Entropy;
use vaxledger_core::registry::load_fixtures;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("fixture error: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixturePaths {
    pub directory: PathBuf,
    pub regions: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen_address: SocketAddr,
    #[serde(default = "default_difficulty")]
    pub difficulty: u32,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_max_doses")]
    pub max_doses: u32,
    #[serde(default = "default_min_age")]
    pub min_age: u32,
    #[serde(default)]
    pub secret_code_mode: SecretCodeMode,
    #[serde(default = "default_ttl", rename = "pageTTL")]
    pub page_ttl: u64,
    #[serde(default = "default_ttl", rename = "otpTTL")]
    pub otp_ttl: u64,
    pub fixture_paths: FixturePaths,
    /// Seeds all randomness and enables `/test/outbox`.
    #[serde(default)]
    pub deterministic_seed: Option<u64>,
    /// Agencies created at boot.
    #[serde(default)]
    pub agencies: Vec<String>,
}

fn default_listen() -> SocketAddr {
    "127.0.0.1:8080".parse().unwrap()
}
fn default_difficulty() -> u32 {
    EngineConfig::default().difficulty
}
fn default_batch() -> usize {
    EngineConfig::default().batch_size
}
fn default_max_doses() -> u32 {
    EngineConfig::default().max_doses
}
fn default_min_age() -> u32 {
    EngineConfig::default().min_age
}
fn default_ttl() -> u64 {
    300
}

impl ServiceConfig {
    pub fn new(fixture_paths: FixturePaths) -> Self {
        let e = EngineConfig::default();
        ServiceConfig {
            listen_address: default_listen(),
            difficulty: e.difficulty,
            batch_size: e.batch_size,
            max_doses: e.max_doses,
            min_age: e.min_age,
            secret_code_mode: e.secret_code_mode,
            page_ttl: e.page_ttl_secs,
            otp_ttl: e.otp_ttl_secs,
            fixture_paths,
            deterministic_seed: None,
            agencies: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ServiceConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative fixture paths resolve against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.fixture_paths.directory, &mut cfg.fixture_paths.regions] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            difficulty: self.difficulty,
            batch_size: self.batch_size,
            max_doses: self.max_doses,
            min_age: self.min_age,
            secret_code_mode: self.secret_code_mode,
            page_ttl_secs: self.page_ttl,
            otp_ttl_secs: self.otp_ttl,
            ..EngineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.engine_config().validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Load fixtures and build the engine, creating the configured agencies.
    pub fn build_engine(&self) -> Result<Engine, ConfigError> {
        self.validate()?;
        let (directory, regions) = load_fixtures(&self.fixture_paths.directory, &self.fixture_paths.regions)
            .map_err(|e| ConfigError::Fixture(e.to_string()))?;
        let entropy = self.deterministic_seed.map_or_else(Entropy::secure, Entropy::seeded);
        let mut engine = Engine::new(self.engine_config(), directory, regions, entropy, Arc::new(SystemClock))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for a in &self.agencies {
            engine.create_agency(a).map_err(|e| ConfigError::Invalid(format!("agency {a}: {e}")))?;
        }
        Ok(engine)
    }
}
