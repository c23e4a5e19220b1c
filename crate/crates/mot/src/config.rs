//! Provider and run configuration.
//!
//! A run is configured from an optional JSON file whose fields mirror
//! [`RunConfig`], overlaid by command-line flags. Both sources produce a
//! [`PartialRunConfig`]; flags win field by field.

use std::path::{Path, PathBuf};

use mot_core::benchmark::DatasetId;
use mot_core::metrics::Pricing;
use mot_core::strategy::StrategyId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub base_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub model: String,
    pub request_timeout_ms: u64,
    pub max_retries: u32,
    pub pricing: Pricing,
    pub max_output_tokens: Option<u32>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            model: "gpt-4o-mini".into(),
            request_timeout_ms: 120_000,
            max_retries: 3,
            // public list price of gpt-4o-mini, USD per token
            pricing: Pricing { usd_per_input_token: 0.15e-6, usd_per_output_token: 0.6e-6 },
            max_output_tokens: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Replay,
    Record,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Live => "live",
            Mode::Replay => "replay",
            Mode::Record => "record",
        }
    }
}

/// Where candidates are executed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutorConfig {
    /// Canned reports keyed by request id, read from a JSON file.
    Recorded(PathBuf),
    /// A pool of worker subprocesses speaking the NDJSON protocol.
    Runner { command: Vec<String>, workers: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("cannot read config file {path}: {message}")]
    File { path: PathBuf, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

/// Provider settings as they appear in a config file or on the command
/// line: every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialProvider {
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub model: Option<String>,
    pub request_timeout_ms: Option<u64>,
    pub max_retries: Option<u32>,
    pub pricing: Option<Pricing>,
    pub max_output_tokens: Option<u32>,
}

impl PartialProvider {
    pub fn or(self, other: PartialProvider) -> PartialProvider {
        PartialProvider {
            base_url: self.base_url.or(other.base_url),
            api_key_env: self.api_key_env.or(other.api_key_env),
            model: self.model.or(other.model),
            request_timeout_ms: self.request_timeout_ms.or(other.request_timeout_ms),
            max_retries: self.max_retries.or(other.max_retries),
            pricing: self.pricing.or(other.pricing),
            max_output_tokens: self.max_output_tokens.or(other.max_output_tokens),
        }
    }

    pub fn finish(self) -> Result<ProviderConfig, ConfigError> {
        let d = ProviderConfig::default();
        let pricing = self.pricing.unwrap_or(d.pricing);
        if Pricing::new(pricing.usd_per_input_token, pricing.usd_per_output_token).is_none() {
            return Err(invalid("pricing", "prices must be finite and non-negative"));
        }
        let request_timeout_ms = self.request_timeout_ms.unwrap_or(d.request_timeout_ms);
        if request_timeout_ms == 0 {
            return Err(invalid("request_timeout_ms", "must be positive"));
        }
        if self.max_output_tokens == Some(0) {
            return Err(invalid("max_output_tokens", "must be positive"));
        }
        Ok(ProviderConfig {
            base_url: self.base_url.unwrap_or(d.base_url),
            api_key_env: self.api_key_env.unwrap_or(d.api_key_env),
            model: self.model.unwrap_or(d.model),
            request_timeout_ms,
            max_retries: self.max_retries.unwrap_or(d.max_retries),
            pricing,
            max_output_tokens: self.max_output_tokens,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetId,
    pub data: PathBuf,
    pub strategies: Vec<StrategyId>,
    pub provider: ProviderConfig,
    pub mode: Mode,
    pub fixtures: Option<PathBuf>,
    /// Record mode: replace existing fixtures instead of serving them.
    pub overwrite_fixtures: bool,
    pub parallelism: usize,
    pub timeout_ms: u64,
    pub out: PathBuf,
    pub only: Option<Vec<String>>,
    pub resume: bool,
    pub per_node_phase2: bool,
    pub repeats: u32,
    pub executor: Option<ExecutorConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialRunConfig {
    pub dataset: Option<DatasetId>,
    pub data: Option<PathBuf>,
    pub strategies: Option<Vec<StrategyId>>,
    pub provider: PartialProvider,
    pub mode: Option<Mode>,
    pub fixtures: Option<PathBuf>,
    pub overwrite_fixtures: Option<bool>,
    pub parallelism: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub out: Option<PathBuf>,
    pub only: Option<Vec<String>>,
    pub resume: Option<bool>,
    pub per_node_phase2: Option<bool>,
    pub repeats: Option<u32>,
    pub executor: Option<ExecutorConfig>,
}

impl PartialRunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::File { path: path.to_path_buf(), message: e.to_string() })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::File { path: path.to_path_buf(), message: e.to_string() })
    }

    /// Field-wise overlay: values set in `self` win over `other`.
    pub fn or(self, other: PartialRunConfig) -> PartialRunConfig {
        PartialRunConfig {
            dataset: self.dataset.or(other.dataset),
            data: self.data.or(other.data),
            strategies: self.strategies.or(other.strategies),
            provider: self.provider.or(other.provider),
            mode: self.mode.or(other.mode),
            fixtures: self.fixtures.or(other.fixtures),
            overwrite_fixtures: self.overwrite_fixtures.or(other.overwrite_fixtures),
            parallelism: self.parallelism.or(other.parallelism),
            timeout_ms: self.timeout_ms.or(other.timeout_ms),
            out: self.out.or(other.out),
            only: self.only.or(other.only),
            resume: self.resume.or(other.resume),
            per_node_phase2: self.per_node_phase2.or(other.per_node_phase2),
            repeats: self.repeats.or(other.repeats),
            executor: self.executor.or(other.executor),
        }
    }

    pub fn finish(self) -> Result<RunConfig, ConfigError> {
        let mode = self.mode.unwrap_or(Mode::Live);
        if mode == Mode::Replay && self.fixtures.is_none() {
            return Err(invalid("fixtures", "replay mode needs a fixture directory"));
        }
        if mode == Mode::Replay && !self.fixtures.as_ref().is_some_and(|p| p.is_dir()) {
            return Err(invalid("fixtures", "fixture directory does not exist"));
        }
        if mode == Mode::Record && self.fixtures.is_none() {
            return Err(invalid("fixtures", "record mode needs a fixture directory"));
        }
        let parallelism = self.parallelism.unwrap_or(4);
        if parallelism == 0 {
            return Err(invalid("parallelism", "must be at least 1"));
        }
        let timeout_ms = self.timeout_ms.unwrap_or(mot_core::exec::DEFAULT_TIMEOUT_MS);
        if timeout_ms == 0 {
            return Err(invalid("timeout_ms", "must be positive"));
        }
        let repeats = self.repeats.unwrap_or(1);
        if repeats == 0 {
            return Err(invalid("repeats", "must be at least 1"));
        }
        let strategies = self.strategies.unwrap_or_else(|| vec![StrategyId::Mot]);
        if strategies.is_empty() {
            return Err(invalid("strategies", "no strategy selected"));
        }
        if let Some(ExecutorConfig::Runner { command, workers }) = &self.executor {
            if command.is_empty() {
                return Err(invalid("executor", "runner command is empty"));
            }
            if *workers == 0 {
                return Err(invalid("executor", "need at least one worker"));
            }
        }
        Ok(RunConfig {
            dataset: self.dataset.ok_or(ConfigError::Missing("dataset"))?,
            data: self.data.ok_or(ConfigError::Missing("data"))?,
            strategies,
            provider: self.provider.finish()?,
            mode,
            fixtures: self.fixtures,
            overwrite_fixtures: self.overwrite_fixtures.unwrap_or(false),
            parallelism,
            timeout_ms,
            out: self.out.ok_or(ConfigError::Missing("out"))?,
            only: self.only,
            resume: self.resume.unwrap_or(false),
            per_node_phase2: self.per_node_phase2.unwrap_or(false),
            repeats,
            executor: self.executor,
        })
    }
}
