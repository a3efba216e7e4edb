use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Agent feature flags and limits. Every alignment stage can be toggled
/// independently; the defaults are the fully aligned agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub reduce_actions: bool,
    pub disable_scroll: bool,
    pub condense_obs: bool,
    pub history_replay: bool,
    pub planning: bool,
    pub judge: bool,
    pub multisite: bool,
    pub max_steps: usize,
    pub history_window: usize,
    pub llm: LlmConfig,
    pub prompts: PromptOverrides,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            reduce_actions: true,
            disable_scroll: true,
            condense_obs: true,
            history_replay: true,
            planning: true,
            judge: false,
            multisite: false,
            max_steps: 20,
            history_window: 3,
            llm: LlmConfig::default(),
            prompts: PromptOverrides::default(),
        }
    }
}

impl AgentConfig {
    /// Every alignment stage switched off.
    pub fn vanilla() -> Self {
        AgentConfig {
            reduce_actions: false,
            disable_scroll: false,
            condense_obs: false,
            history_replay: false,
            planning: false,
            ..AgentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_steps == 0 {
            return Err(ConfigError::Invalid("max_steps must be at least 1".into()));
        }
        if self.planning && !self.history_replay {
            return Err(ConfigError::Invalid(
                "planning requires history_replay (history is scoped by plan)".into(),
            ));
        }
        if !self.history_replay || self.planning {
            return Ok(());
        }
        if self.history_window == 0 {
            return Err(ConfigError::Invalid(
                "history_window must be at least 1 when history replay is on without planning".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub model: String,
    pub endpoint: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub base_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_in_flight: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            model: "gpt-4-turbo".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            temperature: 0.0,
            max_retries: 3,
            timeout_secs: 120,
            base_backoff_ms: 500,
            max_backoff_ms: 30_000,
            max_in_flight: 4,
        }
    }
}

/// Optional files replacing the built-in prompt texts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptOverrides {
    pub template_with_planning: Option<PathBuf>,
    pub template_without_planning: Option<PathBuf>,
    pub output_specifications: Option<PathBuf>,
    pub judge_template: Option<PathBuf>,
}
