use std::path::PathBuf;

use axagent_core::runtime::config::{AgentConfig, ConfigError};
use clap::Args;

/// `--config` plus one override flag per config field. Flags win over the
/// file.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// TOML config file; absent means the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the configuration with every alignment stage off.
    #[arg(long)]
    pub vanilla: bool,

    /// Drop rarely useful commands and enable `note`.
    #[arg(long = "reduce_actions", alias = "reduce-actions", value_name = "BOOL")]
    pub reduce_actions: Option<bool>,
    /// Remove `scroll` from the action space.
    #[arg(long = "disable_scroll", alias = "disable-scroll", value_name = "BOOL")]
    pub disable_scroll: Option<bool>,
    /// Merge duplicate text and convert tables/lists to Markdown.
    #[arg(long = "condense_obs", alias = "condense-obs", value_name = "BOOL")]
    pub condense_obs: Option<bool>,
    /// Replay pivotal-node history instead of only the last action.
    #[arg(long = "history_replay", alias = "history-replay", value_name = "BOOL")]
    pub history_replay: Option<bool>,
    /// Show the plan tree and allow `branch`/`prune`.
    #[arg(long, value_name = "BOOL")]
    pub planning: Option<bool>,
    /// Ask for several candidate actions and let a judge pick one.
    #[arg(long, value_name = "BOOL")]
    pub judge: Option<bool>,
    /// Allow `go_home` (needs reduce_actions).
    #[arg(long, value_name = "BOOL")]
    pub multisite: Option<bool>,
    /// Step budget per episode.
    #[arg(long = "max_steps", alias = "max-steps")]
    pub max_steps: Option<usize>,
    /// Steps replayed when planning is off.
    #[arg(long = "history_window", alias = "history-window")]
    pub history_window: Option<usize>,

    /// Model name sent to the endpoint.
    #[arg(long)]
    pub model: Option<String>,
    /// Chat-completions URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Sampling temperature.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Retries for timeouts and rate limits.
    #[arg(long = "max_retries", alias = "max-retries")]
    pub max_retries: Option<u32>,
    /// Per-request timeout.
    #[arg(long = "timeout_secs", alias = "timeout-secs")]
    pub timeout_secs: Option<u64>,
    /// Concurrent requests allowed across a batch.
    #[arg(long = "max_in_flight", alias = "max-in-flight")]
    pub max_in_flight: Option<usize>,
}

impl ConfigArgs {
    /// Loads the file (if any), applies overrides and validates.
    pub fn resolve(&self) -> Result<AgentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => AgentConfig::load(path)?,
            None if self.vanilla => AgentConfig::vanilla(),
            None => AgentConfig::default(),
        };
        if self.vanilla && self.config.is_some() {
            let base = AgentConfig::vanilla();
            cfg.reduce_actions = base.reduce_actions;
            cfg.disable_scroll = base.disable_scroll;
            cfg.condense_obs = base.condense_obs;
            cfg.history_replay = base.history_replay;
            cfg.planning = base.planning;
        }
        macro_rules! apply {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        apply! {
            reduce_actions => cfg.reduce_actions,
            disable_scroll => cfg.disable_scroll,
            condense_obs => cfg.condense_obs,
            history_replay => cfg.history_replay,
            planning => cfg.planning,
            judge => cfg.judge,
            multisite => cfg.multisite,
            max_steps => cfg.max_steps,
            history_window => cfg.history_window,
            model => cfg.llm.model,
            endpoint => cfg.llm.endpoint,
            temperature => cfg.llm.temperature,
            max_retries => cfg.llm.max_retries,
            timeout_secs => cfg.llm.timeout_secs,
            max_in_flight => cfg.llm.max_in_flight,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
