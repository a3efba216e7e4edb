//! Agent runtime: configuration, prompts, model clients, environments and
//! the episode loop.

pub mod config;
pub mod env;
pub mod episode;
pub mod judge;
pub mod llm;
pub mod prompt;
pub mod response;
pub mod trajectory;

pub use config::{AgentConfig, ConfigError, LlmConfig, PromptOverrides};
pub use env::{EnvError, EnvObservation, Environment, ReplayEnvironment, SnapshotError, SnapshotFile};
pub use episode::{run_episode, Episode, EpisodeError, StepOutcome};
pub use judge::{judge_select, JudgeOutcome};
pub use llm::{
    prompt_digest, CompletionScript, HttpLlmClient, LlmClient, LlmError, ScriptEntry, ScriptedClient, SharedClient,
};
pub use prompt::{assemble_prompt, PromptContext, PromptSet};
pub use response::{parse_response, ParsedResponse, ResponseError};
pub use trajectory::{
    diff_logs, Failure, FailureSource, LogDiff, LogError, Outcome, StepLog, Summary, TerminationCause, Trajectory,
    TrajectoryLog,
};
