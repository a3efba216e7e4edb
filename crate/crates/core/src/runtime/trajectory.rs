//! Episode results and their line-delimited JSON log.
//!
//! A log holds one `step` record per step followed by one `summary` record.
//! No wall-clock data is written, so identical runs give identical bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{StepRecord, TrajectoryHistory};
use crate::planning::PlanTree;
use crate::runtime::config::AgentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationCause {
    Stopped,
    MaxSteps,
    EnvironmentTerminal,
    UnrecoverableError,
}

impl TerminationCause {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationCause::Stopped => "stopped",
            TerminationCause::MaxSteps => "max_steps",
            TerminationCause::EnvironmentTerminal => "environment_terminal",
            TerminationCause::UnrecoverableError => "unrecoverable_error",
        }
    }
}

impl std::fmt::Display for TerminationCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureSource {
    Llm,
    Environment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub source: FailureSource,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub cause: TerminationCause,
    pub answer: Option<String>,
    pub failure: Option<Failure>,
}

/// Per-step log record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepLog {
    pub step_index: usize,
    pub plan_id: u64,
    /// Canonical action text; `None` for a no-progress step.
    pub action: Option<String>,
    pub reason: String,
    pub pivotal_ids: Vec<u64>,
    pub obs_tokens: usize,
    pub prompt_tokens: usize,
    /// Environment state after the step.
    pub env_state: Option<String>,
    pub llm_calls: usize,
    pub corrective: bool,
    pub candidates: usize,
    pub judge_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task_id: String,
    pub objective: String,
    pub cause: TerminationCause,
    pub answer: Option<String>,
    pub failure: Option<Failure>,
    pub steps: usize,
    pub llm_calls: usize,
    pub reward: Option<f64>,
    pub notes: Vec<String>,
    pub env_trace: Vec<String>,
    pub plan: PlanTree,
    pub config: AgentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Step(StepLog),
    Summary(Box<Summary>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub task_id: String,
    pub objective: String,
    pub config: AgentConfig,
    pub history: TrajectoryHistory,
    pub step_logs: Vec<StepLog>,
    pub outcome: Outcome,
    pub plan: PlanTree,
    pub notes: Vec<String>,
    /// Reset state followed by the state after each executed action.
    pub env_trace: Vec<String>,
    pub llm_calls: usize,
    pub reward: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.step_logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_logs.is_empty()
    }

    pub fn steps(&self) -> &[StepRecord] {
        self.history.steps()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            task_id: self.task_id.clone(),
            objective: self.objective.clone(),
            cause: self.outcome.cause,
            answer: self.outcome.answer.clone(),
            failure: self.outcome.failure.clone(),
            steps: self.step_logs.len(),
            llm_calls: self.llm_calls,
            reward: self.reward,
            notes: self.notes.clone(),
            env_trace: self.env_trace.clone(),
            plan: self.plan.clone(),
            config: self.config.clone(),
        }
    }

    pub fn to_log(&self) -> TrajectoryLog {
        TrajectoryLog {
            steps: self.step_logs.clone(),
            summary: self.summary(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        self.to_log().to_jsonl()
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("malformed log at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("log has no summary record")]
    MissingSummary,
    #[error("log has records after the summary (line {0})")]
    TrailingRecords(usize),
    #[error("step record at line {line} has index {found}, expected {expected}")]
    StepOrder {
        line: usize,
        found: usize,
        expected: usize,
    },
}

/// A parsed trajectory log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub steps: Vec<StepLog>,
    pub summary: Summary,
}

impl TrajectoryLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(&LogRecord::Step(step.clone())).expect("step serializes"));
            out.push('\n');
        }
        let summary = LogRecord::Summary(Box::new(self.summary.clone()));
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut steps = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            if summary.is_some() {
                return Err(LogError::TrailingRecords(line_no));
            }
            let record: LogRecord = serde_json::from_str(line).map_err(|e| LogError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            match record {
                LogRecord::Step(step) => {
                    if step.step_index != steps.len() {
                        return Err(LogError::StepOrder {
                            line: line_no,
                            found: step.step_index,
                            expected: steps.len(),
                        });
                    }
                    steps.push(step);
                }
                LogRecord::Summary(s) => summary = Some(*s),
            }
        }
        let summary = summary.ok_or(LogError::MissingSummary)?;
        Ok(TrajectoryLog { steps, summary })
    }

    pub fn total_llm_calls(&self) -> usize {
        self.steps.iter().map(|s| s.llm_calls).sum()
    }

    pub fn mean_obs_tokens(&self) -> f64 {
        mean(self.steps.iter().map(|s| s.obs_tokens))
    }

    pub fn mean_prompt_tokens(&self) -> f64 {
        mean(self.steps.iter().map(|s| s.prompt_tokens))
    }
}

fn mean(values: impl ExactSizeIterator<Item = usize>) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sum::<usize>() as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogDiff {
    Identical,
    /// First step whose record differs, or where one log ends early.
    Step(usize),
    /// Steps agree; the summaries differ.
    Summary,
}

pub fn diff_logs(a: &TrajectoryLog, b: &TrajectoryLog) -> LogDiff {
    let common = a.steps.len().min(b.steps.len());
    if let Some(i) = (0..common).find(|&i| a.steps[i] != b.steps[i]) {
        return LogDiff::Step(i);
    }
    if a.steps.len() != b.steps.len() {
        return LogDiff::Step(common);
    }
    if a.summary != b.summary {
        return LogDiff::Summary;
    }
    LogDiff::Identical
}
