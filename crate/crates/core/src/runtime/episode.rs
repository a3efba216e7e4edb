//! The agent loop: condense, prompt, complete, parse, act, record.

use thiserror::Error;
use tracing::{debug, info, warn};

use crate::actions::{render_action, Action, ActionSpace};
use crate::ax_tree::parse_ax_tree;
use crate::memory::{StepRecord, TrajectoryHistory};
use crate::obs_align::{condense_tree, estimate_tokens};
use crate::planning::{PlanError, PlanTree};
use crate::runtime::config::{AgentConfig, ConfigError};
use crate::runtime::env::{EnvObservation, Environment};
use crate::runtime::judge::judge_select;
use crate::runtime::llm::{LlmClient, LlmError};
use crate::runtime::prompt::{assemble_prompt, corrective_notice, PromptContext, PromptSet};
use crate::runtime::response::{parse_response, ParsedResponse};
use crate::runtime::trajectory::{Failure, FailureSource, Outcome, StepLog, TerminationCause, Trajectory};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Result of one [`Episode::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Continue,
    Done(TerminationCause),
}

/// A usable model reply: parsed sections plus the candidates that passed
/// plan-reference checks.
struct Decision {
    parsed: ParsedResponse,
    candidates: Vec<Action>,
}

/// One running episode. Drive it with [`Episode::step`] or use
/// [`run_episode`].
pub struct Episode<'a, E: Environment + ?Sized> {
    config: &'a AgentConfig,
    prompts: &'a PromptSet,
    env: &'a mut E,
    llm: &'a dyn LlmClient,
    space: ActionSpace,
    task_id: String,
    objective: String,
    plan: PlanTree,
    history: TrajectoryHistory,
    notes: Vec<String>,
    step_logs: Vec<StepLog>,
    env_trace: Vec<String>,
    llm_calls: usize,
    current: Option<EnvObservation>,
    outcome: Option<Outcome>,
}

impl<'a, E: Environment + ?Sized> Episode<'a, E> {
    pub fn new(
        config: &'a AgentConfig,
        prompts: &'a PromptSet,
        env: &'a mut E,
        llm: &'a dyn LlmClient,
        task_id: impl Into<String>,
        objective: impl Into<String>,
    ) -> Result<Self, EpisodeError> {
        config.validate()?;
        let objective = objective.into();
        let plan = PlanTree::new(&objective)?;
        Ok(Episode {
            config,
            prompts,
            env,
            llm,
            space: ActionSpace::from_config(config),
            task_id: task_id.into(),
            history: TrajectoryHistory::new(objective.clone()),
            objective,
            plan,
            notes: Vec::new(),
            step_logs: Vec::new(),
            env_trace: Vec::new(),
            llm_calls: 0,
            current: None,
            outcome: None,
        })
    }

    pub fn plan(&self) -> &PlanTree {
        &self.plan
    }

    pub fn history(&self) -> &TrajectoryHistory {
        &self.history
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    fn finish(&mut self, cause: TerminationCause, answer: Option<String>, failure: Option<Failure>) -> StepOutcome {
        info!(task = %self.task_id, %cause, steps = self.history.len(), "episode finished");
        self.outcome = Some(Outcome { cause, answer, failure });
        StepOutcome::Done(cause)
    }

    fn fail(&mut self, source: FailureSource, message: String) -> StepOutcome {
        warn!(task = %self.task_id, ?source, %message, "unrecoverable error");
        self.finish(
            TerminationCause::UnrecoverableError,
            None,
            Some(Failure { source, message }),
        )
    }

    /// Parses a reply and checks plan references. `Err` carries the problem
    /// text for the corrective notice.
    fn decide(&self, reply: &str) -> Result<Decision, String> {
        let parsed = parse_response(reply, &self.space).map_err(|e| e.to_string())?;
        let wanted = if self.config.judge { parsed.actions.len() } else { 1 };
        let mut candidates = Vec::new();
        let mut plan_error = None;
        for action in parsed.actions.iter().take(wanted) {
            let check = match action {
                Action::Branch { parent_plan_id, .. } => self.plan.check_branch(*parent_plan_id),
                Action::Prune { resume_plan_id, .. } => self.plan.check_prune(*resume_plan_id),
                _ => Ok(()),
            };
            match check {
                Ok(()) => candidates.push(action.clone()),
                Err(e) => plan_error = plan_error.or(Some(e.to_string())),
            }
        }
        if candidates.is_empty() {
            return Err(plan_error.unwrap_or_else(|| "no usable action".into()));
        }
        Ok(Decision { parsed, candidates })
    }

    /// Runs one step. Calling it after the episode ended is a no-op.
    pub fn step(&mut self) -> StepOutcome {
        if let Some(outcome) = &self.outcome {
            return StepOutcome::Done(outcome.cause);
        }
        if self.current.is_none() {
            match self.env.reset() {
                Ok(obs) => {
                    self.env_trace.push(obs.state_id.clone());
                    self.current = Some(obs);
                }
                Err(e) => return self.fail(FailureSource::Environment, e.to_string()),
            }
            if self.env.is_terminal() {
                return self.finish(TerminationCause::EnvironmentTerminal, None, None);
            }
        }
        let step_index = self.history.next_index();
        if step_index >= self.config.max_steps {
            return self.finish(TerminationCause::MaxSteps, None, None);
        }

        let current = self.current.as_ref().expect("reset above");
        let raw = match parse_ax_tree(&current.ax_dump) {
            Ok(t) => t,
            Err(e) => return self.fail(FailureSource::Environment, e.to_string()),
        };
        let (page, condensed) = condense_tree(&raw, self.config);
        let plan_id = self.plan.active_id();
        let prompt = {
            let ctx = PromptContext {
                objective: &self.objective,
                step_index,
                plan: &self.plan,
                history: &self.history,
                notes: &self.notes,
                observation: &condensed.text,
            };
            assemble_prompt(self.config, self.prompts, &ctx)
        };

        let mut calls = 0usize;
        let mut complete = |llm: &dyn LlmClient, p: &str| -> Result<String, LlmError> {
            calls += 1;
            llm.complete(p)
        };
        let reply = match complete(self.llm, &prompt) {
            Ok(r) => r,
            Err(e) => {
                self.llm_calls += calls;
                return self.fail(FailureSource::Llm, e.to_string());
            }
        };
        let mut corrective = false;
        let decision = match self.decide(&reply) {
            Ok(d) => Some(d),
            Err(problem) => {
                debug!(step_index, %problem, "re-prompting");
                corrective = true;
                match complete(self.llm, &format!("{prompt}{}", corrective_notice(&problem))) {
                    Ok(again) => self.decide(&again).ok(),
                    Err(e) => {
                        self.llm_calls += calls;
                        return self.fail(FailureSource::Llm, e.to_string());
                    }
                }
            }
        };

        let mut judge_fallback = false;
        let mut candidate_count = 0;
        let (reason, pivotal_ids, action) = match decision {
            None => (String::new(), Vec::new(), None),
            Some(Decision { parsed, candidates }) => {
                candidate_count = candidates.len();
                let chosen = if self.config.judge && candidates.len() > 1 {
                    let ctx = PromptContext {
                        objective: &self.objective,
                        step_index,
                        plan: &self.plan,
                        history: &self.history,
                        notes: &self.notes,
                        observation: &condensed.text,
                    };
                    match judge_select(self.config, self.prompts, &ctx, &candidates, self.llm) {
                        Ok(out) => {
                            calls += out.llm_calls;
                            judge_fallback = out.fell_back;
                            out.action
                        }
                        Err(e) => {
                            self.llm_calls += calls + 1;
                            return self.fail(FailureSource::Llm, e.to_string());
                        }
                    }
                } else {
                    candidates[0].clone()
                };
                (parsed.reason, parsed.pivotal_ids, Some(chosen))
            }
        };
        self.llm_calls += calls;

        let mut done = None;
        let mut env_error = None;
        match &action {
            None => warn!(step_index, "no usable action; step makes no progress"),
            Some(Action::Branch { parent_plan_id, intent }) => {
                self.plan.branch(*parent_plan_id, intent.clone()).expect("checked in decide");
            }
            Some(Action::Prune { resume_plan_id, reason }) => {
                self.plan.prune(*resume_plan_id, reason.clone()).expect("checked in decide");
            }
            Some(Action::Note { content }) => self.notes.push(content.clone()),
            Some(Action::Stop { answer }) => done = Some((TerminationCause::Stopped, Some(answer.clone()))),
            Some(nav) => match self.env.execute(nav) {
                Ok(obs) => {
                    self.env_trace.push(obs.state_id.clone());
                    self.current = Some(obs);
                    if self.env.is_terminal() {
                        done = Some((TerminationCause::EnvironmentTerminal, None));
                    }
                }
                Err(e) => env_error = Some(e.to_string()),
            },
        }

        let record = StepRecord::seal(step_index, plan_id, raw, &page, reason, action, pivotal_ids);
        self.step_logs.push(StepLog {
            step_index,
            plan_id,
            action: record.action().map(render_action),
            reason: record.reason().to_string(),
            pivotal_ids: record.pivotal_ids().to_vec(),
            obs_tokens: condensed.token_estimate,
            prompt_tokens: estimate_tokens(&prompt),
            env_state: self.env.state_id().map(str::to_string),
            llm_calls: calls,
            corrective,
            candidates: candidate_count,
            judge_fallback,
        });
        if let Some(log) = self.step_logs.last() {
            info!(
                task = %self.task_id,
                step_index,
                plan_id,
                action = log.action.as_deref().unwrap_or("None"),
                obs_tokens = log.obs_tokens,
                llm_calls = calls,
                env_state = log.env_state.as_deref().unwrap_or(""),
                "step"
            );
        }
        self.history.push(record);

        if let Some(message) = env_error {
            return self.fail(FailureSource::Environment, message);
        }
        if let Some((cause, answer)) = done {
            return self.finish(cause, answer, None);
        }
        if self.history.len() >= self.config.max_steps {
            return self.finish(TerminationCause::MaxSteps, None, None);
        }
        StepOutcome::Continue
    }

    /// Runs to completion and returns the trajectory.
    pub fn run(mut self) -> Trajectory {
        while let StepOutcome::Continue = self.step() {}
        self.into_trajectory()
    }

    /// The trajectory so far. An unfinished episode is reported as having
    /// hit its step budget.
    pub fn into_trajectory(self) -> Trajectory {
        let outcome = self.outcome.unwrap_or(Outcome {
            cause: TerminationCause::MaxSteps,
            answer: None,
            failure: None,
        });
        Trajectory {
            task_id: self.task_id,
            objective: self.objective,
            config: self.config.clone(),
            history: self.history,
            step_logs: self.step_logs,
            outcome,
            plan: self.plan,
            notes: self.notes,
            env_trace: self.env_trace,
            llm_calls: self.llm_calls,
            reward: self.env.reward(),
        }
    }
}

/// Runs an episode from a fresh environment until Stop, a terminal page,
/// an unrecoverable error or the step budget.
pub fn run_episode<E: Environment + ?Sized>(
    config: &AgentConfig,
    prompts: &PromptSet,
    env: &mut E,
    llm: &dyn LlmClient,
    task_id: &str,
    objective: &str,
) -> Result<Trajectory, EpisodeError> {
    Ok(Episode::new(config, prompts, env, llm, task_id, objective)?.run())
}
