//! Prompt texts and assembly.

use std::path::Path;

use crate::actions::{render_action, render_action_specs, Action};
use crate::memory::{render_history, TrajectoryHistory};
use crate::planning::PlanTree;
use crate::runtime::config::{AgentConfig, ConfigError};

pub const TEMPLATE_WITH_PLANNING: &str = "You are an AI assistant performing tasks on a web browser. You will be provided with task objective, current step, web page observations, previous plans, and interaction history. You need to issue an action for this step.

Generate the response in the following format:
{output_specifications}

You are ONLY allowed to use the following action commands. Strictly adheres to the given format. Only issue one single action.
If you think you should refine the plan, use the following actions:
{planning_action_specifications}
Otherwise, use the following actions:
{navigation_action_specifications}";

pub const TEMPLATE_WITHOUT_PLANNING: &str = "You are an AI assistant performing tasks on a web browser. You will be provided with task objective, current step, web page observations, and other relevant information. You need to issue an action for this step.

Generate the response in the following format:
{output_specifications}

You are ONLY allowed to use the following action commands. Strictly adheres to the given format. Only issue one single action.
{navigation_action_specifications}";

pub const OUTPUT_SPECIFICATIONS: &str = "Interaction history summary: Emphasize all important details in the INTERACTION HISTORY section.
Observation description: Describe information in the CURRENT OBSERVATION section. Emphasize elements and features that are relevant or potentially helpful for fulfilling the objective in detail.
Reason: Provide your rationale for proposing the subsequent action commands here.
Action: Select your action here.
Observation Highlight: List the numerical ids of elements on the current webpage based on which you would issue your action. Also include elements on the current webpage you would attend to if you fail in the future and have to restore to this step. Don't include elements from the previous pages. Select elements at a higher hierarchical level if most their children nodes are considered crucial. Sort by relevance and potential values from high to low, and separate the ids with commas. E.g., `1321, 52, 756, 838`.";

const SINGLE_ACTION_LINE: &str = "Action: Select your action here.";
const MULTI_ACTION_LINE: &str = "Action: List all possible suitable actions here, one action command per line.";
const SINGLE_ACTION_RULE: &str = "Only issue one single action.";
const MULTI_ACTION_RULE: &str = "Issue every suitable action, one per line.";

pub const JUDGE_TEMPLATE: &str = "You are a seasoned web navigator. You now assess the value and risk of serveral web navigation actions based on the objective, the previous interaction history and the web's current state. Then, you select the action with the most value and least risk with which you would earn the maximum objective fulfillment reward in the future.

Adhere to the following output format:
{output_specifications}

Note that `branch` and `prune` are planning actions that will modify the PREVIOUS PLAN section and won't interact with the web environment.";

pub const JUDGE_OUTPUT_SPECIFICATIONS: &str = "Plan progress assessment: Review critically why the plans have not been fulfilled or the objective achieved. Justify your assessment with detailed evidence drawn from the objective, observations, and actions taken. Itemize the assessment using this format: `- plan [{plan_id}]\\n\\t[{step_ids_taken_for_this_milestone}] [{concrete_proof_from_observation}] [{why_milestone_a_not_successful}]\\n\\t[{step_ids_taken_for_this_milestone}] [{concrete_proof_from_observation}] [{why_milestone_b_not_successful}]\\n\\t...`.
Action assessment: Assess the value and risk of each action. Consider both the best-case and worst-case outcomes resulting from its implementation. Itemize the assessment using this format: `- action [action_id]: [action value, including but not limited to what outcomes you can expect by executing the action, or whether the note is of the most correct and comprehensive content] [action risk, including but not limited to whether the note/stop content is correct, and whether you can gather more information by continuing playing rather than ending the trial] [{best_case}] [{worst_case}]`.
Action selection: List the numerical id of your selected action here. You can only choose one action. Action ids start at 0. E.g., `1`.";

/// Prompt texts in use, after applying any overrides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub template_with_planning: String,
    pub template_without_planning: String,
    pub output_specifications: String,
    pub judge_template: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            template_with_planning: TEMPLATE_WITH_PLANNING.into(),
            template_without_planning: TEMPLATE_WITHOUT_PLANNING.into(),
            output_specifications: OUTPUT_SPECIFICATIONS.into(),
            judge_template: JUDGE_TEMPLATE.into(),
        }
    }
}

impl PromptSet {
    pub fn load(config: &AgentConfig) -> Result<Self, ConfigError> {
        fn read(path: &Path) -> Result<String, ConfigError> {
            std::fs::read_to_string(path)
                .map(|s| s.trim_end().to_string())
                .map_err(|source| ConfigError::Io {
                    path: path.to_path_buf(),
                    source,
                })
        }
        let mut set = PromptSet::default();
        let o = &config.prompts;
        if let Some(p) = &o.template_with_planning {
            set.template_with_planning = read(p)?;
        }
        if let Some(p) = &o.template_without_planning {
            set.template_without_planning = read(p)?;
        }
        if let Some(p) = &o.output_specifications {
            set.output_specifications = read(p)?;
        }
        if let Some(p) = &o.judge_template {
            set.judge_template = read(p)?;
        }
        Ok(set)
    }
}

/// The general instruction block: template with output and action
/// specifications substituted. This is exactly what every prompt starts with.
pub fn instruction_text(config: &AgentConfig, prompts: &PromptSet) -> String {
    let specs = render_action_specs(config);
    let template = if config.planning {
        &prompts.template_with_planning
    } else {
        &prompts.template_without_planning
    };
    let (template, output_spec) = if config.judge {
        (
            template.replace(SINGLE_ACTION_RULE, MULTI_ACTION_RULE),
            prompts.output_specifications.replace(SINGLE_ACTION_LINE, MULTI_ACTION_LINE),
        )
    } else {
        (template.clone(), prompts.output_specifications.clone())
    };
    template
        .replace("{output_specifications}", &output_spec)
        .replace("{planning_action_specifications}", &specs.planning)
        .replace("{navigation_action_specifications}", &specs.navigation)
}

/// Per-step inputs to [`assemble_prompt`].
#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub objective: &'a str,
    pub step_index: usize,
    pub plan: &'a PlanTree,
    pub history: &'a TrajectoryHistory,
    pub notes: &'a [String],
    pub observation: &'a str,
}

/// Online task section shared by the actor and the judge prompts.
pub fn task_section(config: &AgentConfig, ctx: &PromptContext<'_>) -> String {
    let mut out = String::new();
    out.push_str("OBJECTIVE:\n");
    out.push_str(ctx.objective);
    out.push_str(&format!("\n\nCURRENT STEP:\n{}\n\n", ctx.step_index));
    if config.planning {
        out.push_str("PREVIOUS PLANS:\n");
        out.push_str(&ctx.plan.render());
        out.push_str("\n\n");
    }
    if !ctx.notes.is_empty() {
        out.push_str("NOTES:\n");
        for note in ctx.notes {
            out.push_str("- ");
            out.push_str(note);
            out.push('\n');
        }
        out.push('\n');
    }
    let history = render_history(ctx.history, ctx.plan, config);
    if config.history_replay {
        out.push_str("INTERACTION HISTORY:\n");
    } else {
        out.push_str("PREVIOUS ACTION:\n");
    }
    out.push_str(if history.is_empty() { "None" } else { &history });
    out.push_str("\n\nCURRENT OBSERVATION:\n");
    out.push_str(ctx.observation);
    out
}

pub fn assemble_prompt(config: &AgentConfig, prompts: &PromptSet, ctx: &PromptContext<'_>) -> String {
    format!("{}\n\n{}", instruction_text(config, prompts), task_section(config, ctx))
}

/// Notice appended when a response has to be re-requested.
pub fn corrective_notice(problem: &str) -> String {
    format!(
        "\n\nNOTICE: Your previous response could not be used: {problem}\nRespond again in the required format with an action from the allowed action commands."
    )
}

pub fn judge_prompt(
    config: &AgentConfig,
    prompts: &PromptSet,
    ctx: &PromptContext<'_>,
    candidates: &[Action],
) -> String {
    let head = prompts
        .judge_template
        .replace("{output_specifications}", JUDGE_OUTPUT_SPECIFICATIONS);
    let mut out = format!("{head}\n\n{}\n\nACTION CANDIDATES:\n", task_section(config, ctx));
    let listed: Vec<String> = candidates
        .iter()
        .enumerate()
        .map(|(i, a)| format!("- action [{i}]: {}", render_action(a)))
        .collect();
    out.push_str(&listed.join("\n"));
    out
}
