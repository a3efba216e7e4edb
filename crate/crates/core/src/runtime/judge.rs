//! Selecting one action from several candidates with a second model call.

use tracing::warn;

use crate::actions::Action;
use crate::runtime::config::AgentConfig;
use crate::runtime::llm::{LlmClient, LlmError};
use crate::runtime::prompt::{judge_prompt, PromptContext, PromptSet};

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeOutcome {
    pub index: usize,
    pub action: Action,
    /// The judge's answer was missing or out of range; candidate 0 was used.
    pub fell_back: bool,
    pub llm_calls: usize,
}

/// The selected index from a judge completion, if one can be read. Looks
/// for an `Action selection` header and takes the first integer after it.
pub fn parse_selection(text: &str) -> Option<usize> {
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let body = line.trim().trim_start_matches(['#', '*', '_', '-', ' ']);
        let lower = body.to_ascii_lowercase();
        let Some(rest) = lower.strip_prefix("action selection") else { continue };
        let rest = rest.trim_start_matches(['*', '_', ':', ' ']);
        if let Some(n) = first_uint(rest) {
            return Some(n);
        }
        return lines.find(|l| !l.trim().is_empty()).and_then(first_uint);
    }
    None
}

fn first_uint(s: &str) -> Option<usize> {
    let start = s.find(|c: char| c.is_ascii_digit())?;
    let digits: String = s[start..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

pub fn judge_select(
    config: &AgentConfig,
    prompts: &PromptSet,
    ctx: &PromptContext<'_>,
    candidates: &[Action],
    llm: &dyn LlmClient,
) -> Result<JudgeOutcome, LlmError> {
    assert!(!candidates.is_empty(), "judge needs at least one candidate");
    if candidates.len() == 1 {
        return Ok(JudgeOutcome {
            index: 0,
            action: candidates[0].clone(),
            fell_back: false,
            llm_calls: 0,
        });
    }
    let prompt = judge_prompt(config, prompts, ctx, candidates);
    let reply = llm.complete(&prompt)?;
    let (index, fell_back) = match parse_selection(&reply) {
        Some(i) if i < candidates.len() => (i, false),
        other => {
            warn!(selection = ?other, candidates = candidates.len(), "judge selection unusable; using candidate 0");
            (0, true)
        }
    };
    Ok(JudgeOutcome {
        index,
        action: candidates[index].clone(),
        fell_back,
        llm_calls: 1,
    })
}
