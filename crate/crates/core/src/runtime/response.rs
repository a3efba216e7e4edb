//! Splitting model completions into their labelled sections.

use thiserror::Error;

use crate::actions::{parse_action, Action, ActionError, ActionKind, ActionSpace};
use crate::memory::parse_highlights;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("UnparsableResponse: no parsable action command found")]
    Unparsable,
    #[error("DisallowedAction: `{line}` uses `{kind}`, which is not in the current action space")]
    Disallowed { line: String, kind: ActionKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    InteractionSummary,
    ObservationDescription,
    Reason,
    Action,
    Highlight,
}

/// Header spellings, longest first so prefixes do not shadow them.
const HEADERS: &[(&str, Section)] = &[
    ("interaction history summary", Section::InteractionSummary),
    ("observation description", Section::ObservationDescription),
    ("observation highlight", Section::Highlight),
    ("reason for action", Section::Reason),
    ("reason", Section::Reason),
    ("action", Section::Action),
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedResponse {
    pub interaction_summary: String,
    pub observation_description: String,
    pub reason: String,
    pub action_lines: Vec<String>,
    pub highlight_line: String,
    pub actions: Vec<Action>,
    pub pivotal_ids: Vec<u64>,
}

impl ParsedResponse {
    pub fn first_action(&self) -> &Action {
        &self.actions[0]
    }
}

fn strip_markup(s: &str) -> &str {
    s.trim().trim_start_matches(['#', '*', '_', ' ']).trim_start()
}

/// Recognizes a header line; returns its section and any inline content.
pub fn match_header(line: &str) -> Option<(Section, String)> {
    let body = strip_markup(line);
    let lower = body.to_ascii_lowercase();
    for &(name, section) in HEADERS {
        if !lower.starts_with(name) {
            continue;
        }
        let rest = body[name.len()..].trim_start_matches(['*', '_']);
        if let Some(inline) = rest.strip_prefix(':') {
            let inline = inline.trim_start_matches(['*', '_']).trim();
            return Some((section, inline.to_string()));
        }
        if rest.trim().trim_matches(['*', '_']).is_empty() {
            return Some((section, String::new()));
        }
    }
    None
}

/// Splits text into `(section, body)` pairs in order of appearance. Text
/// before the first header is not attributed to any section.
pub fn split_sections(text: &str) -> Vec<(Section, String)> {
    let mut out: Vec<(Section, Vec<String>)> = Vec::new();
    for line in text.lines() {
        if let Some((section, inline)) = match_header(line) {
            let mut body = Vec::new();
            if !inline.is_empty() {
                body.push(inline);
            }
            out.push((section, body));
        } else if let Some((_, body)) = out.last_mut() {
            body.push(line.to_string());
        }
    }
    out.into_iter()
        .map(|(s, body)| (s, body.join("\n").trim().to_string()))
        .collect()
}

/// Strips list bullets, numbering and code quoting around an action line.
pub fn clean_action_line(line: &str) -> &str {
    let mut s = line.trim();
    for prefix in ["- ", "* ", "+ "] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.trim_start();
        }
    }
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = s[digits..].strip_prefix(". ").or_else(|| s[digits..].strip_prefix(") ")) {
            s = rest.trim_start();
        }
    }
    s.trim_matches('`').trim()
}

pub fn parse_response(text: &str, space: &ActionSpace) -> Result<ParsedResponse, ResponseError> {
    let mut parsed = ParsedResponse::default();
    for (section, body) in split_sections(text) {
        let slot = match section {
            Section::InteractionSummary => &mut parsed.interaction_summary,
            Section::ObservationDescription => &mut parsed.observation_description,
            Section::Reason => &mut parsed.reason,
            Section::Highlight => &mut parsed.highlight_line,
            Section::Action => {
                parsed
                    .action_lines
                    .extend(body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
                continue;
            }
        };
        if slot.is_empty() {
            *slot = body;
        }
    }
    parsed.pivotal_ids = parse_highlights(&parsed.highlight_line);

    let mut disallowed = None;
    let mut collect = |lines: &mut dyn Iterator<Item = &str>| -> Vec<Action> {
        let mut found = Vec::new();
        for raw in lines {
            let line = clean_action_line(raw);
            match parse_action(line, space) {
                Ok(a) => found.push(a),
                Err(ActionError::DisallowedAction(kind)) if disallowed.is_none() => {
                    disallowed = Some((line.to_string(), kind));
                }
                Err(_) => {}
            }
        }
        found
    };

    let mut actions = collect(&mut parsed.action_lines.iter().map(String::as_str));
    if actions.is_empty() {
        // Fall back to any line that is itself a full action command.
        let lines: Vec<String> = text
            .lines()
            .map(|l| match match_header(l) {
                Some((_, inline)) => inline,
                None => l.to_string(),
            })
            .collect();
        actions = collect(&mut lines.iter().map(String::as_str));
    }
    if actions.is_empty() {
        return Err(match disallowed {
            Some((line, kind)) => ResponseError::Disallowed { line, kind },
            None => ResponseError::Unparsable,
        });
    }
    parsed.actions = actions;
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aligned() -> ActionSpace {
        ActionSpace::from_flags(true, true, true, false)
    }

    const FULL: &str = "Interaction history summary: Nothing yet.
Observation description: A Google home page with a search box [12].
Reason: Search for the dean's email.
Action: type [12] [Dean of the School of Engineering Stanford University email] [1]
Observation Highlight: 12, 272";

    #[test]
    fn all_sections_populated() {
        let r = parse_response(FULL, &aligned()).unwrap();
        assert_eq!(r.interaction_summary, "Nothing yet.");
        assert_eq!(r.observation_description, "A Google home page with a search box [12].");
        assert_eq!(r.reason, "Search for the dean's email.");
        assert_eq!(r.pivotal_ids, vec![12, 272]);
        assert_eq!(
            r.first_action(),
            &Action::Type {
                id: 12,
                content: "Dean of the School of Engineering Stanford University email".into(),
                press_enter: true
            }
        );
    }

    #[test]
    fn upper_case_and_bold_headers() {
        let text = "REASON FOR ACTION:\nbecause\n**ACTION:**\n`click [7]`\n## Observation Highlight\n7";
        let r = parse_response(text, &aligned()).unwrap();
        assert_eq!(r.reason, "because");
        assert_eq!(r.actions, vec![Action::Click { id: 7 }]);
        assert_eq!(r.pivotal_ids, vec![7]);
    }

    #[test]
    fn multiple_candidates_one_per_line() {
        let text = "Reason: options\nAction:\n1. click [3]\n2. stop [x]\n- scroll [down]";
        let r = parse_response(text, &aligned()).unwrap();
        assert_eq!(r.actions, vec![Action::Click { id: 3 }, Action::Stop { answer: "x".into() }]);
    }

    #[test]
    fn chat_only_is_unparsable() {
        assert_eq!(parse_response("I am not sure what to do.", &aligned()), Err(ResponseError::Unparsable));
    }

    #[test]
    fn disallowed_only_is_reported() {
        let err = parse_response("Action: scroll [down]", &aligned()).unwrap_err();
        assert!(matches!(err, ResponseError::Disallowed { kind: ActionKind::Scroll, .. }));
    }

    #[test]
    fn action_outside_sections_is_found() {
        let r = parse_response("Let me think.\nclick [9]\nthat's it", &aligned()).unwrap();
        assert_eq!(r.actions, vec![Action::Click { id: 9 }]);
    }

    #[test]
    fn reason_text_starting_with_action_word_is_not_a_header() {
        assert_eq!(match_header("Actionable items follow"), None);
        assert_eq!(match_header("Reasonable"), None);
        assert_eq!(match_header("Action"), Some((Section::Action, String::new())));
    }
}
