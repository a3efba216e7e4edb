//! Agent action commands: the full command set, the per-configuration
//! allowed subset, the bracketed text syntax, and the specification text
//! shown to the model.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::runtime::config::AgentConfig;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Click { id: u64 },
    Type { id: u64, content: String, press_enter: bool },
    GoBack,
    GoHome,
    Note { content: String },
    Stop { answer: String },
    Branch { parent_plan_id: u64, intent: String },
    Prune { resume_plan_id: u64, reason: String },
    Noop,
    Hover { id: u64 },
    Press { key_combo: String },
    Scroll { direction: ScrollDirection },
    TabFocus { index: u64 },
    NewTab,
    TabClose,
    GoForward,
    Goto { url: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScrollDirection {
    Up,
    Down,
}

impl ScrollDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            ScrollDirection::Up => "up",
            ScrollDirection::Down => "down",
        }
    }
}

/// Variant tag of an [`Action`], in specification order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Click,
    Type,
    Hover,
    Press,
    Scroll,
    Noop,
    TabFocus,
    NewTab,
    TabClose,
    GoBack,
    GoForward,
    Goto,
    Note,
    Stop,
    GoHome,
    Branch,
    Prune,
}

impl ActionKind {
    pub const ALL: [ActionKind; 17] = [
        ActionKind::Click,
        ActionKind::Type,
        ActionKind::Hover,
        ActionKind::Press,
        ActionKind::Scroll,
        ActionKind::Noop,
        ActionKind::TabFocus,
        ActionKind::NewTab,
        ActionKind::TabClose,
        ActionKind::GoBack,
        ActionKind::GoForward,
        ActionKind::Goto,
        ActionKind::Note,
        ActionKind::Stop,
        ActionKind::GoHome,
        ActionKind::Branch,
        ActionKind::Prune,
    ];

    pub fn verb(self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::Type => "type",
            ActionKind::Hover => "hover",
            ActionKind::Press => "press",
            ActionKind::Scroll => "scroll",
            ActionKind::Noop => "noop",
            ActionKind::TabFocus => "tab_focus",
            ActionKind::NewTab => "new_tab",
            ActionKind::TabClose => "tab_close",
            ActionKind::GoBack => "go_back",
            ActionKind::GoForward => "go_forward",
            ActionKind::Goto => "goto",
            ActionKind::Note => "note",
            ActionKind::Stop => "stop",
            ActionKind::GoHome => "go_home",
            ActionKind::Branch => "branch",
            ActionKind::Prune => "prune",
        }
    }

    pub fn from_verb(verb: &str) -> Option<Self> {
        ActionKind::ALL.into_iter().find(|k| k.verb() == verb)
    }

    pub fn is_planning(self) -> bool {
        matches!(self, ActionKind::Branch | ActionKind::Prune)
    }

    /// Specification line shown to the model for this command.
    pub fn spec_line(self) -> &'static str {
        match self {
            ActionKind::Click => "click [id]: To click on an element with its numerical ID on the webpage. E.g., `click [7]` If clicking on a specific element doesn't trigger the transition to your desired web state, this is due to the element's lack of interactivity or GUI visibility. In such cases, move on to interact with OTHER similar or relevant elements INSTEAD.",
            ActionKind::Type => "type [id] [content] [press_enter_after=0|1]: To type content into a field with a specific ID. By default, the `Enter` key is pressed after typing unless `press_enter_after` is set to 0. E.g., `type [15] [Carnegie Mellon University] [1]` If you can't find what you're looking for on your first attempt, consider refining your search keywords by breaking them down or trying related terms.",
            ActionKind::Hover => "hover [id]: To hover over an element with its numerical ID on the webpage. E.g., `hover [7]`",
            ActionKind::Press => "press [key_comb]: To press a key combination on the keyboard. E.g., `press [Ctrl+v]`",
            ActionKind::Scroll => "scroll [down|up]: To scroll the page down or up. E.g., `scroll [down]`",
            ActionKind::Noop => "noop: To do nothing for this step.",
            ActionKind::TabFocus => "tab_focus [tab_index]: To switch the browser's focus to the tab with the given index. E.g., `tab_focus [0]`",
            ActionKind::NewTab => "new_tab: To open a new, empty browser tab.",
            ActionKind::TabClose => "tab_close: To close the currently active tab.",
            ActionKind::GoBack => "go_back: To return to the previously viewed page.",
            ActionKind::GoForward => "go_forward: To undo a `go_back` and visit the next page.",
            ActionKind::Goto => "goto [url]: To navigate to a specific URL. E.g., `goto [http://example.com]`",
            ActionKind::Note => "note [content]: To take note of all important info w.r.t. completing the task to enable reviewing it later. E.g., `note [Spent $10 on 4/1/2024]`",
            ActionKind::Stop => "stop [answer]: To stop interaction and return response. Present your answer within the brackets. If the task doesn't require a textual answer or appears insurmountable, indicate `N/A` and additional reasons and all relevant information you gather as the answer. E.g., `stop [5h 47min]`",
            ActionKind::GoHome => "go_home: To return to the homepage where you can find other websites.",
            ActionKind::Branch => "branch [parent_plan_id] [new_subplan_intent]: To create a new subplan based on PREVIOUS PLANS. Ensure the new subplan is connected to the appropriate parent plan by using its ID. E.g., `branch [12] [Navigate to the \"Issue\" page to check all the issues.]`",
            ActionKind::Prune => "prune [resume_plan_id] [reason]: To return to a previous plan state when the current plan is deemed impractical. Enter the ID of the plan state you want to resume. E.g., `prune [5] [The current page lacks items \"black speaker,\" prompting a return to the initial page to restart the item search.]`",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb())
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Click { .. } => ActionKind::Click,
            Action::Type { .. } => ActionKind::Type,
            Action::GoBack => ActionKind::GoBack,
            Action::GoHome => ActionKind::GoHome,
            Action::Note { .. } => ActionKind::Note,
            Action::Stop { .. } => ActionKind::Stop,
            Action::Branch { .. } => ActionKind::Branch,
            Action::Prune { .. } => ActionKind::Prune,
            Action::Noop => ActionKind::Noop,
            Action::Hover { .. } => ActionKind::Hover,
            Action::Press { .. } => ActionKind::Press,
            Action::Scroll { .. } => ActionKind::Scroll,
            Action::TabFocus { .. } => ActionKind::TabFocus,
            Action::NewTab => ActionKind::NewTab,
            Action::TabClose => ActionKind::TabClose,
            Action::GoForward => ActionKind::GoForward,
            Action::Goto { .. } => ActionKind::Goto,
        }
    }

    /// Planning and note commands never reach the environment.
    pub fn touches_environment(&self) -> bool {
        !matches!(
            self.kind(),
            ActionKind::Branch | ActionKind::Prune | ActionKind::Note | ActionKind::Stop
        )
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_action(self))
    }
}

/// The set of commands a configuration admits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    allowed: BTreeSet<ActionKind>,
}

impl ActionSpace {
    pub fn from_flags(reduce_actions: bool, disable_scroll: bool, planning: bool, multisite: bool) -> Self {
        use ActionKind::*;
        let mut allowed: BTreeSet<ActionKind> = [Click, Type, GoBack, Stop].into();
        if reduce_actions {
            allowed.insert(Note);
            if multisite {
                allowed.insert(GoHome);
            }
        } else {
            allowed.extend([Hover, Press, Noop, TabFocus, NewTab, TabClose, GoForward, Goto]);
        }
        if !disable_scroll {
            allowed.insert(Scroll);
        }
        if planning {
            allowed.extend([Branch, Prune]);
        }
        ActionSpace { allowed }
    }

    pub fn from_config(config: &AgentConfig) -> Self {
        Self::from_flags(
            config.reduce_actions,
            config.disable_scroll,
            config.planning,
            config.multisite,
        )
    }

    /// Every command; used for matching canonical text outside any agent.
    pub fn full() -> Self {
        ActionSpace {
            allowed: ActionKind::ALL.into(),
        }
    }

    pub fn allows(&self, kind: ActionKind) -> bool {
        self.allowed.contains(&kind)
    }

    pub fn contains(&self, action: &Action) -> bool {
        self.allows(action.kind())
    }

    pub fn kinds(&self) -> impl Iterator<Item = ActionKind> + '_ {
        self.allowed.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("UnknownAction: `{0}` is not an action command")]
    UnknownAction(String),
    #[error("DisallowedAction: `{0}` is not available in the current action space")]
    DisallowedAction(ActionKind),
    #[error("MalformedAction: {0}")]
    MalformedAction(String),
}

/// Splits `[a] [b c] ...` into bracket contents. Inner balanced brackets
/// are kept; a `]` with no matching `[` ends the argument.
fn bracket_args(mut s: &str) -> Result<Vec<&str>, ActionError> {
    let mut args = Vec::new();
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Ok(args);
        }
        let Some(body) = s.strip_prefix('[') else {
            return Err(ActionError::MalformedAction(format!(
                "unexpected text `{s}` outside brackets"
            )));
        };
        let mut depth = 0usize;
        let mut end = None;
        for (i, c) in body.char_indices() {
            match c {
                '[' => depth += 1,
                ']' if depth == 0 => {
                    end = Some(i);
                    break;
                }
                ']' => depth -= 1,
                _ => {}
            }
        }
        let Some(end) = end else {
            return Err(ActionError::MalformedAction("unclosed `[`".into()));
        };
        args.push(&body[..end]);
        s = &body[end + 1..];
    }
}

fn parse_uint(arg: &str, what: &str) -> Result<u64, ActionError> {
    arg.trim()
        .parse()
        .map_err(|_| ActionError::MalformedAction(format!("{what} `{arg}` is not a non-negative integer")))
}

fn expect_args(verb: &str, args: &[&str], n: usize) -> Result<(), ActionError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ActionError::MalformedAction(format!(
            "`{verb}` takes {n} bracketed argument(s), got {}",
            args.len()
        )))
    }
}

pub fn parse_action(line: &str, space: &ActionSpace) -> Result<Action, ActionError> {
    let line = line.trim();
    let verb_end = line
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(line.len());
    let verb = &line[..verb_end];
    let kind = ActionKind::from_verb(verb)
        .ok_or_else(|| ActionError::UnknownAction(if verb.is_empty() { line.to_string() } else { verb.to_string() }))?;
    if !space.allows(kind) {
        return Err(ActionError::DisallowedAction(kind));
    }
    let args = bracket_args(&line[verb_end..])?;

    let action = match kind {
        ActionKind::Click => {
            expect_args(verb, &args, 1)?;
            Action::Click { id: parse_uint(args[0], "id")? }
        }
        ActionKind::Hover => {
            expect_args(verb, &args, 1)?;
            Action::Hover { id: parse_uint(args[0], "id")? }
        }
        ActionKind::Type => {
            if !(2..=3).contains(&args.len()) {
                return Err(ActionError::MalformedAction(format!(
                    "`type` takes 2 or 3 bracketed arguments, got {}",
                    args.len()
                )));
            }
            let press_enter = match args.get(2).map(|s| s.trim()) {
                None => true,
                Some(flag) => match flag.strip_prefix("press_enter_after=").unwrap_or(flag) {
                    "1" => true,
                    "0" => false,
                    other => {
                        return Err(ActionError::MalformedAction(format!(
                            "press_enter_after must be 0 or 1, got `{other}`"
                        )))
                    }
                },
            };
            Action::Type {
                id: parse_uint(args[0], "id")?,
                content: args[1].to_string(),
                press_enter,
            }
        }
        ActionKind::Note => {
            expect_args(verb, &args, 1)?;
            Action::Note { content: args[0].to_string() }
        }
        ActionKind::Stop => {
            expect_args(verb, &args, 1)?;
            Action::Stop { answer: args[0].to_string() }
        }
        ActionKind::Branch => {
            expect_args(verb, &args, 2)?;
            Action::Branch {
                parent_plan_id: parse_uint(args[0], "plan id")?,
                intent: args[1].to_string(),
            }
        }
        ActionKind::Prune => {
            expect_args(verb, &args, 2)?;
            Action::Prune {
                resume_plan_id: parse_uint(args[0], "plan id")?,
                reason: args[1].to_string(),
            }
        }
        ActionKind::Press => {
            expect_args(verb, &args, 1)?;
            Action::Press { key_combo: args[0].to_string() }
        }
        ActionKind::Scroll => {
            expect_args(verb, &args, 1)?;
            let dir = args[0].trim();
            let direction = match dir.strip_prefix("direction=").unwrap_or(dir) {
                "up" => ScrollDirection::Up,
                "down" => ScrollDirection::Down,
                other => {
                    return Err(ActionError::MalformedAction(format!(
                        "scroll direction must be up or down, got `{other}`"
                    )))
                }
            };
            Action::Scroll { direction }
        }
        ActionKind::TabFocus => {
            expect_args(verb, &args, 1)?;
            Action::TabFocus { index: parse_uint(args[0], "tab index")? }
        }
        ActionKind::Goto => {
            expect_args(verb, &args, 1)?;
            Action::Goto { url: args[0].to_string() }
        }
        ActionKind::GoBack => {
            expect_args(verb, &args, 0)?;
            Action::GoBack
        }
        ActionKind::GoHome => {
            expect_args(verb, &args, 0)?;
            Action::GoHome
        }
        ActionKind::Noop => {
            expect_args(verb, &args, 0)?;
            Action::Noop
        }
        ActionKind::NewTab => {
            expect_args(verb, &args, 0)?;
            Action::NewTab
        }
        ActionKind::TabClose => {
            expect_args(verb, &args, 0)?;
            Action::TabClose
        }
        ActionKind::GoForward => {
            expect_args(verb, &args, 0)?;
            Action::GoForward
        }
    };
    Ok(action)
}

/// Canonical single-line form; [`parse_action`] inverts it.
pub fn render_action(action: &Action) -> String {
    let verb = action.kind().verb();
    match action {
        Action::Click { id } | Action::Hover { id } => format!("{verb} [{id}]"),
        Action::Type { id, content, press_enter } => {
            format!("{verb} [{id}] [{content}] [{}]", u8::from(*press_enter))
        }
        Action::Note { content } => format!("{verb} [{content}]"),
        Action::Stop { answer } => format!("{verb} [{answer}]"),
        Action::Branch { parent_plan_id, intent } => format!("{verb} [{parent_plan_id}] [{intent}]"),
        Action::Prune { resume_plan_id, reason } => format!("{verb} [{resume_plan_id}] [{reason}]"),
        Action::Press { key_combo } => format!("{verb} [{key_combo}]"),
        Action::Scroll { direction } => format!("{verb} [{}]", direction.as_str()),
        Action::TabFocus { index } => format!("{verb} [{index}]"),
        Action::Goto { url } => format!("{verb} [{url}]"),
        Action::GoBack | Action::GoHome | Action::Noop | Action::NewTab | Action::TabClose | Action::GoForward => {
            verb.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionSpecs {
    pub navigation: String,
    pub planning: String,
}

pub fn render_action_specs(config: &AgentConfig) -> ActionSpecs {
    let space = ActionSpace::from_config(config);
    let lines = |planning: bool| {
        ActionKind::ALL
            .into_iter()
            .filter(|k| k.is_planning() == planning && space.allows(*k))
            .map(ActionKind::spec_line)
            .collect::<Vec<_>>()
            .join("\n")
    };
    ActionSpecs {
        navigation: lines(false),
        planning: lines(true),
    }
}
