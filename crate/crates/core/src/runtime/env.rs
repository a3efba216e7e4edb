//! Environments the agent acts in.
//!
//! [`ReplayEnvironment`] is a deterministic state graph of recorded pages.
//! Transitions are keyed by canonical action text; an action with no entry
//! leaves the page unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

use crate::actions::{parse_action, render_action, Action, ActionSpace};
use crate::ax_tree::parse_ax_tree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvObservation {
    pub ax_dump: String,
    pub url: Option<String>,
    pub state_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("environment already terminal")]
    Terminal,
    #[error("environment not reset")]
    NotReset,
    #[error("environment failure: {0}")]
    Failure(String),
}

pub trait Environment {
    fn reset(&mut self) -> Result<EnvObservation, EnvError>;
    fn execute(&mut self, action: &Action) -> Result<EnvObservation, EnvError>;
    fn is_terminal(&self) -> bool;
    fn reward(&self) -> Option<f64>;
    /// Identifier of the current state, for traces.
    fn state_id(&self) -> Option<&str>;
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn reset(&mut self) -> Result<EnvObservation, EnvError> {
        (**self).reset()
    }
    fn execute(&mut self, action: &Action) -> Result<EnvObservation, EnvError> {
        (**self).execute(action)
    }
    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
    fn reward(&self) -> Option<f64> {
        (**self).reward()
    }
    fn state_id(&self) -> Option<&str> {
        (**self).state_id()
    }
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("SnapshotError: cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("SnapshotError: cannot parse snapshot file: {0}")]
    Format(String),
    #[error("SnapshotError: start state `{0}` is not declared")]
    MissingStart(String),
    #[error("SnapshotError: state `{from}` transitions to undeclared state `{to}`")]
    DanglingTransition { from: String, to: String },
    #[error("SnapshotError: state `{0}` is declared twice")]
    DuplicateState(String),
    #[error("SnapshotError: state `{state}` has an invalid page: {message}")]
    BadPage { state: String, message: String },
    #[error("SnapshotError: state `{state}` has an unparsable transition key `{key}`: {message}")]
    BadTransition {
        state: String,
        key: String,
        message: String,
    },
    #[error("SnapshotError: state `{state}` maps `{key}` twice")]
    DuplicateTransition { state: String, key: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub action: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub id: String,
    /// Inline page dump. Exactly one of `ax_dump` and `ax_file` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ax_dump: Option<String>,
    /// Page dump file, relative to the snapshot file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ax_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default)]
    pub terminal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(default, rename = "transition", alias = "transitions")]
    pub transitions: Vec<TransitionSpec>,
}

/// Snapshot file contents (TOML, or JSON by `.json` extension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotFile {
    pub start: String,
    #[serde(rename = "state", alias = "states")]
    pub states: Vec<StateSpec>,
}

#[derive(Debug, Clone, PartialEq)]
struct State {
    ax_dump: String,
    url: Option<String>,
    terminal: bool,
    reward: Option<f64>,
    transitions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEnvironment {
    start: String,
    states: BTreeMap<String, State>,
    current: Option<String>,
}

impl ReplayEnvironment {
    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        let text = std::fs::read_to_string(path).map_err(|source| SnapshotError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: SnapshotFile = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| SnapshotError::Format(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| SnapshotError::Format(e.to_string()))?
        };
        Self::from_spec(file, path.parent())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SnapshotError> {
        let file: SnapshotFile = toml::from_str(text).map_err(|e| SnapshotError::Format(e.to_string()))?;
        Self::from_spec(file, None)
    }

    /// Validates the graph. `base_dir` resolves `ax_file` entries.
    pub fn from_spec(file: SnapshotFile, base_dir: Option<&Path>) -> Result<Self, SnapshotError> {
        let full = ActionSpace::full();
        let declared: BTreeSet<&str> = file.states.iter().map(|s| s.id.as_str()).collect();
        let mut states = BTreeMap::new();
        for spec in &file.states {
            let ax_dump = match (&spec.ax_dump, &spec.ax_file) {
                (Some(d), None) => d.clone(),
                (None, Some(rel)) => {
                    let p = base_dir.map(|b| b.join(rel)).unwrap_or_else(|| rel.clone());
                    std::fs::read_to_string(&p).map_err(|source| SnapshotError::Io { path: p, source })?
                }
                _ => {
                    return Err(SnapshotError::BadPage {
                        state: spec.id.clone(),
                        message: "exactly one of ax_dump and ax_file is required".into(),
                    })
                }
            };
            parse_ax_tree(&ax_dump).map_err(|e| SnapshotError::BadPage {
                state: spec.id.clone(),
                message: e.to_string(),
            })?;
            let mut transitions = BTreeMap::new();
            for t in &spec.transitions {
                let action = parse_action(&t.action, &full).map_err(|e| SnapshotError::BadTransition {
                    state: spec.id.clone(),
                    key: t.action.clone(),
                    message: e.to_string(),
                })?;
                if !declared.contains(t.to.as_str()) {
                    return Err(SnapshotError::DanglingTransition {
                        from: spec.id.clone(),
                        to: t.to.clone(),
                    });
                }
                let key = render_action(&action);
                if transitions.insert(key.clone(), t.to.clone()).is_some() {
                    return Err(SnapshotError::DuplicateTransition { state: spec.id.clone(), key });
                }
            }
            let state = State {
                ax_dump,
                url: spec.url.clone(),
                terminal: spec.terminal,
                reward: spec.reward,
                transitions,
            };
            if states.insert(spec.id.clone(), state).is_some() {
                return Err(SnapshotError::DuplicateState(spec.id.clone()));
            }
        }
        if !states.contains_key(&file.start) {
            return Err(SnapshotError::MissingStart(file.start));
        }
        Ok(ReplayEnvironment {
            start: file.start,
            states,
            current: None,
        })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn state_ids(&self) -> impl Iterator<Item = &str> {
        self.states.keys().map(String::as_str)
    }

    fn observe(&self, id: &str) -> EnvObservation {
        let state = &self.states[id];
        EnvObservation {
            ax_dump: state.ax_dump.clone(),
            url: state.url.clone(),
            state_id: id.to_string(),
        }
    }
}

impl Environment for ReplayEnvironment {
    fn reset(&mut self) -> Result<EnvObservation, EnvError> {
        self.current = Some(self.start.clone());
        Ok(self.observe(&self.start))
    }

    fn execute(&mut self, action: &Action) -> Result<EnvObservation, EnvError> {
        let current = self.current.clone().ok_or(EnvError::NotReset)?;
        if self.states[&current].terminal {
            return Err(EnvError::Terminal);
        }
        let key = render_action(action);
        let next = match self.states[&current].transitions.get(&key) {
            Some(to) => to.clone(),
            None => {
                debug!(state = %current, action = %key, "no transition; staying");
                current
            }
        };
        let obs = self.observe(&next);
        self.current = Some(next);
        Ok(obs)
    }

    fn is_terminal(&self) -> bool {
        self.current.as_ref().is_some_and(|id| self.states[id].terminal)
    }

    fn reward(&self) -> Option<f64> {
        self.current.as_ref().and_then(|id| self.states[id].reward)
    }

    fn state_id(&self) -> Option<&str> {
        self.current.as_deref()
    }
}
