//! Accessibility-tree web agent with aligned observation and action spaces.
//!
//! Pages arrive as accessibility-tree dumps ([`ax_tree`]), are condensed
//! ([`obs_align`]) and shown to a language model together with a plan tree
//! ([`planning`]) and selectively replayed history ([`memory`]). The model
//! answers with commands from a restricted vocabulary ([`actions`]), which
//! [`runtime`] applies to an environment.

pub mod actions;
pub mod ax_tree;
pub mod memory;
pub mod obs_align;
pub mod planning;
pub mod runtime;
#[cfg(feature = "synth")]
pub mod synth;

pub use actions::{parse_action, render_action, Action, ActionError, ActionKind, ActionSpace, ScrollDirection};
pub use ax_tree::{parse_ax_tree, AxNode, AxTree, AxTreeError, NameStyle, NodePath};
pub use memory::{filter_observation, parse_highlights, StepRecord, TrajectoryHistory};
pub use obs_align::{condense, condense_tree, CondensedObservation};
pub use planning::{PlanError, PlanStatus, PlanTree};
pub use runtime::{AgentConfig, Environment, LlmClient, ReplayEnvironment, Trajectory};
