//! Selective replay of earlier steps.
//!
//! Each recorded step keeps only the neighbourhood of the elements the model
//! flagged as pivotal (their ancestors, siblings and descendants), and the
//! history shown to the model is scoped to the active plan.

use std::collections::BTreeSet;

use tracing::warn;

use crate::actions::{render_action, Action};
use crate::ax_tree::{AxNode, AxTree, NodePath};
use crate::planning::PlanTree;
use crate::runtime::config::AgentConfig;

/// Ordered unique ids from an observation-highlight section. Fragments that
/// are not plain integers are skipped.
pub fn parse_highlights(section: &str) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    section
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .map(|tok| tok.trim_matches(|c: char| matches!(c, '[' | ']' | '`' | '\'' | '"' | '.' | '(' | ')')))
        .filter_map(|tok| tok.parse::<u64>().ok())
        .filter(|id| seen.insert(*id))
        .collect()
}

/// Paths kept for `pivotal_ids`: each pivotal node with its ancestors,
/// siblings and descendants, plus the root. Ids missing from the tree are
/// ignored.
pub fn retained_paths(tree: &AxTree, pivotal_ids: &[u64]) -> BTreeSet<NodePath> {
    let mut keep = BTreeSet::from([NodePath::root()]);
    for &id in pivotal_ids {
        let Ok(path) = tree.path_of(id) else { continue };
        let rel = tree.relatives_of_path(path);
        keep.insert(path.clone());
        keep.extend(rel.ancestors);
        keep.extend(rel.siblings);
        keep.extend(rel.descendants);
    }
    keep
}

pub fn filter_observation(tree: &AxTree, pivotal_ids: &[u64]) -> AxTree {
    let keep = retained_paths(tree, pivotal_ids);
    fn prune(node: &AxNode, path: NodePath, keep: &BTreeSet<NodePath>) -> AxNode {
        let mut out = AxNode {
            children: Vec::new(),
            ..node.clone()
        };
        for (i, child) in node.children.iter().enumerate() {
            let child_path = path.child(i);
            if keep.contains(&child_path) {
                out.children.push(prune(child, child_path, keep));
            }
        }
        out
    }
    // The retained set is closed under ancestors, so pruning top-down keeps
    // every retained node.
    let root = prune(tree.root(), NodePath::root(), &keep);
    AxTree::new(root).expect("subset of a valid tree")
}

/// Filtered observation in the id-free form used in history.
pub fn render_filtered(tree: &AxTree, pivotal_ids: &[u64]) -> String {
    filter_observation(tree, pivotal_ids).without_ids().serialize()
}

/// One sealed step. Fields are fixed once recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    step_index: usize,
    plan_id: u64,
    observation: AxTree,
    condensed: String,
    reason: String,
    action: Option<Action>,
    pivotal_ids: Vec<u64>,
    filtered_observation: String,
}

impl StepRecord {
    /// Seals a step. `page` is the tree the model saw; pivotal ids absent
    /// from it are dropped with a warning.
    pub fn seal(
        step_index: usize,
        plan_id: u64,
        observation: AxTree,
        page: &AxTree,
        reason: String,
        action: Option<Action>,
        pivotal_ids: Vec<u64>,
    ) -> Self {
        let (valid, dropped): (Vec<u64>, Vec<u64>) =
            pivotal_ids.into_iter().partition(|id| page.contains_id(*id));
        if !dropped.is_empty() {
            warn!(step_index, ?dropped, "pivotal ids not present on the page");
        }
        StepRecord {
            step_index,
            plan_id,
            observation,
            condensed: page.serialize(),
            reason,
            action,
            filtered_observation: render_filtered(page, &valid),
            pivotal_ids: valid,
        }
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn plan_id(&self) -> u64 {
        self.plan_id
    }

    pub fn observation(&self) -> &AxTree {
        &self.observation
    }

    pub fn condensed(&self) -> &str {
        &self.condensed
    }

    pub fn reason(&self) -> &str {
        &self.reason
    }

    /// `None` for a step where no usable action was produced.
    pub fn action(&self) -> Option<&Action> {
        self.action.as_ref()
    }

    pub fn action_text(&self) -> Option<String> {
        self.action.as_ref().map(render_action)
    }

    pub fn pivotal_ids(&self) -> &[u64] {
        &self.pivotal_ids
    }

    pub fn filtered_observation(&self) -> &str {
        &self.filtered_observation
    }

    pub fn render_block(&self) -> String {
        format!(
            "<step_{k}_interaction>\nOBSERVATION:\n{obs}\nREASON FOR ACTION:\n{reason}\nACTION:\n{action}\n</step_{k}_interaction>",
            k = self.step_index,
            obs = self.filtered_observation,
            reason = self.reason,
            action = self.action_text().unwrap_or_else(|| "None".to_string()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryHistory {
    objective: String,
    steps: Vec<StepRecord>,
}

impl TrajectoryHistory {
    pub fn new(objective: impl Into<String>) -> Self {
        TrajectoryHistory {
            objective: objective.into(),
            steps: Vec::new(),
        }
    }

    pub fn objective(&self) -> &str {
        &self.objective
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Index the next recorded step must carry.
    pub fn next_index(&self) -> usize {
        self.steps.len()
    }

    /// Appends a sealed step. Panics if its index is out of sequence.
    pub fn push(&mut self, record: StepRecord) {
        assert_eq!(record.step_index, self.next_index(), "step indices must be consecutive from 0");
        self.steps.push(record);
    }

    pub fn into_steps(self) -> Vec<StepRecord> {
        self.steps
    }
}

/// Steps replayed for the current prompt.
pub fn replayed_steps<'a>(
    history: &'a TrajectoryHistory,
    plan: &PlanTree,
    config: &AgentConfig,
) -> Vec<&'a StepRecord> {
    if config.planning {
        let active = plan.active_id();
        history.steps().iter().filter(|s| s.plan_id == active).collect()
    } else {
        let skip = history.len().saturating_sub(config.history_window);
        history.steps()[skip..].iter().collect()
    }
}

pub fn render_history(history: &TrajectoryHistory, plan: &PlanTree, config: &AgentConfig) -> String {
    if !config.history_replay {
        return history
            .steps()
            .last()
            .map(|s| s.action_text().unwrap_or_else(|| "None".to_string()))
            .unwrap_or_default();
    }
    replayed_steps(history, plan, config)
        .into_iter()
        .map(StepRecord::render_block)
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ax_tree::parse_ax_tree;

    #[test]
    fn highlight_parsing() {
        assert_eq!(parse_highlights("1321, 52, 756, 838"), vec![1321, 52, 756, 838]);
        assert_eq!(parse_highlights(""), Vec::<u64>::new());
        assert_eq!(parse_highlights("12, 12, x, 272"), vec![12, 272]);
        assert_eq!(parse_highlights("`12`, [272]."), vec![12, 272]);
    }

    #[test]
    fn empty_pivotal_set_keeps_root_only() {
        let tree = parse_ax_tree("RootWebArea [1] 'a'\n\tlink [2] 'b'").unwrap();
        assert_eq!(filter_observation(&tree, &[]).serialize(), "RootWebArea [1] 'a'");
        assert_eq!(filter_observation(&tree, &[99]).serialize(), "RootWebArea [1] 'a'");
    }

    #[test]
    fn siblings_keep_no_children() {
        let tree = parse_ax_tree(
            "RootWebArea [1]\n\tmain [2]\n\t\tlink [3] 'a'\n\t\tbutton [4] 'b'\n\t\t\tgeneric [5] 'c'\n\tcontentinfo [6]",
        )
        .unwrap();
        let filtered = filter_observation(&tree, &[3]);
        assert_eq!(
            filtered.serialize(),
            "RootWebArea [1]\n\tmain [2]\n\t\tlink [3] 'a'\n\t\tbutton [4] 'b'"
        );
    }

    #[test]
    fn sealing_drops_unknown_pivotal_ids() {
        let tree = parse_ax_tree("RootWebArea [1]\n\tlink [2] 'a'").unwrap();
        let rec = StepRecord::seal(0, 0, tree.clone(), &tree, "r".into(), Some(Action::Click { id: 2 }), vec![2, 77]);
        assert_eq!(rec.pivotal_ids(), &[2]);
        assert_eq!(rec.filtered_observation(), "RootWebArea\n\tlink 'a'");
    }

    #[test]
    fn history_without_replay_shows_previous_action_only() {
        let tree = parse_ax_tree("RootWebArea [1]").unwrap();
        let mut history = TrajectoryHistory::new("obj");
        let plan = PlanTree::new("obj").unwrap();
        let cfg = AgentConfig {
            history_replay: false,
            planning: false,
            ..AgentConfig::default()
        };
        assert_eq!(render_history(&history, &plan, &cfg), "");
        history.push(StepRecord::seal(0, 0, tree.clone(), &tree, "r".into(), Some(Action::GoBack), vec![]));
        assert_eq!(render_history(&history, &plan, &cfg), "go_back");
    }

    #[test]
    fn window_limits_unplanned_history() {
        let tree = parse_ax_tree("RootWebArea [1]").unwrap();
        let mut history = TrajectoryHistory::new("obj");
        let plan = PlanTree::new("obj").unwrap();
        for k in 0..5 {
            history.push(StepRecord::seal(k, 0, tree.clone(), &tree, format!("r{k}"), Some(Action::GoBack), vec![]));
        }
        let cfg = AgentConfig {
            planning: false,
            history_window: 3,
            ..AgentConfig::default()
        };
        let text = render_history(&history, &plan, &cfg);
        assert!(!text.contains("<step_1_interaction>"));
        assert!(text.starts_with("<step_2_interaction>"));
        assert!(text.contains("<step_4_interaction>"));
    }
}
