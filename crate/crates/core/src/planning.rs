//! The agent-edited plan tree.
//!
//! `branch` adds a subplan and makes it active; `prune` abandons the active
//! plan's subtree and resumes another live plan. Pruned nodes are kept with
//! their reason for the trajectory log but never rendered.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("InvalidObjective: the objective is empty")]
    InvalidObjective,
    #[error("InvalidPlanRef: {0}")]
    InvalidPlanRef(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Live,
    Pruned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanNode {
    pub plan_id: u64,
    pub intent: String,
    pub parent: Option<u64>,
    pub children: Vec<u64>,
    pub status: PlanStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTree {
    #[serde(with = "node_list")]
    nodes: BTreeMap<u64, PlanNode>,
    active_id: u64,
    next_id: u64,
}

/// Nodes are written as a list so the dump does not depend on map-key
/// encoding.
mod node_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::PlanNode;

    pub fn serialize<S: Serializer>(nodes: &BTreeMap<u64, PlanNode>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<&PlanNode> = nodes.values().collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u64, PlanNode>, D::Error> {
        let list = Vec::<PlanNode>::deserialize(d)?;
        Ok(list.into_iter().map(|n| (n.plan_id, n)).collect())
    }
}

pub fn root_intent(objective: &str) -> String {
    format!("Find the solution to \"{objective}\"")
}

impl PlanTree {
    pub fn new(objective: &str) -> Result<Self, PlanError> {
        if objective.trim().is_empty() {
            return Err(PlanError::InvalidObjective);
        }
        let root = PlanNode {
            plan_id: 0,
            intent: root_intent(objective),
            parent: None,
            children: Vec::new(),
            status: PlanStatus::Live,
            prune_reason: None,
        };
        Ok(PlanTree {
            nodes: BTreeMap::from([(0, root)]),
            active_id: 0,
            next_id: 1,
        })
    }

    pub fn active_id(&self) -> u64 {
        self.active_id
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn get(&self, id: u64) -> Option<&PlanNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &PlanNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn live_count(&self) -> usize {
        self.nodes.values().filter(|n| n.status == PlanStatus::Live).count()
    }

    fn live(&self, id: u64) -> Result<&PlanNode, PlanError> {
        match self.nodes.get(&id) {
            None => Err(PlanError::InvalidPlanRef(format!("plan {id} does not exist"))),
            Some(n) if n.status == PlanStatus::Pruned => {
                Err(PlanError::InvalidPlanRef(format!("plan {id} has been pruned")))
            }
            Some(n) => Ok(n),
        }
    }

    /// True when `id` lies in the subtree rooted at `root` (inclusive).
    pub fn in_subtree(&self, root: u64, id: u64) -> bool {
        let mut cursor = Some(id);
        while let Some(c) = cursor {
            if c == root {
                return true;
            }
            cursor = self.nodes.get(&c).and_then(|n| n.parent);
        }
        false
    }

    /// Checks a branch without applying it.
    pub fn check_branch(&self, parent_plan_id: u64) -> Result<(), PlanError> {
        self.live(parent_plan_id).map(|_| ())
    }

    /// Checks a prune without applying it.
    pub fn check_prune(&self, resume_plan_id: u64) -> Result<(), PlanError> {
        self.live(resume_plan_id)?;
        if resume_plan_id != self.active_id && self.in_subtree(self.active_id, resume_plan_id) {
            return Err(PlanError::InvalidPlanRef(format!(
                "plan {resume_plan_id} lies inside the abandoned plan {}",
                self.active_id
            )));
        }
        Ok(())
    }

    pub fn branch(&mut self, parent_plan_id: u64, intent: impl Into<String>) -> Result<u64, PlanError> {
        self.check_branch(parent_plan_id)?;
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(
            id,
            PlanNode {
                plan_id: id,
                intent: intent.into(),
                parent: Some(parent_plan_id),
                children: Vec::new(),
                status: PlanStatus::Live,
                prune_reason: None,
            },
        );
        self.nodes
            .get_mut(&parent_plan_id)
            .expect("checked above")
            .children
            .push(id);
        self.active_id = id;
        Ok(id)
    }

    /// Abandons the active plan's subtree and resumes `resume_plan_id`.
    /// Resuming the active plan itself changes nothing.
    pub fn prune(&mut self, resume_plan_id: u64, reason: impl Into<String>) -> Result<(), PlanError> {
        self.check_prune(resume_plan_id)?;
        if resume_plan_id == self.active_id {
            return Ok(());
        }
        let abandoned = self.active_id;
        let mut stack = vec![abandoned];
        while let Some(id) = stack.pop() {
            let node = self.nodes.get_mut(&id).expect("child links are consistent");
            node.status = PlanStatus::Pruned;
            stack.extend(node.children.iter().copied());
        }
        self.nodes.get_mut(&abandoned).expect("exists").prune_reason = Some(reason.into());
        self.active_id = resume_plan_id;
        Ok(())
    }

    /// Live plans depth-first, one tab per level, with the active plan marked.
    pub fn render(&self) -> String {
        let mut lines = Vec::new();
        let mut stack = vec![(0u64, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[&id];
            if node.status == PlanStatus::Pruned {
                continue;
            }
            let marker = if id == self.active_id { " (Active Plan)" } else { "" };
            lines.push(format!("{}[{id}]{marker} {}", "\t".repeat(depth), node.intent));
            for &child in node.children.iter().rev() {
                stack.push((child, depth + 1));
            }
        }
        lines.join("\n")
    }
}
