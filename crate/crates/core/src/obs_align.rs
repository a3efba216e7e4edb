//! Single-page observation condensing.
//!
//! Text rows that only repeat the label of the element next to them are
//! merged away, and table/list blocks are rewritten as Markdown rows. The
//! whole page is emitted; there is no viewport.

use std::collections::BTreeSet;

use crate::ax_tree::{AxNode, AxTree};
use crate::runtime::config::AgentConfig;

/// Roles treated as interactive elements.
pub const INTERACTIVE_ROLES: &[&str] = &[
    "link",
    "button",
    "textbox",
    "combobox",
    "checkbox",
    "radio",
    "tab",
    "menuitem",
    "option",
    "searchbox",
    "switch",
    "slider",
    "spinbutton",
    "menuitemcheckbox",
    "menuitemradio",
];

/// Roles of purely descriptive text rows.
pub const TEXT_ROLES: &[&str] = &["StaticText", "text"];

const CELL_ROLES: &[&str] = &["columnheader", "rowheader", "gridcell", "cell"];
const TABLE_ROLES: &[&str] = &["table", "grid", "treegrid"];
const ROW_GROUP_ROLES: &[&str] = &["rowgroup"];

pub fn is_interactive(role: &str) -> bool {
    INTERACTIVE_ROLES.contains(&role)
}

pub fn is_text(role: &str) -> bool {
    TEXT_ROLES.contains(&role)
}

/// Trim and collapse internal whitespace runs.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedObservation {
    pub text: String,
    pub interactable_ids: BTreeSet<u64>,
    pub source_node_count: usize,
    pub emitted_node_count: usize,
    pub token_estimate: usize,
}

impl CondensedObservation {
    pub fn stats_line(&self) -> String {
        format!(
            "source_nodes={} emitted_nodes={} token_estimate={}",
            self.source_node_count, self.emitted_node_count, self.token_estimate
        )
    }
}

/// Ids of interactive nodes in `tree`.
pub fn interactive_ids(tree: &AxTree) -> BTreeSet<u64> {
    tree.nodes()
        .into_iter()
        .filter(|(_, n)| is_interactive(&n.role))
        .filter_map(|(_, n)| n.node_id)
        .collect()
}

/// `ceil(chars / 4)`.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub fn merge_descriptive_nodes(tree: &AxTree) -> AxTree {
    let mut root = tree.root().clone();
    merge_in(&mut root);
    AxTree::new(root).expect("removing nodes keeps ids unique")
}

fn merge_in(node: &mut AxNode) {
    for child in &mut node.children {
        merge_in(child);
    }
    let parent_name = node.name.as_deref().map(normalize_ws);
    // Removal can make two rows adjacent, so scan until nothing changes.
    loop {
        let children = &node.children;
        let redundant = (0..children.len()).find(|&i| {
            let child = &children[i];
            if !is_text(&child.role) || !child.children.is_empty() {
                return false;
            }
            let label = normalize_ws(child.name_str());
            if parent_name.as_deref() == Some(label.as_str()) {
                return true;
            }
            let neighbours = [i.checked_sub(1), Some(i + 1)];
            neighbours.into_iter().flatten().any(|j| {
                children.get(j).is_some_and(|sib| {
                    is_interactive(&sib.role)
                        && sib.name.is_some()
                        && normalize_ws(sib.name_str()) == label
                })
            })
        });
        match redundant {
            Some(i) => {
                node.children.remove(i);
            }
            None => break,
        }
    }
}

pub fn blocks_to_markdown(tree: &AxTree) -> AxTree {
    let root = tree.root().clone();
    let root = rewrite(root).unwrap_or_else(|| {
        // The whole page was an empty block; keep a bare shell of the root.
        let mut shell = tree.root().clone();
        shell.children.clear();
        shell
    });
    AxTree::new(root).expect("rewriting keeps ids unique")
}

/// Rewrites a subtree bottom-up. `None` drops the node.
fn rewrite(mut node: AxNode) -> Option<AxNode> {
    let children = std::mem::take(&mut node.children);
    node.children = children.into_iter().filter_map(rewrite).collect();

    if TABLE_ROLES.contains(&node.role.as_str()) {
        table_to_markdown(node)
    } else if node.role == "list" {
        list_to_markdown(node)
    } else {
        Some(node)
    }
}

fn table_to_markdown(mut table: AxNode) -> Option<AxNode> {
    let mut out = Vec::new();
    let mut rows = 0usize;
    let mut header_done = false;
    flatten_table(
        std::mem::take(&mut table.children),
        &mut out,
        &mut rows,
        &mut header_done,
    );
    if rows == 0 && out.is_empty() {
        return None;
    }
    table.children = out;
    Some(table)
}

fn flatten_table(
    children: Vec<AxNode>,
    out: &mut Vec<AxNode>,
    rows: &mut usize,
    header_done: &mut bool,
) {
    for child in children {
        if ROW_GROUP_ROLES.contains(&child.role.as_str()) {
            flatten_table(child.children, out, rows, header_done);
            continue;
        }
        if child.role != "row" {
            out.push(child);
            continue;
        }
        let cells: Vec<&AxNode> = child
            .children
            .iter()
            .filter(|c| CELL_ROLES.contains(&c.role.as_str()))
            .collect();
        if cells.is_empty() {
            // Already a Markdown row, or a row without cell structure.
            *rows += 1;
            *header_done = true;
            out.push(child);
            continue;
        }
        let is_header = cells.iter().all(|c| c.role == "columnheader");
        let fields: Vec<String> = cells.iter().map(|c| escape_pipes(&cell_text(c))).collect();
        let width = fields.len();
        let mut md_row = AxNode::new("row").with_name(format!("| {} |", fields.join(" | ")));
        for c in &child.children {
            collect_preserved(c, &mut md_row.children);
        }
        out.push(md_row);
        *rows += 1;
        if is_header && !*header_done {
            out.push(AxNode::new("row").with_name(format!("|{}", " --- |".repeat(width))));
        }
        *header_done = true;
    }
}

fn list_to_markdown(mut list: AxNode) -> Option<AxNode> {
    let children = std::mem::take(&mut list.children);
    if children.is_empty() {
        return None;
    }
    for child in children {
        if child.role != "listitem" {
            list.children.push(child);
            continue;
        }
        let text = item_text(&child);
        let mut row = AxNode::new("text").with_name(if text.is_empty() {
            "-".to_string()
        } else {
            format!("- {text}")
        });
        for c in &child.children {
            collect_preserved(c, &mut row.children);
        }
        list.children.push(row);
    }
    Some(list)
}

fn escape_pipes(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Nodes that must survive a block rewrite: interactive elements with their
/// subtrees, and nested lists.
fn is_preserved(node: &AxNode) -> bool {
    is_interactive(&node.role) || node.role == "list"
}

fn collect_preserved(node: &AxNode, out: &mut Vec<AxNode>) {
    if is_preserved(node) {
        out.push(node.clone());
        return;
    }
    for c in &node.children {
        collect_preserved(c, out);
    }
}

fn cell_text(cell: &AxNode) -> String {
    if let Some(name) = cell.name.as_deref().filter(|n| !n.trim().is_empty()) {
        return normalize_ws(name);
    }
    let mut parts = Vec::new();
    collect_names(cell, &mut parts, false);
    normalize_ws(&parts.join(" "))
}

fn item_text(item: &AxNode) -> String {
    if let Some(name) = item.name.as_deref().filter(|n| !n.trim().is_empty()) {
        return normalize_ws(name);
    }
    let mut parts = Vec::new();
    collect_names(item, &mut parts, true);
    normalize_ws(&parts.join(" "))
}

fn collect_names(node: &AxNode, parts: &mut Vec<String>, skip_preserved: bool) {
    for c in &node.children {
        if skip_preserved && is_preserved(c) {
            continue;
        }
        if let Some(name) = c.name.as_deref().filter(|n| !n.trim().is_empty()) {
            parts.push(name.to_string());
        } else {
            collect_names(c, parts, skip_preserved);
        }
    }
}

/// Condenses one page and returns the condensed tree with its summary.
pub fn condense_tree(tree: &AxTree, config: &AgentConfig) -> (AxTree, CondensedObservation) {
    let source_node_count = tree.len();
    let condensed = if config.condense_obs {
        let mut current = tree.clone();
        // Each pass can expose more to the other (an emptied table, a newly
        // adjacent duplicate), so run both to a joint fixpoint.
        loop {
            let next = blocks_to_markdown(&merge_descriptive_nodes(&current));
            if next == current {
                break current;
            }
            current = next;
        }
    } else {
        tree.clone()
    };
    let text = condensed.serialize();
    let obs = CondensedObservation {
        interactable_ids: interactive_ids(&condensed),
        source_node_count,
        emitted_node_count: condensed.len(),
        token_estimate: estimate_tokens(&text),
        text,
    };
    (condensed, obs)
}

pub fn condense(tree: &AxTree, config: &AgentConfig) -> CondensedObservation {
    condense_tree(tree, config).1
}
