//! Accessibility-tree pages in the indented text dump format.
//!
//! One node per line, `role [id] 'name' [key: value]...`, where the id, the
//! name and the attribute list are each optional. Depth is given by leading
//! indentation: one tab per level, or a fixed run of spaces detected from the
//! first indented line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxTreeError {
    #[error("EmptyObservation: the observation contains no nodes")]
    EmptyObservation,
    #[error("ParseError at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("UnknownNode: no node with id {0}")]
    UnknownNode(u64),
    #[error("duplicate node id {0}")]
    DuplicateId(u64),
}

impl AxTreeError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        AxTreeError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// How a node's name is delimited in the dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NameStyle {
    Single,
    Double,
    /// Opening quote with no closing quote; the name runs to end of line.
    OpenSingle,
    OpenDouble,
    /// Raw line content kept for a row that does not fit the grammar.
    Bare,
}

impl NameStyle {
    /// Quote style a freshly built node gets for `text`.
    pub fn for_text(text: &str) -> Self {
        if text.contains('\'') && !text.contains('"') {
            NameStyle::Double
        } else {
            NameStyle::Single
        }
    }

    fn open(self) -> &'static str {
        match self {
            NameStyle::Single | NameStyle::OpenSingle => "'",
            NameStyle::Double | NameStyle::OpenDouble => "\"",
            NameStyle::Bare => "",
        }
    }

    fn close(self) -> &'static str {
        match self {
            NameStyle::Single => "'",
            NameStyle::Double => "\"",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxNode {
    pub node_id: Option<u64>,
    pub role: String,
    pub name: Option<String>,
    pub name_style: NameStyle,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<AxNode>,
    pub depth: usize,
}

impl AxNode {
    pub fn new(role: impl Into<String>) -> Self {
        AxNode {
            node_id: None,
            role: role.into(),
            name: None,
            name_style: NameStyle::Single,
            attributes: Vec::new(),
            children: Vec::new(),
            depth: 0,
        }
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.node_id = Some(id);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        let name = name.into();
        self.name_style = NameStyle::for_text(&name);
        self.name = Some(name);
        self
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.push((key.into(), value.into()));
        self
    }

    pub fn with_child(mut self, child: AxNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn with_children(mut self, children: impl IntoIterator<Item = AxNode>) -> Self {
        self.children.extend(children);
        self
    }

    /// Replaces the name, picking a quote style that fits the new text.
    pub fn set_name(&mut self, name: Option<String>) {
        if let Some(text) = &name {
            self.name_style = NameStyle::for_text(text);
        }
        self.name = name;
    }

    pub fn name_str(&self) -> &str {
        self.name.as_deref().unwrap_or("")
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn subtree_len(&self) -> usize {
        1 + self.children.iter().map(AxNode::subtree_len).sum::<usize>()
    }

    /// The dump line for this node alone, without indentation.
    pub fn line(&self) -> String {
        let mut out = String::new();
        if self.role.is_empty() && self.name_style == NameStyle::Bare {
            out.push_str(self.name_str());
            return out;
        }
        out.push_str(&self.role);
        if let Some(id) = self.node_id {
            out.push_str(&format!(" [{id}]"));
        }
        if let Some(name) = &self.name {
            out.push(' ');
            out.push_str(self.name_style.open());
            out.push_str(name);
            out.push_str(self.name_style.close());
        }
        for (key, value) in &self.attributes {
            out.push_str(&format!(" [{key}: {value}]"));
        }
        out
    }

    fn fix_depths(&mut self, depth: usize) {
        self.depth = depth;
        for child in &mut self.children {
            child.fix_depths(depth + 1);
        }
    }

    fn write_lines(&self, out: &mut String) {
        if !out.is_empty() {
            out.push('\n');
        }
        for _ in 0..self.depth {
            out.push('\t');
        }
        out.push_str(&self.line());
        for child in &self.children {
            child.write_lines(out);
        }
    }

    /// Removes every node id in this subtree.
    pub fn strip_ids(&mut self) {
        self.node_id = None;
        for child in &mut self.children {
            child.strip_ids();
        }
    }
}

/// Child-index path from the root; the root is the empty path.
///
/// Lexicographic order on paths is document (pre-)order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, index: usize) -> NodePath {
        let mut steps = self.0.clone();
        steps.push(index);
        NodePath(steps)
    }

    pub fn is_strict_ancestor_of(&self, other: &NodePath) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }
}

/// Structural neighbourhood of one node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relatives {
    /// Strict path to the root, nearest first.
    pub ancestors: Vec<NodePath>,
    pub siblings: Vec<NodePath>,
    /// Strict subtree in document order.
    pub descendants: Vec<NodePath>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxTree {
    root: AxNode,
    id_index: BTreeMap<u64, NodePath>,
}

impl AxTree {
    /// Builds a tree, re-deriving depths and indexing ids.
    pub fn new(mut root: AxNode) -> Result<Self, AxTreeError> {
        root.fix_depths(0);
        let mut id_index = BTreeMap::new();
        let mut stack = vec![(NodePath::root(), &root)];
        while let Some((path, node)) = stack.pop() {
            if let Some(id) = node.node_id {
                if id_index.insert(id, path.clone()).is_some() {
                    return Err(AxTreeError::DuplicateId(id));
                }
            }
            for (i, child) in node.children.iter().enumerate() {
                stack.push((path.child(i), child));
            }
        }
        Ok(AxTree { root, id_index })
    }

    pub fn root(&self) -> &AxNode {
        &self.root
    }

    pub fn into_root(self) -> AxNode {
        self.root
    }

    pub fn len(&self) -> usize {
        self.root.subtree_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id_index(&self) -> &BTreeMap<u64, NodePath> {
        &self.id_index
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.id_index.keys().copied()
    }

    pub fn contains_id(&self, id: u64) -> bool {
        self.id_index.contains_key(&id)
    }

    pub fn path_of(&self, id: u64) -> Result<&NodePath, AxTreeError> {
        self.id_index.get(&id).ok_or(AxTreeError::UnknownNode(id))
    }

    pub fn get(&self, path: &NodePath) -> Option<&AxNode> {
        let mut node = &self.root;
        for &i in &path.0 {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    pub fn find(&self, id: u64) -> Option<&AxNode> {
        self.id_index.get(&id).and_then(|p| self.get(p))
    }

    /// All nodes in document order.
    pub fn nodes(&self) -> Vec<(NodePath, &AxNode)> {
        let mut out = Vec::with_capacity(self.len());
        fn walk<'a>(path: NodePath, node: &'a AxNode, out: &mut Vec<(NodePath, &'a AxNode)>) {
            out.push((path.clone(), node));
            for (i, child) in node.children.iter().enumerate() {
                walk(path.child(i), child, out);
            }
        }
        walk(NodePath::root(), &self.root, &mut out);
        out
    }

    pub fn relatives(&self, id: u64) -> Result<Relatives, AxTreeError> {
        let path = self.path_of(id)?.clone();
        Ok(self.relatives_of_path(&path))
    }

    /// Relatives of the node at `path`, which must exist in this tree.
    pub fn relatives_of_path(&self, path: &NodePath) -> Relatives {
        let mut ancestors = Vec::with_capacity(path.depth());
        let mut cursor = path.parent();
        while let Some(p) = cursor {
            cursor = p.parent();
            ancestors.push(p);
        }

        let siblings = match path.parent() {
            Some(parent_path) => {
                let own = *path.0.last().expect("non-root path");
                let parent = self.get(&parent_path).expect("parent exists");
                (0..parent.children.len())
                    .filter(|&i| i != own)
                    .map(|i| parent_path.child(i))
                    .collect()
            }
            None => Vec::new(),
        };

        let mut descendants = Vec::new();
        if let Some(node) = self.get(path) {
            fn walk(path: &NodePath, node: &AxNode, out: &mut Vec<NodePath>) {
                for (i, child) in node.children.iter().enumerate() {
                    let child_path = path.child(i);
                    out.push(child_path.clone());
                    walk(&child_path, child, out);
                }
            }
            walk(path, node, &mut descendants);
        }

        Relatives {
            ancestors,
            siblings,
            descendants,
        }
    }

    /// Ids carried by the nodes at `paths`.
    pub fn ids_at<'a>(&self, paths: impl IntoIterator<Item = &'a NodePath>) -> BTreeSet<u64> {
        paths
            .into_iter()
            .filter_map(|p| self.get(p).and_then(|n| n.node_id))
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.root.write_lines(&mut out);
        out
    }

    /// Same page with every node id removed.
    pub fn without_ids(&self) -> AxTree {
        let mut root = self.root.clone();
        root.strip_ids();
        AxTree {
            root,
            id_index: BTreeMap::new(),
        }
    }
}

impl fmt::Display for AxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

impl std::str::FromStr for AxTree {
    type Err = AxTreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ax_tree(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IndentUnit {
    Tab,
    Spaces(usize),
}

pub fn parse_ax_tree(text: &str) -> Result<AxTree, AxTreeError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let Some(&(_, first)) = lines.first() else {
        return Err(AxTreeError::EmptyObservation);
    };

    let base = leading_ws(first);
    let mut unit: Option<IndentUnit> = None;
    // (depth, node) in document order
    let mut rows: Vec<(usize, AxNode)> = Vec::with_capacity(lines.len());
    let mut seen_ids = BTreeSet::new();

    for &(line_no, line) in &lines {
        let Some(rest) = line.strip_prefix(base) else {
            return Err(AxTreeError::parse(line_no, "line is indented less than the root"));
        };
        let ws = leading_ws(rest);
        let depth = if ws.is_empty() {
            0
        } else {
            let unit = *unit.get_or_insert_with(|| {
                if ws.starts_with('\t') {
                    IndentUnit::Tab
                } else {
                    IndentUnit::Spaces(ws.len())
                }
            });
            indent_depth(ws, unit).ok_or_else(|| {
                AxTreeError::parse(line_no, "indentation is not a whole number of levels")
            })?
        };

        match rows.last() {
            None if depth != 0 => unreachable!("first line defines the base indentation"),
            Some(_) if depth == 0 => {
                return Err(AxTreeError::parse(line_no, "a second root node"));
            }
            Some(&(prev, _)) if depth > prev + 1 => {
                return Err(AxTreeError::parse(
                    line_no,
                    format!("indentation jumps from depth {prev} to {depth}"),
                ));
            }
            _ => {}
        }

        let node = parse_line(&rest[ws.len()..]);
        if let Some(id) = node.node_id {
            if !seen_ids.insert(id) {
                return Err(AxTreeError::parse(line_no, format!("duplicate node id {id}")));
            }
        }
        rows.push((depth, node));
    }

    let root = assemble(rows);
    AxTree::new(root)
}

fn leading_ws(s: &str) -> &str {
    let end = s
        .find(|c: char| c != ' ' && c != '\t')
        .unwrap_or(s.len());
    &s[..end]
}

fn indent_depth(ws: &str, unit: IndentUnit) -> Option<usize> {
    match unit {
        IndentUnit::Tab => ws.chars().all(|c| c == '\t').then_some(ws.len()),
        IndentUnit::Spaces(n) => {
            (ws.chars().all(|c| c == ' ') && ws.len().is_multiple_of(n)).then_some(ws.len() / n)
        }
    }
}

/// Folds depth-annotated rows (already validated) into a tree.
fn assemble(rows: Vec<(usize, AxNode)>) -> AxNode {
    let mut stack: Vec<AxNode> = Vec::new();
    for (depth, node) in rows {
        while stack.len() > depth {
            let done = stack.pop().expect("non-empty");
            stack.last_mut().expect("parent").children.push(done);
        }
        stack.push(node);
    }
    while stack.len() > 1 {
        let done = stack.pop().expect("non-empty");
        stack.last_mut().expect("parent").children.push(done);
    }
    stack.pop().expect("at least one row")
}

/// Parses one dump row. Rows outside the grammar become bare nodes that
/// carry the raw text as their name.
pub fn parse_line(content: &str) -> AxNode {
    parse_structured(content).unwrap_or_else(|| AxNode {
        node_id: None,
        role: String::new(),
        name: Some(content.to_string()),
        name_style: NameStyle::Bare,
        attributes: Vec::new(),
        children: Vec::new(),
        depth: 0,
    })
}

fn parse_structured(content: &str) -> Option<AxNode> {
    let role_end = content.find(char::is_whitespace).unwrap_or(content.len());
    let role = &content[..role_end];
    if role.is_empty() || role.starts_with(['[', '\'', '"']) {
        return None;
    }
    let mut node = AxNode::new(role);
    let mut rest = content[role_end..].trim_start();

    if let Some(inner_end) = rest.strip_prefix('[').and_then(|r| r.find(']')) {
        let inner = &rest[1..1 + inner_end];
        if !inner.is_empty() && inner.bytes().all(|b| b.is_ascii_digit()) {
            node.node_id = Some(inner.parse().ok()?);
            rest = rest[inner_end + 2..].trim_start();
        }
    }

    if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        let body = &rest[1..];
        let close = body
            .rmatch_indices(q)
            .map(|(i, _)| i)
            .find(|&i| attribute_tail(&body[i + 1..]).is_some());
        match close {
            Some(i) => {
                node.name = Some(body[..i].to_string());
                node.name_style = if q == '\'' {
                    NameStyle::Single
                } else {
                    NameStyle::Double
                };
                rest = &body[i + 1..];
            }
            None => {
                node.name = Some(body.to_string());
                node.name_style = if q == '\'' {
                    NameStyle::OpenSingle
                } else {
                    NameStyle::OpenDouble
                };
                rest = "";
            }
        }
    }

    node.attributes = attribute_tail(rest)?;
    Some(node)
}

/// Parses `[key: value]...` with optional surrounding whitespace.
fn attribute_tail(mut s: &str) -> Option<Vec<(String, String)>> {
    let mut attrs = Vec::new();
    loop {
        s = s.trim_start();
        if s.is_empty() {
            return Some(attrs);
        }
        let body = s.strip_prefix('[')?;
        let end = body.find(']')?;
        let inner = &body[..end];
        let (key, value) = inner.split_once(':')?;
        if key.is_empty() || key.contains('[') {
            return None;
        }
        let value = value.strip_prefix(' ').unwrap_or(value);
        attrs.push((key.to_string(), value.to_string()));
        s = &body[end + 1..];
    }
}
