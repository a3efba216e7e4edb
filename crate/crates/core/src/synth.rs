//! Seeded generators for pages and actions, used by tests and benchmarks.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actions::{Action, ActionKind, ScrollDirection};
use crate::ax_tree::{AxNode, AxTree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ROLES: &[&str] = &[
    "generic", "StaticText", "link", "button", "textbox", "heading", "img", "list", "listitem", "main",
    "navigation", "combobox", "checkbox", "table", "row", "gridcell", "columnheader", "LineBreak", "paragraph",
    "group", "tab", "option", "menuitem", "searchbox",
];
const WORDS: &[&str] = &[
    "Issues", "open", "merge", "request", "Total", "$10.00", "a11y", "Dean's", "email", "Search", "Next",
    "page", "3/14/2024", "Magento", "order", "#174", "status:", "--", "Rev.", "x", "é", "naïve", "100%",
];
const ATTRS: &[(&str, &[&str])] = &[
    ("focused", &["True"]),
    ("required", &["False", "True"]),
    ("expanded", &["True", "False"]),
    ("level", &["1", "2", "3"]),
    ("url", &["http://localhost:8023/issues", "https://example.com/a?b=c"]),
    ("hasPopup", &["menu", "listbox"]),
];

/// A short phrase of 1 to 4 words. Never contains brackets, tabs or
/// newlines, and never both quote characters.
pub fn phrase<R: Rng + ?Sized>(rng: &mut R) -> String {
    let n = rng.random_range(1..=4);
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Free text for action arguments: may contain balanced brackets.
pub fn free_text<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut s = phrase(rng);
    if rng.random_bool(0.2) {
        s = format!("{s} [{}]", phrase(rng));
    }
    if rng.random_bool(0.1) {
        s.push_str(" \"quoted\" 'too'");
    }
    s
}

fn random_node<R: Rng + ?Sized>(rng: &mut R, next_id: &mut u64) -> AxNode {
    let role = *ROLES.choose(rng).expect("non-empty");
    let mut node = AxNode::new(role);
    if rng.random_bool(0.85) {
        *next_id += rng.random_range(1..=7);
        node.node_id = Some(*next_id);
    }
    if rng.random_bool(0.75) {
        node = node.with_name(phrase(rng));
    } else if rng.random_bool(0.1) {
        node = node.with_name("");
    }
    if rng.random_bool(0.25) {
        let (key, values) = ATTRS.choose(rng).expect("non-empty");
        node = node.with_attr(*key, *values.choose(rng).expect("non-empty"));
    }
    node
}

/// A random page with at most `max_nodes` nodes (at least 1). Ids, where
/// present, are unique and increase in document order.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> AxTree {
    let total = rng.random_range(1..=max_nodes.max(1));
    let mut next_id = 0u64;
    let mut root = AxNode::new("RootWebArea").with_id({
        next_id += 1;
        next_id
    });
    if rng.random_bool(0.8) {
        root = root.with_name(phrase(rng));
    }
    // Build as a flat arena of (node, parent) then fold into nesting.
    let mut nodes = vec![root];
    let mut parents: Vec<Option<usize>> = vec![None];
    for _ in 1..total {
        let parent = if rng.random_bool(0.6) {
            nodes.len() - 1
        } else {
            rng.random_range(0..nodes.len())
        };
        nodes.push(random_node(rng, &mut next_id));
        parents.push(Some(parent));
    }
    // Children always come after parents, so fold from the back.
    let mut slots: Vec<Option<AxNode>> = nodes.into_iter().map(Some).collect();
    let mut kids: Vec<Vec<AxNode>> = vec![Vec::new(); slots.len()];
    for i in (0..slots.len()).rev() {
        let mut node = slots[i].take().expect("visited once");
        let mut children = std::mem::take(&mut kids[i]);
        children.reverse();
        node.children = children;
        match parents[i] {
            Some(p) => kids[p].push(node),
            None => return AxTree::new(node).expect("generated ids are unique"),
        }
    }
    unreachable!("root is index 0")
}

/// A page with the structures condensation rewrites: duplicated text under
/// links, a data table and a list.
pub fn structured_page<R: Rng + ?Sized>(rng: &mut R) -> AxTree {
    let mut id = 100u64;
    let mut next = || {
        id += 1;
        id
    };
    let mut main = AxNode::new("main").with_id(next());
    for _ in 0..rng.random_range(1..=4) {
        let label = phrase(rng);
        main.children.push(
            AxNode::new("link")
                .with_id(next())
                .with_name(label.clone())
                .with_child(AxNode::new("StaticText").with_id(next()).with_name(label)),
        );
    }
    let cols = rng.random_range(1..=4);
    let mut table = AxNode::new("table").with_id(next()).with_name("Data");
    let mut header = AxNode::new("row").with_id(next());
    for _ in 0..cols {
        header.children.push(AxNode::new("columnheader").with_id(next()).with_name(phrase(rng)));
    }
    table.children.push(header);
    for _ in 0..rng.random_range(1..=5) {
        let mut row = AxNode::new("row").with_id(next());
        for c in 0..cols {
            let mut cell = AxNode::new("gridcell").with_id(next()).with_name(phrase(rng));
            if c == 0 && rng.random_bool(0.4) {
                cell.children.push(AxNode::new("link").with_id(next()).with_name(phrase(rng)));
            }
            row.children.push(cell);
        }
        table.children.push(row);
    }
    main.children.push(table);
    let mut list = AxNode::new("list").with_id(next());
    for _ in 0..rng.random_range(0..=3) {
        list.children.push(
            AxNode::new("listitem")
                .with_id(next())
                .with_child(AxNode::new("StaticText").with_id(next()).with_name(phrase(rng))),
        );
    }
    main.children.push(list);
    let root = AxNode::new("RootWebArea").with_id(1).with_name("Dashboard").with_child(main);
    AxTree::new(root).expect("generated ids are unique")
}

/// A random pivotal-id set: some ids from the tree plus occasional unknowns.
pub fn pivotal_set<R: Rng + ?Sized>(rng: &mut R, tree: &AxTree) -> Vec<u64> {
    let mut ids: Vec<u64> = tree.ids().collect();
    ids.shuffle(rng);
    let take = rng.random_range(0..=ids.len().min(5));
    let mut out: Vec<u64> = ids.into_iter().take(take).collect();
    if rng.random_bool(0.2) {
        out.push(1_000_000 + rng.next_u64() % 1000);
    }
    out
}

/// A random action of the given kind. Free-text arguments may contain
/// balanced brackets and quotes.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, kind: ActionKind) -> Action {
    let id = rng.random_range(0..100_000u64);
    match kind {
        ActionKind::Click => Action::Click { id },
        ActionKind::Hover => Action::Hover { id },
        ActionKind::Type => Action::Type {
            id,
            content: free_text(rng),
            press_enter: rng.random_bool(0.5),
        },
        ActionKind::Press => Action::Press {
            key_combo: ["Enter", "Ctrl+a", "Meta+Shift+t", "PageDown"].choose(rng).expect("non-empty").to_string(),
        },
        ActionKind::Scroll => Action::Scroll {
            direction: if rng.random_bool(0.5) { ScrollDirection::Up } else { ScrollDirection::Down },
        },
        ActionKind::Noop => Action::Noop,
        ActionKind::TabFocus => Action::TabFocus { index: rng.random_range(0..10) },
        ActionKind::NewTab => Action::NewTab,
        ActionKind::TabClose => Action::TabClose,
        ActionKind::GoBack => Action::GoBack,
        ActionKind::GoForward => Action::GoForward,
        ActionKind::Goto => Action::Goto {
            url: format!("http://localhost:{}/{}", rng.random_range(7770..7790), rng.random_range(0..1000)),
        },
        ActionKind::Note => Action::Note { content: free_text(rng) },
        ActionKind::Stop => Action::Stop { answer: free_text(rng) },
        ActionKind::GoHome => Action::GoHome,
        ActionKind::Branch => Action::Branch {
            parent_plan_id: rng.random_range(0..50),
            intent: free_text(rng),
        },
        ActionKind::Prune => Action::Prune {
            resume_plan_id: rng.random_range(0..50),
            reason: free_text(rng),
        },
    }
}
