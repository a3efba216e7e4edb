//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use axagent_core::actions::{parse_action, render_action, render_action_specs, ActionKind, ActionSpace};
use axagent_core::memory::filter_observation;
use axagent_core::obs_align::{condense_tree, interactive_ids, is_interactive, normalize_ws};
use axagent_core::planning::{PlanStatus, PlanTree};
use axagent_core::runtime::llm::{CompletionScript, ScriptedClient};
use axagent_core::runtime::{run_episode, PromptSet, TerminationCause};
use axagent_core::{parse_ax_tree, synth, AgentConfig, ReplayEnvironment, Trajectory};
use common::*;
use rand::Rng;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("ax round-trip", c1_round_trip),
        ("pivotal filter oracle", c2_filter_oracle),
        ("google history block", c3_google_block),
        ("condensation safety", c4_condense_corpus),
        ("action round-trip and gating", c5_actions),
        ("plan tree fuzz", c6_plan_fuzz),
        ("history scoping", c7_scoping),
        ("determinism", c8_determinism),
        ("judge pipeline", c9_judge),
        ("end-to-end demo", c10_demo),
    ];
    let suite = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({ms} ms): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({ms} ms): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.2?}", criteria.len() - failed, suite.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:.2?}, limit {limit:?}", start.elapsed()))
}

fn read(rel: &str) -> String {
    fs::read_to_string(fixtures().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Dump line reduced to depth, id, role and name, parsed straight from text.
#[derive(Debug, Clone)]
struct Row {
    depth: usize,
    id: Option<u64>,
    role: String,
    name: String,
    text: String,
}

fn rows(dump: &str) -> Vec<Row> {
    dump.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let depth = line.chars().take_while(|&c| c == '\t').count();
            let body = &line[depth..];
            let role = body.split(' ').next().unwrap_or("").to_string();
            let mut rest = body[role.len()..].trim_start();
            let mut id = None;
            if let Some((n, r)) = rest.strip_prefix('[').and_then(|r| r.split_once(']')) {
                if let Ok(n) = n.parse() {
                    id = Some(n);
                    rest = r.trim_start();
                }
            }
            let name = match rest.chars().next() {
                Some(q @ ('\'' | '"')) => rest[1..].split(q).next().unwrap_or("").to_string(),
                _ => String::new(),
            };
            Row {
                depth,
                id,
                role,
                name,
                text: line.to_string(),
            }
        })
        .collect()
}

fn parent_of(rows: &[Row], i: usize) -> Option<usize> {
    (0..i).rev().find(|&j| rows[j].depth < rows[i].depth)
}

fn subtree_end(rows: &[Row], i: usize) -> usize {
    (i + 1..rows.len()).find(|&j| rows[j].depth <= rows[i].depth).unwrap_or(rows.len())
}

fn c1_round_trip() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = synth::rng(1);
    let mut failures = 0;
    for _ in 0..1_000 {
        let tree = synth::random_tree(&mut rng, 64);
        let text = tree.serialize();
        match parse_ax_tree(&text) {
            Ok(back) if back == tree && back.serialize() == text => {}
            _ => failures += 1,
        }
    }
    let golden = read("pages/magento_dashboard.ax");
    let parsed = parse_ax_tree(&golden).map_err(|e| e.to_string())?;
    if parsed.serialize() != golden.trim_end() {
        failures += 1;
    }
    ensure(failures == 0, || format!("{failures} failures"))?;
    within(start, Duration::from_secs(5))?;
    Ok("1000 random trees + dashboard fixture, 0 failures".into())
}

fn c2_filter_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = synth::rng(2);
    for case in 0..1_000 {
        let tree = synth::random_tree(&mut rng, 64);
        let ids = synth::pivotal_set(&mut rng, &tree);
        let rs = rows(&tree.serialize());
        let mut keep = BTreeSet::from([0usize]);
        for &id in &ids {
            let Some(i) = rs.iter().position(|r| r.id == Some(id)) else { continue };
            keep.insert(i);
            let mut a = parent_of(&rs, i);
            while let Some(p) = a {
                keep.insert(p);
                a = parent_of(&rs, p);
            }
            if let Some(p) = parent_of(&rs, i) {
                keep.extend((p + 1..subtree_end(&rs, p)).filter(|&j| rs[j].depth == rs[i].depth));
            }
            keep.extend(i + 1..subtree_end(&rs, i));
        }
        let expected: BTreeSet<&str> = keep.iter().map(|&i| rs[i].text.as_str()).collect();
        let got_text = filter_observation(&tree, &ids).serialize();
        let got: BTreeSet<&str> = got_text.lines().collect();
        ensure(got == expected && got_text.lines().count() == keep.len(), || {
            format!("case {case}: ids {ids:?} differ")
        })?;
    }
    within(start, Duration::from_secs(10))?;
    Ok("1000 cases, exact set equality".into())
}

fn c3_google_block() -> Result<String, String> {
    let expected = "RootWebArea 'Google'
\tsearch
\t\tcombobox 'Search' [required: False]
\t\tbutton 'Search by voice'
\t\tbutton 'Search by image'
\t\tbutton 'Google Search'
\t\tbutton \"I'm Feeling Lucky\"";
    let cfg = AgentConfig::default();
    let mut env = ReplayEnvironment::load(&fixtures().join("google/snapshots.toml")).map_err(|e| e.to_string())?;
    let llm = ScriptedClient::new(CompletionScript::load(&fixtures().join("google/script.toml"))?);
    let t = run_episode(&cfg, &PromptSet::default(), &mut env, &llm, "dean", "What is the email address of the Dean?")
        .map_err(|e| e.to_string())?;
    ensure(t.steps()[0].pivotal_ids() == [12, 272], || format!("pivotal {:?}", t.steps()[0].pivotal_ids()))?;
    // The block as it appears in the next prompt.
    let prompt = &llm.prompts()[1];
    let block = prompt
        .split("<step_0_interaction>\nOBSERVATION:\n")
        .nth(1)
        .and_then(|r| r.split("\nREASON FOR ACTION:").next())
        .ok_or("no step_0 block in the second prompt")?;
    let multiset = |s: &str| {
        let mut m = BTreeMap::new();
        for l in s.lines() {
            *m.entry(l.to_string()).or_insert(0) += 1;
        }
        m
    };
    ensure(multiset(block) == multiset(expected), || format!("block was\n{block}"))?;
    ensure(block == expected, || "same nodes, different order".into())?;
    Ok("7 retained nodes match".into())
}

/// Whether the raw page holds a text node repeating its parent's label or an
/// adjacent interactive sibling's label, or any grid cells.
fn has_redundancy(rs: &[Row]) -> bool {
    rs.iter().enumerate().any(|(i, r)| {
        if r.role == "gridcell" {
            return true;
        }
        if !(r.role == "StaticText" || r.role == "text") || r.name.trim().is_empty() {
            return false;
        }
        let label = normalize_ws(&r.name);
        let Some(p) = parent_of(rs, i) else { return false };
        if normalize_ws(&rs[p].name) == label {
            return true;
        }
        let sibs: Vec<usize> = (p + 1..subtree_end(rs, p)).filter(|&j| rs[j].depth == r.depth).collect();
        let pos = sibs.iter().position(|&j| j == i).unwrap();
        [pos.checked_sub(1), Some(pos + 1)]
            .into_iter()
            .flatten()
            .filter_map(|k| sibs.get(k))
            .any(|&j| is_interactive(&rs[j].role) && normalize_ws(&rs[j].name) == label)
    })
}

fn c4_condense_corpus() -> Result<String, String> {
    let dir = fixtures().join("pages/corpus");
    let mut paths: Vec<_> = fs::read_dir(&dir).map_err(|e| e.to_string())?.map(|e| e.unwrap().path()).collect();
    paths.sort();
    ensure(paths.len() >= 10, || format!("only {} pages", paths.len()))?;
    let cfg = AgentConfig::default();
    let mut decreased = 0;
    for path in &paths {
        let name = path.file_name().unwrap().to_string_lossy();
        let raw = fs::read_to_string(path).unwrap();
        let tree = parse_ax_tree(&raw).map_err(|e| format!("{name}: {e}"))?;
        let (once, obs) = condense_tree(&tree, &cfg);
        ensure(obs.interactable_ids == interactive_ids(&tree), || format!("{name}: interactive ids changed"))?;
        let before = tree.serialize().chars().count().div_ceil(4);
        if has_redundancy(&rows(&raw)) {
            ensure(obs.token_estimate < before, || format!("{name}: {before} -> {}", obs.token_estimate))?;
            decreased += 1;
        }
        let (twice, _) = condense_tree(&once, &cfg);
        ensure(twice == once, || format!("{name}: not idempotent"))?;
    }
    Ok(format!("{} pages, {decreased} with redundancy all shrank", paths.len()))
}

/// Combination index = reduce*8 + disable_scroll*4 + planning*2 + multisite.
const MEMBERSHIP: &[(ActionKind, &str)] = &[
    (ActionKind::Click, "1111111111111111"),
    (ActionKind::Type, "1111111111111111"),
    (ActionKind::Hover, "1111111100000000"),
    (ActionKind::Press, "1111111100000000"),
    (ActionKind::Scroll, "1111000011110000"),
    (ActionKind::Noop, "1111111100000000"),
    (ActionKind::TabFocus, "1111111100000000"),
    (ActionKind::NewTab, "1111111100000000"),
    (ActionKind::TabClose, "1111111100000000"),
    (ActionKind::GoBack, "1111111111111111"),
    (ActionKind::GoForward, "1111111100000000"),
    (ActionKind::Goto, "1111111100000000"),
    (ActionKind::Note, "0000000011111111"),
    (ActionKind::Stop, "1111111111111111"),
    (ActionKind::GoHome, "0000000001010101"),
    (ActionKind::Branch, "0011001100110011"),
    (ActionKind::Prune, "0011001100110011"),
];

fn c5_actions() -> Result<String, String> {
    let mut rng = synth::rng(5);
    let full = ActionSpace::full();
    for kind in ActionKind::ALL {
        for _ in 0..1_000 {
            let a = synth::random_action(&mut rng, kind);
            let text = render_action(&a);
            ensure(parse_action(&text, &full).as_ref() == Ok(&a), || format!("round-trip failed for `{text}`"))?;
        }
    }
    ensure(MEMBERSHIP.len() == ActionKind::ALL.len(), || "table incomplete".into())?;
    for combo in 0..16u8 {
        let (reduce, no_scroll, planning, multisite) = (combo & 8 != 0, combo & 4 != 0, combo & 2 != 0, combo & 1 != 0);
        let space = ActionSpace::from_flags(reduce, no_scroll, planning, multisite);
        for (kind, row) in MEMBERSHIP {
            let want = row.as_bytes()[combo as usize] == b'1';
            ensure(space.allows(*kind) == want, || format!("{kind:?} at combo {combo:04b}"))?;
        }
        if !planning {
            let cfg = AgentConfig {
                reduce_actions: reduce,
                disable_scroll: no_scroll,
                planning,
                multisite,
                ..AgentConfig::default()
            };
            let specs = render_action_specs(&cfg);
            let text = format!("{}\n{}", specs.planning, specs.navigation);
            ensure(!text.contains("branch") && !text.contains("prune"), || format!("combo {combo:04b} leaks planning"))?;
        }
    }
    Ok("17000 round-trips, 16x17 membership matrix".into())
}

fn c6_plan_fuzz() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = synth::rng(6);
    for seq in 0..10_000 {
        let mut tree = PlanTree::new("goal").unwrap();
        let mut parent: Vec<Option<usize>> = vec![None];
        let mut active = 0usize;
        let is_desc = |parent: &[Option<usize>], mut x: usize, of: usize| loop {
            if x == of {
                return true;
            }
            match parent[x] {
                Some(p) => x = p,
                None => return false,
            }
        };
        for _ in 0..rng.random_range(1..25) {
            let target = rng.random_range(0..parent.len() + 1);
            if rng.random_bool(0.6) {
                if let Ok(id) = tree.branch(target as u64, "sub") {
                    ensure(id as usize == parent.len(), || format!("seq {seq}: id {id} not monotonic"))?;
                    parent.push(Some(target));
                    active = id as usize;
                }
            } else if tree.prune(target as u64, "why").is_ok() {
                active = target;
            }
            // Invariants, checked by walking the whole tree.
            let actives = tree.nodes().filter(|n| n.plan_id == tree.active_id()).count();
            ensure(actives == 1 && tree.active_id() as usize == active, || format!("seq {seq}: active"))?;
            ensure(tree.get(active as u64).unwrap().status == PlanStatus::Live, || format!("seq {seq}: active pruned"))?;
            for n in tree.nodes().filter(|n| n.status == PlanStatus::Pruned) {
                for m in tree.nodes() {
                    if is_desc(&parent, m.plan_id as usize, n.plan_id as usize) {
                        ensure(m.status == PlanStatus::Pruned, || format!("seq {seq}: closure broken at {}", m.plan_id))?;
                    }
                }
            }
            let render = tree.render();
            ensure(render.matches("(Active Plan)").count() == 1, || format!("seq {seq}: render\n{render}"))?;
        }
    }
    within(start, Duration::from_secs(10))?;
    Ok("10000 sequences".into())
}

fn demo_completions() -> Vec<String> {
    let script = CompletionScript::load(&fixtures().join("demo/script.toml")).unwrap();
    script.completions.into_iter().map(|c| c.text).collect()
}

fn action_of(completion: &str) -> &str {
    completion
        .lines()
        .find_map(|l| l.strip_prefix("Action: "))
        .unwrap_or("")
}

fn run_in_process(cfg: &AgentConfig, snapshots: &str, texts: Vec<String>) -> (Trajectory, Vec<String>) {
    let mut env = ReplayEnvironment::load(&fixtures().join(snapshots)).unwrap();
    let llm = ScriptedClient::from_texts(texts);
    let t = run_episode(cfg, &PromptSet::default(), &mut env, &llm, "t", DEMO_OBJECTIVE).unwrap();
    (t, llm.prompts())
}

fn step_tags(prompt: &str) -> BTreeSet<usize> {
    let history = prompt
        .split("INTERACTION HISTORY:\n")
        .nth(1)
        .and_then(|r| r.split("\n\nCURRENT OBSERVATION:").next())
        .unwrap_or("");
    history
        .match_indices("<step_")
        .filter_map(|(i, _)| history[i + 6..].split('_').next()?.parse().ok())
        .collect()
}

fn c7_scoping() -> Result<String, String> {
    // The demo script without its third branch: plans 0 > 1 > 2.
    let texts: Vec<String> = demo_completions()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != 6)
        .map(|(_, t)| t)
        .collect();
    let branches = texts.iter().filter(|t| action_of(t).starts_with("branch")).count();
    ensure(branches == 2, || format!("{branches} branches"))?;
    let cfg = AgentConfig::load(&fixtures().join("demo/config.toml")).unwrap();
    let (t, prompts) = run_in_process(&cfg, "demo/snapshots.toml", texts);
    ensure(t.outcome.cause == TerminationCause::Stopped, || format!("{:?}", t.outcome))?;
    ensure(prompts.len() == t.step_logs.len(), || "corrective prompts present".into())?;
    let mut checked = 0;
    for (k, prompt) in prompts.iter().enumerate() {
        let active = t.step_logs[k].plan_id;
        let expected: BTreeSet<usize> = t.step_logs[..k]
            .iter()
            .filter(|s| s.plan_id == active)
            .map(|s| s.step_index)
            .collect();
        let found = step_tags(prompt);
        ensure(found == expected, || format!("step {k} (plan {active}): history {found:?}, expected {expected:?}"))?;
        checked += found.len();
    }
    let last = step_tags(prompts.last().unwrap());
    ensure(last == BTreeSet::from([3, 4, 5, 6]), || format!("final history {last:?}"))?;
    Ok(format!("{} prompts scanned, {checked} replayed blocks all on the active plan", prompts.len()))
}

fn c8_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let script = fixtures().join("demo/script.toml");
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for out in [&a, &b] {
        let o = run_demo(out, &script);
        ensure(o.status.success(), || stderr(&o))?;
    }
    ensure(fs::read(&a).unwrap() == fs::read(&b).unwrap(), || "logs differ".into())?;

    // A script with notes, branches and a prune.
    let demo = demo_completions();
    let note = "Reason: Keep the search term.\nAction: note [searching issues for feature]\nObservation Highlight: 57".to_string();
    let prune = "Reason: Go back to the navigation plan.\nAction: prune [1] [Sorting is enough for now.]\nObservation Highlight:".to_string();
    let mut mixed = demo.clone();
    mixed.insert(2, note.clone());
    mixed.insert(6, prune);
    mixed.insert(7, note);
    let cfg = AgentConfig::load(&fixtures().join("demo/config.toml")).unwrap();
    let mut compared = 0;
    for texts in [demo, mixed] {
        let planning_free: Vec<String> = texts
            .iter()
            .filter(|t| !["branch", "prune", "note"].iter().any(|v| action_of(t).starts_with(v)))
            .cloned()
            .collect();
        let (full, _) = run_in_process(&cfg, "demo/snapshots.toml", texts);
        let (bare, _) = run_in_process(&cfg, "demo/snapshots.toml", planning_free);
        ensure(full.outcome.cause == TerminationCause::Stopped, || format!("{:?}", full.outcome))?;
        ensure(full.step_logs.iter().all(|s| !s.corrective), || "a scripted step was rejected".into())?;
        ensure(full.env_trace == bare.env_trace, || format!("{:?} vs {:?}", full.env_trace, bare.env_trace))?;
        compared += 1;
    }
    Ok(format!("byte-identical logs; {compared} scripts keep their state sequence without planning/note steps"))
}

fn c9_judge() -> Result<String, String> {
    let snapshots = r#"
start = "a"
[[state]]
id = "a"
ax_dump = "RootWebArea [1] 'A'\n\tlink [2] 'to b'\n\tlink [3] 'stay'"
[[state.transition]]
action = "click [2]"
to = "b"
[[state]]
id = "b"
ax_dump = "RootWebArea [1] 'B'\n\tlink [2] 'stay'\n\tlink [3] 'to c'"
[[state.transition]]
action = "click [3]"
to = "c"
[[state]]
id = "c"
ax_dump = "RootWebArea [1] 'C'\n\tStaticText [4] 'answer 42'"
"#;
    let actor = |a: &str, b: &str| format!("Reason: options.\nAction:\n{a}\n{b}\nObservation Highlight: 1");
    let judge = |n: &str| format!("Plan progress assessment: fine.\nAction assessment: fine.\nAction selection: {n}");
    let texts = vec![
        actor("click [3]", "click [2]"),
        judge("1"),
        actor("click [3]", "click [2]"),
        judge("7"),
        actor("stop [42]", "click [1]"),
        judge("0"),
    ];
    let cfg = AgentConfig {
        judge: true,
        ..AgentConfig::default()
    };
    let mut env = ReplayEnvironment::from_toml_str(snapshots).map_err(|e| e.to_string())?;
    let llm = ScriptedClient::from_texts(texts);
    let t = run_episode(&cfg, &PromptSet::default(), &mut env, &llm, "judge", "find the answer")
        .map_err(|e| e.to_string())?;
    let actions: Vec<_> = t.step_logs.iter().map(|s| s.action.clone().unwrap_or_default()).collect();
    ensure(actions == ["click [2]", "click [3]", "stop [42]"], || format!("actions {actions:?}"))?;
    let fallbacks: Vec<bool> = t.step_logs.iter().map(|s| s.judge_fallback).collect();
    ensure(fallbacks == [false, true, false], || format!("fallbacks {fallbacks:?}"))?;
    ensure(t.step_logs.iter().all(|s| s.llm_calls == 2 && s.candidates == 2), || {
        format!("{:?}", t.step_logs.iter().map(|s| (s.llm_calls, s.candidates)).collect::<Vec<_>>())
    })?;
    ensure(t.llm_calls == 6 && llm.call_count() == 6, || format!("{} calls", t.llm_calls))?;
    ensure(t.env_trace == ["a", "b", "c"], || format!("trace {:?}", t.env_trace))?;
    ensure(llm.prompts()[1].contains("- action [1]: click [2]"), || "judge prompt lacks candidates".into())?;
    ensure(t.outcome.answer.as_deref() == Some("42"), || format!("{:?}", t.outcome))?;
    Ok("selection, fallback and 2 calls per step over 3 steps".into())
}

fn c10_demo() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("demo.jsonl");
    let out = run_demo(&log, &fixtures().join("demo/script.toml"));
    ensure(out.status.code() == Some(0), || format!("exit {:?}: {}", out.status.code(), stderr(&out)))?;
    let text = stdout(&out);
    ensure(text.contains("cause: stopped") && text.contains("answer: "), || text.clone())?;
    let cfg = AgentConfig::load(&fixtures().join("demo/config.toml")).unwrap();
    let steps = fs::read_to_string(&log).unwrap().lines().count() - 1;
    ensure(steps <= cfg.max_steps, || format!("{steps} steps"))?;
    Ok(format!("stopped after {steps} of at most {} steps, exit 0", cfg.max_steps))
}
