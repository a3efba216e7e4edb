use axagent_core::actions::{parse_action, render_action, ActionKind, ActionSpace};
use axagent_core::ax_tree::parse_ax_tree;
use axagent_core::memory::{filter_observation, parse_highlights};
use axagent_core::obs_align::{condense_tree, interactive_ids};
use axagent_core::planning::PlanTree;
use axagent_core::runtime::response::parse_response;
use axagent_core::{synth, AgentConfig};
use proptest::prelude::*;
use proptest::sample::select;

fn kind() -> impl Strategy<Value = ActionKind> {
    select(ActionKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ax_round_trip(seed in any::<u64>(), max in 1usize..=64) {
        let tree = synth::random_tree(&mut synth::rng(seed), max);
        let text = tree.serialize();
        let back = parse_ax_tree(&text).unwrap();
        prop_assert_eq!(back.serialize(), text);
        prop_assert_eq!(back, tree);
    }

    #[test]
    fn structured_pages_round_trip(seed in any::<u64>()) {
        let page = synth::structured_page(&mut synth::rng(seed));
        let text = page.serialize();
        prop_assert_eq!(parse_ax_tree(&text).unwrap().serialize(), text);
    }

    #[test]
    fn action_round_trip(kind in kind(), seed in any::<u64>()) {
        let action = synth::random_action(&mut synth::rng(seed), kind);
        let text = render_action(&action);
        prop_assert_eq!(parse_action(&text, &ActionSpace::full()).unwrap(), action);
    }

    #[test]
    fn gating_rejects_exactly_the_disallowed(
        kind in kind(), seed in any::<u64>(),
        reduce in any::<bool>(), no_scroll in any::<bool>(), planning in any::<bool>(), multisite in any::<bool>(),
    ) {
        let space = ActionSpace::from_flags(reduce, no_scroll, planning, multisite);
        let action = synth::random_action(&mut synth::rng(seed), kind);
        let parsed = parse_action(&render_action(&action), &space);
        prop_assert_eq!(parsed.is_ok(), space.allows(kind));
    }

    #[test]
    fn condense_is_idempotent_and_keeps_interactive_ids(seed in any::<u64>(), structured in any::<bool>()) {
        let mut rng = synth::rng(seed);
        let tree = if structured { synth::structured_page(&mut rng) } else { synth::random_tree(&mut rng, 64) };
        let cfg = AgentConfig::default();
        let (once, obs) = condense_tree(&tree, &cfg);
        let (twice, _) = condense_tree(&once, &cfg);
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(&obs.interactable_ids, &interactive_ids(&tree));
        prop_assert!(obs.token_estimate <= tree.serialize().chars().count().div_ceil(4));
    }

    #[test]
    fn filter_output_is_a_subset_containing_the_pivots(seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let tree = synth::random_tree(&mut rng, 64);
        let ids = synth::pivotal_set(&mut rng, &tree);
        let kept = filter_observation(&tree, &ids);
        let kept_ids: std::collections::BTreeSet<u64> = kept.ids().collect();
        prop_assert!(kept_ids.iter().all(|id| tree.contains_id(*id)));
        for id in ids.iter().filter(|id| tree.contains_id(**id)) {
            prop_assert!(kept_ids.contains(id));
        }
        prop_assert_eq!(filter_observation(&kept, &ids), kept);
    }

    #[test]
    fn highlights_round_trip(ids in proptest::collection::vec(0u64..1_000_000, 0..12), sep in select(vec![", ", ",", " , ", "; "])) {
        let text = ids.iter().map(u64::to_string).collect::<Vec<_>>().join(sep);
        let mut expected = Vec::new();
        for id in ids {
            if !expected.contains(&id) {
                expected.push(id);
            }
        }
        prop_assert_eq!(parse_highlights(&text), expected);
    }

    #[test]
    fn response_sections_in_any_order(seed in any::<u64>(), kind in kind(), order in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let action = synth::random_action(&mut synth::rng(seed), kind);
        let line = render_action(&action);
        let sections = [
            "INTERACTION HISTORY SUMMARY:\nnothing yet".to_string(),
            "OBSERVATION DESCRIPTION:\na page with links".to_string(),
            "REASON:\nbecause".to_string(),
            format!("ACTION:\n{line}"),
            "OBSERVATION HIGHLIGHT:\n3, 1".to_string(),
        ];
        let text = order.iter().map(|&i| sections[i].as_str()).collect::<Vec<_>>().join("\n");
        let parsed = parse_response(&text, &ActionSpace::full()).unwrap();
        prop_assert_eq!(parsed.first_action(), &action);
        prop_assert_eq!(parsed.reason, "because");
        prop_assert_eq!(parsed.pivotal_ids, vec![3, 1]);
    }

    #[test]
    fn plan_ids_are_dense_and_monotonic(ops in proptest::collection::vec((any::<bool>(), 0u64..12), 0..40)) {
        let mut tree = PlanTree::new("goal").unwrap();
        let mut last = 0;
        for (is_branch, target) in ops {
            if is_branch {
                if let Ok(id) = tree.branch(target, "sub") {
                    prop_assert_eq!(id, last + 1);
                    last = id;
                }
            } else {
                let _ = tree.prune(target, "why");
            }
            prop_assert_eq!(tree.next_id(), last + 1);
            prop_assert_eq!(tree.len() as u64, last + 1);
            prop_assert_eq!(tree.render().matches("(Active Plan)").count(), 1);
        }
    }
}
