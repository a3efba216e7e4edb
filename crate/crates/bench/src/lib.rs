//! Inputs shared by the pipeline benchmarks.

use axagent_core::ax_tree::AxTree;
use axagent_core::synth;

pub const DASHBOARD: &str = include_str!("../../../fixtures/pages/magento_dashboard.ax");
pub const GOOGLE: &str = include_str!("../../../fixtures/pages/google.ax");

/// Serialized random pages of up to `max_nodes` nodes, fixed by `seed`.
pub fn random_dumps(seed: u64, count: usize, max_nodes: usize) -> Vec<String> {
    let mut rng = synth::rng(seed);
    (0..count).map(|_| synth::random_tree(&mut rng, max_nodes).serialize()).collect()
}

/// Pages with a table and a list, the shapes Markdown conversion targets.
pub fn structured_pages(seed: u64, count: usize) -> Vec<AxTree> {
    let mut rng = synth::rng(seed);
    (0..count).map(|_| synth::structured_page(&mut rng)).collect()
}

/// Random trees, each with a pivotal-id set drawn from it.
pub fn filter_cases(seed: u64, count: usize) -> Vec<(AxTree, Vec<u64>)> {
    let mut rng = synth::rng(seed);
    (0..count)
        .map(|_| {
            let tree = synth::random_tree(&mut rng, 64);
            let ids = synth::pivotal_set(&mut rng, &tree);
            (tree, ids)
        })
        .collect()
}
