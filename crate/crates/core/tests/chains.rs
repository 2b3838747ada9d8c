mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use common::*;
use proptest::prelude::*;
use redist_core::chains::{
    balanced_tree_cut, qualifying_cuts, random_spanning_tree, run_chain, Chain, ChainConfig,
    Proposal, StepOutcome,
};
use redist_core::config::RunSettings;
use redist_core::graph::{load_graph, unit_grid};
use redist_core::metrics::{MetricOptions, PlanEvaluator};
use redist_core::partition::{canonical_hash, Plan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn config_file_drives_a_chain_with_one_record_per_step() {
    let g = load_graph(fixture("grid4x4.json")).unwrap();
    let settings = RunSettings::load(fixture("run.cfg")).unwrap();
    let cfg = settings.chain_config(&g, Some(2), None).unwrap();
    assert_eq!(cfg.steps, 100);
    let ev = PlanEvaluator::new(&g, g.elections(), 2, MetricOptions::default()).unwrap();
    let mut records = Vec::new();
    let stats = run_chain(&g, &cfg, 0, &ev, &mut records).unwrap();
    assert_eq!(records.len(), 100);
    assert_eq!(stats.accepted + stats.rejected + stats.failed, 100);
    assert!(records.iter().enumerate().all(|(i, r)| r.step == i as u64 + 1));
    assert!(records.iter().all(|r| r.elections.len() == 2));
}

#[test]
fn rejected_steps_repeat_the_current_plan() {
    // At 1% on a unit 6x6 grid every flip unbalances two districts.
    let g = unit_grid(6, 6);
    let start = Plan::new((0..36).map(|i| ((i / 6 >= 3) as u32) * 2 + (i % 6 >= 3) as u32).collect(), 4).unwrap();
    let cfg = ChainConfig::new(Proposal::UniformFlip, 50, 3, start.clone());
    let ev = PlanEvaluator::new(&g, g.elections(), 4, MetricOptions::default()).unwrap();
    let mut records = Vec::new();
    let stats = run_chain(&g, &cfg, 0, &ev, &mut records).unwrap();
    assert_eq!(stats.accepted, 0);
    assert_eq!(records.len(), 50);
    assert!(records.iter().all(|r| r.plan_hash == canonical_hash(&start)));
}

#[test]
fn flip_successors_differ_in_one_node() {
    let g = unit_grid(4, 4);
    let start = Plan::new((0..16).map(|i| u32::from(i % 4 >= 2)).collect(), 2).unwrap();
    let mut cfg = ChainConfig::new(Proposal::WeightedFlip, 1, 8, start);
    cfg.pop_tolerance = 0.3;
    cfg.gibbs_beta = 0.7;
    let mut chain = Chain::new(&g, cfg, 0).unwrap();
    for _ in 0..5_000 {
        let before = chain.plan().clone();
        if chain.step().unwrap() == StepOutcome::Accepted {
            let diff = before.assignment().iter().zip(chain.plan().assignment()).filter(|(a, b)| a != b).count();
            assert_eq!(diff, 1);
        }
        let a = chain.plan().assignment();
        assert!(contiguous(&g, a, 2) && population_ok(&g, a, 2, 0.3));
    }
}

#[test]
fn recom_reaches_every_balanced_plan_on_small_grid() {
    let g = unit_grid(3, 4);
    let oracle = enumerate_plans(&g, 2, 0.01);
    let start = Plan::new((0..12).map(|i| u32::from(i % 4 >= 2)).collect(), 2).unwrap();
    let mut chain = Chain::new(&g, ChainConfig::new(Proposal::Recom, 1, 4, start), 0).unwrap();
    let mut seen = BTreeSet::new();
    for _ in 0..20_000 {
        chain.step().unwrap();
        seen.insert(canonical(chain.plan().assignment()));
    }
    assert_eq!(seen, oracle);
}

#[test]
fn tree_cuts_are_balanced() {
    let g = unit_grid(4, 4);
    let region: Vec<usize> = (0..16).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let tree = random_spanning_tree(&g, &region, &mut rng).unwrap();
        assert_eq!(tree.edges().len(), 15);
        for &cut in &qualifying_cuts(&tree, 8.0, 0.01) {
            let (a, b) = tree.split_at(cut);
            assert_eq!((a.len(), b.len()), (8, 8));
        }
        if let Some((a, b)) = balanced_tree_cut(&tree, 0.01, &mut rng) {
            let mut both: Vec<usize> = a.iter().chain(&b).copied().collect();
            both.sort_unstable();
            assert_eq!(both, region);
            let labels: Vec<u32> = (0..16).map(|v| u32::from(b.contains(&v))).collect();
            assert!(contiguous(&g, &labels, 2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn recom_chain_never_leaves_the_valid_set(seed in any::<u64>()) {
        let g = unit_grid(6, 6);
        let start = Plan::new((0..36).map(|i| ((i / 6 >= 3) as u32) * 2 + (i % 6 >= 3) as u32).collect(), 4).unwrap();
        let mut chain = Chain::new(&g, ChainConfig::new(Proposal::Recom, 1, seed, start), 0).unwrap();
        for _ in 0..200 {
            chain.step().unwrap();
            let a = chain.plan().assignment();
            prop_assert!(contiguous(&g, a, 4));
            prop_assert!(population_ok(&g, a, 4, 0.01));
        }
    }

    #[test]
    fn spanning_trees_span_the_region(seed in any::<u64>(), rows in 1usize..5, cols in 1usize..5) {
        let g = unit_grid(rows, cols);
        let region: Vec<usize> = (0..rows * cols).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_spanning_tree(&g, &region, &mut rng).unwrap();
        prop_assert_eq!(tree.edges().len(), region.len() - 1);
        // n - 1 edges and connected => acyclic.
        let labels = vec![0u32; region.len()];
        let sub = redist_core::graph::DualGraph::new(
            g.elections().to_vec(),
            g.nodes().to_vec(),
            tree.edges().iter().map(|&(a, b)| (g.node(a).id.clone(), g.node(b).id.clone(), 1)).collect(),
        ).unwrap();
        prop_assert!(contiguous(&sub, &labels, 1));
    }
}
