//! Spanning-tree recombination.
use rand::Rng;

use super::tree::{balanced_tree_cut_to, random_spanning_tree};
use super::Constraints;
use crate::error::Result;
use crate::graph::DualGraph;
use crate::partition::{cut_edges, Plan};

/// Fresh trees drawn per proposal before giving up.
pub const DEFAULT_TREE_ATTEMPTS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub enum RecomOutcome {
    Accepted(Plan),
    /// A split was found but broke the cut-edge bound.
    Rejected,
    /// No balanced cut in any of the drawn trees.
    Failed,
}

/// Merges the two districts on either side of a uniformly chosen cut edge
/// and redraws them by cutting a random spanning tree of the union.
///
/// Both new districts must lie within `pop_tolerance` of the statewide
/// ideal. The part holding the lowest-numbered node keeps the smaller label.
pub fn propose_recom<R: Rng + ?Sized>(
    graph: &DualGraph,
    plan: &Plan,
    constraints: &Constraints,
    attempts: usize,
    rng: &mut R,
) -> Result<RecomOutcome> {
    let cut: Vec<usize> = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| plan.district_of(e.a) != plan.district_of(e.b))
        .map(|(i, _)| i)
        .collect();
    if cut.is_empty() {
        return Ok(RecomOutcome::Failed);
    }
    let edge = graph.edges()[cut[rng.random_range(0..cut.len())]];
    let (da, db) = (plan.district_of(edge.a), plan.district_of(edge.b));
    let (lo, hi) = (da.min(db), da.max(db));
    let region: Vec<usize> = (0..graph.node_count())
        .filter(|&v| {
            let d = plan.district_of(v);
            d == da || d == db
        })
        .collect();
    let ideal = graph.total_population() as f64 / plan.k() as f64;

    for _ in 0..attempts {
        let tree = random_spanning_tree(graph, &region, rng)?;
        let Some((a, b)) = balanced_tree_cut_to(&tree, ideal, constraints.pop_tolerance, rng) else {
            continue;
        };
        let (first, second) = if a[0] < b[0] { (a, b) } else { (b, a) };
        let mut next = plan.clone();
        for &v in &first {
            next.set(v, lo);
        }
        for &v in &second {
            next.set(v, hi);
        }
        if let Some(bound) = constraints.cut_edge_bound {
            if cut_edges(graph, &next) > bound {
                return Ok(RecomOutcome::Rejected);
            }
        }
        return Ok(RecomOutcome::Accepted(next));
    }
    Ok(RecomOutcome::Failed)
}
