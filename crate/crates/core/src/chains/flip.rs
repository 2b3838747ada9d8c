//! Single-node flip proposals.
//!
//! A proposal picks a cut edge uniformly and moves one of its endpoints (by a
//! fair coin) into the other endpoint's district. The acceptance test is
//! Metropolis-Hastings against the Gibbs weight `exp(-beta * cut_edges)`,
//! including the proposal-probability ratio, so `beta = 0` targets the
//! uniform distribution on valid plans.
use rand::Rng;

use super::Constraints;
use crate::graph::DualGraph;
use crate::partition::{cut_edges, district_connected, district_populations, within_tolerance, Plan};

/// A flip that passed the constraints, before the Metropolis test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipMove {
    pub node: usize,
    pub from: usize,
    pub to: usize,
    /// Neighbors of `node` in `from` (excluding itself) and in `to`.
    pub neighbors_from: usize,
    pub neighbors_to: usize,
    pub cut_before: usize,
}

impl FlipMove {
    pub fn cut_after(&self) -> usize {
        self.cut_before + self.neighbors_from - self.neighbors_to
    }

    /// `exp(-beta * dJ) * q(reverse) / q(forward)`, where `J` is the cut-edge count.
    pub fn acceptance_ratio(&self, beta: f64) -> f64 {
        let delta = self.neighbors_from as f64 - self.neighbors_to as f64;
        let hastings = (self.neighbors_from * self.cut_before) as f64
            / (self.neighbors_to * self.cut_after()) as f64;
        (-beta * delta).exp() * hastings
    }
}

/// Draws a flip and checks it against the constraints. Always consumes the
/// same three random draws (edge, endpoint, acceptance uniform) so that
/// chains sharing a stream stay aligned.
pub(crate) fn draw_flip<R: Rng + ?Sized>(
    graph: &DualGraph,
    plan: &Plan,
    constraints: &Constraints,
    rng: &mut R,
) -> (Option<FlipMove>, f64) {
    let cut: Vec<usize> = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| plan.district_of(e.a) != plan.district_of(e.b))
        .map(|(i, _)| i)
        .collect();
    if cut.is_empty() {
        return (None, rng.random());
    }
    let edge = graph.edges()[cut[rng.random_range(0..cut.len())]];
    let (node, other) = if rng.random_bool(0.5) { (edge.a, edge.b) } else { (edge.b, edge.a) };
    let uniform: f64 = rng.random();

    let (from, to) = (plan.district_of(node), plan.district_of(other));
    let size_from = plan.assignment().iter().filter(|&&d| d as usize == from).count();
    if size_from <= 1 {
        return (None, uniform);
    }
    let pops = district_populations(graph, plan);
    let ideal = graph.total_population() as f64 / plan.k() as f64;
    let moved = graph.population(node);
    if !within_tolerance(pops[from] - moved, ideal, constraints.pop_tolerance)
        || !within_tolerance(pops[to] + moved, ideal, constraints.pop_tolerance)
    {
        return (None, uniform);
    }
    let (mut neighbors_from, mut neighbors_to) = (0, 0);
    for &w in graph.neighbors(node) {
        let d = plan.district_of(w);
        if d == from {
            neighbors_from += 1;
        } else if d == to {
            neighbors_to += 1;
        }
    }
    let mv = FlipMove { node, from, to, neighbors_from, neighbors_to, cut_before: cut.len() };
    if let Some(bound) = constraints.cut_edge_bound {
        if mv.cut_after() > bound {
            return (None, uniform);
        }
    }
    if !district_connected(graph, plan.assignment(), from as u32, size_from, Some(node)) {
        return (None, uniform);
    }
    (Some(mv), uniform)
}

/// Weighted flip: `None` means the chain stays put.
pub fn propose_weighted_flip<R: Rng + ?Sized>(
    graph: &DualGraph,
    plan: &Plan,
    constraints: &Constraints,
    beta: f64,
    rng: &mut R,
) -> Option<Plan> {
    let (mv, uniform) = draw_flip(graph, plan, constraints, rng);
    let mv = mv?;
    if uniform < mv.acceptance_ratio(beta) {
        let mut next = plan.clone();
        next.set(mv.node, mv.to);
        debug_assert_eq!(cut_edges(graph, &next), mv.cut_after());
        Some(next)
    } else {
        None
    }
}

/// Uniform flip: the weighted flip at zero inverse temperature.
pub fn propose_uniform_flip<R: Rng + ?Sized>(
    graph: &DualGraph,
    plan: &Plan,
    constraints: &Constraints,
    rng: &mut R,
) -> Option<Plan> {
    propose_weighted_flip(graph, plan, constraints, 0.0, rng)
}
