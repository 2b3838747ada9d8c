//! Greedy search for a (not necessarily contiguous) plan with two
//! Democratic-majority districts: grow a half-state "super district" with a
//! Democratic majority by precinct swaps, then split it in two.
use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DualGraph, VoteCount};
use crate::partition::relative_deviation;

/// A set of precincts with running vote and population totals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SuperDistrictState {
    pub members: BTreeSet<usize>,
    pub dem: u64,
    pub rep: u64,
    pub population: u64,
}

impl SuperDistrictState {
    pub fn from_members(graph: &DualGraph, election: usize, members: impl IntoIterator<Item = usize>) -> Self {
        let mut s = SuperDistrictState::default();
        for m in members {
            s.insert(graph, election, m);
        }
        s
    }

    fn insert(&mut self, graph: &DualGraph, election: usize, node: usize) {
        if self.members.insert(node) {
            let v = graph.node(node).votes[election];
            self.dem += v.dem;
            self.rep += v.rep;
            self.population += graph.population(node);
        }
    }

    fn remove(&mut self, graph: &DualGraph, election: usize, node: usize) {
        if self.members.remove(&node) {
            let v = graph.node(node).votes[election];
            self.dem -= v.dem;
            self.rep -= v.rep;
            self.population -= graph.population(node);
        }
    }

    pub fn two_party(&self) -> u64 {
        self.dem + self.rep
    }

    /// Democratic two-party share; 0 for a state without votes.
    pub fn dem_share(&self) -> f64 {
        if self.two_party() == 0 {
            0.0
        } else {
            self.dem as f64 / self.two_party() as f64
        }
    }

    pub fn member_ids<'a>(&'a self, graph: &'a DualGraph) -> impl Iterator<Item = &'a str> + 'a {
        self.members.iter().map(move |&m| graph.node(m).id.as_str())
    }
}

fn dem_share_of(v: VoteCount) -> f64 {
    if v.total() == 0 {
        0.0
    } else {
        v.dem as f64 / v.total() as f64
    }
}

/// Fills super district A with the most Democratic precincts until its
/// population first reaches half the state; the rest form B. Ties in share
/// keep node (id) order.
pub fn seed_by_share(graph: &DualGraph, election: usize) -> (SuperDistrictState, SuperDistrictState) {
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    order.sort_by(|&a, &b| {
        dem_share_of(graph.node(b).votes[election])
            .total_cmp(&dem_share_of(graph.node(a).votes[election]))
            .then(a.cmp(&b))
    });
    let total = graph.total_population();
    let mut a = SuperDistrictState::default();
    let mut b = SuperDistrictState::default();
    for node in order {
        if 2 * a.population < total {
            a.insert(graph, election, node);
        } else {
            b.insert(graph, election, node);
        }
    }
    (a, b)
}

/// Change in the state's Democratic share from swapping `out` (a member) for
/// `incoming` (a non-member).
pub fn swap_gain(state: &SuperDistrictState, out: VoteCount, incoming: VoteCount) -> Result<f64> {
    let total = state.two_party() as i128 - out.total() as i128 + incoming.total() as i128;
    if total <= 0 {
        return Err(Error::Metric("swap leaves the super district without votes".into()));
    }
    let dem = state.dem as i128 - out.dem as i128 + incoming.dem as i128;
    Ok(dem as f64 / total as f64 - state.dem_share())
}

/// One accepted swap of the greedy loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Swap {
    pub out: String,
    pub incoming: String,
    pub gain: f64,
    pub share_after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub a: SuperDistrictState,
    pub b: SuperDistrictState,
    pub swaps: Vec<Swap>,
}

/// Repeatedly applies the population-feasible swap with the largest positive
/// gain in A's Democratic share until none remains.
///
/// A swap is feasible when A's deviation from half the state stays within
/// `pop_tolerance`, or does not grow if the seed already exceeded it. Equal
/// gains go to the smallest `(out id, in id)`.
pub fn greedy_improve(
    graph: &DualGraph,
    election: usize,
    a: SuperDistrictState,
    b: SuperDistrictState,
    pop_tolerance: f64,
) -> GreedyOutcome {
    let (mut a, mut b) = (a, b);
    let half = (a.population + b.population) as f64 / 2.0;
    let votes = |n: usize| graph.node(n).votes[election];
    let mut swaps = Vec::new();
    loop {
        let allowed = pop_tolerance.max(relative_deviation(a.population, half));
        // Best new share as an exact fraction (dem, total).
        let mut best: Option<(i128, i128, usize, usize)> = Some((a.dem as i128, a.two_party() as i128, 0, 0));
        let mut found = false;
        for &out in &a.members {
            let (vo, po) = (votes(out), graph.population(out));
            for &inc in &b.members {
                let pop = a.population - po + graph.population(inc);
                if relative_deviation(pop, half) > allowed {
                    continue;
                }
                let vi = votes(inc);
                let total = a.two_party() as i128 - vo.total() as i128 + vi.total() as i128;
                if total <= 0 {
                    continue;
                }
                let dem = a.dem as i128 - vo.dem as i128 + vi.dem as i128;
                let (bd, bt, _, _) = best.unwrap();
                // dem/total > bd/bt, with 0/0 treated as share 0.
                let better = if bt == 0 { dem > 0 } else { dem * bt > bd * total };
                if better {
                    best = Some((dem, total, out, inc));
                    found = true;
                }
            }
        }
        if !found {
            break;
        }
        let (_, _, out, inc) = best.unwrap();
        let before = a.dem_share();
        a.remove(graph, election, out);
        b.insert(graph, election, out);
        b.remove(graph, election, inc);
        a.insert(graph, election, inc);
        swaps.push(Swap {
            out: graph.node(out).id.clone(),
            incoming: graph.node(inc).id.clone(),
            gain: a.dem_share() - before,
            share_after: a.dem_share(),
        });
    }
    GreedyOutcome { a, b, swaps }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitOutcome {
    pub halves: [SuperDistrictState; 2],
    /// Both halves are within tolerance of a quarter of the state population
    /// and both have a Democratic majority.
    pub feasible: bool,
}

/// Splits a super district into two districts of about a quarter of the
/// state population each, trying to keep both Democratic-majority.
///
/// Members are dealt in descending Democratic share to whichever half has
/// less population, then single moves and pairwise swaps are applied while
/// they reduce the population violation or, failing that, raise the smaller
/// of the two Democratic shares.
pub fn split_superdistrict(
    graph: &DualGraph,
    election: usize,
    state: &SuperDistrictState,
    pop_tolerance: f64,
) -> Result<SplitOutcome> {
    if state.members.is_empty() {
        return Err(Error::Metric("cannot split an empty super district".into()));
    }
    let quarter = graph.total_population() as f64 / 4.0;
    let mut order: Vec<usize> = state.members.iter().copied().collect();
    order.sort_by(|&a, &b| {
        dem_share_of(graph.node(b).votes[election])
            .total_cmp(&dem_share_of(graph.node(a).votes[election]))
            .then(a.cmp(&b))
    });
    let mut halves = [SuperDistrictState::default(), SuperDistrictState::default()];
    for node in order {
        let h = usize::from(halves[1].population < halves[0].population);
        halves[h].insert(graph, election, node);
    }

    let score = |h: &[SuperDistrictState; 2]| -> (f64, f64) {
        let violation: f64 = h
            .iter()
            .map(|s| (relative_deviation(s.population, quarter) - pop_tolerance).max(0.0))
            .sum();
        (violation, -h[0].dem_share().min(h[1].dem_share()))
    };
    let better = |new: (f64, f64), old: (f64, f64)| match new.0.partial_cmp(&old.0) {
        Some(Ordering::Less) => new.0 < old.0 - 1e-15,
        Some(Ordering::Equal) => new.1 < old.1 - 1e-15,
        _ => false,
    };

    const MAX_PASSES: usize = 1000;
    for _ in 0..MAX_PASSES {
        let current = score(&halves);
        let mut improved = false;
        'search: for from in 0..2 {
            let members: Vec<usize> = halves[from].members.iter().copied().collect();
            for &node in &members {
                if halves[from].members.len() > 1 {
                    let mut trial = halves.clone();
                    trial[from].remove(graph, election, node);
                    trial[1 - from].insert(graph, election, node);
                    if better(score(&trial), current) {
                        halves = trial;
                        improved = true;
                        break 'search;
                    }
                }
                if from == 0 {
                    let others: Vec<usize> = halves[1].members.iter().copied().collect();
                    for &other in &others {
                        let mut trial = halves.clone();
                        trial[0].remove(graph, election, node);
                        trial[1].insert(graph, election, node);
                        trial[1].remove(graph, election, other);
                        trial[0].insert(graph, election, other);
                        if better(score(&trial), current) {
                            halves = trial;
                            improved = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    let (violation, neg_min) = score(&halves);
    let feasible = violation == 0.0 && -neg_min > 0.5 && halves.iter().all(|h| !h.members.is_empty());
    Ok(SplitOutcome { halves, feasible })
}
