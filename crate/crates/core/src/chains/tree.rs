//! Uniform random spanning trees of induced subgraphs and balanced tree cuts.
use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DualGraph;
use crate::partition::within_tolerance;

/// A rooted spanning tree over a node subset of a [`DualGraph`].
///
/// Nodes are stored by local index; `nodes()[i]` is the graph node of local
/// node `i` and `parent()[i]` its parent's local index (`None` at the root).
#[derive(Clone, Debug)]
pub struct SpanningTree {
    nodes: Vec<usize>,
    parent: Vec<Option<usize>>,
    populations: Vec<u64>,
}

impl SpanningTree {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn parent(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(Option::is_none).expect("tree has a root")
    }

    pub fn total_population(&self) -> u64 {
        self.populations.iter().sum()
    }

    /// Tree edges as sorted graph-node pairs, in sorted order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.map(|p| {
                    let (a, b) = (self.nodes[i], self.nodes[p]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Local nodes in breadth-first order from the root.
    fn bfs_order(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut children = vec![Vec::new(); n];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([self.root()]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend(children[u].iter().copied());
        }
        order
    }

    /// Population of the subtree hanging below each local node.
    pub fn subtree_populations(&self) -> Vec<u64> {
        let mut sub = self.populations.clone();
        for &u in self.bfs_order().iter().rev() {
            if let Some(p) = self.parent[u] {
                sub[p] += sub[u];
            }
        }
        sub
    }

    /// Splits the tree by removing the edge above local node `cut`.
    /// Returns `(subtree below cut, rest)` as sorted graph nodes.
    pub fn split_at(&self, cut: usize) -> (Vec<usize>, Vec<usize>) {
        let mut below = vec![false; self.nodes.len()];
        below[cut] = true;
        for &u in &self.bfs_order() {
            if let Some(p) = self.parent[u] {
                if below[p] {
                    below[u] = true;
                }
            }
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, &node) in self.nodes.iter().enumerate() {
            if below[i] {
                a.push(node);
            } else {
                b.push(node);
            }
        }
        a.sort_unstable();
        b.sort_unstable();
        (a, b)
    }
}

/// Draws a uniformly random spanning tree of the subgraph induced by
/// `region`, using Wilson's loop-erased random walk algorithm.
pub fn random_spanning_tree<R: Rng + ?Sized>(
    graph: &DualGraph,
    region: &[usize],
    rng: &mut R,
) -> Result<SpanningTree> {
    if region.is_empty() {
        return Err(Error::Invariant("spanning tree of an empty region".into()));
    }
    let mut local = vec![usize::MAX; graph.node_count()];
    for (i, &v) in region.iter().enumerate() {
        local[v] = i;
    }
    let adj: Vec<Vec<usize>> = region
        .iter()
        .map(|&v| {
            graph.neighbors(v).iter().map(|&w| local[w]).filter(|&l| l != usize::MAX).collect()
        })
        .collect();
    if !locally_connected(&adj) {
        return Err(Error::Invariant("spanning tree region is disconnected".into()));
    }

    let n = region.len();
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    let mut parent = vec![None; n];
    let root = rng.random_range(0..n);
    in_tree[root] = true;
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let nb = &adj[u];
            next[u] = nb[rng.random_range(0..nb.len())];
            u = next[u];
        }
        // Retrace the walk; later visits overwrote `next`, erasing loops.
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            parent[u] = Some(next[u]);
            u = next[u];
        }
    }
    Ok(SpanningTree {
        nodes: region.to_vec(),
        parent,
        populations: region.iter().map(|&v| graph.population(v)).collect(),
    })
}

fn locally_connected(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adj.len()
}

/// Local nodes whose parent edge splits the tree into two parts each within
/// `tolerance` (relative) of `target` population.
pub fn qualifying_cuts(tree: &SpanningTree, target: f64, tolerance: f64) -> Vec<usize> {
    let total = tree.total_population();
    let sub = tree.subtree_populations();
    (0..tree.nodes.len())
        .filter(|&i| tree.parent[i].is_some())
        .filter(|&i| {
            within_tolerance(sub[i], target, tolerance)
                && within_tolerance(total - sub[i], target, tolerance)
        })
        .collect()
}

/// Picks uniformly among the qualifying edges for parts of size `target`.
pub fn balanced_tree_cut_to<R: Rng + ?Sized>(
    tree: &SpanningTree,
    target: f64,
    tolerance: f64,
    rng: &mut R,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let cuts = qualifying_cuts(tree, target, tolerance);
    if cuts.is_empty() {
        return None;
    }
    Some(tree.split_at(cuts[rng.random_range(0..cuts.len())]))
}

/// Splits the tree into two halves of its own population, each within
/// `tolerance` of half.
pub fn balanced_tree_cut<R: Rng + ?Sized>(
    tree: &SpanningTree,
    tolerance: f64,
    rng: &mut R,
) -> Option<(Vec<usize>, Vec<usize>)> {
    balanced_tree_cut_to(tree, tree.total_population() as f64 / 2.0, tolerance, rng)
}
