//! Districting plans and their structural properties.
use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{DualGraph, VoteCount};

/// Assignment of every node to one of `k` districts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plan {
    assignment: Vec<u32>,
    k: usize,
}

impl Plan {
    /// Checks that every label is below `k` and every district is nonempty.
    pub fn new(assignment: Vec<u32>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Plan("district count must be positive".into()));
        }
        let mut used = vec![false; k];
        for (node, &label) in assignment.iter().enumerate() {
            if label as usize >= k {
                return Err(Error::Plan(format!("node {node} has label {label} outside 0..{k}")));
            }
            used[label as usize] = true;
        }
        if let Some(empty) = used.iter().position(|u| !u) {
            return Err(Error::Plan(format!("district {empty} is empty")));
        }
        Ok(Plan { assignment, k })
    }

    /// Infers `k` as one more than the largest label.
    pub fn from_labels(assignment: Vec<u32>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |&m| m as usize + 1);
        Plan::new(assignment, k)
    }

    pub fn for_graph(graph: &DualGraph, assignment: Vec<u32>, k: usize) -> Result<Self> {
        if assignment.len() != graph.node_count() {
            return Err(Error::Plan(format!(
                "plan covers {} nodes but the graph has {}",
                assignment.len(),
                graph.node_count()
            )));
        }
        Plan::new(assignment, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn district_of(&self, node: usize) -> usize {
        self.assignment[node] as usize
    }

    /// Moves one node. The caller is responsible for keeping districts nonempty.
    pub(crate) fn set(&mut self, node: usize, district: usize) {
        self.assignment[node] = district as u32;
    }

    /// Nodes of each district, in node order.
    pub fn district_nodes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (node, &d) in self.assignment.iter().enumerate() {
            out[d as usize].push(node);
        }
        out
    }

    /// Applies a label permutation: district `d` becomes `perm[d]`.
    pub fn relabeled(&self, perm: &[u32]) -> Result<Plan> {
        Plan::new(self.assignment.iter().map(|&d| perm[d as usize]).collect(), self.k)
    }

    fn check(&self, graph: &DualGraph) -> Result<()> {
        if self.assignment.len() != graph.node_count() {
            return Err(Error::Plan(format!(
                "plan covers {} nodes but the graph has {}",
                self.assignment.len(),
                graph.node_count()
            )));
        }
        Ok(())
    }
}

/// Per-district aggregates. `votes` is indexed by the graph's election list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistrictTally {
    pub district: usize,
    pub population: u64,
    pub votes: Vec<VoteCount>,
}

pub fn tally(graph: &DualGraph, plan: &Plan) -> Result<Vec<DistrictTally>> {
    plan.check(graph)?;
    let elections = graph.elections().len();
    let mut out: Vec<DistrictTally> = (0..plan.k())
        .map(|d| DistrictTally {
            district: d,
            population: 0,
            votes: vec![VoteCount::default(); elections],
        })
        .collect();
    for (node, p) in graph.nodes().iter().enumerate() {
        let t = &mut out[plan.district_of(node)];
        t.population += p.population;
        for (acc, v) in t.votes.iter_mut().zip(&p.votes) {
            *acc += *v;
        }
    }
    Ok(out)
}

pub fn district_populations(graph: &DualGraph, plan: &Plan) -> Vec<u64> {
    let mut pops = vec![0; plan.k()];
    for node in 0..graph.node_count() {
        pops[plan.district_of(node)] += graph.population(node);
    }
    pops
}

/// Largest relative deviation `|pop_d - ideal| / ideal` over districts.
pub fn population_deviation(graph: &DualGraph, plan: &Plan) -> f64 {
    max_deviation(&district_populations(graph, plan))
}

pub(crate) fn max_deviation(pops: &[u64]) -> f64 {
    let total: u64 = pops.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let ideal = total as f64 / pops.len() as f64;
    pops.iter().map(|&p| relative_deviation(p, ideal)).fold(0.0, f64::max)
}

pub(crate) fn relative_deviation(pop: u64, ideal: f64) -> f64 {
    (pop as f64 - ideal).abs() / ideal
}

/// The per-district population check shared by every chain constraint.
pub fn within_tolerance(pop: u64, ideal: f64, tolerance: f64) -> bool {
    relative_deviation(pop, ideal) <= tolerance
}

/// True iff every district induces a connected subgraph.
pub fn is_contiguous(graph: &DualGraph, plan: &Plan) -> bool {
    plan.district_nodes()
        .iter()
        .enumerate()
        .all(|(d, nodes)| district_connected(graph, plan.assignment(), d as u32, nodes.len(), None))
}

/// BFS within district `d`, optionally pretending `skip` has left it.
pub(crate) fn district_connected(
    graph: &DualGraph,
    assignment: &[u32],
    d: u32,
    size: usize,
    skip: Option<usize>,
) -> bool {
    let target = size - usize::from(skip.is_some());
    if target == 0 {
        return true;
    }
    let Some(start) = (0..assignment.len()).find(|&v| assignment[v] == d && Some(v) != skip) else {
        return false;
    };
    let mut seen = HashSet::with_capacity(target);
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in graph.neighbors(u) {
            if assignment[v] == d && Some(v) != skip && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen.len() == target
}

/// Number of edges joining different districts.
pub fn cut_edges(graph: &DualGraph, plan: &Plan) -> usize {
    graph
        .edges()
        .iter()
        .filter(|e| plan.district_of(e.a) != plan.district_of(e.b))
        .count()
}

/// Label-invariant digest of a plan, serialized as 16 hex digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PlanHash(pub u64);

impl From<PlanHash> for String {
    fn from(h: PlanHash) -> String {
        h.to_string()
    }
}

impl TryFrom<String> for PlanHash {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for PlanHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::str::FromStr for PlanHash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(PlanHash)
            .map_err(|e| Error::Parse(format!("bad plan hash `{s}`: {e}")))
    }
}

/// Relabels districts in order of first appearance along the node order.
pub fn canonical_labels(plan: &Plan) -> Vec<u32> {
    let mut map = vec![u32::MAX; plan.k()];
    let mut next = 0;
    plan.assignment()
        .iter()
        .map(|&d| {
            let slot = &mut map[d as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect()
}

/// SHA-256 of the canonical label array, truncated to 64 bits.
pub fn canonical_hash(plan: &Plan) -> PlanHash {
    let mut hasher = Sha256::new();
    for label in canonical_labels(plan) {
        hasher.update(label.to_le_bytes());
    }
    let digest = hasher.finalize();
    PlanHash(u64::from_be_bytes(digest[..8].try_into().unwrap()))
}

// ---------------------------------------------------------------------------
// Plan files: one `precinct-id,district-label` line per precinct.

pub fn parse_plan(graph: &DualGraph, text: &str) -> Result<Plan> {
    let mut assignment = vec![None; graph.node_count()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `id,label`", lineno + 1)))?;
        let (id, label) = (id.trim(), label.trim());
        let node = graph.index_of(id).ok_or_else(|| {
            Error::Schema(format!("line {}: unknown precinct `{id}`", lineno + 1))
        })?;
        let label: u32 = label.parse().map_err(|_| {
            Error::Parse(format!("line {}: bad district label `{label}`", lineno + 1))
        })?;
        if assignment[node].replace(label).is_some() {
            return Err(Error::Schema(format!(
                "line {}: precinct `{id}` assigned twice",
                lineno + 1
            )));
        }
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            a.ok_or_else(|| Error::Schema(format!("precinct `{}` has no district", graph.node(i).id)))
        })
        .collect::<Result<Vec<u32>>>()?;
    Plan::from_labels(assignment)
}

pub fn load_plan(graph: &DualGraph, path: impl AsRef<Path>) -> Result<Plan> {
    let path = path.as_ref();
    parse_plan(graph, &fs::read_to_string(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn plan_to_csv(graph: &DualGraph, plan: &Plan) -> String {
    let mut out = String::with_capacity(plan.len() * 12);
    for (node, p) in graph.nodes().iter().enumerate() {
        out.push_str(&p.id);
        out.push(',');
        out.push_str(&plan.district_of(node).to_string());
        out.push('\n');
    }
    out
}

pub fn write_plan(graph: &DualGraph, plan: &Plan, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, plan_to_csv(graph, plan))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{grid_graph, unit_grid};
    use proptest::prelude::*;

    /// Column-halves plan on a `rows x cols` grid.
    fn halves(rows: usize, cols: usize) -> Plan {
        let a = (0..rows * cols).map(|i| u32::from(i % cols >= cols / 2)).collect();
        Plan::new(a, 2).unwrap()
    }

    #[test]
    fn label_checks() {
        assert!(matches!(Plan::new(vec![0, 2], 2), Err(Error::Plan(_))));
        assert!(matches!(Plan::new(vec![0, 0], 2), Err(Error::Plan(_))));
        assert!(Plan::new(vec![1, 0], 2).is_ok());
        let g = unit_grid(2, 2);
        assert!(Plan::for_graph(&g, vec![0, 1], 2).is_err());
    }

    #[test]
    fn column_halves_tally_and_cut() {
        let g = unit_grid(4, 4);
        let p = halves(4, 4);
        let t = tally(&g, &p).unwrap();
        assert_eq!(t[0].population, 8);
        assert_eq!(t[1].population, 8);
        assert_eq!(cut_edges(&g, &p), 4);
        assert!(is_contiguous(&g, &p));
        assert_eq!(population_deviation(&g, &p), 0.0);
        let swapped = p.relabeled(&[1, 0]).unwrap();
        assert_eq!(cut_edges(&g, &swapped), 4);
    }

    #[test]
    fn single_district_matches_graph_totals() {
        let g = grid_graph(3, 3, &["S"], |r, c| (r as u64 + 2, vec![VoteCount::new(c as u64, 1)]));
        let p = Plan::new(vec![0; 9], 1).unwrap();
        let t = tally(&g, &p).unwrap();
        assert_eq!(t[0].population, g.total_population());
        assert_eq!(t[0].votes[0], g.vote_totals(0));
        assert_eq!(cut_edges(&g, &p), 0);
    }

    #[test]
    fn deviation_arithmetic() {
        assert!((max_deviation(&[26, 24, 25, 25]) - 0.04).abs() < 1e-15);
        assert_eq!(max_deviation(&[5, 5]), 0.0);
    }

    #[test]
    fn opposite_corners_are_not_contiguous() {
        let g = unit_grid(4, 4);
        let mut a = vec![1; 16];
        a[0] = 0;
        a[15] = 0;
        assert!(!is_contiguous(&g, &Plan::new(a, 2).unwrap()));
    }

    #[test]
    fn hash_ignores_labels_but_not_assignment() {
        let p = halves(4, 4);
        let q = p.relabeled(&[1, 0]).unwrap();
        assert_eq!(canonical_hash(&p), canonical_hash(&q));
        let mut a = p.assignment().to_vec();
        a[0] = 1;
        let r = Plan::new(a, 2).unwrap();
        assert_ne!(canonical_hash(&p), canonical_hash(&r));
        let text = canonical_hash(&p).to_string();
        assert_eq!(text.len(), 16);
        assert_eq!(text.parse::<PlanHash>().unwrap(), canonical_hash(&p));
    }

    #[test]
    fn plan_file_round_trip_and_errors() {
        let g = unit_grid(2, 2);
        let p = Plan::new(vec![0, 1, 0, 1], 2).unwrap();
        let text = plan_to_csv(&g, &p);
        assert_eq!(text, "p0000,0\np0001,1\np0002,0\np0003,1\n");
        assert_eq!(parse_plan(&g, &text).unwrap(), p);
        assert!(matches!(parse_plan(&g, "p0000,0\n"), Err(Error::Schema(_))));
        assert!(matches!(parse_plan(&g, "p0009,0\n"), Err(Error::Schema(_))));
        assert!(matches!(parse_plan(&g, "p0000;0\n"), Err(Error::Parse(_))));
    }

    fn grid_and_plan() -> impl Strategy<Value = (usize, usize, usize, Vec<u32>)> {
        (1usize..5, 1usize..5, 1usize..5).prop_flat_map(|(r, c, k)| {
            let n = r * c;
            let k = k.min(n);
            (Just(r), Just(c), Just(k), proptest::collection::vec(0..k as u32, n))
        })
    }

    proptest! {
        #[test]
        fn conservation_cut_identity_and_label_invariance((r, c, k, mut a) in grid_and_plan(), perm_seed in any::<u64>()) {
            // Force every district nonempty.
            for (d, x) in a.iter_mut().enumerate().take(k) { *x = d as u32; }
            let g = grid_graph(r, c, &["S"], |i, j| ((i * 7 + j) as u64, vec![VoteCount::new(i as u64, j as u64 + 1)]));
            let p = Plan::new(a, k).unwrap();
            let t = tally(&g, &p).unwrap();
            prop_assert_eq!(t.iter().map(|x| x.population).sum::<u64>(), g.total_population());
            let mut tv = VoteCount::default();
            for x in &t { tv += x.votes[0]; }
            prop_assert_eq!(tv, g.vote_totals(0));

            let internal = g.edges().iter().filter(|e| p.district_of(e.a) == p.district_of(e.b)).count();
            prop_assert_eq!(cut_edges(&g, &p), g.edge_count() - internal);

            let mut perm: Vec<u32> = (0..k as u32).collect();
            let mut s = perm_seed;
            for i in (1..k).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let q = p.relabeled(&perm).unwrap();
            prop_assert_eq!(canonical_hash(&p), canonical_hash(&q));
            prop_assert_eq!(cut_edges(&g, &p), cut_edges(&g, &q));
            prop_assert_eq!(is_contiguous(&g, &p), is_contiguous(&g, &q));
        }
    }
}
