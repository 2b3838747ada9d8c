//! The precinct dual graph: nodes carry population, two-party returns per
//! election and a planar centroid; edges join precincts that share a border.
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-party vote counts for one election.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCount {
    pub rep: u64,
    pub dem: u64,
}

impl VoteCount {
    pub fn new(rep: u64, dem: u64) -> Self {
        VoteCount { rep, dem }
    }

    pub fn total(&self) -> u64 {
        self.rep + self.dem
    }
}

impl std::ops::AddAssign for VoteCount {
    fn add_assign(&mut self, rhs: Self) {
        self.rep += rhs.rep;
        self.dem += rhs.dem;
    }
}

/// Attributes of a single precinct.
///
/// `votes` is indexed by the owning graph's election list.
#[derive(Clone, Debug, PartialEq)]
pub struct Precinct {
    pub id: String,
    pub population: u64,
    pub votes: Vec<VoteCount>,
    pub centroid: Option<(f64, f64)>,
    pub area: f64,
}

/// An undirected edge between node indices `a < b`.
///
/// `shared` is the number of piece-level adjacencies the two precincts
/// have (1 for ordinary neighbors); it only matters when merging.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub shared: u32,
}

/// Immutable precinct adjacency graph. Nodes are ordered by id.
#[derive(Clone, Debug)]
pub struct DualGraph {
    elections: Vec<String>,
    nodes: Vec<Precinct>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl PartialEq for DualGraph {
    fn eq(&self, other: &Self) -> bool {
        self.elections == other.elections && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl DualGraph {
    /// Builds a graph from precincts and id-pair edges, checking every invariant.
    ///
    /// Each edge is `(id, id, shared)`. Nodes are re-sorted by id.
    pub fn new(
        elections: Vec<String>,
        mut nodes: Vec<Precinct>,
        edges: Vec<(String, String, u32)>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &elections {
            if !seen.insert(e) {
                return Err(Error::Schema(format!("election `{e}` listed twice")));
            }
        }
        for node in &nodes {
            if node.votes.len() != elections.len() {
                return Err(Error::Schema(format!(
                    "precinct `{}` has {} vote records for {} elections",
                    node.id,
                    node.votes.len(),
                    elections.len()
                )));
            }
            if node.area.is_nan() || node.area < 0.0 {
                return Err(Error::Invariant(format!(
                    "precinct `{}` has negative or undefined area",
                    node.id
                )));
            }
        }
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Schema(format!("duplicate precinct id `{}`", pair[0].id)));
            }
        }
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        let mut edge_set = BTreeMap::new();
        for (a, b, shared) in edges {
            let ia = *index
                .get(&a)
                .ok_or_else(|| Error::Schema(format!("edge references unknown precinct `{a}`")))?;
            let ib = *index
                .get(&b)
                .ok_or_else(|| Error::Schema(format!("edge references unknown precinct `{b}`")))?;
            if ia == ib {
                return Err(Error::Invariant(format!("self-loop on precinct `{a}`")));
            }
            if shared == 0 {
                return Err(Error::Invariant(format!("edge `{a}`-`{b}` has zero multiplicity")));
            }
            let key = (ia.min(ib), ia.max(ib));
            if edge_set.insert(key, shared).is_some() {
                return Err(Error::Invariant(format!("duplicate edge `{a}`-`{b}`")));
            }
        }
        let edges: Vec<Edge> = edge_set
            .into_iter()
            .map(|((a, b), shared)| Edge { a, b, shared })
            .collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.a].push(e.b);
            adjacency[e.b].push(e.a);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
        }
        Ok(DualGraph { elections, nodes, edges, adjacency, index })
    }

    pub fn elections(&self) -> &[String] {
        &self.elections
    }

    pub fn election_index(&self, election: &str) -> Result<usize> {
        self.elections
            .iter()
            .position(|e| e == election)
            .ok_or_else(|| Error::Schema(format!("unknown election `{election}`")))
    }

    pub fn nodes(&self) -> &[Precinct] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Precinct {
        &self.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn population(&self, i: usize) -> u64 {
        self.nodes[i].population
    }

    pub fn total_population(&self) -> u64 {
        self.nodes.iter().map(|n| n.population).sum()
    }

    pub fn vote_totals(&self, election: usize) -> VoteCount {
        let mut total = VoteCount::default();
        for n in &self.nodes {
            total += n.votes[election];
        }
        total
    }

    /// Connected components as sorted node lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

/// Summary produced by [`validate_graph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub nodes: usize,
    pub edges: usize,
    pub connected: bool,
    pub components: usize,
    pub isolated: usize,
    pub isolated_ids: Vec<String>,
    pub total_population: u64,
    pub vote_totals: BTreeMap<String, VoteCount>,
}

pub fn validate_graph(graph: &DualGraph) -> ValidationReport {
    let isolated_ids: Vec<String> = (0..graph.node_count())
        .filter(|&i| graph.neighbors(i).is_empty() && graph.node_count() > 1)
        .map(|i| graph.node(i).id.clone())
        .collect();
    let components = graph.components().len();
    ValidationReport {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        connected: components <= 1,
        components,
        isolated: isolated_ids.len(),
        isolated_ids,
        total_population: graph.total_population(),
        vote_totals: graph
            .elections()
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), graph.vote_totals(i)))
            .collect(),
    }
}

/// Record of the merges applied by [`merge_defective_precincts`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    /// `(merged id, survivor id)` in the order applied.
    pub merges: Vec<(String, String)>,
    pub nodes_before: usize,
    pub nodes_after: usize,
}

impl MergeReport {
    pub fn node_delta(&self) -> usize {
        self.nodes_before - self.nodes_after
    }
}

/// Merges precincts that cannot stand alone as plan units.
///
/// `components` maps a precinct id to its piece count. A count of 1 marks a
/// precinct wholly enclosed by another (absorbed by its enclosing neighbor);
/// a count of 2 or more marks a disconnected precinct, absorbed by the
/// neighbor with the largest `shared` edge multiplicity, ties going to the
/// smallest id. Ids no longer present in the graph are skipped, so repeated
/// application is a no-op.
pub fn merge_defective_precincts(
    graph: &DualGraph,
    components: &BTreeMap<String, u32>,
) -> Result<(DualGraph, MergeReport)> {
    let n = graph.node_count();
    // Working state keyed by id so survivors keep their identity across merges.
    let mut alive: BTreeMap<String, Precinct> =
        graph.nodes().iter().map(|p| (p.id.clone(), p.clone())).collect();
    let mut adj: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
    for p in graph.nodes() {
        adj.entry(p.id.clone()).or_default();
    }
    for e in graph.edges() {
        let (a, b) = (&graph.node(e.a).id, &graph.node(e.b).id);
        adj.get_mut(a).unwrap().insert(b.clone(), e.shared);
        adj.get_mut(b).unwrap().insert(a.clone(), e.shared);
    }

    let mut report = MergeReport { nodes_before: n, ..Default::default() };
    for (id, &pieces) in components {
        if !alive.contains_key(id) {
            continue;
        }
        let neighbors = &adj[id];
        let target = if pieces <= 1 {
            match neighbors.len() {
                0 => None,
                // An enclosed precinct touches only its encloser.
                1 => neighbors.keys().next().cloned(),
                _ => best_neighbor(neighbors),
            }
        } else {
            best_neighbor(neighbors)
        };
        let Some(target) = target else {
            return Err(Error::Invariant(format!(
                "precinct `{id}` is marked for merging but has no neighbor"
            )));
        };

        let merged = alive.remove(id).unwrap();
        let survivor = alive.get_mut(&target).unwrap();
        absorb(survivor, &merged);

        let merged_adj = adj.remove(id).unwrap();
        for (nb, shared) in merged_adj {
            let nb_adj = adj.get_mut(&nb).unwrap();
            nb_adj.remove(id);
            if nb == target {
                continue;
            }
            *nb_adj.entry(target.clone()).or_insert(0) += shared;
            *adj.get_mut(&target).unwrap().entry(nb.clone()).or_insert(0) += shared;
        }
        report.merges.push((id.clone(), target));
    }

    let mut edges = Vec::new();
    for (a, list) in &adj {
        for (b, &shared) in list {
            if a < b {
                edges.push((a.clone(), b.clone(), shared));
            }
        }
    }
    let merged = DualGraph::new(graph.elections().to_vec(), alive.into_values().collect(), edges)?;
    report.nodes_after = merged.node_count();
    Ok((merged, report))
}

fn best_neighbor(neighbors: &BTreeMap<String, u32>) -> Option<String> {
    // BTreeMap iterates ids ascending, so `max_by` with a reversed id tiebreak keeps the smallest id.
    neighbors
        .iter()
        .max_by(|(ia, sa), (ib, sb)| sa.cmp(sb).then_with(|| ib.cmp(ia)))
        .map(|(id, _)| id.clone())
}

fn absorb(survivor: &mut Precinct, merged: &Precinct) {
    let total_pop = survivor.population + merged.population;
    survivor.centroid = match (survivor.centroid, merged.centroid) {
        (Some((x1, y1)), Some((x2, y2))) => {
            // Population-weighted; fall back to area weights, then a plain midpoint.
            let (w1, w2) = if total_pop > 0 {
                (survivor.population as f64, merged.population as f64)
            } else if survivor.area + merged.area > 0.0 {
                (survivor.area, merged.area)
            } else {
                (1.0, 1.0)
            };
            let w = w1 + w2;
            Some(((w1 * x1 + w2 * x2) / w, (w1 * y1 + w2 * y2) / w))
        }
        (c, None) => c,
        (None, c) => c,
    };
    survivor.population = total_pop;
    survivor.area += merged.area;
    for (v, m) in survivor.votes.iter_mut().zip(&merged.votes) {
        *v += *m;
    }
}

// ---------------------------------------------------------------------------
// File format

pub const GRAPH_FORMAT: &str = "redist-graph";
pub const GRAPH_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    format: String,
    version: u32,
    elections: Vec<String>,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    population: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(default)]
    area: f64,
    votes: BTreeMap<String, VoteCount>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EdgeRecord {
    Plain(String, String),
    Weighted(String, String, u32),
}

/// Parses a graph document (JSON). See the README for the schema.
pub fn parse_graph(text: &str) -> Result<DualGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::Schema(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    })?;
    if file.format != GRAPH_FORMAT {
        return Err(Error::Schema(format!(
            "expected format `{GRAPH_FORMAT}`, found `{}`",
            file.format
        )));
    }
    if file.version != GRAPH_VERSION {
        return Err(Error::Schema(format!("unsupported graph version {}", file.version)));
    }
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for rec in file.nodes {
        let mut votes = Vec::with_capacity(file.elections.len());
        for e in &file.elections {
            let v = rec.votes.get(e).ok_or_else(|| {
                Error::Schema(format!("precinct `{}` has no returns for election `{e}`", rec.id))
            })?;
            votes.push(*v);
        }
        if let Some(extra) = rec.votes.keys().find(|k| !file.elections.contains(k)) {
            return Err(Error::Schema(format!(
                "precinct `{}` has returns for undeclared election `{extra}`",
                rec.id
            )));
        }
        let centroid = match (rec.x, rec.y) {
            (Some(x), Some(y)) => Some((x, y)),
            (None, None) => None,
            _ => {
                return Err(Error::Schema(format!(
                    "precinct `{}` has only one centroid coordinate",
                    rec.id
                )))
            }
        };
        nodes.push(Precinct {
            id: rec.id,
            population: rec.population,
            votes,
            centroid,
            area: rec.area,
        });
    }
    let edges = file
        .edges
        .into_iter()
        .map(|e| match e {
            EdgeRecord::Plain(a, b) => (a, b, 1),
            EdgeRecord::Weighted(a, b, s) => (a, b, s),
        })
        .collect();
    DualGraph::new(file.elections, nodes, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<DualGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_graph(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        Error::Invariant(m) => Error::Invariant(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Serializes a graph to the JSON document format accepted by [`parse_graph`].
pub fn graph_to_json(graph: &DualGraph) -> String {
    let file = GraphFile {
        format: GRAPH_FORMAT.to_string(),
        version: GRAPH_VERSION,
        elections: graph.elections.clone(),
        nodes: graph
            .nodes
            .iter()
            .map(|p| NodeRecord {
                id: p.id.clone(),
                population: p.population,
                x: p.centroid.map(|c| c.0),
                y: p.centroid.map(|c| c.1),
                area: p.area,
                votes: graph.elections.iter().cloned().zip(p.votes.iter().copied()).collect(),
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (graph.nodes[e.a].id.clone(), graph.nodes[e.b].id.clone());
                if e.shared == 1 {
                    EdgeRecord::Plain(a, b)
                } else {
                    EdgeRecord::Weighted(a, b, e.shared)
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("graph serialization cannot fail")
}

pub fn write_graph(graph: &DualGraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, graph_to_json(graph) + "\n")?;
    Ok(())
}

/// Builds a `rows x cols` lattice with ids `p0000`, `p0001`, ... in row-major
/// order, unit area and centroids at integer coordinates `(col, row)`.
///
/// `attrs(row, col)` supplies population and per-election votes.
pub fn grid_graph(
    rows: usize,
    cols: usize,
    elections: &[&str],
    mut attrs: impl FnMut(usize, usize) -> (u64, Vec<VoteCount>),
) -> DualGraph {
    let id = |r: usize, c: usize| format!("p{:04}", r * cols + c);
    let mut nodes = Vec::with_capacity(rows * cols);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let (population, votes) = attrs(r, c);
            nodes.push(Precinct {
                id: id(r, c),
                population,
                votes,
                centroid: Some((c as f64, r as f64)),
                area: 1.0,
            });
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1), 1));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c), 1));
            }
        }
    }
    DualGraph::new(elections.iter().map(|s| s.to_string()).collect(), nodes, edges)
        .expect("lattice is a valid graph")
}

/// Unit-population lattice with one election, one vote per party per precinct.
pub fn unit_grid(rows: usize, cols: usize) -> DualGraph {
    grid_graph(rows, cols, &["E"], |_, _| (1, vec![VoteCount::new(1, 1)]))
}
