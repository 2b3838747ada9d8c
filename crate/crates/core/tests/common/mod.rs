//! Reference implementations used as test oracles. Everything here is
//! written from the definitions, without calling the library's own helpers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use redist_core::graph::{grid_graph, DualGraph, Precinct, VoteCount};
use redist_core::partition::Plan;

/// Relabels districts by first appearance.
pub fn canonical(assignment: &[u32]) -> Vec<u32> {
    let mut map = BTreeMap::new();
    assignment
        .iter()
        .map(|&d| {
            let next = map.len() as u32;
            *map.entry(d).or_insert(next)
        })
        .collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Union-find contiguity check: every district is one connected piece.
pub fn contiguous(graph: &DualGraph, assignment: &[u32], k: usize) -> bool {
    let n = assignment.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in graph.edges() {
        if assignment[e.a] == assignment[e.b] {
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            parent[ra] = rb;
        }
    }
    let mut roots: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for v in 0..n {
        let r = find(&mut parent, v);
        roots[assignment[v] as usize].insert(r);
    }
    roots.iter().all(|r| r.len() == 1)
}

pub fn populations(graph: &DualGraph, assignment: &[u32], k: usize) -> Vec<u64> {
    let mut pops = vec![0u64; k];
    for (v, &d) in assignment.iter().enumerate() {
        pops[d as usize] += graph.node(v).population;
    }
    pops
}

pub fn population_ok(graph: &DualGraph, assignment: &[u32], k: usize, tol: f64) -> bool {
    let pops = populations(graph, assignment, k);
    let ideal = pops.iter().sum::<u64>() as f64 / k as f64;
    pops.iter().all(|&p| (p as f64 - ideal).abs() <= tol * ideal)
}

pub fn cut_count(graph: &DualGraph, assignment: &[u32]) -> usize {
    graph.edges().iter().filter(|e| assignment[e.a] != assignment[e.b]).count()
}

/// Every valid plan up to relabeling, as canonical label vectors.
pub fn enumerate_plans(graph: &DualGraph, k: usize, tol: f64) -> BTreeSet<Vec<u32>> {
    let n = graph.node_count();
    let mut out = BTreeSet::new();
    let mut labels = vec![0u32; n];
    let total = (k as u64).pow(n as u32 - 1);
    for code in 0..total {
        let mut c = code;
        for slot in labels.iter_mut().skip(1) {
            *slot = (c % k as u64) as u32;
            c /= k as u64;
        }
        let canon = canonical(&labels);
        if canon != labels || canon.iter().max().copied() != Some(k as u32 - 1) {
            continue;
        }
        if population_ok(graph, &labels, k, tol) && contiguous(graph, &labels, k) {
            out.insert(canon);
        }
    }
    out
}

/// Triangle graph on three unit precincts.
pub fn triangle() -> DualGraph {
    let nodes = ["a", "b", "c"]
        .iter()
        .map(|id| Precinct {
            id: id.to_string(),
            population: 1,
            votes: vec![VoteCount::new(1, 1)],
            centroid: None,
            area: 1.0,
        })
        .collect();
    let edges = vec![
        ("a".into(), "b".into(), 1),
        ("b".into(), "c".into(), 1),
        ("a".into(), "c".into(), 1),
    ];
    DualGraph::new(vec!["E".into()], nodes, edges).unwrap()
}

/// Plain relative-or-absolute closeness used throughout the oracle checks.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() <= 1e-12
}

// ---- metric oracles -------------------------------------------------------

/// Republican shares, turnout-weighted statewide share and seat count from
/// raw district tallies `(rep, dem)`.
pub struct Tally {
    pub rep: Vec<u64>,
    pub dem: Vec<u64>,
}

impl Tally {
    pub fn shares(&self) -> Vec<f64> {
        self.rep.iter().zip(&self.dem).map(|(&r, &d)| r as f64 / (r + d) as f64).collect()
    }

    pub fn statewide(&self) -> f64 {
        let r: u64 = self.rep.iter().sum();
        let d: u64 = self.dem.iter().sum();
        r as f64 / (r + d) as f64
    }
}

/// Midpoint-rule integral of `|S(v) - (1 - S(1 - v))|` on `cells` equal cells.
pub fn gini_quadrature(t: &Tally, cells: usize) -> f64 {
    let shares = t.shares();
    let v0 = t.statewide();
    let k = shares.len() as f64;
    let seats_at = |v: f64| shares.iter().filter(|&&s| s + (v - v0) > 0.5).count() as f64 / k;
    let h = 1.0 / cells as f64;
    (0..cells)
        .map(|i| {
            let v = (i as f64 + 0.5) * h;
            (seats_at(v) - (1.0 - seats_at(1.0 - v))).abs() * h
        })
        .sum()
}

/// Efficiency gap by counting wasted votes directly; ties go to Democrats.
pub fn efficiency_gap_wasted(t: &Tally) -> f64 {
    let mut wasted_r = 0.0;
    let mut wasted_d = 0.0;
    for (&r, &d) in t.rep.iter().zip(&t.dem) {
        let needed = (r + d) as f64 / 2.0;
        if r > d {
            wasted_r += r as f64 - needed;
            wasted_d += d as f64;
        } else {
            wasted_d += d as f64 - needed;
            wasted_r += r as f64;
        }
    }
    let total: u64 = t.rep.iter().chain(&t.dem).sum();
    (wasted_d - wasted_r) / total as f64
}

/// Declination from the angles at the midpoint vertex, via dot products.
pub fn declination_angles(shares: &[f64], buffer: f64) -> f64 {
    let mut s = shares.to_vec();
    s.push(buffer);
    s.push(1.0 - buffer);
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let pts: Vec<(f64, f64)> = s.iter().enumerate().map(|(i, &y)| ((i as f64 + 0.5) / n, y)).collect();
    let lost: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1 <= 0.5).collect();
    let won: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1 > 0.5).collect();
    let centroid = |ps: &[(f64, f64)]| {
        let m = ps.len() as f64;
        (ps.iter().map(|p| p.0).sum::<f64>() / m, ps.iter().map(|p| p.1).sum::<f64>() / m)
    };
    let f = centroid(&lost);
    let g = centroid(&won);
    let m = (lost.len() as f64 / n, 0.5);
    // Angle between the segment to each centroid and the horizontal.
    let angle = |p: (f64, f64), dir: f64| {
        let (dx, dy) = (p.0 - m.0, p.1 - m.1);
        let cos = (dx * dir) / (dx * dx + dy * dy).sqrt();
        cos.clamp(-1.0, 1.0).acos()
    };
    let theta_f = angle(f, -1.0);
    let theta_g = angle(g, 1.0);
    2.0 / std::f64::consts::PI * (theta_f - theta_g)
}

/// Average absolute partisan dislocation by brute force per precinct.
pub fn aapd_brute(graph: &DualGraph, plan: &[u32], k: usize, election: usize) -> f64 {
    let n = graph.node_count();
    let votes: Vec<VoteCount> = graph.nodes().iter().map(|p| p.votes[election]).collect();
    let total: u64 = votes.iter().map(|v| v.rep + v.dem).sum();
    let mut district = vec![(0u64, 0u64); k];
    for (v, &d) in plan.iter().enumerate() {
        district[d as usize].0 += votes[v].rep;
        district[d as usize].1 += votes[v].rep + votes[v].dem;
    }
    let mut sum = 0.0;
    for i in 0..n {
        let (xi, yi) = graph.node(i).centroid.unwrap();
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let (xj, yj) = graph.node(j).centroid.unwrap();
                (((xj - xi).powi(2) + (yj - yi).powi(2)).sqrt(), j)
            })
            .collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let (mut r, mut t) = (votes[i].rep, votes[i].rep + votes[i].dem);
        for &(_, j) in &others {
            if (t as f64) * k as f64 >= total as f64 {
                break;
            }
            r += votes[j].rep;
            t += votes[j].rep + votes[j].dem;
        }
        let (dr, dt) = district[plan[i] as usize];
        sum += (dr as f64 / dt as f64 - r as f64 / t as f64).abs();
    }
    sum / n as f64
}

// ---- fixtures -------------------------------------------------------------

/// The quadrant plan on a 4x4 grid: four districts of four precincts.
pub fn quadrants_4x4() -> Plan {
    Plan::new((0..16).map(|i| (((i / 4) >= 2) as u32) * 2 + ((i % 4) >= 2) as u32).collect(), 4).unwrap()
}

/// A 4x4 grid whose quadrant districts carry the given Republican vote
/// totals, each out of 10000 two-party votes spread over four precincts of
/// 2500. Precinct-level splits vary so that dislocation is nontrivial.
pub fn quadrant_fixture(district_rep: [u64; 4], wobble: u64) -> (DualGraph, Plan) {
    let plan = quadrants_4x4();
    let mut per_node = [0u64; 16];
    for (d, &rep) in district_rep.iter().enumerate() {
        let nodes: Vec<usize> = (0..16).filter(|&i| plan.district_of(i) == d).collect();
        let base = rep / 4;
        let room = base.min(2500 - base - 3);
        let a = (wobble * (d as u64 + 1) * 37) % 400 % (room + 1);
        let b = (wobble * (d as u64 + 3) * 53) % 400 % (room + 1);
        let split = [base + a + rep % 4, base - a, base + b, base - b];
        for (&v, &r) in nodes.iter().zip(&split) {
            per_node[v] = r;
        }
    }
    let graph = grid_graph(4, 4, &["E"], |r, c| {
        let rep = per_node[r * 4 + c];
        (2500, vec![VoteCount::new(rep, 2500 - rep)])
    });
    (graph, plan)
}

/// District Republican totals (out of 10000 each) for the oracle suite.
/// Sums are multiples of 4 so every seats-votes breakpoint lies on the
/// 1e-4 grid; the last five are symmetric about their mean.
pub const ORACLE_TALLIES: [[u64; 4]; 24] = [
    [3000, 4500, 6000, 7000],
    [5940, 5500, 6200, 6100],
    [2000, 2600, 3100, 3900],
    [5200, 5400, 6800, 7400],
    [4000, 5000, 5000, 6000],
    [4800, 5100, 5300, 5600],
    [1200, 5600, 6100, 8900],
    [4999, 5001, 5100, 4700],
    [3333, 6667, 5000, 5000],
    [7000, 7100, 7200, 7500],
    [2500, 2500, 7500, 7500],
    [4400, 4600, 5800, 7200],
    [6600, 3400, 5900, 4100],
    [5000, 5000, 5000, 5000],
    [3900, 4200, 6400, 6700],
    [6100, 6150, 6200, 3150],
    [2800, 5200, 5500, 6100],
    [4700, 4900, 5100, 5700],
    [5800, 6200, 6300, 2100],
    // Symmetric about the mean: zero Gini, mean-median and bias.
    [4000, 4500, 5500, 6000],
    [5300, 5700, 6300, 6700],
    [2000, 3000, 5000, 6000],
    [6000, 6400, 6600, 7000],
    [3600, 3600, 4400, 4400],
];
