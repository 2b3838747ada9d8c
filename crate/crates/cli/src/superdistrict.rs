use std::path::Path;

use anyhow::Result;
use redist_core::graph::load_graph;
use redist_core::partition::{is_contiguous, write_plan, Plan};
use redist_core::superdistrict::{greedy_improve, seed_by_share, split_superdistrict, SuperDistrictState, Swap};
use redist_core::DualGraph;
use serde::Serialize;

use crate::{write_json, SuperdistrictArgs};

#[derive(Serialize)]
struct Report {
    election: String,
    pop_tolerance: f64,
    seed_share: f64,
    final_share: f64,
    swaps: Vec<Swap>,
    superdistrict: Side,
    remainder: Side,
    halves: [Side; 2],
    split_feasible: bool,
    /// Contiguity is not enforced by the search; reported for information.
    contiguous: bool,
}

#[derive(Serialize)]
struct Side {
    precincts: usize,
    population: u64,
    dem_share: f64,
}

impl From<&SuperDistrictState> for Side {
    fn from(s: &SuperDistrictState) -> Self {
        Side { precincts: s.members.len(), population: s.population, dem_share: s.dem_share() }
    }
}

pub fn cmd_superdistrict(args: &SuperdistrictArgs, out: &Path) -> Result<()> {
    let graph = load_graph(&args.graph)?;
    let election = graph.election_index(&args.election)?;
    let (a, b) = seed_by_share(&graph, election);
    let seed_share = a.dem_share();
    let outcome = greedy_improve(&graph, election, a, b, args.pop_tolerance);
    let split = split_superdistrict(&graph, election, &outcome.a, args.pop_tolerance)?;

    let plan = labels(&graph, &split.halves)?;
    write_plan(&graph, &plan, out.join("superdistrict_plan.csv"))?;
    let report = Report {
        election: args.election.clone(),
        pop_tolerance: args.pop_tolerance,
        seed_share,
        final_share: outcome.a.dem_share(),
        swaps: outcome.swaps,
        superdistrict: (&outcome.a).into(),
        remainder: (&outcome.b).into(),
        halves: [(&split.halves[0]).into(), (&split.halves[1]).into()],
        split_feasible: split.feasible,
        contiguous: is_contiguous(&graph, &plan),
    };
    write_json(&out.join("superdistrict_report.json"), &report)?;
    println!(
        "super district share {:.4} after {} swaps; halves {:.4} / {:.4}{}",
        report.final_share,
        report.swaps.len(),
        report.halves[0].dem_share,
        report.halves[1].dem_share,
        if report.split_feasible { "" } else { " (population tolerance not met)" }
    );
    Ok(())
}

/// Halves of the super district get labels 0 and 1, everything else 2.
fn labels(graph: &DualGraph, halves: &[SuperDistrictState; 2]) -> redist_core::Result<Plan> {
    let mut assignment = vec![2u32; graph.node_count()];
    for (label, half) in halves.iter().enumerate() {
        for &n in &half.members {
            assignment[n] = label as u32;
        }
    }
    let k = if assignment.contains(&2) { 3 } else { 2 };
    Plan::for_graph(graph, assignment, k)
}
