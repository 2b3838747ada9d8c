use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use redist_core::graph::{load_graph, merge_defective_precincts, validate_graph, write_graph, MergeReport, ValidationReport};
use redist_core::partition::{canonical_hash, is_contiguous, load_plan, population_deviation, write_plan, Plan};
use redist_core::{DualGraph, Error};
use serde::Serialize;

use crate::{write_json, IngestArgs};

#[derive(Serialize)]
struct IngestReport {
    graph_source: String,
    merge: MergeReport,
    validation: ValidationReport,
    plan: Option<PlanReport>,
}

#[derive(Serialize)]
struct PlanReport {
    source: String,
    districts: usize,
    hash: String,
    contiguous: bool,
    population_deviation: f64,
    /// Absorbed precincts whose label differed from the precinct absorbing them.
    relabeled: Vec<String>,
}

pub fn cmd_ingest(args: &IngestArgs, out: &Path) -> Result<()> {
    let graph = load_graph(&args.graph)?;
    let components = match &args.components {
        Some(path) => load_components(path)?,
        None => BTreeMap::new(),
    };
    let (merged, merge) = merge_defective_precincts(&graph, &components)?;
    let validation = validate_graph(&merged);
    if !validation.connected {
        eprintln!("warning: merged graph has {} components", validation.components);
    }

    let plan = match &args.plan {
        Some(path) => {
            let original = load_plan(&graph, path)?;
            let (plan, relabeled) = carry_plan(&graph, &merged, &original, &merge)?;
            write_plan(&merged, &plan, out.join("plan.csv"))?;
            Some(PlanReport {
                source: path.display().to_string(),
                districts: plan.k(),
                hash: canonical_hash(&plan).to_string(),
                contiguous: is_contiguous(&merged, &plan),
                population_deviation: population_deviation(&merged, &plan),
                relabeled,
            })
        }
        None => None,
    };

    write_graph(&merged, out.join("graph.json"))?;
    let report = IngestReport { graph_source: args.graph.display().to_string(), merge, validation, plan };
    write_json(&out.join("ingest_report.json"), &report)?;
    println!(
        "ingested {} precincts ({} after merging), {} edges",
        report.merge.nodes_before,
        report.merge.nodes_after,
        merged.edge_count()
    );
    Ok(())
}

/// Reads an `id,pieces` table; a non-numeric first row is taken as a header.
pub fn load_components(path: &Path) -> Result<BTreeMap<String, u32>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Parse(format!("{}:{}: expected `id,pieces`, got `{line}`", path.display(), n + 1));
        let (id, pieces) = line.split_once(',').ok_or_else(bad)?;
        match pieces.trim().parse::<u32>() {
            Ok(p) => {
                if map.insert(id.trim().to_string(), p).is_some() {
                    return Err(Error::Schema(format!("{}:{}: duplicate id `{}`", path.display(), n + 1, id.trim())).into());
                }
            }
            Err(_) if n == 0 => continue,
            Err(_) => return Err(bad().into()),
        }
    }
    Ok(map)
}

/// Restricts a plan on the original graph to the precincts that survived merging.
fn carry_plan(graph: &DualGraph, merged: &DualGraph, plan: &Plan, merge: &MergeReport) -> Result<(Plan, Vec<String>)> {
    let label = |id: &str| graph.index_of(id).map(|i| plan.assignment()[i]);
    let assignment: Vec<u32> = merged
        .nodes()
        .iter()
        .map(|p| label(&p.id).ok_or_else(|| Error::Plan(format!("merged precinct `{}` not in source graph", p.id))))
        .collect::<Result<_, _>>()?;
    let relabeled = merge
        .merges
        .iter()
        .filter(|(absorbed, into)| label(absorbed) != label(into))
        .map(|(absorbed, _)| absorbed.clone())
        .collect();
    Ok((Plan::for_graph(merged, assignment, plan.k())?, relabeled))
}
