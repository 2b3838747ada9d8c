use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use redist_core::chains::EnsembleRecord;
use redist_core::diagnostics::{
    duplicate_rate, multi_start_density_check, percentile_of, psrf, quartiles, sorted_share_medians,
};
use redist_core::ensemble::{load_ensemble, EnsembleTable, METRIC_COLUMNS};
use redist_core::graph::load_graph;
use redist_core::metrics::{ranked_marginal_deviation, MetricOptions, PlanEvaluator};
use redist_core::partition::{canonical_hash, cut_edges, load_plan};
use redist_core::Error;
use serde::Serialize;

use crate::plots::{write_cut_edge_histogram, write_density_overlay, write_scatter, write_violins};
use crate::{write_json, AnalyzeArgs};

/// Bins used for the cross-file density agreement check.
const DENSITY_CHECK_BINS: usize = 20;

#[derive(Serialize)]
struct Report {
    files: Vec<FileSummary>,
    records: usize,
    districts: usize,
    enacted_plan_hash: String,
    /// Percentage of records repeating an earlier plan, over all files.
    duplicate_rate: f64,
    cut_edges: Summary,
    elections: BTreeMap<String, ElectionReport>,
}

#[derive(Serialize)]
struct FileSummary {
    path: String,
    records: usize,
    seed: Option<String>,
    start_plan_hash: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    enacted: f64,
    percentile: f64,
    quartiles: [f64; 3],
}

#[derive(Serialize)]
struct ElectionReport {
    enacted_shares: Vec<f64>,
    share_medians: Vec<f64>,
    share_percentiles: Vec<f64>,
    metrics: BTreeMap<String, Summary>,
    /// One value per metric over all files; empty with a single file.
    psrf: BTreeMap<String, Psrf>,
    /// Largest pairwise total variation between per-file `lrvs` histograms.
    density_tv: Option<f64>,
}

#[derive(Serialize)]
struct Psrf {
    value: f64,
    degenerate: bool,
    length: usize,
}

pub fn cmd_analyze(args: &AnalyzeArgs, out: &Path) -> Result<()> {
    let mut tables = Vec::new();
    for path in &args.ensembles {
        let mut t = load_ensemble(path)?;
        t.records.drain(..args.burn_in.min(t.records.len()));
        if t.is_empty() {
            return Err(Error::Schema(format!("{}: no records after burn-in", path.display())).into());
        }
        tables.push(t);
    }
    let first = &tables[0];
    for (t, path) in tables.iter().zip(&args.ensembles).skip(1) {
        if t.elections != first.elections || t.k != first.k {
            return Err(Error::Schema(format!(
                "{} does not share the columns of {}",
                path.display(),
                args.ensembles[0].display()
            ))
            .into());
        }
    }
    let (k, all_elections) = (first.k, first.elections.clone());
    let elections = if args.election.is_empty() { all_elections.clone() } else { args.election.clone() };
    if let Some(missing) = elections.iter().find(|e| !all_elections.contains(e)) {
        return Err(Error::Schema(format!("ensembles have no election `{missing}`")).into());
    }

    let graph = load_graph(&args.graph)?;
    let plan = load_plan(&graph, &args.plan)?;
    if plan.k() != k {
        return Err(Error::Plan(format!("enacted plan has {} districts, ensembles have {k}", plan.k())).into());
    }
    let evaluator = PlanEvaluator::new(&graph, &elections, k, MetricOptions::default())?;
    let mut enacted = EnsembleRecord {
        step: 0,
        plan_hash: canonical_hash(&plan),
        cut_edges: cut_edges(&graph, &plan),
        elections: evaluator.evaluate(&plan)?,
    };

    let files: Vec<FileSummary> = tables
        .iter()
        .zip(&args.ensembles)
        .map(|(t, p)| FileSummary {
            path: p.display().to_string(),
            records: t.len(),
            seed: t.manifest_value("seed").map(str::to_string),
            start_plan_hash: t.manifest_value("start_plan_hash").map(str::to_string),
        })
        .collect();
    let lengths: Vec<usize> = tables.iter().map(EnsembleTable::len).collect();
    let mut pooled =
        EnsembleTable::from_records(all_elections, k, tables.into_iter().flat_map(|t| t.records).collect());

    // Second pass: RMD against the per-rank medians of the pooled ensemble.
    let mut medians = BTreeMap::new();
    for (ei, e) in elections.iter().enumerate() {
        let m = sorted_share_medians(&pooled, e)?;
        let pos = pooled.elections.iter().position(|x| x == e).expect("checked above");
        for r in &mut pooled.records {
            let em = &mut r.elections[pos];
            em.metrics.rmd = Some(ranked_marginal_deviation(&em.shares, &m)?);
        }
        let em = &mut enacted.elections[ei];
        em.metrics.rmd = Some(ranked_marginal_deviation(&em.shares, &m)?);
        medians.insert(e.clone(), m);
    }
    let enacted_table = EnsembleTable::from_records(elections.clone(), k, vec![enacted.clone()]);

    let summarize = |name: &str| -> Result<Summary> {
        let column = pooled.column(name)?;
        let value = enacted_table.column(name)?[0];
        Ok(Summary { enacted: value, percentile: percentile_of(value, &column), quartiles: quartiles(&column) })
    };

    let n = lengths.iter().copied().min().unwrap_or(0);
    let mut reports = BTreeMap::new();
    for (ei, e) in elections.iter().enumerate() {
        let mut metrics = BTreeMap::new();
        let mut psrfs = BTreeMap::new();
        for metric in METRIC_COLUMNS.iter().copied().chain(["rmd"]) {
            let name = format!("{e}.{metric}");
            metrics.insert(metric.to_string(), summarize(&name)?);
            if lengths.len() >= 2 {
                let column = pooled.column(&name)?;
                let truncated: Vec<&[f64]> = split(&column, &lengths).iter().map(|s| &s[..n]).collect();
                if let Ok(r) = psrf(&truncated) {
                    psrfs.insert(metric.to_string(), Psrf { value: r.value, degenerate: r.degenerate, length: r.length });
                }
            }
        }
        let share_percentiles = (1..=k)
            .map(|rank| summarize(&format!("{e}.share_{rank}")).map(|s| s.percentile))
            .collect::<Result<_>>()?;

        let lrvs = pooled.column(&format!("{e}.lrvs"))?;
        let per_file = split(&lrvs, &lengths);
        let density_tv = match per_file.len() {
            0 | 1 => None,
            _ => Some(multi_start_density_check(&per_file, DENSITY_CHECK_BINS)?),
        };

        let enacted_lrvs = enacted.elections[ei].metrics.lrvs;
        write_density_overlay(&out.join(format!("density_{e}.csv")), e, &per_file, enacted_lrvs, args.bins)?;
        write_violins(&out.join(format!("violins_{e}.csv")), e, &pooled, &enacted.elections[ei].shares, args.plot_samples)?;
        write_scatter(&out.join(format!("scatter_{e}.csv")), e, &pooled, &enacted_table, args.plot_samples)?;

        reports.insert(
            e.clone(),
            ElectionReport {
                enacted_shares: enacted.elections[ei].shares.clone(),
                share_medians: medians[e].clone(),
                share_percentiles,
                metrics,
                psrf: psrfs,
                density_tv,
            },
        );
    }
    write_cut_edge_histogram(&out.join("cut_edges.csv"), &pooled, enacted.cut_edges)?;

    let report = Report {
        files,
        records: pooled.len(),
        districts: k,
        enacted_plan_hash: enacted.plan_hash.to_string(),
        duplicate_rate: duplicate_rate(pooled.records.iter().map(|r| r.plan_hash)),
        cut_edges: summarize("cut_edges")?,
        elections: reports,
    };
    write_json(&out.join("report.json"), &report)?;
    for (e, r) in &report.elections {
        println!("{e}: enacted lrvs {:.4} at percentile {:.2}", r.metrics["lrvs"].enacted, r.metrics["lrvs"].percentile);
    }
    Ok(())
}

fn split<'a>(column: &'a [f64], lengths: &[usize]) -> Vec<&'a [f64]> {
    let mut rest = column;
    lengths
        .iter()
        .map(|&n| {
            let (head, tail) = rest.split_at(n);
            rest = tail;
            head
        })
        .collect()
}
