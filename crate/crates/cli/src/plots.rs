//! Plot-data tables. Every file opens with `# kind=<figure kind>` followed by
//! other `# key=value` lines, then a CSV header and rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use redist_core::ensemble::EnsembleTable;

/// Metrics plotted against `lrvs` in scatter tables.
const SCATTER_METRICS: [&str; 8] = [
    "mean_median",
    "partisan_bias",
    "partisan_gini",
    "efficiency_gap",
    "stdev_shares",
    "rmd",
    "aapd",
    "buffered_declination",
];

fn save(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// At most `cap` record indices, evenly spaced.
fn sample(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    (0..cap).map(|i| i * n / cap).collect()
}

/// Per-file `lrvs` densities on shared bins, one column per file.
pub fn write_density_overlay(path: &Path, election: &str, chains: &[&[f64]], enacted: f64, bins: usize) -> Result<()> {
    let bins = bins.max(1);
    let all = chains.iter().flat_map(|c| c.iter()).copied();
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if hi <= lo {
        lo -= 5e-4;
        hi += 5e-4;
    }
    let width = (hi - lo) / bins as f64;
    let mut text = format!("# kind=density-overlay\n# election={election}\n# metric=lrvs\n# enacted={enacted}\n");
    let firsts: Vec<String> = chains.iter().map(|c| c[0].to_string()).collect();
    writeln!(text, "# first={}", firsts.join(";"))?;
    let names: Vec<String> = (0..chains.len()).map(|i| format!("chain_{i}")).collect();
    writeln!(text, "bin_lo,bin_hi,{}", names.join(","))?;
    let counts: Vec<Vec<usize>> = chains
        .iter()
        .map(|c| {
            let mut h = vec![0; bins];
            for &x in c.iter() {
                h[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
            h
        })
        .collect();
    for b in 0..bins {
        let cells: Vec<String> = counts
            .iter()
            .zip(chains)
            .map(|(h, c)| (h[b] as f64 / (c.len() as f64 * width)).to_string())
            .collect();
        let (a, z) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
        writeln!(text, "{a},{z},{}", cells.join(","))?;
    }
    save(path, text)
}

/// Sorted district shares in long form; the enacted plan's rows are marked.
pub fn write_violins(path: &Path, election: &str, table: &EnsembleTable, enacted: &[f64], cap: usize) -> Result<()> {
    let mut text = format!("# kind=violins\n# election={election}\n# districts={}\nsource,rank,share\n", table.k);
    for (rank, s) in enacted.iter().enumerate() {
        writeln!(text, "enacted,{},{s}", rank + 1)?;
    }
    for i in sample(table.len(), cap) {
        for (rank, s) in table.election(i, election)?.shares.iter().enumerate() {
            writeln!(text, "ensemble,{},{s}", rank + 1)?;
        }
    }
    save(path, text)
}

/// `lrvs` against each partisan metric, enacted row first.
pub fn write_scatter(path: &Path, election: &str, table: &EnsembleTable, enacted: &EnsembleTable, cap: usize) -> Result<()> {
    let mut text = format!("# kind=scatter-marginals\n# election={election}\n# x=lrvs\nsource,lrvs,{}\n", SCATTER_METRICS.join(","));
    let columns = |t: &EnsembleTable| -> Result<Vec<Vec<f64>>> {
        std::iter::once("lrvs")
            .chain(SCATTER_METRICS)
            .map(|m| Ok(t.column(&format!("{election}.{m}"))?))
            .collect()
    };
    let row = |cols: &[Vec<f64>], i: usize| cols.iter().map(|c| c[i].to_string()).collect::<Vec<_>>().join(",");
    let e = columns(enacted)?;
    writeln!(text, "enacted,{}", row(&e, 0))?;
    let cols = columns(table)?;
    for i in sample(table.len(), cap) {
        writeln!(text, "ensemble,{}", row(&cols, i))?;
    }
    save(path, text)
}

pub fn write_cut_edge_histogram(path: &Path, table: &EnsembleTable, enacted: usize) -> Result<()> {
    let mut counts = BTreeMap::new();
    for r in &table.records {
        *counts.entry(r.cut_edges).or_insert(0usize) += 1;
    }
    let mut text = format!("# kind=histogram\n# metric=cut_edges\n# enacted={enacted}\ncut_edges,count\n");
    for (c, n) in counts {
        writeln!(text, "{c},{n}")?;
    }
    save(path, text)
}
