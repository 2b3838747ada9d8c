use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use redist_core::chains::{run_chain, ChainConfig, ChainStats};
use redist_core::config::RunSettings;
use redist_core::ensemble::{EnsembleWriter, RunManifest};
use redist_core::graph::load_graph;
use redist_core::metrics::{MetricOptions, PlanEvaluator};
use redist_core::partition::canonical_hash;
use redist_core::DualGraph;

use crate::RunArgs;

pub fn cmd_run(args: &RunArgs, out: &Path) -> Result<()> {
    let graph = load_graph(&args.graph)?;
    let mut settings = RunSettings::load(&args.config)?;
    if let Some(seed) = args.seed {
        settings.seed = seed;
    }
    let chains = args.chains.unwrap_or(args.plan.len().max(1));
    if chains == 0 {
        bail!("--chains must be at least 1");
    }
    if args.plan.len() > 1 && args.plan.len() != chains {
        bail!("{} start plans given for {chains} chains", args.plan.len());
    }

    let elections = if !args.election.is_empty() {
        args.election.clone()
    } else if !settings.elections.is_empty() {
        settings.elections.clone()
    } else {
        graph.elections().to_vec()
    };

    let starts: Vec<Option<PathBuf>> = match args.plan.len() {
        0 => vec![None; chains],
        1 => vec![Some(args.plan[0].clone()); chains],
        _ => args.plan.iter().cloned().map(Some).collect(),
    };
    let configs: Vec<ChainConfig> = starts
        .iter()
        .map(|s| settings.chain_config(&graph, None, s.as_deref()))
        .collect::<redist_core::Result<_>>()?;
    let k = configs[0].start.k();
    if configs.iter().any(|c| c.start.k() != k) {
        bail!(redist_core::Error::Plan("start plans disagree on the number of districts".into()));
    }
    let evaluator = PlanEvaluator::new(&graph, &elections, k, MetricOptions::default())?;

    let digest = settings.digest(args.seed);
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let results: Vec<Result<(PathBuf, ChainStats)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .enumerate()
            .map(|(i, config)| {
                let manifest = RunManifest {
                    software_version: env!("CARGO_PKG_VERSION").to_string(),
                    config_digest: digest.clone(),
                    proposal: config.proposal.to_string(),
                    steps: config.steps,
                    seed: config.seed,
                    chain_index: i as u64,
                    start_plan_hash: canonical_hash(&config.start).to_string(),
                    started_unix,
                };
                let path = out.join(format!("chain_{i}.csv"));
                let (graph, evaluator, elections) = (&graph, &evaluator, &elections);
                scope.spawn(move || run_one(graph, config, &manifest, evaluator, elections, &path).map(|s| (path, s)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| bail!("chain worker panicked")))
            .collect()
    });

    for result in results {
        let (path, stats) = result?;
        println!(
            "{}: {} accepted, {} rejected, {} failed",
            path.display(),
            stats.accepted,
            stats.rejected,
            stats.failed
        );
    }
    Ok(())
}

fn run_one(
    graph: &DualGraph,
    config: &ChainConfig,
    manifest: &RunManifest,
    evaluator: &PlanEvaluator<'_>,
    elections: &[String],
    path: &Path,
) -> Result<ChainStats> {
    let mut writer = EnsembleWriter::create(path, manifest, elections, config.start.k())
        .with_context(|| format!("creating {}", path.display()))?;
    let stats = run_chain(graph, config, manifest.chain_index, evaluator, &mut writer)?;
    writer.finish()?;
    Ok(stats)
}
