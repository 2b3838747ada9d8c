//! Markov chains over districting plans: uniform flip, weighted flip and
//! spanning-tree recombination (ReCom).
//!
//! Every chain step emits one record, including rejected or failed steps, in
//! which case the current plan is recorded again. Random streams come from
//! ChaCha8 seeded with the configured seed; chain `i` of a multi-chain run
//! uses stream `i` of that seed.
mod flip;
mod recom;
mod tree;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use flip::{propose_uniform_flip, propose_weighted_flip, FlipMove};
pub use recom::{propose_recom, RecomOutcome, DEFAULT_TREE_ATTEMPTS};
pub use tree::{
    balanced_tree_cut, balanced_tree_cut_to, qualifying_cuts, random_spanning_tree, SpanningTree,
};

use crate::error::{Error, Result};
use crate::graph::DualGraph;
use crate::metrics::{ElectionMetrics, PlanEvaluator};
use crate::partition::{canonical_hash, cut_edges, is_contiguous, population_deviation, Plan, PlanHash};

pub type ChainRng = ChaCha8Rng;

/// Generator for chain `chain_index` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain_index: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain_index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    UniformFlip,
    WeightedFlip,
    Recom,
}

impl fmt::Display for Proposal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Proposal::UniformFlip => "uniform-flip",
            Proposal::WeightedFlip => "weighted-flip",
            Proposal::Recom => "recom",
        })
    }
}

impl FromStr for Proposal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-flip" => Ok(Proposal::UniformFlip),
            "weighted-flip" => Ok(Proposal::WeightedFlip),
            "recom" => Ok(Proposal::Recom),
            other => Err(Error::Schema(format!(
                "unknown proposal `{other}` (expected uniform-flip, weighted-flip or recom)"
            ))),
        }
    }
}

/// Hard constraints every emitted plan satisfies besides contiguity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraints {
    pub pop_tolerance: f64,
    pub cut_edge_bound: Option<usize>,
}

impl Constraints {
    pub fn check(&self, graph: &DualGraph, plan: &Plan) -> Result<()> {
        if !is_contiguous(graph, plan) {
            return Err(Error::Constraint("plan has a noncontiguous district".into()));
        }
        let dev = population_deviation(graph, plan);
        if dev > self.pop_tolerance {
            return Err(Error::Constraint(format!(
                "population deviation {dev} exceeds tolerance {}",
                self.pop_tolerance
            )));
        }
        if let Some(bound) = self.cut_edge_bound {
            let cut = cut_edges(graph, plan);
            if cut > bound {
                return Err(Error::Constraint(format!("{cut} cut edges exceed the bound of {bound}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub proposal: Proposal,
    pub steps: u64,
    pub seed: u64,
    pub pop_tolerance: f64,
    pub cut_edge_bound: Option<usize>,
    pub gibbs_beta: f64,
    pub tree_attempts: usize,
    pub start: Plan,
}

impl ChainConfig {
    pub fn new(proposal: Proposal, steps: u64, seed: u64, start: Plan) -> Self {
        ChainConfig {
            proposal,
            steps,
            seed,
            pop_tolerance: 0.01,
            cut_edge_bound: None,
            gibbs_beta: 0.0,
            tree_attempts: DEFAULT_TREE_ATTEMPTS,
            start,
        }
    }

    pub fn constraints(&self) -> Constraints {
        Constraints { pop_tolerance: self.pop_tolerance, cut_edge_bound: self.cut_edge_bound }
    }

    pub fn validate(&self, graph: &DualGraph) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Schema("steps must be at least 1".into()));
        }
        if !(self.pop_tolerance > 0.0 && self.pop_tolerance < 1.0) {
            return Err(Error::Schema(format!("pop_tolerance {} outside (0, 1)", self.pop_tolerance)));
        }
        if self.gibbs_beta.is_nan() || self.gibbs_beta < 0.0 {
            return Err(Error::Schema(format!("gibbs_beta {} is negative", self.gibbs_beta)));
        }
        if self.tree_attempts == 0 {
            return Err(Error::Schema("tree_attempts must be at least 1".into()));
        }
        if self.start.len() != graph.node_count() {
            return Err(Error::Plan(format!(
                "start plan covers {} nodes but the graph has {}",
                self.start.len(),
                graph.node_count()
            )));
        }
        self.constraints()
            .check(graph, &self.start)
            .map_err(|e| Error::Constraint(format!("start plan: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Rejected,
    Failed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStats {
    pub accepted: u64,
    pub rejected: u64,
    pub failed: u64,
}

/// A running chain over a shared graph.
pub struct Chain<'g> {
    graph: &'g DualGraph,
    config: ChainConfig,
    plan: Plan,
    rng: ChainRng,
    stats: ChainStats,
}

impl<'g> Chain<'g> {
    pub fn new(graph: &'g DualGraph, config: ChainConfig, chain_index: u64) -> Result<Self> {
        config.validate(graph)?;
        let rng = chain_rng(config.seed, chain_index);
        let plan = config.start.clone();
        Ok(Chain { graph, config, plan, rng, stats: ChainStats::default() })
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let constraints = self.config.constraints();
        let outcome = match self.config.proposal {
            Proposal::UniformFlip => {
                propose_uniform_flip(self.graph, &self.plan, &constraints, &mut self.rng).into()
            }
            Proposal::WeightedFlip => propose_weighted_flip(
                self.graph,
                &self.plan,
                &constraints,
                self.config.gibbs_beta,
                &mut self.rng,
            )
            .into(),
            Proposal::Recom => propose_recom(
                self.graph,
                &self.plan,
                &constraints,
                self.config.tree_attempts,
                &mut self.rng,
            )?,
        };
        Ok(match outcome {
            RecomOutcome::Accepted(next) => {
                self.plan = next;
                self.stats.accepted += 1;
                StepOutcome::Accepted
            }
            RecomOutcome::Rejected => {
                self.stats.rejected += 1;
                StepOutcome::Rejected
            }
            RecomOutcome::Failed => {
                self.stats.failed += 1;
                StepOutcome::Failed
            }
        })
    }
}

impl From<Option<Plan>> for RecomOutcome {
    fn from(p: Option<Plan>) -> Self {
        p.map_or(RecomOutcome::Rejected, RecomOutcome::Accepted)
    }
}

/// One row of an ensemble: the plan after `step` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub step: u64,
    pub plan_hash: PlanHash,
    pub cut_edges: usize,
    pub elections: Vec<ElectionMetrics>,
}

/// Sink for ensemble records.
pub trait Recorder {
    fn record(&mut self, record: &EnsembleRecord) -> Result<()>;
}

impl Recorder for Vec<EnsembleRecord> {
    fn record(&mut self, record: &EnsembleRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Runs `config.steps` steps of chain `chain_index`, emitting one record per step.
pub fn run_chain<R: Recorder + ?Sized>(
    graph: &DualGraph,
    config: &ChainConfig,
    chain_index: u64,
    evaluator: &PlanEvaluator<'_>,
    recorder: &mut R,
) -> Result<ChainStats> {
    let mut chain = Chain::new(graph, config.clone(), chain_index)?;
    let mut current = EnsembleRecord {
        step: 0,
        plan_hash: canonical_hash(chain.plan()),
        cut_edges: cut_edges(graph, chain.plan()),
        elections: evaluator.evaluate(chain.plan())?,
    };
    for step in 1..=config.steps {
        if chain.step()? == StepOutcome::Accepted {
            current.plan_hash = canonical_hash(chain.plan());
            current.cut_edges = cut_edges(graph, chain.plan());
            current.elections = evaluator.evaluate(chain.plan())?;
        }
        current.step = step;
        recorder.record(&current)?;
    }
    Ok(chain.stats())
}
