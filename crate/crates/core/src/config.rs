//! Flat `key = value` run configuration.
//!
//! Keys mirror [`ChainConfig`](crate::chains::ChainConfig): `proposal`,
//! `steps`, `seed`, `pop_tolerance`, `cut_edge_bound`, `gibbs_beta`,
//! `tree_attempts` and `start` (path to a plan file, relative to the config
//! file). `elections` optionally restricts scoring to a comma-separated list.
//! Blank lines and lines starting with `#` are ignored.
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::chains::{ChainConfig, Proposal, DEFAULT_TREE_ATTEMPTS};
use crate::error::{Error, Result};
use crate::graph::DualGraph;
use crate::partition::load_plan;

const KEYS: [&str; 9] = [
    "proposal",
    "steps",
    "seed",
    "pop_tolerance",
    "cut_edge_bound",
    "gibbs_beta",
    "tree_attempts",
    "start",
    "elections",
];

/// A parsed config file before the start plan is loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub proposal: Proposal,
    pub steps: u64,
    pub seed: u64,
    pub pop_tolerance: f64,
    pub cut_edge_bound: Option<usize>,
    pub gibbs_beta: f64,
    pub tree_attempts: usize,
    pub start: Option<PathBuf>,
    pub elections: Vec<String>,
    /// Normalized `key=value` lines, used for the digest.
    canonical: String,
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid value `{value}` for `{key}`")))
}

impl RunSettings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse(format!("line {}: expected `key = value`", i + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Schema(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if fields.insert(key.to_string(), (value.to_string(), i + 1)).is_some() {
                return Err(Error::Schema(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        let get = |k: &str| fields.get(k).map(|(v, l)| (v.as_str(), *l));
        let required = |k: &str| get(k).ok_or_else(|| Error::Schema(format!("missing required key `{k}`")));

        let (v, l) = required("proposal")?;
        let proposal = v.parse::<Proposal>().map_err(|e| Error::Schema(format!("line {l}: {e}")))?;
        let (v, l) = required("steps")?;
        let steps = parse_field("steps", v, l)?;
        let (v, l) = required("seed")?;
        let seed = parse_field("seed", v, l)?;
        let pop_tolerance = match get("pop_tolerance") {
            Some((v, l)) => parse_field("pop_tolerance", v, l)?,
            None => 0.01,
        };
        let cut_edge_bound = match get("cut_edge_bound") {
            Some((v, _)) if v.is_empty() || v == "none" => None,
            Some((v, l)) => Some(parse_field("cut_edge_bound", v, l)?),
            None => None,
        };
        let gibbs_beta = match get("gibbs_beta") {
            Some((v, l)) => parse_field("gibbs_beta", v, l)?,
            None => 0.0,
        };
        let tree_attempts = match get("tree_attempts") {
            Some((v, l)) => parse_field("tree_attempts", v, l)?,
            None => DEFAULT_TREE_ATTEMPTS,
        };
        let start = get("start").map(|(v, _)| PathBuf::from(v));
        let elections = get("elections")
            .map(|(v, _)| v.split(',').map(|e| e.trim().to_string()).filter(|e| !e.is_empty()).collect())
            .unwrap_or_default();
        let canonical = fields.iter().map(|(k, (v, _))| format!("{k}={v}\n")).collect();
        Ok(RunSettings {
            proposal,
            steps,
            seed,
            pop_tolerance,
            cut_edge_bound,
            gibbs_beta,
            tree_attempts,
            start,
            elections,
            canonical,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut settings =
            Self::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if let (Some(start), Some(dir)) = (&settings.start, path.parent()) {
            if start.is_relative() {
                settings.start = Some(dir.join(start));
            }
        }
        Ok(settings)
    }

    /// Hex SHA-256 of the normalized key/value pairs, with `seed` replaced
    /// by `seed_override` when given.
    pub fn digest(&self, seed_override: Option<u64>) -> String {
        let mut text = self.canonical.clone();
        if let Some(seed) = seed_override {
            text = text
                .lines()
                .map(|l| if l.starts_with("seed=") { format!("seed={seed}\n") } else { format!("{l}\n") })
                .collect();
            if !text.contains("seed=") {
                text.push_str(&format!("seed={seed}\n"));
            }
        }
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Builds a chain config; `start` overrides the config's own start plan.
    pub fn chain_config(&self, graph: &DualGraph, k: Option<usize>, start: Option<&Path>) -> Result<ChainConfig> {
        let path = start
            .map(Path::to_path_buf)
            .or_else(|| self.start.clone())
            .ok_or_else(|| Error::Schema("no start plan given".into()))?;
        let plan = load_plan(graph, &path)?;
        if let Some(k) = k.filter(|&k| k != plan.k()) {
            return Err(Error::Plan(format!("start plan has {} districts, expected {k}", plan.k())));
        }
        let mut config = ChainConfig::new(self.proposal, self.steps, self.seed, plan);
        config.pop_tolerance = self.pop_tolerance;
        config.cut_edge_bound = self.cut_edge_bound;
        config.gibbs_beta = self.gibbs_beta;
        config.tree_attempts = self.tree_attempts;
        config.validate(graph)?;
        Ok(config)
    }
}
