//! Ensemble files: a few `# key: value` manifest lines, a header row, then one
//! comma-separated record per chain step.
//!
//! Columns are `step,plan_hash,cut_edges` followed, for each election `E`, by
//! `E.share_1 .. E.share_k` (ascending Republican shares) and then
//! `E.lrvs, E.seats_r, E.mean_median, E.partisan_bias, E.partisan_gini,
//! E.efficiency_gap, E.stdev_shares, E.aapd, E.buffered_declination, E.ties`.
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chains::{EnsembleRecord, Recorder};
use crate::error::{Error, Result};
use crate::metrics::{ElectionMetrics, MetricVector};
use crate::partition::PlanHash;

/// Per-election metric columns, in file order.
pub const METRIC_COLUMNS: [&str; 10] = [
    "lrvs",
    "seats_r",
    "mean_median",
    "partisan_bias",
    "partisan_gini",
    "efficiency_gap",
    "stdev_shares",
    "aapd",
    "buffered_declination",
    "ties",
];

const FLUSH_EVERY: u64 = 256;

/// Provenance lines written at the top of every ensemble file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub config_digest: String,
    pub proposal: String,
    pub steps: u64,
    pub seed: u64,
    pub chain_index: u64,
    pub start_plan_hash: String,
    pub started_unix: u64,
}

impl RunManifest {
    fn lines(&self) -> Vec<(String, String)> {
        vec![
            ("software_version".into(), self.software_version.clone()),
            ("config_digest".into(), self.config_digest.clone()),
            ("proposal".into(), self.proposal.clone()),
            ("steps".into(), self.steps.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("chain_index".into(), self.chain_index.to_string()),
            ("start_plan_hash".into(), self.start_plan_hash.clone()),
            ("started_unix".into(), self.started_unix.to_string()),
        ]
    }
}

pub fn header(elections: &[String], k: usize) -> Vec<String> {
    let mut cols = vec!["step".to_string(), "plan_hash".to_string(), "cut_edges".to_string()];
    for e in elections {
        cols.extend((1..=k).map(|i| format!("{e}.share_{i}")));
        cols.extend(METRIC_COLUMNS.iter().map(|m| format!("{e}.{m}")));
    }
    cols
}

fn metric_value(m: &MetricVector, name: &str) -> Option<f64> {
    Some(match name {
        "lrvs" => m.lrvs,
        "seats_r" => m.seats_r as f64,
        "mean_median" => m.mean_median,
        "partisan_bias" => m.partisan_bias,
        "partisan_gini" => m.partisan_gini,
        "efficiency_gap" => m.efficiency_gap,
        "stdev_shares" => m.stdev_shares,
        "aapd" => m.aapd,
        "buffered_declination" => m.buffered_declination,
        "ties" => m.ties as f64,
        "rmd" => m.rmd?,
        _ => return None,
    })
}

fn format_record(record: &EnsembleRecord) -> String {
    let mut line = format!("{},{},{}", record.step, record.plan_hash, record.cut_edges);
    for e in &record.elections {
        for s in &e.shares {
            line.push(',');
            line.push_str(&s.to_string());
        }
        let m = &e.metrics;
        for v in [
            m.lrvs.to_string(),
            m.seats_r.to_string(),
            m.mean_median.to_string(),
            m.partisan_bias.to_string(),
            m.partisan_gini.to_string(),
            m.efficiency_gap.to_string(),
            m.stdev_shares.to_string(),
            m.aapd.to_string(),
            m.buffered_declination.to_string(),
            m.ties.to_string(),
        ] {
            line.push(',');
            line.push_str(&v);
        }
    }
    line
}

/// Streams records to a file, flushing periodically so that a crash leaves
/// a readable prefix.
pub struct EnsembleWriter<W: Write> {
    out: BufWriter<W>,
    width: usize,
    pending: u64,
}

impl EnsembleWriter<File> {
    pub fn create(path: impl AsRef<Path>, manifest: &RunManifest, elections: &[String], k: usize) -> Result<Self> {
        EnsembleWriter::new(File::create(path)?, manifest, elections, k)
    }
}

impl<W: Write> EnsembleWriter<W> {
    pub fn new(writer: W, manifest: &RunManifest, elections: &[String], k: usize) -> Result<Self> {
        let mut out = BufWriter::new(writer);
        for (key, value) in manifest.lines() {
            writeln!(out, "# {key}: {value}")?;
        }
        let cols = header(elections, k);
        writeln!(out, "{}", cols.join(","))?;
        out.flush()?;
        Ok(EnsembleWriter { out, width: cols.len(), pending: 0 })
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl<W: Write> Recorder for EnsembleWriter<W> {
    fn record(&mut self, record: &EnsembleRecord) -> Result<()> {
        let line = format_record(record);
        debug_assert_eq!(line.split(',').count(), self.width);
        writeln!(self.out, "{line}")?;
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.out.flush()?;
            self.pending = 0;
        }
        Ok(())
    }
}

/// An ensemble loaded back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTable {
    pub manifest: Vec<(String, String)>,
    pub elections: Vec<String>,
    pub k: usize,
    pub records: Vec<EnsembleRecord>,
}

impl EnsembleTable {
    pub fn from_records(elections: Vec<String>, k: usize, records: Vec<EnsembleRecord>) -> Self {
        EnsembleTable { manifest: Vec::new(), elections, k, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn manifest_value(&self, key: &str) -> Option<&str> {
        self.manifest.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn election_position(&self, election: &str) -> Result<usize> {
        self.elections
            .iter()
            .position(|e| e == election)
            .ok_or_else(|| Error::Schema(format!("ensemble has no election `{election}`")))
    }

    pub fn election(&self, record: usize, election: &str) -> Result<&ElectionMetrics> {
        Ok(&self.records[record].elections[self.election_position(election)?])
    }

    /// Values of `cut_edges`, `E.<metric>` (including `E.rmd` once filled)
    /// or `E.share_<i>` across records.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        if name == "cut_edges" {
            return Ok(self.records.iter().map(|r| r.cut_edges as f64).collect());
        }
        if name == "step" {
            return Ok(self.records.iter().map(|r| r.step as f64).collect());
        }
        let (election, metric) = name
            .rsplit_once('.')
            .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?;
        let pos = self.election_position(election)?;
        if let Some(rank) = metric.strip_prefix("share_") {
            let rank: usize = rank
                .parse()
                .ok()
                .filter(|r| (1..=self.k).contains(r))
                .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?;
            return Ok(self.records.iter().map(|r| r.elections[pos].shares[rank - 1]).collect());
        }
        self.records
            .iter()
            .map(|r| {
                metric_value(&r.elections[pos].metrics, metric)
                    .ok_or_else(|| Error::Schema(format!("column `{name}` is unavailable")))
            })
            .collect()
    }
}

/// Parses an ensemble document. A trailing line without a newline is an
/// interrupted write and is dropped.
pub fn parse_ensemble(text: &str) -> Result<EnsembleTable> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut manifest = Vec::new();
    let mut lines = complete.lines().enumerate().peekable();
    while let Some((_, line)) = lines.next_if(|(_, l)| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once(':') {
            manifest.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let (_, head) = lines.next().ok_or_else(|| Error::Parse("ensemble file has no header".into()))?;
    let cols: Vec<&str> = head.split(',').collect();
    if cols.len() < 3 || cols[..3] != ["step", "plan_hash", "cut_edges"] {
        return Err(Error::Schema("ensemble header must start with step,plan_hash,cut_edges".into()));
    }
    let mut elections: Vec<String> = Vec::new();
    for c in &cols[3..] {
        let (e, _) = c
            .rsplit_once('.')
            .ok_or_else(|| Error::Schema(format!("bad ensemble column `{c}`")))?;
        if elections.last().map(String::as_str) != Some(e) {
            elections.push(e.to_string());
        }
    }
    let k = cols.iter().filter(|c| c.contains(".share_")).count() / elections.len().max(1);
    let expected = header(&elections, k);
    if cols != expected {
        return Err(Error::Schema(format!(
            "ensemble header does not match the column contract (expected {})",
            expected.join(",")
        )));
    }

    let mut records = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("ensemble line {}: {what}", lineno + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad("wrong number of fields"));
        }
        let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(&format!("bad number `{}`", fields[i])));
        let int = |i: usize| fields[i].parse::<u64>().map_err(|_| bad(&format!("bad integer `{}`", fields[i])));
        let mut idx = 3;
        let mut per_election = Vec::with_capacity(elections.len());
        for e in &elections {
            let shares = (0..k).map(|j| num(idx + j)).collect::<Result<Vec<_>>>()?;
            idx += k;
            let metrics = MetricVector {
                lrvs: num(idx)?,
                seats_r: int(idx + 1)? as usize,
                mean_median: num(idx + 2)?,
                partisan_bias: num(idx + 3)?,
                partisan_gini: num(idx + 4)?,
                efficiency_gap: num(idx + 5)?,
                stdev_shares: num(idx + 6)?,
                rmd: None,
                aapd: num(idx + 7)?,
                buffered_declination: num(idx + 8)?,
                ties: int(idx + 9)? as usize,
            };
            idx += METRIC_COLUMNS.len();
            per_election.push(ElectionMetrics { election: e.clone(), shares, metrics });
        }
        records.push(EnsembleRecord {
            step: int(0)?,
            plan_hash: fields[1].parse::<PlanHash>()?,
            cut_edges: int(2)? as usize,
            elections: per_election,
        });
    }
    Ok(EnsembleTable { manifest, elections, k, records })
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<EnsembleTable> {
    let path = path.as_ref();
    parse_ensemble(&std::fs::read_to_string(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// The record lines of an ensemble document, without the manifest.
pub fn payload(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect()
}
