//! Partisan metrics of a plan, all scored for the Republican party: larger
//! values of the signed metrics mean a plan more favorable to Republicans.
//!
//! A district with a two-party share of exactly 1/2 is not counted as a
//! Republican seat anywhere in this module.
use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DualGraph, VoteCount};
use crate::partition::{tally, DistrictTally, Plan};

/// Default share of the two buffer districts used by [`buffered_declination`].
pub const DEFAULT_DECLINATION_BUFFER: f64 = 0.75;

/// Shares closer than this to the statewide share are treated as sitting on
/// it. Far below the gap between distinct vote fractions at realistic
/// turnouts, far above the rounding in a mean of shares.
pub const SWING_TIE_EPS: f64 = 1e-14;

/// Republican two-party shares of each district, sorted ascending, together
/// with the two-party counts behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareVector {
    shares: Vec<f64>,
    rep: Vec<u64>,
    turnout: Vec<u64>,
}

impl ShareVector {
    /// Builds the vector from per-district counts in any order.
    pub fn from_votes(votes: &[VoteCount]) -> Result<Self> {
        if votes.is_empty() {
            return Err(Error::Metric("no districts".into()));
        }
        let mut rows: Vec<(f64, u64, u64)> = Vec::with_capacity(votes.len());
        for (d, v) in votes.iter().enumerate() {
            if v.total() == 0 {
                return Err(Error::Metric(format!("district {d} has no two-party votes")));
            }
            rows.push((v.rep as f64 / v.total() as f64, v.rep, v.total()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        Ok(ShareVector {
            shares: rows.iter().map(|r| r.0).collect(),
            rep: rows.iter().map(|r| r.1).collect(),
            turnout: rows.iter().map(|r| r.2).collect(),
        })
    }

    /// Shares given directly, each district weighted by the same turnout.
    pub fn from_shares(shares: &[f64]) -> Result<Self> {
        if shares.is_empty() {
            return Err(Error::Metric("no districts".into()));
        }
        if let Some(bad) = shares.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Metric(format!("share {bad} outside [0, 1]")));
        }
        let mut sorted = shares.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        Ok(ShareVector { shares: sorted, rep: vec![0; n], turnout: vec![0; n] })
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    pub fn turnout(&self) -> &[u64] {
        &self.turnout
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    fn has_counts(&self) -> bool {
        self.turnout.iter().any(|&t| t > 0)
    }

    /// Statewide Republican share under the given baseline.
    pub fn statewide_share(&self, baseline: SwingBaseline) -> f64 {
        match baseline {
            SwingBaseline::TurnoutWeighted if self.has_counts() => {
                let rep: u64 = self.rep.iter().sum();
                let total: u64 = self.turnout.iter().sum();
                rep as f64 / total as f64
            }
            _ => mean(&self.shares),
        }
    }

    /// Number of districts sitting exactly at one half.
    pub fn ties(&self) -> usize {
        self.shares.iter().filter(|&&s| s == 0.5).count()
    }
}

/// Statewide share used as the pivot of uniform partisan swing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwingBaseline {
    /// Total Republican votes over total two-party votes.
    #[default]
    TurnoutWeighted,
    /// Plain mean of district shares.
    Unweighted,
}

pub fn share_vector(tallies: &[DistrictTally], election: usize) -> Result<ShareVector> {
    let votes: Vec<VoteCount> = tallies.iter().map(|t| t.votes[election]).collect();
    ShareVector::from_votes(&votes)
}

pub fn lrvs(shares: &ShareVector) -> f64 {
    shares.shares[0]
}

pub fn seat_count(shares: &ShareVector) -> usize {
    shares.shares.iter().filter(|&&s| s > 0.5).count()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median of an ascending slice; midpoint of the central pair for even length.
pub(crate) fn sorted_median(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn mean_median(shares: &ShareVector) -> f64 {
    mean(&shares.shares) - sorted_median(&shares.shares)
}

/// Republican seat share minus 1/2 after swinging the statewide share to 1/2.
///
/// A district landing on 1/2 after the swing (its share equals the statewide
/// share, up to [`SWING_TIE_EPS`]) counts as half a seat, the midpoint of the
/// seats-votes jump there. This keeps the bias at zero whenever the curve is
/// symmetric.
pub fn partisan_bias(shares: &ShareVector, baseline: SwingBaseline) -> f64 {
    let v = shares.statewide_share(baseline);
    let seats: f64 = shares
        .shares
        .iter()
        .map(|&s| {
            if (s - v).abs() <= SWING_TIE_EPS {
                0.5
            } else if s > v {
                1.0
            } else {
                0.0
            }
        })
        .sum();
    seats / shares.len() as f64 - 0.5
}

/// Seats-votes step function under uniform swing.
///
/// `S(v) = #{d : b_d < v} / k` with `b_d = 1/2 + V - s_d`, the statewide share
/// at which district `d` turns Republican.
#[derive(Clone, Debug, PartialEq)]
pub struct SeatsVotesCurve {
    breakpoints: Vec<f64>,
}

impl SeatsVotesCurve {
    pub fn new(shares: &ShareVector, baseline: SwingBaseline) -> Self {
        let v = shares.statewide_share(baseline);
        let mut breakpoints: Vec<f64> = shares.shares.iter().map(|s| 0.5 + v - s).collect();
        breakpoints.sort_by(f64::total_cmp);
        SeatsVotesCurve { breakpoints }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn seat_share(&self, v: f64) -> f64 {
        let won = self.breakpoints.partition_point(|&b| b < v);
        won as f64 / self.breakpoints.len() as f64
    }

    /// The opponent's curve reflected through (1/2, 1/2): `1 - S(1 - v)`.
    pub fn reflected_seat_share(&self, v: f64) -> f64 {
        1.0 - self.seat_share(1.0 - v)
    }
}

pub fn seats_votes_curve(shares: &ShareVector) -> SeatsVotesCurve {
    SeatsVotesCurve::new(shares, SwingBaseline::TurnoutWeighted)
}

/// Area between the seats-votes curve and its point reflection on `[0, 1]`,
/// integrated exactly over the pieces of the two step functions.
pub fn partisan_gini(shares: &ShareVector) -> f64 {
    let curve = seats_votes_curve(shares);
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for &b in curve.breakpoints() {
        for x in [b, 1.0 - b] {
            if x > 0.0 && x < 1.0 {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (curve.seat_share(mid) - curve.reflected_seat_share(mid)).abs() * (w[1] - w[0])
        })
        .sum()
}

/// `(wasted D − wasted R) / total two-party votes`.
///
/// The loser wastes every vote, the winner every vote above half the
/// district's two-party total. A tied district counts as a Democratic win.
pub fn efficiency_gap(shares: &ShareVector) -> Result<f64> {
    if !shares.has_counts() {
        return Err(Error::Metric("efficiency gap needs vote counts".into()));
    }
    let mut wasted_rep = 0.0;
    let mut wasted_dem = 0.0;
    for (&rep, &total) in shares.rep.iter().zip(&shares.turnout) {
        let dem = (total - rep) as f64;
        let (rep, half) = (rep as f64, total as f64 / 2.0);
        if rep > dem {
            wasted_rep += rep - half;
            wasted_dem += dem;
        } else {
            wasted_rep += rep;
            wasted_dem += dem - half;
        }
    }
    let total: u64 = shares.turnout.iter().sum();
    Ok((wasted_dem - wasted_rep) / total as f64)
}

/// Population standard deviation of the district shares.
pub fn stdev_shares(shares: &ShareVector) -> f64 {
    let m = mean(&shares.shares);
    (shares.shares.iter().map(|s| (s - m).powi(2)).sum::<f64>() / shares.len() as f64).sqrt()
}

/// Sum of squared gaps between sorted shares and per-rank ensemble medians.
pub fn ranked_marginal_deviation(shares: &[f64], medians: &[f64]) -> Result<f64> {
    if shares.len() != medians.len() {
        return Err(Error::Metric(format!(
            "{} shares against {} medians",
            shares.len(),
            medians.len()
        )));
    }
    Ok(shares.iter().zip(medians).map(|(s, m)| (s - m).powi(2)).sum())
}

/// Declination of an ascending share list, positive when Republicans are
/// favored. `None` if either party wins no district.
pub fn declination(sorted_shares: &[f64]) -> Option<f64> {
    let n = sorted_shares.len() as f64;
    let below = sorted_shares.partition_point(|&s| s <= 0.5);
    let (lost, won) = sorted_shares.split_at(below);
    if lost.is_empty() || won.is_empty() {
        return None;
    }
    let xs = |offset: usize, len: usize| (offset as f64 + len as f64 / 2.0) / n;
    let (fx, fy) = (xs(0, lost.len()), mean(lost));
    let (gx, gy) = (xs(below, won.len()), mean(won));
    let mx = below as f64 / n;
    let theta_f = ((0.5 - fy) / (mx - fx)).atan();
    let theta_g = ((gy - 0.5) / (gx - mx)).atan();
    Some(FRAC_2_PI * (theta_f - theta_g))
}

/// Declination after appending one district won by each party, at shares
/// `buffer` and `1 - buffer`. Finite even for single-party sweeps.
pub fn buffered_declination(shares: &ShareVector, buffer: f64) -> f64 {
    let mut augmented = shares.shares.clone();
    let (hi, lo) = (buffer.max(1.0 - buffer), buffer.min(1.0 - buffer));
    augmented.push(hi);
    augmented.push(lo);
    augmented.sort_by(f64::total_cmp);
    declination(&augmented).expect("buffer districts guarantee both sides are nonempty")
}

/// Per-precinct Republican share of the precinct's nearest-voters neighborhood.
///
/// Each neighborhood starts at the precinct itself and adds precincts in
/// order of centroid distance (ties by node order) until it holds at least
/// `total two-party votes / k` votes. Independent of the plan, so it is
/// computed once per graph, election and district count.
#[derive(Clone, Debug)]
pub struct Neighborhoods {
    election: usize,
    shares: Vec<f64>,
}

impl Neighborhoods {
    pub fn new(graph: &DualGraph, election: usize, k: usize) -> Result<Self> {
        let n = graph.node_count();
        let mut points = Vec::with_capacity(n);
        for p in graph.nodes() {
            points.push(p.centroid.ok_or_else(|| {
                Error::Metric(format!("precinct `{}` has no centroid", p.id))
            })?);
        }
        let votes: Vec<VoteCount> = graph.nodes().iter().map(|p| p.votes[election]).collect();
        let total: u64 = votes.iter().map(VoteCount::total).sum();
        if total == 0 {
            return Err(Error::Metric("election has no two-party votes".into()));
        }
        let threshold = total as f64 / k as f64;

        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        let mut shares = Vec::with_capacity(n);
        for (i, &(x, y)) in points.iter().enumerate() {
            order.clear();
            order.extend(points.iter().enumerate().map(|(j, &(a, b))| {
                let (dx, dy) = (a - x, b - y);
                (if i == j { -1.0 } else { dx * dx + dy * dy }, j)
            }));
            order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut acc = VoteCount::default();
            for &(_, j) in &order {
                acc += votes[j];
                if acc.total() as f64 >= threshold {
                    break;
                }
            }
            shares.push(acc.rep as f64 / acc.total() as f64);
        }
        Ok(Neighborhoods { election, shares })
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    /// Mean absolute gap between each precinct's district share and its
    /// neighborhood share. `district_shares` is indexed by district label.
    pub fn aapd(&self, plan: &Plan, district_shares: &[f64]) -> f64 {
        let sum: f64 = self
            .shares
            .iter()
            .enumerate()
            .map(|(node, s)| (district_shares[plan.district_of(node)] - s).abs())
            .sum();
        sum / self.shares.len() as f64
    }
}

/// Average absolute partisan dislocation of `plan`.
pub fn aapd(graph: &DualGraph, plan: &Plan, election: usize) -> Result<f64> {
    let hoods = Neighborhoods::new(graph, election, plan.k())?;
    let shares = district_shares(&tally(graph, plan)?, hoods.election)?;
    Ok(hoods.aapd(plan, &shares))
}

/// Unsorted Republican shares indexed by district label.
pub fn district_shares(tallies: &[DistrictTally], election: usize) -> Result<Vec<f64>> {
    tallies
        .iter()
        .map(|t| {
            let v = t.votes[election];
            if v.total() == 0 {
                Err(Error::Metric(format!("district {} has no two-party votes", t.district)))
            } else {
                Ok(v.rep as f64 / v.total() as f64)
            }
        })
        .collect()
}

/// All plan-level metrics for one election.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub lrvs: f64,
    pub seats_r: usize,
    pub mean_median: f64,
    pub partisan_bias: f64,
    pub partisan_gini: f64,
    pub efficiency_gap: f64,
    pub stdev_shares: f64,
    /// Filled in once ensemble medians are known.
    pub rmd: Option<f64>,
    pub aapd: f64,
    pub buffered_declination: f64,
    /// Districts at exactly one half (counted as not Republican).
    pub ties: usize,
}

/// Sorted shares and metrics of one plan under one election.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionMetrics {
    pub election: String,
    pub shares: Vec<f64>,
    pub metrics: MetricVector,
}

/// Knobs for the metrics whose construction is not pinned down uniquely.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub declination_buffer: f64,
    pub bias_baseline: SwingBaseline,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            declination_buffer: DEFAULT_DECLINATION_BUFFER,
            bias_baseline: SwingBaseline::TurnoutWeighted,
        }
    }
}

/// Evaluates the full metric suite on plans over one graph, caching the
/// plan-independent dislocation neighborhoods.
#[derive(Clone, Debug)]
pub struct PlanEvaluator<'g> {
    graph: &'g DualGraph,
    elections: Vec<(String, Neighborhoods)>,
    options: MetricOptions,
}

impl<'g> PlanEvaluator<'g> {
    pub fn new(graph: &'g DualGraph, elections: &[String], k: usize, options: MetricOptions) -> Result<Self> {
        let elections = elections
            .iter()
            .map(|e| Ok((e.clone(), Neighborhoods::new(graph, graph.election_index(e)?, k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PlanEvaluator { graph, elections, options })
    }

    pub fn election_names(&self) -> impl Iterator<Item = &str> {
        self.elections.iter().map(|(e, _)| e.as_str())
    }

    pub fn evaluate(&self, plan: &Plan) -> Result<Vec<ElectionMetrics>> {
        let tallies = tally(self.graph, plan)?;
        self.elections
            .iter()
            .map(|(name, hoods)| {
                let sv = share_vector(&tallies, hoods.election)?;
                let by_label = district_shares(&tallies, hoods.election)?;
                Ok(ElectionMetrics {
                    election: name.clone(),
                    shares: sv.shares().to_vec(),
                    metrics: MetricVector {
                        lrvs: lrvs(&sv),
                        seats_r: seat_count(&sv),
                        mean_median: mean_median(&sv),
                        partisan_bias: partisan_bias(&sv, self.options.bias_baseline),
                        partisan_gini: partisan_gini(&sv),
                        efficiency_gap: efficiency_gap(&sv)?,
                        stdev_shares: stdev_shares(&sv),
                        rmd: None,
                        aapd: hoods.aapd(plan, &by_label),
                        buffered_declination: buffered_declination(&sv, self.options.declination_buffer),
                        ties: sv.ties(),
                    },
                })
            })
            .collect()
    }
}
