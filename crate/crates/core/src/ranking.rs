//! Team aggregation, weighted scores, leaderboards and Kendall's tau.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CaseMetrics;

/// Weights of TD, BD, DSC and precision in a team score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w_td: f64,
    pub w_bd: f64,
    pub w_dsc: f64,
    pub w_prec: f64,
}

impl ScoreWeights {
    /// Equal weights: the challenge ranking criterion.
    pub const MEAN: ScoreWeights = ScoreWeights {
        w_td: 0.25,
        w_bd: 0.25,
        w_dsc: 0.25,
        w_prec: 0.25,
    };

    /// Topology-leaning variant used for the ranking-sensitivity check.
    /// Sums to 0.90, so it is normally used with normalization.
    pub const WEIGHTED: ScoreWeights = ScoreWeights {
        w_td: 0.30,
        w_bd: 0.30,
        w_dsc: 0.15,
        w_prec: 0.15,
    };

    pub fn new(w_td: f64, w_bd: f64, w_dsc: f64, w_prec: f64) -> Result<Self> {
        let w = ScoreWeights {
            w_td,
            w_bd,
            w_dsc,
            w_prec,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.as_array();
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!("{all:?} has a negative or non-finite weight")));
        }
        if self.sum() <= 0.0 {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w_td, self.w_bd, self.w_dsc, self.w_prec]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn scaled(&self, k: f64) -> ScoreWeights {
        ScoreWeights {
            w_td: self.w_td * k,
            w_bd: self.w_bd * k,
            w_dsc: self.w_dsc * k,
            w_prec: self.w_prec * k,
        }
    }
}

/// A weight vector plus the normalization default that goes with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightPreset {
    pub weights: ScoreWeights,
    pub normalize: bool,
}

impl FromStr for WeightPreset {
    type Err = Error;

    /// `mean`, `weighted`, or four comma-separated weights (TD,BD,DSC,Precision).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mean" => Ok(WeightPreset {
                weights: ScoreWeights::MEAN,
                normalize: false,
            }),
            "weighted" => Ok(WeightPreset {
                weights: ScoreWeights::WEIGHTED,
                normalize: true,
            }),
            other => {
                let parts: Vec<f64> = other
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidWeights(format!("`{other}`: {e}")))?;
                if parts.len() != 4 {
                    return Err(Error::InvalidWeights(format!(
                        "`{other}`: expected 4 weights, got {}",
                        parts.len()
                    )));
                }
                Ok(WeightPreset {
                    weights: ScoreWeights::new(parts[0], parts[1], parts[2], parts[3])?,
                    normalize: false,
                })
            }
        }
    }
}

/// Mean and population standard deviation of one metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    /// Two-pass mean and population (divisor N) standard deviation.
    pub fn of(values: &[f64]) -> MetricSummary {
        if values.is_empty() {
            return MetricSummary::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MetricSummary {
            mean,
            std: var.sqrt(),
        }
    }
}

/// One case as seen by aggregation: metrics, or a recorded failure.
#[derive(Clone, Debug, PartialEq)]
pub enum CaseResult {
    Ok(CaseMetrics),
    Failed { case_id: String, message: String },
}

impl CaseResult {
    pub fn case_id(&self) -> &str {
        match self {
            CaseResult::Ok(m) => &m.case_id,
            CaseResult::Failed { case_id, .. } => case_id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamAggregate {
    pub team_id: String,
    pub td: MetricSummary,
    pub bd: MetricSummary,
    pub dsc: MetricSummary,
    pub precision: MetricSummary,
    pub sen: MetricSummary,
    pub spe: MetricSummary,
    pub n_cases: usize,
    pub error_cases: Vec<String>,
}

impl TeamAggregate {
    /// Builds an aggregate from published per-team means and standard deviations
    /// (TD, BD, DSC, precision, sensitivity, specificity).
    pub fn from_summary(team_id: &str, summaries: [MetricSummary; 6], n_cases: usize) -> Self {
        let [td, bd, dsc, precision, sen, spe] = summaries;
        TeamAggregate {
            team_id: team_id.to_string(),
            td,
            bd,
            dsc,
            precision,
            sen,
            spe,
            n_cases,
            error_cases: Vec::new(),
        }
    }

    pub fn is_rankable(&self) -> bool {
        self.n_cases > 0
    }

    pub fn summaries(&self) -> [MetricSummary; 6] {
        [self.td, self.bd, self.dsc, self.precision, self.sen, self.spe]
    }
}

/// Per-metric mean and population std over a team's successful cases.
pub fn aggregate(team_id: &str, cases: &[CaseResult]) -> TeamAggregate {
    let mut columns: [Vec<f64>; 6] = Default::default();
    let mut error_cases = Vec::new();
    for c in cases {
        match c {
            CaseResult::Ok(m) => {
                for (col, v) in columns.iter_mut().zip(m.values()) {
                    col.push(v);
                }
            }
            CaseResult::Failed { case_id, .. } => error_cases.push(case_id.clone()),
        }
    }
    let s = |i: usize| MetricSummary::of(&columns[i]);
    TeamAggregate {
        team_id: team_id.to_string(),
        td: s(0),
        bd: s(1),
        dsc: s(2),
        precision: s(3),
        sen: s(4),
        spe: s(5),
        n_cases: columns[0].len(),
        error_cases,
    }
}

/// Weighted combination of the TD, BD, DSC and precision means.
pub fn score(agg: &TeamAggregate, w: &ScoreWeights, normalize: bool) -> f64 {
    let raw = w.w_td * agg.td.mean + w.w_bd * agg.bd.mean + w.w_dsc * agg.dsc.mean + w.w_prec * agg.precision.mean;
    if normalize {
        raw / w.sum()
    } else {
        raw
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub team_id: String,
    pub score: f64,
    pub aggregate: TeamAggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub entries: Vec<LeaderboardEntry>,
    pub weights: ScoreWeights,
    pub normalized: bool,
    /// Teams left out because every case failed.
    pub unranked: Vec<String>,
}

impl Leaderboard {
    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.team_id.as_str()).collect()
    }

    pub fn rank_of(&self, team: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.team_id == team).map(|e| e.rank)
    }

    /// A leaderboard holding only an ordering, e.g. one transcribed from a table.
    /// Ranks follow list position.
    pub fn from_order(teams: &[&str]) -> Leaderboard {
        Leaderboard {
            entries: teams
                .iter()
                .enumerate()
                .map(|(i, t)| LeaderboardEntry {
                    rank: i + 1,
                    team_id: t.to_string(),
                    score: 0.0,
                    aggregate: TeamAggregate::from_summary(t, Default::default(), 0),
                })
                .collect(),
            weights: ScoreWeights::MEAN,
            normalized: false,
            unranked: Vec::new(),
        }
    }
}

/// Sorts rankable teams by descending score. Exactly tied scores share a
/// rank, the next rank is skipped, and tied teams are listed alphabetically.
pub fn rank(teams: &[TeamAggregate], w: &ScoreWeights, normalize: bool) -> Result<Leaderboard> {
    w.validate()?;
    let mut scored: Vec<(f64, &TeamAggregate)> = teams
        .iter()
        .filter(|t| t.is_rankable())
        .map(|t| (score(t, w, normalize), t))
        .collect();
    if scored.is_empty() {
        let who = teams.first().map(|t| t.team_id.clone()).unwrap_or_default();
        return Err(Error::Unrankable(who));
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.team_id.cmp(&b.1.team_id))
    });
    let mut entries: Vec<LeaderboardEntry> = Vec::with_capacity(scored.len());
    for (i, (s, t)) in scored.iter().enumerate() {
        let rank = match entries.last() {
            Some(prev) if prev.score == *s => prev.rank,
            _ => i + 1,
        };
        entries.push(LeaderboardEntry {
            rank,
            team_id: t.team_id.clone(),
            score: *s,
            aggregate: (*t).clone(),
        });
    }
    Ok(Leaderboard {
        entries,
        weights: *w,
        normalized: normalize,
        unranked: teams
            .iter()
            .filter(|t| !t.is_rankable())
            .map(|t| t.team_id.clone())
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KendallTau {
    pub tau: f64,
    pub p_value: f64,
    pub concordant: u64,
    pub discordant: u64,
    pub n: usize,
}

/// Tie-corrected Kendall tau-b between two paired samples, with a two-sided
/// p-value from the normal approximation. O(n log n).
pub fn tau_b(x: &[f64], y: &[f64]) -> Result<KendallTau> {
    if x.len() != y.len() {
        return Err(Error::TeamSetMismatch(format!("{} vs {} values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TeamSetMismatch("need at least two items".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    pairs.sort_by(|a, b| cmp(&a.0, &b.0).then_with(|| cmp(&a.1, &b.1)));

    let n0 = (n * (n - 1) / 2) as u64;
    let tie_groups = |keys: &mut dyn Iterator<Item = bool>| -> Vec<u64> {
        // each `true` means "equal to previous element"
        let mut groups = Vec::new();
        let mut run = 1u64;
        for same in keys {
            if same {
                run += 1;
            } else {
                if run > 1 {
                    groups.push(run);
                }
                run = 1;
            }
        }
        if run > 1 {
            groups.push(run);
        }
        groups
    };
    let x_ties = tie_groups(&mut pairs.windows(2).map(|w| w[0].0 == w[1].0));
    let joint_ties = tie_groups(&mut pairs.windows(2).map(|w| w[0] == w[1]));

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = merge_count(&mut ys);
    let y_ties = tie_groups(&mut ys.windows(2).map(|w| w[0] == w[1]));

    let pairs_in = |g: &[u64]| g.iter().map(|t| t * (t - 1) / 2).sum::<u64>();
    let (n1, n2, n3) = (pairs_in(&x_ties), pairs_in(&y_ties), pairs_in(&joint_ties));
    let untied = n0 + n3 - n1 - n2;
    let concordant = untied - discordant;
    let s = concordant as f64 - discordant as f64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    let tau = if denom > 0.0 { s / denom } else { f64::NAN };

    let nf = n as f64;
    let sum = |g: &[u64], f: &dyn Fn(f64) -> f64| g.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum(&x_ties, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(&y_ties, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum(&x_ties, &|t| t * (t - 1.0)) * sum(&y_ties, &|t| t * (t - 1.0)) / (2.0 * nf * (nf - 1.0));
    let v2 = if n > 2 {
        sum(&x_ties, &|t| t * (t - 1.0) * (t - 2.0)) * sum(&y_ties, &|t| t * (t - 1.0) * (t - 2.0))
            / (9.0 * nf * (nf - 1.0) * (nf - 2.0))
    } else {
        0.0
    };
    let var = (v0 - vt - vu) / 18.0 + v1 + v2;
    let p_value = if var > 0.0 {
        let z = s / var.sqrt();
        statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
    } else {
        1.0
    };

    Ok(KendallTau {
        tau,
        p_value,
        concordant,
        discordant,
        n,
    })
}

/// Merge sort that returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            count += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    count
}

/// Kendall's tau between the rank vectors of two leaderboards over the same teams.
pub fn kendall_tau(a: &Leaderboard, b: &Leaderboard) -> Result<KendallTau> {
    let ranks = |lb: &Leaderboard| -> BTreeMap<String, usize> {
        lb.entries.iter().map(|e| (e.team_id.clone(), e.rank)).collect()
    };
    let ra = ranks(a);
    let rb = ranks(b);
    if ra.len() != a.entries.len() || rb.len() != b.entries.len() {
        return Err(Error::TeamSetMismatch("duplicate team in a leaderboard".into()));
    }
    let ka: BTreeSet<&String> = ra.keys().collect();
    let kb: BTreeSet<&String> = rb.keys().collect();
    if ka != kb {
        let only_a: Vec<_> = ka.difference(&kb).collect();
        let only_b: Vec<_> = kb.difference(&ka).collect();
        return Err(Error::TeamSetMismatch(format!("only in first: {only_a:?}; only in second: {only_b:?}")));
    }
    let x: Vec<f64> = ra.values().map(|&r| r as f64).collect();
    let y: Vec<f64> = ra.keys().map(|k| rb[k] as f64).collect();
    tau_b(&x, &y)
}
