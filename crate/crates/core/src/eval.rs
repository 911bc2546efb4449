//! Scoring model velocity profiles against trial segments, and the Wilcoxon
//! rank-sum test used to compare models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::analytic::{min_jerk_l2_trajectory, sparse_trajectory};
use crate::error::{Error, Result};
use crate::movement::velocity_profile;
use crate::types::{
    BallisticSegment, MovementTask, PiecewiseTrajectory, SampledSeries, Trial, MAX_ORDER,
};

/// A candidate model of the ballistic movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelSpec {
    /// L-infinity minimum-effort (bang-bang) control of an `n`-th order chain.
    Sparse(usize),
    /// Minimum-jerk (L2, `n = 3`) quintic.
    Quintic,
}

impl ModelSpec {
    pub fn order(self) -> usize {
        match self {
            ModelSpec::Sparse(n) => n,
            ModelSpec::Quintic => 3,
        }
    }

    pub fn trajectory(self, task: &MovementTask) -> Result<PiecewiseTrajectory> {
        match self {
            ModelSpec::Sparse(n) => sparse_trajectory(task, n),
            ModelSpec::Quintic => min_jerk_l2_trajectory(task),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Sparse(n) => write!(f, "sparse-n{n}"),
            ModelSpec::Quintic => f.write_str("quintic-l2"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "quintic" || s == "quintic-l2" {
            return Ok(ModelSpec::Quintic);
        }
        match s.strip_prefix("sparse-n").and_then(|n| n.parse().ok()) {
            Some(n) if (1..=MAX_ORDER).contains(&n) => Ok(ModelSpec::Sparse(n)),
            Some(n) => Err(Error::OrderOutOfRange(n)),
            None => Err(Error::invalid(format!(
                "unknown model `{s}`, expected sparse-n<k> or quintic-l2"
            ))),
        }
    }
}

/// Scoring settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    /// Moving-average width applied to the trial velocity.
    pub smooth_window: usize,
    /// Samples dropped at each end of the segment, where the boundary
    /// conditions force agreement.
    pub exclude_boundary: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            smooth_window: crate::movement::DEFAULT_SMOOTH_WINDOW,
            exclude_boundary: 1,
        }
    }
}

/// Score of one model on one trial segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFitResult {
    pub trial_id: String,
    pub subject: String,
    pub movement_type: String,
    pub model: ModelSpec,
    /// Mean squared velocity error, (m/s)^2.
    pub mse: f64,
    /// Trial velocity minus model velocity at the scored samples.
    pub residuals: SampledSeries,
    pub samples_used: usize,
}

/// Mean squared error between the trial's velocity and the model's
/// analytic velocity, evaluated at the segment's own timestamps.
pub fn fit_and_score(
    segment: &BallisticSegment,
    trial: &Trial,
    model: ModelSpec,
    options: &ScoreOptions,
) -> Result<ModelFitResult> {
    let velocity = velocity_profile(trial, options.smooth_window)?;
    score_velocity(segment, trial, &velocity, model, options.exclude_boundary)
}

/// As [`fit_and_score`], with the trial velocity already computed.
pub fn score_velocity(
    segment: &BallisticSegment,
    trial: &Trial,
    velocity: &SampledSeries,
    model: ModelSpec,
    exclude_boundary: usize,
) -> Result<ModelFitResult> {
    if velocity.len() != trial.len() || segment.offset_index() >= trial.len() {
        return Err(Error::invalid(format!(
            "segment or velocity does not belong to trial {}",
            trial.id()
        )));
    }
    let first = segment.onset_index() + exclude_boundary;
    let last = segment.offset_index().checked_sub(exclude_boundary);
    let last = match last {
        Some(last) if last >= first => last,
        _ => {
            return Err(Error::DegenerateSegment(format!(
                "{} samples leave none after excluding {exclude_boundary} per end",
                segment.len()
            )))
        }
    };
    let trajectory = model.trajectory(segment.task())?;
    let t0 = trial.times()[segment.onset_index()];
    let times = &velocity.times()[first..=last];
    let residuals: Vec<f64> = times
        .iter()
        .zip(&velocity.values()[first..=last])
        .map(|(&t, &v)| v - trajectory.velocity(t - t0))
        .collect();
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
    Ok(ModelFitResult {
        trial_id: trial.id().to_string(),
        subject: trial.subject().to_string(),
        movement_type: trial.movement_type().to_string(),
        model,
        mse,
        samples_used: residuals.len(),
        residuals: SampledSeries::new(times.to_vec(), residuals)?,
    })
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub subject: String,
    pub movement_type: String,
    pub model: String,
    pub mean_mse: f64,
    pub n_trials: usize,
}

pub const RESULTS_HEADER: [&str; 5] = ["subject", "movement_type", "model", "mean_mse", "n_trials"];

/// Mean MSE per (subject, movement type, model), sorted by that key.
pub fn aggregate(results: &[ModelFitResult]) -> Result<Vec<GroupMean>> {
    if results.is_empty() {
        return Err(Error::invalid("nothing to aggregate"));
    }
    let mut groups: BTreeMap<(&str, &str, ModelSpec), (f64, usize)> = BTreeMap::new();
    for r in results {
        let entry = groups
            .entry((&r.subject, &r.movement_type, r.model))
            .or_default();
        entry.0 += r.mse;
        entry.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(
            |((subject, movement_type, model), (sum, count))| GroupMean {
                subject: subject.to_string(),
                movement_type: movement_type.to_string(),
                model: model.to_string(),
                mean_mse: sum / count as f64,
                n_trials: count,
            },
        )
        .collect())
}

/// One row of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub model_a: String,
    pub model_b: String,
    #[serde(rename = "U")]
    pub u: f64,
    pub p: f64,
}

pub const COMPARISON_HEADER: [&str; 4] = ["model_a", "model_b", "U", "p"];

/// Rank-sum tests of the per-trial MSE distributions of every model pair,
/// in the order the models are given.
pub fn compare_models(results: &[ModelFitResult], models: &[ModelSpec]) -> Result<Vec<Comparison>> {
    let mse_of = |m: ModelSpec| -> Vec<f64> {
        results
            .iter()
            .filter(|r| r.model == m)
            .map(|r| r.mse)
            .collect()
    };
    let mut rows = Vec::new();
    for (i, &a) in models.iter().enumerate() {
        for &b in &models[i + 1..] {
            let test = wilcoxon_rank_sum(&mse_of(a), &mse_of(b))?;
            rows.push(Comparison {
                model_a: a.to_string(),
                model_b: b.to_string(),
                u: test.u,
                p: test.p,
            });
        }
    }
    Ok(rows)
}

/// Combined sample size up to which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSumMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample: its rank sum minus `m(m+1)/2`.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub method: RankSumMethod,
}

/// Wilcoxon rank-sum test with midranks for ties. Exact when the combined
/// size is at most [`EXACT_LIMIT`] and there are no ties, otherwise the
/// tie-corrected normal approximation with continuity correction.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    let ranked = Ranked::new(a, b)?;
    let method = if a.len() + b.len() <= EXACT_LIMIT && !ranked.has_ties() {
        RankSumMethod::Exact
    } else {
        RankSumMethod::Normal
    };
    ranked.test(method)
}

/// Forces a method. `Exact` is refused when there are ties.
pub fn wilcoxon_rank_sum_with(a: &[f64], b: &[f64], method: RankSumMethod) -> Result<RankSumTest> {
    let ranked = Ranked::new(a, b)?;
    if method == RankSumMethod::Exact && ranked.has_ties() {
        return Err(Error::invalid(
            "exact rank-sum distribution requires untied data",
        ));
    }
    ranked.test(method)
}

struct Ranked {
    m: usize,
    n: usize,
    rank_sum_a: f64,
    /// Sizes of the groups of tied values.
    tie_groups: Vec<usize>,
}

impl Ranked {
    fn new(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid("rank-sum test needs two non-empty samples"));
        }
        if a.iter().chain(b).any(|x| x.is_nan()) {
            return Err(Error::invalid("rank-sum test input contains NaN"));
        }
        let mut pooled: Vec<(f64, bool)> = a
            .iter()
            .map(|&x| (x, true))
            .chain(b.iter().map(|&x| (x, false)))
            .collect();
        pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut rank_sum_a = 0.0;
        let mut tie_groups = Vec::new();
        let mut i = 0;
        while i < pooled.len() {
            let mut j = i + 1;
            while j < pooled.len() && pooled[j].0 == pooled[i].0 {
                j += 1;
            }
            // Ranks i+1 ..= j share their mean.
            let midrank = (i + 1 + j) as f64 / 2.0;
            rank_sum_a += midrank * pooled[i..j].iter().filter(|p| p.1).count() as f64;
            tie_groups.push(j - i);
            i = j;
        }
        Ok(Self {
            m: a.len(),
            n: b.len(),
            rank_sum_a,
            tie_groups,
        })
    }

    fn has_ties(&self) -> bool {
        self.tie_groups.iter().any(|&t| t > 1)
    }

    fn u(&self) -> f64 {
        self.rank_sum_a - (self.m * (self.m + 1)) as f64 / 2.0
    }

    fn test(&self, method: RankSumMethod) -> Result<RankSumTest> {
        let u = self.u();
        let p = match method {
            RankSumMethod::Exact => exact_p(u.round() as usize, self.m, self.n),
            RankSumMethod::Normal => self.normal_p(u),
        };
        Ok(RankSumTest { u, p, method })
    }

    fn normal_p(&self, u: f64) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        let total = m + n;
        let ties: f64 = self
            .tie_groups
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = if total > 1.0 {
            m * n / 12.0 * ((total + 1.0) - ties / (total * (total - 1.0)))
        } else {
            0.0
        };
        let excess = (u - m * n / 2.0).abs() - 0.5;
        if var <= 0.0 || excess <= 0.0 {
            return 1.0;
        }
        erfc(excess / var.sqrt() / std::f64::consts::SQRT_2).min(1.0)
    }
}

/// Null distribution of U for sample sizes `m`, `n`: entry `u` counts the
/// arrangements of the pooled ranks giving that U.
pub fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    // f[i][j][u]: arrangements of i first-sample and j second-sample items
    // with statistic u. The largest item is either a first-sample item,
    // which beats all j second-sample items, or a second-sample item.
    let width = m * n + 1;
    let mut f = vec![vec![vec![0.0; width]; n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            if i == 0 || j == 0 {
                f[i][j][0] = 1.0;
                continue;
            }
            for u in 0..=i * j {
                let last_first = if u >= j { f[i - 1][j][u - j] } else { 0.0 };
                f[i][j][u] = last_first + f[i][j - 1][u];
            }
        }
    }
    f.swap_remove(m).swap_remove(n)
}

fn exact_p(u: usize, m: usize, n: usize) -> f64 {
    let dist = u_distribution(m, n);
    let total: f64 = dist.iter().sum();
    let lower: f64 = dist[..=u].iter().sum();
    let upper: f64 = dist[u..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}
