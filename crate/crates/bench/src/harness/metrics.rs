//! Regret series, break-even points and nearest-rank quantile tables.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cost series lengths differ: {choice} choice costs vs {baseline} baseline costs")]
pub struct LengthMismatch {
    pub choice: usize,
    pub baseline: usize,
}

/// Per-episode regret and its running sum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretSeries {
    pub regret: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretSeries {
    pub fn len(&self) -> usize {
        self.regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regret.is_empty()
    }

    /// Cumulative regret after `episode` (1-based) episodes; 0 before any.
    pub fn at(&self, episode: usize) -> Option<f64> {
        match episode {
            0 => Some(0.0),
            e => self.cumulative.get(e - 1).copied(),
        }
    }

    /// Cumulative regret divided by the episode count.
    pub fn mean_at(&self, episode: usize) -> Option<f64> {
        (episode > 0).then(|| self.at(episode).map(|c| c / episode as f64)).flatten()
    }
}

pub fn cumulative_regret(costs: &[f64], baseline: &[f64]) -> Result<RegretSeries, LengthMismatch> {
    if costs.len() != baseline.len() {
        return Err(LengthMismatch { choice: costs.len(), baseline: baseline.len() });
    }
    let regret: Vec<f64> = costs.iter().zip(baseline).map(|(c, b)| c - b).collect();
    let cumulative = regret
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    Ok(RegretSeries { regret, cumulative })
}

/// Smallest 1-based `e` with `cumulative[j] < 0` for every `j >= e`.
pub fn break_even(cumulative: &[f64]) -> Option<usize> {
    let tail = cumulative.iter().rev().take_while(|&&c| c < 0.0).count();
    (tail > 0).then(|| cumulative.len() - tail + 1)
}

/// Nearest-rank quantile of `sorted` for percentile `p` in `(0, 100]`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty set");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub const TABLE_PERCENTILES: [f64; 9] = [1.0, 5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0, 99.0];

/// One line of a quantile table.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileRow {
    pub metric: String,
    pub episode: Option<usize>,
    pub quantiles: Vec<f64>,
    /// Mean of the values; for break-even rows, the share of runs that reach it.
    pub mean: f64,
}

impl QuantileRow {
    /// `values` may contain `f64::INFINITY` (not reached).
    pub fn from_values(metric: &str, episode: Option<usize>, values: &[f64], percentiles: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = percentiles.iter().map(|&p| nearest_rank(&sorted, p)).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        QuantileRow { metric: metric.to_string(), episode, quantiles, mean }
    }
}

/// Quantiles over runs of cumulative regret (raw and per-episode) at each
/// checkpoint, plus the break-even row. Checkpoints past a run's length use
/// its last value.
pub fn quantile_report(runs: &[RegretSeries], checkpoints: &[usize], percentiles: &[f64]) -> Vec<QuantileRow> {
    assert!(!runs.is_empty(), "report needs at least one run");
    assert!(checkpoints.iter().all(|&e| e >= 1), "checkpoints are 1-based episodes");
    let mut rows = Vec::new();
    for &e in checkpoints {
        let at = |r: &RegretSeries| e.min(r.len());
        let raw: Vec<f64> = runs.iter().map(|r| r.at(at(r)).unwrap()).collect();
        rows.push(QuantileRow::from_values("cum_regret", Some(e), &raw, percentiles));
        let mean: Vec<f64> = runs.iter().map(|r| r.mean_at(at(r)).unwrap_or(0.0)).collect();
        rows.push(QuantileRow::from_values("mean_regret", Some(e), &mean, percentiles));
    }
    let be: Vec<f64> = runs.iter().map(|r| break_even(&r.cumulative).map_or(f64::INFINITY, |e| e as f64)).collect();
    let mut row = QuantileRow::from_values("break_even", None, &be, percentiles);
    row.mean = be.iter().filter(|v| v.is_finite()).count() as f64 / be.len() as f64;
    rows.push(row);
    rows
}
