//! Per-episode records and the run CSV format.

use std::io::{Read, Write};

use smartchoices::PolicyTag;
use thiserror::Error;

use super::metrics::{cumulative_regret, RegretSeries};

pub const CSV_COLUMNS: [&str; 11] = [
    "episode",
    "seed",
    "variant",
    "choice_cost",
    "baseline",
    "baseline_cost",
    "regret",
    "cum_regret",
    "policy_tag",
    "p_learned",
    "usage_rate",
];

/// Outcome of one episode: the choice's cost and each baseline's cost on the
/// same instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based.
    pub episode: usize,
    pub seed: u64,
    pub variant: String,
    pub choice_cost: f64,
    pub baseline_costs: Vec<(String, f64)>,
    pub episode_return: f64,
    pub policy_tag: PolicyTag,
    pub p_learned: f64,
    pub usage_rate: f64,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("header must be `{}`", CSV_COLUMNS.join(","))]
    Header,
    #[error("row {row}: column `{column}` has invalid value `{value}`")]
    Field { row: usize, column: &'static str, value: String },
}

/// Writes one row per (episode, baseline) with running cumulative regret per
/// baseline. Rows of one run must be passed in episode order.
pub fn write_records<W: Write>(out: W, records: &[EpisodeRecord]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let mut cumulative: Vec<(String, f64)> = Vec::new();
    for r in records {
        if r.episode == 1 {
            cumulative.clear();
        }
        for (name, cost) in &r.baseline_costs {
            let regret = r.choice_cost - cost;
            let slot = match cumulative.iter().position(|(n, _)| n == name) {
                Some(i) => i,
                None => {
                    cumulative.push((name.clone(), 0.0));
                    cumulative.len() - 1
                }
            };
            cumulative[slot].1 += regret;
            w.write_record([
                r.episode.to_string(),
                r.seed.to_string(),
                r.variant.clone(),
                r.choice_cost.to_string(),
                name.clone(),
                cost.to_string(),
                regret.to_string(),
                cumulative[slot].1.to_string(),
                r.policy_tag.name().to_string(),
                r.p_learned.to_string(),
                r.usage_rate.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub episode: usize,
    pub seed: u64,
    pub variant: String,
    pub choice_cost: f64,
    pub baseline: String,
    pub baseline_cost: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub policy_tag: PolicyTag,
    pub p_learned: f64,
    pub usage_rate: f64,
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<CsvRow>, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if reader.headers()?.iter().ne(CSV_COLUMNS) {
        return Err(CsvError::Header);
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if record.len() != CSV_COLUMNS.len() {
            return Err(CsvError::Field { row, column: "episode", value: format!("{} columns", record.len()) });
        }
        let field = |c: usize| record.get(c).unwrap_or("");
        let err = |c: usize| CsvError::Field { row, column: CSV_COLUMNS[c], value: field(c).to_string() };
        let num = |c: usize| field(c).parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(|| err(c));
        rows.push(CsvRow {
            episode: field(0).parse().ok().filter(|&e: &usize| e >= 1).ok_or_else(|| err(0))?,
            seed: field(1).parse().map_err(|_| err(1))?,
            variant: field(2).to_string(),
            choice_cost: num(3)?,
            baseline: field(4).to_string(),
            baseline_cost: num(5)?,
            regret: num(6)?,
            cum_regret: num(7)?,
            policy_tag: match field(8) {
                "initial" => PolicyTag::Initial,
                "learned" => PolicyTag::Learned,
                _ => return Err(err(8)),
            },
            p_learned: num(9)?,
            usage_rate: num(10)?,
        });
    }
    Ok(rows)
}

/// One run's regret against one baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSeries {
    pub variant: String,
    pub baseline: String,
    pub series: RegretSeries,
}

/// Splits rows into runs. A run is the sequence of rows for one
/// (variant, baseline) pair starting at episode 1; a later episode 1 starts
/// the next run.
pub fn group_runs(rows: &[CsvRow]) -> Vec<RunSeries> {
    struct Open {
        variant: String,
        baseline: String,
        choice: Vec<f64>,
        base: Vec<f64>,
    }
    let mut open: Vec<Open> = Vec::new();
    let mut done: Vec<Open> = Vec::new();
    for row in rows {
        let idx = open.iter().position(|o| o.variant == row.variant && o.baseline == row.baseline);
        let idx = match idx {
            Some(i) if row.episode != 1 => i,
            found => {
                if let Some(i) = found {
                    done.push(open.remove(i));
                }
                open.push(Open { variant: row.variant.clone(), baseline: row.baseline.clone(), choice: vec![], base: vec![] });
                open.len() - 1
            }
        };
        open[idx].choice.push(row.choice_cost);
        open[idx].base.push(row.baseline_cost);
    }
    done.extend(open);
    done.into_iter()
        .map(|o| RunSeries {
            series: cumulative_regret(&o.choice, &o.base).expect("pushed in pairs"),
            variant: o.variant,
            baseline: o.baseline,
        })
        .collect()
}
