//! Quantile tables over many runs read back from run CSVs.

use std::collections::BTreeMap;
use std::io::Write;

use crate::harness::metrics::{quantile_report, QuantileRow};
use crate::harness::records::{group_runs, CsvError, CsvRow};

/// Quantile rows for one (variant, baseline) group.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportGroup {
    pub variant: String,
    pub baseline: String,
    pub runs: usize,
    pub rows: Vec<QuantileRow>,
}

pub fn build_report(rows: &[CsvRow], checkpoints: &[usize], percentiles: &[f64]) -> Vec<ReportGroup> {
    let mut groups: BTreeMap<(String, String), Vec<_>> = BTreeMap::new();
    for run in group_runs(rows) {
        groups.entry((run.variant, run.baseline)).or_default().push(run.series);
    }
    groups
        .into_iter()
        .map(|((variant, baseline), series)| ReportGroup {
            variant,
            baseline,
            runs: series.len(),
            rows: quantile_report(&series, checkpoints, percentiles),
        })
        .collect()
}

fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes `variant,baseline,metric,episode,p<q>...,mean`; an empty episode
/// field marks the break-even row and `inf` marks "never reached".
pub fn write_report<W: Write>(out: W, groups: &[ReportGroup], percentiles: &[f64]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["variant".to_string(), "baseline".into(), "metric".into(), "episode".into()];
    header.extend(percentiles.iter().map(|p| format!("p{p}")));
    header.push("mean".into());
    w.write_record(&header)?;
    for g in groups {
        for row in &g.rows {
            let mut rec = vec![
                g.variant.clone(),
                g.baseline.clone(),
                row.metric.clone(),
                row.episode.map_or(String::new(), |e| e.to_string()),
            ];
            rec.extend(row.quantiles.iter().map(|&q| format_value(q)));
            rec.push(format_value(row.mean));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::records::{read_rows, write_records, EpisodeRecord};
    use smartchoices::PolicyTag;

    fn run(variant: &str, costs: &[f64]) -> Vec<EpisodeRecord> {
        costs
            .iter()
            .enumerate()
            .map(|(i, &c)| EpisodeRecord {
                episode: i + 1,
                seed: i as u64,
                variant: variant.into(),
                choice_cost: c,
                baseline_costs: vec![("vanilla".into(), 2.0)],
                episode_return: 0.0,
                policy_tag: PolicyTag::Learned,
                p_learned: 1.0,
                usage_rate: 1.0,
            })
            .collect()
    }

    #[test]
    fn groups_runs_and_writes_inf() {
        let mut buf = Vec::new();
        let mut records = run("a", &[3.0, 3.0]);
        records.extend(run("a", &[1.0, 1.0]));
        write_records(&mut buf, &records).unwrap();
        let rows = read_rows(buf.as_slice()).unwrap();
        let groups = build_report(&rows, &[2], &[50.0, 100.0]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].runs, 2);
        let mut out = Vec::new();
        write_report(&mut out, &groups, &[50.0, 100.0]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("variant,baseline,metric,episode,p50,p100,mean\n"));
        assert!(text.contains("a,vanilla,cum_regret,2,-2,2,0\n"), "{text}");
        assert!(text.contains("a,vanilla,break_even,,1,inf,0.5\n"), "{text}");
    }
}
