use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smartchoices_bench::harness::config::{ExperimentConfig, Problem};
use smartchoices_bench::harness::metrics::TABLE_PERCENTILES;
use smartchoices_bench::harness::records::{read_rows, write_records};
use smartchoices_bench::harness::runner::run_many;
use smartchoices_bench::harness::seeds::split;
use smartchoices_bench::report::{build_report, write_report};

#[derive(Parser)]
#[command(name = "smartchoices", version, about = "Run learned-choice benchmarks and summarize their regret")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiments and write per-episode rows as CSV.
    Run {
        /// bsearch, quicksort or cache
        #[arg(long)]
        problem: String,
        #[arg(long)]
        variant: String,
        /// Overrides the config file.
        #[arg(long)]
        episodes: Option<usize>,
        /// Master seed; run i uses a seed split from it.
        #[arg(long)]
        seed: Option<u64>,
        /// `key = value` file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Independent runs with derived seeds.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Quantiles of cumulative regret and break-even over runs.
    Report {
        /// Run CSVs written by `run`.
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Comma-separated episodes.
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        checkpoints: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        percentiles: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { problem, variant, episodes, seed, config, out, runs, jobs } => {
            let problem = Problem::parse(&problem)?;
            let text = match &config {
                Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
                None => String::new(),
            };
            let mut base = ExperimentConfig::from_text(problem, &variant, &text)?;
            if let Some(e) = episodes {
                base.episodes = e;
            }
            if let Some(s) = seed {
                base.seed = s;
            }
            if runs == 0 {
                return Err("--runs must be positive".into());
            }
            let configs: Vec<_> = (0..runs)
                .map(|i| {
                    let mut c = base.clone();
                    if runs > 1 {
                        c.seed = split(base.seed, 1_000_000 + i as u64);
                    }
                    c
                })
                .collect();
            let records: Vec<_> = run_many(configs, jobs)?.into_iter().flatten().collect();
            write_records(output(&out)?, &records)?;
        }
        Command::Report { inputs, checkpoints, percentiles, out } => {
            if checkpoints.contains(&0) {
                return Err("checkpoints are 1-based episodes".into());
            }
            let percentiles = percentiles.unwrap_or_else(|| TABLE_PERCENTILES.to_vec());
            if percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
                return Err("percentiles must lie in [0, 100]".into());
            }
            let mut rows = Vec::new();
            for p in &inputs {
                let f = File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
                rows.extend(read_rows(BufReader::new(f)).map_err(|e| format!("{}: {e}", p.display()))?);
            }
            if rows.is_empty() {
                return Err("inputs contain no rows".into());
            }
            let groups = build_report(&rows, &checkpoints, &percentiles);
            write_report(output(&out)?, &groups, &percentiles)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
