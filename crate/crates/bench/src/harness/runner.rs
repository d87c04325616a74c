//! Runs a choice and its baselines on the same instance, episode by episode.

use smartchoices::{ChoiceConfig, SmartChoice};

use super::config::{ConfigError, ExperimentConfig, Problem};
use super::records::EpisodeRecord;
use super::seeds::split;
use crate::envs::bsearch::{self, SearchInstance, SearchVariant};
use crate::envs::cache::{self, AccessTrace, ContinuousCache, ContinuousFeatures, DiscreteCache};
use crate::envs::qsort::{self, Baseline as SortBaseline, SortInstance};

// seed streams within one episode
const INSTANCE: u64 = 0;
const CHOICE_RNG: u64 = 1;
const BASELINE_RNG: u64 = 2;

enum Env {
    Search(SearchVariant),
    Sort,
    DiscreteCache,
    ContinuousCache(ContinuousFeatures),
}

pub struct Runner {
    config: ExperimentConfig,
    env: Env,
    choice: SmartChoice,
    episode: usize,
}

impl Runner {
    pub fn new(config: ExperimentConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let choice_config = ChoiceConfig {
            learner: config.learner.clone(),
            selector: config.selector.clone(),
            seed: split(config.seed, u64::MAX),
            mode: config.mode,
        };
        let def_err = |e: smartchoices::DefinitionError| ConfigError::Invalid(e.to_string());
        let variant = config.variant.as_str();
        let (env, mut choice) = match config.problem {
            Problem::BinarySearch => {
                let v = SearchVariant::parse(variant).expect("validated variant");
                (Env::Search(v), bsearch::build_choice(v, &choice_config).map_err(def_err)?)
            }
            Problem::QuickSort => {
                let init = variant == "init";
                (Env::Sort, qsort::build_choice(config.env.qsort_max_size, init, &choice_config).map_err(def_err)?)
            }
            Problem::Cache => {
                let params = config.env.cache;
                match variant {
                    "discrete-keys" => {
                        (Env::DiscreteCache, DiscreteCache::build_choice(&params, true, &choice_config).map_err(def_err)?)
                    }
                    v => {
                        let features = if v == "continuous-freq" {
                            ContinuousFeatures::Frequencies
                        } else {
                            ContinuousFeatures::Keys
                        };
                        let choice =
                            ContinuousCache::build_choice(&params, features, true, &choice_config).map_err(def_err)?;
                        (Env::ContinuousCache(features), choice)
                    }
                }
            }
        };
        choice.set_explore(config.explore);
        Ok(Runner { config, env, choice, episode: 0 })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn choice(&self) -> &SmartChoice {
        &self.choice
    }

    pub fn choice_mut(&mut self) -> &mut SmartChoice {
        &mut self.choice
    }

    pub fn episodes_run(&self) -> usize {
        self.episode
    }

    /// Runs the next episode and closes it (training per the learner's
    /// cadence).
    pub fn run_episode(&mut self) -> EpisodeRecord {
        self.episode += 1;
        let seed = split(self.config.seed, self.episode as u64);
        let env_cfg = &self.config.env;
        let baselines = &self.config.baselines;
        let (choice_cost, baseline_costs) = match &self.env {
            Env::Search(variant) => {
                let inst = SearchInstance::generate(env_cfg.bsearch_size, split(seed, INSTANCE));
                let cost = bsearch::run_choice(&inst, *variant, &mut self.choice) as f64;
                let costs = baselines
                    .iter()
                    .map(|b| {
                        let c = match b.as_str() {
                            "vanilla" => bsearch::vanilla_cost(&inst),
                            _ => bsearch::interpolation_cost(&inst),
                        };
                        (b.clone(), c as f64)
                    })
                    .collect();
                (cost, costs)
            }
            Env::Sort => {
                let inst = SortInstance::generate(env_cfg.qsort_min_size, env_cfg.qsort_max_size, split(seed, INSTANCE));
                let (sorted, cost) = qsort::run_choice(&inst, &mut self.choice, &env_cfg.qsort_cost, split(seed, CHOICE_RNG));
                assert!(sorted.iter().enumerate().all(|(i, &v)| v as usize == i), "choice sort must be a sorted permutation");
                let costs = baselines
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let baseline = SortBaseline::parse(b).expect("validated baseline");
                        (b.clone(), qsort::run_baseline(&inst, baseline, &env_cfg.qsort_cost, split(seed, BASELINE_RNG + i as u64)).1)
                    })
                    .collect();
                (cost, costs)
            }
            Env::DiscreteCache | Env::ContinuousCache(_) => {
                let trace = AccessTrace::generate(
                    env_cfg.cache_trace_len,
                    env_cfg.cache.key_count,
                    env_cfg.cache_alpha,
                    split(seed, INSTANCE),
                );
                let result = match &self.env {
                    Env::DiscreteCache => cache::run_discrete(&trace, env_cfg.cache, &mut self.choice),
                    Env::ContinuousCache(f) => cache::run_continuous(&trace, env_cfg.cache, *f, &mut self.choice),
                    _ => unreachable!(),
                };
                let costs = baselines
                    .iter()
                    .map(|b| {
                        let r = match b.as_str() {
                            "lru" => cache::lru_simulate(&trace.keys, env_cfg.cache.capacity),
                            _ => cache::belady_simulate(&trace.keys, env_cfg.cache.capacity),
                        };
                        (b.clone(), r.misses as f64)
                    })
                    .collect();
                (result.misses as f64, costs)
            }
        };
        let summary = self.choice.end_episode().expect("every episode makes at least one prediction");
        let selector = self.choice.selector();
        EpisodeRecord {
            episode: self.episode,
            seed,
            variant: self.config.variant.clone(),
            choice_cost,
            baseline_costs,
            episode_return: summary.episode_return,
            policy_tag: summary.policy,
            p_learned: selector.p_learned(),
            usage_rate: selector.usage_rate(self.config.usage_window),
        }
    }
}

/// Runs all configured episodes.
pub fn run_experiment(config: ExperimentConfig) -> Result<Vec<EpisodeRecord>, ConfigError> {
    let episodes = config.episodes;
    let mut runner = Runner::new(config)?;
    Ok((0..episodes).map(|_| runner.run_episode()).collect())
}

/// Runs independent experiments on up to `jobs` threads; results keep the
/// input order.
pub fn run_many(configs: Vec<ExperimentConfig>, jobs: usize) -> Result<Vec<Vec<EpisodeRecord>>, ConfigError> {
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<Vec<EpisodeRecord>, ConfigError>>> = (0..configs.len()).map(|_| None).collect();
    let work: Vec<(usize, ExperimentConfig)> = configs.into_iter().enumerate().collect();
    for chunk in work.chunks(jobs) {
        let done: Vec<(usize, Result<Vec<EpisodeRecord>, ConfigError>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(i, c)| {
                    let c = c.clone();
                    let i = *i;
                    scope.spawn(move || (i, run_experiment(c)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
        });
        for (i, r) in done {
            results[i] = Some(r);
        }
    }
    results.into_iter().map(|r| r.expect("every job ran")).collect()
}
