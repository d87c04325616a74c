//! Experiment configuration and its flat `key = value` file format.
//!
//! Blank lines and `#` comments are ignored. Every key must be known and may
//! appear once.

use smartchoices::tinynet::Activation;
use smartchoices::{Algorithm, LearnerConfig, SelectorConfig, TrainingMode};
use thiserror::Error;

use crate::envs::bsearch::SearchVariant;
use crate::envs::cache::CacheParams;
use crate::envs::qsort::{Baseline as SortBaseline, CostModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { line: usize, key: String, value: String, reason: String },
    #[error("unknown problem `{0}` (expected bsearch, quicksort or cache)")]
    UnknownProblem(String),
    #[error("unknown variant `{variant}` for {problem}; expected one of {expected}")]
    UnknownVariant { problem: String, variant: String, expected: String },
    #[error("unknown baseline `{baseline}` for {problem}")]
    UnknownBaseline { problem: String, baseline: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits `text` into entries without interpreting keys.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax { line });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
        entries.push(Entry { line, key: key.to_string(), value: value.to_string() });
    }
    Ok(entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    BinarySearch,
    QuickSort,
    Cache,
}

impl Problem {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "bsearch" => Ok(Problem::BinarySearch),
            "quicksort" => Ok(Problem::QuickSort),
            "cache" => Ok(Problem::Cache),
            _ => Err(ConfigError::UnknownProblem(s.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::BinarySearch => "bsearch",
            Problem::QuickSort => "quicksort",
            Problem::Cache => "cache",
        }
    }

    pub fn variants(self) -> &'static [&'static str] {
        match self {
            Problem::BinarySearch => &SearchVariant::NAMES,
            Problem::QuickSort => &["learned", "init"],
            Problem::Cache => &["discrete-keys", "continuous-keys", "continuous-freq"],
        }
    }

    pub fn baselines(self) -> Vec<String> {
        let names: Vec<&str> = match self {
            Problem::BinarySearch => vec!["vanilla", "interpolation"],
            Problem::QuickSort => SortBaseline::ALL.iter().map(|b| b.name()).collect(),
            Problem::Cache => vec!["lru", "belady"],
        };
        names.into_iter().map(String::from).collect()
    }

    pub fn algorithm(self, variant: &str) -> Algorithm {
        match (self, variant) {
            (Problem::BinarySearch, _) => Algorithm::Td3,
            (Problem::QuickSort, _) => Algorithm::Ddqn,
            (Problem::Cache, "discrete-keys") => Algorithm::Ddqn,
            (Problem::Cache, _) => Algorithm::Td3,
        }
    }
}

/// Environment parameters for all three problems.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub bsearch_size: usize,
    pub qsort_min_size: usize,
    pub qsort_max_size: usize,
    /// Operation weights; counters unused.
    pub qsort_cost: CostModel,
    pub cache_trace_len: usize,
    pub cache_alpha: f64,
    pub cache: CacheParams,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            bsearch_size: 5000,
            qsort_min_size: 16,
            qsort_max_size: 1024,
            qsort_cost: CostModel::default(),
            cache_trace_len: 1000,
            cache_alpha: 0.5,
            cache: CacheParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub variant: String,
    pub episodes: usize,
    pub seed: u64,
    pub learner: LearnerConfig,
    pub selector: SelectorConfig,
    pub mode: TrainingMode,
    pub env: EnvConfig,
    pub baselines: Vec<String>,
    /// Window for the initial-function usage rate column.
    pub usage_window: usize,
    /// Exploration in the learned policy while acting.
    pub explore: bool,
}

/// Every key accepted by [`ExperimentConfig::apply`].
pub const KEYS: &[&str] = &[
    "episodes",
    "seed",
    "mode",
    "baselines",
    "usage_window",
    "explore",
    "algorithm",
    "discount",
    "lr_actor",
    "lr_critic",
    "batch_size",
    "tau",
    "action_noise",
    "target_noise",
    "temperature",
    "update_period",
    "actor_hidden",
    "critic_hidden",
    "hidden_activation",
    "embedding_size",
    "buffer_capacity",
    "grad_clip",
    "initial_function_decay",
    "steps_per_transition",
    "steps_per_episode",
    "log_every",
    "ema_decay",
    "increase",
    "decrease",
    "p_min",
    "margin_rel",
    "margin_abs",
    "decay_episodes",
    "bsearch_size",
    "qsort_min_size",
    "qsort_max_size",
    "qsort_w_read",
    "qsort_w_write",
    "qsort_w_compare",
    "cache_capacity",
    "cache_keys",
    "cache_trace_len",
    "cache_alpha",
    "cache_scale",
    "cache_window",
    "cache_freq_max",
];

/// Gradient steps per cache episode; see the README for why caches do not
/// train once per transition.
pub const CACHE_STEPS_PER_EPISODE: usize = 16;

impl ExperimentConfig {
    /// Defaults for `problem` / `variant`, including the learner preset.
    pub fn new(problem: Problem, variant: &str) -> Result<Self, ConfigError> {
        if !problem.variants().contains(&variant) {
            return Err(ConfigError::UnknownVariant {
                problem: problem.name().to_string(),
                variant: variant.to_string(),
                expected: problem.variants().join(", "),
            });
        }
        let learner = match (problem, variant) {
            (Problem::BinarySearch, v) => {
                let shaped = SearchVariant::parse(v).is_some_and(|s| s.reward == crate::envs::bsearch::RewardRule::Shaped);
                let discount = if shaped { 0.0 } else { 0.8 };
                LearnerConfig { discount, ..LearnerConfig::binary_search() }
            }
            (Problem::QuickSort, _) => LearnerConfig::quicksort(),
            (Problem::Cache, "discrete-keys") => {
                LearnerConfig { steps_per_episode: Some(CACHE_STEPS_PER_EPISODE), ..LearnerConfig::cache_discrete() }
            }
            (Problem::Cache, _) => {
                LearnerConfig { steps_per_episode: Some(CACHE_STEPS_PER_EPISODE), ..LearnerConfig::cache_continuous() }
            }
        };
        Ok(ExperimentConfig {
            problem,
            variant: variant.to_string(),
            episodes: 1000,
            seed: 0,
            learner,
            selector: SelectorConfig::default(),
            mode: TrainingMode::Synchronous,
            env: EnvConfig::default(),
            baselines: problem.baselines(),
            usage_window: 100,
            explore: true,
        })
    }

    pub fn from_text(problem: Problem, variant: &str, text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::new(problem, variant)?;
        for entry in parse_entries(text)? {
            config.apply(&entry)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, entry: &Entry) -> Result<(), ConfigError> {
        let Entry { line, key, value } = entry;
        let bad = |reason: &str| ConfigError::InvalidValue {
            line: *line,
            key: key.clone(),
            value: value.clone(),
            reason: reason.to_string(),
        };
        let uint = || value.parse::<usize>().map_err(|_| bad("expected a non-negative integer"));
        let float = || {
            value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad("expected a finite number"))
        };
        let boolean = || match value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(bad("expected true or false")),
        };
        let widths = || -> Result<Vec<usize>, ConfigError> {
            value
                .split(',')
                .map(|w| w.trim().parse::<usize>().ok().filter(|&w| w > 0))
                .collect::<Option<Vec<_>>>()
                .filter(|v| !v.is_empty())
                .ok_or_else(|| bad("expected comma-separated positive widths"))
        };
        let l = &mut self.learner;
        let s = &mut self.selector;
        let e = &mut self.env;
        match key.as_str() {
            "episodes" => self.episodes = uint()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an unsigned 64-bit integer"))?,
            "mode" => {
                self.mode = match value.as_str() {
                    "sync" | "synchronous" => TrainingMode::Synchronous,
                    "async" | "asynchronous" => TrainingMode::Asynchronous,
                    _ => return Err(bad("expected sync or async")),
                }
            }
            "baselines" => self.baselines = value.split(',').map(|b| b.trim().to_string()).collect(),
            "usage_window" => self.usage_window = uint()?,
            "explore" => self.explore = boolean()?,
            "algorithm" => {
                let expected = self.problem.algorithm(&self.variant);
                if value != expected.name() {
                    return Err(bad(&format!("this problem uses {}", expected.name())));
                }
            }
            "discount" => l.discount = float()?,
            "lr_actor" => l.lr_actor = float()?,
            "lr_critic" => l.lr_critic = float()?,
            "batch_size" => l.batch_size = uint()?,
            "tau" => l.tau = float()?,
            "action_noise" => l.action_noise = float()?,
            "target_noise" => l.target_noise = float()?,
            "temperature" => l.temperature = float()?,
            "update_period" => l.update_period = uint()?,
            "actor_hidden" => l.actor_hidden = widths()?,
            "critic_hidden" => l.critic_hidden = widths()?,
            "hidden_activation" => {
                l.hidden_activation = Activation::parse(value).ok_or_else(|| bad("expected identity, tanh or relu"))?
            }
            "embedding_size" => l.embedding_size = uint()?,
            "buffer_capacity" => l.buffer_capacity = uint()?,
            "grad_clip" => l.grad_clip = float()?,
            "initial_function_decay" => l.initial_function_decay = boolean()?,
            "steps_per_transition" => l.steps_per_transition = uint()?,
            "steps_per_episode" => {
                l.steps_per_episode = if value == "none" { None } else { Some(uint()?) };
            }
            "log_every" => l.log_every = uint()?,
            "ema_decay" => s.ema_decay = float()?,
            "increase" => s.increase = float()?,
            "decrease" => s.decrease = float()?,
            "p_min" => s.p_min = float()?,
            "margin_rel" => s.margin_rel = float()?,
            "margin_abs" => s.margin_abs = float()?,
            "decay_episodes" => s.decay_episodes = float()?,
            "bsearch_size" => e.bsearch_size = uint()?,
            "qsort_min_size" => e.qsort_min_size = uint()?,
            "qsort_max_size" => e.qsort_max_size = uint()?,
            "qsort_w_read" => e.qsort_cost.w_read = float()?,
            "qsort_w_write" => e.qsort_cost.w_write = float()?,
            "qsort_w_compare" => e.qsort_cost.w_compare = float()?,
            "cache_capacity" => e.cache.capacity = uint()?,
            "cache_keys" => e.cache.key_count = uint()?,
            "cache_trace_len" => e.cache_trace_len = uint()?,
            "cache_alpha" => e.cache_alpha = float()?,
            "cache_scale" => e.cache.scale = float()?,
            "cache_window" => e.cache.window = uint()?,
            "cache_freq_max" => e.cache.freq_max = float()?,
            _ => return Err(ConfigError::UnknownKey { line: *line, key: key.clone() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        self.learner.validate().map_err(ConfigError::Invalid)?;
        let known = self.problem.baselines();
        if self.baselines.is_empty() {
            return invalid("at least one baseline is required");
        }
        for b in &self.baselines {
            if !known.contains(b) {
                return Err(ConfigError::UnknownBaseline { problem: self.problem.name().into(), baseline: b.clone() });
            }
        }
        let s = &self.selector;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(s.ema_decay) && unit(s.increase) && unit(s.decrease) && unit(s.p_min)) {
            return invalid("selector rates must lie in [0, 1]");
        }
        if !(s.margin_rel >= 0.0 && s.margin_abs >= 0.0 && s.decay_episodes > 0.0) {
            return invalid("selector margins must be non-negative and decay_episodes positive");
        }
        let e = &self.env;
        if e.bsearch_size < 2 {
            return invalid("bsearch_size must be at least 2");
        }
        if !(2 <= e.qsort_min_size && e.qsort_min_size <= e.qsort_max_size && e.qsort_max_size <= 1 << 24) {
            return invalid("quicksort sizes must satisfy 2 <= min <= max <= 2^24");
        }
        let w = &e.qsort_cost;
        if !(w.w_read >= 0.0 && w.w_write >= 0.0 && w.w_compare > 0.0) {
            return invalid("quicksort weights must be non-negative with a positive compare weight");
        }
        let c = &e.cache;
        if c.capacity == 0 || c.key_count == 0 || c.window == 0 || e.cache_trace_len == 0 {
            return invalid("cache capacity, keys, window and trace length must be positive");
        }
        if !(e.cache_alpha >= 0.0 && c.scale > 0.0 && c.freq_max > 0.0) {
            return invalid("cache_alpha must be non-negative, cache_scale and cache_freq_max positive");
        }
        if self.usage_window == 0 {
            return invalid("usage_window must be positive");
        }
        Ok(())
    }
}
