//! Fixed-size caches whose replacement policy is a choice, plus LRU and
//! Belady reference simulators.

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smartchoices::{
    ChoiceConfig, DefinitionError, InitialFunction, Observation, ObservationDef, OutputDef, SmartChoice, State, Value,
};

/// Key id used for empty slots and absent observations.
pub const NO_KEY: usize = 0;

/// Keys in `1..=key_count` drawn i.i.d. with `P(k) ∝ k^-alpha`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessTrace {
    pub keys: Vec<usize>,
}

impl AccessTrace {
    pub fn generate(len: usize, key_count: usize, alpha: f64, seed: u64) -> Self {
        assert!(key_count >= 1, "key space must be non-empty");
        let weights: Vec<f64> = (1..=key_count).map(|k| (k as f64).powf(-alpha)).collect();
        let dist = WeightedIndex::new(&weights).expect("positive weights");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AccessTrace { keys: (0..len).map(|_| dist.sample(&mut rng) + 1).collect() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimResult {
    pub hits: usize,
    pub misses: usize,
}

impl SimResult {
    pub fn hit_ratio(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

pub fn lru_simulate(trace: &[usize], capacity: usize) -> SimResult {
    // (key, last access)
    let mut resident: Vec<(usize, usize)> = Vec::with_capacity(capacity);
    let mut out = SimResult::default();
    for (t, &key) in trace.iter().enumerate() {
        if let Some(slot) = resident.iter_mut().find(|(k, _)| *k == key) {
            slot.1 = t;
            out.hits += 1;
            continue;
        }
        out.misses += 1;
        if capacity == 0 {
            continue;
        }
        if resident.len() < capacity {
            resident.push((key, t));
        } else {
            let oldest = (0..resident.len()).min_by_key(|&i| resident[i].1).unwrap();
            resident[oldest] = (key, t);
        }
    }
    out
}

/// Clairvoyant replacement: on a miss with a full cache, evicts the resident
/// whose next use is farthest away (never used again counts as infinitely
/// far), ties broken by the smallest key.
pub fn belady_simulate(trace: &[usize], capacity: usize) -> SimResult {
    let mut next_use = vec![usize::MAX; trace.len()];
    let mut seen: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for (t, &key) in trace.iter().enumerate().rev() {
        next_use[t] = seen.get(&key).copied().unwrap_or(usize::MAX);
        seen.insert(key, t);
    }
    // (key, next use)
    let mut resident: Vec<(usize, usize)> = Vec::with_capacity(capacity);
    let mut out = SimResult::default();
    for (t, &key) in trace.iter().enumerate() {
        if let Some(slot) = resident.iter_mut().find(|(k, _)| *k == key) {
            slot.1 = next_use[t];
            out.hits += 1;
            continue;
        }
        out.misses += 1;
        if capacity == 0 {
            continue;
        }
        if resident.len() < capacity {
            resident.push((key, next_use[t]));
        } else {
            let victim = (0..resident.len())
                .max_by(|&a, &b| resident[a].1.cmp(&resident[b].1).then(resident[b].0.cmp(&resident[a].0)))
                .unwrap();
            resident[victim] = (key, next_use[t]);
        }
    }
    out
}

/// Share of the last `window` entries of `history` equal to `key`, over
/// `window`.
pub fn frequency_features(history: &[usize], key: usize, window: usize) -> f64 {
    assert!(window >= 1, "window must be positive");
    let recent = &history[history.len().saturating_sub(window)..];
    recent.iter().filter(|&&k| k == key).count() as f64 / window as f64
}

/// Incremental form of [`frequency_features`].
#[derive(Clone, Debug)]
pub struct FrequencyWindow {
    window: usize,
    history: VecDeque<usize>,
    counts: Vec<u32>,
}

impl FrequencyWindow {
    pub fn new(window: usize, key_count: usize) -> Self {
        assert!(window >= 1, "window must be positive");
        FrequencyWindow { window, history: VecDeque::with_capacity(window + 1), counts: vec![0; key_count + 1] }
    }

    pub fn push(&mut self, key: usize) {
        self.history.push_back(key);
        self.counts[key] += 1;
        if self.history.len() > self.window {
            let old = self.history.pop_front().unwrap();
            self.counts[old] -= 1;
        }
    }

    pub fn frequency(&self, key: usize) -> f64 {
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.window as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Hit,
    Evicted(usize),
    Stored,
    NotStored,
}

/// Cache geometry and feature settings shared by both choice-driven caches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheParams {
    pub capacity: usize,
    pub key_count: usize,
    pub scale: f64,
    pub window: usize,
    /// Upper end of the observed frequency range.
    pub freq_max: f64,
}

impl Default for CacheParams {
    fn default() -> Self {
        CacheParams { capacity: 10, key_count: 100, scale: 1.0, window: 100, freq_max: 0.2 }
    }
}

impl CacheParams {
    fn key_space(&self) -> usize {
        self.key_count + 1
    }
}

/// Recency rank feature: `(rank + 1) / capacity` where rank 0 is the most
/// recently used slot; empty slots read 0.
fn recency_features(last_access: &[usize], capacity: usize) -> Vec<f64> {
    let mut out = vec![0.0; capacity];
    for (i, &t) in last_access.iter().enumerate() {
        let newer = last_access.iter().filter(|&&u| u > t).count();
        out[i] = (newer + 1) as f64 / capacity as f64;
    }
    out
}

/// Eviction index decided directly by a categorical choice over
/// `0..=capacity`; `capacity` (or any index past the residents) means no
/// eviction.
pub struct DiscreteCache {
    params: CacheParams,
    keys: Vec<usize>,
    last_access: Vec<usize>,
    t: usize,
}

impl DiscreteCache {
    pub fn new(params: CacheParams) -> Self {
        DiscreteCache { params, keys: Vec::with_capacity(params.capacity), last_access: Vec::new(), t: 0 }
    }

    pub fn residents(&self) -> &[usize] {
        &self.keys
    }

    pub fn observations(params: &CacheParams) -> Vec<ObservationDef> {
        vec![
            ObservationDef::key("access", params.key_space()),
            ObservationDef::keys("memory", params.capacity, params.key_space()),
            ObservationDef::key("evict", params.key_space()),
            ObservationDef::vector("ages", params.capacity, 0.0, 1.0),
        ]
    }

    /// Evicts the least recently used resident once full.
    pub fn lru_initial_function(params: &CacheParams) -> InitialFunction {
        let cap = params.capacity;
        Box::new(move |state: &State| {
            let memory = &state.keys[1..1 + cap];
            if memory.contains(&NO_KEY) {
                return Value::Category(cap);
            }
            let ages = &state.dense[..cap];
            let oldest = (0..cap).fold(0, |best, i| if ages[i] > ages[best] { i } else { best });
            Value::Category(oldest)
        })
    }

    pub fn build_choice(params: &CacheParams, initial: bool, config: &ChoiceConfig) -> Result<SmartChoice, DefinitionError> {
        let initial = initial.then(|| Self::lru_initial_function(params));
        SmartChoice::new(OutputDef::category(params.capacity + 1), Self::observations(params), initial, config)
    }

    pub fn step(&mut self, key: usize, choice: &mut SmartChoice) -> StepOutcome {
        let t = self.t;
        self.t += 1;
        if let Some(i) = self.keys.iter().position(|&k| k == key) {
            self.last_access[i] = t;
            choice.feedback(1.0);
            choice.observe("access", Observation::Key(key)).expect("declared");
            return StepOutcome::Hit;
        }
        choice.feedback(-1.0);
        let cap = self.params.capacity;
        let mut memory = self.keys.clone();
        memory.resize(cap, NO_KEY);
        choice.observe("access", Observation::Key(key)).expect("declared");
        choice.observe("memory", Observation::Keys(memory)).expect("declared");
        choice.observe("ages", recency_features(&self.last_access, cap)).expect("declared");
        let i = choice.predict().as_index();
        if i < self.keys.len() {
            let evicted = self.keys[i];
            choice.feedback(-1.0);
            choice.observe("evict", Observation::Key(evicted)).expect("declared");
            self.keys[i] = key;
            self.last_access[i] = t;
            StepOutcome::Evicted(evicted)
        } else if self.keys.len() < cap {
            self.keys.push(key);
            self.last_access.push(t);
            StepOutcome::Stored
        } else {
            StepOutcome::NotStored
        }
    }
}

/// What the continuous cache shows the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuousFeatures {
    /// Raw key ids through an embedding.
    Keys,
    /// Windowed access frequencies of the key and of the residents.
    Frequencies,
}

/// LRU whose priorities are offset by `score * capacity * scale`, with the
/// score predicted on every access; evicts the minimum priority.
pub struct ContinuousCache {
    params: CacheParams,
    features: ContinuousFeatures,
    // (key, priority)
    entries: Vec<(usize, f64)>,
    freq: FrequencyWindow,
    t: usize,
}

impl ContinuousCache {
    pub fn new(params: CacheParams, features: ContinuousFeatures) -> Self {
        ContinuousCache {
            params,
            features,
            entries: Vec::with_capacity(params.capacity + 1),
            freq: FrequencyWindow::new(params.window, params.key_count),
            t: 0,
        }
    }

    pub fn residents(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn observations(params: &CacheParams, features: ContinuousFeatures) -> Vec<ObservationDef> {
        match features {
            ContinuousFeatures::Keys => vec![
                ObservationDef::key("access", params.key_space()),
                ObservationDef::keys("memory", params.capacity, params.key_space()),
            ],
            ContinuousFeatures::Frequencies => vec![
                ObservationDef::scalar("access_freq", 0.0, params.freq_max),
                ObservationDef::vector("memory_freq", params.capacity, 0.0, params.freq_max),
            ],
        }
    }

    pub fn build_choice(
        params: &CacheParams,
        features: ContinuousFeatures,
        initial: bool,
        config: &ChoiceConfig,
    ) -> Result<SmartChoice, DefinitionError> {
        let initial = initial.then(|| Box::new(|_: &State| Value::Float(0.0)) as InitialFunction);
        SmartChoice::new(OutputDef::float(-1.0, 1.0), Self::observations(params, features), initial, config)
    }

    fn priority(&mut self, key: usize, choice: &mut SmartChoice) -> f64 {
        let cap = self.params.capacity;
        match self.features {
            ContinuousFeatures::Keys => {
                let mut memory = self.residents();
                memory.resize(cap, NO_KEY);
                choice.observe("access", Observation::Key(key)).expect("declared");
                choice.observe("memory", Observation::Keys(memory)).expect("declared");
            }
            ContinuousFeatures::Frequencies => {
                let mut memory: Vec<f64> = self.entries.iter().map(|e| self.freq.frequency(e.0)).collect();
                memory.resize(cap, 0.0);
                // out-of-range frequencies are clamped by the choice; pre-clamp to keep its counter meaningful
                let hi = self.params.freq_max;
                memory.iter_mut().for_each(|v| *v = v.min(hi));
                choice.observe("access_freq", self.freq.frequency(key).min(hi)).expect("declared");
                choice.observe("memory_freq", memory).expect("declared");
            }
        }
        let score = choice.predict().as_f64();
        self.t as f64 + score * cap as f64 * self.params.scale
    }

    pub fn step(&mut self, key: usize, choice: &mut SmartChoice) -> StepOutcome {
        self.t += 1;
        self.freq.push(key);
        if let Some(i) = self.entries.iter().position(|e| e.0 == key) {
            choice.feedback(1.0);
            self.entries[i].1 = self.priority(key, choice);
            return StepOutcome::Hit;
        }
        choice.feedback(-1.0);
        let p = self.priority(key, choice);
        if self.entries.len() < self.params.capacity {
            self.entries.push((key, p));
            return StepOutcome::Stored;
        }
        let below = |a: (usize, f64), b: (usize, f64)| a.1 < b.1 || (a.1 == b.1 && a.0 < b.0);
        let min = (1..self.entries.len()).fold(0, |m, i| if below(self.entries[i], self.entries[m]) { i } else { m });
        if below((key, p), self.entries[min]) {
            return StepOutcome::NotStored;
        }
        let evicted = self.entries[min].0;
        self.entries[min] = (key, p);
        StepOutcome::Evicted(evicted)
    }
}

/// Misses of a choice-driven cache over `trace`; the caller closes the
/// episode.
pub fn run_discrete(trace: &AccessTrace, params: CacheParams, choice: &mut SmartChoice) -> SimResult {
    let mut cache = DiscreteCache::new(params);
    tally(trace.keys.iter().map(|&k| cache.step(k, choice)))
}

pub fn run_continuous(
    trace: &AccessTrace,
    params: CacheParams,
    features: ContinuousFeatures,
    choice: &mut SmartChoice,
) -> SimResult {
    let mut cache = ContinuousCache::new(params, features);
    tally(trace.keys.iter().map(|&k| cache.step(k, choice)))
}

fn tally(outcomes: impl Iterator<Item = StepOutcome>) -> SimResult {
    let mut out = SimResult::default();
    for o in outcomes {
        match o {
            StepOutcome::Hit => out.hits += 1,
            _ => out.misses += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use smartchoices::{FixedPolicyLearner, LearnerConfig};
    use smartchoices::Action;

    #[test]
    fn lru_hand_example() {
        let r = lru_simulate(&[1, 2, 1, 3, 2], 2);
        assert_eq!(r.hits, 1);
        assert_eq!(r.hit_ratio(), 0.2);
    }

    #[test]
    fn belady_hand_example() {
        let r = belady_simulate(&[1, 2, 3, 1], 2);
        assert_eq!(r.hits, 1);
        assert_eq!(r.hit_ratio(), 0.25);
    }

    #[test]
    fn compulsory_misses_only_when_everything_fits() {
        let trace = AccessTrace::generate(500, 8, 0.5, 1);
        let mut distinct = trace.keys.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(lru_simulate(&trace.keys, 8).misses, distinct.len());
        assert_eq!(belady_simulate(&trace.keys, 8).misses, distinct.len());
    }

    #[test]
    fn traces_follow_power_law() {
        let t = AccessTrace::generate(200_000, 100, 0.5, 3);
        let count = |k| t.keys.iter().filter(|&&x| x == k).count() as f64;
        assert!(t.keys.iter().all(|&k| (1..=100).contains(&k)));
        let ratio = count(1) / count(4);
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
        assert_eq!(t, AccessTrace::generate(200_000, 100, 0.5, 3));
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(frequency_features(&[1, 2, 3], 9, 3), 0.0);
        assert_eq!(frequency_features(&[7, 7, 7, 7], 7, 4), 1.0);
        assert_eq!(frequency_features(&[5, 1, 2, 1], 1, 4), 0.5);
        let history = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5];
        let mut w = FrequencyWindow::new(4, 10);
        for (i, &k) in history.iter().enumerate() {
            w.push(k);
            for key in 0..=10 {
                assert_eq!(w.frequency(key), frequency_features(&history[..=i], key, 4));
            }
        }
    }

    fn fixed(config: LearnerConfig, f: impl Fn(&State) -> Action + Send + Sync + 'static) -> Box<FixedPolicyLearner> {
        Box::new(FixedPolicyLearner::new(config, f))
    }

    #[test]
    fn zero_offset_is_lru() {
        let params = CacheParams::default();
        for seed in 0..20 {
            let trace = AccessTrace::generate(1000, 100, 0.5, seed);
            let cfg = ChoiceConfig::new(LearnerConfig::cache_continuous(), seed);
            let obs = ContinuousCache::observations(&params, ContinuousFeatures::Frequencies);
            let learner = fixed(cfg.learner.clone(), |_| Action::Continuous(0.0));
            let mut choice = SmartChoice::with_learner(OutputDef::float(-1.0, 1.0), obs, None, &cfg, learner).unwrap();
            let r = run_continuous(&trace, params, ContinuousFeatures::Frequencies, &mut choice);
            assert_eq!(r, lru_simulate(&trace.keys, 10));
        }
    }

    #[test]
    fn very_negative_score_skips_storing() {
        let params = CacheParams::default();
        let cfg = ChoiceConfig::new(LearnerConfig::cache_continuous(), 0);
        let obs = ContinuousCache::observations(&params, ContinuousFeatures::Keys);
        // residents get the highest offset, key 50 the lowest
        let learner =
            fixed(cfg.learner.clone(), |s| Action::Continuous(if s.keys[0] == 50 { -1.0 } else { 1.0 }));
        let mut choice = SmartChoice::with_learner(OutputDef::float(-1.0, 1.0), obs, None, &cfg, learner).unwrap();
        let mut cache = ContinuousCache::new(params, ContinuousFeatures::Keys);
        for k in 1..=10 {
            cache.step(k, &mut choice);
        }
        assert_eq!(cache.step(50, &mut choice), StepOutcome::NotStored);
        assert!(!cache.residents().contains(&50));
    }

    #[test]
    fn discrete_no_evict_index_on_full_cache() {
        let params = CacheParams::default();
        let cfg = ChoiceConfig::new(LearnerConfig::cache_discrete(), 0);
        let learner = fixed(cfg.learner.clone(), |_| Action::Discrete(10));
        let obs = DiscreteCache::observations(&params);
        let mut choice = SmartChoice::with_learner(OutputDef::category(11), obs, None, &cfg, learner).unwrap();
        let mut cache = DiscreteCache::new(params);
        assert_eq!(cache.step(1, &mut choice), StepOutcome::Stored);
        for k in 2..=10 {
            cache.step(k, &mut choice);
        }
        assert_eq!(cache.step(11, &mut choice), StepOutcome::NotStored);
        assert_eq!(cache.step(3, &mut choice), StepOutcome::Hit);
        let stats = choice.stats();
        let summary = choice.end_episode().unwrap();
        // ten stores and one refusal: 11 misses, 1 hit, no evictions; the
        // first miss precedes any decision so its feedback is dropped
        assert_eq!(stats.dropped_feedback, 1);
        assert_eq!(summary.episode_return, -10.0 + 1.0);
    }

    #[test]
    fn discrete_lru_initial_function_matches_lru() {
        let params = CacheParams::default();
        for seed in 0..20 {
            let trace = AccessTrace::generate(1000, 100, 0.5, seed);
            let cfg = ChoiceConfig::new(LearnerConfig::cache_discrete(), seed);
            let mut choice = DiscreteCache::build_choice(&params, true, &cfg).unwrap();
            let r = run_discrete(&trace, params, &mut choice);
            assert_eq!(r, lru_simulate(&trace.keys, 10));
        }
    }

    #[test]
    fn evict_penalty_is_charged() {
        let params = CacheParams { capacity: 2, ..CacheParams::default() };
        let cfg = ChoiceConfig::new(LearnerConfig::cache_discrete(), 0);
        let mut choice = DiscreteCache::build_choice(&params, true, &cfg).unwrap();
        let trace = AccessTrace { keys: vec![1, 2, 3] };
        run_discrete(&trace, params, &mut choice);
        // three misses (the first before any decision) and one eviction
        assert_eq!(choice.end_episode().unwrap().episode_return, -3.0);
    }
}
