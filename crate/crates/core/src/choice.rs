//! The `SmartChoice` decision point and its observe / predict / feedback API.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DefinitionError, ObservationError};
use crate::learners::{
    Action, Algorithm, DdqnLearner, Learner, LearnerConfig, LearnerHandle, PolicySnapshot, State, Td3Learner,
    TrainingMode, Transition,
};
use crate::policy::{PolicySelector, PolicyTag, SelectorConfig};

/// What a choice produces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputDef {
    Continuous { shape: usize, lo: f64, hi: f64 },
    Categorical { shape: usize, cardinality: usize },
}

impl OutputDef {
    pub fn float(lo: f64, hi: f64) -> Self {
        OutputDef::Continuous { shape: 1, lo, hi }
    }

    pub fn category(cardinality: usize) -> Self {
        OutputDef::Categorical { shape: 1, cardinality }
    }

    fn validate(&self) -> Result<(), DefinitionError> {
        match *self {
            OutputDef::Continuous { shape, lo, hi } => {
                if !(lo < hi) {
                    return Err(DefinitionError::InvalidRange { name: "output".into(), lo, hi });
                }
                check_shape(shape)
            }
            OutputDef::Categorical { shape, cardinality } => {
                if cardinality < 2 {
                    return Err(DefinitionError::TooFewCategories(cardinality));
                }
                check_shape(shape)
            }
        }
    }
}

fn check_shape(shape: usize) -> Result<(), DefinitionError> {
    match shape {
        0 => Err(DefinitionError::EmptyShape { name: "output".into() }),
        1 => Ok(()),
        n => Err(DefinitionError::UnsupportedShape(n)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ObservationKind {
    Scalar { lo: f64, hi: f64 },
    Vector { len: usize, lo: f64, hi: f64 },
    /// `len` categorical keys drawn from `0..key_space`.
    Keys { len: usize, key_space: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationDef {
    pub name: String,
    pub kind: ObservationKind,
}

impl ObservationDef {
    pub fn scalar(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        ObservationDef { name: name.into(), kind: ObservationKind::Scalar { lo, hi } }
    }

    pub fn vector(name: impl Into<String>, len: usize, lo: f64, hi: f64) -> Self {
        ObservationDef { name: name.into(), kind: ObservationKind::Vector { len, lo, hi } }
    }

    pub fn key(name: impl Into<String>, key_space: usize) -> Self {
        Self::keys(name, 1, key_space)
    }

    pub fn keys(name: impl Into<String>, len: usize, key_space: usize) -> Self {
        ObservationDef { name: name.into(), kind: ObservationKind::Keys { len, key_space } }
    }

    fn validate(&self) -> Result<(), DefinitionError> {
        let range_err = |lo, hi| DefinitionError::InvalidRange { name: self.name.clone(), lo, hi };
        let empty = || DefinitionError::EmptyShape { name: self.name.clone() };
        match self.kind {
            ObservationKind::Scalar { lo, hi } if !(lo < hi) => Err(range_err(lo, hi)),
            ObservationKind::Vector { lo, hi, .. } if !(lo < hi) => Err(range_err(lo, hi)),
            ObservationKind::Vector { len: 0, .. } | ObservationKind::Keys { len: 0, .. } => Err(empty()),
            ObservationKind::Keys { key_space: 0, .. } => Err(range_err(0.0, 0.0)),
            _ => Ok(()),
        }
    }

    fn dense_width(&self) -> usize {
        match self.kind {
            ObservationKind::Scalar { .. } => 1,
            ObservationKind::Vector { len, .. } => len,
            ObservationKind::Keys { .. } => 0,
        }
    }

    fn key_slots(&self) -> usize {
        match self.kind {
            ObservationKind::Keys { len, .. } => len,
            _ => 0,
        }
    }
}

/// A value passed to [`SmartChoice::observe`].
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Float(f64),
    Floats(Vec<f64>),
    Key(usize),
    Keys(Vec<usize>),
}

impl From<f64> for Observation {
    fn from(v: f64) -> Self {
        Observation::Float(v)
    }
}

impl From<Vec<f64>> for Observation {
    fn from(v: Vec<f64>) -> Self {
        Observation::Floats(v)
    }
}

/// A predicted value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Float(f64),
    Category(usize),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Float(v) => v,
            Value::Category(c) => c as f64,
        }
    }

    pub fn as_index(self) -> usize {
        match self {
            Value::Category(c) => c,
            Value::Float(v) => v.max(0.0) as usize,
        }
    }
}

pub type InitialFunction = Box<dyn Fn(&State) -> Value + Send>;

/// Everything needed to build a choice besides its interface.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceConfig {
    pub learner: LearnerConfig,
    pub selector: SelectorConfig,
    pub seed: u64,
    pub mode: TrainingMode,
}

impl ChoiceConfig {
    pub fn new(learner: LearnerConfig, seed: u64) -> Self {
        ChoiceConfig { learner, selector: SelectorConfig::default(), seed, mode: TrainingMode::Synchronous }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChoiceStats {
    pub clamped: u64,
    pub missing: u64,
    pub dropped_feedback: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSummary {
    pub policy: PolicyTag,
    pub episode_return: f64,
    pub transitions: usize,
}

/// Builds the state vector from pending observations.
///
/// Scalars and vectors are mapped to `[0, 1]` by `(v - lo) / (hi - lo)`,
/// missing ones become `0.5`. Keys go to `State::keys`; missing keys become
/// id 0. Returns the state and the number of missing observations.
pub fn assemble_state(defs: &[ObservationDef], pending: &[Option<Observation>]) -> (State, usize) {
    let mut state = State::default();
    let mut missing = 0;
    for (def, value) in defs.iter().zip(pending) {
        match (def.kind, value) {
            (ObservationKind::Scalar { lo, hi }, Some(Observation::Float(v))) => {
                state.dense.push(normalize(*v, lo, hi));
            }
            (ObservationKind::Vector { lo, hi, .. }, Some(Observation::Floats(vs))) => {
                state.dense.extend(vs.iter().map(|&v| normalize(v, lo, hi)));
            }
            (ObservationKind::Keys { .. }, Some(Observation::Keys(ks))) => state.keys.extend_from_slice(ks),
            (kind, _) => {
                missing += 1;
                match kind {
                    ObservationKind::Scalar { .. } => state.dense.push(0.5),
                    ObservationKind::Vector { len, .. } => state.dense.extend(std::iter::repeat_n(0.5, len)),
                    ObservationKind::Keys { len, .. } => state.keys.extend(std::iter::repeat_n(0, len)),
                }
            }
        }
    }
    (state, missing)
}

fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// A decision point backed by a learner, with an optional initial function
/// as a safety net.
pub struct SmartChoice {
    output: OutputDef,
    defs: Vec<ObservationDef>,
    index: HashMap<String, usize>,
    initial: Option<InitialFunction>,
    learner: LearnerHandle,
    selector: PolicySelector,
    pending: Vec<Option<Observation>>,
    open: Option<Transition>,
    episode: Vec<Transition>,
    episode_policy: Option<PolicyTag>,
    explore: bool,
    rng: ChaCha8Rng,
    stats: ChoiceStats,
}

impl SmartChoice {
    /// Creates a choice with a TD3 learner for continuous outputs or a DDQN
    /// learner for categorical ones.
    pub fn new(
        output: OutputDef,
        observations: Vec<ObservationDef>,
        initial: Option<InitialFunction>,
        config: &ChoiceConfig,
    ) -> Result<Self, DefinitionError> {
        output.validate()?;
        config.learner.validate().map_err(DefinitionError::InvalidConfig)?;
        let dense_width: usize = observations.iter().map(ObservationDef::dense_width).sum();
        let key_slots: usize = observations.iter().map(ObservationDef::key_slots).sum();
        let key_space = observations
            .iter()
            .filter_map(|d| match d.kind {
                ObservationKind::Keys { key_space, .. } => Some(key_space),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let learner_seed = config.seed ^ 0x5eed_1ea7_2e72_0001;
        let mut learner_config = config.learner.clone();
        let learner: Box<dyn Learner> = match output {
            OutputDef::Continuous { .. } => {
                learner_config.algorithm = Algorithm::Td3;
                Box::new(Td3Learner::new(learner_config, dense_width, key_slots, key_space, learner_seed))
            }
            OutputDef::Categorical { cardinality, .. } => {
                learner_config.algorithm = Algorithm::Ddqn;
                Box::new(DdqnLearner::new(learner_config, cardinality, dense_width, key_slots, key_space, learner_seed))
            }
        };
        Self::with_learner(output, observations, initial, config, learner)
    }

    /// Creates a choice around a caller-supplied learner.
    pub fn with_learner(
        output: OutputDef,
        observations: Vec<ObservationDef>,
        initial: Option<InitialFunction>,
        config: &ChoiceConfig,
        learner: Box<dyn Learner>,
    ) -> Result<Self, DefinitionError> {
        output.validate()?;
        let mut index = HashMap::new();
        for (i, def) in observations.iter().enumerate() {
            def.validate()?;
            if index.insert(def.name.clone(), i).is_some() {
                return Err(DefinitionError::DuplicateObservation(def.name.clone()));
            }
        }
        let decay = learner.config().initial_function_decay;
        let selector = PolicySelector::new(config.selector.clone(), initial.is_some(), decay);
        Ok(SmartChoice {
            output,
            pending: vec![None; observations.len()],
            defs: observations,
            index,
            initial,
            learner: LearnerHandle::new(learner, config.mode),
            selector,
            open: None,
            episode: Vec::new(),
            episode_policy: None,
            explore: true,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            stats: ChoiceStats::default(),
        })
    }

    pub fn output(&self) -> OutputDef {
        self.output
    }

    pub fn observation_defs(&self) -> &[ObservationDef] {
        &self.defs
    }

    pub fn stats(&self) -> ChoiceStats {
        self.stats
    }

    pub fn selector(&self) -> &PolicySelector {
        &self.selector
    }

    pub fn learner(&self) -> &LearnerHandle {
        &self.learner
    }

    /// Disables exploration noise and sampling in the learned policy.
    pub fn set_explore(&mut self, explore: bool) {
        self.explore = explore;
    }

    pub fn episode_policy(&self) -> Option<PolicyTag> {
        self.episode_policy
    }

    /// Transitions finalized so far in the current episode, plus the open one.
    pub fn episode_len(&self) -> usize {
        self.episode.len() + usize::from(self.open.is_some())
    }

    pub fn observe(&mut self, name: &str, value: impl Into<Observation>) -> Result<(), ObservationError> {
        let idx = *self.index.get(name).ok_or_else(|| ObservationError::Undeclared(name.to_string()))?;
        let def = &self.defs[idx];
        let wrong = |expected| ObservationError::WrongKind { name: name.to_string(), expected };
        let mut clamped = 0;
        let mut clamp = |v: f64, lo: f64, hi: f64| {
            if v < lo || v > hi || v.is_nan() {
                clamped += 1;
                if v.is_nan() {
                    lo
                } else {
                    v.clamp(lo, hi)
                }
            } else {
                v
            }
        };
        let stored = match (def.kind, value.into()) {
            (ObservationKind::Scalar { lo, hi }, Observation::Float(v)) => Observation::Float(clamp(v, lo, hi)),
            (ObservationKind::Scalar { .. }, _) => return Err(wrong("a float")),
            (ObservationKind::Vector { len, lo, hi }, Observation::Floats(vs)) if vs.len() == len => {
                Observation::Floats(vs.into_iter().map(|v| clamp(v, lo, hi)).collect())
            }
            (ObservationKind::Vector { .. }, _) => return Err(wrong("a float vector of the declared length")),
            (ObservationKind::Keys { len: 1, key_space }, Observation::Key(k)) => {
                Observation::Keys(vec![clamp_key(k, key_space, &mut clamped)])
            }
            (ObservationKind::Keys { len, key_space }, Observation::Keys(ks)) if ks.len() == len => {
                Observation::Keys(ks.into_iter().map(|k| clamp_key(k, key_space, &mut clamped)).collect())
            }
            (ObservationKind::Keys { .. }, _) => return Err(wrong("keys of the declared length")),
        };
        self.stats.clamped += clamped;
        self.pending[idx] = Some(stored);
        Ok(())
    }

    pub fn observe_many<'a, V: Into<Observation>>(
        &mut self,
        values: impl IntoIterator<Item = (&'a str, V)>,
    ) -> Result<(), ObservationError> {
        for (name, v) in values {
            self.observe(name, v)?;
        }
        Ok(())
    }

    /// The state a `predict` call would see right now.
    pub fn current_state(&self) -> State {
        assemble_state(&self.defs, &self.pending).0
    }

    pub fn predict(&mut self) -> Value {
        let (state, missing) = assemble_state(&self.defs, &self.pending);
        self.stats.missing += missing as u64;
        if let Some(mut prev) = self.open.take() {
            prev.next_state = Some(state.clone());
            self.episode.push(prev);
        }
        let policy = *self.episode_policy.get_or_insert_with(|| self.selector.select(&mut self.rng));
        let (value, action) = match (policy, &self.initial) {
            (PolicyTag::Initial, Some(f)) => {
                let v = f(&state);
                (v, self.to_action(v))
            }
            _ => {
                let snapshot = self.learner.current_snapshot();
                let action = snapshot.act(&state, self.explore, &mut self.rng);
                (self.to_value(action), action)
            }
        };
        self.open = Some(Transition { state, action, reward: 0.0, next_state: None, policy });
        self.pending.iter_mut().for_each(|p| *p = None);
        value
    }

    /// Credits `reward` to the most recent prediction. Dropped (and counted)
    /// when no prediction is open.
    pub fn feedback(&mut self, reward: f64) {
        match &mut self.open {
            Some(t) => t.reward += reward,
            None => self.stats.dropped_feedback += 1,
        }
    }

    /// Closes the episode: hands its transitions to the learner and its
    /// return to the policy selector.
    pub fn end_episode(&mut self) -> Option<EpisodeSummary> {
        self.pending.iter_mut().for_each(|p| *p = None);
        if let Some(last) = self.open.take() {
            self.episode.push(last);
        }
        let policy = self.episode_policy.take();
        if self.episode.is_empty() {
            return None;
        }
        let policy = policy.expect("episode with transitions has a policy");
        let episode = std::mem::take(&mut self.episode);
        let episode_return: f64 = episode.iter().map(|t| t.reward).sum();
        let transitions = episode.len();
        self.selector.report_return(policy, episode_return);
        self.learner.submit(episode);
        Some(EpisodeSummary { policy, episode_return, transitions })
    }

    /// Greedy output of the learned policy for `state`, without recording
    /// anything.
    pub fn learned_value(&self, state: &State) -> Value {
        let snapshot = self.learner.current_snapshot();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        self.to_value(snapshot.act(state, false, &mut rng))
    }

    pub fn snapshot(&self) -> std::sync::Arc<PolicySnapshot> {
        self.learner.current_snapshot()
    }

    fn to_value(&self, action: Action) -> Value {
        match (self.output, action) {
            (OutputDef::Continuous { lo, hi, .. }, Action::Continuous(a)) => {
                Value::Float(lo + (a.clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo))
            }
            (OutputDef::Categorical { cardinality, .. }, Action::Discrete(i)) => Value::Category(i.min(cardinality - 1)),
            (out, a) => panic!("learner produced {a:?} for output {out:?}"),
        }
    }

    fn to_action(&self, value: Value) -> Action {
        match self.output {
            OutputDef::Continuous { lo, hi, .. } => {
                Action::Continuous((2.0 * (value.as_f64() - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0))
            }
            OutputDef::Categorical { cardinality, .. } => Action::Discrete(value.as_index().min(cardinality - 1)),
        }
    }
}

fn clamp_key(k: usize, key_space: usize, clamped: &mut u64) -> usize {
    if k >= key_space {
        *clamped += 1;
        key_space - 1
    } else {
        k
    }
}
