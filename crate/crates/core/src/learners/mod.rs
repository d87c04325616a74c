//! Off-policy learners that sit behind a [`SmartChoice`](crate::SmartChoice).

mod config;
mod ddqn;
mod handle;
mod replay;
mod td3;

use std::fmt;
use std::sync::{Arc, RwLock};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::NetError;
use crate::policy::PolicyTag;
use crate::tinynet::{Embedding, Network, ParamSnapshot};

pub use config::{Algorithm, LearnerConfig};
pub use ddqn::DdqnLearner;
pub use handle::{LearnerHandle, TrainingMode};
pub use replay::{ReplayBuffer, DEFAULT_CAPACITY};
pub use td3::{Td3Learner, TdTargets};

/// Assembled observation vector: normalized dense features plus categorical
/// key ids for embedding lookup.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct State {
    pub dense: Vec<f64>,
    pub keys: Vec<usize>,
}

/// An action in learner space: a category index, or a value in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(f64),
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Discrete(i) => i,
            Action::Continuous(_) => panic!("continuous action has no index"),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Action::Continuous(v) => v,
            Action::Discrete(i) => i as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: Action,
    pub reward: f64,
    /// `None` marks a terminal transition.
    pub next_state: Option<State>,
    pub policy: PolicyTag,
}

/// One line of training progress.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainStats {
    pub step: u64,
    pub loss: f64,
    pub mean_q: f64,
}

impl TrainStats {
    pub const CSV_HEADER: &'static str = "step,loss,mean_q";

    pub fn csv_line(&self) -> String {
        format!("{},{},{}", self.step, self.loss, self.mean_q)
    }
}

/// The trainable side of a choice.
pub trait Learner: Send {
    fn config(&self) -> &LearnerConfig;
    fn push(&mut self, transition: Transition);
    fn buffer_len(&self) -> usize;
    /// One gradient step; `None` while the buffer holds fewer than a batch.
    fn train_step(&mut self) -> Option<TrainStats>;
    /// Immutable copy of the acting parameters.
    fn snapshot(&self) -> PolicySnapshot;
}

pub type FixedPolicyFn = dyn Fn(&State) -> Action + Send + Sync;

/// Acting parameters published by a learner.
#[derive(Clone)]
pub enum PolicySnapshot {
    /// Boltzmann sampling over Q-values; argmax when not exploring.
    Boltzmann { q: Network, temperature: f64 },
    /// Tanh actor with Gaussian action noise while exploring.
    Deterministic { actor: Network, noise: f64 },
    /// A hand-written policy that never changes.
    Fixed(Arc<FixedPolicyFn>),
}

impl fmt::Debug for PolicySnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySnapshot::Boltzmann { temperature, .. } => write!(f, "Boltzmann(T={temperature})"),
            PolicySnapshot::Deterministic { noise, .. } => write!(f, "Deterministic(sigma={noise})"),
            PolicySnapshot::Fixed(_) => write!(f, "Fixed"),
        }
    }
}

impl PolicySnapshot {
    pub fn act(&self, state: &State, explore: bool, rng: &mut dyn RngCore) -> Action {
        match self {
            PolicySnapshot::Boltzmann { q, temperature } => {
                let values = q.forward(&state.keys, &state.dense).expect("state does not fit q-network");
                if explore {
                    Action::Discrete(sample_softmax(&values, *temperature, rng))
                } else {
                    Action::Discrete(argmax(&values))
                }
            }
            PolicySnapshot::Deterministic { actor, noise } => {
                let out = actor.forward(&state.keys, &state.dense).expect("state does not fit actor")[0];
                let sigma = if explore { *noise } else { 0.0 };
                Action::Continuous(noisy_action(out, sigma, rng))
            }
            PolicySnapshot::Fixed(f) => f(state),
        }
    }

    /// Q-values or actor output for a state.
    pub fn raw_output(&self, state: &State) -> Option<Vec<f64>> {
        match self {
            PolicySnapshot::Boltzmann { q, .. } => q.forward(&state.keys, &state.dense).ok(),
            PolicySnapshot::Deterministic { actor, .. } => actor.forward(&state.keys, &state.dense).ok(),
            PolicySnapshot::Fixed(_) => None,
        }
    }

    pub fn network(&self) -> Option<&Network> {
        match self {
            PolicySnapshot::Boltzmann { q, .. } => Some(q),
            PolicySnapshot::Deterministic { actor, .. } => Some(actor),
            PolicySnapshot::Fixed(_) => None,
        }
    }

    /// Serialized parameters; fixed policies have none.
    pub fn encode(&self) -> Option<Vec<u8>> {
        self.network().map(|n| n.to_params("policy.").encode())
    }

    /// A copy of `self` with parameters replaced by decoded `bytes`.
    pub fn with_encoded(&self, bytes: &[u8]) -> Result<PolicySnapshot, NetError> {
        let snap = ParamSnapshot::decode(bytes)?;
        let mut out = self.clone();
        match &mut out {
            PolicySnapshot::Boltzmann { q: net, .. } | PolicySnapshot::Deterministic { actor: net, .. } => {
                net.load_params("policy.", &snap)?;
            }
            PolicySnapshot::Fixed(_) => return Err(NetError::Snapshot("fixed policies have no parameters".into())),
        }
        Ok(out)
    }
}

pub(crate) fn noisy_action(mean: f64, sigma: f64, rng: &mut dyn RngCore) -> f64 {
    let eps: f64 = if sigma > 0.0 { rng.sample::<f64, _>(StandardNormal) * sigma } else { 0.0 };
    (mean + eps).clamp(-1.0, 1.0)
}

/// `softmax(q / temperature)`, computed stably.
pub fn softmax_probs(q: &[f64], temperature: f64) -> Vec<f64> {
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = q.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(crate) fn sample_softmax(q: &[f64], temperature: f64, rng: &mut dyn RngCore) -> usize {
    let probs = softmax_probs(q, temperature);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    argmax(&probs)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mlp input rows for a batch of states: embedded keys then dense features.
pub(crate) fn batch_input<'a>(
    embedding: Option<&Embedding>,
    states: impl Iterator<Item = &'a State>,
    width: usize,
) -> Vec<f64> {
    let mut out = Vec::new();
    for s in states {
        if let Some(e) = embedding {
            e.embed_into(&s.keys, &mut out).expect("key outside embedding table");
        }
        out.extend_from_slice(&s.dense);
    }
    debug_assert_eq!(out.len() % width.max(1), 0);
    out
}

/// Latest published policy. Readers clone the `Arc` under a short read lock
/// and never see a partially written snapshot.
#[derive(Debug)]
pub struct SnapshotCell {
    current: RwLock<Arc<PolicySnapshot>>,
}

impl SnapshotCell {
    pub fn new(initial: PolicySnapshot) -> Self {
        SnapshotCell { current: RwLock::new(Arc::new(initial)) }
    }

    pub fn publish(&self, snapshot: PolicySnapshot) {
        let fresh = Arc::new(snapshot);
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = fresh;
    }

    pub fn current(&self) -> Arc<PolicySnapshot> {
        Arc::clone(&self.current.read().unwrap_or_else(|e| e.into_inner()))
    }
}

/// A learner that never trains and always acts with the given function.
pub struct FixedPolicyLearner {
    config: LearnerConfig,
    policy: Arc<FixedPolicyFn>,
    pushed: usize,
}

impl FixedPolicyLearner {
    pub fn new(config: LearnerConfig, policy: impl Fn(&State) -> Action + Send + Sync + 'static) -> Self {
        FixedPolicyLearner { config, policy: Arc::new(policy), pushed: 0 }
    }
}

impl Learner for FixedPolicyLearner {
    fn config(&self) -> &LearnerConfig {
        &self.config
    }

    fn push(&mut self, _transition: Transition) {
        self.pushed += 1;
    }

    fn buffer_len(&self) -> usize {
        self.pushed
    }

    fn train_step(&mut self) -> Option<TrainStats> {
        None
    }

    fn snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Fixed(Arc::clone(&self.policy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_q_gives_even_odds() {
        assert_eq!(softmax_probs(&[0.0, 0.0], 0.1), vec![0.5, 0.5]);
    }

    #[test]
    fn low_temperature_picks_argmax() {
        let p = softmax_probs(&[1.0, 2.0], 1e-6);
        assert_eq!(p[1], 1.0);
        let p = softmax_probs(&[1.0, 2.0], 0.1);
        let expected = 1.0 / (1.0 + (-10.0f64).exp());
        assert!((p[1] - expected).abs() < 1e-12);
        assert!((p[1] - 0.9999546).abs() < 1e-7);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let q: Vec<f64> = (0..8).map(|_| rng.random_range(-50.0..50.0)).collect();
            let t = rng.random_range(0.01..5.0);
            let s: f64 = softmax_probs(&q, t).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_action_is_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = noisy_action(1.0, 5.0, &mut rng);
            assert!((-1.0..=1.0).contains(&a));
        }
        assert_eq!(noisy_action(0.25, 0.0, &mut rng), 0.25);
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[1.0, 2.0]), 1);
        assert_eq!(argmax(&[3.0, 3.0, 1.0]), 0);
    }
}
