//! Bandit problems with known optima, driven through the public choice API.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smartchoices::{ChoiceConfig, LearnerConfig, ObservationDef, OutputDef, SmartChoice, State, Value};

/// Learner settings for the sanity bandits: contextual bandit, small batch.
pub fn ddqn_bandit_config() -> LearnerConfig {
    LearnerConfig { discount: 0.0, lr_critic: 1e-3, batch_size: 32, ..LearnerConfig::quicksort() }
}

pub fn td3_bandit_config() -> LearnerConfig {
    LearnerConfig { discount: 0.0, lr_critic: 1e-3, batch_size: 64, ..LearnerConfig::binary_search() }
}

fn context(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..1.0)
}

/// Bernoulli arms with success probabilities 0.1 and 0.9. Returns the share of
/// 100 random probe states on which the greedy action is arm 1.
pub fn two_armed(seed: u64, transitions: usize) -> f64 {
    let mut choice = SmartChoice::new(
        OutputDef::category(2),
        vec![ObservationDef::scalar("context", 0.0, 1.0)],
        None,
        &ChoiceConfig::new(ddqn_bandit_config(), seed),
    )
    .unwrap();
    let mut env = ChaCha8Rng::seed_from_u64(seed ^ 0xa11ce);
    for _ in 0..transitions {
        choice.observe("context", context(&mut env)).unwrap();
        let arm = choice.predict().as_index();
        let p = [0.1, 0.9][arm];
        choice.feedback(if env.random::<f64>() < p { 1.0 } else { 0.0 });
        choice.end_episode();
    }
    let hits = (0..100)
        .filter(|_| {
            let state = State { dense: vec![context(&mut env)], keys: vec![] };
            choice.learned_value(&state) == Value::Category(1)
        })
        .count();
    hits as f64 / 100.0
}

/// Reward `-(a - 0.7)^2` for an output `a` in `[0, 1]`. Returns the greedy
/// action at the mean context.
pub fn quadratic(seed: u64, transitions: usize) -> f64 {
    let mut choice = SmartChoice::new(
        OutputDef::float(0.0, 1.0),
        vec![ObservationDef::scalar("context", 0.0, 1.0)],
        None,
        &ChoiceConfig::new(td3_bandit_config(), seed),
    )
    .unwrap();
    let mut env = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b);
    for _ in 0..transitions {
        choice.observe("context", context(&mut env)).unwrap();
        let a = choice.predict().as_f64();
        choice.feedback(-(a - 0.7).powi(2));
        choice.end_episode();
    }
    choice.learned_value(&State { dense: vec![0.5], keys: vec![] }).as_f64()
}
