use crate::tinynet::Activation;

use super::replay::DEFAULT_CAPACITY;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Ddqn,
    Td3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ddqn => "ddqn",
            Algorithm::Td3 => "td3",
        }
    }
}

/// Hyperparameters of the learner behind a choice.
///
/// Hidden layers use `hidden_activation`; the value/critic head is linear and
/// the actor head is `tanh`.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub discount: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    pub tau: f64,
    pub action_noise: f64,
    pub target_noise: f64,
    pub temperature: f64,
    /// Updates between soft target updates (and, for TD3, actor updates).
    pub update_period: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub embedding_size: usize,
    pub buffer_capacity: usize,
    pub grad_clip: f64,
    pub initial_function_decay: bool,
    /// Gradient steps per transition received.
    pub steps_per_transition: usize,
    /// Fixed gradient steps per episode; overrides `steps_per_transition`.
    pub steps_per_episode: Option<usize>,
    /// Record one training-log line every this many updates (0 disables).
    pub log_every: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            algorithm: Algorithm::Ddqn,
            discount: 0.0,
            lr_actor: 1e-3,
            lr_critic: 1e-4,
            batch_size: 256,
            tau: 0.001,
            action_noise: 0.0,
            target_noise: 0.0,
            temperature: 0.1,
            update_period: 1,
            actor_hidden: vec![16],
            critic_hidden: vec![16],
            hidden_activation: Activation::Relu,
            embedding_size: 8,
            buffer_capacity: DEFAULT_CAPACITY,
            grad_clip: 10.0,
            initial_function_decay: false,
            steps_per_transition: 1,
            steps_per_episode: None,
            log_every: 0,
        }
    }
}

impl LearnerConfig {
    pub fn binary_search() -> Self {
        LearnerConfig {
            algorithm: Algorithm::Td3,
            discount: 0.8,
            lr_actor: 1e-3,
            batch_size: 256,
            tau: 0.05,
            action_noise: 0.03,
            target_noise: 0.2,
            actor_hidden: vec![16],
            critic_hidden: vec![16],
            initial_function_decay: true,
            ..Default::default()
        }
    }

    pub fn quicksort() -> Self {
        LearnerConfig {
            algorithm: Algorithm::Ddqn,
            discount: 0.0,
            batch_size: 256,
            tau: 0.001,
            temperature: 0.1,
            critic_hidden: vec![16, 16],
            ..Default::default()
        }
    }

    pub fn cache_discrete() -> Self {
        LearnerConfig {
            algorithm: Algorithm::Ddqn,
            discount: 0.8,
            batch_size: 1024,
            tau: 0.001,
            temperature: 0.1,
            critic_hidden: vec![10, 10],
            embedding_size: 8,
            ..Default::default()
        }
    }

    pub fn cache_continuous() -> Self {
        LearnerConfig {
            algorithm: Algorithm::Td3,
            discount: 0.8,
            lr_actor: 1e-4,
            batch_size: 1024,
            tau: 0.001,
            action_noise: 0.01,
            target_noise: 0.01,
            actor_hidden: vec![10],
            critic_hidden: vec![10],
            embedding_size: 8,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(format!("discount {} outside [0, 1]", self.discount));
        }
        if self.batch_size == 0 {
            return Err("batch_size must be at least 1".into());
        }
        if !(self.action_noise >= 0.0 && self.target_noise >= 0.0) {
            return Err("noise scales must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(format!("tau {} outside [0, 1]", self.tau));
        }
        if !(self.temperature > 0.0) {
            return Err("temperature must be positive".into());
        }
        if self.update_period == 0 || self.buffer_capacity == 0 {
            return Err("update_period and buffer_capacity must be positive".into());
        }
        if !(self.lr_actor >= 0.0 && self.lr_critic >= 0.0 && self.grad_clip > 0.0) {
            return Err("learning rates must be non-negative and grad_clip positive".into());
        }
        if self.embedding_size == 0 {
            return Err("embedding_size must be positive".into());
        }
        Ok(())
    }
}
