use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{batch_input, Learner, LearnerConfig, PolicySnapshot, ReplayBuffer, State, TrainStats, Transition};
use crate::tinynet::{clip_global_norm, soft_update, Activation, AdamState, Embedding, Mlp, Network, RowGrads};

/// Regression targets for both critics. `y` is the elementwise minimum of
/// the per-critic targets.
#[derive(Clone, Debug, PartialEq)]
pub struct TdTargets {
    pub y: Vec<f64>,
    pub per_critic: [Vec<f64>; 2],
}

/// Twin-critic deterministic policy gradient for a scalar action in `[-1, 1]`.
///
/// When the state carries categorical keys, one embedding table is shared by
/// the actor and both critics. It is trained through the critic loss; the
/// actor reads it without propagating gradient into it.
pub struct Td3Learner {
    config: LearnerConfig,
    key_slots: usize,
    embedding: Option<Embedding>,
    target_embedding: Option<Embedding>,
    adam_embedding: Option<AdamState>,
    actor: Mlp,
    actor_target: Mlp,
    adam_actor: AdamState,
    critics: [Mlp; 2],
    critic_targets: [Mlp; 2],
    adam_critics: [AdamState; 2],
    buffer: ReplayBuffer,
    updates: u64,
    rng: ChaCha8Rng,
}

impl Td3Learner {
    pub fn new(config: LearnerConfig, dense_width: usize, key_slots: usize, key_space: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = (key_slots > 0).then(|| Embedding::new(key_space, config.embedding_size, &mut rng));
        let state_width = dense_width + key_slots * config.embedding_size;
        let actor = Mlp::with_hidden(
            state_width,
            &config.actor_hidden,
            1,
            config.hidden_activation,
            Activation::Tanh,
            &mut rng,
        );
        let critic = |rng: &mut ChaCha8Rng| {
            Mlp::with_hidden(state_width + 1, &config.critic_hidden, 1, config.hidden_activation, Activation::Identity, rng)
        };
        let critics = [critic(&mut rng), critic(&mut rng)];
        Td3Learner {
            key_slots,
            target_embedding: embedding.clone(),
            adam_embedding: embedding.as_ref().map(|e| AdamState::new(e.table().len())),
            embedding,
            actor_target: actor.clone(),
            adam_actor: AdamState::new(actor.param_count()),
            actor,
            critic_targets: critics.clone(),
            adam_critics: [AdamState::new(critics[0].param_count()), AdamState::new(critics[1].param_count())],
            critics,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            updates: 0,
            rng,
            config,
        }
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> &[Mlp; 2] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [Mlp; 2] {
        &mut self.critics
    }

    pub fn critic_targets_mut(&mut self) -> &mut [Mlp; 2] {
        &mut self.critic_targets
    }

    fn state_width(&self) -> usize {
        self.actor.input_width()
    }

    fn with_actions(&self, states: &[f64], actions: &[f64]) -> Vec<f64> {
        let w = self.state_width();
        let mut out = Vec::with_capacity(actions.len() * (w + 1));
        for (s, &a) in states.chunks_exact(w).zip(actions) {
            out.extend_from_slice(s);
            out.push(a);
        }
        out
    }

    /// Greedy action for a state, without noise.
    pub fn greedy(&self, state: &State) -> f64 {
        let input = batch_input(self.embedding.as_ref(), std::iter::once(state), self.state_width());
        self.actor.forward(&input, 1).expect("actor input")[0]
    }

    /// Clipped double-Q targets with target policy smoothing.
    pub fn targets_with(&self, batch: &[&Transition], rng: &mut dyn RngCore) -> TdTargets {
        let rewards: Vec<f64> = batch.iter().map(|t| t.reward).collect();
        let mut per_critic = [rewards.clone(), rewards.clone()];
        let live: Vec<usize> = (0..batch.len()).filter(|&i| batch[i].next_state.is_some()).collect();
        if self.config.discount > 0.0 && !live.is_empty() {
            let next = batch_input(
                self.target_embedding.as_ref(),
                live.iter().map(|&i| batch[i].next_state.as_ref().unwrap()),
                self.state_width(),
            );
            let n = live.len();
            let sigma = self.config.target_noise;
            let mean = self.actor_target.forward(&next, n).expect("actor input");
            let smoothed: Vec<f64> = mean
                .iter()
                .map(|&m| {
                    let eps: f64 = if sigma > 0.0 { rng.sample::<f64, _>(StandardNormal) * sigma } else { 0.0 };
                    (m + eps.clamp(-2.0 * sigma, 2.0 * sigma)).clamp(-1.0, 1.0)
                })
                .collect();
            let input = self.with_actions(&next, &smoothed);
            for (c, target) in self.critic_targets.iter().enumerate() {
                let q = target.forward(&input, n).expect("critic input");
                for (row, &i) in live.iter().enumerate() {
                    per_critic[c][i] += self.config.discount * q[row];
                }
            }
        }
        let y = per_critic[0].iter().zip(&per_critic[1]).map(|(a, b)| a.min(*b)).collect();
        TdTargets { y, per_critic }
    }

    pub fn update(&mut self, batch: &[&Transition]) -> TrainStats {
        assert!(!batch.is_empty(), "empty batch");
        let n = batch.len();
        let mut rng = self.rng.clone();
        let targets = self.targets_with(batch, &mut rng);
        self.rng = rng;
        let w = self.state_width();
        let states = batch_input(self.embedding.as_ref(), batch.iter().map(|t| &t.state), w);
        let actions: Vec<f64> = batch.iter().map(|t| t.action.value()).collect();
        let critic_input = self.with_actions(&states, &actions);

        let mut row_grads = RowGrads::new();
        let mut critic_grads = [vec![0.0; self.critics[0].param_count()], vec![0.0; self.critics[1].param_count()]];
        let (mut loss, mut mean_q) = (0.0, 0.0);
        for c in 0..2 {
            let cache = self.critics[c].forward_cached(critic_input.clone(), n).expect("critic input");
            let q = cache.output();
            let upstream: Vec<f64> = q.iter().zip(&targets.y).map(|(q, y)| 2.0 * (q - y) / n as f64).collect();
            if c == 0 {
                loss = q.iter().zip(&targets.y).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / n as f64;
                mean_q = q.iter().sum::<f64>() / n as f64;
            }
            let input_grad = self.critics[c].backward(&cache, &upstream, &mut critic_grads[c]);
            if let Some(e) = &self.embedding {
                for (b, t) in batch.iter().enumerate() {
                    e.accumulate(&t.state.keys, &input_grad[b * (w + 1)..(b + 1) * (w + 1)], &mut row_grads);
                }
            }
        }
        {
            let [g0, g1] = &mut critic_grads;
            clip_global_norm(&mut [g0.as_mut_slice(), g1.as_mut_slice()], &mut [&mut row_grads], self.config.grad_clip);
        }
        for c in 0..2 {
            self.adam_critics[c].step(self.critics[c].params_mut(), &critic_grads[c], self.config.lr_critic);
        }
        if let (Some(e), Some(adam)) = (&mut self.embedding, &mut self.adam_embedding) {
            let width = e.width();
            adam.step_rows(e.table_mut(), width, &row_grads, self.config.lr_critic);
        }

        self.updates += 1;
        if self.updates.is_multiple_of(self.config.update_period as u64) {
            self.actor_step(&states, n);
            soft_update(self.actor_target.params_mut(), self.actor.params(), self.config.tau).expect("actor shape");
            for c in 0..2 {
                soft_update(self.critic_targets[c].params_mut(), self.critics[c].params(), self.config.tau)
                    .expect("critic shape");
            }
            if let (Some(t), Some(o)) = (&mut self.target_embedding, &self.embedding) {
                soft_update(t.table_mut(), o.table(), self.config.tau).expect("embedding shape");
            }
        }
        TrainStats { step: self.updates, loss, mean_q }
    }

    /// Ascends `Q1(s, actor(s))` with respect to the actor parameters.
    fn actor_step(&mut self, states: &[f64], n: usize) {
        let actor_cache = self.actor.forward_cached(states.to_vec(), n).expect("actor input");
        let proposed = actor_cache.output().to_vec();
        let critic_input = self.with_actions(states, &proposed);
        let critic_cache = self.critics[0].forward_cached(critic_input, n).expect("critic input");
        let upstream = vec![-1.0 / n as f64; n];
        let mut discard = vec![0.0; self.critics[0].param_count()];
        let input_grad = self.critics[0].backward(&critic_cache, &upstream, &mut discard);
        let w = self.state_width();
        let action_grad: Vec<f64> = (0..n).map(|b| input_grad[b * (w + 1) + w]).collect();
        let mut grads = vec![0.0; self.actor.param_count()];
        self.actor.backward(&actor_cache, &action_grad, &mut grads);
        clip_global_norm(&mut [&mut grads], &mut [], self.config.grad_clip);
        self.adam_actor.step(self.actor.params_mut(), &grads, self.config.lr_actor);
    }
}

impl Learner for Td3Learner {
    fn config(&self) -> &LearnerConfig {
        &self.config
    }

    fn push(&mut self, transition: Transition) {
        self.buffer.push(transition);
    }

    fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    fn train_step(&mut self) -> Option<TrainStats> {
        let buffer = std::mem::replace(&mut self.buffer, ReplayBuffer::new(1));
        let stats = buffer.sample(self.config.batch_size, &mut self.rng).map(|batch| self.update(&batch));
        self.buffer = buffer;
        stats
    }

    fn snapshot(&self) -> PolicySnapshot {
        let actor = Network::new(self.embedding.clone(), self.key_slots, self.actor.clone()).expect("actor network");
        PolicySnapshot::Deterministic { actor, noise: self.config.action_noise }
    }
}
