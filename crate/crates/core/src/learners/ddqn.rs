use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{argmax, batch_input, Learner, LearnerConfig, PolicySnapshot, ReplayBuffer, TrainStats, Transition};
use crate::tinynet::{clip_global_norm, Activation, AdamState, Embedding, Mlp, Network, RowGrads};

/// Double DQN over a categorical action space.
pub struct DdqnLearner {
    config: LearnerConfig,
    online: Network,
    target: Network,
    adam: AdamState,
    adam_embedding: Option<AdamState>,
    buffer: ReplayBuffer,
    actions: usize,
    updates: u64,
    rng: ChaCha8Rng,
}

impl DdqnLearner {
    /// `key_space` is the embedding table height; ignored when `key_slots == 0`.
    pub fn new(
        config: LearnerConfig,
        actions: usize,
        dense_width: usize,
        key_slots: usize,
        key_space: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = (key_slots > 0).then(|| Embedding::new(key_space, config.embedding_size, &mut rng));
        let input = dense_width + key_slots * config.embedding_size;
        let mlp = Mlp::with_hidden(
            input,
            &config.critic_hidden,
            actions,
            config.hidden_activation,
            Activation::Identity,
            &mut rng,
        );
        let adam = AdamState::new(mlp.param_count());
        let adam_embedding = embedding.as_ref().map(|e| AdamState::new(e.table().len()));
        let online = Network::new(embedding, key_slots, mlp).expect("consistent q-network");
        DdqnLearner {
            target: online.clone(),
            online,
            adam,
            adam_embedding,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            actions,
            updates: 0,
            rng,
            config,
        }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut Network {
        &mut self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    fn q_values(&self, net: &Network, states: &[&super::State]) -> Vec<f64> {
        let input = batch_input(net.embedding.as_ref(), states.iter().copied(), net.mlp.input_width());
        net.mlp.forward(&input, states.len()).expect("q-network input")
    }

    /// Double-Q regression targets: `r` for terminal transitions (or when the
    /// discount is zero), otherwise `r + γ Q_target(s', argmax_a Q_online(s', a))`.
    pub fn targets(&self, batch: &[&Transition]) -> Vec<f64> {
        let mut y: Vec<f64> = batch.iter().map(|t| t.reward).collect();
        if self.config.discount == 0.0 {
            return y;
        }
        let live: Vec<usize> = (0..batch.len()).filter(|&i| batch[i].next_state.is_some()).collect();
        if live.is_empty() {
            return y;
        }
        let next: Vec<&super::State> = live.iter().map(|&i| batch[i].next_state.as_ref().unwrap()).collect();
        let q_online = self.q_values(&self.online, &next);
        let q_target = self.q_values(&self.target, &next);
        for (row, &i) in live.iter().enumerate() {
            let span = row * self.actions..(row + 1) * self.actions;
            let best = argmax(&q_online[span.clone()]);
            y[i] += self.config.discount * q_target[span][best];
        }
        y
    }

    /// Mean squared TD error on the chosen actions.
    pub fn loss(&self, batch: &[&Transition]) -> f64 {
        let y = self.targets(batch);
        let states: Vec<&super::State> = batch.iter().map(|t| &t.state).collect();
        let q = self.q_values(&self.online, &states);
        batch
            .iter()
            .enumerate()
            .map(|(b, t)| (q[b * self.actions + t.action.index()] - y[b]).powi(2))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// One gradient step on `batch`, then a soft target update every
    /// `update_period` steps.
    pub fn update(&mut self, batch: &[&Transition]) -> TrainStats {
        assert!(!batch.is_empty(), "empty batch");
        let n = batch.len();
        let y = self.targets(batch);
        let input = batch_input(self.online.embedding.as_ref(), batch.iter().map(|t| &t.state), self.online.mlp.input_width());
        let cache = self.online.mlp.forward_cached(input, n).expect("q-network input");
        let q = cache.output();
        let mut upstream = vec![0.0; n * self.actions];
        let (mut loss, mut mean_q) = (0.0, 0.0);
        for (b, t) in batch.iter().enumerate() {
            let idx = b * self.actions + t.action.index();
            let err = q[idx] - y[b];
            loss += err * err;
            mean_q += q[idx];
            upstream[idx] = 2.0 * err / n as f64;
        }
        let mut grads = vec![0.0; self.online.mlp.param_count()];
        let input_grad = self.online.mlp.backward(&cache, &upstream, &mut grads);
        let mut row_grads = RowGrads::new();
        if let Some(e) = &self.online.embedding {
            let width = self.online.mlp.input_width();
            for (b, t) in batch.iter().enumerate() {
                e.accumulate(&t.state.keys, &input_grad[b * width..(b + 1) * width], &mut row_grads);
            }
        }
        clip_global_norm(&mut [&mut grads], &mut [&mut row_grads], self.config.grad_clip);
        self.adam.step(self.online.mlp.params_mut(), &grads, self.config.lr_critic);
        if let (Some(e), Some(adam)) = (&mut self.online.embedding, &mut self.adam_embedding) {
            let width = e.width();
            adam.step_rows(e.table_mut(), width, &row_grads, self.config.lr_critic);
        }
        self.updates += 1;
        if self.updates.is_multiple_of(self.config.update_period as u64) {
            self.target.soft_update_from(&self.online, self.config.tau).expect("same architecture");
        }
        TrainStats { step: self.updates, loss: loss / n as f64, mean_q: mean_q / n as f64 }
    }
}

impl Learner for DdqnLearner {
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
        PolicySnapshot::Boltzmann { q: self.online.clone(), temperature: self.config.temperature }
    }
}
