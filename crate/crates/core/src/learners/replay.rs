use std::collections::VecDeque;

use rand::Rng;

use super::Transition;

/// Capacity used by every experiment configuration.
pub const DEFAULT_CAPACITY: usize = 20_000;

/// FIFO transition store with uniform sampling (with replacement).
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer { items: VecDeque::with_capacity(capacity.min(1 << 16)), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `None` while fewer than `n` transitions are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if self.items.len() < n || n == 0 {
            return None;
        }
        let len = self.items.len();
        Some((0..n).map(|_| &self.items[rng.random_range(0..len)]).collect())
    }
}
