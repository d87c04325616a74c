//! Switching between the developer's initial function and the learned policy.
//!
//! The selector keeps an exponential moving average of episode returns for
//! each policy. While the learned policy holds up against the initial
//! function (within a margin) its share grows additively; when it falls
//! behind, the share is halved, down to a floor.

use rand::{Rng, RngCore};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyTag {
    Initial,
    Learned,
}

impl PolicyTag {
    pub fn name(self) -> &'static str {
        match self {
            PolicyTag::Initial => "initial",
            PolicyTag::Learned => "learned",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectorConfig {
    pub ema_decay: f64,
    pub increase: f64,
    pub decrease: f64,
    pub p_min: f64,
    /// Margin is `margin_rel * |ema_initial| + margin_abs`.
    pub margin_rel: f64,
    pub margin_abs: f64,
    /// Time constant (in episodes) of the forced hand-over when initial
    /// function decay is enabled.
    pub decay_episodes: f64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            ema_decay: 0.95,
            increase: 0.05,
            decrease: 0.5,
            p_min: 0.05,
            margin_rel: 0.05,
            margin_abs: 1e-6,
            decay_episodes: 500.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PolicySelector {
    config: SelectorConfig,
    has_initial: bool,
    decay_enabled: bool,
    p_learned: f64,
    raised: bool,
    ema_initial: Option<f64>,
    ema_learned: Option<f64>,
    history: Vec<PolicyTag>,
}

impl PolicySelector {
    pub fn new(config: SelectorConfig, has_initial: bool, decay_enabled: bool) -> Self {
        PolicySelector {
            config,
            has_initial,
            decay_enabled,
            p_learned: if has_initial { 0.0 } else { 1.0 },
            raised: false,
            ema_initial: None,
            ema_learned: None,
            history: Vec::new(),
        }
    }

    pub fn p_learned(&self) -> f64 {
        self.p_learned
    }

    pub fn ema(&self, tag: PolicyTag) -> Option<f64> {
        match tag {
            PolicyTag::Initial => self.ema_initial,
            PolicyTag::Learned => self.ema_learned,
        }
    }

    pub fn config(&self) -> &SelectorConfig {
        &self.config
    }

    /// Lower bound on `p_learned` currently in force.
    pub fn floor(&self) -> f64 {
        if self.raised {
            self.config.p_min
        } else {
            0.0
        }
    }

    pub fn episodes(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[PolicyTag] {
        &self.history
    }

    pub fn select(&self, rng: &mut dyn RngCore) -> PolicyTag {
        if !self.has_initial || self.p_learned >= 1.0 {
            return PolicyTag::Learned;
        }
        if self.p_learned > 0.0 && rng.random::<f64>() < self.p_learned {
            PolicyTag::Learned
        } else {
            PolicyTag::Initial
        }
    }

    /// Share of the initial function that the decay schedule still allows
    /// after `episode` episodes.
    pub fn initial_usage_schedule(&self, episode: usize) -> f64 {
        (-(episode as f64) / self.config.decay_episodes).exp()
    }

    pub fn margin(&self) -> f64 {
        self.config.margin_rel * self.ema_initial.unwrap_or(0.0).abs() + self.config.margin_abs
    }

    pub fn report_return(&mut self, tag: PolicyTag, episode_return: f64) {
        self.history.push(tag);
        if !self.has_initial {
            self.p_learned = 1.0;
            return;
        }
        let decay = self.config.ema_decay;
        let slot = match tag {
            PolicyTag::Initial => &mut self.ema_initial,
            PolicyTag::Learned => &mut self.ema_learned,
        };
        *slot = Some(match *slot {
            None => episode_return,
            Some(prev) => decay * prev + (1.0 - decay) * episode_return,
        });

        match (self.ema_initial, self.ema_learned) {
            // Nothing known about the learned policy yet: probe it at the
            // smallest share.
            (_, None) => {
                self.p_learned = self.p_learned.max(self.config.increase);
                self.raised = true;
            }
            (None, Some(_)) => self.grow(),
            (Some(initial), Some(learned)) => {
                if learned >= initial - self.margin() {
                    self.grow();
                } else {
                    self.p_learned = (self.p_learned * self.config.decrease).max(self.floor());
                }
            }
        }
        if self.decay_enabled {
            let forced = 1.0 - self.initial_usage_schedule(self.history.len());
            self.p_learned = self.p_learned.max(forced);
        }
    }

    fn grow(&mut self) {
        let p = self.p_learned + self.config.increase;
        // snap accumulated rounding so 20 increments of 0.05 reach exactly 1
        self.p_learned = if p > 1.0 - 1e-9 { 1.0 } else { p };
        self.raised = true;
    }

    /// Fraction of the last `window` episodes that ran the initial function;
    /// 0 for an empty history.
    pub fn usage_rate(&self, window: usize) -> f64 {
        let window = window.max(1);
        let recent = &self.history[self.history.len().saturating_sub(window)..];
        if recent.is_empty() {
            return 0.0;
        }
        recent.iter().filter(|&&t| t == PolicyTag::Initial).count() as f64 / recent.len() as f64
    }
}
