//! Binary search over sorted arrays with a choice placing each probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, Gamma, Normal, Pareto, Triangular};
use smartchoices::{
    ChoiceConfig, DefinitionError, InitialFunction, ObservationDef, OutputDef, SmartChoice, State, Value,
};

pub const VALUE_BOUND: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    Uniform,
    Triangular,
    Normal,
    Pareto,
    Power,
    Gamma,
    ChiSquare,
}

impl Distribution {
    pub const ALL: [Distribution; 7] = [
        Distribution::Uniform,
        Distribution::Triangular,
        Distribution::Normal,
        Distribution::Pareto,
        Distribution::Power,
        Distribution::Gamma,
        Distribution::ChiSquare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Triangular => "triangular",
            Distribution::Normal => "normal",
            Distribution::Pareto => "pareto",
            Distribution::Power => "power",
            Distribution::Gamma => "gamma",
            Distribution::ChiSquare => "chisquare",
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Distribution::Uniform => rng.random(),
            Distribution::Triangular => Triangular::new(0.0, 1.0, 0.3).unwrap().sample(rng),
            Distribution::Normal => Normal::new(0.0, 1.0).unwrap().sample(rng),
            // heavy tails clipped
            Distribution::Pareto => Pareto::<f64>::new(1.0, 1.5).unwrap().sample(rng).min(50.0),
            Distribution::Power => rng.random::<f64>().powf(1.0 / 0.3),
            Distribution::Gamma => Gamma::new(2.0, 2.0).unwrap().sample(rng),
            Distribution::ChiSquare => ChiSquared::new(3.0).unwrap().sample(rng),
        }
    }
}

/// A sorted array and a target drawn from it.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchInstance {
    pub array: Vec<f64>,
    pub target: f64,
    pub distribution: Distribution,
}

impl SearchInstance {
    /// Values are min-max scaled into `[-VALUE_BOUND, VALUE_BOUND]`.
    pub fn generate(n: usize, seed: u64) -> Self {
        assert!(n >= 2, "search arrays need at least two elements");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let distribution = Distribution::ALL[rng.random_range(0..Distribution::ALL.len())];
        let mut array: Vec<f64> = (0..n).map(|_| distribution.sample(&mut rng)).collect();
        array.sort_by(f64::total_cmp);
        let (lo, hi) = (array[0], array[n - 1]);
        let span = if hi > lo { hi - lo } else { 1.0 };
        for v in &mut array {
            *v = -VALUE_BOUND + 2.0 * VALUE_BOUND * (*v - lo) / span;
        }
        let target = array[rng.random_range(0..n)];
        SearchInstance { array, target, distribution }
    }

    pub fn len(&self) -> usize {
        self.array.len()
    }

    pub fn is_empty(&self) -> bool {
        self.array.is_empty()
    }
}

/// `int(q*l + (1-q)*r)` clamped into `[l, r]`.
pub fn simple_probe(q: f64, l: usize, r: usize) -> usize {
    let m = q * l as f64 + (1.0 - q) * r as f64;
    (m.max(0.0) as usize).clamp(l, r)
}

/// Mix of the vanilla split `(L+R)/2` (weight `q`) and the interpolation
/// split (weight `1-q`), truncated and clamped into `[l, r]`.
pub fn mix_probe(q: f64, l: usize, r: usize, a_l: f64, a_r: f64, x: f64) -> usize {
    let vanilla = (l + r) as f64 / 2.0;
    let m = if a_r > a_l {
        let interp = ((a_r - x) * l as f64 + (x - a_l) * r as f64) / (a_r - a_l);
        q * vanilla + (1.0 - q) * interp
    } else {
        vanilla
    };
    (m.max(0.0) as usize).clamp(l, r)
}

/// Reward for shrinking the half-open range `[l_t, r_t)` to `[l_next, r_next)`.
pub fn shaped_reward(l_t: usize, r_t: usize, l_next: usize, r_next: usize) -> f64 {
    let before = r_t.saturating_sub(l_t) as f64;
    let after = r_next.saturating_sub(l_next).max(1) as f64;
    before / after
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeRule {
    Simple,
    Mix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardRule {
    /// `-1` per probe that misses.
    StepPenalty,
    /// Search range reduction.
    Shaped,
}

/// Searches `inst` probing with `probe(l, r) -> m`; returns the number of
/// probes. `on_step(l, r, l_next, r_next, found)` sees inclusive bounds.
pub fn search_with(
    inst: &SearchInstance,
    mut probe: impl FnMut(usize, usize) -> usize,
    mut on_step: impl FnMut(usize, usize, usize, usize, bool),
) -> usize {
    let a = &inst.array;
    let x = inst.target;
    let (mut l, mut r) = (0usize, a.len() - 1);
    let mut steps = 0;
    loop {
        let m = probe(l, r).clamp(l, r);
        steps += 1;
        if a[m] == x {
            on_step(l, r, m, m, true);
            return steps;
        }
        let (nl, nr) = if a[m] < x { (m + 1, r) } else { (l, m - 1) };
        on_step(l, r, nl, nr, false);
        debug_assert!(nr + 1 - nl < r + 1 - l, "probe must shrink the range");
        l = nl;
        r = nr;
    }
}

pub fn vanilla_cost(inst: &SearchInstance) -> usize {
    search_with(inst, |l, r| simple_probe(0.5, l, r), |_, _, _, _, _| {})
}

pub fn interpolation_cost(inst: &SearchInstance) -> usize {
    let (a, x) = (&inst.array, inst.target);
    search_with(inst, |l, r| mix_probe(0.0, l, r, a[l], a[r], x), |_, _, _, _, _| {})
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchVariant {
    pub probe: ProbeRule,
    pub reward: RewardRule,
    pub initial_function: bool,
}

impl SearchVariant {
    pub const NAMES: [&'static str; 5] = ["simple", "simple-init", "shaped", "mix", "mix-shaped"];

    pub fn parse(name: &str) -> Option<Self> {
        let (probe, reward, initial_function) = match name {
            "simple" => (ProbeRule::Simple, RewardRule::StepPenalty, false),
            "simple-init" => (ProbeRule::Simple, RewardRule::StepPenalty, true),
            "shaped" => (ProbeRule::Simple, RewardRule::Shaped, true),
            "mix" => (ProbeRule::Mix, RewardRule::StepPenalty, true),
            "mix-shaped" => (ProbeRule::Mix, RewardRule::Shaped, true),
            _ => return None,
        };
        Some(SearchVariant { probe, reward, initial_function })
    }

    /// Output that reproduces vanilla binary search.
    pub fn vanilla_q(&self) -> f64 {
        match self.probe {
            ProbeRule::Simple => 0.5,
            ProbeRule::Mix => 1.0,
        }
    }
}

pub fn observations() -> Vec<ObservationDef> {
    vec![
        ObservationDef::scalar("target", -VALUE_BOUND, VALUE_BOUND),
        ObservationDef::scalar("low", -VALUE_BOUND, VALUE_BOUND),
        ObservationDef::scalar("high", -VALUE_BOUND, VALUE_BOUND),
    ]
}

pub fn build_choice(variant: SearchVariant, config: &ChoiceConfig) -> Result<SmartChoice, DefinitionError> {
    let q = variant.vanilla_q();
    let initial: Option<InitialFunction> =
        variant.initial_function.then(|| Box::new(move |_: &State| Value::Float(q)) as InitialFunction);
    SmartChoice::new(OutputDef::float(0.0, 1.0), observations(), initial, config)
}

/// One search episode driven by `choice`. Returns the probe count; the caller
/// closes the episode.
pub fn run_choice(inst: &SearchInstance, variant: SearchVariant, choice: &mut SmartChoice) -> usize {
    let (a, x) = (&inst.array, inst.target);
    let pending_probe = |l: usize, r: usize, choice: &mut SmartChoice| {
        choice.observe("target", x).expect("declared");
        choice.observe("low", a[l]).expect("declared");
        choice.observe("high", a[r]).expect("declared");
        let q = choice.predict().as_f64();
        match variant.probe {
            ProbeRule::Simple => simple_probe(q, l, r),
            ProbeRule::Mix => mix_probe(q, l, r, a[l], a[r], x),
        }
    };
    // the probe and feedback closures both need the choice
    let choice = std::cell::RefCell::new(choice);
    search_with(
        inst,
        |l, r| pending_probe(l, r, &mut choice.borrow_mut()),
        |l, r, nl, nr, found| match variant.reward {
            RewardRule::StepPenalty if !found => choice.borrow_mut().feedback(-1.0),
            RewardRule::StepPenalty => {}
            RewardRule::Shaped => {
                let reward = if found { shaped_reward(l, r + 1, 0, 0) } else { shaped_reward(l, r + 1, nl, nr + 1) };
                choice.borrow_mut().feedback(reward);
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_sorted_bounded_and_reproducible() {
        for seed in 0..30 {
            let inst = SearchInstance::generate(5000, seed);
            assert!(inst.array.windows(2).all(|w| w[0] <= w[1]));
            assert!(inst.array.iter().all(|v| v.abs() <= VALUE_BOUND + 1e-9));
            assert!(inst.array.contains(&inst.target));
            assert_eq!(inst, SearchInstance::generate(5000, seed));
        }
    }

    #[test]
    fn every_distribution_appears() {
        let mut seen: Vec<Distribution> = (0..200).map(|s| SearchInstance::generate(10, s).distribution).collect();
        seen.sort_by_key(|d| d.name());
        seen.dedup();
        assert_eq!(seen.len(), 7);
    }

    #[test]
    fn vanilla_bound() {
        let bound = (5001f64).log2().ceil() as usize;
        assert_eq!(bound, 13);
        for seed in 0..200 {
            assert!(vanilla_cost(&SearchInstance::generate(5000, seed)) <= bound);
        }
    }

    #[test]
    fn shaped_reward_examples() {
        assert!((shaped_reward(0, 100, 0, 49) - 2.0408163).abs() < 1e-6);
        assert_eq!(shaped_reward(0, 64, 0, 32), 2.0);
        assert_eq!(shaped_reward(3, 10, 3, 10), 1.0);
        assert_eq!(shaped_reward(3, 10, 5, 5), 7.0);
    }

    #[test]
    fn mix_examples() {
        assert_eq!(mix_probe(0.0, 0, 10, 0.0, 10.0, 5.0), 5);
        assert_eq!(mix_probe(1.0, 0, 9, 0.0, 10.0, 1.0), 4);
        assert_eq!(mix_probe(0.0, 0, 9, 0.0, 9.0, 7.0), 7);
        assert_eq!(mix_probe(0.3, 4, 4, 2.0, 2.0, 2.0), 4);
    }

    #[test]
    fn single_element_range_probes_it() {
        assert_eq!(simple_probe(1.0, 7, 7), 7);
        assert_eq!(simple_probe(0.0, 7, 7), 7);
    }

    #[test]
    fn constant_half_matches_vanilla_probes() {
        for seed in 0..50 {
            let inst = SearchInstance::generate(5000, seed);
            let mut a = vec![];
            search_with(&inst, |l, r| (l + r) / 2, |l, r, _, _, _| a.push((l, r)));
            let mut b = vec![];
            search_with(&inst, |l, r| simple_probe(0.5, l, r), |l, r, _, _, _| b.push((l, r)));
            assert_eq!(a, b);
            let mut c = vec![];
            let (arr, x) = (&inst.array, inst.target);
            search_with(&inst, |l, r| mix_probe(1.0, l, r, arr[l], arr[r], x), |l, r, _, _, _| c.push((l, r)));
            assert_eq!(a, c);
        }
    }

    #[test]
    fn interpolation_is_fast_on_uniform() {
        let uniform: Vec<_> =
            (0..400).map(|s| SearchInstance::generate(5000, s)).filter(|i| i.distribution == Distribution::Uniform).collect();
        let mean = uniform.iter().map(interpolation_cost).sum::<usize>() as f64 / uniform.len() as f64;
        assert!(mean < 6.0, "{mean}");
    }
}
