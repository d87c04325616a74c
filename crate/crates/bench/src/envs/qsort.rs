//! QuickSort with a choice picking how many samples the pivot median uses.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smartchoices::{
    assemble_state, ChoiceConfig, DefinitionError, InitialFunction, Observation, ObservationDef, OutputDef, SmartChoice,
    State, Value,
};

/// Number of categorical actions; action `k` means `1 + 2k` samples.
pub const ACTIONS: usize = 8;

pub const FEEDBACK_EPSILON: f64 = 1e-6;

/// Weighted operation counter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub w_read: f64,
    pub w_write: f64,
    pub w_compare: f64,
    pub reads: u64,
    pub writes: u64,
    pub compares: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { w_read: 1.0, w_write: 1.0, w_compare: 1.0, reads: 0, writes: 0, compares: 0 }
    }
}

impl CostModel {
    /// Zeroed counters with the given weights.
    pub fn weighted(w_read: f64, w_write: f64, w_compare: f64) -> Self {
        CostModel { w_read, w_write, w_compare, ..Default::default() }
    }

    /// Same weights, zeroed counters.
    pub fn fresh(&self) -> Self {
        CostModel::weighted(self.w_read, self.w_write, self.w_compare)
    }

    pub fn cost(&self) -> f64 {
        self.w_read * self.reads as f64 + self.w_write * self.writes as f64 + self.w_compare * self.compares as f64
    }

    fn read(&mut self, a: &[u32], i: usize) -> u32 {
        self.reads += 1;
        a[i]
    }

    fn less(&mut self, x: u32, y: u32) -> bool {
        self.compares += 1;
        x < y
    }

    /// Swap of two values the caller has just read: only the writes count.
    fn exchange(&mut self, a: &mut [u32], i: usize, j: usize) {
        self.writes += 2;
        a.swap(i, j);
    }

    fn swap(&mut self, a: &mut [u32], i: usize, j: usize) {
        if i != j {
            self.reads += 2;
            self.writes += 2;
            a.swap(i, j);
        }
    }
}

/// A shuffled permutation of `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortInstance {
    pub values: Vec<u32>,
}

impl SortInstance {
    /// Size drawn log-uniformly from `[min_size, max_size]`.
    pub fn generate(min_size: usize, max_size: usize, seed: u64) -> Self {
        assert!(2 <= min_size && min_size <= max_size);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = ((min_size as f64).ln(), (max_size as f64).ln());
        let n = (rng.random_range(lo..=hi).exp().round() as usize).clamp(min_size, max_size);
        Self::shuffled(n, &mut rng)
    }

    pub fn shuffled(n: usize, rng: &mut impl Rng) -> Self {
        let mut values: Vec<u32> = (0..n as u32).collect();
        values.shuffle(rng);
        SortInstance { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Pivot cost plus excess recursion cost relative to a perfect split,
/// normalized by `n log2 n`.
pub fn delta_cost(c_piv: f64, n: usize, a: usize, b: usize) -> f64 {
    let n = n as f64;
    let rec = xlog2x(a as f64) + xlog2x(b as f64) - 2.0 * xlog2x(n / 2.0);
    (c_piv + rec) / xlog2x(n)
}

pub fn feedback_for(delta: f64) -> f64 {
    1.0 / delta.max(FEEDBACK_EPSILON)
}

pub fn samples_for_action(k: usize, range: usize) -> usize {
    (1 + 2 * k).min(range)
}

/// Median of `max(1, floor(log2 n) - 1)` samples.
pub fn adaptive_samples(n: usize) -> usize {
    ((n as f64).log2().floor() as usize).saturating_sub(1).max(1)
}

/// One partition step on `a[l..r)` using the median of `samples` random
/// elements. Returns the pivot's final index.
pub fn partition_step(a: &mut [u32], l: usize, r: usize, samples: usize, rng: &mut impl Rng, cost: &mut CostModel) -> usize {
    let n = r - l;
    let s = samples.clamp(1, n);
    let mut picked: Vec<(u32, usize)> =
        index::sample(rng, n, s).into_iter().map(|i| (cost.read(a, l + i), l + i)).collect();
    // insertion sort so comparisons are counted
    for i in 1..picked.len() {
        let mut j = i;
        while j > 0 && cost.less(picked[j].0, picked[j - 1].0) {
            picked.swap(j, j - 1);
            j -= 1;
        }
    }
    let (pivot, pos) = picked[(s - 1) / 2];
    // two-pointer partition with the pivot parked at `l`; its cost does not
    // depend on which side of the median the pivot falls
    cost.swap(a, pos, l);
    let (mut i, mut j) = (l + 1, r - 1);
    loop {
        while i <= j {
            let v = cost.read(a, i);
            if !cost.less(v, pivot) {
                break;
            }
            i += 1;
        }
        while i <= j {
            let v = cost.read(a, j);
            if !cost.less(pivot, v) {
                break;
            }
            j -= 1;
        }
        if i >= j {
            break;
        }
        cost.exchange(a, i, j);
        i += 1;
        j -= 1;
    }
    let m = i - 1;
    cost.swap(a, l, m);
    m
}

/// Sorts `a` in place. `choose(l, r)` returns the sample count for the
/// range; `after(l, r, m, c_piv)` sees every partition step.
pub fn quicksort_with(
    a: &mut [u32],
    rng: &mut impl Rng,
    cost: &mut CostModel,
    mut choose: impl FnMut(usize, usize) -> usize,
    mut after: impl FnMut(usize, usize, usize, f64),
) {
    let mut stack = vec![(0usize, a.len())];
    while let Some((l, r)) = stack.pop() {
        if r <= l + 1 {
            continue;
        }
        let samples = choose(l, r);
        let before = cost.cost();
        let m = partition_step(a, l, r, samples, rng, cost);
        after(l, r, m, cost.cost() - before);
        // left range first, as recursion would
        stack.push((m + 1, r));
        stack.push((l, m));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Vanilla,
    Random3,
    Random9,
    Adaptive,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::Vanilla, Baseline::Random3, Baseline::Random9, Baseline::Adaptive];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Vanilla => "vanilla",
            Baseline::Random3 => "random3",
            Baseline::Random9 => "random9",
            Baseline::Adaptive => "adaptive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn samples(self, n: usize) -> usize {
        match self {
            Baseline::Vanilla => 1,
            Baseline::Random3 => 3,
            Baseline::Random9 => 9,
            Baseline::Adaptive => adaptive_samples(n),
        }
        .min(n)
    }
}

/// Sorts a copy of `inst` with a fixed heuristic; returns the sorted values
/// and the cost.
pub fn run_baseline(inst: &SortInstance, baseline: Baseline, weights: &CostModel, seed: u64) -> (Vec<u32>, f64) {
    let mut a = inst.values.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cost = weights.fresh();
    quicksort_with(&mut a, &mut rng, &mut cost, |l, r| baseline.samples(r - l), |_, _, _, _| {});
    (a, cost.cost())
}

pub fn observations(max_size: usize) -> Vec<ObservationDef> {
    vec![ObservationDef::scalar("left", 0.0, max_size as f64), ObservationDef::scalar("right", 0.0, max_size as f64)]
}

/// `initial_function` installs the single-sample (vanilla) pivot rule.
pub fn build_choice(max_size: usize, initial_function: bool, config: &ChoiceConfig) -> Result<SmartChoice, DefinitionError> {
    let initial: Option<InitialFunction> =
        initial_function.then(|| Box::new(|_: &State| Value::Category(0)) as InitialFunction);
    SmartChoice::new(OutputDef::category(ACTIONS), observations(max_size), initial, config)
}

/// Sorts a copy of `inst` with the choice picking sample counts. Returns the
/// sorted values and the cost; the caller closes the episode.
pub fn run_choice(inst: &SortInstance, choice: &mut SmartChoice, weights: &CostModel, seed: u64) -> (Vec<u32>, f64) {
    let mut a = inst.values.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cost = weights.fresh();
    let choice = std::cell::RefCell::new(choice);
    quicksort_with(
        &mut a,
        &mut rng,
        &mut cost,
        |l, r| {
            let mut c = choice.borrow_mut();
            c.observe("left", l as f64).expect("declared");
            c.observe("right", r as f64).expect("declared");
            samples_for_action(c.predict().as_index(), r - l)
        },
        |l, r, m, c_piv| {
            let delta = delta_cost(c_piv, r - l, m - l, r - m);
            choice.borrow_mut().feedback(feedback_for(delta));
        },
    );
    (a, cost.cost())
}

/// Sample count the learned policy picks greedily for the range `[l, r)`.
pub fn greedy_samples(choice: &SmartChoice, l: usize, r: usize) -> usize {
    let pending = [Some(Observation::Float(l as f64)), Some(Observation::Float(r as f64))];
    let (state, _) = assemble_state(choice.observation_defs(), &pending);
    samples_for_action(choice.learned_value(&state).as_index(), r - l)
}
