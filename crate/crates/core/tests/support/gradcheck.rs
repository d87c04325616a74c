//! Central-difference gradient oracle for tinynet networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smartchoices::tinynet::{Activation, Embedding, Mlp, Network, RowGrads};

pub const H: f64 = 1e-5;

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckResult {
    pub max_rel_error: f64,
    pub checked: usize,
    pub activations_seen: [bool; 3],
    pub with_embedding: bool,
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-6)
}

struct Case {
    net: Network,
    keys: Vec<Vec<usize>>,
    dense: Vec<Vec<f64>>,
    upstream: Vec<f64>,
}

impl Case {
    fn random(seed: u64) -> Case {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let acts = [Activation::Identity, Activation::Tanh, Activation::Relu];
        let depth = rng.random_range(1..=3);
        let use_embedding = seed % 2 == 1;
        let (rows, width, slots) = (6, 3, rng.random_range(1..=2));
        let dense_width = rng.random_range(1..=4);
        let mut widths = vec![dense_width + if use_embedding { slots * width } else { 0 }];
        for _ in 0..depth {
            widths.push(rng.random_range(1..=5));
        }
        // rotate so every activation type shows up across consecutive seeds
        let activations: Vec<Activation> = (0..depth).map(|i| acts[(seed as usize + i) % 3]).collect();
        let mlp = Mlp::new(&widths, &activations, &mut rng);
        let embedding = use_embedding.then(|| Embedding::new(rows, width, &mut rng));
        let net = Network::new(embedding, if use_embedding { slots } else { 0 }, mlp).unwrap();
        let batch = 3;
        let keys = (0..batch)
            .map(|_| if use_embedding { (0..slots).map(|_| rng.random_range(0..rows)).collect() } else { vec![] })
            .collect();
        let dense = (0..batch).map(|_| (0..dense_width).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let out = *widths.last().unwrap();
        let upstream = (0..batch * out).map(|_| rng.random_range(-1.0..1.0)).collect();
        Case { net, keys, dense, upstream }
    }

    fn input(&self, net: &Network, dense: &[Vec<f64>]) -> Vec<f64> {
        let mut x = Vec::new();
        for (k, d) in self.keys.iter().zip(dense) {
            net.input_row(k, d, &mut x).unwrap();
        }
        x
    }

    fn loss(&self, net: &Network, dense: &[Vec<f64>]) -> f64 {
        let y = net.mlp.forward(&self.input(net, dense), self.keys.len()).unwrap();
        y.iter().zip(&self.upstream).map(|(a, b)| a * b).sum()
    }
}

/// Compares analytic gradients of `sum(upstream * net(x))` against central
/// differences for every weight, bias, dense input and embedding entry.
pub fn check_network(seed: u64) -> CheckResult {
    let case = Case::random(seed);
    let net = &case.net;
    let batch = case.keys.len();
    let cache = net.mlp.forward_cached(case.input(net, &case.dense), batch).unwrap();
    let mut grads = vec![0.0; net.mlp.param_count()];
    let input_grad = net.mlp.backward(&cache, &case.upstream, &mut grads);
    let width = net.mlp.input_width();
    let mut rows = RowGrads::new();
    if let Some(e) = &net.embedding {
        for (b, k) in case.keys.iter().enumerate() {
            e.accumulate(k, &input_grad[b * width..(b + 1) * width], &mut rows);
        }
    }

    let mut result = CheckResult { with_embedding: net.embedding.is_some(), ..Default::default() };
    for layer in net.mlp.layers() {
        let idx = match layer.activation {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
        };
        result.activations_seen[idx] = true;
    }
    let mut record = |analytic: f64, numeric: f64| {
        result.max_rel_error = result.max_rel_error.max(rel_error(analytic, numeric));
        result.checked += 1;
    };

    for i in 0..net.mlp.param_count() {
        let mut plus = net.clone();
        plus.mlp.params_mut()[i] += H;
        let mut minus = net.clone();
        minus.mlp.params_mut()[i] -= H;
        let numeric = (case.loss(&plus, &case.dense) - case.loss(&minus, &case.dense)) / (2.0 * H);
        record(grads[i], numeric);
    }

    let embedded = width - net.dense_width();
    for b in 0..batch {
        for j in 0..case.dense[b].len() {
            let mut plus = case.dense.clone();
            plus[b][j] += H;
            let mut minus = case.dense.clone();
            minus[b][j] -= H;
            let numeric = (case.loss(net, &plus) - case.loss(net, &minus)) / (2.0 * H);
            record(input_grad[b * width + embedded + j], numeric);
        }
    }

    if let Some(e) = &net.embedding {
        for r in 0..e.rows() {
            for c in 0..e.width() {
                let nudge = |delta: f64| {
                    let mut n = net.clone();
                    n.embedding.as_mut().unwrap().table_mut()[r * e.width() + c] += delta;
                    case.loss(&n, &case.dense)
                };
                let numeric = (nudge(H) - nudge(-H)) / (2.0 * H);
                let analytic = rows.get(&r).map_or(0.0, |g| g[c]);
                record(analytic, numeric);
            }
        }
    }
    result
}
