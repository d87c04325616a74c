use rand::Rng;

use crate::error::NetError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y = f(x)`.
    #[inline]
    pub fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" | "linear" => Some(Activation::Identity),
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// A fully connected layer. Parameters live in the owning [`Mlp`]'s flat
/// buffer: `out × in` row-major weights at `offset`, followed by `out` biases.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
    offset: usize,
}

impl Dense {
    pub fn param_count(&self) -> usize {
        self.input * self.output + self.output
    }

    pub fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.input * self.output]
    }

    pub fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        let start = self.offset + self.input * self.output;
        &params[start..start + self.output]
    }

    fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.input * self.output
    }

    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.input * self.output;
        start..start + self.output
    }

    fn forward(&self, params: &[f64], x: &[f64], batch: usize) -> Vec<f64> {
        let w = self.weights(params);
        let b = self.bias(params);
        let mut out = vec![0.0; batch * self.output];
        for (xs, ys) in x.chunks_exact(self.input).zip(out.chunks_exact_mut(self.output)) {
            for (o, y) in ys.iter_mut().enumerate() {
                let row = &w[o * self.input..(o + 1) * self.input];
                *y = self.activation.apply(b[o] + dot(row, xs));
            }
        }
        out
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..n {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Intermediate activations of a batched forward pass, consumed by
/// [`Mlp::backward`]. `activations[0]` is the input, `activations[i + 1]` the
/// output of layer `i`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub batch: usize,
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
}

/// Stack of dense layers with all parameters in one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    params: Vec<f64>,
}

impl Mlp {
    /// `widths` lists every layer boundary including input and output;
    /// `activations` has one entry per layer.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "an mlp needs input and output widths");
        assert_eq!(widths.len() - 1, activations.len(), "one activation per layer");
        let mut layers = Vec::with_capacity(activations.len());
        let mut offset = 0;
        for (pair, &activation) in widths.windows(2).zip(activations) {
            let layer = Dense { input: pair[0], output: pair[1], activation, offset };
            offset += layer.param_count();
            layers.push(layer);
        }
        let mut params = vec![0.0; offset];
        for layer in &layers {
            let bound = 1.0 / (layer.input.max(1) as f64).sqrt();
            for p in &mut params[layer.weight_range()] {
                *p = rng.random_range(-bound..bound);
            }
            for p in &mut params[layer.bias_range()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Mlp { layers, params }
    }

    /// Hidden layers share `hidden_activation`; the last layer uses `output_activation`.
    pub fn with_hidden<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let mut acts = vec![hidden_activation; hidden.len()];
        acts.push(output_activation);
        Mlp::new(&widths, &acts, rng)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers == other.layers
    }

    fn check_input(&self, input: &[f64], batch: usize) -> Result<(), NetError> {
        let expected = batch * self.input_width();
        if input.len() != expected {
            return Err(NetError::ShapeMismatch { expected, actual: input.len() });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64], batch: usize) -> Result<Vec<f64>, NetError> {
        self.check_input(input, batch)?;
        let mut x = self.layers[0].forward(&self.params, input, batch);
        for layer in &self.layers[1..] {
            x = layer.forward(&self.params, &x, batch);
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: Vec<f64>, batch: usize) -> Result<ForwardCache, NetError> {
        self.check_input(&input, batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input);
        for layer in &self.layers {
            let next = layer.forward(&self.params, activations.last().unwrap(), batch);
            activations.push(next);
        }
        Ok(ForwardCache { batch, activations })
    }

    /// Accumulates parameter gradients into `grads` (same layout as
    /// [`Mlp::params`]) and returns the gradient with respect to the input.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let batch = cache.batch;
        debug_assert_eq!(upstream.len(), batch * self.output_width());
        debug_assert_eq!(grads.len(), self.params.len());
        let mut delta = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.activations[i];
            let y = &cache.activations[i + 1];
            if layer.activation != Activation::Identity {
                for (d, &out) in delta.iter_mut().zip(y) {
                    *d *= layer.activation.derivative_at_output(out);
                }
            }
            let (n_in, n_out) = (layer.input, layer.output);
            {
                let (gw, gb) = grads[layer.offset..layer.offset + layer.param_count()].split_at_mut(n_in * n_out);
                for (ds, xs) in delta.chunks_exact(n_out).zip(x.chunks_exact(n_in)) {
                    for (o, &d) in ds.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        gb[o] += d;
                        for (g, &xv) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(xs) {
                            *g += d * xv;
                        }
                    }
                }
            }
            let w = layer.weights(&self.params);
            let mut dx = vec![0.0; batch * n_in];
            for (ds, dxs) in delta.chunks_exact(n_out).zip(dx.chunks_exact_mut(n_in)) {
                for (o, &d) in ds.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (g, &wv) in dxs.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *g += d * wv;
                    }
                }
            }
            delta = dx;
        }
        delta
    }
}
