//! Small dense networks with hand-written gradients.

mod adam;
mod dense;
mod embedding;
mod snapshot;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};
pub use dense::{Activation, Dense, ForwardCache, Mlp};
pub use embedding::{Embedding, RowGrads};
pub use snapshot::{ParamSnapshot, Tensor};

use crate::error::NetError;

/// `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut [f64], online: &[f64], tau: f64) -> Result<(), NetError> {
    if target.len() != online.len() {
        return Err(NetError::ArchitectureMismatch(format!(
            "{} target parameters vs {} online",
            target.len(),
            online.len()
        )));
    }
    if tau == 1.0 {
        target.copy_from_slice(online);
        return Ok(());
    }
    for (t, &o) in target.iter_mut().zip(online) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

/// Scales all gradient buffers so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(dense: &mut [&mut [f64]], rows: &mut [&mut RowGrads], max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for g in dense.iter() {
        sq += g.iter().map(|v| v * v).sum::<f64>();
    }
    for r in rows.iter() {
        for row in r.values() {
            sq += row.iter().map(|v| v * v).sum::<f64>();
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in dense.iter_mut() {
            g.iter_mut().for_each(|v| *v *= scale);
        }
        for r in rows.iter_mut() {
            for row in r.values_mut() {
                row.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }
    norm
}

/// An [`Mlp`] optionally fronted by an embedding table. The mlp input is the
/// embedding rows of `key_slots` categorical inputs followed by the dense
/// features.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub embedding: Option<Embedding>,
    pub mlp: Mlp,
    key_slots: usize,
}

impl Network {
    pub fn new(embedding: Option<Embedding>, key_slots: usize, mlp: Mlp) -> Result<Self, NetError> {
        let embedded = embedding.as_ref().map_or(0, |e| e.width() * key_slots);
        if key_slots > 0 && embedding.is_none() {
            return Err(NetError::ArchitectureMismatch("categorical inputs need an embedding table".into()));
        }
        if embedded > mlp.input_width() {
            return Err(NetError::ArchitectureMismatch(format!(
                "embedding produces {embedded} inputs but the first layer takes {}",
                mlp.input_width()
            )));
        }
        Ok(Network { embedding, mlp, key_slots })
    }

    pub fn key_slots(&self) -> usize {
        self.key_slots
    }

    pub fn dense_width(&self) -> usize {
        self.mlp.input_width() - self.embedding.as_ref().map_or(0, |e| e.width() * self.key_slots)
    }

    /// Appends the mlp input row for one sample.
    pub fn input_row(&self, keys: &[usize], dense: &[f64], out: &mut Vec<f64>) -> Result<(), NetError> {
        if keys.len() != self.key_slots {
            return Err(NetError::ShapeMismatch { expected: self.key_slots, actual: keys.len() });
        }
        if dense.len() != self.dense_width() {
            return Err(NetError::ShapeMismatch { expected: self.dense_width(), actual: dense.len() });
        }
        if let Some(e) = &self.embedding {
            e.embed_into(keys, out)?;
        }
        out.extend_from_slice(dense);
        Ok(())
    }

    pub fn forward(&self, keys: &[usize], dense: &[f64]) -> Result<Vec<f64>, NetError> {
        let mut input = Vec::with_capacity(self.mlp.input_width());
        self.input_row(keys, dense, &mut input)?;
        self.mlp.forward(&input, 1)
    }

    pub fn same_architecture(&self, other: &Network) -> bool {
        self.key_slots == other.key_slots
            && self.mlp.same_architecture(&other.mlp)
            && match (&self.embedding, &other.embedding) {
                (None, None) => true,
                (Some(a), Some(b)) => a.rows() == b.rows() && a.width() == b.width(),
                _ => false,
            }
    }

    pub fn soft_update_from(&mut self, online: &Network, tau: f64) -> Result<(), NetError> {
        if !self.same_architecture(online) {
            return Err(NetError::ArchitectureMismatch("networks differ".into()));
        }
        soft_update(self.mlp.params_mut(), online.mlp.params(), tau)?;
        if let (Some(t), Some(o)) = (&mut self.embedding, &online.embedding) {
            soft_update(t.table_mut(), o.table(), tau)?;
        }
        Ok(())
    }

    pub fn to_params(&self, prefix: &str) -> ParamSnapshot {
        let mut tensors = Vec::new();
        if let Some(e) = &self.embedding {
            tensors.push(Tensor::new(format!("{prefix}embedding"), vec![e.rows(), e.width()], e.table().to_vec()));
        }
        let params = self.mlp.params();
        for (i, layer) in self.mlp.layers().iter().enumerate() {
            tensors.push(Tensor::new(
                format!("{prefix}layer{i}.weight"),
                vec![layer.output, layer.input],
                layer.weights(params).to_vec(),
            ));
            tensors.push(Tensor::new(format!("{prefix}layer{i}.bias"), vec![layer.output], layer.bias(params).to_vec()));
        }
        ParamSnapshot { tensors }
    }

    /// Overwrites parameters from a snapshot with matching names and shapes.
    pub fn load_params(&mut self, prefix: &str, snap: &ParamSnapshot) -> Result<(), NetError> {
        let fetch = |name: String, shape: Vec<usize>| -> Result<Vec<f64>, NetError> {
            let t = snap.get(&name).ok_or_else(|| NetError::Snapshot(format!("missing tensor {name}")))?;
            if t.shape != shape {
                return Err(NetError::Snapshot(format!("tensor {name} has shape {:?}, expected {shape:?}", t.shape)));
            }
            Ok(t.data.clone())
        };
        if let Some(e) = &mut self.embedding {
            let data = fetch(format!("{prefix}embedding"), vec![e.rows(), e.width()])?;
            e.table_mut().copy_from_slice(&data);
        }
        let layers = self.mlp.layers().to_vec();
        let mut flat = Vec::with_capacity(self.mlp.param_count());
        for (i, layer) in layers.iter().enumerate() {
            flat.extend(fetch(format!("{prefix}layer{i}.weight"), vec![layer.output, layer.input])?);
            flat.extend(fetch(format!("{prefix}layer{i}.bias"), vec![layer.output])?);
        }
        self.mlp.params_mut().copy_from_slice(&flat);
        Ok(())
    }
}
