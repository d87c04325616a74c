use std::collections::BTreeMap;

use rand::Rng;

use crate::error::NetError;

/// Sparse gradient for an embedding table: only rows that were looked up.
/// Ordered so that reductions over it are deterministic.
pub type RowGrads = BTreeMap<usize, Vec<f64>>;

/// Lookup table mapping categorical key ids to dense vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    rows: usize,
    width: usize,
    table: Vec<f64>,
}

impl Embedding {
    pub fn new<R: Rng + ?Sized>(rows: usize, width: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (width as f64).sqrt();
        let table = (0..rows * width).map(|_| rng.random_range(-bound..bound)).collect();
        Embedding { rows, width, table }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut [f64] {
        &mut self.table
    }

    pub fn lookup(&self, key: usize) -> Result<&[f64], NetError> {
        if key >= self.rows {
            return Err(NetError::KeyOutOfRange { key, rows: self.rows });
        }
        Ok(&self.table[key * self.width..(key + 1) * self.width])
    }

    /// Appends the rows for `keys` to `out`.
    pub fn embed_into(&self, keys: &[usize], out: &mut Vec<f64>) -> Result<(), NetError> {
        for &k in keys {
            out.extend_from_slice(self.lookup(k)?);
        }
        Ok(())
    }

    /// Scatters the leading `keys.len() * width` columns of one sample's input
    /// gradient into the touched rows.
    pub fn accumulate(&self, keys: &[usize], input_grad: &[f64], grads: &mut RowGrads) {
        for (slot, &k) in keys.iter().enumerate() {
            let g = &input_grad[slot * self.width..(slot + 1) * self.width];
            let row = grads.entry(k).or_insert_with(|| vec![0.0; self.width]);
            for (r, &v) in row.iter_mut().zip(g) {
                *r += v;
            }
        }
    }
}
