use super::embedding::RowGrads;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments for one flat parameter buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len], step: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "adam state does not match parameters");
        assert_eq!(grads.len(), self.m.len(), "gradient does not match parameters");
        self.step += 1;
        let (c1, c2) = self.corrections();
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
        }
    }

    /// Lazy update over embedding rows: only rows present in `grads` have
    /// their moments and parameters touched. Bias correction uses the shared
    /// step counter.
    pub fn step_rows(&mut self, table: &mut [f64], width: usize, grads: &RowGrads, lr: f64) {
        assert_eq!(table.len(), self.m.len(), "adam state does not match table");
        self.step += 1;
        let (c1, c2) = self.corrections();
        for (&row, g) in grads {
            let range = row * width..(row + 1) * width;
            let ps = &mut table[range.clone()];
            let ms = &mut self.m[range.clone()];
            let vs = &mut self.v[range];
            for (((p, &g), m), v) in ps.iter_mut().zip(g).zip(ms).zip(vs) {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPSILON);
            }
        }
    }

    fn corrections(&self) -> (f64, f64) {
        let t = self.step as i32;
        (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t))
    }
}
