use std::collections::BTreeMap;

use rand::Rng;

use super::Mat;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform in `[-a, a]`.
    Uniform(f64),
    /// Glorot uniform from fan-in (rows) and fan-out (cols).
    Glorot,
}

/// Named parameter matrices, each initialised from a seed derived from the
/// store seed and the parameter name.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    seed: u64,
    names: Vec<String>,
    values: Vec<Mat>,
    index: BTreeMap<String, usize>,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        Self { seed, names: Vec::new(), values: Vec::new(), index: BTreeMap::new() }
    }

    pub fn add(&mut self, name: &str, rows: usize, cols: usize, init: Init) -> usize {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        let mut rng = seeded(derive_seed(self.seed, name));
        let bound = match init {
            Init::Zeros => 0.0,
            Init::Uniform(a) => a,
            Init::Glorot => (6.0 / (rows + cols) as f64).sqrt(),
        };
        let value = if bound == 0.0 {
            Mat::zeros((rows, cols))
        } else {
            Mat::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
        };
        self.insert(name, value)
    }

    fn insert(&mut self, name: &str, value: Mat) -> usize {
        self.names.push(name.to_string());
        self.values.push(value);
        self.index.insert(name.to_string(), self.values.len() - 1);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn value(&self, id: usize) -> &Mat {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: usize) -> &mut Mat {
        &mut self.values[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Mat)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn parameter_count(&self) -> usize {
        self.values.iter().map(Mat::len).sum()
    }

    /// Replaces every value with the same-named, same-shaped array from
    /// `arrays`; all parameters must be present.
    pub fn load(&mut self, arrays: &BTreeMap<String, Mat>) -> Result<()> {
        for (name, value) in self.names.iter().zip(self.values.iter_mut()) {
            let a = arrays.get(name).ok_or_else(|| Error::data(format!("missing parameter {name}")))?;
            if a.dim() != value.dim() {
                return Err(Error::data(format!("parameter {name}: shape {:?}, expected {:?}", a.dim(), value.dim())));
            }
            value.assign(a);
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Mat>,
    v: Vec<Mat>,
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64) -> Self {
        let zeros: Vec<Mat> = store.values.iter().map(|v| Mat::zeros(v.dim())).collect();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros.clone(), v: zeros }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// Applies one update; parameters without a gradient are left alone.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Option<Mat>]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (id, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let (m, v) = (&mut self.m[id], &mut self.v[id]);
            ndarray::Zip::from(&mut store.values[id]).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Graph;

    #[test]
    fn init_is_seeded_by_name() {
        let mut a = ParamStore::new(1);
        let mut b = ParamStore::new(1);
        a.add("w", 3, 3, Init::Glorot);
        a.add("v", 3, 3, Init::Glorot);
        b.add("v", 3, 3, Init::Glorot);
        assert_eq!(a.value(1), b.value(0));
        assert_ne!(a.value(0), a.value(1));
    }

    #[test]
    fn adam_fits_a_linear_map() {
        let mut s = ParamStore::new(2);
        let w = s.add("w", 2, 1, Init::Zeros);
        let x = ndarray::array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]];
        let y = ndarray::array![[5.0], [1.0], [1.5]];
        let mut opt = Adam::new(&s, 0.05);
        let mut last = f64::MAX;
        for _ in 0..800 {
            let mut g = Graph::new();
            let (xv, yv, wv) = (g.constant(x.clone()), g.constant(y.clone()), g.param(&s, w));
            let p = g.matmul(xv, wv);
            let l = g.l1_mean(p, yv);
            last = g.scalar(l);
            let grads = g.backward(l, &s);
            opt.step(&mut s, &grads);
        }
        assert!(last < 0.05, "{last}");
    }

    #[test]
    fn load_checks_shapes() {
        let mut s = ParamStore::new(0);
        s.add("w", 2, 2, Init::Zeros);
        let mut m = BTreeMap::new();
        m.insert("w".to_string(), Mat::ones((2, 3)));
        assert!(s.load(&m).is_err());
        m.insert("w".to_string(), Mat::ones((2, 2)));
        s.load(&m).unwrap();
        assert_eq!(s.value(0), &Mat::ones((2, 2)));
    }
}
