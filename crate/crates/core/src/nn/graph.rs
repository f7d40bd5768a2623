use ndarray::{s, Array2, Axis, Zip};

use super::ParamStore;

pub type Mat = Array2<f64>;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Probabilities entering the binary cross-entropy are clamped to this
/// distance from 0 and 1.
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    /// Constant per-column `x * scale + shift`.
    Affine(Var, Vec<f64>),
    Concat(Vec<Var>),
    Slice(Var, usize),
    /// Output row `i` is input row `idx[i]`.
    Gather(Var, Vec<usize>),
    /// Output row `g` is the mean of input rows `ranges[g]`.
    Pool(Var, Vec<(usize, usize)>),
    /// Output row `t`, block `j` is input row `map[t * k + j]` or zero.
    Unfold(Var, Vec<Option<usize>>, usize),
    L1(Var, Var),
    Kl(Var, Var),
    Bce(Var, Vec<f64>),
}

struct Node {
    value: Mat,
    op: Op,
}

/// Define-by-run reverse-mode tape over dense `f64` matrices. Batches are
/// stacked along rows; per-utterance structure is passed as segment
/// lengths.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: Vec<(usize, Var)>,
}

fn segment_starts(segs: &[usize]) -> Vec<usize> {
    let mut starts = Vec::with_capacity(segs.len());
    let mut acc = 0;
    for &l in segs {
        starts.push(acc);
        acc += l;
    }
    starts
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    /// Constant input; no gradient is reported for it.
    pub fn constant(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Trainable parameter `id` of `store`; its gradient is reported by
    /// [`Graph::backward`].
    pub fn param(&mut self, store: &ParamStore, id: usize) -> Var {
        if let Some(&(_, v)) = self.params.iter().find(|(p, _)| *p == id) {
            return v;
        }
        let v = self.push(store.value(id).clone(), Op::Leaf);
        self.params.push((id, v));
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// Adds a `1 x n` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let v = self.value(a) + self.value(row);
        self.push(v, Op::AddRow(a, row))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let v = self.value(a) * k;
        self.push(v, Op::Scale(a, k))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::exp);
        self.push(v, Op::Exp(a))
    }

    /// Constant per-column affine map `x * scale[c] + shift[c]`.
    pub fn affine_cols(&mut self, a: Var, scale: &[f64], shift: &[f64]) -> Var {
        let mut v = self.value(a).clone();
        for mut row in v.rows_mut() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = *x * scale[c] + shift[c];
            }
        }
        self.push(v, Op::Affine(a, scale.to_vec()))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let v = ndarray::concatenate(Axis(1), &views).expect("concat of mismatched row counts");
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let v = self.value(a).slice(s![.., start..end]).to_owned();
        self.push(v, Op::Slice(a, start))
    }

    /// Rows of `a` picked by index (embedding lookup, broadcasting,
    /// upsampling).
    pub fn gather_rows(&mut self, a: Var, idx: Vec<usize>) -> Var {
        let v = self.value(a).select(Axis(0), &idx);
        self.push(v, Op::Gather(a, idx))
    }

    /// Repeats row `s` of `a` `segs[s]` times.
    pub fn expand_segments(&mut self, a: Var, segs: &[usize]) -> Var {
        let idx = segs.iter().enumerate().flat_map(|(s, &l)| std::iter::repeat_n(s, l)).collect();
        self.gather_rows(a, idx)
    }

    /// Means over row ranges.
    pub fn pool_rows(&mut self, a: Var, ranges: Vec<(usize, usize)>) -> Var {
        let x = self.value(a);
        let mut v = Mat::zeros((ranges.len(), x.ncols()));
        for (g, &(lo, hi)) in ranges.iter().enumerate() {
            let mean = x.slice(s![lo..hi, ..]).mean_axis(Axis(0)).expect("empty pooling range");
            v.row_mut(g).assign(&mean);
        }
        self.push(v, Op::Pool(a, ranges))
    }

    /// One mean row per segment.
    pub fn mean_pool_segments(&mut self, a: Var, segs: &[usize]) -> Var {
        let ranges = segment_starts(segs).into_iter().zip(segs).map(|(st, &l)| (st, st + l)).collect();
        self.pool_rows(a, ranges)
    }

    /// Non-overlapping means of `factor` rows inside each segment; a final
    /// partial window averages the rows it has. Returns the pooled segment
    /// lengths `ceil(len / factor)` alongside.
    pub fn avg_pool_time(&mut self, a: Var, segs: &[usize], factor: usize) -> (Var, Vec<usize>) {
        let mut ranges = Vec::new();
        let mut out = Vec::with_capacity(segs.len());
        for (st, &l) in segment_starts(segs).into_iter().zip(segs) {
            let n = l.div_ceil(factor);
            out.push(n);
            ranges.extend((0..n).map(|i| (st + i * factor, st + ((i + 1) * factor).min(l))));
        }
        (self.pool_rows(a, ranges), out)
    }

    /// Inverse of [`Graph::avg_pool_time`] by repetition: output segment `s`
    /// has `segs[s]` rows, row `t` copying pooled row `min(t / factor, last)`.
    pub fn upsample_repeat(&mut self, a: Var, pooled: &[usize], segs: &[usize], factor: usize) -> Var {
        let mut idx = Vec::new();
        for ((st, &n), &l) in segment_starts(pooled).into_iter().zip(pooled).zip(segs) {
            idx.extend((0..l).map(|t| st + (t / factor).min(n - 1)));
        }
        self.gather_rows(a, idx)
    }

    /// Stacks the `k` rows centred on each row (zero outside its segment)
    /// side by side: `rows x (k * cols)`, the input of a same-padded
    /// temporal convolution.
    pub fn unfold_segments(&mut self, a: Var, segs: &[usize], k: usize) -> Var {
        let half = (k / 2) as isize;
        let mut map = Vec::new();
        for (st, &l) in segment_starts(segs).into_iter().zip(segs) {
            for t in 0..l as isize {
                for j in 0..k as isize {
                    let src = t + j - half;
                    map.push((src >= 0 && src < l as isize).then(|| st + src as usize));
                }
            }
        }
        let x = self.value(a);
        let d = x.ncols();
        let mut v = Mat::zeros((x.nrows(), k * d));
        for (i, src) in map.iter().enumerate() {
            if let Some(r) = src {
                let (t, j) = (i / k, i % k);
                v.slice_mut(s![t, j * d..(j + 1) * d]).assign(&x.row(*r));
            }
        }
        self.push(v, Op::Unfold(a, map, k))
    }

    /// Mean absolute difference, `1 x 1`.
    pub fn l1_mean(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.dim(), y.dim(), "l1 of mismatched shapes");
        let v = Zip::from(x).and(y).fold(0.0, |acc, p, q| acc + (p - q).abs()) / x.len() as f64;
        self.push(Mat::from_elem((1, 1), v), Op::L1(a, b))
    }

    /// Mean over elements of `0.5 (mu^2 + exp(logvar) - 1 - logvar)`, `1 x 1`.
    pub fn kl(&mut self, mu: Var, logvar: Var) -> Var {
        let (m, lv) = (self.value(mu), self.value(logvar));
        let v = Zip::from(m).and(lv).fold(0.0, |acc, m, l| acc + 0.5 * (m * m + l.exp() - 1.0 - l)) / m.len() as f64;
        self.push(Mat::from_elem((1, 1), v), Op::Kl(mu, logvar))
    }

    /// Mean binary cross-entropy of probabilities `p` (a column) against
    /// targets in `{0, 1}`, `1 x 1`.
    pub fn bce(&mut self, p: Var, targets: Vec<f64>) -> Var {
        let x = self.value(p);
        assert_eq!(x.len(), targets.len());
        let v = x
            .iter()
            .zip(&targets)
            .map(|(&p, &y)| bce_value(p, y))
            .sum::<f64>()
            / targets.len() as f64;
        self.push(Mat::from_elem((1, 1), v), Op::Bce(p, targets))
    }

    /// Reverse pass from the `1 x 1` node `out`. Returns one gradient per
    /// parameter of `store` touched by the graph (`None` for the rest).
    pub fn backward(&self, out: Var, store: &ParamStore) -> Vec<Option<Mat>> {
        let mut grads: Vec<Option<Mat>> = (0..=out.0).map(|_| None).collect();
        grads[out.0] = Some(Mat::ones(self.nodes[out.0].value.dim()));
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) {
                grads[i] = Some(g);
                continue;
            }
            let mut acc = |v: Var, d: Mat| match &mut grads[v.0] {
                Some(e) => *e += &d,
                slot => *slot = Some(d),
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    acc(*a, g.dot(&self.value(*b).t()));
                    acc(*b, self.value(*a).t().dot(&g));
                }
                Op::AddRow(a, r) => {
                    acc(*r, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(*a, g);
                }
                Op::Add(a, b) => {
                    acc(*b, g.clone());
                    acc(*a, g);
                }
                Op::Sub(a, b) => {
                    acc(*b, -&g);
                    acc(*a, g);
                }
                Op::Mul(a, b) => {
                    acc(*a, &g * self.value(*b));
                    acc(*b, &g * self.value(*a));
                }
                Op::Scale(a, k) => acc(*a, g * *k),
                Op::Relu(a) => acc(*a, Zip::from(&g).and(self.value(*a)).map_collect(|g, x| if *x > 0.0 { *g } else { 0.0 })),
                Op::Tanh(a) => acc(*a, Zip::from(&g).and(&node.value).map_collect(|g, y| g * (1.0 - y * y))),
                Op::Sigmoid(a) => acc(*a, Zip::from(&g).and(&node.value).map_collect(|g, y| g * y * (1.0 - y))),
                Op::Exp(a) => acc(*a, &g * &node.value),
                Op::Affine(a, scale) => {
                    let mut d = g;
                    for mut row in d.rows_mut() {
                        row.iter_mut().zip(scale).for_each(|(x, s)| *x *= s);
                    }
                    acc(*a, d);
                }
                Op::Concat(parts) => {
                    let mut c = 0;
                    for &p in parts {
                        let w = self.value(p).ncols();
                        acc(p, g.slice(s![.., c..c + w]).to_owned());
                        c += w;
                    }
                }
                Op::Slice(a, start) => {
                    let mut d = Mat::zeros(self.value(*a).dim());
                    d.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
                    acc(*a, d);
                }
                Op::Gather(a, idx) => {
                    let mut d = Mat::zeros(self.value(*a).dim());
                    for (o, &r) in idx.iter().enumerate() {
                        let mut row = d.row_mut(r);
                        row += &g.row(o);
                    }
                    acc(*a, d);
                }
                Op::Pool(a, ranges) => {
                    let mut d = Mat::zeros(self.value(*a).dim());
                    for (o, &(lo, hi)) in ranges.iter().enumerate() {
                        let share = &g.row(o) / (hi - lo) as f64;
                        for r in lo..hi {
                            let mut row = d.row_mut(r);
                            row += &share;
                        }
                    }
                    acc(*a, d);
                }
                Op::Unfold(a, map, k) => {
                    let x = self.value(*a);
                    let dcols = x.ncols();
                    let mut d = Mat::zeros(x.dim());
                    for (m, src) in map.iter().enumerate() {
                        if let Some(r) = src {
                            let (t, j) = (m / k, m % k);
                            let mut row = d.row_mut(*r);
                            row += &g.slice(s![t, j * dcols..(j + 1) * dcols]);
                        }
                    }
                    acc(*a, d);
                }
                Op::L1(a, b) => {
                    let (x, y) = (self.value(*a), self.value(*b));
                    let k = g[[0, 0]] / x.len() as f64;
                    let d = Zip::from(x).and(y).map_collect(|p, q| k * (p - q).signum() * ((p != q) as u8 as f64));
                    acc(*b, -&d);
                    acc(*a, d);
                }
                Op::Kl(mu, lv) => {
                    let n = self.value(*mu).len() as f64;
                    let k = g[[0, 0]] / n;
                    acc(*mu, self.value(*mu) * k);
                    acc(*lv, self.value(*lv).mapv(|l| k * 0.5 * (l.exp() - 1.0)));
                }
                Op::Bce(p, targets) => {
                    let x = self.value(*p);
                    let k = g[[0, 0]] / targets.len() as f64;
                    let mut d = Mat::zeros(x.dim());
                    for ((slot, &p), &y) in d.iter_mut().zip(x.iter()).zip(targets) {
                        if p > BCE_CLAMP && p < 1.0 - BCE_CLAMP {
                            *slot = k * (-y / p + (1.0 - y) / (1.0 - p));
                        }
                    }
                    acc(*p, d);
                }
            }
        }
        let mut out_grads: Vec<Option<Mat>> = (0..store.len()).map(|_| None).collect();
        for &(id, v) in &self.params {
            if v.0 <= out.0 {
                out_grads[id] = grads[v.0].take();
            }
        }
        out_grads
    }
}

pub(crate) fn bce_value(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}
