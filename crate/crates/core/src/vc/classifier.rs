use super::data::{MelNorm, TrainingExample};
use crate::audio::MelSpectrogram;
use crate::corpus::Style;
use crate::nn::{Graph, Init, Mat, ParamStore, Var};

const KERNEL: usize = 5;
const CHANNELS: usize = 32;

/// Mel to probability of Lombard style: two temporal convolutions, global
/// average pooling over time and a sigmoid unit. The output layer starts at
/// zero, so an untrained classifier answers 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleClassifier {
    pub params: ParamStore,
    pub norm: MelNorm,
    pub frozen: bool,
}

impl StyleClassifier {
    pub fn new(norm: MelNorm, seed: u64) -> Self {
        let bins = norm.bins();
        let mut p = ParamStore::new(seed);
        p.add("clf.conv1.w", KERNEL * bins, CHANNELS, Init::Glorot);
        p.add("clf.conv1.b", 1, CHANNELS, Init::Zeros);
        p.add("clf.conv2.w", KERNEL * CHANNELS, CHANNELS, Init::Glorot);
        p.add("clf.conv2.b", 1, CHANNELS, Init::Zeros);
        p.add("clf.out.w", CHANNELS, 1, Init::Zeros);
        p.add("clf.out.b", 1, 1, Init::Zeros);
        Self { params: p, norm, frozen: false }
    }

    fn w(&self, g: &mut Graph, name: &str, trainable: bool) -> Var {
        let id = self.params.id(name).unwrap_or_else(|| panic!("classifier has no parameter {name}"));
        if trainable && !self.frozen {
            g.param(&self.params, id)
        } else {
            g.constant(self.params.value(id).clone())
        }
    }

    fn layer(&self, g: &mut Graph, x: Var, name: &str, trainable: bool) -> Var {
        let w = self.w(g, &format!("{name}.w"), trainable);
        let b = self.w(g, &format!("{name}.b"), trainable);
        let y = g.matmul(x, w);
        g.add_row(y, b)
    }

    /// One probability per segment of `x`, which must already be in this
    /// classifier's normalisation. Weights enter as constants unless
    /// `trainable` is set and the classifier is not frozen.
    pub(crate) fn graph_prob(&self, g: &mut Graph, x: Var, segs: &[usize], trainable: bool) -> Var {
        let u = g.unfold_segments(x, segs, KERNEL);
        let h = self.layer(g, u, "clf.conv1", trainable);
        let h = g.relu(h);
        let u = g.unfold_segments(h, segs, KERNEL);
        let h = self.layer(g, u, "clf.conv2", trainable);
        let h = g.relu(h);
        let pooled = g.mean_pool_segments(h, segs);
        let logit = self.layer(g, pooled, "clf.out", trainable);
        g.sigmoid(logit)
    }

    /// Per-column map taking another normalisation's values into this one.
    pub(crate) fn bridge(&self, from: &MelNorm) -> (Vec<f64>, Vec<f64>) {
        let scale = from.std.iter().zip(&self.norm.std).map(|(a, b)| a / b).collect();
        let shift = (0..self.norm.bins()).map(|i| (from.mean[i] - self.norm.mean[i]) / self.norm.std[i]).collect();
        (scale, shift)
    }

    /// Probability of Lombard style for a frames x bins log-mel matrix.
    pub fn probability(&self, mel: &Mat) -> f64 {
        let mut g = Graph::new();
        let x = g.constant(self.norm.normalize(mel));
        let p = self.graph_prob(&mut g, x, &[mel.nrows()], false);
        g.scalar(p)
    }

    /// Fraction of examples whose thresholded probability matches the style.
    pub fn accuracy<'a>(&self, examples: impl IntoIterator<Item = &'a TrainingExample>) -> f64 {
        let (mut hit, mut n) = (0usize, 0usize);
        for ex in examples {
            let lombard = self.probability(&ex.mel) >= 0.5;
            hit += (lombard == (ex.style == Style::Lombard)) as usize;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            hit as f64 / n as f64
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }
}

/// Probability that `mel` is Lombard speech.
pub fn classify_style(mel: &MelSpectrogram, clf: &StyleClassifier) -> f64 {
    clf.probability(&super::data::rows_to_mat(mel.values()))
}
