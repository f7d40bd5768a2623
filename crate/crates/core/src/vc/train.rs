use rand::seq::SliceRandom;
use rand::Rng;

use super::classifier::StyleClassifier;
use super::data::{Batch, TrainingExample};
use super::embedding::SpeakerTable;
use super::losses::{LossBundle, BETA_KL, LAMBDA_S};
use super::model::VcModel;
use crate::nn::{Adam, Graph, Mat, Var};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierTrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub max_frames: usize,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self { steps: 500, batch_size: 16, lr: 1e-3, max_frames: 400, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VcTrainConfig {
    /// Steps on reconstruction and KL only.
    pub vc_steps: usize,
    /// Further steps, adding the style loss when `style_loss` is set.
    pub joint_steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta_kl: f64,
    pub lambda_s: f64,
    pub style_loss: bool,
    pub max_frames: usize,
    pub seed: u64,
}

impl Default for VcTrainConfig {
    fn default() -> Self {
        Self {
            vc_steps: 1500,
            joint_steps: 500,
            batch_size: 16,
            lr: 1e-4,
            beta_kl: BETA_KL,
            lambda_s: LAMBDA_S,
            style_loss: false,
            max_frames: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub losses: LossBundle,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    /// Mean of `f` over the `window` records ending at 1-based step `end`.
    pub fn moving_average(&self, end: usize, window: usize, f: impl Fn(&LossBundle) -> f64) -> Option<f64> {
        if end == 0 || end > self.records.len() || window == 0 {
            return None;
        }
        let lo = end.saturating_sub(window);
        let slice = &self.records[lo..end];
        Some(slice.iter().map(|r| f(&r.losses)).sum::<f64>() / slice.len() as f64)
    }
}

/// Epoch-shuffled sampler of cropped windows.
struct Sampler<'a> {
    data: &'a [TrainingExample],
    order: Vec<usize>,
    pos: usize,
    rng: SeededRng,
    max_frames: usize,
}

impl<'a> Sampler<'a> {
    fn new(data: &'a [TrainingExample], seed: u64, max_frames: usize) -> Self {
        let mut s = Self { data, order: (0..data.len()).collect(), pos: 0, rng: seeded(seed), max_frames };
        s.order.shuffle(&mut s.rng);
        s
    }

    fn next_batch(&mut self, size: usize) -> Vec<(&'a TrainingExample, usize, usize)> {
        let mut out = Vec::with_capacity(size);
        for _ in 0..size.min(self.data.len()) {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            let ex = &self.data[self.order[self.pos]];
            self.pos += 1;
            let len = ex.frames().min(self.max_frames);
            let start = if ex.frames() > len { self.rng.random_range(0..=ex.frames() - len) } else { 0 };
            out.push((ex, start, len));
        }
        out
    }
}

/// Graph of one reconstruction pass with its assembled losses.
pub struct Forward {
    pub graph: Graph,
    pub total: Var,
    pub pred: Var,
    pub l_rec: Var,
    pub l_kl: Var,
    pub l_s: Option<Var>,
    pub losses: LossBundle,
}

impl Forward {
    /// Normalised predicted mel rows.
    pub fn pred(&self) -> &Mat {
        self.graph.value(self.pred)
    }
}

/// Reconstruction pathway with losses. When `clf` is given its frozen
/// prediction on the reconstructed mel adds the style loss against each
/// utterance's own style.
pub fn forward_reconstruct(
    model: &VcModel,
    batch: &Batch,
    clf: Option<&StyleClassifier>,
    eps: Option<&Mat>,
    beta_kl: f64,
    lambda_s: f64,
) -> Forward {
    let mut g = Graph::new();
    let r = model.graph_reconstruct(&mut g, batch, eps);
    let l_rec = g.l1_mean(r.pred, r.target);
    let l_kl = g.kl(r.mu, r.logvar);
    let weighted_kl = g.scale(l_kl, beta_kl);
    let mut total = g.add(l_rec, weighted_kl);
    let mut l_s = None;
    if let Some(clf) = clf {
        let (scale, shift) = clf.bridge(&model.norm);
        let x = g.affine_cols(r.pred, &scale, &shift);
        let p = clf.graph_prob(&mut g, x, &batch.segs, false);
        let ls = g.bce(p, batch.styles.clone());
        let weighted = g.scale(ls, lambda_s);
        total = g.add(total, weighted);
        l_s = Some(ls);
    }
    let losses = LossBundle::new(g.scalar(l_rec), g.scalar(l_kl), l_s.map(|v| g.scalar(v)), beta_kl, lambda_s);
    Forward { graph: g, total, pred: r.pred, l_rec, l_kl, l_s, losses }
}

/// Stage II: reconstruction training of `model`; the classifier, when used,
/// stays frozen.
pub fn train_vc(
    model: &mut VcModel,
    data: &[TrainingExample],
    speakers: &SpeakerTable,
    clf: Option<&StyleClassifier>,
    cfg: &VcTrainConfig,
) -> Result<TrainLog> {
    if data.is_empty() {
        return Err(Error::invalid("no training utterances"));
    }
    if cfg.style_loss && clf.is_none() {
        return Err(Error::invalid("style loss requested without a style classifier"));
    }
    for ex in data {
        ex.validate()?;
    }
    let mut sampler = Sampler::new(data, derive_seed(cfg.seed, "vc-batches"), cfg.max_frames);
    let mut eps_rng = seeded(derive_seed(cfg.seed, "vc-eps"));
    let mut opt = Adam::new(&model.params, cfg.lr);
    let mut log = TrainLog::default();
    let total_steps = cfg.vc_steps + cfg.joint_steps;
    for step in 1..=total_steps {
        let items = sampler.next_batch(cfg.batch_size);
        let batch = Batch::assemble(&items, &model.norm, model.mode, speakers)?;
        let eps = model.sample_eps(&batch, &mut eps_rng);
        let use_clf = if cfg.style_loss && step > cfg.vc_steps { clf } else { None };
        let f = forward_reconstruct(model, &batch, use_clf, Some(&eps), cfg.beta_kl, cfg.lambda_s);
        if !f.losses.total.is_finite() {
            return Err(Error::Degenerate(format!("non-finite loss at step {step}")));
        }
        let grads = f.graph.backward(f.total, &model.params);
        opt.step(&mut model.params, &grads);
        if step % 50 == 0 || step == total_steps {
            log::info!(
                "vc step {step}/{total_steps}: l_rec {:.4} l_kl {:.4} l_s {}",
                f.losses.l_rec,
                f.losses.l_kl,
                f.losses.l_s.map_or("-".to_string(), |v| format!("{v:.4}"))
            );
        }
        log.records.push(StepRecord { step, losses: f.losses });
    }
    Ok(log)
}

/// Stage I: trains the Lombard/neutral classifier with binary cross-entropy.
pub fn train_style_classifier(
    clf: &mut StyleClassifier,
    data: &[TrainingExample],
    cfg: &ClassifierTrainConfig,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("no classifier training utterances"));
    }
    if clf.frozen {
        return Err(Error::invalid("classifier is frozen"));
    }
    let mut sampler = Sampler::new(data, derive_seed(cfg.seed, "clf-batches"), cfg.max_frames);
    let mut opt = Adam::new(&clf.params, cfg.lr);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let items = sampler.next_batch(cfg.batch_size);
        let segs: Vec<usize> = items.iter().map(|i| i.2).collect();
        let rows: usize = segs.iter().sum();
        let mut mel = Mat::zeros((rows, clf.norm.bins()));
        let mut r = 0;
        for &(ex, start, len) in &items {
            let w = ex.mel.slice(ndarray::s![start..start + len, ..]).to_owned();
            mel.slice_mut(ndarray::s![r..r + len, ..]).assign(&clf.norm.normalize(&w));
            r += len;
        }
        let targets = items.iter().map(|i| super::losses::style_target(i.0.style)).collect();
        let mut g = Graph::new();
        let x = g.constant(mel);
        let p = clf.graph_prob(&mut g, x, &segs, true);
        let loss = g.bce(p, targets);
        let grads = g.backward(loss, &clf.params);
        opt.step(&mut clf.params, &grads);
        losses.push(g.scalar(loss));
        if step % 50 == 0 || step == cfg.steps {
            log::info!("classifier step {step}/{}: bce {:.4}", cfg.steps, g.scalar(loss));
        }
    }
    Ok(losses)
}
