//! Mini-batch training with early stopping, subject-grouped cross-validation
//! and evaluation.

pub mod cv;
pub mod metrics;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::model::{Batch, ModelParams, Variant, DEFAULT_DROPOUT, DEFAULT_K1, DEFAULT_K2, DEFAULT_LAMBDA, DEFAULT_S_UNITS};
use crate::numeric::adam::{adam_step, AdamConfig, AdamState};
use crate::numeric::rng::{derive_seed, derived_rng};

pub use cv::{
    cross_validate, evaluate_subjects, grouped_kfold, CvConfig, CvReport, CvSummary, Fold, FoldReport,
    subject_score, SubjectEvaluation, SubjectScore,
};
pub use metrics::{auc, paired_ttest_one_tailed, student_t_upper_tail, MeanStd, Metrics, TTest};

/// Stream identifiers for `derive_seed`.
pub(crate) mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const FOLDS: u64 = 4;
    pub const FOLD_RUN: u64 = 5;
}

/// Windows per forward pass when computing validation loss or predictions.
pub const EVAL_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    /// First-layer units; `None` resolves to 50 (32 for the single-layer
    /// variant).
    pub k1: Option<usize>,
    pub k2: usize,
    pub window: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::Dg,
            k1: None,
            k2: DEFAULT_K2,
            window: crate::data::DEFAULT_WINDOW,
            batch_size: 32,
            lambda: DEFAULT_LAMBDA,
            max_epochs: 100,
            patience: 10,
            learning_rate: AdamConfig::default().learning_rate,
            dropout: DEFAULT_DROPOUT,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn k1(&self) -> usize {
        self.k1.unwrap_or(if self.variant == Variant::S { DEFAULT_S_UNITS } else { DEFAULT_K1 })
    }

    /// Second-layer units actually used (0 for the single-layer variant).
    pub fn k2(&self) -> usize {
        if self.variant.has_second_layer() {
            self.k2
        } else {
            0
        }
    }

    /// Copy with every defaulted field made explicit.
    pub fn resolved(&self) -> Self {
        TrainConfig { k1: Some(self.k1()), k2: self.k2(), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if self.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.k1() == 0 || (self.variant.has_second_layer() && self.k2 == 0) {
            return bad(format!("{} needs positive layer sizes", self.variant));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be finite and non-negative", self.lambda));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }

    /// Fresh model for inputs with `rois` columns, seeded from this config.
    pub fn build_model(&self, rois: usize) -> Result<ModelParams> {
        self.validate()?;
        ModelParams::build(self.variant, rois, self.k1(), self.k2(), self.dropout, derive_seed(self.seed, &[streams::INIT]))
    }
}

/// Tracks the best validation loss and counts epochs without strict
/// improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best: None, stale: 0 }
    }

    /// Records one epoch; returns whether it is the new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        match self.best {
            Some((_, b)) if !(loss < b) => {
                self.stale += 1;
                false
            }
            _ => {
                self.best = Some((epoch, loss));
                self.stale = 0;
                true
            }
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    /// `(epoch, loss)` of the best epoch so far.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean total loss over the epoch's training batches (with dropout).
    pub train_loss: f64,
    /// Total loss on the validation windows in inference mode.
    pub val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainOutcome {
    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }
}

/// State handed to a training observer after every optimizer step.
pub struct StepInfo<'a> {
    pub epoch: usize,
    /// Step index within the epoch.
    pub step: usize,
    pub loss: f64,
    pub model: &'a ModelParams,
}

/// Inference-mode joint loss over `windows`, averaged per window.
pub fn dataset_loss(model: &ModelParams, windows: &[WindowSample], lambda: f64) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::Data("loss over an empty window set".into()));
    }
    let mut total = 0.0;
    for chunk in windows.chunks(EVAL_CHUNK) {
        let refs: Vec<&WindowSample> = chunk.iter().collect();
        let batch = Batch::from_windows(&refs)?;
        total += model.batch_loss(&batch, lambda, None)?.total * chunk.len() as f64;
    }
    Ok(total / windows.len() as f64)
}

pub fn train(model: ModelParams, train: &[WindowSample], val: &[WindowSample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_observed(model, train, val, cfg, |_| Ok(()))
}

/// [`train`] calling `observer` after every optimizer step. An observer
/// error aborts training.
pub fn train_observed(
    model: ModelParams,
    train: &[WindowSample],
    val: &[WindowSample],
    cfg: &TrainConfig,
    mut observer: impl FnMut(&StepInfo) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Data(format!(
            "training needs windows in both sets ({} training, {} validation)",
            train.len(),
            val.len()
        )));
    }
    if model.variant != cfg.variant {
        return Err(Error::Config(format!("model is {} but config asks for {}", model.variant, cfg.variant)));
    }
    for w in train.iter().chain(val) {
        if w.x.cols() != model.dims.rois {
            return Err(Error::Shape(format!(
                "window of subject {} has {} ROIs, model expects {}",
                w.subject_id,
                w.x.cols(),
                model.dims.rois
            )));
        }
        if model.variant.is_generative() && w.target.is_none() {
            return Err(Error::Data(format!("{} needs next-step targets (subject {})", model.variant, w.subject_id)));
        }
    }

    let mut model = model;
    let mut adam = AdamState::new(&model.params, AdamConfig::with_learning_rate(cfg.learning_rate))?;
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.sort_unstable();
        order.shuffle(&mut derived_rng(cfg.seed, &[streams::SHUFFLE, epoch as u64]));
        let mut dropout_rng = derived_rng(cfg.seed, &[streams::DROPOUT, epoch as u64]);
        let mut loss_sum = 0.0;
        for (step, idx) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&WindowSample> = idx.iter().map(|&i| &train[i]).collect();
            let batch = Batch::from_windows(&refs)?;
            let (loss, grads) = model.loss_and_grad(&batch, cfg.lambda, Some(&mut dropout_rng))?;
            adam_step(&mut model.params, &grads, &mut adam)?;
            loss_sum += loss.total * idx.len() as f64;
            observer(&StepInfo { epoch, step, loss: loss.total, model: &model })?;
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_loss = dataset_loss(&model, val, cfg.lambda)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        history.push(EpochRecord { epoch, train_loss, val_loss });
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        if stopper.observe(epoch, val_loss) {
            best = model.clone();
        }
        if stopper.should_stop() {
            break;
        }
    }
    let (best_epoch, best_val_loss) = stopper.best().expect("at least one epoch ran");
    Ok(TrainOutcome { params: best, history, best_epoch, best_val_loss })
}
