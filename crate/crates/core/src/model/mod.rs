//! The four network variants, their joint loss and analytic gradients.
//!
//! All variants share a first LSTM layer whose input weights are constrained
//! non-negative; each of its units stands for one functional community.
//!
//! * `DG`: discriminative path on the hidden states of the first layer
//!   (second LSTM, per-step single-node dense layer, mean pooling, sigmoid)
//!   plus a generative path predicting the next time point from the final
//!   *cell* state through a non-negative dense layer.
//! * `H`: as `DG`, but the generative path reads the final *hidden* state.
//! * `D`: discriminative path only.
//! * `S`: a single LSTM feeding the per-step dense node directly.
//!
//! Dropout sits before the shared dense layer, before mean pooling and
//! before the generative dense layer, all with one rate.

mod io;

use serde::{Deserialize, Serialize};

use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::lstm::{lstm_backward, lstm_forward_batch, DropoutMask, LstmCache, LstmWeights};
use crate::numeric::init::{glorot_uniform, glorot_uniform_abs};
use crate::numeric::matrix::{gemm, sigmoid, Matrix, Trans};
use crate::numeric::params::ParamSet;
use crate::numeric::rng::{seeded_rng, SeededRng};

pub use io::{load_params, save_params, MAGIC};

/// Lower/upper clip applied to the predicted probability before the
/// cross-entropy.
pub const PROB_CLIP: f64 = 1e-7;

pub const DEFAULT_K1: usize = 50;
pub const DEFAULT_K2: usize = 20;
/// Hidden size used for the single-layer variant when none is given.
pub const DEFAULT_S_UNITS: usize = 32;
pub const DEFAULT_DROPOUT: f64 = 0.5;
pub const DEFAULT_LAMBDA: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Joint model, generation from the final cell state.
    Dg,
    /// Joint model, generation from the final hidden state.
    H,
    /// Two-layer discriminative model.
    D,
    /// Single-layer discriminative model.
    S,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Dg, Variant::H, Variant::D, Variant::S];

    pub fn has_second_layer(self) -> bool {
        !matches!(self, Variant::S)
    }

    pub fn is_generative(self) -> bool {
        matches!(self, Variant::Dg | Variant::H)
    }

    pub fn code(self) -> u8 {
        match self {
            Variant::Dg => 0,
            Variant::H => 1,
            Variant::D => 2,
            Variant::S => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dg => "dg",
            Variant::H => "h",
            Variant::D => "d",
            Variant::S => "s",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Dg => "LSTM-DG",
            Variant::H => "LSTM-H",
            Variant::D => "LSTM-D",
            Variant::S => "LSTM-S",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_start_matches("lstm-") {
            "dg" => Ok(Variant::Dg),
            "h" => Ok(Variant::H),
            "d" => Ok(Variant::D),
            "s" => Ok(Variant::S),
            other => Err(Error::Config(format!("unknown variant `{other}` (expected dg, h, d or s)"))),
        }
    }
}

/// Layer sizes. `k2` is zero for the single-layer variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub rois: usize,
    pub k1: usize,
    pub k2: usize,
}

pub mod names {
    pub const L1_W: &str = "lstm1.input";
    pub const L1_U: &str = "lstm1.recurrent";
    pub const L1_B: &str = "lstm1.bias";
    pub const L2_W: &str = "lstm2.input";
    pub const L2_U: &str = "lstm2.recurrent";
    pub const L2_B: &str = "lstm2.bias";
    pub const DENSE_W: &str = "dense.weight";
    pub const DENSE_B: &str = "dense.bias";
    pub const GEN_W: &str = "gen.weight";
    pub const GEN_B: &str = "gen.bias";
}

/// Weights of one model plus the metadata needed to run it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    pub dims: Dims,
    pub dropout: f64,
    pub params: ParamSet,
}

/// Per-sample loss terms averaged over a batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLossValue {
    pub total: f64,
    /// Mean squared error of the next-step prediction (0 for D/S).
    pub generative: f64,
    /// Binary cross-entropy of the class probability.
    pub discriminative: f64,
    pub lambda: f64,
}

/// Loss for one sample.
///
/// `total = L_G + lambda * L_D` for generative variants and `L_D` otherwise.
pub fn joint_loss(
    variant: Variant,
    y: f64,
    y_hat: f64,
    x_next: Option<&[f64]>,
    x_hat: Option<&[f64]>,
    lambda: f64,
) -> Result<JointLossValue> {
    let discriminative = cross_entropy(y, y_hat);
    if !variant.is_generative() {
        return Ok(JointLossValue { total: discriminative, generative: 0.0, discriminative, lambda });
    }
    let (x, xh) = match (x_next, x_hat) {
        (Some(x), Some(xh)) if x.len() == xh.len() && !x.is_empty() => (x, xh),
        _ => return Err(Error::Shape("generative loss needs target and prediction of equal length".into())),
    };
    let generative = x.iter().zip(xh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    Ok(JointLossValue { total: generative + lambda * discriminative, generative, discriminative, lambda })
}

/// Sigmoid of the time-mean of the per-step dense outputs.
pub fn pooled_probability(z: &[f64]) -> f64 {
    sigmoid(z.iter().sum::<f64>() / z.len() as f64)
}

fn cross_entropy(y: f64, y_hat: f64) -> f64 {
    let p = y_hat.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Windows stacked time-major for batched evaluation.
#[derive(Clone, Debug)]
pub struct Batch {
    /// `xs[t]` is `B x R`.
    pub xs: Vec<Matrix>,
    /// Next-step targets, `B x R`.
    pub targets: Option<Matrix>,
    pub labels: Vec<f64>,
}

impl Batch {
    pub fn from_windows(windows: &[&WindowSample]) -> Result<Self> {
        let first = windows.first().ok_or_else(|| Error::Data("empty batch".into()))?;
        let (steps, rois) = first.x.shape();
        let b = windows.len();
        let mut xs = vec![Matrix::zeros(b, rois); steps];
        for (i, w) in windows.iter().enumerate() {
            w.x.expect_shape((steps, rois), "window")?;
            for (t, xt) in xs.iter_mut().enumerate() {
                xt.row_mut(i).copy_from_slice(w.x.row(t));
            }
        }
        let targets = if windows.iter().all(|w| w.target.is_some()) {
            let mut m = Matrix::zeros(b, rois);
            for (i, w) in windows.iter().enumerate() {
                let tgt = w.target.as_ref().expect("checked");
                if tgt.len() != rois {
                    return Err(Error::Shape(format!("target of length {}, expected {rois}", tgt.len())));
                }
                m.row_mut(i).copy_from_slice(tgt);
            }
            Some(m)
        } else {
            None
        };
        Ok(Batch { xs, targets, labels: windows.iter().map(|w| f64::from(w.label)).collect() })
    }

    /// A single `T x R` sequence as a batch of one.
    pub fn single(x: &Matrix, target: Option<&[f64]>, label: f64) -> Result<Self> {
        let xs = (0..x.rows()).map(|t| x.slice_rows(t, t + 1)).collect();
        let targets = target.map(|t| Matrix::new(1, t.len(), t.to_vec())).transpose()?;
        Ok(Batch { xs, targets, labels: vec![label] })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Intermediate values of a batched forward pass.
struct ForwardPass {
    l1: LstmCache,
    l2: Option<LstmCache>,
    /// Input of the per-step dense node after dropout, one `B x Kd` per step.
    dense_in: Vec<Matrix>,
    dense_masks: Vec<DropoutMask>,
    pool_mask: DropoutMask,
    y_hat: Vec<f64>,
    gen_mask: DropoutMask,
    gen_in: Option<Matrix>,
    x_hat: Option<Matrix>,
}

/// Community influence on the discriminative path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Influence {
    /// One score per first-layer unit.
    pub scores: Vec<f64>,
    /// Unit indices by descending score (ties by index).
    pub ranking: Vec<usize>,
}

impl ModelParams {
    /// Freshly initialized model.
    ///
    /// Glorot-uniform input, recurrent and dense weights; zero biases except
    /// the forget-gate bias (1.0). Non-negative matrices start from the
    /// absolute value of their Glorot draw.
    pub fn build(variant: Variant, rois: usize, k1: usize, k2: usize, dropout: f64, seed: u64) -> Result<Self> {
        if rois == 0 || k1 == 0 {
            return Err(Error::Config(format!("need at least one ROI and one unit (R={rois}, K1={k1})")));
        }
        if variant.has_second_layer() && k2 == 0 {
            return Err(Error::Config(format!("{variant} needs a second layer with at least one unit")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config(format!("dropout rate {dropout} outside [0, 1)")));
        }
        let k2 = if variant.has_second_layer() { k2 } else { 0 };
        let mut rng = seeded_rng(seed);
        let mut p = ParamSet::new();

        let lstm = |p: &mut ParamSet, rng: &mut SeededRng, names: [&str; 3], n: usize, k: usize, nonneg: bool| {
            let w = if nonneg { glorot_uniform_abs(4 * k, n, n, k, rng) } else { glorot_uniform(4 * k, n, n, k, rng) };
            let u = glorot_uniform(4 * k, k, k, k, rng);
            let mut b = Matrix::zeros(4 * k, 1);
            for j in k..2 * k {
                b.set(j, 0, 1.0);
            }
            p.insert(names[0], w, nonneg)?;
            p.insert(names[1], u, false)?;
            p.insert(names[2], b, false)
        };
        lstm(&mut p, &mut rng, [names::L1_W, names::L1_U, names::L1_B], rois, k1, true)?;
        if variant.has_second_layer() {
            lstm(&mut p, &mut rng, [names::L2_W, names::L2_U, names::L2_B], k1, k2, false)?;
        }
        let kd = if variant.has_second_layer() { k2 } else { k1 };
        p.insert(names::DENSE_W, glorot_uniform(kd, 1, kd, 1, &mut rng), false)?;
        p.insert(names::DENSE_B, Matrix::zeros(1, 1), false)?;
        if variant.is_generative() {
            p.insert(names::GEN_W, glorot_uniform_abs(rois, k1, k1, rois, &mut rng), true)?;
            p.insert(names::GEN_B, Matrix::zeros(rois, 1), false)?;
        }
        Ok(Self { variant, dims: Dims { rois, k1, k2 }, dropout, params: p })
    }

    /// Closed-form scalar parameter count for a variant.
    pub fn expected_param_count(variant: Variant, rois: usize, k1: usize, k2: usize) -> usize {
        let mut n = 4 * k1 * (rois + k1 + 1);
        if variant.has_second_layer() {
            n += 4 * k2 * (k1 + k2 + 1) + k2 + 1;
        } else {
            n += k1 + 1;
        }
        if variant.is_generative() {
            n += rois * k1 + rois;
        }
        n
    }

    pub fn num_params(&self) -> usize {
        self.params.num_scalars()
    }

    /// Checks that the parameter set has exactly the tensors the variant
    /// and dimensions call for.
    pub fn validate(&self) -> Result<()> {
        let reference = Self::build(self.variant, self.dims.rois, self.dims.k1, self.dims.k2.max(1), 0.0, 0)?;
        reference.params.check_compatible(&self.params)?;
        for (a, b) in reference.params.iter().zip(self.params.iter()) {
            if a.nonneg != b.nonneg {
                return Err(Error::Format(format!("non-negativity flag of `{}` differs", a.name)));
            }
            if b.nonneg && b.value.min() < 0.0 {
                return Err(Error::Format(format!("non-negative parameter `{}` has negative entries", b.name)));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Format(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        self.params.ensure_finite()
    }

    fn lstm1(&self) -> Result<LstmWeights<'_>> {
        LstmWeights::new(
            self.params.expect(names::L1_W)?,
            self.params.expect(names::L1_U)?,
            self.params.expect(names::L1_B)?,
        )
    }

    fn lstm2(&self) -> Result<LstmWeights<'_>> {
        LstmWeights::new(
            self.params.expect(names::L2_W)?,
            self.params.expect(names::L2_U)?,
            self.params.expect(names::L2_B)?,
        )
    }

    /// The generative dense weights `W_d` (`R x K1`), if the variant has them.
    pub fn generative_weights(&self) -> Option<(&Matrix, &Matrix)> {
        Some((self.params.get(names::GEN_W)?, self.params.get(names::GEN_B)?))
    }

    /// Minimum over the constrained matrices (first-layer input weights and
    /// `W_d`).
    pub fn constrained_min(&self) -> f64 {
        self.params.nonneg_min()
    }

    fn forward(&self, batch: &Batch, mut rng: Option<&mut SeededRng>) -> Result<ForwardPass> {
        let steps = batch.xs.len();
        let b = batch.len();
        if steps == 0 || b == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if batch.xs[0].cols() != self.dims.rois {
            return Err(Error::Shape(format!(
                "model expects {} ROIs, input has {}",
                self.dims.rois,
                batch.xs[0].cols()
            )));
        }
        let l1 = lstm_forward_batch(&batch.xs, self.lstm1()?, None)?;
        let l2 = if self.variant.has_second_layer() {
            Some(lstm_forward_batch(l1.hidden(), self.lstm2()?, None)?)
        } else {
            None
        };
        let disc_h = l2.as_ref().unwrap_or(&l1).hidden();
        let kd = disc_h[0].cols();
        let w = self.params.expect(names::DENSE_W)?;
        let bias = self.params.expect(names::DENSE_B)?.get(0, 0);

        let mut dense_in = Vec::with_capacity(steps);
        let mut dense_masks = Vec::with_capacity(steps);
        let mut z = Matrix::zeros(b, steps);
        for (t, h) in disc_h.iter().enumerate() {
            let mask = DropoutMask::sample(b * kd, self.dropout, rng.as_deref_mut(), true)?;
            let mut d = h.clone();
            mask.apply(d.data_mut());
            for i in 0..b {
                z.set(i, t, crate::numeric::matrix::dot(d.row(i), w.data()) + bias);
            }
            dense_in.push(d);
            dense_masks.push(mask);
        }
        let pool_mask = DropoutMask::sample(b * steps, self.dropout, rng.as_deref_mut(), true)?;
        pool_mask.apply(z.data_mut());
        let y_hat: Vec<f64> = (0..b).map(|i| pooled_probability(z.row(i))).collect();

        let (gen_mask, gen_in, x_hat) = if self.variant.is_generative() {
            let state = match self.variant {
                Variant::Dg => l1.final_cell(),
                _ => l1.final_hidden(),
            };
            let k1 = state.cols();
            let mask = DropoutMask::sample(b * k1, self.dropout, rng.as_deref_mut(), true)?;
            let mut s = state.clone();
            mask.apply(s.data_mut());
            let (wd, bd) = self.generative_weights().ok_or_else(|| Error::Shape("missing generative layer".into()))?;
            let r = self.dims.rois;
            let mut xh = Matrix::zeros(b, r);
            for row in xh.data_mut().chunks_exact_mut(r) {
                row.copy_from_slice(bd.data());
            }
            gemm(b, k1, r, 1.0, s.data(), k1, Trans::No, wd.data(), k1, Trans::Yes, 1.0, xh.data_mut());
            xh.ensure_finite("generative prediction")?;
            (mask, Some(s), Some(xh))
        } else {
            (DropoutMask::identity(), None, None)
        };

        if let Some(v) = y_hat.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("class probability {v}")));
        }
        Ok(ForwardPass { l1, l2, dense_in, dense_masks, pool_mask, y_hat, gen_mask, gen_in, x_hat })
    }

    fn batch_loss_from(&self, batch: &Batch, fp: &ForwardPass, lambda: f64) -> Result<JointLossValue> {
        let b = batch.len();
        let mut acc = JointLossValue { total: 0.0, generative: 0.0, discriminative: 0.0, lambda };
        for i in 0..b {
            let (x, xh) = match (&batch.targets, &fp.x_hat) {
                (Some(t), Some(xh)) => (Some(t.row(i)), Some(xh.row(i))),
                (None, Some(_)) => {
                    return Err(Error::Data(format!("{} needs next-step targets for its loss", self.variant)))
                }
                _ => (None, None),
            };
            let l = joint_loss(self.variant, batch.labels[i], fp.y_hat[i], x, xh, lambda)?;
            acc.total += l.total;
            acc.generative += l.generative;
            acc.discriminative += l.discriminative;
        }
        let n = b as f64;
        acc.total /= n;
        acc.generative /= n;
        acc.discriminative /= n;
        Ok(acc)
    }

    /// Class probability for one `T x R` window.
    pub fn forward_discriminative(&self, x: &Matrix, training: bool, rng: &mut SeededRng) -> Result<f64> {
        let batch = Batch::single(x, None, 0.0)?;
        let fp = self.forward(&batch, if training { Some(rng) } else { None })?;
        Ok(fp.y_hat[0])
    }

    /// Next-step prediction for one `T x R` window.
    pub fn forward_generative(&self, x: &Matrix, training: bool, rng: &mut SeededRng) -> Result<Vec<f64>> {
        if !self.variant.is_generative() {
            return Err(Error::Usage(format!("{} has no generative path", self.variant)));
        }
        let batch = Batch::single(x, None, 0.0)?;
        let fp = self.forward(&batch, if training { Some(rng) } else { None })?;
        Ok(fp.x_hat.expect("generative variant").row(0).to_vec())
    }

    /// Inference-mode class probabilities for a batch.
    pub fn predict_batch(&self, batch: &Batch) -> Result<Vec<f64>> {
        Ok(self.forward(batch, None)?.y_hat)
    }

    /// Mean joint loss over a batch. `dropout_rng = None` runs in inference
    /// mode.
    pub fn batch_loss(&self, batch: &Batch, lambda: f64, dropout_rng: Option<&mut SeededRng>) -> Result<JointLossValue> {
        let fp = self.forward(batch, dropout_rng)?;
        self.batch_loss_from(batch, &fp, lambda)
    }

    /// Mean joint loss over a batch and its exact gradient with respect to
    /// every parameter of the variant. The first layer receives the sum of
    /// the discriminative and generative contributions.
    pub fn loss_and_grad(
        &self,
        batch: &Batch,
        lambda: f64,
        dropout_rng: Option<&mut SeededRng>,
    ) -> Result<(JointLossValue, ParamSet)> {
        let fp = self.forward(batch, dropout_rng)?;
        let loss = self.batch_loss_from(batch, &fp, lambda)?;
        let mut grads = self.params.zeros_like();
        let b = batch.len();
        let steps = batch.xs.len();
        let inv_b = 1.0 / b as f64;
        let disc_scale = if self.variant.is_generative() { lambda } else { 1.0 };

        // d loss / d pooled logit, per sample
        let d_pool: Vec<f64> = (0..b)
            .map(|i| {
                let p = fp.y_hat[i];
                if (PROB_CLIP..=1.0 - PROB_CLIP).contains(&p) {
                    disc_scale * inv_b * (p - batch.labels[i])
                } else {
                    0.0
                }
            })
            .collect();
        // through mean pooling and its dropout
        let mut dz = Matrix::zeros(b, steps);
        for i in 0..b {
            dz.row_mut(i).fill(d_pool[i] / steps as f64);
        }
        fp.pool_mask.apply(dz.data_mut());

        let w = self.params.expect(names::DENSE_W)?;
        let kd = w.rows();
        {
            let dw = grads.expect_mut(names::DENSE_W)?;
            for (t, d) in fp.dense_in.iter().enumerate() {
                for i in 0..b {
                    let g = dz.get(i, t);
                    for (acc, v) in dw.data_mut().iter_mut().zip(d.row(i)) {
                        *acc += g * v;
                    }
                }
            }
        }
        grads.expect_mut(names::DENSE_B)?.set(0, 0, dz.data().iter().sum());

        // gradient wrt the hidden states feeding the dense node
        let mut d_hidden = Vec::with_capacity(steps);
        for (t, mask) in fp.dense_masks.iter().enumerate() {
            let mut dh = Matrix::zeros(b, kd);
            for i in 0..b {
                let g = dz.get(i, t);
                for (o, wv) in dh.row_mut(i).iter_mut().zip(w.data()) {
                    *o = g * wv;
                }
            }
            mask.apply(dh.data_mut());
            d_hidden.push(dh);
        }

        let mut d_h1 = if let Some(l2) = &fp.l2 {
            let g2 = lstm_backward(l2, &d_hidden, None, self.lstm2()?)?;
            *grads.expect_mut(names::L2_W)? = g2.input;
            *grads.expect_mut(names::L2_U)? = g2.recurrent;
            *grads.expect_mut(names::L2_B)? = g2.bias;
            g2.x
        } else {
            d_hidden
        };

        let mut d_c1_final = None;
        if let (Some(gen_in), Some(x_hat), Some(targets)) = (&fp.gen_in, &fp.x_hat, &batch.targets) {
            let r = self.dims.rois;
            let k1 = self.dims.k1;
            let scale = 2.0 * inv_b / r as f64;
            let mut dxh = x_hat.clone();
            for (d, t) in dxh.data_mut().iter_mut().zip(targets.data()) {
                *d = scale * (*d - t);
            }
            let (wd, _) = self.generative_weights().expect("generative variant");
            // dW_d = dxh^T s, db_d = column sums, ds = dxh W_d
            gemm(r, b, k1, 1.0, dxh.data(), r, Trans::Yes, gen_in.data(), k1, Trans::No, 0.0, grads.expect_mut(names::GEN_W)?.data_mut());
            {
                let db = grads.expect_mut(names::GEN_B)?;
                for row in dxh.data().chunks_exact(r) {
                    for (acc, v) in db.data_mut().iter_mut().zip(row) {
                        *acc += v;
                    }
                }
            }
            let mut ds = Matrix::zeros(b, k1);
            gemm(b, r, k1, 1.0, dxh.data(), r, Trans::No, wd.data(), k1, Trans::No, 0.0, ds.data_mut());
            fp.gen_mask.apply(ds.data_mut());
            match self.variant {
                Variant::Dg => d_c1_final = Some(ds),
                _ => d_h1[steps - 1].axpy(1.0, &ds)?,
            }
        }

        let g1 = lstm_backward(&fp.l1, &d_h1, d_c1_final.as_ref(), self.lstm1()?)?;
        *grads.expect_mut(names::L1_W)? = g1.input;
        *grads.expect_mut(names::L1_U)? = g1.recurrent;
        *grads.expect_mut(names::L1_B)? = g1.bias;

        grads.ensure_finite()?;
        Ok((loss, grads))
    }

    /// Influence of each first-layer unit on the discriminative path: the
    /// sum of absolute second-layer input weights reading that unit, over
    /// all gates and second-layer units.
    pub fn community_influence(&self) -> Result<Influence> {
        if !self.variant.has_second_layer() {
            return Err(Error::Usage(format!("{} has no second LSTM layer", self.variant)));
        }
        let w2 = self.params.expect(names::L2_W)?;
        let mut scores = vec![0.0; w2.cols()];
        for r in 0..w2.rows() {
            for (s, v) in scores.iter_mut().zip(w2.row(r)) {
                *s += v.abs();
            }
        }
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(Influence { scores, ranking })
    }
}
