//! LSTM cell, unrolled layer, backpropagation through time and dropout.
//!
//! Gate weights are stored stacked: rows `0..K` hold the input gate, then
//! forget, output, and candidate (`c~`) blocks. For a layer with `K` units
//! and `n` inputs the input weights are `4K x n`, the recurrent weights
//! `4K x K` and the bias `4K x 1`.
//!
//! Update per step, with the logistic sigmoid as gate nonlinearity:
//!
//! ```text
//! i, f, o = sigmoid(W x_t + U h_{t-1} + b)     (per gate block)
//! c~      = tanh(W_c x_t + U_c h_{t-1} + b_c)
//! c_t     = i * c~ + f * c_{t-1}
//! h_t     = o * tanh(c_t)
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::matrix::{gemm, sigmoid, tanh, Matrix, Trans};
use crate::numeric::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Input,
    Forget,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];

    #[inline]
    pub fn block(self) -> usize {
        match self {
            Gate::Input => 0,
            Gate::Forget => 1,
            Gate::Output => 2,
            Gate::Candidate => 3,
        }
    }
}

/// Borrowed view of one layer's weights.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights<'a> {
    pub input: &'a Matrix,
    pub recurrent: &'a Matrix,
    pub bias: &'a Matrix,
}

impl<'a> LstmWeights<'a> {
    pub fn new(input: &'a Matrix, recurrent: &'a Matrix, bias: &'a Matrix) -> Result<Self> {
        let units = recurrent.cols();
        if input.rows() != 4 * units {
            return Err(Error::Shape(format!(
                "LSTM input weights have {} rows, expected 4*{units}",
                input.rows()
            )));
        }
        recurrent.expect_shape((4 * units, units), "LSTM recurrent weights")?;
        bias.expect_shape((4 * units, 1), "LSTM bias")?;
        Ok(Self { input, recurrent, bias })
    }

    #[inline]
    pub fn units(&self) -> usize {
        self.recurrent.cols()
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.input.cols()
    }

    /// Copy of one gate's `K x n` input-weight block.
    pub fn gate_input(&self, gate: Gate) -> Matrix {
        let k = self.units();
        self.input.slice_rows(gate.block() * k, (gate.block() + 1) * k)
    }
}

/// Owned weights for a standalone layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer {
    pub input: Matrix,
    pub recurrent: Matrix,
    pub bias: Matrix,
    pub nonneg_inputs: bool,
}

impl LstmLayer {
    pub fn zeros(inputs: usize, units: usize) -> Self {
        Self {
            input: Matrix::zeros(4 * units, inputs),
            recurrent: Matrix::zeros(4 * units, units),
            bias: Matrix::zeros(4 * units, 1),
            nonneg_inputs: false,
        }
    }

    pub fn view(&self) -> LstmWeights<'_> {
        LstmWeights::new(&self.input, &self.recurrent, &self.bias).expect("layer constructed with consistent shapes")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(units: usize) -> Self {
        Self { h: vec![0.0; units], c: vec![0.0; units] }
    }
}

/// Everything the backward pass needs from a batched forward pass.
///
/// Time-indexed vectors hold one `B x K` (or `B x n` for inputs) matrix per
/// step. `h` and `c` carry `T + 1` entries, index 0 being the initial state.
#[derive(Clone, Debug)]
pub struct LstmCache {
    pub x: Vec<Matrix>,
    pub h: Vec<Matrix>,
    pub c: Vec<Matrix>,
    /// Post-activation gates per step, `B x 4K`: sigmoid for i/f/o, tanh for c~.
    pub gates: Vec<Matrix>,
    pub tanh_c: Vec<Matrix>,
}

impl LstmCache {
    pub fn steps(&self) -> usize {
        self.x.len()
    }

    pub fn batch(&self) -> usize {
        self.h[0].rows()
    }

    /// Hidden states `h_1..h_T`.
    pub fn hidden(&self) -> &[Matrix] {
        &self.h[1..]
    }

    pub fn final_hidden(&self) -> &Matrix {
        self.h.last().expect("at least the initial state")
    }

    pub fn final_cell(&self) -> &Matrix {
        self.c.last().expect("at least the initial state")
    }
}

/// Runs the layer over a batch. `xs[t]` is the `B x n` input at step `t`;
/// `initial` defaults to zero state.
pub fn lstm_forward_batch(xs: &[Matrix], w: LstmWeights<'_>, initial: Option<(&Matrix, &Matrix)>) -> Result<LstmCache> {
    let steps = xs.len();
    if steps == 0 {
        return Err(Error::Shape("LSTM needs at least one time step".into()));
    }
    let batch = xs[0].rows();
    let k = w.units();
    let n = w.inputs();
    for (t, x) in xs.iter().enumerate() {
        if x.shape() != (batch, n) {
            return Err(Error::Shape(format!(
                "LSTM input at step {t} is {}x{}, expected {batch}x{n}",
                x.rows(),
                x.cols()
            )));
        }
    }
    let (h0, c0) = match initial {
        Some((h, c)) => {
            h.expect_shape((batch, k), "initial hidden state")?;
            c.expect_shape((batch, k), "initial cell state")?;
            (h.clone(), c.clone())
        }
        None => (Matrix::zeros(batch, k), Matrix::zeros(batch, k)),
    };

    let mut cache = LstmCache {
        x: xs.to_vec(),
        h: Vec::with_capacity(steps + 1),
        c: Vec::with_capacity(steps + 1),
        gates: Vec::with_capacity(steps),
        tanh_c: Vec::with_capacity(steps),
    };
    cache.h.push(h0);
    cache.c.push(c0);

    let bias = w.bias.data();
    for x in xs {
        let h_prev = cache.h.last().expect("nonempty");
        let c_prev = cache.c.last().expect("nonempty");
        let mut z = Matrix::zeros(batch, 4 * k);
        {
            let zd = z.data_mut();
            for row in zd.chunks_exact_mut(4 * k) {
                row.copy_from_slice(bias);
            }
            gemm(batch, n, 4 * k, 1.0, x.data(), n, Trans::No, w.input.data(), n, Trans::Yes, 1.0, zd);
            gemm(batch, k, 4 * k, 1.0, h_prev.data(), k, Trans::No, w.recurrent.data(), k, Trans::Yes, 1.0, zd);
        }
        let mut c = Matrix::zeros(batch, k);
        let mut h = Matrix::zeros(batch, k);
        let mut tc = Matrix::zeros(batch, k);
        for b in 0..batch {
            let zr = z.row_mut(b);
            for v in &mut zr[..3 * k] {
                *v = sigmoid(*v);
            }
            for v in &mut zr[3 * k..] {
                *v = tanh(*v);
            }
            let zr = z.row(b);
            let cp = c_prev.row(b);
            let cr = c.row_mut(b);
            for j in 0..k {
                cr[j] = zr[j] * zr[3 * k + j] + zr[k + j] * cp[j];
            }
            let cr = c.row(b);
            let tr = tc.row_mut(b);
            for j in 0..k {
                tr[j] = tanh(cr[j]);
            }
            let tr = tc.row(b);
            let hr = h.row_mut(b);
            for j in 0..k {
                hr[j] = zr[2 * k + j] * tr[j];
            }
        }
        c.ensure_finite("LSTM cell state")?;
        cache.gates.push(z);
        cache.tanh_c.push(tc);
        cache.c.push(c);
        cache.h.push(h);
    }
    Ok(cache)
}

/// One step for a single sample.
pub fn lstm_cell_step(x: &[f64], prev: &LstmState, w: LstmWeights<'_>) -> Result<LstmState> {
    let k = w.units();
    if x.len() != w.inputs() || prev.h.len() != k || prev.c.len() != k {
        return Err(Error::Shape(format!(
            "cell step: input {} (expected {}), state {}/{} (expected {k})",
            x.len(),
            w.inputs(),
            prev.h.len(),
            prev.c.len()
        )));
    }
    let xm = Matrix::new(1, x.len(), x.to_vec())?;
    let h0 = Matrix::new(1, k, prev.h.clone())?;
    let c0 = Matrix::new(1, k, prev.c.clone())?;
    let cache = lstm_forward_batch(std::slice::from_ref(&xm), w, Some((&h0, &c0)))?;
    let state = LstmState { h: cache.final_hidden().row(0).to_vec(), c: cache.final_cell().row(0).to_vec() };
    if state.h.iter().chain(&state.c).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LSTM cell output".into()));
    }
    Ok(state)
}

/// Hidden and cell trajectories (`T x K` each) for one `T x n` sequence.
#[derive(Clone, Debug)]
pub struct LstmTrajectory {
    pub h: Matrix,
    pub c: Matrix,
    pub cache: LstmCache,
}

pub fn lstm_forward(x: &Matrix, w: LstmWeights<'_>, initial: Option<&LstmState>) -> Result<LstmTrajectory> {
    if x.rows() == 0 {
        return Err(Error::Shape("LSTM needs at least one time step".into()));
    }
    let xs: Vec<Matrix> = (0..x.rows()).map(|t| x.slice_rows(t, t + 1)).collect();
    let init = match initial {
        Some(s) => Some((Matrix::new(1, s.h.len(), s.h.clone())?, Matrix::new(1, s.c.len(), s.c.clone())?)),
        None => None,
    };
    let cache = lstm_forward_batch(&xs, w, init.as_ref().map(|(h, c)| (h, c)))?;
    let k = w.units();
    let stack = |seq: &[Matrix]| {
        let data = seq.iter().flat_map(|m| m.data().iter().copied()).collect();
        Matrix::new(seq.len(), k, data)
    };
    Ok(LstmTrajectory { h: stack(&cache.h[1..])?, c: stack(&cache.c[1..])?, cache })
}

/// Gradients of a layer's weights and inputs.
#[derive(Clone, Debug)]
pub struct LstmGrads {
    pub input: Matrix,
    pub recurrent: Matrix,
    pub bias: Matrix,
    /// `dL/dx_t`, one `B x n` matrix per step.
    pub x: Vec<Matrix>,
}

/// Backpropagation through the whole unrolled sequence.
///
/// `grad_h[t]` is `dL/dh_{t+1}` from outside the layer (`B x K`; pass zeros
/// where the loss does not read `h`). `grad_c_final` is `dL/dc_T` from
/// outside the layer.
pub fn lstm_backward(
    cache: &LstmCache,
    grad_h: &[Matrix],
    grad_c_final: Option<&Matrix>,
    w: LstmWeights<'_>,
) -> Result<LstmGrads> {
    let steps = cache.steps();
    let batch = cache.batch();
    let k = w.units();
    let n = w.inputs();
    if grad_h.len() != steps {
        return Err(Error::Shape(format!("grad_h has {} steps, cache has {steps}", grad_h.len())));
    }
    if cache.h[0].cols() != k || cache.x[0].cols() != n {
        return Err(Error::Shape("cache was produced by a layer of different shape".into()));
    }
    for g in grad_h {
        g.expect_shape((batch, k), "grad_h")?;
    }

    let mut d_input = Matrix::zeros(4 * k, n);
    let mut d_recurrent = Matrix::zeros(4 * k, k);
    let mut d_bias = vec![0.0; 4 * k];
    let mut d_x = vec![Matrix::zeros(batch, n); steps];

    let mut dh_next = Matrix::zeros(batch, k);
    let mut dc_next = match grad_c_final {
        Some(g) => {
            g.expect_shape((batch, k), "grad_c_final")?;
            g.clone()
        }
        None => Matrix::zeros(batch, k),
    };
    let mut dz = Matrix::zeros(batch, 4 * k);

    for t in (0..steps).rev() {
        let gates = &cache.gates[t];
        let tc = &cache.tanh_c[t];
        let c_prev = &cache.c[t];
        for b in 0..batch {
            let gr = gates.row(b);
            let tr = tc.row(b);
            let cp = c_prev.row(b);
            let dh_ext = grad_h[t].row(b);
            let dhn = dh_next.row(b);
            let dcn = dc_next.row_mut(b);
            let dzr = dz.row_mut(b);
            for j in 0..k {
                let (i, f, o, g) = (gr[j], gr[k + j], gr[2 * k + j], gr[3 * k + j]);
                let dh = dh_ext[j] + dhn[j];
                let dc = dh * o * (1.0 - tr[j] * tr[j]) + dcn[j];
                dzr[j] = dc * g * i * (1.0 - i);
                dzr[k + j] = dc * cp[j] * f * (1.0 - f);
                dzr[2 * k + j] = dh * tr[j] * o * (1.0 - o);
                dzr[3 * k + j] = dc * i * (1.0 - g * g);
                dcn[j] = dc * f;
            }
        }
        // dW += dz^T x_t, dU += dz^T h_{t-1}, db += sum_b dz
        gemm(4 * k, batch, n, 1.0, dz.data(), 4 * k, Trans::Yes, cache.x[t].data(), n, Trans::No, 1.0, d_input.data_mut());
        gemm(4 * k, batch, k, 1.0, dz.data(), 4 * k, Trans::Yes, cache.h[t].data(), k, Trans::No, 1.0, d_recurrent.data_mut());
        for row in dz.data().chunks_exact(4 * k) {
            for (acc, v) in d_bias.iter_mut().zip(row) {
                *acc += v;
            }
        }
        gemm(batch, 4 * k, n, 1.0, dz.data(), 4 * k, Trans::No, w.input.data(), n, Trans::No, 0.0, d_x[t].data_mut());
        gemm(batch, 4 * k, k, 1.0, dz.data(), 4 * k, Trans::No, w.recurrent.data(), k, Trans::No, 0.0, dh_next.data_mut());
    }

    Ok(LstmGrads { input: d_input, recurrent: d_recurrent, bias: Matrix::new(4 * k, 1, d_bias)?, x: d_x })
}

/// Inverted-dropout mask: entries are `0` or `1 / (1 - rate)`. `None` means
/// identity (inference mode or zero rate).
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask(Option<Vec<f64>>);

impl DropoutMask {
    pub fn identity() -> Self {
        DropoutMask(None)
    }

    pub fn sample(len: usize, rate: f64, rng: Option<&mut SeededRng>, training: bool) -> Result<Self> {
        check_rate(rate)?;
        match rng {
            Some(rng) if training && rate > 0.0 => {
                let keep = 1.0 / (1.0 - rate);
                Ok(DropoutMask(Some(
                    (0..len).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect(),
                )))
            }
            _ => Ok(DropoutMask(None)),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_none()
    }

    /// Multiplies `v` elementwise by the mask.
    pub fn apply(&self, v: &mut [f64]) {
        if let Some(m) = &self.0 {
            debug_assert_eq!(m.len(), v.len());
            v.iter_mut().zip(m).for_each(|(x, s)| *x *= s);
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")))
    }
}

/// Inverted dropout on a whole matrix. Identity in inference mode.
pub fn dropout_apply(v: &Matrix, rate: f64, rng: &mut SeededRng, training: bool) -> Result<Matrix> {
    let mask = DropoutMask::sample(v.len(), rate, Some(rng), training)?;
    let mut out = v.clone();
    mask.apply(out.data_mut());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded_rng;

    fn random_layer(inputs: usize, units: usize, seed: u64) -> LstmLayer {
        let mut rng = seeded_rng(seed);
        let mut draw = |r, c| Matrix::from_fn(r, c, |_, _| rng.random_range(-0.8..0.8)).unwrap();
        LstmLayer {
            input: draw(4 * units, inputs),
            recurrent: draw(4 * units, units),
            bias: draw(4 * units, 1),
            nonneg_inputs: false,
        }
    }

    fn random_seq(steps: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = seeded_rng(seed);
        Matrix::from_fn(steps, n, |_, _| rng.random_range(-1.5..1.5)).unwrap()
    }

    /// Scalar loops straight from the update equations, with gate blocks
    /// addressed explicitly.
    fn reference_step(x: &[f64], h: &[f64], c: &[f64], l: &LstmLayer) -> (Vec<f64>, Vec<f64>) {
        let k = h.len();
        let pre = |gate: usize, j: usize| {
            let row = gate * k + j;
            let mut s = l.bias.get(row, 0);
            for (r, xr) in x.iter().enumerate() {
                s += l.input.get(row, r) * xr;
            }
            for (q, hq) in h.iter().enumerate() {
                s += l.recurrent.get(row, q) * hq;
            }
            s
        };
        let logistic = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut hn = vec![0.0; k];
        let mut cn = vec![0.0; k];
        for j in 0..k {
            let i = logistic(pre(0, j));
            let f = logistic(pre(1, j));
            let o = logistic(pre(2, j));
            let cand = pre(3, j).tanh();
            cn[j] = i * cand + f * c[j];
            hn[j] = o * cn[j].tanh();
        }
        (hn, cn)
    }

    #[test]
    fn zero_weights_zero_state_gives_zero() {
        let l = LstmLayer::zeros(3, 4);
        let s = lstm_cell_step(&[0.3, -2.0, 9.0], &LstmState::zeros(4), l.view()).unwrap();
        assert_eq!(s.h, vec![0.0; 4]);
        assert_eq!(s.c, vec![0.0; 4]);
    }

    #[test]
    fn zero_weights_carry_half_of_cell() {
        let l = LstmLayer::zeros(2, 3);
        let prev = LstmState { h: vec![0.0; 3], c: vec![1.0; 3] };
        let s = lstm_cell_step(&[1.0, -1.0], &prev, l.view()).unwrap();
        for j in 0..3 {
            assert!((s.c[j] - 0.5).abs() < 1e-15);
            assert!((s.h[j] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
            assert!((s.h[j] - 0.23105).abs() < 1e-5);
        }
    }

    #[test]
    fn cell_step_matches_reference() {
        for seed in 0..25 {
            let l = random_layer(2, 3, seed);
            let x = [0.7, -1.1];
            let s = lstm_cell_step(&x, &LstmState::zeros(3), l.view()).unwrap();
            let (h, c) = reference_step(&x, &[0.0; 3], &[0.0; 3], &l);
            for j in 0..3 {
                assert!((s.h[j] - h[j]).abs() < 1e-12);
                assert!((s.c[j] - c[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_folds_cell_steps() {
        let l = random_layer(4, 3, 9);
        let x = random_seq(7, 4, 10);
        let traj = lstm_forward(&x, l.view(), None).unwrap();
        let mut s = LstmState::zeros(3);
        for t in 0..7 {
            s = lstm_cell_step(x.row(t), &s, l.view()).unwrap();
            assert_eq!(traj.h.row(t), s.h.as_slice());
            assert_eq!(traj.c.row(t), s.c.as_slice());
        }
        let one = lstm_forward(&x.slice_rows(0, 1), l.view(), None).unwrap();
        let step = lstm_cell_step(x.row(0), &LstmState::zeros(3), l.view()).unwrap();
        assert_eq!(one.h.row(0), step.h.as_slice());
    }

    #[test]
    fn zero_weights_keep_zero_trajectory() {
        let l = LstmLayer::zeros(4, 2);
        let traj = lstm_forward(&random_seq(6, 4, 1), l.view(), None).unwrap();
        assert!(traj.h.data().iter().chain(traj.c.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_gates_carry_memory() {
        let mut l = random_layer(3, 2, 4);
        // i -> 0, f -> 1
        for j in 0..2 {
            l.bias.set(j, 0, -60.0);
            l.bias.set(2 + j, 0, 60.0);
        }
        l.input.data_mut().iter_mut().for_each(|v| *v *= 0.01);
        l.recurrent.data_mut().iter_mut().for_each(|v| *v *= 0.01);
        let init = LstmState { h: vec![0.0; 2], c: vec![0.4, -0.9] };
        let traj = lstm_forward(&random_seq(12, 3, 5), l.view(), Some(&init)).unwrap();
        for t in 0..12 {
            for j in 0..2 {
                assert!((traj.c.get(t, j) - init.c[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        let l = LstmLayer::zeros(3, 2);
        assert!(matches!(lstm_cell_step(&[1.0], &LstmState::zeros(2), l.view()), Err(Error::Shape(_))));
        assert!(lstm_forward(&Matrix::zeros(0, 3), l.view(), None).is_err());
        let bad = Matrix::zeros(7, 3);
        assert!(LstmWeights::new(&bad, &l.recurrent, &l.bias).is_err());
    }

    fn sum_h_loss(l: &LstmLayer, x: &Matrix) -> f64 {
        lstm_forward(x, l.view(), None).unwrap().h.data().iter().sum()
    }

    #[test]
    fn backward_matches_central_differences() {
        let l = random_layer(3, 4, 21);
        let x = random_seq(6, 3, 22);
        let traj = lstm_forward(&x, l.view(), None).unwrap();
        let ones = vec![Matrix::filled(1, 4, 1.0); 6];
        let g = lstm_backward(&traj.cache, &ones, None, l.view()).unwrap();

        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for which in 0..3 {
            let analytic = [&g.input, &g.recurrent, &g.bias][which];
            for idx in 0..analytic.len() {
                let mut lp = l.clone();
                let mut lm = l.clone();
                [&mut lp.input, &mut lp.recurrent, &mut lp.bias][which].data_mut()[idx] += eps;
                [&mut lm.input, &mut lm.recurrent, &mut lm.bias][which].data_mut()[idx] -= eps;
                let num = (sum_h_loss(&lp, &x) - sum_h_loss(&lm, &x)) / (2.0 * eps);
                let a = analytic.data()[idx];
                worst = worst.max((a - num).abs() / a.abs().max(num.abs()).max(1e-8));
            }
        }
        assert!(worst < 1e-6, "max relative error {worst}");

        // input gradients too
        for t in 0..6 {
            for r in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp.set(t, r, x.get(t, r) + eps);
                xm.set(t, r, x.get(t, r) - eps);
                let num = (sum_h_loss(&l, &xp) - sum_h_loss(&l, &xm)) / (2.0 * eps);
                let a = g.x[t].get(0, r);
                assert!((a - num).abs() / a.abs().max(num.abs()).max(1e-8) < 1e-6);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let l = random_layer(3, 2, 3);
        let traj = lstm_forward(&random_seq(5, 3, 4), l.view(), None).unwrap();
        let zeros = vec![Matrix::zeros(1, 2); 5];
        let g = lstm_backward(&traj.cache, &zeros, None, l.view()).unwrap();
        assert_eq!(g.input.max_abs(), 0.0);
        assert_eq!(g.recurrent.max_abs(), 0.0);
        assert_eq!(g.bias.max_abs(), 0.0);
    }

    #[test]
    fn final_cell_loss_reaches_gates() {
        let l = random_layer(3, 2, 8);
        let traj = lstm_forward(&random_seq(5, 3, 9), l.view(), None).unwrap();
        let zeros = vec![Matrix::zeros(1, 2); 5];
        let g = lstm_backward(&traj.cache, &zeros, Some(&Matrix::filled(1, 2, 1.0)), l.view()).unwrap();
        let w = LstmWeights::new(&g.input, &g.recurrent, &g.bias).unwrap();
        for gate in [Gate::Input, Gate::Forget, Gate::Candidate] {
            assert!(w.gate_input(gate).max_abs() > 0.0, "{gate:?}");
        }
        assert!(g.recurrent.max_abs() > 0.0);
    }

    #[test]
    fn dropout_rate_zero_and_inference_are_identity() {
        let mut rng = seeded_rng(0);
        let v = random_seq(4, 5, 1);
        assert_eq!(dropout_apply(&v, 0.0, &mut rng, true).unwrap(), v);
        assert_eq!(dropout_apply(&v, 0.0, &mut rng, false).unwrap(), v);
        assert_eq!(dropout_apply(&v, 0.5, &mut rng, false).unwrap(), v);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = seeded_rng(11);
        let v = Matrix::filled(100_000, 1, 1.0);
        let out = dropout_apply(&v, 0.5, &mut rng, true).unwrap();
        let mean = out.data().iter().sum::<f64>() / 100_000.0;
        assert!((0.98..=1.02).contains(&mean), "{mean}");
        assert!(out.data().iter().all(|&x| x == 0.0 || x == 2.0));
    }

    #[test]
    fn dropout_rejects_bad_rate() {
        let mut rng = seeded_rng(0);
        let v = Matrix::zeros(1, 1);
        assert!(matches!(dropout_apply(&v, 1.0, &mut rng, true), Err(Error::Config(_))));
        assert!(dropout_apply(&v, -0.1, &mut rng, false).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn gates_and_hidden_bounded(seed in 0u64..10_000, scale in 0.1f64..20.0) {
                let mut l = random_layer(3, 4, seed);
                l.input.scale(scale);
                l.recurrent.scale(scale);
                let x = random_seq(5, 3, seed + 1);
                let traj = lstm_forward(&x, l.view(), None).unwrap();
                for g in &traj.cache.gates {
                    for b in 0..g.rows() {
                        for &v in &g.row(b)[..12] {
                            prop_assert!((0.0..=1.0).contains(&v));
                        }
                    }
                }
                prop_assert!(traj.h.data().iter().all(|v| v.abs() <= 1.0));
            }

            #[test]
            fn nonneg_inputs_give_nonneg_contributions(
                w in proptest::collection::vec(0.0f64..3.0, 24),
                x in proptest::collection::vec(0.0f64..3.0, 3),
            ) {
                let l = LstmLayer { input: Matrix::new(8, 3, w).unwrap(), ..LstmLayer::zeros(3, 2) };
                let contrib = l.input.matvec(&x).unwrap();
                prop_assert!(contrib.iter().all(|&v| v >= 0.0));
            }
        }
    }
}
