//! Correlation tensors and symmetric non-negative CP (PARAFAC)
//! decomposition, the tensor-based community baseline.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::{gemm, Matrix, Trans};
use crate::numeric::rng::seeded_rng;

/// Pearson correlation between the columns of an `L x R` series. The
/// result is exactly symmetric with a unit diagonal.
pub fn correlation_matrix(series: &Matrix) -> Result<Matrix> {
    let (l, r) = series.shape();
    if l < 3 {
        return Err(Error::Data(format!("correlation needs at least 3 time points, got {l}")));
    }
    let mut z = series.clone();
    for c in 0..r {
        let mean = (0..l).map(|t| series.get(t, c)).sum::<f64>() / l as f64;
        let mut ss = 0.0;
        for t in 0..l {
            let v = series.get(t, c) - mean;
            z.set(t, c, v);
            ss += v * v;
        }
        let norm = ss.sqrt();
        if !(norm > 0.0) || norm <= 1e-12 * mean.abs() * (l as f64).sqrt() {
            return Err(Error::Data(format!("ROI {c} is constant; correlation undefined")));
        }
        for t in 0..l {
            z.set(t, c, z.get(t, c) / norm);
        }
    }
    let mut corr = z.matmul(Trans::Yes, &z, Trans::No)?;
    for i in 0..r {
        corr.set(i, i, 1.0);
        for j in i + 1..r {
            let v = corr.get(i, j).clamp(-1.0, 1.0);
            corr.set(i, j, v);
            corr.set(j, i, v);
        }
    }
    Ok(corr)
}

/// `R x R x S` tensor stored slice by slice (`S` contiguous `R x R` blocks).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    rois: usize,
    slices: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn from_slices(slices: &[Matrix]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| Error::Data("tensor needs at least one slice".into()))?;
        let r = first.rows();
        let mut data = Vec::with_capacity(r * r * slices.len());
        for (s, m) in slices.iter().enumerate() {
            m.expect_shape((r, r), &format!("tensor slice {s}"))?;
            data.extend_from_slice(m.data());
        }
        Ok(Self { rois: r, slices: slices.len(), data })
    }

    pub fn rois(&self) -> usize {
        self.rois
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn slice(&self, s: usize) -> &[f64] {
        let n = self.rois * self.rois;
        &self.data[s * n..(s + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize, s: usize) -> f64 {
        self.data[s * self.rois * self.rois + i * self.rois + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Stacks the correlation matrices of `samples`, negative entries clamped
/// to zero.
pub fn build_tensor(samples: &[Matrix]) -> Result<Tensor3> {
    if samples.is_empty() {
        return Err(Error::Data("tensor needs at least one sample".into()));
    }
    let slices: Vec<Matrix> = samples
        .par_iter()
        .enumerate()
        .map(|(s, x)| {
            correlation_matrix(x)
                .map(|c| c.map(|v| v.max(0.0)))
                .map_err(|e| Error::Data(format!("sample {s}: {e}")))
        })
        .collect::<Result<_>>()?;
    Tensor3::from_slices(&slices)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParafacConfig {
    pub components: usize,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ParafacConfig {
    fn default() -> Self {
        Self { components: 50, max_sweeps: 500, tol: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParafacResult {
    /// ROI loadings, `R x K`; columns have unit norm.
    pub a: Matrix,
    /// Sample loadings, `S x K`.
    pub c: Matrix,
    /// `1 - ||T - T_hat||_F / ||T||_F`.
    pub fit: f64,
    /// Fit after each sweep (entry 0 is the initial fit).
    pub fit_history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Symmetric non-negative CP: `T ~ sum_k a_k o a_k o c_k`.
///
/// Each sweep updates the sample factor column by column (exact
/// non-negative least squares per column), then updates the two ROI modes
/// the same way one after the other and replaces the ROI factor by their
/// average. If the averaged factor lowers the fit, the step toward it is
/// halved until the fit no longer drops, so the recorded fit never
/// decreases.
pub fn nn_parafac_symmetric(t: &Tensor3, cfg: &ParafacConfig) -> Result<ParafacResult> {
    let k = cfg.components;
    if k == 0 {
        return Err(Error::Config("number of components must be at least 1".into()));
    }
    if !(cfg.tol >= 0.0) {
        return Err(Error::Config(format!("tolerance {} must be non-negative", cfg.tol)));
    }
    if let Some(v) = t.data.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("tensor has entry {v}; non-negative finite entries required")));
    }
    let norm = t.frobenius();
    if norm == 0.0 {
        return Err(Error::Degenerate("all-zero tensor".into()));
    }
    let (r, s) = (t.rois, t.slices);

    let mut rng = seeded_rng(cfg.seed);
    let mut a = Matrix::from_fn(r, k, |_, _| rng.random_range(0.0..1.0))?;
    normalize_columns(&mut a, None);
    let mut c = Matrix::from_fn(s, k, |_, _| rng.random_range(0.0..1.0))?;
    // match the overall scale of the data
    let scale = {
        let model_sq = model_norm_sq(&a, &a, &c);
        if model_sq > 0.0 { (norm / model_sq.sqrt()).max(1e-12) } else { 1.0 }
    };
    c.scale(scale);

    let mut fit = fit_of(t, &a, &c, norm);
    let mut history = vec![fit];
    let mut converged = false;
    let mut sweeps = 0;
    for _ in 0..cfg.max_sweeps {
        sweeps += 1;
        update_samples(t, &a, &mut c);
        let fit_after_c = fit_of(t, &a, &c, norm);

        let y = weighted_sums(t, &c);
        let ctc = c.matmul(Trans::Yes, &c, Trans::No)?;
        let mut a1 = a.clone();
        update_roi_mode(&y, &ctc, &a, &mut a1);
        let mut a2 = a.clone();
        update_roi_mode(&y, &ctc, &a1, &mut a2);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut cand = a.clone();
            for ((v, p), q) in cand.data_mut().iter_mut().zip(a1.data()).zip(a2.data()) {
                let avg = 0.5 * (p + q);
                *v = (*v + step * (avg - *v)).max(0.0);
            }
            let mut cand_c = c.clone();
            normalize_columns(&mut cand, Some(&mut cand_c));
            let f = fit_of(t, &cand, &cand_c, norm);
            if f >= fit_after_c {
                accepted = Some((cand, cand_c, f));
                break;
            }
            step *= 0.5;
        }
        let new_fit = match accepted {
            Some((na, nc, f)) => {
                a = na;
                c = nc;
                f
            }
            None => fit_after_c,
        };
        let change = (new_fit - fit).abs() / fit.abs().max(1e-12);
        fit = new_fit;
        history.push(fit);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(ParafacResult { a, c, fit, fit_history: history, sweeps, converged })
}

/// Rescales columns of `a` to unit norm, pushing the scale (squared, since
/// `a` enters twice) into `c`. Zero columns are left alone.
fn normalize_columns(a: &mut Matrix, mut c: Option<&mut Matrix>) {
    let (r, k) = a.shape();
    for j in 0..k {
        let n = (0..r).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt();
        if n > 0.0 {
            for i in 0..r {
                a.set(i, j, a.get(i, j) / n);
            }
            if let Some(c) = c.as_deref_mut() {
                for i in 0..c.rows() {
                    c.set(i, j, c.get(i, j) * n * n);
                }
            }
        }
    }
}

/// `||[[A, B, C]]||_F^2 = sum_{k,l} (A'A)_{kl} (B'B)_{kl} (C'C)_{kl}`
fn model_norm_sq(a: &Matrix, b: &Matrix, c: &Matrix) -> f64 {
    let ata = a.matmul(Trans::Yes, a, Trans::No).expect("shapes");
    let btb = b.matmul(Trans::Yes, b, Trans::No).expect("shapes");
    let ctc = c.matmul(Trans::Yes, c, Trans::No).expect("shapes");
    ata.data().iter().zip(btb.data()).zip(ctc.data()).map(|((x, y), z)| x * y * z).sum()
}

/// Fit computed from the explicit residual, slice by slice.
fn fit_of(t: &Tensor3, a: &Matrix, c: &Matrix, norm: f64) -> f64 {
    let (r, k) = a.shape();
    let n = r * r;
    let resid_sq: f64 = (0..t.slices)
        .into_par_iter()
        .map(|s| {
            let mut scaled = a.clone();
            for i in 0..r {
                for j in 0..k {
                    scaled.set(i, j, a.get(i, j) * c.get(s, j));
                }
            }
            let mut model = vec![0.0; n];
            gemm(r, k, r, 1.0, scaled.data(), k, Trans::No, a.data(), k, Trans::Yes, 0.0, &mut model);
            t.slice(s).iter().zip(&model).map(|(x, m)| (x - m) * (x - m)).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    1.0 - resid_sq.sqrt() / norm
}

/// Column-wise exact NNLS update of the sample factor given ROI factor `a`
/// in both ROI modes.
fn update_samples(t: &Tensor3, a: &Matrix, c: &mut Matrix) {
    let (r, k) = a.shape();
    let ata = a.matmul(Trans::Yes, a, Trans::No).expect("shapes");
    let gram: Vec<f64> = ata.data().iter().map(|v| v * v).collect();
    // m[s, j] = a_j' T_s a_j
    let mut ta = vec![0.0; r * k];
    let mut m = Matrix::zeros(t.slices, k);
    for s in 0..t.slices {
        gemm(r, r, k, 1.0, t.slice(s), r, Trans::No, a.data(), k, Trans::No, 0.0, &mut ta);
        for j in 0..k {
            let mut acc = 0.0;
            for i in 0..r {
                acc += a.get(i, j) * ta[i * k + j];
            }
            m.set(s, j, acc);
        }
    }
    for j in 0..k {
        let gjj = gram[j * k + j];
        if gjj <= 0.0 {
            continue;
        }
        for s in 0..t.slices {
            let row = c.row(s);
            let mut other = 0.0;
            for l in 0..k {
                if l != j {
                    other += row[l] * gram[l * k + j];
                }
            }
            let v = ((m.get(s, j) - other) / gjj).max(0.0);
            c.set(s, j, v);
        }
    }
}

/// `Y_j = sum_s c[s, j] T_s`, one `R x R` matrix per component.
fn weighted_sums(t: &Tensor3, c: &Matrix) -> Vec<Vec<f64>> {
    let n = t.rois * t.rois;
    let k = c.cols();
    let mut y = vec![vec![0.0; n]; k];
    for s in 0..t.slices {
        let slice = t.slice(s);
        for (j, yj) in y.iter_mut().enumerate() {
            let w = c.get(s, j);
            if w != 0.0 {
                for (acc, v) in yj.iter_mut().zip(slice) {
                    *acc += w * v;
                }
            }
        }
    }
    y
}

/// Column-wise exact NNLS update of one ROI mode (`target`) with the other
/// ROI mode fixed at `fixed` and the sample factor folded into `y`/`ctc`.
fn update_roi_mode(y: &[Vec<f64>], ctc: &Matrix, fixed: &Matrix, target: &mut Matrix) {
    let (r, k) = fixed.shape();
    let ftf = fixed.matmul(Trans::Yes, fixed, Trans::No).expect("shapes");
    let gram: Vec<f64> = ctc.data().iter().zip(ftf.data()).map(|(x, y)| x * y).collect();
    // mttkrp[:, j] = Y_j fixed_j
    let mut mttkrp = Matrix::zeros(r, k);
    for j in 0..k {
        for i in 0..r {
            let row = &y[j][i * r..(i + 1) * r];
            let mut acc = 0.0;
            for (q, v) in row.iter().enumerate() {
                acc += v * fixed.get(q, j);
            }
            mttkrp.set(i, j, acc);
        }
    }
    for j in 0..k {
        let gjj = gram[j * k + j];
        if gjj <= 0.0 {
            continue;
        }
        for i in 0..r {
            let mut other = 0.0;
            for l in 0..k {
                if l != j {
                    other += target.get(i, l) * gram[l * k + j];
                }
            }
            target.set(i, j, ((mttkrp.get(i, j) - other) / gjj).max(0.0));
        }
    }
}
