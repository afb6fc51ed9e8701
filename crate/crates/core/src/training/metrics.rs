//! Classification metrics and the paired one-tailed t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Area under the ROC curve as the Mann-Whitney statistic
/// `(concordant + tied / 2) / (P * N)`.
///
/// Fails with a degenerate-metric error when only one class is present.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate(format!("AUC undefined with {pos} positive and {neg} negative samples")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // walk groups of equal scores in ascending order
    let (mut twice_concordant, mut neg_below) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        twice_concordant += 2 * gp * neg_below + gp * gn;
        neg_below += gn;
        i = j;
    }
    Ok(twice_concordant as f64 / (2 * pos * neg) as f64)
}

/// Subject-level classification summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    /// `None` when there are no positive subjects.
    pub tpr: Option<f64>,
    /// `None` when there are no negative subjects.
    pub tnr: Option<f64>,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    pub true_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub false_positive: usize,
}

impl Metrics {
    /// Metrics of subject scores thresholded strictly above 0.5.
    pub fn from_scores(scores: &[f64], labels: &[u8]) -> Result<Self> {
        if scores.is_empty() || scores.len() != labels.len() {
            return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
        }
        let (mut tp, mut fn_, mut tn, mut fp) = (0, 0, 0, 0);
        for (&s, &l) in scores.iter().zip(labels) {
            match (s > 0.5, l == 1) {
                (true, true) => tp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
            }
        }
        let rate = |hit: usize, miss: usize| (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64);
        let auc = match auc(scores, labels) {
            Ok(v) => Some(v),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Metrics {
            acc: (tp + tn) as f64 / scores.len() as f64,
            tpr: rate(tp, fn_),
            tnr: rate(tn, fp),
            auc,
            true_positive: tp,
            false_negative: fn_,
            true_negative: tn,
            false_positive: fp,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// `P(T_{n-1} > t)`, the one-tailed p-value for `mean(a - b) > 0`.
    pub p: f64,
    pub df: usize,
    pub mean_difference: f64,
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_upper_tail(t: f64, df: f64) -> f64 {
    let half = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t));
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Paired one-tailed t-test of `a > b`.
pub fn paired_ttest_one_tailed(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Data(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Data(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("paired t-test input".into()));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // differences equal up to rounding count as constant
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if var.sqrt() <= 1e-12 * scale.max(f64::MIN_POSITIVE) || var == 0.0 {
        return Err(Error::Degenerate("paired differences have zero variance".into()));
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    Ok(TTest { t, p: student_t_upper_tail(t, (n - 1) as f64), df: n - 1, mean_difference: mean })
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }
}
