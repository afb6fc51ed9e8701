//! Subject-grouped k-fold cross-validation and subject-level evaluation.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, MeanStd, Metrics};
use super::{streams, train, EpochRecord, TrainConfig, EVAL_CHUNK};
use crate::data::{make_windows, SubjectRecord, WindowSample};
use crate::error::{Error, Result};
use crate::model::{Batch, ModelParams, Variant};
use crate::numeric::rng::{derive_seed, derived_rng};

/// Subject indices of one cross-validation partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles subjects (seeded) into `k` test folds whose sizes differ by at
/// most one. Fold `i` tests on fold `i` and validates on fold `i + 1 mod k`.
///
/// With `k = 2` the rotating validation fold would leave nothing to train
/// on, so validation is instead the first fifth (at least one subject) of
/// the other fold.
pub fn grouped_kfold(n_subjects: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {k}")));
    }
    if k > n_subjects {
        return Err(Error::Config(format!("{k} folds for {n_subjects} subjects")));
    }
    if k == 2 && n_subjects < 4 {
        return Err(Error::Config(format!("2-fold cross-validation needs at least 4 subjects, got {n_subjects}")));
    }
    let mut order: Vec<usize> = (0..n_subjects).collect();
    order.shuffle(&mut derived_rng(seed, &[streams::FOLDS]));
    let groups: Vec<Vec<usize>> = (0..k).map(|i| order[i * n_subjects / k..(i + 1) * n_subjects / k].to_vec()).collect();

    Ok((0..k)
        .map(|i| {
            let next = (i + 1) % k;
            let (val, mut train): (Vec<usize>, Vec<usize>) = if k == 2 {
                let other = &groups[next];
                let v = (other.len() / 5).max(1);
                (other[..v].to_vec(), other[v..].to_vec())
            } else {
                let train = (0..k).filter(|&j| j != i && j != next).flat_map(|j| groups[j].iter().copied()).collect();
                (groups[next].clone(), train)
            };
            train.sort_unstable();
            let mut val = val;
            val.sort_unstable();
            let mut test = groups[i].clone();
            test.sort_unstable();
            Fold { index: i, train, val, test }
        })
        .collect())
}

/// Fraction of window probabilities strictly above 0.5.
pub fn subject_score(window_probabilities: &[f64]) -> f64 {
    window_probabilities.iter().filter(|&&p| p > 0.5).count() as f64 / window_probabilities.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectScore {
    pub subject_id: String,
    pub label: u8,
    /// Fraction of windows classified positive.
    pub score: f64,
    pub windows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectEvaluation {
    pub subjects: Vec<SubjectScore>,
    pub metrics: Metrics,
}

/// Classifies every window of every subject in inference mode and
/// summarizes the subject-level scores.
pub fn evaluate_subjects(model: &ModelParams, subjects: &[&SubjectRecord], window: usize) -> Result<SubjectEvaluation> {
    if subjects.is_empty() {
        return Err(Error::Data("no subjects to evaluate".into()));
    }
    let mut scores = Vec::with_capacity(subjects.len());
    for s in subjects {
        let windows = make_windows(s, window, false)?;
        let mut probs = Vec::with_capacity(windows.len());
        for chunk in windows.chunks(EVAL_CHUNK) {
            let refs: Vec<&WindowSample> = chunk.iter().collect();
            probs.extend(model.predict_batch(&Batch::from_windows(&refs)?)?);
        }
        scores.push(SubjectScore {
            subject_id: s.subject_id.clone(),
            label: s.label,
            score: subject_score(&probs),
            windows: windows.len(),
        });
    }
    let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let labels: Vec<u8> = scores.iter().map(|s| s.label).collect();
    Ok(SubjectEvaluation { metrics: Metrics::from_scores(&values, &labels)?, subjects: scores })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub train: TrainConfig,
    pub folds: usize,
    /// Folds trained concurrently.
    pub jobs: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { train: TrainConfig::default(), folds: 10, jobs: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_subjects: Vec<String>,
    pub val_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub subjects: Vec<SubjectScore>,
    pub metrics: Metrics,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub history: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub acc: MeanStd,
    /// Over folds where the rate is defined.
    pub tpr: Option<MeanStd>,
    pub tnr: Option<MeanStd>,
    /// Mean of per-fold AUCs (folds with both classes only).
    pub auc_fold_mean: Option<MeanStd>,
    /// AUC of all test-subject scores pooled across folds.
    pub auc_pooled: Option<f64>,
    pub epochs_run: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub variant: Variant,
    pub config: CvConfig,
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
}

impl CvReport {
    /// Per-fold values of `metric` (acc, tpr, tnr or auc) in fold order.
    pub fn fold_values(&self, metric: &str) -> Result<Vec<f64>> {
        self.folds
            .iter()
            .map(|f| {
                let v = match metric {
                    "acc" => Some(f.metrics.acc),
                    "tpr" => f.metrics.tpr,
                    "tnr" => f.metrics.tnr,
                    "auc" => f.metrics.auc,
                    other => return Err(Error::Usage(format!("unknown metric {other:?} (acc, tpr, tnr, auc)"))),
                };
                v.ok_or_else(|| Error::Degenerate(format!("{metric} undefined in fold {}", f.fold)))
            })
            .collect()
    }

    /// `metric,mean,std,n` table of the summary.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,mean,std,n\n");
        let s = &self.summary;
        let mut row = |name: &str, m: Option<&MeanStd>| match m {
            Some(m) => writeln!(out, "{name},{:?},{:?},{}", m.mean, m.std, m.n),
            None => writeln!(out, "{name},,,0"),
        };
        let _ = row("acc", Some(&s.acc));
        let _ = row("tpr", s.tpr.as_ref());
        let _ = row("tnr", s.tnr.as_ref());
        let _ = row("auc_fold_mean", s.auc_fold_mean.as_ref());
        let _ = row("epochs_run", Some(&s.epochs_run));
        match s.auc_pooled {
            Some(a) => {
                let _ = writeln!(out, "auc_pooled,{a:?},,{}", self.folds.len());
            }
            None => out.push_str("auc_pooled,,,0\n"),
        }
        out
    }

    /// One row per fold.
    pub fn folds_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
        let mut out = String::from("fold,acc,tpr,tnr,auc,epochs_run,best_epoch,best_val_loss\n");
        for f in &self.folds {
            let m = &f.metrics;
            let _ = writeln!(
                out,
                "{},{:?},{},{},{},{},{},{:?}",
                f.fold,
                m.acc,
                opt(m.tpr),
                opt(m.tnr),
                opt(m.auc),
                f.epochs_run,
                f.best_epoch,
                f.best_val_loss
            );
        }
        out
    }
}

fn summarize(folds: &[FoldReport]) -> Result<CvSummary> {
    let collect = |f: fn(&Metrics) -> Option<f64>| MeanStd::of(&folds.iter().filter_map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let scores: Vec<f64> = folds.iter().flat_map(|f| f.subjects.iter().map(|s| s.score)).collect();
    let labels: Vec<u8> = folds.iter().flat_map(|f| f.subjects.iter().map(|s| s.label)).collect();
    let auc_pooled = match auc(&scores, &labels) {
        Ok(v) => Some(v),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let epochs: Vec<f64> = folds.iter().map(|f| f.epochs_run as f64).collect();
    Ok(CvSummary {
        acc: collect(|m| Some(m.acc)).ok_or_else(|| Error::Data("no folds".into()))?,
        tpr: collect(|m| m.tpr),
        tnr: collect(|m| m.tnr),
        auc_fold_mean: collect(|m| m.auc),
        auc_pooled,
        epochs_run: MeanStd::of(&epochs).expect("non-empty"),
    })
}

fn windows_of(subjects: &[SubjectRecord], idx: &[usize], window: usize) -> Result<Vec<WindowSample>> {
    let mut out = Vec::new();
    for &i in idx {
        out.extend(make_windows(&subjects[i], window, true)?);
    }
    Ok(out)
}

fn run_fold(subjects: &[SubjectRecord], fold: &Fold, cfg: &TrainConfig) -> Result<(FoldReport, ModelParams)> {
    let fold_cfg = TrainConfig { seed: derive_seed(cfg.seed, &[streams::FOLD_RUN, fold.index as u64]), ..cfg.clone() };
    // every variant trains on windows that have a next-step target so that
    // generative and discriminative runs see identical samples
    let train_w = windows_of(subjects, &fold.train, cfg.window)?;
    let val_w = windows_of(subjects, &fold.val, cfg.window)?;
    let model = fold_cfg.build_model(subjects[0].series.cols())?;
    let outcome = train(model, &train_w, &val_w, &fold_cfg)?;
    drop((train_w, val_w));

    let test: Vec<&SubjectRecord> = fold.test.iter().map(|&i| &subjects[i]).collect();
    let eval = evaluate_subjects(&outcome.params, &test, cfg.window)?;
    let ids = |idx: &[usize]| idx.iter().map(|&i| subjects[i].subject_id.clone()).collect();
    log::info!(
        "fold {}: acc {:.3} after {} epochs (best {})",
        fold.index,
        eval.metrics.acc,
        outcome.epochs_run(),
        outcome.best_epoch
    );
    let report = FoldReport {
        fold: fold.index,
        train_subjects: ids(&fold.train),
        val_subjects: ids(&fold.val),
        test_subjects: ids(&fold.test),
        subjects: eval.subjects,
        metrics: eval.metrics,
        epochs_run: outcome.epochs_run(),
        best_epoch: outcome.best_epoch,
        best_val_loss: outcome.best_val_loss,
        history: outcome.history,
    };
    Ok((report, outcome.params))
}

/// Trains and evaluates one model per fold. Returns the report and the
/// best-validation model of every fold, both in fold order.
pub fn cross_validate(subjects: &[SubjectRecord], cfg: &CvConfig) -> Result<(CvReport, Vec<ModelParams>)> {
    cfg.train.validate()?;
    if cfg.jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    if let Some(s) = subjects.iter().find(|s| s.series.cols() != subjects[0].series.cols()) {
        return Err(Error::Data(format!("subject {} has a different ROI count", s.subject_id)));
    }
    let folds = grouped_kfold(subjects.len(), cfg.folds, cfg.train.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(FoldReport, ModelParams)> =
        pool.install(|| folds.par_iter().map(|f| run_fold(subjects, f, &cfg.train)).collect::<Result<_>>())?;
    let (reports, models): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = summarize(&reports)?;
    let config = CvConfig { train: cfg.train.resolved(), ..cfg.clone() };
    Ok((CvReport { variant: cfg.train.variant, config, folds: reports, summary }, models))
}
