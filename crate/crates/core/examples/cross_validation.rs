//! Ten-fold subject-grouped cross-validation of LSTM-DG with the summary
//! table of ACC, TPR, TNR and AUC.
//!
//! `cargo run --release --example cross_validation -- [JOBS]`

use std::error::Error;

use dglstm::data::{synth_generate, SynthConfig};
use dglstm::model::Variant;
use dglstm::training::{cross_validate, CvConfig, CvReport, TrainConfig};

pub fn run(quick: bool, jobs: usize) -> Result<CvReport, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 12, length: 30, ..SynthConfig::default() } } else { SynthConfig::default() };
    let (subjects, _) = synth_generate(&synth)?;
    let cfg = CvConfig {
        train: TrainConfig {
            variant: Variant::Dg,
            k1: Some(16),
            k2: 4,
            window: if quick { 10 } else { 30 },
            max_epochs: if quick { 2 } else { 100 },
            ..TrainConfig::default()
        },
        folds: if quick { 3 } else { 10 },
        jobs,
    };
    let (report, _models) = cross_validate(&subjects, &cfg)?;

    println!("fold  acc    auc    epochs  best");
    for f in &report.folds {
        let auc = f.metrics.auc.map_or("  n/a".into(), |a| format!("{a:.3}"));
        println!("{:4}  {:.3}  {auc}  {:6}  {:4}", f.fold, f.metrics.acc, f.epochs_run, f.best_epoch);
    }
    print!("{}", report.summary_csv());
    Ok(report)
}

fn main() -> Result<(), Box<dyn Error>> {
    let jobs = std::env::args().nth(1).map(|j| j.parse()).transpose()?.unwrap_or(1);
    run(false, jobs).map(|_| ())
}
