//! Cross-validate all four variants on the same folds and test whether
//! LSTM-DG beats each of the others (paired one-tailed t-test on fold ACC).
//!
//! `cargo run --release --example compare_variants -- [JOBS]`

use std::error::Error;

use dglstm::data::{synth_generate, SynthConfig};
use dglstm::model::Variant;
use dglstm::training::{cross_validate, paired_ttest_one_tailed, CvConfig, TrainConfig};

pub fn run(quick: bool, jobs: usize) -> Result<Vec<(Variant, f64)>, Box<dyn Error>> {
    let synth = if quick {
        SynthConfig { n_subjects: 12, length: 30, ..SynthConfig::default() }
    } else {
        SynthConfig { coupling_diff: 0.25, noise_sd: 1.0, ..SynthConfig::default() }
    };
    let (subjects, _) = synth_generate(&synth)?;

    let mut accs = Vec::new();
    for variant in [Variant::Dg, Variant::H, Variant::D, Variant::S] {
        let cfg = CvConfig {
            train: TrainConfig {
                variant,
                k1: Some(16),
                k2: 4,
                window: if quick { 10 } else { 30 },
                max_epochs: if quick { 2 } else { 100 },
                ..TrainConfig::default()
            },
            folds: if quick { 3 } else { 10 },
            jobs,
        };
        let (report, _) = cross_validate(&subjects, &cfg)?;
        let s = &report.summary;
        println!("{variant}: ACC {:.3} ({:.3})  pooled AUC {:?}", s.acc.mean, s.acc.std, s.auc_pooled);
        accs.push((variant, report.fold_values("acc")?));
    }

    let (_, dg) = &accs[0];
    let mut out = Vec::new();
    for (variant, other) in &accs[1..] {
        match paired_ttest_one_tailed(dg, other) {
            Ok(t) => {
                println!("LSTM-DG > {variant}: t = {:.3}, df = {}, one-tailed p = {:.4}", t.t, t.df, t.p);
                out.push((*variant, t.p));
            }
            Err(e) => println!("LSTM-DG > {variant}: {e}"),
        }
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn Error>> {
    let jobs = std::env::args().nth(1).map(|j| j.parse()).transpose()?.unwrap_or(1);
    run(false, jobs).map(|_| ())
}
