//! Robustness of learned communities across training seeds: best-match
//! weight correlation and DSC of every reference community.
//!
//! `cargo run --release --example robustness`

use std::error::Error;

use dglstm::communities::{extract_communities, robustness, CommunitySet, Source};
use dglstm::data::{make_windows, synth_generate, SubjectRecord, SynthConfig};
use dglstm::model::Variant;
use dglstm::training::{train, TrainConfig};

fn communities(subjects: &[SubjectRecord], cfg: &TrainConfig) -> Result<CommunitySet, Box<dyn Error>> {
    let n_val = subjects.len() / 10;
    let mut train_w = Vec::new();
    for s in &subjects[n_val..] {
        train_w.extend(make_windows(s, cfg.window, true)?);
    }
    let mut val_w = Vec::new();
    for s in &subjects[..n_val] {
        val_w.extend(make_windows(s, cfg.window, true)?);
    }
    let model = train(cfg.build_model(subjects[0].series.cols())?, &train_w, &val_w, cfg)?.params;
    let (w_d, _) = model.generative_weights().expect("LSTM-DG has a generative layer");
    Ok(extract_communities(w_d, Source::Lstm)?)
}

pub fn run(quick: bool) -> Result<f64, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 20, length: 40, ..SynthConfig::default() } } else { SynthConfig::default() };
    let (subjects, _) = synth_generate(&synth)?;
    let base = TrainConfig {
        variant: Variant::Dg,
        k1: Some(16),
        k2: 4,
        window: if quick { 10 } else { 30 },
        max_epochs: if quick { 2 } else { 100 },
        ..TrainConfig::default()
    };
    let reference = communities(&subjects, &TrainConfig { seed: 0, ..base.clone() })?;
    let other = communities(&subjects, &TrainConfig { seed: 1, ..base })?;

    let mut shuffled = reference.clone();
    shuffled.communities.reverse();
    let self_check = robustness(&reference, &shuffled)?;
    println!(
        "reference vs reordered reference: correlation {:?}, DSC {}",
        self_check.mean_correlation, self_check.mean_dsc
    );

    let report = robustness(&reference, &other)?;
    print!("{}", report.to_csv());
    println!(
        "seed 0 vs seed 1: mean correlation {}, mean DSC {:.3}",
        report.mean_correlation.map_or("undefined".into(), |c| format!("{c:.3}")),
        report.mean_dsc
    );
    Ok(report.mean_dsc)
}

fn main() -> Result<(), Box<dyn Error>> {
    run(false).map(|_| ())
}
