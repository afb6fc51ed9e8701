//! Read functional communities off a trained LSTM-DG: one community per
//! first-layer unit from the non-negative generative weights, ranked by
//! influence on the classifier and matched against the planted ones.
//!
//! `cargo run --release --example extract_communities`

use std::error::Error;

use dglstm::communities::{extract_communities, robustness, Source};
use dglstm::data::{make_windows, synth_generate, SynthConfig};
use dglstm::model::Variant;
use dglstm::training::{grouped_kfold, train, TrainConfig};

pub fn run(quick: bool) -> Result<f64, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 20, length: 40, ..SynthConfig::default() } } else { SynthConfig::default() };
    let (subjects, truth) = synth_generate(&synth)?;
    let cfg = TrainConfig {
        variant: Variant::Dg,
        k1: Some(16),
        k2: 4,
        window: if quick { 10 } else { 30 },
        max_epochs: if quick { 2 } else { 100 },
        ..TrainConfig::default()
    };
    let fold = &grouped_kfold(subjects.len(), 10, 0)?[0];
    let mut train_w = Vec::new();
    for &i in &fold.train {
        train_w.extend(make_windows(&subjects[i], cfg.window, true)?);
    }
    let mut val_w = Vec::new();
    for &i in &fold.val {
        val_w.extend(make_windows(&subjects[i], cfg.window, true)?);
    }
    let model = train(cfg.build_model(synth.rois)?, &train_w, &val_w, &cfg)?.params;

    let (w_d, _) = model.generative_weights().expect("LSTM-DG has a generative layer");
    let learned = extract_communities(w_d, Source::Lstm)?;
    let influence = model.community_influence()?;
    println!("unit  influence  members");
    for &k in &influence.ranking {
        println!("{k:4}  {:9.4}  {:?}", influence.scores[k], learned.communities[k].members);
    }

    let report = robustness(&truth.communities, &learned)?;
    for m in &report.per_community {
        println!(
            "planted {} (size {}): best DSC {:.3} with unit {:?}",
            m.community, m.size, m.best_dsc, m.dsc_match
        );
    }
    println!("mean best-match DSC {:.3}", report.mean_dsc);
    Ok(report.mean_dsc)
}

fn main() -> Result<(), Box<dyn Error>> {
    run(false).map(|_| ())
}
