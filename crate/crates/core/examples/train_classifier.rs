//! Train LSTM-DG on one subject-grouped split, classify held-out subjects
//! by window vote and round-trip the model through its binary format.
//!
//! `cargo run --release --example train_classifier`

use std::error::Error;

use dglstm::data::{make_windows, synth_generate, SubjectRecord, SynthConfig, WindowSample};
use dglstm::model::{load_params, save_params, Variant};
use dglstm::training::{evaluate_subjects, grouped_kfold, train, TrainConfig};

fn windows(subjects: &[&SubjectRecord], window: usize) -> dglstm::Result<Vec<WindowSample>> {
    let mut out = Vec::new();
    for s in subjects {
        out.extend(make_windows(s, window, true)?);
    }
    Ok(out)
}

pub fn run(quick: bool) -> Result<f64, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 20, length: 40, ..SynthConfig::default() } } else { SynthConfig::default() };
    let (subjects, _) = synth_generate(&synth)?;
    let cfg = TrainConfig {
        variant: Variant::Dg,
        k1: Some(16),
        k2: 4,
        max_epochs: if quick { 2 } else { 100 },
        window: if quick { 10 } else { 30 },
        ..TrainConfig::default()
    };

    let fold = &grouped_kfold(subjects.len(), 10, 0)?[0];
    let pick = |idx: &[usize]| idx.iter().map(|&i| &subjects[i]).collect::<Vec<_>>();
    let (train_set, val_set, test_set) = (pick(&fold.train), pick(&fold.val), pick(&fold.test));
    println!("{} training, {} validation, {} test subjects", train_set.len(), val_set.len(), test_set.len());

    let model = cfg.build_model(synth.rois)?;
    println!("{} with {} parameters", model.variant, model.num_params());
    let outcome = train(model, &windows(&train_set, cfg.window)?, &windows(&val_set, cfg.window)?, &cfg)?;
    for e in &outcome.history {
        println!("epoch {:3}  train {:.4}  val {:.4}", e.epoch, e.train_loss, e.val_loss);
    }
    println!("best epoch {} (validation loss {:.4})", outcome.best_epoch, outcome.best_val_loss);

    let eval = evaluate_subjects(&outcome.params, &test_set, cfg.window)?;
    for s in &eval.subjects {
        println!("{}  label {}  score {:.3}  ({} windows)", s.subject_id, s.label, s.score, s.windows);
    }
    println!("test ACC {:.3}  AUC {}", eval.metrics.acc, eval.metrics.auc.map_or("n/a".into(), |a| format!("{a:.3}")));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("dg.model");
    save_params(&outcome.params, &path)?;
    let reloaded = load_params(&path)?;
    let again = evaluate_subjects(&reloaded, &test_set, cfg.window)?;
    assert_eq!(again.subjects, eval.subjects, "reloaded model must predict identically");
    println!("model reloaded from {} with identical predictions", path.display());
    Ok(eval.metrics.acc)
}

fn main() -> Result<(), Box<dyn Error>> {
    run(false).map(|_| ())
}
