//! The generative half of LSTM-DG: next-step prediction error on held-out
//! subjects against the zero (mean) and persistence predictors.
//!
//! `cargo run --release --example next_step_prediction`

use std::error::Error;

use dglstm::data::{make_windows, synth_generate, SynthConfig, WindowSample};
use dglstm::model::{Batch, Variant};
use dglstm::training::{grouped_kfold, train, TrainConfig};

pub fn run(quick: bool) -> Result<f64, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 20, length: 40, ..SynthConfig::default() } } else { SynthConfig::default() };
    let (subjects, _) = synth_generate(&synth)?;
    let cfg = TrainConfig {
        variant: Variant::Dg,
        k1: Some(16),
        k2: 4,
        window: if quick { 10 } else { 30 },
        max_epochs: if quick { 2 } else { 100 },
        ..TrainConfig::default()
    };
    let fold = &grouped_kfold(subjects.len(), 10, 0)?[0];
    let windows = |idx: &[usize]| -> dglstm::Result<Vec<WindowSample>> {
        let mut out = Vec::new();
        for &i in idx {
            out.extend(make_windows(&subjects[i], cfg.window, true)?);
        }
        Ok(out)
    };
    let test = windows(&fold.test)?;
    let model = train(cfg.build_model(synth.rois)?, &windows(&fold.train)?, &windows(&fold.val)?, &cfg)?.params;

    let refs: Vec<&WindowSample> = test.iter().collect();
    let learned = model.batch_loss(&Batch::from_windows(&refs)?, cfg.lambda, None)?.generative;
    let mut zero = 0.0;
    let mut persistence = 0.0;
    for w in &test {
        let target = w.target.as_ref().expect("windows made with targets");
        let last = w.x.row(w.x.rows() - 1);
        let r = target.len() as f64;
        zero += target.iter().map(|v| v * v).sum::<f64>() / r;
        persistence += target.iter().zip(last).map(|(v, l)| (v - l) * (v - l)).sum::<f64>() / r;
    }
    let n = test.len() as f64;
    println!("next-step MSE on {} held-out windows", test.len());
    println!("  LSTM-DG      {learned:.4}");
    println!("  zero         {:.4}", zero / n);
    println!("  persistence  {:.4}", persistence / n);
    Ok(learned)
}

fn main() -> Result<(), Box<dyn Error>> {
    run(false).map(|_| ())
}
