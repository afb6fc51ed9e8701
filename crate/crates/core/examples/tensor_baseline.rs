//! Community detection baseline: non-negative symmetric PARAFAC of the
//! stacked correlation matrices of every window.
//!
//! `cargo run --release --example tensor_baseline`

use std::error::Error;

use dglstm::communities::{build_tensor, extract_communities, nn_parafac_symmetric, robustness, ParafacConfig, Source};
use dglstm::data::{synth_generate, window_series, SynthConfig, DEFAULT_WINDOW};

pub fn run(quick: bool) -> Result<f64, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 10, length: 40, ..SynthConfig::default() } } else { SynthConfig::default() };
    let (subjects, truth) = synth_generate(&synth)?;
    let tensor = build_tensor(&window_series(&subjects, if quick { 10 } else { DEFAULT_WINDOW })?)?;
    println!("tensor {} x {} x {}", tensor.rois(), tensor.rois(), tensor.slices());

    let cfg = ParafacConfig { components: synth.communities, max_sweeps: if quick { 20 } else { 500 }, ..ParafacConfig::default() };
    let result = nn_parafac_symmetric(&tensor, &cfg)?;
    println!("fit {:.4} after {} sweeps (converged: {})", result.fit, result.sweeps, result.converged);
    assert!(result.fit_history.windows(2).all(|w| w[1] >= w[0] - 1e-10), "fit must not decrease");

    let found = extract_communities(&result.a, Source::Cd)?;
    for (k, c) in found.communities.iter().enumerate() {
        println!("component {k}: ROIs {:?}", c.members);
    }
    let report = robustness(&truth.communities, &found)?;
    println!("mean best-match DSC against planted {:.3}", report.mean_dsc);
    Ok(result.fit)
}

fn main() -> Result<(), Box<dyn Error>> {
    run(false).map(|_| ())
}
