//! Generate a planted-community dataset and write it as CSV plus manifest.
//!
//! `cargo run --release --example generate_synthetic -- [OUT_DIR]`

use std::error::Error;
use std::path::PathBuf;

use dglstm::cli::{cmd_synth, RunConfig};
use dglstm::data::{load_dataset, make_windows, SynthConfig};

pub fn run(quick: bool, out: PathBuf) -> Result<usize, Box<dyn Error>> {
    let synth = if quick { SynthConfig { n_subjects: 6, length: 40, ..SynthConfig::default() } } else { SynthConfig::default() };
    let cfg = RunConfig { out, synth, ..RunConfig::default() }.resolve()?;
    let written = cmd_synth(&cfg)?;

    let positives = written.subjects.iter().filter(|s| s.label == 1).count();
    println!("{} subjects ({positives} positive) in {}", written.subjects.len(), written.manifest.display());
    for (k, c) in written.truth.communities.communities.iter().enumerate() {
        let tag = if written.truth.discriminative_communities.contains(&k) { " (discriminative)" } else { "" };
        println!("planted community {k}{tag}: ROIs {:?}", c.members);
    }

    let reloaded = load_dataset(&written.manifest)?;
    let window = cfg.train.window;
    let mut windows = 0;
    for s in &reloaded {
        windows += make_windows(s, window, true)?.len();
    }
    println!("{windows} training windows of length {window} after reloading");
    Ok(reloaded.len())
}

fn main() -> Result<(), Box<dyn Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/synthetic"));
    run(false, out).map(|_| ())
}
