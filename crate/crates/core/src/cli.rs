//! Command-line front end.
//!
//! Every command resolves one [`RunConfig`] (JSON file, then flag
//! overrides), writes it to `run_config.json` in the output directory and
//! then writes its results as JSON/CSV next to it. Outputs carry no
//! timestamps, so identical configurations reproduce identical files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::communities::{
    build_tensor, extract_communities, nn_parafac_symmetric, robustness, CommunitySet, ParafacConfig, RobustnessReport,
    Source,
};
use crate::data::{load_dataset, synth_generate, window_series, write_series_csv, ManifestEntry, SubjectRecord, SynthConfig, WindowSample};
use crate::error::{Error, Result};
use crate::model::{load_params, save_params, Batch, Influence, ModelParams, Variant};
use crate::numeric::gradcheck::{grad_check, GradCheckReport};
use crate::numeric::matrix::Matrix;
use crate::numeric::params::ParamSet;
use crate::numeric::rng::derived_rng;
use crate::training::{cross_validate, paired_ttest_one_tailed, CvConfig, CvReport, TTest, TrainConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative error below which a gradient check passes.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Finite-difference step of the gradient check.
pub const GRADCHECK_EPS: f64 = 1e-5;

/// Fully resolved settings of one command.
///
/// The top-level `seed` drives every random stream; `seed` fields inside
/// the nested sections are overwritten by it during resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Dataset manifest.
    pub data: Option<PathBuf>,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub folds: usize,
    pub jobs: usize,
    pub parafac: ParafacConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            data: None,
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            folds: 10,
            jobs: 1,
            parafac: ParafacConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a JSON configuration file; unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Propagates the seed and makes defaulted layer sizes explicit.
    pub fn resolve(mut self) -> Result<Self> {
        self.synth.seed = self.seed;
        self.train.seed = self.seed;
        self.parafac.seed = self.seed;
        self.train = self.train.resolved();
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(self)
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig { train: self.train.clone(), folds: self.folds, jobs: self.jobs }
    }

    fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().ok_or_else(|| Error::Config("no dataset manifest given (--data or \"data\")".into()))
    }
}

/// Contents of `run_config.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    /// Command-specific input paths and options.
    pub inputs: serde_json::Value,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn record_run(cfg: &RunConfig, command: &str, inputs: serde_json::Value) -> Result<()> {
    let record = RunRecord {
        tool: "dglstm".into(),
        version: VERSION.into(),
        command: command.into(),
        config: cfg.clone(),
        inputs,
    };
    write_json(&cfg.out.join("run_config.json"), &record)
}

// ---- commands --------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub manifest: PathBuf,
    pub subjects: Vec<SubjectRecord>,
    pub truth: crate::data::PlantedTruth,
}

/// Writes a synthetic dataset: `subjects/<id>.csv`, `manifest.json` and the
/// planted ground truth `planted.json`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthOutput> {
    let (subjects, truth) = synth_generate(&cfg.synth)?;
    record_run(cfg, "synth", serde_json::json!({}))?;
    let mut manifest = Vec::with_capacity(subjects.len());
    for s in &subjects {
        let rel = PathBuf::from("subjects").join(format!("{}.csv", s.subject_id));
        let path = cfg.out.join(&rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_series_csv(&path, &s.series)?;
        manifest.push(ManifestEntry {
            subject_id: s.subject_id.clone(),
            site: s.site.clone(),
            label: i64::from(s.label),
            csv_path: rel,
        });
    }
    let manifest_path = cfg.out.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    write_json(&cfg.out.join("planted.json"), &truth)?;
    Ok(SynthOutput { manifest: manifest_path, subjects, truth })
}

/// Runs grouped k-fold cross-validation on the manifest in `cfg.data` and
/// writes `cv_report.json`, `cv_summary.csv`, `cv_folds.csv`,
/// `folds/fold_NN.json` and the best model of every fold under `models/`.
pub fn cmd_crossval(cfg: &RunConfig) -> Result<CvReport> {
    let manifest = cfg.data_path()?;
    let subjects = load_dataset(manifest)?;
    let cv = cfg.cv_config();
    cv.train.validate()?;
    record_run(cfg, "crossval", serde_json::json!({ "data": manifest }))?;
    let (report, models) = cross_validate(&subjects, &cv)?;
    for (fold, model) in report.folds.iter().zip(&models) {
        write_json(&cfg.out.join("folds").join(format!("fold_{:02}.json", fold.fold)), fold)?;
        let path = cfg.out.join("models").join(format!("fold_{:02}.model", fold.fold));
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        save_params(model, &path)?;
    }
    write_json(&cfg.out.join("cv_report.json"), &report)?;
    write_bytes(&cfg.out.join("cv_summary.csv"), report.summary_csv().as_bytes())?;
    write_bytes(&cfg.out.join("cv_folds.csv"), report.folds_csv().as_bytes())?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityOutput {
    pub communities: CommunitySet,
    pub influence: Influence,
}

/// Communities from a trained generative model's dense weights
/// (`communities.json`) and the discriminative influence of each
/// (`influence.json`).
pub fn cmd_communities(model_path: &Path, cfg: &RunConfig) -> Result<CommunityOutput> {
    let model = load_params(model_path)?;
    let (w, _) = model
        .generative_weights()
        .ok_or_else(|| Error::Usage(format!("{} has no generative layer to read communities from", model.variant)))?;
    let influence = model.community_influence()?;
    let communities = extract_communities(w, Source::Lstm)?;
    record_run(cfg, "communities", serde_json::json!({ "model": model_path }))?;
    write_json(&cfg.out.join("communities.json"), &communities)?;
    write_json(&cfg.out.join("influence.json"), &influence)?;
    Ok(CommunityOutput { communities, influence })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdSummary {
    pub components: usize,
    pub fit: f64,
    pub fit_history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Tensor-decomposition baseline on the correlation matrices of every
/// length-`train.window` slice of `cfg.data`. Writes `communities.json` and
/// `parafac.json`.
pub fn cmd_cd_baseline(cfg: &RunConfig) -> Result<(CommunitySet, CdSummary)> {
    if cfg.parafac.components == 0 {
        return Err(Error::Config("the decomposition needs at least one component".into()));
    }
    let manifest = cfg.data_path()?;
    let subjects = load_dataset(manifest)?;
    record_run(cfg, "cd-baseline", serde_json::json!({ "data": manifest }))?;
    let tensor = build_tensor(&window_series(&subjects, cfg.train.window)?)?;
    let result = nn_parafac_symmetric(&tensor, &cfg.parafac)?;
    let set = extract_communities(&result.a, Source::Cd)?;
    let summary = CdSummary {
        components: cfg.parafac.components,
        fit: result.fit,
        fit_history: result.fit_history,
        sweeps: result.sweeps,
        converged: result.converged,
    };
    write_json(&cfg.out.join("communities.json"), &set)?;
    write_json(&cfg.out.join("parafac.json"), &summary)?;
    Ok((set, summary))
}

/// Compares two community-set files; writes `robustness.json` and
/// `robustness.csv`.
pub fn cmd_robustness(reference: &Path, other: &Path, cfg: &RunConfig) -> Result<RobustnessReport> {
    let a: CommunitySet = read_json(reference)?;
    let b: CommunitySet = read_json(other)?;
    let report = robustness(&a, &b)?;
    record_run(cfg, "robustness", serde_json::json!({ "reference": reference, "other": other }))?;
    write_json(&cfg.out.join("robustness.json"), &report)?;
    write_bytes(&cfg.out.join("robustness.csv"), report.to_csv().as_bytes())?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOptions {
    pub variant: Variant,
    pub rois: usize,
    pub k1: usize,
    pub k2: usize,
    pub steps: usize,
    pub batch: usize,
    pub lambda: f64,
    /// Perturb one analytic gradient entry so the check must fail.
    pub corrupt: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions { variant: Variant::Dg, rois: 5, k1: 4, k2: 3, steps: 7, batch: 2, lambda: 0.1, corrupt: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckOutcome {
    pub options: GradcheckOptions,
    pub passed: bool,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub entries_checked: usize,
}

/// Central-difference check of the analytic joint-loss gradient on a
/// freshly initialized model (dropout off) and a random batch.
pub fn gradcheck(opts: &GradcheckOptions, seed: u64) -> Result<GradcheckOutcome> {
    let model = ModelParams::build(opts.variant, opts.rois, opts.k1, opts.k2, 0.0, seed)?;
    let mut rng = derived_rng(seed, &[0x6763]);
    let windows: Vec<WindowSample> = (0..opts.batch)
        .map(|i| {
            let x = Matrix::from_fn(opts.steps, opts.rois, |_, _| rng.random_range(-1.5..1.5))?;
            Ok(WindowSample {
                x,
                target: Some((0..opts.rois).map(|_| rng.random_range(-1.5..1.5)).collect()),
                label: (i % 2) as u8,
                subject_id: format!("g{i}"),
            })
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&WindowSample> = windows.iter().collect();
    let batch = Batch::from_windows(&refs)?;
    let (_, mut grads) = model.loss_and_grad(&batch, opts.lambda, None)?;
    if opts.corrupt {
        let first = grads.iter_mut().next().expect("models have parameters");
        let v = first.value.data_mut();
        v[0] = v[0] * 1.5 + 1e-3;
    }
    let report: GradCheckReport = grad_check(
        |p: &ParamSet| {
            let probe = ModelParams { params: p.clone(), ..model.clone() };
            Ok(probe.batch_loss(&batch, opts.lambda, None)?.total)
        },
        &model.params,
        &grads,
        GRADCHECK_EPS,
    )?;
    Ok(GradcheckOutcome {
        options: opts.clone(),
        passed: report.max_rel_error < GRADCHECK_TOLERANCE,
        tolerance: GRADCHECK_TOLERANCE,
        max_rel_error: report.max_rel_error,
        worst_param: report.worst_param,
        worst_index: report.worst_index,
        entries_checked: report.entries_checked,
    })
}

/// [`gradcheck`] writing `gradcheck.json`.
pub fn cmd_gradcheck(opts: &GradcheckOptions, cfg: &RunConfig) -> Result<GradcheckOutcome> {
    record_run(cfg, "gradcheck", serde_json::to_value(opts).expect("plain struct"))?;
    let outcome = gradcheck(opts, cfg.seed)?;
    write_json(&cfg.out.join("gradcheck.json"), &outcome)?;
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestOutput {
    pub metric: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub test: TTest,
}

/// Paired one-tailed t-test of `a > b` on per-fold values of `metric` read
/// from two `cv_report.json` files. Writes `ttest.json`.
pub fn cmd_ttest(report_a: &Path, report_b: &Path, metric: &str, cfg: &RunConfig) -> Result<TTestOutput> {
    let a: CvReport = read_json(report_a)?;
    let b: CvReport = read_json(report_b)?;
    let va = a.fold_values(metric)?;
    let vb = b.fold_values(metric)?;
    let test = paired_ttest_one_tailed(&va, &vb)?;
    record_run(cfg, "ttest", serde_json::json!({ "a": report_a, "b": report_b, "metric": metric }))?;
    let out = TTestOutput { metric: metric.into(), a: va, b: vb, test };
    write_json(&cfg.out.join("ttest.json"), &out)?;
    Ok(out)
}

// ---- argument parsing ------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "dglstm", version, about = "Joint discriminative-generative LSTM toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides applied on top of the `--config` file.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// dg, h, d or s.
    #[arg(long, global = true)]
    pub variant: Option<Variant>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub window: Option<usize>,
    #[arg(long, global = true)]
    pub k1: Option<usize>,
    #[arg(long, global = true)]
    pub k2: Option<usize>,
    /// Folds trained concurrently.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with planted communities.
    Synth {
        #[arg(long)]
        n_subjects: Option<usize>,
        #[arg(long)]
        rois: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long)]
        overlap: Option<f64>,
        #[arg(long)]
        coupling: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Subject-grouped k-fold cross-validation.
    Crossval {
        /// Dataset manifest.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        dropout: Option<f64>,
    },
    /// Extract communities and influence scores from a trained model.
    Communities {
        #[arg(long)]
        model: PathBuf,
    },
    /// Tensor-decomposition community baseline.
    CdBaseline {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of components.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Best-match correlation and Dice overlap between two community sets.
    Robustness {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        other: PathBuf,
    },
    /// Finite-difference gradient check on a tiny model.
    Gradcheck {
        #[arg(long, default_value_t = 5)]
        rois: usize,
        #[arg(long, default_value_t = 7)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        batch: usize,
        /// Perturb the analytic gradient; the check must then fail.
        #[arg(long)]
        corrupt: bool,
    },
    /// Paired one-tailed t-test between two cross-validation reports.
    Ttest {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "acc")]
        metric: String,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Builds the resolved configuration from the config file and all flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, g.seed);
    set(&mut cfg.train.variant, g.variant);
    set(&mut cfg.train.lambda, g.lambda);
    set(&mut cfg.train.window, g.window);
    if g.k1.is_some() {
        cfg.train.k1 = g.k1;
    }
    set(&mut cfg.train.k2, g.k2);
    set(&mut cfg.jobs, g.jobs);
    set(&mut cfg.out, g.out.clone());
    match &cli.command {
        Command::Synth { n_subjects, rois, length, communities, overlap, coupling, noise } => {
            let s = &mut cfg.synth;
            set(&mut s.n_subjects, *n_subjects);
            set(&mut s.rois, *rois);
            set(&mut s.length, *length);
            set(&mut s.communities, *communities);
            set(&mut s.overlap, *overlap);
            set(&mut s.coupling_diff, *coupling);
            set(&mut s.noise_sd, *noise);
        }
        Command::Crossval { data, folds, max_epochs, patience, batch_size, learning_rate, dropout } => {
            if data.is_some() {
                cfg.data = data.clone();
            }
            set(&mut cfg.folds, *folds);
            let t = &mut cfg.train;
            set(&mut t.max_epochs, *max_epochs);
            set(&mut t.patience, *patience);
            set(&mut t.batch_size, *batch_size);
            set(&mut t.learning_rate, *learning_rate);
            set(&mut t.dropout, *dropout);
        }
        Command::CdBaseline { data, k, max_sweeps, tol } => {
            if data.is_some() {
                cfg.data = data.clone();
            }
            set(&mut cfg.parafac.components, *k);
            set(&mut cfg.parafac.max_sweeps, *max_sweeps);
            set(&mut cfg.parafac.tol, *tol);
        }
        _ => {}
    }
    cfg.resolve()
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Synth { .. } => {
            let out = cmd_synth(&cfg)?;
            println!("wrote {} subjects to {}", out.subjects.len(), cfg.out.display());
        }
        Command::Crossval { .. } => {
            let r = cmd_crossval(&cfg)?;
            let s = &r.summary;
            println!("{} {}-fold ACC {:.4} ({:.4})", r.variant, r.folds.len(), s.acc.mean, s.acc.std);
            if let Some(a) = s.auc_pooled {
                println!("pooled AUC {a:.4}");
            }
        }
        Command::Communities { model } => {
            let out = cmd_communities(model, &cfg)?;
            println!("{} communities, sizes {:?}", out.communities.len(), out.communities.sizes());
        }
        Command::CdBaseline { .. } => {
            let (set, summary) = cmd_cd_baseline(&cfg)?;
            println!("fit {:.4} after {} sweeps, sizes {:?}", summary.fit, summary.sweeps, set.sizes());
        }
        Command::Robustness { reference, other } => {
            let r = cmd_robustness(reference, other, &cfg)?;
            let corr = r.mean_correlation.map_or("undefined".to_string(), |c| format!("{c:.4}"));
            println!("mean best correlation {corr}, mean best DSC {:.4}", r.mean_dsc);
        }
        Command::Gradcheck { rois, steps, batch, corrupt } => {
            let opts = GradcheckOptions {
                variant: cli.global.variant.unwrap_or(Variant::Dg),
                rois: *rois,
                k1: cli.global.k1.unwrap_or(4),
                k2: cli.global.k2.unwrap_or(3),
                steps: *steps,
                batch: *batch,
                lambda: cfg.train.lambda,
                corrupt: *corrupt,
            };
            let o = cmd_gradcheck(&opts, &cfg)?;
            let verdict = if o.passed { "PASS" } else { "FAIL" };
            println!("{verdict} {} max relative error {:.3e} ({} at {})", opts.variant, o.max_rel_error, o.worst_param, o.worst_index);
            return Ok(if o.passed { 0 } else { 1 });
        }
        Command::Ttest { a, b, metric } => {
            let o = cmd_ttest(a, b, metric, &cfg)?;
            println!("t = {:.4}, p = {:.4} (df {})", o.test.t, o.test.p, o.test.df);
        }
    }
    Ok(0)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests;
