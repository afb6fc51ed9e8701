use std::collections::BTreeMap;

use super::*;
use crate::model::names;

fn tiny_synth(out: &Path, seed: u64) -> RunConfig {
    RunConfig {
        seed,
        out: out.to_path_buf(),
        synth: SynthConfig { n_subjects: 8, rois: 6, length: 24, communities: 2, ..SynthConfig::default() },
        ..RunConfig::default()
    }
    .resolve()
    .unwrap()
}

fn tiny_train() -> TrainConfig {
    TrainConfig {
        k1: Some(4),
        k2: 3,
        window: 8,
        batch_size: 16,
        max_epochs: 2,
        patience: 2,
        learning_rate: 5e-3,
        ..TrainConfig::default()
    }
}

/// Every file under `dir` with its bytes.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn args(list: &[&str]) -> Vec<String> {
    std::iter::once("dglstm").chain(list.iter().copied()).map(String::from).collect()
}

#[test]
fn synth_is_byte_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    cmd_synth(&tiny_synth(&a, 3)).unwrap();
    cmd_synth(&tiny_synth(&b, 3)).unwrap();
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert_eq!(sa.len(), 8 + 3);
    // run_config.json names the output directory, which differs
    let strip = |m: BTreeMap<PathBuf, Vec<u8>>| m.into_iter().filter(|(p, _)| p != Path::new("run_config.json")).collect::<Vec<_>>();
    assert_eq!(strip(sa), strip(sb));

    let loaded = load_dataset(a.join("manifest.json")).unwrap();
    assert_eq!(loaded.len(), 8);
    let planted: crate::data::PlantedTruth = read_json(&a.join("planted.json")).unwrap();
    assert_eq!(planted.communities.len(), 2);
}

#[test]
fn synth_defaults_and_config_errors() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("d");
    assert_eq!(run(args(&["synth", "--out", out.to_str().unwrap()])), 0);
    let csvs = fs::read_dir(out.join("subjects")).unwrap().count();
    assert_eq!(csvs, 200);

    let bad = root.path().join("bad");
    let code = run(args(&["synth", "--rois", "3", "--communities", "5", "--out", bad.to_str().unwrap()]));
    assert_eq!(code, 2);
}

#[test]
fn config_file_and_flag_precedence() {
    let root = tempfile::tempdir().unwrap();
    let cfg_path = root.path().join("run.json");
    fs::write(&cfg_path, r#"{"seed": 4, "train": {"variant": "h", "lambda": 0.5}, "folds": 3}"#).unwrap();
    let cli = Cli::try_parse_from(args(&["--config", cfg_path.to_str().unwrap(), "--lambda", "0.2", "crossval"])).unwrap();
    let cfg = resolve_config(&cli).unwrap();
    assert_eq!(cfg.seed, 4);
    assert_eq!(cfg.train.seed, 4);
    assert_eq!(cfg.synth.seed, 4);
    assert_eq!(cfg.train.variant, Variant::H);
    assert_eq!(cfg.train.lambda, 0.2);
    assert_eq!(cfg.folds, 3);
    assert_eq!(cfg.train.k1, Some(50));

    fs::write(&cfg_path, r#"{"sed": 4}"#).unwrap();
    let cli = Cli::try_parse_from(args(&["--config", cfg_path.to_str().unwrap(), "crossval"])).unwrap();
    assert!(matches!(resolve_config(&cli), Err(Error::Config(_))));
}

#[test]
fn exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().to_str().unwrap();
    assert_eq!(run(args(&["--bogus"])), 2);
    assert_eq!(run(args(&["crossval", "--out", out])), 2);
    assert_eq!(run(args(&["crossval", "--data", "/nonexistent/manifest.json", "--out", out])), 3);
    assert_eq!(run(args(&["--variant", "q", "synth"])), 2);
    assert_eq!(run(args(&["--help"])), 0);
}

#[test]
fn tiny_crossval_is_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    let synth = cmd_synth(&tiny_synth(&data, 1)).unwrap();
    let run_cv = |dir: &str| {
        let cfg = RunConfig {
            out: root.path().join(dir),
            data: Some(synth.manifest.clone()),
            train: tiny_train(),
            folds: 2,
            ..RunConfig::default()
        }
        .resolve()
        .unwrap();
        cmd_crossval(&cfg).unwrap()
    };
    let report = run_cv("cv1");
    assert_eq!(report.folds.len(), 2);
    let mean = report.folds.iter().map(|f| f.metrics.acc).sum::<f64>() / 2.0;
    assert!((report.summary.acc.mean - mean).abs() < 1e-12);
    run_cv("cv2");
    let (a, b) = (snapshot(&root.path().join("cv1")), snapshot(&root.path().join("cv2")));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        if k != Path::new("run_config.json") {
            assert_eq!(v, &b[k], "{}", k.display());
        }
    }
    assert!(a.contains_key(Path::new("folds/fold_01.json")));
    assert!(a.contains_key(Path::new("models/fold_00.model")));
    assert!(a.contains_key(Path::new("cv_summary.csv")));

    // communities from a fold model
    let out = cmd_communities(
        &root.path().join("cv1/models/fold_00.model"),
        &RunConfig { out: root.path().join("comm"), ..RunConfig::default() },
    )
    .unwrap();
    assert_eq!(out.communities.len(), 4);
    assert_eq!(out.influence.ranking.len(), 4);
    assert_eq!(out.communities.rois, 6);
}

#[test]
fn communities_of_zero_dense_layer_are_degenerate() {
    let root = tempfile::tempdir().unwrap();
    let mut m = ModelParams::build(Variant::Dg, 6, 5, 3, 0.5, 0).unwrap();
    m.params.get_mut(names::GEN_W).unwrap().data_mut().fill(0.0);
    let path = root.path().join("m.model");
    save_params(&m, &path).unwrap();
    let out = cmd_communities(&path, &RunConfig { out: root.path().join("o"), ..RunConfig::default() }).unwrap();
    assert!(out.communities.communities.iter().all(|c| c.degenerate));

    let d = ModelParams::build(Variant::D, 6, 5, 3, 0.5, 0).unwrap();
    save_params(&d, &path).unwrap();
    let code = run(args(&["communities", "--model", path.to_str().unwrap(), "--out", root.path().to_str().unwrap()]));
    assert_eq!(code, 2);
}

#[test]
fn cd_baseline_round_trip_and_errors() {
    let root = tempfile::tempdir().unwrap();
    let synth = cmd_synth(&tiny_synth(&root.path().join("data"), 2)).unwrap();
    let mut cfg = RunConfig { out: root.path().join("cd"), data: Some(synth.manifest.clone()), ..RunConfig::default() };
    cfg.parafac.components = 2;
    cfg.train.window = 10;
    let (set, summary) = cmd_cd_baseline(&cfg).unwrap();
    let back: CommunitySet = read_json(&root.path().join("cd/communities.json")).unwrap();
    assert_eq!(back, set);
    assert!(summary.fit > 0.0 && summary.fit <= 1.0);
    assert_eq!(set.source, Source::Cd);

    cfg.parafac.components = 0;
    assert!(matches!(cmd_cd_baseline(&cfg), Err(Error::Config(_))));
    let code = run(args(&["cd-baseline", "--data", synth.manifest.to_str().unwrap(), "--k", "0", "--out", root.path().to_str().unwrap()]));
    assert_eq!(code, 2);
}

#[test]
fn robustness_command() {
    let root = tempfile::tempdir().unwrap();
    let w = Matrix::from_fn(6, 3, |r, k| if r % 3 == k { 1.0 + r as f64 * 0.1 } else { 0.05 * r as f64 }).unwrap();
    let set = extract_communities(&w, Source::Lstm).unwrap();
    let a = root.path().join("a.json");
    write_json(&a, &set).unwrap();
    let cfg = RunConfig { out: root.path().join("r"), ..RunConfig::default() };
    let r = cmd_robustness(&a, &a, &cfg).unwrap();
    assert_eq!(r.mean_correlation, Some(1.0));
    assert_eq!(r.mean_dsc, 1.0);
    let csv = fs::read_to_string(root.path().join("r/robustness.csv")).unwrap();
    assert!(csv.starts_with("set,community,size,best_correlation,best_dsc"));
    assert!(r.per_community.iter().all(|m| m.size > 0 && m.best_correlation.is_some()));

    let other = extract_communities(&Matrix::from_fn(7, 2, |r, _| r as f64).unwrap(), Source::Cd).unwrap();
    let b = root.path().join("b.json");
    write_json(&b, &other).unwrap();
    assert!(matches!(cmd_robustness(&a, &b, &cfg), Err(Error::Data(_))));
}

#[test]
fn gradcheck_pass_and_corrupt_fail() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().to_str().unwrap();
    assert_eq!(run(args(&["gradcheck", "--out", out])), 0);
    assert_eq!(run(args(&["--variant", "s", "gradcheck", "--out", out])), 0);
    assert_eq!(run(args(&["gradcheck", "--corrupt", "--out", out])), 1);
    let o: GradcheckOutcome = read_json(&root.path().join("gradcheck.json")).unwrap();
    assert!(!o.passed);
}

fn fake_report(accs: &[f64]) -> CvReport {
    let folds = accs
        .iter()
        .enumerate()
        .map(|(i, &acc)| crate::training::FoldReport {
            fold: i,
            train_subjects: vec![],
            val_subjects: vec![],
            test_subjects: vec![],
            subjects: vec![],
            metrics: crate::training::Metrics {
                acc,
                tpr: None,
                tnr: None,
                auc: None,
                true_positive: 0,
                false_negative: 0,
                true_negative: 0,
                false_positive: 0,
            },
            epochs_run: 1,
            best_epoch: 1,
            best_val_loss: 0.5,
            history: vec![],
        })
        .collect();
    CvReport {
        variant: Variant::Dg,
        config: CvConfig::default(),
        folds,
        summary: crate::training::CvSummary {
            acc: crate::training::MeanStd::of(accs).unwrap(),
            tpr: None,
            tnr: None,
            auc_fold_mean: None,
            auc_pooled: None,
            epochs_run: crate::training::MeanStd::of(&[1.0]).unwrap(),
        },
    }
}

#[test]
fn ttest_command_paths() {
    let root = tempfile::tempdir().unwrap();
    let cfg = RunConfig { out: root.path().join("t"), ..RunConfig::default() };
    let p = |name: &str, accs: &[f64]| {
        let path = root.path().join(name);
        write_json(&path, &fake_report(accs)).unwrap();
        path
    };
    let a = p("a.json", &[0.7, 0.8, 0.75, 0.9]);
    let same = p("same.json", &[0.7, 0.8, 0.75, 0.9]);
    let shifted = p("shift.json", &[0.6, 0.7, 0.65, 0.8]);
    let worse = p("worse.json", &[0.6, 0.75, 0.7, 0.7]);
    assert!(matches!(cmd_ttest(&a, &same, "acc", &cfg), Err(Error::Degenerate(_))));
    assert!(matches!(cmd_ttest(&a, &shifted, "acc", &cfg), Err(Error::Degenerate(_))));
    let o = cmd_ttest(&a, &worse, "acc", &cfg).unwrap();
    assert!(o.test.t.is_finite() && o.test.t > 0.0 && o.test.p < 0.5);
    assert!(matches!(cmd_ttest(&a, &worse, "auc", &cfg), Err(Error::Degenerate(_))));
    assert!(matches!(cmd_ttest(&a, &worse, "f1", &cfg), Err(Error::Usage(_))));
}
