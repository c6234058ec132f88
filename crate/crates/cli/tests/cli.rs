use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use hinbal::checkpoint::Checkpoint;
use hinbal::config::RunConfig;
use hinbal::dataset;
use hinbal::pipeline::{self, MetricsFile};
use hinbal::report::{self, Format};
use hinbal::sweep::{self, SweepRow};
use hinbal_core::bench::{generate, PlantedHinConfig};
use hinbal_core::metrics::mean_std;
use hinbal_core::train::run_experiment;
use tempfile::TempDir;

fn hinbal(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hinbal")).args(args).env("RUST_LOG", "warn").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn quick() -> RunConfig {
    RunConfig::parse("[train]\nepochs = 15\npatience = 0\n").unwrap()
}

#[test]
fn gen_then_train_writes_metrics() {
    let dir = TempDir::new().unwrap();
    let (d, r) = (dir.path().join("d"), dir.path().join("r"));
    assert_eq!(hinbal(&["gen", "--preset", "tiny", "--out", p(&d)]).0, 0);
    let (code, err) = hinbal(&["train", "--data", p(&d), "--config", "default", "--out", p(&r)]);
    assert_eq!(code, 0, "{err}");
    let m: MetricsFile = serde_json::from_str(&std::fs::read_to_string(r.join("metrics.json")).unwrap()).unwrap();
    assert!((0.0..=1.0).contains(&m.test.balanced_accuracy));
    for f in ["config.toml", "run.json", "train_log.jsonl", "checkpoint.json"] {
        assert!(r.join(f).exists(), "{f}");
    }
    let run: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(r.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["version"], hinbal_core::VERSION);
    let log = std::fs::read_to_string(r.join("train_log.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    for k in ["epoch", "cla", "sem", "pro", "total", "val_macro_f1"] {
        assert!(first.get(k).is_some(), "{k}");
    }

    let e = dir.path().join("e");
    assert_eq!(hinbal(&["eval", "--data", p(&d), "--checkpoint", p(&r.join("checkpoint.json")), "--out", p(&e)]).0, 0);
    let ev: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(e.join("eval.json")).unwrap()).unwrap();
    assert_eq!(ev["test"]["balanced_accuracy"].as_f64().unwrap(), m.test.balanced_accuracy);
}

#[test]
fn malformed_edge_file_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    pipeline::gen("tiny", None, &d).unwrap();
    let edges = dataset::edge_path(&d, "paper-venue");
    let mut text = std::fs::read_to_string(&edges).unwrap();
    text.push_str("3 1 7\n");
    let line = text.lines().count();
    std::fs::write(&edges, text).unwrap();
    let (code, err) = hinbal(&["train", "--data", p(&d), "--out", p(&dir.path().join("r"))]);
    assert_eq!(code, 2);
    assert!(err.contains(&format!("paper-venue.txt:{line}")), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(hinbal(&["train", "--nope"]).0, 1);
    assert_eq!(hinbal(&["gen", "--preset", "huge", "--out", "x"]).0, 1);
    assert_eq!(hinbal(&["--help"]).0, 0);
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[train]\nlearning_rate = 0.1\n").unwrap();
    let d = dir.path().join("d");
    pipeline::gen("tiny", None, &d).unwrap();
    let (code, err) = hinbal(&["train", "--data", p(&d), "--config", p(&cfg), "--out", p(&dir.path().join("r"))]);
    assert_eq!(code, 1);
    assert!(err.contains("learning_rate"), "{err}");
}

#[test]
fn help_documents_every_subcommand() {
    for sub in ["gen", "ingest", "influence", "augment", "train", "eval", "sweep", "report"] {
        let out = Command::new(env!("CARGO_BIN_EXE_hinbal")).args([sub, "--help"]).output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("--seed") && text.contains("--config") && text.contains("--out"), "{sub}");
    }
}

#[test]
fn dataset_round_trips_bit_exactly() {
    let planted = generate(&PlantedHinConfig::tiny()).unwrap();
    let dir = TempDir::new().unwrap();
    dataset::save(dir.path(), &planted.graph, &planted.labels, true).unwrap();
    let ds = dataset::load(dir.path()).unwrap();
    assert!(ds.has_splits);
    assert_eq!(ds.graph, planted.graph);
    assert_eq!(ds.labels, planted.labels);
}

#[test]
fn attribute_row_width_mismatch_is_reported_by_line() {
    let dir = TempDir::new().unwrap();
    pipeline::gen("tiny", None, dir.path()).unwrap();
    let path = dataset::attr_path(dir.path(), "author");
    let mut lines: Vec<String> = std::fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[4].push_str(" 1.5");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let err = dataset::load(dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("author.txt:5: expected 3 values, found 4"), "{err}");
}

#[test]
fn missing_splits_are_built_from_config() {
    let dir = TempDir::new().unwrap();
    pipeline::gen("desk", None, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("splits.txt")).unwrap();
    let out = dir.path().join("i");
    let s = pipeline::ingest(dir.path(), &RunConfig::default(), &out).unwrap();
    assert!(s.split_built);
    assert_eq!(s.train_counts, vec![24, 24, 2, 2]);
    assert!(dataset::load(&out).unwrap().has_splits);
}

#[test]
fn augment_appends_synthetic_nodes_with_manifest() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    pipeline::gen("tiny", None, &d).unwrap();
    let (a, dump) = (dir.path().join("a"), dir.path().join("dump"));
    let m = pipeline::augment_cmd(&d, &RunConfig::default(), &a, Some(&dump)).unwrap();
    let orig = dataset::load(&d).unwrap();
    let aug = dataset::load(&a).unwrap();
    assert_eq!(m.first_id, orig.labels.len());
    assert_eq!(aug.labels.len(), m.first_id + m.count);
    for n in &m.nodes {
        assert!(aug.labels.train[n.id]);
        assert_eq!(aug.labels.labels[n.id], Some(n.class));
    }
    assert!(dump.join("class1_paper-author.scores.txt").exists());
    assert!(dump.join("class1_paper-venue.candidates.txt").exists());
}

#[test]
fn checkpoint_rejects_a_mismatched_graph() {
    let dir = TempDir::new().unwrap();
    let (d, r) = (dir.path().join("d"), dir.path().join("r"));
    pipeline::gen("tiny", None, &d).unwrap();
    pipeline::train(&d, &quick(), &r).unwrap();
    let ck = Checkpoint::load(&r.join("checkpoint.json")).unwrap();
    let ds = dataset::load(&d).unwrap();
    ck.check(&ds.graph, &ds.labels).unwrap();

    let other = dir.path().join("o");
    pipeline::gen("desk", None, &other).unwrap();
    let err = pipeline::eval(&other, &r.join("checkpoint.json"), &dir.path().join("e")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn runs_are_idempotent() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    pipeline::gen("tiny", Some(3), &d).unwrap();
    let cfg = quick();
    for sub in ["a", "b"] {
        pipeline::train(&d, &cfg, &dir.path().join(sub)).unwrap();
    }
    for f in ["metrics.json", "train_log.jsonl", "checkpoint.json", "config.toml", "run.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn config_round_trips_and_hash_ignores_seed() {
    let cfg = RunConfig::parse(
        "[train]\nseed = 4\n[train.synthesis]\nmu = \"ALL\"\nselection = \"uniform\"\n[train.loss]\ntemperature = 0.5\n",
    )
    .unwrap();
    let back = RunConfig::parse(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
    let mut other = cfg.clone();
    other.train.seed = 9;
    assert_eq!(other.hash(), cfg.hash());
    other.train.loss.temperature = 2.0;
    assert_ne!(other.hash(), cfg.hash());
    assert!(RunConfig::parse("[train]\nepochs = 0\n").is_err());
}

#[test]
fn meta_paths_resolve_by_relation_name() {
    let planted = generate(&PlantedHinConfig::tiny()).unwrap();
    let cfg = RunConfig::parse("[meta_paths]\npaper-author = [[\"paper-author\"], [\"paper-venue\", \"~paper-venue\", \"paper-author\"]]\n")
        .unwrap();
    let paths = cfg.resolve_paths(&planted.graph).unwrap();
    assert_eq!(paths.values().next().unwrap().len(), 2);
    let bad = RunConfig::parse("[meta_paths]\npaper-author = [[\"paper-venue\", \"paper-author\"]]\n").unwrap();
    assert!(bad.resolve_paths(&planted.graph).is_err());
}

#[test]
fn one_point_sweep_matches_a_single_run() {
    let planted = generate(&PlantedHinConfig::tiny()).unwrap();
    let ds = dataset::Dataset { graph: planted.graph.clone(), labels: planted.labels.clone(), has_splits: true };
    let cfg = quick();
    let rows = sweep::run_grid(&ds, &cfg);
    assert_eq!(rows.len(), 1);
    let e = run_experiment(&planted.graph, &planted.labels, &cfg.train, &BTreeMap::new()).unwrap();
    assert_eq!(rows[0].balanced_accuracy, Some(e.test.balanced_accuracy));
    assert_eq!(rows[0].macro_f1, Some(e.test.macro_f1));
    assert_eq!(rows[0].best_epoch, Some(e.best_epoch));
}

#[test]
fn grid_cardinality_and_aggregation() {
    let mut cfg = quick();
    cfg.sweep.temperature = vec![0.5, 2.0];
    cfg.sweep.lambda1 = vec![0.1, 1.0];
    cfg.sweep.seeds = vec![0, 1];
    assert_eq!(sweep::points(&cfg).len(), 8);
    sweep::apply_preset(&mut cfg, "mu").unwrap();
    cfg.sweep.temperature.clear();
    cfg.sweep.lambda1.clear();
    assert_eq!(sweep::points(&cfg).len(), 8 * 2);

    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    pipeline::gen("tiny", None, &d).unwrap();
    let mut cfg = quick();
    cfg.sweep.lambda2 = vec![0.5, 1.5];
    cfg.sweep.seeds = vec![0, 1, 2];
    let rows = sweep::sweep(&d, &cfg, &dir.path().join("s")).unwrap();
    assert_eq!(rows.len(), 6);
    let back: Vec<SweepRow> = sweep::read_rows(&dir.path().join("s/results.csv")).unwrap();
    assert_eq!(back, rows);
    let groups = report::report(&[&dir.path().join("s/results.jsonl")], &["lambda2"], Format::Json, dir.path()).unwrap();
    assert_eq!(groups.len(), 2);
    for g in &groups {
        let vals: Vec<f64> =
            rows.iter().filter(|r| Some(r.lambda2) == g.lambda2).map(|r| r.balanced_accuracy.unwrap()).collect();
        assert_eq!(vals.len(), 3);
        let (m, s) = mean_std(&vals);
        let mean = vals.iter().sum::<f64>() / 3.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        assert!((g.balanced_accuracy_mean - mean).abs() < 1e-12 && (g.balanced_accuracy_mean - m).abs() < 1e-15);
        assert!((g.balanced_accuracy_std - sd).abs() < 1e-12 && (g.balanced_accuracy_std - s).abs() < 1e-15);
    }
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn failed_sweep_points_are_recorded() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    pipeline::gen("tiny", None, &d).unwrap();
    let mut cfg = quick();
    cfg.sweep.temperature = vec![-1.0, 1.0];
    let rows = sweep::sweep(&d, &cfg, &dir.path().join("s")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].status, "failed");
    assert!(rows[0].error.as_ref().is_some_and(|e| e.contains("temperature")));
    assert!(rows[0].balanced_accuracy.is_none());
    assert_eq!(rows[1].status, "ok");
    let groups = report::aggregate(&rows, &[]).unwrap();
    assert_eq!((groups[0].runs, groups[0].failed), (0, 1));
}

#[test]
fn mu_grid_sweep_via_cli_gives_eight_rows_per_seed() {
    let dir = TempDir::new().unwrap();
    let (d, s) = (dir.path().join("d"), dir.path().join("s"));
    assert_eq!(hinbal(&["gen", "--preset", "tiny", "--out", p(&d)]).0, 0);
    let cfg = dir.path().join("q.toml");
    std::fs::write(&cfg, "[train]\nepochs = 5\n").unwrap();
    let (code, err) =
        hinbal(&["sweep", "--data", p(&d), "--config", p(&cfg), "--grid", "mu", "--seeds", "0,1", "--out", p(&s)]);
    assert_eq!(code, 0, "{err}");
    let rows = sweep::read_rows(&s.join("results.jsonl")).unwrap();
    for seed in [0, 1] {
        let mus: Vec<&str> = rows.iter().filter(|r| r.seed == seed).map(|r| r.mu.as_str()).collect();
        assert_eq!(mus, ["1", "3", "5", "10", "30", "50", "100", "ALL"]);
    }
    let (code, _) = hinbal(&["report", "--input", p(&s.join("results.jsonl")), "--format", "csv", "--by", "mu", "--out", p(&s)]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(s.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
}
