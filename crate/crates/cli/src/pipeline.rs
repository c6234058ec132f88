//! Subcommand implementations. Each writes its machine-readable outputs plus
//! `config.toml` and `run.json` into the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hinbal_core::bench::{generate, PlantedHinConfig};
use hinbal_core::hin::imbalance_ratio;
use hinbal_core::influence::{build_influence_tables, InfluenceConfig, InfluenceTable};
use hinbal_core::metrics::MetricsReport;
use hinbal_core::rng;
use hinbal_core::synthesis::{augment, SyntheticBatch};
use hinbal_core::train::{evaluate_mask, prepare_synthesis, run_experiment, train_view, EpochLog, Experiment, SYNTHESIS_STREAM};
use hinbal_core::{HinGraph, LabelSpec, VERSION};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::{ensure_split, RunConfig};
use crate::dataset::{self, Dataset};
use crate::error::{self, CliError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
}

pub fn write_run_record(out: &Path, command: &str, cfg: &RunConfig) -> Result<()> {
    error::write(&out.join("config.toml"), cfg.to_toml())?;
    let rec = RunRecord {
        command: command.into(),
        version: VERSION.into(),
        seed: cfg.train.seed,
        config_hash: cfg.hash(),
    };
    error::write_json(&out.join("run.json"), &rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub config_hash: String,
    pub seed: u64,
    pub best_epoch: usize,
    pub synthetic_nodes: usize,
    pub val: MetricsReport,
    pub test: MetricsReport,
}

/// Loads a dataset and applies the split policy of `cfg`.
pub fn load_split(data: &Path, cfg: &RunConfig) -> Result<(Dataset, bool)> {
    let mut ds = dataset::load(data)?;
    let (labels, built) = ensure_split(&ds.graph, &ds.labels, ds.has_splits, cfg)?;
    ds.labels = labels;
    Ok((ds, built))
}

pub fn gen(preset: &str, seed: Option<u64>, out: &Path) -> Result<PlantedHinConfig> {
    let mut pc = PlantedHinConfig::preset(preset)
        .ok_or_else(|| CliError::Usage(format!("unknown preset `{preset}` (expected tiny or desk)")))?;
    if let Some(s) = seed {
        pc.seed = s;
    }
    let p = generate(&pc)?;
    dataset::save(out, &p.graph, &p.labels, true)?;
    error::write_json(&out.join("planted.json"), &pc)?;
    let mut s = String::new();
    for (i, c) in p.truth.classes.iter().enumerate() {
        let _ = writeln!(s, "{i} {c}");
    }
    error::write(&out.join("truth").join("classes.txt"), s)?;
    for (k, nt) in pc.neighbor_types.iter().enumerate() {
        let mut s = String::from("# node block (-1 = background)\n");
        for (j, b) in p.truth.blocks[k].iter().enumerate() {
            let _ = writeln!(s, "{j} {}", b.map_or(-1, |b| b as i64));
        }
        error::write(&out.join("truth").join(format!("{}_blocks.txt", nt.name)), s)?;
    }
    let cfg = RunConfig { train: hinbal_core::train::TrainConfig { seed: pc.seed, ..Default::default() }, ..Default::default() };
    write_run_record(out, "gen", &cfg)?;
    Ok(pc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationSummary {
    pub name: String,
    pub edges: usize,
    /// Mean number of neighbors per target node of each class, over training nodes.
    pub mean_train_degree_by_class: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub node_counts: BTreeMap<String, usize>,
    pub target: String,
    pub labeled: usize,
    pub train_counts: Vec<usize>,
    pub val_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    pub train_imbalance_ratio: Option<f64>,
    pub relations: Vec<RelationSummary>,
    pub split_built: bool,
}

pub fn summarize(graph: &HinGraph, labels: &LabelSpec, split_built: bool) -> Summary {
    let s = graph.schema();
    let target = labels.target_type;
    let relations = graph
        .neighbor_relations(target)
        .iter()
        .map(|nr| {
            let adj = graph.target_adjacency(nr);
            let mean = (0..labels.num_classes)
                .map(|c| {
                    let m = labels.train_members(c);
                    if m.is_empty() {
                        0.0
                    } else {
                        m.iter().map(|&i| adj.degree(i)).sum::<usize>() as f64 / m.len() as f64
                    }
                })
                .collect();
            RelationSummary {
                name: s.relation(nr.relation).name.clone(),
                edges: adj.nnz(),
                mean_train_degree_by_class: mean,
            }
        })
        .collect();
    Summary {
        node_counts: s.node_types.iter().map(|t| (t.name.clone(), t.count)).collect(),
        target: s.node_type(target).name.clone(),
        labeled: labels.labels.iter().filter(|l| l.is_some()).count(),
        train_counts: labels.class_counts(&labels.train),
        val_counts: labels.class_counts(&labels.val),
        test_counts: labels.class_counts(&labels.test),
        train_imbalance_ratio: imbalance_ratio(labels, &labels.train).ok(),
        relations,
        split_built,
    }
}

/// Validates a dataset and writes it back in canonical form with splits.
pub fn ingest(data: &Path, cfg: &RunConfig, out: &Path) -> Result<Summary> {
    let (ds, built) = load_split(data, cfg)?;
    dataset::save(out, &ds.graph, &ds.labels, true)?;
    let summary = summarize(&ds.graph, &ds.labels, built);
    error::write_json(&out.join("summary.json"), &summary)?;
    write_run_record(out, "ingest", cfg)?;
    Ok(summary)
}

pub fn influence_tables(ds: &Dataset, cfg: &RunConfig) -> Result<Vec<InfluenceTable>> {
    let icfg = InfluenceConfig { ppr: cfg.train.ppr, paths: cfg.resolve_paths(&ds.graph)? };
    let syn = &cfg.train.synthesis;
    Ok(build_influence_tables(&ds.graph, &train_view(&ds.labels), &icfg, syn.mu, syn.selection)?)
}

/// Writes `class<c>_<relation>.scores.txt` and `.candidates.txt` per table,
/// plus `tables.json`.
pub fn dump_influence(dir: &Path, graph: &HinGraph, tables: &[InfluenceTable]) -> Result<()> {
    for t in tables {
        let name = &graph.schema().relation(t.relation).name;
        let stem = format!("class{}_{name}", t.minority_class);
        let mut s = format!(
            "# neighbor score; class {} relation {name} d_max {} converged {}\n",
            t.minority_class, t.d_max, t.converged
        );
        for (j, v) in t.scores.iter().enumerate() {
            let _ = writeln!(s, "{j} {v:?}");
        }
        error::write(&dir.join(format!("{stem}.scores.txt")), s)?;
        let mut s = format!("# candidates in rank order; k = {}\n", t.k_used);
        for j in &t.candidates {
            let _ = writeln!(s, "{j}");
        }
        error::write(&dir.join(format!("{stem}.candidates.txt")), s)?;
    }
    error::write_json(&dir.join("tables.json"), &tables)
}

pub fn influence(data: &Path, cfg: &RunConfig, out: &Path) -> Result<Vec<InfluenceTable>> {
    let (ds, _) = load_split(data, cfg)?;
    let tables = influence_tables(&ds, cfg)?;
    dump_influence(out, &ds.graph, &tables)?;
    write_run_record(out, "influence", cfg)?;
    Ok(tables)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestNode {
    pub id: usize,
    pub class: usize,
    pub parents: (usize, usize),
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub target: String,
    /// Synthetic ids are `first_id .. first_id + count`.
    pub first_id: usize,
    pub count: usize,
    pub nodes: Vec<ManifestNode>,
}

pub fn manifest(graph: &HinGraph, batch: &SyntheticBatch) -> Manifest {
    Manifest {
        target: graph.schema().node_type(batch.target_type).name.clone(),
        first_id: batch.first_id,
        count: batch.len(),
        nodes: batch
            .nodes
            .iter()
            .enumerate()
            .map(|(k, n)| ManifestNode { id: batch.first_id + k, class: n.class, parents: n.parents, delta: n.delta })
            .collect(),
    }
}

/// Synthesizes once (epoch-0 attributes) and writes the augmented dataset.
pub fn augment_cmd(data: &Path, cfg: &RunConfig, out: &Path, dump: Option<&Path>) -> Result<Manifest> {
    let (ds, _) = load_split(data, cfg)?;
    let paths = cfg.resolve_paths(&ds.graph)?;
    let mut r = rng::stream(cfg.train.seed, SYNTHESIS_STREAM);
    let (tables, batch) = prepare_synthesis(&ds.graph, &train_view(&ds.labels), &cfg.train, &paths, &mut r)?;
    if let Some(dir) = dump {
        dump_influence(dir, &ds.graph, &tables)?;
    }
    let (aug, aug_labels) = augment(&ds.graph, &ds.labels, &batch)?;
    dataset::save(out, &aug, &aug_labels, true)?;
    let m = manifest(&ds.graph, &batch);
    error::write_json(&out.join("synthetic.json"), &m)?;
    write_run_record(out, "augment", cfg)?;
    Ok(m)
}

#[derive(Serialize)]
struct LogLine<'a> {
    epoch: usize,
    cla: f64,
    sem: f64,
    pro: f64,
    total: f64,
    train_accuracy: f64,
    val_macro_f1: Option<f64>,
    val_balanced_accuracy: Option<f64>,
    sem_per_relation: &'a [f64],
}

pub fn training_log(log: &[EpochLog]) -> String {
    let mut s = String::new();
    for e in log {
        let line = LogLine {
            epoch: e.epoch,
            cla: e.loss.cla,
            sem: e.loss.sem,
            pro: e.loss.pro,
            total: e.loss.total,
            train_accuracy: e.train_accuracy,
            val_macro_f1: e.val_macro_f1,
            val_balanced_accuracy: e.val_balanced_accuracy,
            sem_per_relation: &e.loss.sem_per_relation,
        };
        s.push_str(&serde_json::to_string(&line).expect("log line serializes"));
        s.push('\n');
    }
    s
}

pub fn experiment(ds: &Dataset, cfg: &RunConfig) -> Result<Experiment> {
    let paths = cfg.resolve_paths(&ds.graph)?;
    Ok(run_experiment(&ds.graph, &ds.labels, &cfg.train, &paths)?)
}

pub fn metrics_file(cfg: &RunConfig, e: &Experiment) -> MetricsFile {
    MetricsFile {
        config_hash: cfg.hash(),
        seed: cfg.train.seed,
        best_epoch: e.best_epoch,
        synthetic_nodes: e.batch.len(),
        val: e.val.clone(),
        test: e.test.clone(),
    }
}

/// Full run: `metrics.json`, `train_log.jsonl`, `checkpoint.json`.
pub fn train(data: &Path, cfg: &RunConfig, out: &Path) -> Result<MetricsFile> {
    let (ds, built) = load_split(data, cfg)?;
    write_run_record(out, "train", cfg)?;
    if built {
        dataset::save(&out.join("split"), &ds.graph, &ds.labels, true)?;
    }
    let e = experiment(&ds, cfg)?;
    error::write(&out.join("train_log.jsonl"), training_log(&e.log))?;
    Checkpoint::new(cfg, &e).save(&out.join("checkpoint.json"))?;
    let m = metrics_file(cfg, &e);
    error::write_json(&out.join("metrics.json"), &m)?;
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalFile {
    pub checkpoint: PathBuf,
    pub val: MetricsReport,
    pub test: MetricsReport,
}

/// Re-evaluates a checkpoint on a dataset's val and test splits.
pub fn eval(data: &Path, checkpoint: &Path, out: &Path) -> Result<EvalFile> {
    let ck = Checkpoint::load(checkpoint)?;
    let (ds, _) = load_split(data, &ck.config)?;
    ck.check(&ds.graph, &ds.labels).map_err(|e| CliError::file(checkpoint, e))?;
    let val = evaluate_mask(&ds.graph, &ds.labels, &ck.batch, &ck.state, &ds.labels.val)?;
    let test = evaluate_mask(&ds.graph, &ds.labels, &ck.batch, &ck.state, &ds.labels.test)?;
    let f = EvalFile { checkpoint: checkpoint.to_path_buf(), val, test };
    error::write_json(&out.join("eval.json"), &f)?;
    write_run_record(out, "eval", &ck.config)?;
    Ok(f)
}
