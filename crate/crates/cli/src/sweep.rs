//! Exhaustive grid over μ, T, λ1, λ2 and the training imbalance ratio.

use std::path::Path;

use hinbal_core::hin::{build_imbalanced_split, imbalance_ratio};
use hinbal_core::influence::Mu;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ensure_split, RunConfig};
use crate::dataset::Dataset;
use crate::error::{self, CliError, Result};
use crate::pipeline;

pub const MU_GRID: [Mu; 8] = [
    Mu::Factor(1.0),
    Mu::Factor(3.0),
    Mu::Factor(5.0),
    Mu::Factor(10.0),
    Mu::Factor(30.0),
    Mu::Factor(50.0),
    Mu::Factor(100.0),
    Mu::All,
];
pub const TEMPERATURE_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
pub const LAMBDA_GRID: [f64; 7] = [0.01, 0.1, 0.5, 0.7, 1.0, 1.5, 2.0];

/// Replaces one axis of `cfg.sweep` with its published grid.
pub fn apply_preset(cfg: &mut RunConfig, axis: &str) -> Result<()> {
    let s = &mut cfg.sweep;
    match axis {
        "mu" => s.mu = MU_GRID.to_vec(),
        "temperature" => s.temperature = TEMPERATURE_GRID.to_vec(),
        "lambda1" => s.lambda1 = LAMBDA_GRID.to_vec(),
        "lambda2" => s.lambda2 = LAMBDA_GRID.to_vec(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown grid `{other}` (expected mu, temperature, lambda1 or lambda2)"
            )))
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub config_hash: String,
    pub seed: u64,
    pub mu: String,
    pub temperature: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Requested ratio when that axis is swept.
    pub split_ratio: Option<f64>,
    /// Measured min/max training class size.
    pub imbalance_ratio: Option<f64>,
    pub status: String,
    pub error: Option<String>,
    pub best_epoch: Option<usize>,
    pub accuracy: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Point {
    pub config: RunConfig,
    pub split_ratio: Option<f64>,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Cartesian product in the order seed, ratio, μ, T, λ1, λ2 (λ2 fastest).
pub fn points(cfg: &RunConfig) -> Vec<Point> {
    let t = &cfg.train;
    let s = &cfg.sweep;
    let ratios: Vec<Option<f64>> = if s.imbalance_ratio.is_empty() {
        vec![None]
    } else {
        s.imbalance_ratio.iter().map(|&r| Some(r)).collect()
    };
    let mut out = Vec::new();
    for seed in axis(&s.seeds, t.seed) {
        for &ratio in &ratios {
            for mu in axis(&s.mu, t.synthesis.mu) {
                for temp in axis(&s.temperature, t.loss.temperature) {
                    for l1 in axis(&s.lambda1, t.loss.lambda1) {
                        for l2 in axis(&s.lambda2, t.loss.lambda2) {
                            let mut c = cfg.clone();
                            c.sweep = Default::default();
                            c.train.seed = seed;
                            c.train.synthesis.mu = mu;
                            c.train.loss.temperature = temp;
                            c.train.loss.lambda1 = l1;
                            c.train.loss.lambda2 = l2;
                            if let Some(r) = ratio {
                                c.split.imbalance_ratio = r;
                            }
                            out.push(Point { config: c, split_ratio: ratio });
                        }
                    }
                }
            }
        }
    }
    out
}

fn run_point(ds: &Dataset, p: &Point) -> Result<(Dataset, hinbal_core::train::Experiment)> {
    let mut ds = ds.clone();
    ds.labels = match p.split_ratio {
        Some(_) => {
            let l = &ds.labels;
            build_imbalanced_split(&ds.graph, l.target_type, &l.labels, l.num_classes, &p.config.split_config(l))?
        }
        None => ensure_split(&ds.graph, &ds.labels, ds.has_splits, &p.config)?.0,
    };
    let e = pipeline::experiment(&ds, &p.config)?;
    Ok((ds, e))
}

pub fn run_grid(ds: &Dataset, cfg: &RunConfig) -> Vec<SweepRow> {
    points(cfg)
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let c = &p.config;
            let mut row = SweepRow {
                index,
                config_hash: c.hash(),
                seed: c.train.seed,
                mu: c.train.synthesis.mu.to_string(),
                temperature: c.train.loss.temperature,
                lambda1: c.train.loss.lambda1,
                lambda2: c.train.loss.lambda2,
                split_ratio: p.split_ratio,
                imbalance_ratio: None,
                status: "ok".into(),
                error: None,
                best_epoch: None,
                accuracy: None,
                balanced_accuracy: None,
                macro_f1: None,
            };
            match run_point(ds, p) {
                Ok((ds, e)) => {
                    row.imbalance_ratio = imbalance_ratio(&ds.labels, &ds.labels.train).ok();
                    row.best_epoch = Some(e.best_epoch);
                    row.accuracy = Some(e.test.accuracy);
                    row.balanced_accuracy = Some(e.test.balanced_accuracy);
                    row.macro_f1 = Some(e.test.macro_f1);
                }
                Err(err) => {
                    log::warn!("sweep point {index} failed: {err}");
                    row.status = "failed".into();
                    row.error = Some(err.to_string());
                }
            }
            row
        })
        .collect()
}

pub fn write_rows(out: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut jsonl = String::new();
    for r in rows {
        jsonl.push_str(&serde_json::to_string(r).expect("row serializes"));
        jsonl.push('\n');
    }
    error::write(&out.join("results.jsonl"), jsonl)?;
    let path = out.join("results.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::file(&path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::file(&path, e))?;
    error::write(&path, bytes)
}

/// Runs the grid and writes `results.jsonl` and `results.csv`.
pub fn sweep(data: &Path, cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let ds = crate::dataset::load(data)?;
    pipeline::write_run_record(out, "sweep", cfg)?;
    let rows = run_grid(&ds, cfg);
    write_rows(out, &rows)?;
    Ok(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    if path.extension().is_some_and(|e| e == "csv") {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::file(path, e))?;
        return r
            .deserialize()
            .enumerate()
            .map(|(i, row)| row.map_err(|e| CliError::parse(path, i + 2, e.to_string())))
            .collect();
    }
    let text = error::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::parse(path, i + 1, e.to_string())))
        .collect()
}
