//! TOML run configuration.
//!
//! Every key is optional; unknown keys are rejected.
//!
//! ```toml
//! [train]            # epochs, lr, patience, eval_every, seed
//! [train.ppr]        # alpha, max_iters, tol
//! [train.synthesis]  # enabled, mu, k_percent, oversample_to, resample_topology_each_epoch, selection
//! [train.model]      # hidden_dim, embed_dim, proj_dim, init_scale
//! [train.loss]       # lambda1, lambda2, temperature, negative_sampling
//! [split]            # label_rate, imbalance_ratio, seed (used when the dataset has no splits file)
//! [meta_paths]       # relation = [["rel", "~rel", ...], ...]
//! [sweep]            # mu, temperature, lambda1, lambda2, imbalance_ratio, seeds
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use hinbal_core::hin::{build_imbalanced_split, PathStep, SplitConfig};
use hinbal_core::influence::Mu;
use hinbal_core::train::TrainConfig;
use hinbal_core::{HinGraph, LabelSpec, MetaPath, RelationId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{self, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub label_rate: f64,
    pub imbalance_ratio: f64,
    /// Defaults to `train.seed`.
    pub seed: Option<u64>,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { label_rate: 0.06, imbalance_ratio: 0.1, seed: None }
    }
}

/// Grid axes; an empty axis keeps the base config's value.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub mu: Vec<Mu>,
    pub temperature: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Re-splits the labels at each ratio.
    pub imbalance_ratio: Vec<f64>,
    /// Defaults to `[train.seed]`.
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub split: SplitSection,
    pub meta_paths: BTreeMap<String, Vec<Vec<String>>>,
    pub sweep: SweepSection,
}

impl RunConfig {
    /// `"default"` yields the built-in defaults.
    pub fn load(spec: &str) -> Result<Self> {
        if spec == "default" {
            return Ok(Self::default());
        }
        let path = Path::new(spec);
        let text = error::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let s = &self.split;
        if !(s.label_rate > 0.0 && s.label_rate <= 1.0) || !(s.imbalance_ratio > 0.0 && s.imbalance_ratio <= 1.0) {
            return Err(CliError::Usage("split label_rate and imbalance_ratio must lie in (0, 1]".into()));
        }
        for r in &self.sweep.imbalance_ratio {
            if !(*r > 0.0 && *r <= 1.0) {
                return Err(CliError::Usage(format!("sweep imbalance ratio {r} not in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Short hex digest of the resolved config with the seeds zeroed, so runs
    /// that differ only by seed share a hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.train.seed = 0;
        c.split.seed = None;
        c.sweep.seeds.clear();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn split_config(&self, labels: &LabelSpec) -> SplitConfig {
        SplitConfig {
            label_rate: self.split.label_rate,
            imbalance_ratio: self.split.imbalance_ratio,
            minority_classes: labels.minority_classes.clone(),
            seed: self.split.seed.unwrap_or(self.train.seed),
        }
    }

    /// Meta-paths keyed by relation id. A step `~rel` walks `rel` backwards.
    pub fn resolve_paths(&self, graph: &HinGraph) -> Result<BTreeMap<RelationId, Vec<MetaPath>>> {
        let schema = graph.schema();
        let relation = |name: &str| {
            schema
                .relation_by_name(name)
                .ok_or_else(|| CliError::Usage(format!("meta_paths: unknown relation `{name}`")))
        };
        let mut out = BTreeMap::new();
        for (rel, paths) in &self.meta_paths {
            let id = relation(rel)?;
            let mut resolved = Vec::with_capacity(paths.len());
            for steps in paths {
                let steps = steps
                    .iter()
                    .map(|s| match s.strip_prefix('~') {
                        Some(name) => relation(name).map(PathStep::backward),
                        None => relation(s).map(PathStep::forward),
                    })
                    .collect::<Result<Vec<_>>>()?;
                resolved.push(MetaPath::new(schema, steps).map_err(|e| CliError::Usage(format!("meta_paths.{rel}: {e}")))?);
            }
            out.insert(id, resolved);
        }
        Ok(out)
    }
}

/// Uses the dataset's splits when present, otherwise builds an imbalanced
/// split from the config. Returns whether a split was built.
pub fn ensure_split(graph: &HinGraph, labels: &LabelSpec, has_splits: bool, cfg: &RunConfig) -> Result<(LabelSpec, bool)> {
    if has_splits {
        return Ok((labels.clone(), false));
    }
    let split = build_imbalanced_split(graph, labels.target_type, &labels.labels, labels.num_classes, &cfg.split_config(labels))?;
    Ok((split, true))
}
