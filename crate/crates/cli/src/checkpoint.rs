//! JSON checkpoint: every tensor with its Adam moments, the resolved config,
//! the synthetic batch of the selected epoch and the RNG record.

use std::path::Path;

use hinbal_core::encoder::ModelState;
use hinbal_core::synthesis::{augment, SyntheticBatch};
use hinbal_core::train::{Experiment, NEGATIVE_STREAM, SYNTHESIS_STREAM};
use hinbal_core::{Error, HinGraph, LabelSpec, VERSION};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{self, CliError, Result};

pub const FORMAT: u32 = 1;

/// Enough to rebuild every random stream of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngRecord {
    pub master_seed: u64,
    pub synthesis_stream: u64,
    pub negative_stream: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub version: String,
    pub config: RunConfig,
    pub best_epoch: usize,
    pub rng: RngRecord,
    pub state: ModelState,
    pub batch: SyntheticBatch,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, e: &Experiment) -> Self {
        Checkpoint {
            format: FORMAT,
            version: VERSION.into(),
            config: config.clone(),
            best_epoch: e.best_epoch,
            rng: RngRecord {
                master_seed: config.train.seed,
                synthesis_stream: SYNTHESIS_STREAM,
                negative_stream: NEGATIVE_STREAM,
            },
            state: e.state.clone(),
            batch: e.batch.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string(self).map_err(|e| CliError::file(path, e))?;
        error::write(path, s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = error::read_json(path)?;
        if ck.format != FORMAT {
            return Err(CliError::file(path, format!("checkpoint format {} (expected {FORMAT})", ck.format)));
        }
        if ck.version != VERSION {
            log::warn!("checkpoint written by version {} (running {VERSION})", ck.version);
        }
        Ok(ck)
    }

    /// Checks that the tensors and synthetic batch fit `graph`.
    pub fn check(&self, graph: &HinGraph, labels: &LabelSpec) -> hinbal_core::Result<()> {
        if self.state.target_type != labels.target_type || self.state.num_classes != labels.num_classes {
            return Err(Error::Shape("checkpoint target type or class count differs from the dataset".into()));
        }
        if self.batch.nodes.iter().any(|n| n.neighbors.len() != self.batch.relations.len()) {
            return Err(Error::Shape("synthetic node neighbor lists do not match the batch relations".into()));
        }
        for n in &self.batch.nodes {
            for (slot, &rel) in self.batch.relations.iter().enumerate() {
                if rel.0 >= graph.schema().num_relations() {
                    return Err(Error::Shape(format!("batch relation {} not in the dataset", rel.0)));
                }
                let nt = graph.schema().relation(rel);
                let other = if nt.src == labels.target_type { nt.dst } else { nt.src };
                if n.neighbors[slot].iter().any(|&j| j >= graph.node_count(other)) {
                    return Err(Error::Shape("synthetic neighbor id out of range".into()));
                }
            }
            let d = graph.schema().node_type(labels.target_type).attr_dim;
            if n.attributes.len() != d {
                return Err(Error::Shape(format!("synthetic attributes have width {} (expected {d})", n.attributes.len())));
            }
        }
        let (aug, _) = augment(graph, labels, &self.batch)?;
        self.state.check_graph(&aug)?;
        for (p, m) in self.state.params().iter().zip(&self.state.adam_m) {
            if p.shape() != m.shape() {
                return Err(Error::Shape("optimizer moment shape differs from its tensor".into()));
            }
        }
        Ok(())
    }
}
