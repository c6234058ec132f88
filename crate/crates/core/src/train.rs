//! End-to-end experiment: influence tables, synthesis, training with early
//! stopping on validation macro-F1, and test evaluation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::encoder::{Encoder, ModelConfig, ModelState};
use crate::error::{Error, Result, StageExt};
use crate::hin::{HinGraph, LabelSpec, MetaPath, RelationId};
use crate::influence::{build_influence_tables, InfluenceConfig, InfluenceTable, PprConfig};
use crate::linalg::Matrix;
use crate::metrics::{argmax_rows, compute_metrics, MetricsReport};
use crate::objective::{evaluate, LossBreakdown, LossConfig, ObjectiveContext};
use crate::optim::{adam_step, AdamConfig};
use crate::rng::{self, Rng};
use crate::synthesis::{augment, refresh_attributes, synthesize_batch, write_synthetic_attributes, SynthesisConfig, SyntheticBatch};

/// RNG stream tags derived from the master seed.
pub const SYNTHESIS_STREAM: u64 = 0x5e_0001;
pub const NEGATIVE_STREAM: u64 = 0x5e_0002;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Validation runs every `eval_every` epochs and on the last epoch.
    pub eval_every: usize,
    /// Master seed; it replaces `model.seed` and drives synthesis and
    /// negative sampling.
    pub seed: u64,
    pub ppr: PprConfig,
    pub synthesis: SynthesisConfig,
    pub model: ModelConfig,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            lr: 0.01,
            patience: 50,
            eval_every: 1,
            seed: 0,
            ppr: PprConfig::default(),
            synthesis: SynthesisConfig::default(),
            model: ModelConfig::default(),
            loss: LossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {} must be positive", self.lr)));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument("eval_every must be at least 1".into()));
        }
        self.ppr.validate()?;
        self.synthesis.validate()?;
        self.model.validate()?;
        self.loss.validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub train_accuracy: f64,
    /// `None` on epochs without validation.
    pub val_macro_f1: Option<f64>,
    pub val_balanced_accuracy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub best_epoch: usize,
    /// Parameters at the best validation epoch.
    pub state: ModelState,
    /// Synthetic nodes with the attributes of the best epoch.
    pub batch: SyntheticBatch,
    pub tables: Vec<InfluenceTable>,
    pub log: Vec<EpochLog>,
    pub val: MetricsReport,
    pub test: MetricsReport,
}

/// Builds the influence tables (training labels only) and the initial
/// synthetic batch; the batch is empty when synthesis is disabled.
pub fn prepare_synthesis(
    graph: &HinGraph,
    labels: &LabelSpec,
    cfg: &TrainConfig,
    paths: &BTreeMap<RelationId, Vec<MetaPath>>,
    rng: &mut Rng,
) -> Result<(Vec<InfluenceTable>, SyntheticBatch)> {
    let target = labels.target_type;
    let empty = || {
        SyntheticBatch::empty(
            target,
            graph.node_count(target),
            graph.neighbor_relations(target).iter().map(|r| r.relation).collect(),
        )
    };
    if !cfg.synthesis.enabled {
        return Ok((Vec::new(), empty()));
    }
    let icfg = InfluenceConfig {
        ppr: cfg.ppr,
        paths: paths.clone(),
    };
    let tables =
        build_influence_tables(graph, labels, &icfg, cfg.synthesis.mu, cfg.synthesis.selection).stage("influence")?;
    let batch = synthesize_batch(graph, labels, &tables, &cfg.synthesis, None, rng).stage("synthesis")?;
    Ok((tables, batch))
}

/// Logits of every target row (synthetic rows last) on the augmented graph.
pub fn augmented_logits(graph: &HinGraph, labels: &LabelSpec, batch: &SyntheticBatch, state: &ModelState) -> Result<Matrix> {
    let (aug, _) = augment(graph, labels, batch)?;
    let enc = Encoder::new(&aug);
    Ok(enc.forward(&aug, state)?.logits)
}

/// Metrics of `state` on a split of the real nodes.
pub fn evaluate_mask(
    graph: &HinGraph,
    labels: &LabelSpec,
    batch: &SyntheticBatch,
    state: &ModelState,
    mask: &[bool],
) -> Result<MetricsReport> {
    let logits = augmented_logits(graph, labels, batch, state)?;
    let pred = argmax_rows(&logits);
    let n = labels.len();
    compute_metrics(&pred[..n], &labels.labels, mask, labels.num_classes)
}

/// Runs one full experiment. Validation and test labels are only read for
/// metrics.
pub fn run_experiment(
    graph: &HinGraph,
    labels: &LabelSpec,
    cfg: &TrainConfig,
    paths: &BTreeMap<RelationId, Vec<MetaPath>>,
) -> Result<Experiment> {
    cfg.validate()?;
    labels.validate(graph)?;
    if !labels.val.iter().any(|&v| v) || !labels.test.iter().any(|&v| v) {
        return Err(Error::InvalidArgument("validation and test splits must be non-empty".into()));
    }
    let target = labels.target_type;
    let n_real = labels.len();
    let train_only = train_view(labels);

    let mut syn_rng = rng::stream(cfg.seed, SYNTHESIS_STREAM);
    let mut neg_rng = rng::stream(cfg.seed, NEGATIVE_STREAM);
    let (tables, mut batch) = prepare_synthesis(graph, &train_only, cfg, paths, &mut syn_rng)?;
    log::info!("synthesized {} nodes", batch.len());

    let (mut aug, mut aug_labels) = augment(graph, &train_only, &batch)?;
    let mut encoder = Encoder::new(&aug);
    let mut ctx = ObjectiveContext::new(&aug, target, batch.ids());
    let model_cfg = ModelConfig {
        seed: cfg.seed,
        ..cfg.model.clone()
    };
    let mut state = ModelState::new(&aug, target, labels.num_classes, &model_cfg)?;

    let adam = cfg.adam();
    let mut prev_grads: Option<Matrix> = None;
    let mut best: Option<(f64, usize, ModelState, SyntheticBatch)> = None;
    let mut log_rows = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if epoch > 0 && !batch.is_empty() {
            if cfg.synthesis.resample_topology_each_epoch {
                batch = synthesize_batch(graph, &train_only, &tables, &cfg.synthesis, prev_grads.as_ref(), &mut syn_rng)
                    .stage("synthesis")?;
                (aug, aug_labels) = augment(graph, &train_only, &batch)?;
                encoder = Encoder::new(&aug);
                ctx = ObjectiveContext::new(&aug, target, batch.ids());
            } else {
                refresh_attributes(&mut batch, graph, prev_grads.as_ref(), cfg.synthesis.k_percent)
                    .stage("synthesis")?;
                write_synthetic_attributes(&mut aug, &batch);
            }
        }
        let neg = cfg.loss.negative_sampling.then_some(&mut neg_rng);
        let ev = evaluate(&aug, &aug_labels, &ctx, &encoder, &state, &cfg.loss, neg).stage("objective")?;
        if !ev.loss.total.is_finite() {
            return Err(Error::NonFinite(format!("loss at epoch {epoch}")).at("objective"));
        }
        let pred = argmax_rows(&ev.logits);
        let train_acc = compute_metrics(&pred, &aug_labels.labels, &aug_labels.train, labels.num_classes)?.accuracy;
        let validate = epoch % cfg.eval_every == 0 || epoch + 1 == cfg.epochs;
        let val = if validate {
            Some(compute_metrics(&pred[..n_real], &labels.labels, &labels.val, labels.num_classes)?)
        } else {
            None
        };
        log::debug!(
            "epoch {epoch}: loss {:.5} (cla {:.5} sem {:.5} pro {:.5}) val macro-F1 {:?}",
            ev.loss.total,
            ev.loss.cla,
            ev.loss.sem,
            ev.loss.pro,
            val.as_ref().map(|v| v.macro_f1)
        );
        log_rows.push(EpochLog {
            epoch,
            loss: ev.loss.clone(),
            train_accuracy: train_acc,
            val_macro_f1: val.as_ref().map(|v| v.macro_f1),
            val_balanced_accuracy: val.as_ref().map(|v| v.balanced_accuracy),
        });
        if let Some(val) = &val {
            if best.as_ref().map_or(true, |(score, ..)| val.macro_f1 > *score) {
                best = Some((val.macro_f1, epoch, state.clone(), batch.clone()));
            }
        }
        prev_grads = Some(ev.grads.inputs[target.0].clone());
        adam_step(&mut state, &ev.grads.params, &adam).stage("optimizer")?;
        let best_epoch = best.as_ref().map_or(0, |b| b.1);
        if cfg.patience > 0 && epoch - best_epoch >= cfg.patience {
            log::info!("early stop at epoch {epoch}; best epoch {best_epoch}");
            break;
        }
    }
    let (_, best_epoch, state, batch) = best.expect("at least one epoch ran");
    let val = evaluate_mask(graph, labels, &batch, &state, &labels.val)?;
    let test = evaluate_mask(graph, labels, &batch, &state, &labels.test)?;
    Ok(Experiment {
        best_epoch,
        state,
        batch,
        tables,
        log: log_rows,
        val,
        test,
    })
}

/// Labels with validation and test labels hidden; training code only ever
/// sees this view.
pub fn train_view(labels: &LabelSpec) -> LabelSpec {
    let mut v = labels.clone();
    for (i, l) in v.labels.iter_mut().enumerate() {
        if !labels.train[i] {
            *l = None;
        }
    }
    v.val.iter_mut().for_each(|x| *x = false);
    v.test.iter_mut().for_each(|x| *x = false);
    v
}
