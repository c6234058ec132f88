//! Synthetic minority target nodes: counts, parents, influence-guided
//! neighborhoods and saliency-masked attribute interpolation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{HinGraph, LabelSpec, NetworkSchema, NodeTypeId, RelationId};
use crate::influence::{InfluenceTable, Mu, SelectionMode};
use crate::linalg::Matrix;
use crate::rng::Rng;
use crate::sparse::SparseAdj;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OversampleTarget {
    /// Top every minority class up to the largest training class.
    #[default]
    MatchMajority,
    /// Top up to `⌈r · largest⌉`.
    Ratio(f64),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SynthesisConfig {
    pub enabled: bool,
    pub mu: Mu,
    /// Percentage of attributes copied verbatim from the first parent.
    pub k_percent: f64,
    pub oversample_to: OversampleTarget,
    pub resample_topology_each_epoch: bool,
    pub selection: SelectionMode,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            mu: Mu::Factor(5.0),
            k_percent: 10.0,
            oversample_to: OversampleTarget::MatchMajority,
            resample_topology_each_epoch: false,
            selection: SelectionMode::Influence,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.k_percent) {
            return Err(Error::InvalidArgument(format!("K% = {} outside [0, 100]", self.k_percent)));
        }
        if let OversampleTarget::Ratio(r) = self.oversample_to {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("oversampling ratio {r} must be positive")));
            }
        }
        if let Mu::Factor(f) = self.mu {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidArgument(format!("mu {f} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SyntheticNode {
    pub class: usize,
    /// Real training members of `class`; the first one supplies saliency.
    pub parents: (usize, usize),
    /// Interpolation weight on the first parent.
    pub delta: f64,
    /// Neighbor ids per entry of [`SyntheticBatch::relations`], ascending.
    pub neighbors: Vec<Vec<usize>>,
    pub attributes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SyntheticBatch {
    pub target_type: NodeTypeId,
    /// Id of the first synthetic node; equals the number of real target nodes.
    pub first_id: usize,
    pub relations: Vec<RelationId>,
    pub nodes: Vec<SyntheticNode>,
}

impl SyntheticBatch {
    pub fn empty(target_type: NodeTypeId, first_id: usize, relations: Vec<RelationId>) -> Self {
        Self {
            target_type,
            first_id,
            relations,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> core::ops::Range<usize> {
        self.first_id..self.first_id + self.nodes.len()
    }
}

/// Synthetic nodes needed per minority class.
pub fn plan_counts(labels: &LabelSpec, target: OversampleTarget) -> BTreeMap<usize, usize> {
    let counts = labels.class_counts(&labels.train);
    let largest = counts.iter().copied().max().unwrap_or(0);
    let goal = match target {
        OversampleTarget::MatchMajority => largest,
        OversampleTarget::Ratio(r) => libm::ceil(r * largest as f64 - 1e-9) as usize,
    };
    let mut out = BTreeMap::new();
    for &c in &labels.minority_classes {
        out.insert(c, goal.saturating_sub(counts[c]));
    }
    out
}

/// Uniform draw from an empirical degree multiset. An empty multiset yields
/// 1 and sets the fallback flag.
pub fn sample_degree(multiset: &[usize], rng: &mut Rng) -> (usize, bool) {
    if multiset.is_empty() {
        log::warn!("empty minority degree multiset; using degree 1");
        return (1, true);
    }
    (multiset[rng.random_range(0..multiset.len())], false)
}

/// `min(degree, |candidates|)` distinct candidates, returned ascending.
pub fn sample_neighbors(candidates: &[usize], degree: usize, rng: &mut Rng) -> Vec<usize> {
    let take = degree.min(candidates.len());
    let mut picked: Vec<usize> = index::sample(rng, candidates.len(), take)
        .into_iter()
        .map(|i| candidates[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// `s_j = |∂L/∂X_i|_j`
pub fn attribute_saliency(grads: &Matrix, node: usize) -> Vec<f64> {
    grads.row(node).iter().map(|g| libm::fabs(*g)).collect()
}

/// Indices of the `⌈K·d/100⌉` largest saliencies, ties to the lower index,
/// returned ascending.
pub fn saliency_mask(saliency: &[f64], k_percent: f64) -> Vec<usize> {
    let d = saliency.len();
    let keep = (libm::ceil(k_percent * d as f64 / 100.0 - 1e-9).max(0.0) as usize).min(d);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| saliency[b].total_cmp(&saliency[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

/// Copies the salient entries of `x_a` and interpolates the rest as
/// `δ·x_a + (1−δ)·x_b`.
pub fn synthesize_attributes(x_a: &[f64], x_b: &[f64], s_a: &[f64], k_percent: f64, delta: f64) -> Result<Vec<f64>> {
    if x_a.len() != x_b.len() || x_a.len() != s_a.len() {
        return Err(Error::Shape(format!(
            "parent attributes ({}, {}) and saliency ({}) differ in length",
            x_a.len(),
            x_b.len(),
            s_a.len()
        )));
    }
    let mut out: Vec<f64> = x_a.iter().zip(x_b).map(|(a, b)| delta * a + (1.0 - delta) * b).collect();
    for j in saliency_mask(s_a, k_percent) {
        out[j] = x_a[j];
    }
    Ok(out)
}

/// Degrees of all minority training members per neighbor relation
/// (pooled over minority classes), in `graph.neighbor_relations` order.
pub fn minority_degree_multisets(graph: &HinGraph, labels: &LabelSpec) -> Vec<Vec<usize>> {
    let members: Vec<usize> = (0..labels.len())
        .filter(|&i| labels.train[i] && labels.labels[i].is_some_and(|c| labels.is_minority(c)))
        .collect();
    graph
        .neighbor_relations(labels.target_type)
        .iter()
        .map(|nr| {
            let adj = graph.target_adjacency(nr);
            members.iter().map(|&i| adj.degree(i)).collect()
        })
        .collect()
}

fn saliency_row(graph: &HinGraph, target: NodeTypeId, grads: Option<&Matrix>, node: usize) -> Vec<f64> {
    match grads {
        Some(g) => attribute_saliency(g, node),
        // Before the first backward pass: rank by the parent's own magnitudes.
        None => graph.attributes(target).row(node).iter().map(|x| libm::fabs(*x)).collect(),
    }
}

/// Draws the topology (parents, δ, neighbors) of every planned synthetic node
/// and synthesizes its attributes.
pub fn synthesize_batch(
    graph: &HinGraph,
    labels: &LabelSpec,
    tables: &[InfluenceTable],
    cfg: &SynthesisConfig,
    grads: Option<&Matrix>,
    rng: &mut Rng,
) -> Result<SyntheticBatch> {
    cfg.validate()?;
    let target = labels.target_type;
    let relations = graph.neighbor_relations(target);
    let multisets = minority_degree_multisets(graph, labels);
    let plan = plan_counts(labels, cfg.oversample_to);
    let mut batch = SyntheticBatch::empty(
        target,
        graph.node_count(target),
        relations.iter().map(|r| r.relation).collect(),
    );
    if graph.schema().node_type(target).attr_dim == 0 && plan.values().any(|&n| n > 0) {
        return Err(Error::InvalidArgument(
            "synthetic nodes need an attributed target type".into(),
        ));
    }
    for (&class, &count) in &plan {
        if count == 0 {
            continue;
        }
        let members = labels.train_members(class);
        if members.is_empty() {
            return Err(Error::Insufficient(format!("minority class {class} has no training member")));
        }
        let class_tables: Vec<&InfluenceTable> = relations
            .iter()
            .map(|nr| {
                tables
                    .iter()
                    .find(|t| t.minority_class == class && t.relation == nr.relation)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "no influence table for class {class} and relation {}",
                            nr.relation.0
                        ))
                    })
            })
            .collect::<Result<_>>()?;
        for _ in 0..count {
            let a = members[rng.random_range(0..members.len())];
            let b = if members.len() >= 2 {
                loop {
                    let b = members[rng.random_range(0..members.len())];
                    if b != a {
                        break b;
                    }
                }
            } else {
                a
            };
            let delta: f64 = rng.random();
            let neighbors = class_tables
                .iter()
                .zip(&multisets)
                .map(|(t, ms)| {
                    let (deg, _) = sample_degree(ms, rng);
                    sample_neighbors(&t.candidates, deg, rng)
                })
                .collect();
            batch.nodes.push(SyntheticNode {
                class,
                parents: (a, b),
                delta,
                neighbors,
                attributes: Vec::new(),
            });
        }
    }
    refresh_attributes(&mut batch, graph, grads, cfg.k_percent)?;
    Ok(batch)
}

/// Re-synthesizes attributes from the parents with the latest saliency.
/// `grads` is `∂L/∂X` of the target type; its first rows are the real nodes.
pub fn refresh_attributes(batch: &mut SyntheticBatch, graph: &HinGraph, grads: Option<&Matrix>, k_percent: f64) -> Result<()> {
    let target = batch.target_type;
    let x = graph.attributes(target);
    if let Some(g) = grads {
        if g.cols() != x.cols() || g.rows() < batch.first_id {
            return Err(Error::Shape("attribute gradient does not match the target type".into()));
        }
    }
    for node in &mut batch.nodes {
        let (a, b) = node.parents;
        let s = saliency_row(graph, target, grads, a);
        node.attributes = synthesize_attributes(x.row(a), x.row(b), &s, k_percent, node.delta)?;
    }
    Ok(())
}

/// Appends the batch to the graph: synthetic target rows, their edges and
/// attributes. Labels gain the synthetic classes, inside the training mask
/// only.
pub fn augment(graph: &HinGraph, labels: &LabelSpec, batch: &SyntheticBatch) -> Result<(HinGraph, LabelSpec)> {
    let target = batch.target_type;
    let n_real = graph.node_count(target);
    if batch.first_id != n_real || labels.len() != n_real {
        return Err(Error::Shape("synthetic batch was built for a different graph".into()));
    }
    let n_syn = batch.len();
    let (schema, adjacency, attributes) = graph.clone().into_parts();
    let mut schema: NetworkSchema = schema;
    schema.node_types[target.0].count = n_real + n_syn;
    let mut adjacency = adjacency;
    for (slot, &rel) in batch.relations.iter().enumerate() {
        let r = schema.relation(rel).clone();
        let mut extra = Vec::new();
        for (k, node) in batch.nodes.iter().enumerate() {
            let id = batch.first_id + k;
            for &nb in &node.neighbors[slot] {
                extra.push(if r.src == target { (id, nb) } else { (nb, id) });
            }
        }
        let rows = schema.node_type(r.src).count;
        let cols = schema.node_type(r.dst).count;
        adjacency[rel.0] = adjacency[rel.0].extended(rows, cols, &extra)?;
    }
    // Relations that touch the target type but carry no synthetic edges
    // still need the larger dimensions.
    for (i, r) in schema.relations.iter().enumerate() {
        let rows = schema.node_type(r.src).count;
        let cols = schema.node_type(r.dst).count;
        if adjacency[i].rows() != rows || adjacency[i].cols() != cols {
            adjacency[i] = adjacency[i].extended(rows, cols, &[])?;
        }
    }
    let mut attributes = attributes;
    let d = attributes[target.0].cols();
    let mut extra = Matrix::zeros(n_syn, d);
    for (k, node) in batch.nodes.iter().enumerate() {
        if node.attributes.len() != d {
            return Err(Error::Shape(format!("synthetic node {k} has {} attributes, expected {d}", node.attributes.len())));
        }
        extra.row_mut(k).copy_from_slice(&node.attributes);
    }
    attributes[target.0].append_rows(&extra);
    let aug = HinGraph::new(schema, adjacency, attributes)?;

    let mut lab = labels.clone();
    for node in &batch.nodes {
        lab.labels.push(Some(node.class));
        lab.train.push(true);
        lab.val.push(false);
        lab.test.push(false);
    }
    Ok((aug, lab))
}

/// Overwrites the synthetic attribute rows of an augmented graph.
pub fn write_synthetic_attributes(aug: &mut HinGraph, batch: &SyntheticBatch) {
    let x = aug.attributes_mut(batch.target_type);
    for (k, node) in batch.nodes.iter().enumerate() {
        x.row_mut(batch.first_id + k).copy_from_slice(&node.attributes);
    }
}

/// Synthetic edges of one relation slot, as `target x neighbor` pairs.
pub fn synthetic_edges(batch: &SyntheticBatch, slot: usize) -> Vec<(usize, usize)> {
    batch
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(k, n)| n.neighbors[slot].iter().map(move |&j| (batch.first_id + k, j)))
        .collect()
}

/// `target x neighbor` adjacency of every neighbor relation in an augmented graph.
pub fn target_adjacencies(graph: &HinGraph, target: NodeTypeId) -> Vec<SparseAdj> {
    graph
        .neighbor_relations(target)
        .iter()
        .map(|nr| graph.target_adjacency(nr))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn spec(counts: &[usize], minority: &[usize]) -> LabelSpec {
        let labels: Vec<Option<usize>> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| core::iter::repeat_n(Some(c), k))
            .collect();
        let n = labels.len();
        LabelSpec {
            target_type: NodeTypeId(0),
            num_classes: counts.len(),
            labels,
            train: vec![true; n],
            val: vec![false; n],
            test: vec![false; n],
            minority_classes: minority.to_vec(),
        }
    }

    #[test]
    fn plan_counts_examples() {
        let s = spec(&[60, 60, 600, 600], &[0, 1]);
        let p = plan_counts(&s, OversampleTarget::MatchMajority);
        assert_eq!(p.into_iter().collect::<Vec<_>>(), vec![(0, 540), (1, 540)]);
        let s = spec(&[10, 10], &[1]);
        assert_eq!(plan_counts(&s, OversampleTarget::MatchMajority)[&1], 0);
        let s = spec(&[60, 600], &[0]);
        assert_eq!(plan_counts(&s, OversampleTarget::Ratio(0.5))[&0], 240);
    }

    #[test]
    fn degenerate_degree_distribution() {
        let mut r = rng::seeded(1);
        for _ in 0..20 {
            assert_eq!(sample_degree(&[2, 2, 2], &mut r), (2, false));
        }
        assert_eq!(sample_degree(&[], &mut r), (1, true));
    }

    #[test]
    fn neighbor_sampling_bounds() {
        let mut r = rng::seeded(2);
        assert_eq!(sample_neighbors(&[9, 7, 3], 5, &mut r), vec![3, 7, 9]);
        let one = sample_neighbors(&[7, 9], 1, &mut r);
        assert!(one == vec![7] || one == vec![9]);
    }

    #[test]
    fn saliency_is_absolute_gradient() {
        let g = Matrix::from_rows(&[vec![-2.0, 0.0, 3.0]]).unwrap();
        assert_eq!(attribute_saliency(&g, 0), vec![2.0, 0.0, 3.0]);
        assert_eq!(attribute_saliency(&Matrix::zeros(1, 3), 0), vec![0.0; 3]);
    }

    #[test]
    fn attribute_synthesis_examples() {
        let xa = [1.0, -4.0, 2.5];
        let xb = [0.0, 1.0, 1.0];
        assert_eq!(synthesize_attributes(&xa, &xb, &[0.0, 1.0, 2.0], 100.0, 0.3).unwrap(), xa.to_vec());
        assert_eq!(
            synthesize_attributes(&[1.0, 1.0], &[3.0, 3.0], &[5.0, 1.0], 0.0, 0.5).unwrap(),
            vec![2.0, 2.0]
        );
        let xa = [10.0, 11.0, 12.0, 13.0];
        let xb = [20.0, 21.0, 22.0, 23.0];
        assert_eq!(
            synthesize_attributes(&xa, &xb, &[9.0, 0.0, 0.0, 5.0], 50.0, 0.0).unwrap(),
            vec![10.0, 21.0, 22.0, 13.0]
        );
        assert!(synthesize_attributes(&xa, &xb[..3], &[0.0; 4], 10.0, 0.5).is_err());
    }

    #[test]
    fn mask_ties_prefer_lower_index() {
        assert_eq!(saliency_mask(&[1.0, 1.0, 1.0, 1.0], 50.0), vec![0, 1]);
        assert_eq!(saliency_mask(&[0.0; 10], 10.0), vec![0]);
        assert_eq!(saliency_mask(&[0.0; 10], 11.0), vec![0, 1]);
    }
}
