//! Heterogeneous information network: schema, typed adjacency, attributes,
//! meta-paths, labels and imbalanced split construction.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;
use crate::sparse::SparseAdj;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NodeTypeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RelationId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NodeType {
    pub name: String,
    pub count: usize,
    /// Zero marks an attributeless type.
    pub attr_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Relation {
    pub name: String,
    pub src: NodeTypeId,
    pub dst: NodeTypeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NetworkSchema {
    pub node_types: Vec<NodeType>,
    pub relations: Vec<Relation>,
}

impl NetworkSchema {
    pub fn validate(&self) -> Result<()> {
        if self.node_types.len() + self.relations.len() <= 2 {
            return Err(Error::Schema(format!(
                "{} node types and {} relations do not form a heterogeneous network",
                self.node_types.len(),
                self.relations.len()
            )));
        }
        let mut names = BTreeSet::new();
        for t in &self.node_types {
            if !names.insert(t.name.as_str()) {
                return Err(Error::Schema(format!("duplicate node type `{}`", t.name)));
            }
        }
        let mut rnames = BTreeSet::new();
        for r in &self.relations {
            if !rnames.insert(r.name.as_str()) {
                return Err(Error::Schema(format!("duplicate relation `{}`", r.name)));
            }
            if r.src.0 >= self.node_types.len() || r.dst.0 >= self.node_types.len() {
                return Err(Error::Schema(format!(
                    "relation `{}` references an unregistered node type",
                    r.name
                )));
            }
        }
        Ok(())
    }

    pub fn node_type(&self, id: NodeTypeId) -> &NodeType {
        &self.node_types[id.0]
    }

    pub fn relation(&self, id: RelationId) -> &Relation {
        &self.relations[id.0]
    }

    pub fn type_by_name(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types.iter().position(|t| t.name == name).map(NodeTypeId)
    }

    pub fn relation_by_name(&self, name: &str) -> Option<RelationId> {
        self.relations.iter().position(|r| r.name == name).map(RelationId)
    }

    pub fn num_types(&self) -> usize {
        self.node_types.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }
}

/// A relation seen from the target type: the other endpoint and whether the
/// stored adjacency has the target type on the row side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeighborRelation {
    pub relation: RelationId,
    pub neighbor_type: NodeTypeId,
    pub target_is_src: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HinGraph {
    schema: NetworkSchema,
    adjacency: Vec<SparseAdj>,
    attributes: Vec<Matrix>,
}

impl HinGraph {
    /// `attributes[t]` must be `count x attr_dim` (a `count x 0` matrix for
    /// attributeless types).
    pub fn new(schema: NetworkSchema, adjacency: Vec<SparseAdj>, attributes: Vec<Matrix>) -> Result<Self> {
        schema.validate()?;
        if adjacency.len() != schema.relations.len() {
            return Err(Error::Schema(format!(
                "{} adjacency matrices for {} relations",
                adjacency.len(),
                schema.relations.len()
            )));
        }
        for (r, a) in schema.relations.iter().zip(&adjacency) {
            let (rows, cols) = (schema.node_type(r.src).count, schema.node_type(r.dst).count);
            if a.rows() != rows || a.cols() != cols {
                return Err(Error::Shape(format!(
                    "relation `{}` adjacency is {}x{}, schema requires {rows}x{cols}",
                    r.name,
                    a.rows(),
                    a.cols()
                )));
            }
        }
        if attributes.len() != schema.node_types.len() {
            return Err(Error::Schema(format!(
                "{} attribute matrices for {} node types",
                attributes.len(),
                schema.node_types.len()
            )));
        }
        for (t, x) in schema.node_types.iter().zip(&attributes) {
            if x.rows() != t.count || x.cols() != t.attr_dim {
                return Err(Error::Shape(format!(
                    "node type `{}` attributes are {}x{}, schema requires {}x{}",
                    t.name,
                    x.rows(),
                    x.cols(),
                    t.count,
                    t.attr_dim
                )));
            }
        }
        Ok(Self {
            schema,
            adjacency,
            attributes,
        })
    }

    pub fn schema(&self) -> &NetworkSchema {
        &self.schema
    }

    pub fn adjacency(&self, r: RelationId) -> &SparseAdj {
        &self.adjacency[r.0]
    }

    pub fn attributes(&self, t: NodeTypeId) -> &Matrix {
        &self.attributes[t.0]
    }

    pub fn attributes_mut(&mut self, t: NodeTypeId) -> &mut Matrix {
        &mut self.attributes[t.0]
    }

    pub fn node_count(&self, t: NodeTypeId) -> usize {
        self.schema.node_type(t).count
    }

    pub fn total_nodes(&self) -> usize {
        self.schema.node_types.iter().map(|t| t.count).sum()
    }

    pub fn type_ids(&self) -> impl Iterator<Item = NodeTypeId> {
        (0..self.schema.num_types()).map(NodeTypeId)
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> {
        (0..self.schema.num_relations()).map(RelationId)
    }

    /// Relations with exactly one endpoint at `target`, in relation order.
    pub fn neighbor_relations(&self, target: NodeTypeId) -> Vec<NeighborRelation> {
        self.schema
            .relations
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                if r.src == target && r.dst != target {
                    Some(NeighborRelation {
                        relation: RelationId(i),
                        neighbor_type: r.dst,
                        target_is_src: true,
                    })
                } else if r.dst == target && r.src != target {
                    Some(NeighborRelation {
                        relation: RelationId(i),
                        neighbor_type: r.src,
                        target_is_src: false,
                    })
                } else {
                    None
                }
            })
            .collect()
    }

    /// Adjacency of a neighbor relation oriented as `target x neighbor`.
    pub fn target_adjacency(&self, nr: &NeighborRelation) -> SparseAdj {
        let a = self.adjacency(nr.relation);
        if nr.target_is_src {
            a.clone()
        } else {
            a.transpose()
        }
    }

    pub fn into_parts(self) -> (NetworkSchema, Vec<SparseAdj>, Vec<Matrix>) {
        (self.schema, self.adjacency, self.attributes)
    }
}

/// One hop of a meta-path; `reversed` walks the relation from `dst` to `src`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PathStep {
    pub relation: RelationId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub reversed: bool,
}

impl PathStep {
    pub fn forward(relation: RelationId) -> Self {
        Self {
            relation,
            reversed: false,
        }
    }

    pub fn backward(relation: RelationId) -> Self {
        Self {
            relation,
            reversed: true,
        }
    }

    fn endpoints(&self, schema: &NetworkSchema) -> (NodeTypeId, NodeTypeId) {
        let r = schema.relation(self.relation);
        if self.reversed {
            (r.dst, r.src)
        } else {
            (r.src, r.dst)
        }
    }
}

/// Composite relation `R_1 ∘ … ∘ R_l`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetaPath {
    steps: Vec<PathStep>,
    start: NodeTypeId,
    end: NodeTypeId,
}

impl MetaPath {
    pub fn new(schema: &NetworkSchema, steps: Vec<PathStep>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::InvalidArgument("meta-path needs at least one relation".into()))?;
        for s in &steps {
            if s.relation.0 >= schema.num_relations() {
                return Err(Error::Schema(format!("unknown relation id {}", s.relation.0)));
            }
        }
        let start = first.endpoints(schema).0;
        let mut cur = start;
        for (i, s) in steps.iter().enumerate() {
            let (a, b) = s.endpoints(schema);
            if a != cur {
                return Err(Error::Schema(format!(
                    "meta-path step {i} (`{}`) starts at `{}` but the path is at `{}`",
                    schema.relation(s.relation).name,
                    schema.node_type(a).name,
                    schema.node_type(cur).name
                )));
            }
            cur = b;
        }
        Ok(Self {
            steps,
            start,
            end: cur,
        })
    }

    pub fn single(schema: &NetworkSchema, relation: RelationId) -> Result<Self> {
        Self::new(schema, vec![PathStep::forward(relation)])
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn start(&self) -> NodeTypeId {
        self.start
    }

    pub fn end(&self) -> NodeTypeId {
        self.end
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Binary adjacency of the composite relation, `|start| x |end|`.
pub fn compose_metapath_adjacency(graph: &HinGraph, path: &MetaPath) -> Result<SparseAdj> {
    // Re-validate: the path may have been built against another schema.
    let checked = MetaPath::new(graph.schema(), path.steps.clone())?;
    if checked != *path {
        return Err(Error::Schema("meta-path endpoints disagree with graph schema".into()));
    }
    let mut acc: Option<SparseAdj> = None;
    for s in &path.steps {
        let a = graph.adjacency(s.relation);
        let hop = if s.reversed { a.transpose() } else { a.clone() };
        acc = Some(match acc {
            None => hop,
            Some(prev) => prev.bool_product(&hop)?,
        });
    }
    Ok(acc.expect("non-empty path"))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LabelSpec {
    pub target_type: NodeTypeId,
    pub num_classes: usize,
    /// `None` marks an unlabeled node.
    pub labels: Vec<Option<usize>>,
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
    pub minority_classes: Vec<usize>,
}

impl LabelSpec {
    pub fn validate(&self, graph: &HinGraph) -> Result<()> {
        let n = graph.node_count(self.target_type);
        if self.labels.len() != n || self.train.len() != n || self.val.len() != n || self.test.len() != n {
            return Err(Error::Shape(format!(
                "labels and masks must cover all {n} target nodes"
            )));
        }
        self.validate_masks()
    }

    pub fn validate_masks(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if l.is_some_and(|c| c >= self.num_classes) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} has class {} but only {} classes exist",
                    l.unwrap(),
                    self.num_classes
                )));
            }
            let k = self.train[i] as u8 + self.val[i] as u8 + self.test[i] as u8;
            if k > 1 {
                return Err(Error::InvalidArgument(format!("node {i} appears in more than one split")));
            }
            if k == 1 && l.is_none() {
                return Err(Error::InvalidArgument(format!("split node {i} has no label")));
            }
        }
        if let Some(&c) = self.minority_classes.iter().find(|&&c| c >= self.num_classes) {
            return Err(Error::InvalidArgument(format!("minority class {c} out of range")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labeled members of `class` inside `mask`, ascending.
    pub fn members(&self, mask: &[bool], class: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| mask[i] && self.labels[i] == Some(class))
            .collect()
    }

    pub fn train_members(&self, class: usize) -> Vec<usize> {
        self.members(&self.train, class)
    }

    pub fn class_counts(&self, mask: &[bool]) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for (i, l) in self.labels.iter().enumerate() {
            if let (true, Some(c)) = (mask[i], l) {
                counts[*c] += 1;
            }
        }
        counts
    }

    pub fn is_minority(&self, class: usize) -> bool {
        self.minority_classes.contains(&class)
    }
}

/// `min |C_i| / max |C_i|` over labeled nodes in `scope`.
pub fn imbalance_ratio(labels: &LabelSpec, scope: &[bool]) -> Result<f64> {
    let counts = labels.class_counts(scope);
    ratio_of_counts(&counts)
}

pub(crate) fn ratio_of_counts(counts: &[usize]) -> Result<f64> {
    let min = counts.iter().copied().min().unwrap_or(0);
    let max = counts.iter().copied().max().unwrap_or(0);
    if min == 0 {
        return Err(Error::DegenerateClasses(format!(
            "class sizes {counts:?} include an empty class"
        )));
    }
    Ok(min as f64 / max as f64)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SplitConfig {
    pub label_rate: f64,
    pub imbalance_ratio: f64,
    pub minority_classes: Vec<usize>,
    pub seed: u64,
}

/// Per-class training quotas `(majority, minority)`.
pub fn split_quotas(target_nodes: usize, num_classes: usize, label_rate: f64, imbalance_ratio: f64) -> (usize, usize) {
    // Guard the rounding against representation error, e.g. 0.06*1000/2.
    let major = libm::ceil(label_rate * target_nodes as f64 / num_classes as f64 - 1e-9).max(0.0) as usize;
    let minor = libm::floor(imbalance_ratio * major as f64 + 1e-9) as usize;
    (major, minor.max(1))
}

/// Samples a training set with `major` nodes per majority class and
/// `⌊ratio·major⌋` per minority class, then splits the remaining labeled
/// nodes 1:3 into validation and test, stratified by class.
pub fn build_imbalanced_split(
    graph: &HinGraph,
    target_type: NodeTypeId,
    labels_full: &[Option<usize>],
    num_classes: usize,
    cfg: &SplitConfig,
) -> Result<LabelSpec> {
    if !(cfg.label_rate > 0.0 && cfg.label_rate <= 1.0) {
        return Err(Error::InvalidArgument(format!("label rate {} not in (0, 1]", cfg.label_rate)));
    }
    if !(cfg.imbalance_ratio > 0.0 && cfg.imbalance_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "imbalance ratio {} not in (0, 1]",
            cfg.imbalance_ratio
        )));
    }
    let n = graph.node_count(target_type);
    if labels_full.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} target nodes", labels_full.len())));
    }
    let (major, minor) = split_quotas(n, num_classes, cfg.label_rate, cfg.imbalance_ratio);
    let mut spec = LabelSpec {
        target_type,
        num_classes,
        labels: labels_full.to_vec(),
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
        minority_classes: cfg.minority_classes.clone(),
    };
    spec.validate_masks()?;
    let mut rng = rng::stream(cfg.seed, 0x5_9117);
    for class in 0..num_classes {
        let mut pool: Vec<usize> = (0..n).filter(|&i| labels_full[i] == Some(class)).collect();
        let want = if spec.is_minority(class) { minor } else { major };
        if want > pool.len() {
            return Err(Error::Insufficient(format!(
                "class {class} needs {want} training nodes but has {} labeled",
                pool.len()
            )));
        }
        pool.shuffle(&mut rng);
        let (train, rest) = pool.split_at(want);
        let n_val = rest.len() / 4;
        for &i in train {
            spec.train[i] = true;
        }
        for &i in &rest[..n_val] {
            spec.val[i] = true;
        }
        for &i in &rest[n_val..] {
            spec.test[i] = true;
        }
    }
    Ok(spec)
}
