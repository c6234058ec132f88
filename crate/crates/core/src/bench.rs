//! Planted-structure heterogeneous graphs with controllable semantic
//! imbalance.
//!
//! Every neighbor type is cut into one class-aligned block per class plus a
//! background region. A class-`c` target draws each edge into block `b`
//! with probability `affinity[c][b]` and into the background otherwise.
//! Minority classes draw their degrees from a smaller range.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{build_imbalanced_split, HinGraph, LabelSpec, NetworkSchema, NodeType, NodeTypeId, Relation, SplitConfig};
use crate::linalg::Matrix;
use crate::rng::{self, Rng};
use crate::sparse::SparseAdj;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct NeighborTypeSpec {
    pub name: String,
    pub count: usize,
    /// Zero makes the type attributeless.
    pub attr_dim: usize,
    /// Share of the nodes that belongs to class blocks; the rest is background.
    pub block_fraction: f64,
    /// `affinity[c][b]`; each row sums to at most 1.
    pub affinity: Vec<Vec<f64>>,
    /// Inclusive degree range of majority-class targets.
    pub degree: (usize, usize),
    /// Inclusive degree range of minority-class targets.
    pub minority_degree: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PlantedHinConfig {
    pub target_name: String,
    pub num_classes: usize,
    pub nodes_per_class: Vec<usize>,
    pub minority_classes: Vec<usize>,
    pub neighbor_types: Vec<NeighborTypeSpec>,
    pub attr_dim: usize,
    /// Norm of every class mean.
    pub separation: f64,
    pub noise: f64,
    pub label_rate: f64,
    pub imbalance_ratio: f64,
    pub seed: u64,
}

/// `p` on the diagonal, zero elsewhere.
pub fn diagonal_affinity(m: usize, p: f64) -> Vec<Vec<f64>> {
    (0..m).map(|c| (0..m).map(|b| if b == c { p } else { 0.0 }).collect()).collect()
}

impl PlantedHinConfig {
    /// At most 60 nodes: 20 targets, 24 attributed authors, 6 attributeless venues.
    pub fn tiny() -> Self {
        Self {
            target_name: "paper".into(),
            num_classes: 2,
            nodes_per_class: vec![10, 10],
            minority_classes: vec![1],
            neighbor_types: vec![
                NeighborTypeSpec {
                    name: "author".into(),
                    count: 24,
                    attr_dim: 3,
                    block_fraction: 0.5,
                    affinity: diagonal_affinity(2, 0.8),
                    degree: (2, 4),
                    minority_degree: (1, 2),
                },
                NeighborTypeSpec {
                    name: "venue".into(),
                    count: 6,
                    attr_dim: 0,
                    block_fraction: 0.67,
                    affinity: diagonal_affinity(2, 0.8),
                    degree: (1, 1),
                    minority_degree: (1, 1),
                },
            ],
            attr_dim: 4,
            separation: 1.0,
            noise: 0.5,
            label_rate: 0.3,
            imbalance_ratio: 0.5,
            seed: 0,
        }
    }

    /// About 2,000 nodes: four classes of 400 targets (two minority), 320
    /// attributed authors and 80 attributeless subjects.
    pub fn desk() -> Self {
        Self {
            target_name: "paper".into(),
            num_classes: 4,
            nodes_per_class: vec![400; 4],
            minority_classes: vec![2, 3],
            neighbor_types: vec![
                NeighborTypeSpec {
                    name: "author".into(),
                    count: 320,
                    attr_dim: 8,
                    block_fraction: 0.6,
                    affinity: diagonal_affinity(4, 0.7),
                    degree: (4, 8),
                    minority_degree: (1, 3),
                },
                NeighborTypeSpec {
                    name: "subject".into(),
                    count: 80,
                    attr_dim: 0,
                    block_fraction: 0.6,
                    affinity: diagonal_affinity(4, 0.7),
                    degree: (2, 4),
                    minority_degree: (1, 2),
                },
            ],
            attr_dim: 16,
            separation: 2.0,
            noise: 1.2,
            label_rate: 0.06,
            imbalance_ratio: 0.1,
            seed: 0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "tiny" => Some(Self::tiny()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_classes;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if m < 2 || self.nodes_per_class.len() != m {
            return bad(format!("need at least two classes and one count per class (m = {m})"));
        }
        if self.nodes_per_class.iter().any(|&n| n == 0) {
            return bad("every class needs at least one target node".into());
        }
        if self.minority_classes.iter().any(|&c| c >= m) {
            return bad("minority class out of range".into());
        }
        if self.attr_dim == 0 {
            return bad("the target type needs attributes".into());
        }
        if !(self.separation >= 0.0 && self.noise >= 0.0) {
            return bad("separation and noise must be non-negative".into());
        }
        for nt in &self.neighbor_types {
            if nt.count == 0 {
                return bad(format!("neighbor type `{}` is empty", nt.name));
            }
            if !(0.0..=1.0).contains(&nt.block_fraction) {
                return bad(format!("block fraction of `{}` outside [0, 1]", nt.name));
            }
            if nt.affinity.len() != m || nt.affinity.iter().any(|r| r.len() != m) {
                return bad(format!("affinity of `{}` must be {m} x {m}", nt.name));
            }
            for row in &nt.affinity {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) || row.iter().sum::<f64>() > 1.0 + 1e-12 {
                    return bad(format!("affinity row of `{}` is not a sub-distribution", nt.name));
                }
            }
            if nt.degree.0 > nt.degree.1 || nt.minority_degree.0 > nt.minority_degree.1 {
                return bad(format!("empty degree range for `{}`", nt.name));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Class of every target node.
    pub classes: Vec<usize>,
    /// Per neighbor type, the block (class) of every node; `None` is background.
    pub blocks: Vec<Vec<Option<usize>>>,
    pub class_means: Matrix,
}

#[derive(Clone, Debug)]
pub struct PlantedHin {
    pub graph: HinGraph,
    pub labels: LabelSpec,
    pub truth: GroundTruth,
}

fn gaussian_vec(dim: usize, rng: &mut Rng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn class_means(m: usize, dim: usize, norm: f64, rng: &mut Rng) -> Matrix {
    let mut out = Matrix::zeros(m, dim);
    for c in 0..m {
        let v = gaussian_vec(dim, rng);
        let len = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>()).max(f64::MIN_POSITIVE);
        for (o, x) in out.row_mut(c).iter_mut().zip(v) {
            *o = norm * x / len;
        }
    }
    out
}

/// Node ranges `[block 0, ..., block m-1, background]` of one neighbor type.
fn regions(count: usize, m: usize, fraction: f64) -> Vec<core::ops::Range<usize>> {
    let size = libm::floor(count as f64 * fraction / m as f64) as usize;
    let mut out: Vec<_> = (0..m).map(|b| b * size..(b + 1) * size).collect();
    out.push(m * size..count);
    out
}

pub fn generate(cfg: &PlantedHinConfig) -> Result<PlantedHin> {
    cfg.validate()?;
    let m = cfg.num_classes;
    let mut rng = rng::stream(cfg.seed, 0xbe_0c4);
    let classes: Vec<usize> = cfg
        .nodes_per_class
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| core::iter::repeat_n(c, n))
        .collect();
    let nt = classes.len();
    let minority = |c: usize| cfg.minority_classes.contains(&c);

    let mut node_types = vec![NodeType {
        name: cfg.target_name.clone(),
        count: nt,
        attr_dim: cfg.attr_dim,
    }];
    let mut relations = Vec::new();
    let mut adjacency = Vec::new();
    let mut blocks = Vec::new();

    let means = class_means(m, cfg.attr_dim, cfg.separation, &mut rng);
    let mut x_t = Matrix::zeros(nt, cfg.attr_dim);
    for (i, &c) in classes.iter().enumerate() {
        let noise = gaussian_vec(cfg.attr_dim, &mut rng);
        for (d, (o, e)) in x_t.row_mut(i).iter_mut().zip(noise).enumerate() {
            *o = means.get(c, d) + cfg.noise * e;
        }
    }
    let mut attributes = vec![x_t];

    for (k, spec) in cfg.neighbor_types.iter().enumerate() {
        let regs = regions(spec.count, m, spec.block_fraction);
        let mut edges = Vec::new();
        for (i, &c) in classes.iter().enumerate() {
            let (lo, hi) = if minority(c) { spec.minority_degree } else { spec.degree };
            let deg = rng.random_range(lo..=hi);
            let mut per_region = vec![0usize; m + 1];
            for _ in 0..deg {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut region = m;
                for (b, &p) in spec.affinity[c].iter().enumerate() {
                    acc += p;
                    if u < acc {
                        region = b;
                        break;
                    }
                }
                per_region[region] += 1;
            }
            for (r, &want) in per_region.iter().enumerate() {
                let range = regs[r].clone();
                if want > range.len() {
                    return Err(Error::InvalidArgument(format!(
                        "neighbor type `{}`: target {i} needs {want} distinct nodes from a region of {}",
                        spec.name,
                        range.len()
                    )));
                }
                for j in rand::seq::index::sample(&mut rng, range.len(), want) {
                    edges.push((i, range.start + j));
                }
            }
        }
        adjacency.push(SparseAdj::from_edges(nt, spec.count, &edges)?);
        relations.push(Relation {
            name: format!("{}-{}", cfg.target_name, spec.name),
            src: NodeTypeId(0),
            dst: NodeTypeId(k + 1),
        });
        node_types.push(NodeType {
            name: spec.name.clone(),
            count: spec.count,
            attr_dim: spec.attr_dim,
        });
        let mut block_of = vec![None; spec.count];
        for (b, r) in regs.iter().take(m).enumerate() {
            for j in r.clone() {
                block_of[j] = Some(b);
            }
        }
        let mut x = Matrix::zeros(spec.count, spec.attr_dim);
        if spec.attr_dim > 0 {
            let nb_means = class_means(m, spec.attr_dim, cfg.separation, &mut rng);
            for (j, b) in block_of.iter().enumerate() {
                let noise = gaussian_vec(spec.attr_dim, &mut rng);
                for (d, (o, e)) in x.row_mut(j).iter_mut().zip(noise).enumerate() {
                    let mean = b.map_or(0.0, |b| nb_means.get(b, d));
                    *o = mean + cfg.noise * e;
                }
            }
        }
        attributes.push(x);
        blocks.push(block_of);
    }

    let schema = NetworkSchema { node_types, relations };
    let graph = HinGraph::new(schema, adjacency, attributes)?;
    let full: Vec<Option<usize>> = classes.iter().map(|&c| Some(c)).collect();
    let labels = build_imbalanced_split(
        &graph,
        NodeTypeId(0),
        &full,
        m,
        &SplitConfig {
            label_rate: cfg.label_rate,
            imbalance_ratio: cfg.imbalance_ratio,
            minority_classes: cfg.minority_classes.clone(),
            seed: cfg.seed,
        },
    )?;
    Ok(PlantedHin {
        graph,
        labels,
        truth: GroundTruth {
            classes,
            blocks,
            class_means: means,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_is_small_and_valid() {
        let p = generate(&PlantedHinConfig::tiny()).unwrap();
        assert!(p.graph.total_nodes() <= 60);
        p.labels.validate(&p.graph).unwrap();
        assert_eq!(p.labels.class_counts(&p.labels.train), vec![3, 1]);
    }

    #[test]
    fn desk_is_about_two_thousand_nodes() {
        let p = generate(&PlantedHinConfig::desk()).unwrap();
        let n = p.graph.total_nodes();
        assert!((1800..=2200).contains(&n), "{n}");
        assert_eq!(p.labels.class_counts(&p.labels.train), vec![24, 24, 2, 2]);
    }

    #[test]
    fn same_seed_same_graph() {
        let a = generate(&PlantedHinConfig::tiny()).unwrap();
        let b = generate(&PlantedHinConfig::tiny()).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn full_affinity_links_only_to_own_block() {
        let mut cfg = PlantedHinConfig::tiny();
        for nt in &mut cfg.neighbor_types {
            nt.affinity = diagonal_affinity(2, 1.0);
        }
        let p = generate(&cfg).unwrap();
        for (k, blocks) in p.truth.blocks.iter().enumerate() {
            for (i, j) in p.graph.adjacency(crate::RelationId(k)).edges() {
                assert_eq!(blocks[j], Some(p.truth.classes[i]));
            }
        }
    }

    #[test]
    fn infeasible_budget_is_an_error() {
        let mut cfg = PlantedHinConfig::tiny();
        cfg.neighbor_types[1].degree = (5, 5);
        cfg.neighbor_types[1].affinity = diagonal_affinity(2, 1.0);
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn minority_degrees_are_smaller() {
        let p = generate(&PlantedHinConfig::desk()).unwrap();
        for k in 0..p.graph.schema().num_relations() {
            let adj = p.graph.adjacency(crate::RelationId(k));
            let mean = |minor: bool| {
                let ids: Vec<usize> = (0..adj.rows()).filter(|&i| (p.truth.classes[i] >= 2) == minor).collect();
                ids.iter().map(|&i| adj.degree(i)).sum::<usize>() as f64 / ids.len() as f64
            };
            assert!(mean(true) < mean(false));
        }
    }
}
