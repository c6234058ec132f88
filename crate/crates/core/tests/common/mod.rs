#![allow(dead_code)]

use hinbal_core::bench::{diagonal_affinity, generate, NeighborTypeSpec, PlantedHinConfig};
use hinbal_core::encoder::{Encoder, ModelConfig, ModelState};
use hinbal_core::hin::{HinGraph, LabelSpec, NetworkSchema, NodeTypeId, Relation};
use hinbal_core::influence::{build_influence_tables, InfluenceConfig, Mu, SelectionMode};
use hinbal_core::objective::ObjectiveContext;
use hinbal_core::rng;
use hinbal_core::synthesis::{augment, synthesize_batch, SynthesisConfig, SyntheticBatch};
use hinbal_core::SparseAdj;
use rand::Rng as _;

pub fn small_planted(seed: u64) -> PlantedHinConfig {
    PlantedHinConfig {
        target_name: "paper".into(),
        num_classes: 2,
        nodes_per_class: vec![6, 6],
        minority_classes: vec![1],
        neighbor_types: vec![
            NeighborTypeSpec {
                name: "author".into(),
                count: 10,
                attr_dim: 3,
                block_fraction: 0.8,
                affinity: diagonal_affinity(2, 0.7),
                degree: (1, 2),
                minority_degree: (1, 2),
            },
            NeighborTypeSpec {
                name: "venue".into(),
                count: 4,
                attr_dim: 0,
                block_fraction: 0.5,
                affinity: diagonal_affinity(2, 0.7),
                degree: (1, 1),
                minority_degree: (1, 1),
            },
        ],
        attr_dim: 4,
        separation: 1.0,
        noise: 0.5,
        label_rate: 0.5,
        imbalance_ratio: 0.34,
        seed,
    }
}

/// Adds an author-venue relation and a paper self-relation with random edges.
pub fn with_extra_relations(graph: &HinGraph, seed: u64) -> HinGraph {
    let mut r = rng::stream(seed, 77);
    let (mut schema, mut adjacency, attributes): (NetworkSchema, Vec<SparseAdj>, _) = graph.clone().into_parts();
    let (np, na, nv) = (schema.node_types[0].count, schema.node_types[1].count, schema.node_types[2].count);
    let mut av = Vec::new();
    for a in 0..na {
        av.push((a, r.random_range(0..nv)));
    }
    let mut cites = Vec::new();
    for p in 0..np {
        if r.random_bool(0.5) {
            cites.push((p, r.random_range(0..np)));
        }
    }
    schema.relations.push(Relation { name: "author-venue".into(), src: NodeTypeId(1), dst: NodeTypeId(2) });
    schema.relations.push(Relation { name: "cites".into(), src: NodeTypeId(0), dst: NodeTypeId(0) });
    adjacency.push(SparseAdj::from_edges(na, nv, &av).unwrap());
    adjacency.push(SparseAdj::from_edges(np, np, &cites).unwrap());
    HinGraph::new(schema, adjacency, attributes).unwrap()
}

pub struct Instance {
    pub graph: HinGraph,
    pub labels: LabelSpec,
    pub batch: SyntheticBatch,
    pub aug: HinGraph,
    pub aug_labels: LabelSpec,
    pub ctx: ObjectiveContext,
    pub encoder: Encoder,
    pub state: ModelState,
}

/// An augmented graph of at most 30 nodes with synthetic minority nodes.
pub fn small_instance(seed: u64, dim: usize) -> Instance {
    let p = generate(&small_planted(seed)).unwrap();
    let graph = with_extra_relations(&p.graph, seed);
    let labels = p.labels;
    let tables = build_influence_tables(
        &graph,
        &labels,
        &InfluenceConfig::default(),
        Mu::Factor(3.0),
        SelectionMode::Influence,
    )
    .unwrap();
    let syn = SynthesisConfig::default();
    let batch = synthesize_batch(&graph, &labels, &tables, &syn, None, &mut rng::stream(seed, 5)).unwrap();
    assert!(!batch.is_empty());
    let (aug, aug_labels) = augment(&graph, &labels, &batch).unwrap();
    assert!(aug.total_nodes() <= 30, "{}", aug.total_nodes());
    let encoder = Encoder::new(&aug);
    let ctx = ObjectiveContext::new(&aug, NodeTypeId(0), batch.ids());
    let cfg = ModelConfig {
        hidden_dim: dim,
        embed_dim: dim,
        proj_dim: dim,
        init_scale: Some(0.8),
        seed,
    };
    let mut state = ModelState::new(&aug, NodeTypeId(0), 2, &cfg).unwrap();
    // move biases off zero so no pre-activation sits exactly on a ReLU kink
    let mut r = rng::stream(seed, 99);
    for p in state.params_mut() {
        p.as_mut_slice().iter_mut().for_each(|x| *x += r.random_range(-0.3..0.3));
    }
    Instance { graph, labels, batch, aug, aug_labels, ctx, encoder, state }
}
