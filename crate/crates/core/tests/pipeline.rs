mod common;

use std::collections::BTreeMap;

use hinbal_core::bench::{generate, PlantedHinConfig};
use hinbal_core::encoder::{Encoder, ModelConfig, ModelState};
use hinbal_core::hin::{HinGraph, NodeTypeId, RelationId};
use hinbal_core::influence::{build_influence_tables, InfluenceConfig, Mu, SelectionMode};
use hinbal_core::rng;
use hinbal_core::synthesis::{synthesize_batch, SynthesisConfig};
use hinbal_core::train::{run_experiment, TrainConfig};
use hinbal_core::{Matrix, SparseAdj};
use rand::seq::SliceRandom;

fn quick() -> TrainConfig {
    TrainConfig { epochs: 40, patience: 0, ..Default::default() }
}

/// Relabels target node `i` as `perm[i]`.
fn permute_targets(g: &HinGraph, perm: &[usize]) -> HinGraph {
    let (schema, adjacency, mut attributes) = g.clone().into_parts();
    let x = &attributes[0];
    let mut px = Matrix::zeros(x.rows(), x.cols());
    for (i, &p) in perm.iter().enumerate() {
        px.row_mut(p).copy_from_slice(x.row(i));
    }
    attributes[0] = px;
    let adjacency = adjacency
        .iter()
        .zip(&schema.relations)
        .map(|(a, r)| {
            let edges: Vec<(usize, usize)> = a
                .edges()
                .map(|(i, j)| {
                    let i = if r.src == NodeTypeId(0) { perm[i] } else { i };
                    let j = if r.dst == NodeTypeId(0) { perm[j] } else { j };
                    (i, j)
                })
                .collect();
            SparseAdj::from_edges(a.rows(), a.cols(), &edges).unwrap()
        })
        .collect();
    HinGraph::new(schema, adjacency, attributes).unwrap()
}

#[test]
fn encoder_is_equivariant_to_target_relabeling() {
    let inst = common::small_instance(4, 5);
    let n = inst.aug.node_count(NodeTypeId(0));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(21));
    assert!(perm.iter().enumerate().any(|(i, &p)| i != p));
    let pg = permute_targets(&inst.aug, &perm);
    let a = Encoder::new(&inst.aug).forward(&inst.aug, &inst.state).unwrap().logits;
    let b = Encoder::new(&pg).forward(&pg, &inst.state).unwrap().logits;
    for i in 0..n {
        for c in 0..a.cols() {
            assert!((a.get(i, c) - b.get(perm[i], c)).abs() < 1e-12);
        }
    }
}

#[test]
fn experiments_are_deterministic() {
    let p = generate(&PlantedHinConfig::tiny()).unwrap();
    let a = run_experiment(&p.graph, &p.labels, &quick(), &BTreeMap::new()).unwrap();
    let b = run_experiment(&p.graph, &p.labels, &quick(), &BTreeMap::new()).unwrap();
    assert_eq!(a.test, b.test);
    assert_eq!(a.state.params(), b.state.params());
    assert_eq!(a.batch, b.batch);
    assert_eq!(a.log, b.log);
}

#[test]
fn vanilla_config_has_no_synthetic_nodes_or_auxiliary_losses() {
    let p = generate(&PlantedHinConfig::tiny()).unwrap();
    let mut cfg = quick();
    cfg.synthesis.enabled = false;
    cfg.loss.lambda1 = 0.0;
    cfg.loss.lambda2 = 0.0;
    let e = run_experiment(&p.graph, &p.labels, &cfg, &BTreeMap::new()).unwrap();
    assert!(e.batch.is_empty());
    assert!(e.log.iter().all(|l| l.loss.sem == 0.0 && l.loss.pro == 0.0 && l.loss.total == l.loss.cla));
}

#[test]
fn held_out_labels_never_reach_synthesis() {
    let p = generate(&PlantedHinConfig::tiny()).unwrap();
    let mut scrambled = p.labels.clone();
    for i in 0..scrambled.len() {
        if !scrambled.train[i] {
            scrambled.labels[i] = scrambled.labels[i].map(|c| 1 - c);
        }
    }
    let a = run_experiment(&p.graph, &p.labels, &quick(), &BTreeMap::new()).unwrap();
    let b = run_experiment(&p.graph, &scrambled, &quick(), &BTreeMap::new()).unwrap();
    assert_eq!(a.tables, b.tables);
    let topo = |e: &hinbal_core::train::Experiment| {
        e.batch.nodes.iter().map(|n| (n.class, n.parents, n.delta, n.neighbors.clone())).collect::<Vec<_>>()
    };
    assert_eq!(topo(&a), topo(&b));
    // synthetic ids come after every real node, so they are never evaluated
    assert!(a.batch.first_id == p.labels.len());
}

#[test]
fn synthetic_edges_stay_inside_candidates() {
    let p = generate(&PlantedHinConfig::tiny()).unwrap();
    for mu in [Mu::Factor(1.0), Mu::Factor(3.0), Mu::All] {
        let tables =
            build_influence_tables(&p.graph, &p.labels, &InfluenceConfig::default(), mu, SelectionMode::Influence).unwrap();
        let cfg = SynthesisConfig { mu, ..Default::default() };
        let batch = synthesize_batch(&p.graph, &p.labels, &tables, &cfg, None, &mut rng::seeded(9)).unwrap();
        for node in &batch.nodes {
            for (slot, rel) in batch.relations.iter().enumerate() {
                let t = tables.iter().find(|t| t.relation == *rel && t.minority_class == node.class).unwrap();
                assert!(node.neighbors[slot].iter().all(|j| t.candidates.contains(j)));
            }
        }
    }
}

#[test]
fn model_state_matches_graph_shape() {
    let p = generate(&PlantedHinConfig::tiny()).unwrap();
    let s = ModelState::new(&p.graph, NodeTypeId(0), 2, &ModelConfig::default()).unwrap();
    s.check_graph(&p.graph).unwrap();
    assert!(p.graph.adjacency(RelationId(0)).nnz() > 0);
}
