//! Classification, semantic and prototype losses, and the combined objective
//! that wires them to the projection heads and the encoder backward pass.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::encoder::{mlp_backward, mlp_forward, Encoder, Gradients, MlpTape, ModelState};
use crate::error::{Error, Result};
use crate::hin::{HinGraph, LabelSpec, NeighborRelation, NodeTypeId};
use crate::linalg::{axpy, dot, Matrix};
use crate::rng::Rng;
use crate::sparse::SparseAdj;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub temperature: f64,
    /// Adds one sampled non-edge `−log σ(−p_i·p_j')` per positive pair.
    pub negative_sampling: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            temperature: 1.0,
            negative_sampling: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!("temperature {} must be positive", self.temperature)));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LossBreakdown {
    pub cla: f64,
    pub sem: f64,
    /// One entry per neighbor relation of the target type.
    pub sem_per_relation: Vec<f64>,
    pub e: f64,
    pub o: f64,
    pub pro: f64,
    pub total: f64,
}

/// `L = L_cla + λ1·L_sem + λ2·L_pro`
pub fn total_loss(cla: f64, sem: f64, pro: f64, cfg: &LossConfig) -> f64 {
    cla + cfg.lambda1 * sem + cfg.lambda2 * pro
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    // log σ(x) = −log(1 + e^{−x}), evaluated without overflow
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Softmax of a row and its log-sum-exp.
fn softmax_row(row: &[f64], scale: f64, out: &mut [f64]) -> f64 {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x * scale));
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(row) {
        *o = libm::exp(x * scale - max);
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    max + libm::log(sum)
}

/// Mean softmax cross-entropy over masked nodes, and its logit gradient.
pub fn classification_loss(logits: &Matrix, labels: &[Option<usize>], mask: &[bool]) -> Result<(f64, Matrix)> {
    if labels.len() != logits.rows() || mask.len() != logits.rows() {
        return Err(Error::Shape("labels, mask and logits disagree".into()));
    }
    let rows: Vec<usize> = (0..logits.rows()).filter(|&i| mask[i]).collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("classification mask is empty".into()));
    }
    let n = rows.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    let mut prob = vec![0.0; logits.cols()];
    for &i in &rows {
        let y = labels[i].ok_or_else(|| Error::InvalidArgument(format!("masked node {i} is unlabeled")))?;
        if y >= logits.cols() {
            return Err(Error::InvalidArgument(format!("label {y} of node {i} exceeds class count")));
        }
        let lse = softmax_row(logits.row(i), 1.0, &mut prob);
        loss += lse - logits.get(i, y);
        let g = grad.row_mut(i);
        for (c, p) in prob.iter().enumerate() {
            g[c] = (p - if c == y { 1.0 } else { 0.0 }) / n;
        }
    }
    Ok((loss / n, grad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticTerm {
    pub value: f64,
    /// Gradient on target projections (all target rows).
    pub d_target: Matrix,
    /// Gradient on neighbor projections.
    pub d_neighbor: Matrix,
    /// `|V̂|`: distinct neighbors of synthetic nodes.
    pub hat_size: usize,
}

/// Neighbors (of the given relation) touched by at least one synthetic node.
pub fn synthetic_neighbor_set(adj_tk: &SparseAdj, synthetic: Range<usize>) -> Vec<usize> {
    let mut set: Vec<usize> = synthetic.flat_map(|i| adj_tk.row(i).iter().copied()).collect();
    set.sort_unstable();
    set.dedup();
    set
}

/// Semantic loss for one neighbor relation:
/// `−(1/|Ṽ|) Σ_i (1/|V̂|) Σ_{j ∈ V̂} A_ij log σ(p_i·p_j)` over every target row `i`.
/// `negatives`, when given, lists sampled non-edge pairs `(i, j')` that add
/// `−log σ(−p_i·p_j')` with the same weighting.
pub fn semantic_loss_term(
    p_target: &Matrix,
    p_neighbor: &Matrix,
    adj_tk: &SparseAdj,
    synthetic: Range<usize>,
    negatives: Option<&[(usize, usize)]>,
) -> Result<SemanticTerm> {
    if adj_tk.rows() != p_target.rows() || adj_tk.cols() != p_neighbor.rows() || p_target.cols() != p_neighbor.cols() {
        return Err(Error::Shape("semantic loss inputs disagree with the adjacency".into()));
    }
    let hat = synthetic_neighbor_set(adj_tk, synthetic);
    let mut d_target = Matrix::zeros(p_target.rows(), p_target.cols());
    let mut d_neighbor = Matrix::zeros(p_neighbor.rows(), p_neighbor.cols());
    if hat.is_empty() || p_target.rows() == 0 {
        return Ok(SemanticTerm {
            value: 0.0,
            d_target,
            d_neighbor,
            hat_size: 0,
        });
    }
    let mut in_hat = vec![false; p_neighbor.rows()];
    for &j in &hat {
        in_hat[j] = true;
    }
    let w = 1.0 / (p_target.rows() as f64 * hat.len() as f64);
    let mut value = 0.0;
    let mut pair = |i: usize, j: usize, sign: f64, value: &mut f64| {
        let s = sign * dot(p_target.row(i), p_neighbor.row(j));
        *value -= w * log_sigmoid(s);
        // d/ds of −log σ(s) is σ(s) − 1; chain through s = sign·p_i·p_j
        let coef = w * sign * (sigmoid(s) - 1.0);
        axpy(coef, p_neighbor.row(j), d_target.row_mut(i));
        axpy(coef, p_target.row(i), d_neighbor.row_mut(j));
    };
    for i in 0..adj_tk.rows() {
        for &j in adj_tk.row(i) {
            if in_hat[j] {
                pair(i, j, 1.0, &mut value);
            }
        }
    }
    if let Some(neg) = negatives {
        for &(i, j) in neg {
            pair(i, j, -1.0, &mut value);
        }
    }
    Ok(SemanticTerm {
        value,
        d_target,
        d_neighbor,
        hat_size: hat.len(),
    })
}

/// One uniformly drawn non-neighbor in `V̂` per positive pair; pairs whose
/// row already covers `V̂` get none.
pub fn sample_negatives(adj_tk: &SparseAdj, synthetic: Range<usize>, rng: &mut Rng) -> Vec<(usize, usize)> {
    let hat = synthetic_neighbor_set(adj_tk, synthetic);
    let mut out = Vec::new();
    if hat.is_empty() {
        return out;
    }
    let mut in_hat = vec![false; adj_tk.cols()];
    for &j in &hat {
        in_hat[j] = true;
    }
    for i in 0..adj_tk.rows() {
        let row = adj_tk.row(i);
        let covered = row.iter().filter(|&&j| in_hat[j]).count();
        if covered == hat.len() {
            continue;
        }
        for _ in 0..covered {
            loop {
                let j = hat[rng.random_range(0..hat.len())];
                if row.binary_search(&j).is_err() {
                    out.push((i, j));
                    break;
                }
            }
        }
    }
    out
}

/// `g_i = (q_i + Σ_k mean_{u ∈ N_k(i)} q_u) / (1 + |Ã|)`; an empty
/// neighborhood contributes zero but still counts in the divisor.
pub fn semantic_embedding(q_target: &Matrix, q_neighbors: &[&Matrix], adjs: &[&SparseAdj], i: usize) -> Vec<f64> {
    let scale = 1.0 / (1.0 + adjs.len() as f64);
    let mut g: Vec<f64> = q_target.row(i).to_vec();
    for (q, a) in q_neighbors.iter().zip(adjs) {
        let nb = a.row(i);
        if nb.is_empty() {
            continue;
        }
        let w = 1.0 / nb.len() as f64;
        for &u in nb {
            axpy(w, q.row(u), &mut g);
        }
    }
    g.iter_mut().for_each(|x| *x *= scale);
    g
}

/// [`semantic_embedding`] for every target row.
pub fn semantic_embeddings(q_target: &Matrix, q_neighbors: &[&Matrix], adjs: &[&SparseAdj]) -> Matrix {
    let mut g = Matrix::zeros(q_target.rows(), q_target.cols());
    for i in 0..q_target.rows() {
        g.row_mut(i).copy_from_slice(&semantic_embedding(q_target, q_neighbors, adjs, i));
    }
    g
}

/// Pulls `∂L/∂g` back to the target and neighbor projections.
pub fn semantic_embeddings_backward(
    dg: &Matrix,
    neighbor_rows: &[usize],
    adjs: &[&SparseAdj],
) -> (Matrix, Vec<Matrix>) {
    let scale = 1.0 / (1.0 + adjs.len() as f64);
    let mut dq_t = dg.clone();
    dq_t.scale(scale);
    let mut dq_k: Vec<Matrix> = neighbor_rows.iter().map(|&n| Matrix::zeros(n, dg.cols())).collect();
    for (k, a) in adjs.iter().enumerate() {
        for i in 0..dg.rows() {
            let nb = a.row(i);
            if nb.is_empty() {
                continue;
            }
            let w = scale / nb.len() as f64;
            for &u in nb {
                axpy(w, dg.row(i), dq_k[k].row_mut(u));
            }
        }
    }
    (dq_t, dq_k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeTerm {
    pub l_e: f64,
    pub l_o: f64,
    pub value: f64,
    pub d_q: Matrix,
    pub d_g: Matrix,
    /// Minority classes without synthetic nodes.
    pub skipped: Vec<usize>,
}

/// Class means of `x` over real labeled training nodes.
fn prototypes(x: &Matrix, members: &[Vec<usize>]) -> Matrix {
    let mut e = Matrix::zeros(members.len(), x.cols());
    for (c, m) in members.iter().enumerate() {
        let w = 1.0 / m.len() as f64;
        for &i in m {
            axpy(w, x.row(i), e.row_mut(c));
        }
    }
    e
}

/// One domain of the prototype loss; returns the value and accumulates
/// gradients into `dx` (including the path through the prototypes).
fn prototype_domain(
    x: &Matrix,
    members: &[Vec<usize>],
    by_class: &[(usize, Vec<usize>)],
    temperature: f64,
    dx: &mut Matrix,
) -> f64 {
    let m = members.len();
    let e = prototypes(x, members);
    let mut de = Matrix::zeros(m, x.cols());
    let mut loss = 0.0;
    let outer = 1.0 / by_class.len() as f64;
    let mut sims = vec![0.0; m];
    let mut prob = vec![0.0; m];
    for (c, ids) in by_class {
        let w = outer / ids.len() as f64;
        for &i in ids {
            for (j, s) in sims.iter_mut().enumerate() {
                *s = dot(x.row(i), e.row(j));
            }
            let lse = softmax_row(&sims, 1.0 / temperature, &mut prob);
            loss += w * (lse - sims[*c] / temperature);
            for j in 0..m {
                let coef = w * (prob[j] - if j == *c { 1.0 } else { 0.0 }) / temperature;
                axpy(coef, e.row(j), dx.row_mut(i));
                axpy(coef, x.row(i), de.row_mut(j));
            }
        }
    }
    for (j, mem) in members.iter().enumerate() {
        let w = 1.0 / mem.len() as f64;
        for &r in mem {
            axpy(w, de.row(j), dx.row_mut(r));
        }
    }
    loss
}

/// `L_pro = (L_e + L_o)/2` over synthetic nodes of the minority classes.
/// Prototypes average real labeled training nodes (ids below
/// `synthetic.start`) and are differentiated through.
pub fn prototype_loss(
    q: &Matrix,
    g: &Matrix,
    labels: &LabelSpec,
    synthetic: Range<usize>,
    temperature: f64,
) -> Result<PrototypeTerm> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument("temperature must be positive".into()));
    }
    if q.shape() != g.shape() || q.rows() != labels.len() || synthetic.end > q.rows() {
        return Err(Error::Shape("prototype loss inputs disagree".into()));
    }
    let m = labels.num_classes;
    let mut members = vec![Vec::new(); m];
    for i in 0..synthetic.start {
        if let (true, Some(c)) = (labels.train[i], labels.labels[i]) {
            members[c].push(i);
        }
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::Insufficient(format!("class {c} has no labeled real training node for its prototype")));
    }
    let mut classes = labels.minority_classes.clone();
    classes.sort_unstable();
    classes.dedup();
    let mut by_class = Vec::new();
    let mut skipped = Vec::new();
    for c in classes {
        let ids: Vec<usize> = synthetic.clone().filter(|&i| labels.labels[i] == Some(c)).collect();
        if ids.is_empty() {
            log::warn!("minority class {c} has no synthetic nodes; skipped in the prototype loss");
            skipped.push(c);
        } else {
            by_class.push((c, ids));
        }
    }
    let mut d_q = Matrix::zeros(q.rows(), q.cols());
    let mut d_g = Matrix::zeros(g.rows(), g.cols());
    if by_class.is_empty() {
        return Ok(PrototypeTerm {
            l_e: 0.0,
            l_o: 0.0,
            value: 0.0,
            d_q,
            d_g,
            skipped,
        });
    }
    let l_e = prototype_domain(q, &members, &by_class, temperature, &mut d_q);
    let l_o = prototype_domain(g, &members, &by_class, temperature, &mut d_g);
    d_q.scale(0.5);
    d_g.scale(0.5);
    Ok(PrototypeTerm {
        l_e,
        l_o,
        value: 0.5 * (l_e + l_o),
        d_q,
        d_g,
        skipped,
    })
}

/// Topology-dependent inputs of the combined objective; build once per
/// augmented graph.
#[derive(Clone, Debug)]
pub struct ObjectiveContext {
    pub target: NodeTypeId,
    pub relations: Vec<NeighborRelation>,
    /// `target x neighbor` adjacency per relation, synthetic edges included.
    pub adj_tk: Vec<SparseAdj>,
    pub synthetic: Range<usize>,
}

impl ObjectiveContext {
    pub fn new(graph: &HinGraph, target: NodeTypeId, synthetic: Range<usize>) -> Self {
        let relations = graph.neighbor_relations(target);
        let adj_tk = relations.iter().map(|nr| graph.target_adjacency(nr)).collect();
        Self {
            target,
            relations,
            adj_tk,
            synthetic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: LossBreakdown,
    pub grads: Gradients,
    pub logits: Matrix,
}

/// Weights of the three loss terms in the differentiated total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermWeights {
    pub cla: f64,
    pub sem: f64,
    pub pro: f64,
}

impl TermWeights {
    pub fn from_config(cfg: &LossConfig) -> Self {
        Self {
            cla: 1.0,
            sem: cfg.lambda1,
            pro: cfg.lambda2,
        }
    }
}

/// Forward pass, all loss terms and the full backward pass of
/// `L_cla + λ1·L_sem + λ2·L_pro`.
pub fn evaluate(
    graph: &HinGraph,
    labels: &LabelSpec,
    ctx: &ObjectiveContext,
    encoder: &Encoder,
    state: &ModelState,
    cfg: &LossConfig,
    rng: Option<&mut Rng>,
) -> Result<Evaluation> {
    evaluate_weighted(graph, labels, ctx, encoder, state, cfg, TermWeights::from_config(cfg), rng)
}

/// [`evaluate`] with explicit term weights; `loss.total` is the weighted sum
/// and the gradients are those of that sum. `cfg`'s lambdas are ignored.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_weighted(
    graph: &HinGraph,
    labels: &LabelSpec,
    ctx: &ObjectiveContext,
    encoder: &Encoder,
    state: &ModelState,
    cfg: &LossConfig,
    w: TermWeights,
    rng: Option<&mut Rng>,
) -> Result<Evaluation> {
    cfg.validate()?;
    let tape = encoder.forward(graph, state)?;
    let (cla, mut dlogits) = classification_loss(&tape.logits, &labels.labels, &labels.train)?;
    dlogits.scale(w.cla);
    let z = tape.embeddings();
    let mut dz: Vec<Matrix> = z.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    let mut grads = encoder.zero_gradients(graph, state);
    let mut loss = LossBreakdown {
        cla,
        sem_per_relation: vec![0.0; ctx.relations.len()],
        ..Default::default()
    };
    let t = ctx.target.0;
    let lay = &state.layout;

    if ctx.synthetic.is_empty() {
        log::debug!("no synthetic nodes; semantic and prototype terms are zero");
    } else {
        // semantic term through MLP_s
        let mut s_tapes: Vec<Option<MlpTape>> = vec![None; z.len()];
        s_tapes[t] = Some(mlp_forward(state, &lay.mlp_s[t], &z[t]));
        for nr in &ctx.relations {
            let k = nr.neighbor_type.0;
            if s_tapes[k].is_none() {
                s_tapes[k] = Some(mlp_forward(state, &lay.mlp_s[k], &z[k]));
            }
        }
        let mut dp: Vec<Option<Matrix>> = s_tapes
            .iter()
            .map(|tp| tp.as_ref().map(|tp| Matrix::zeros(tp.out.rows(), tp.out.cols())))
            .collect();
        let mut rng = rng;
        for (r, nr) in ctx.relations.iter().enumerate() {
            let k = nr.neighbor_type.0;
            let negatives = match (&mut rng, cfg.negative_sampling) {
                (Some(rng), true) => Some(sample_negatives(&ctx.adj_tk[r], ctx.synthetic.clone(), rng)),
                _ => None,
            };
            let term = semantic_loss_term(
                &s_tapes[t].as_ref().unwrap().out,
                &s_tapes[k].as_ref().unwrap().out,
                &ctx.adj_tk[r],
                ctx.synthetic.clone(),
                negatives.as_deref(),
            )?;
            loss.sem_per_relation[r] = term.value;
            loss.sem += term.value;
            if w.sem != 0.0 {
                dp[t].as_mut().unwrap().scaled_add(w.sem, &term.d_target);
                dp[k].as_mut().unwrap().scaled_add(w.sem, &term.d_neighbor);
            }
        }
        if w.sem != 0.0 {
            for (ty, tp) in s_tapes.iter().enumerate() {
                if let (Some(tp), Some(d)) = (tp, &dp[ty]) {
                    let dzz = mlp_backward(state, &lay.mlp_s[ty], tp, &z[ty], d, &mut grads.params);
                    dz[ty].add_assign(&dzz);
                }
            }
        }

        // prototype term through MLP_p and the semantic domain
        let mut p_tapes: Vec<Option<MlpTape>> = vec![None; z.len()];
        p_tapes[t] = Some(mlp_forward(state, &lay.mlp_p[t], &z[t]));
        for nr in &ctx.relations {
            let k = nr.neighbor_type.0;
            if p_tapes[k].is_none() {
                p_tapes[k] = Some(mlp_forward(state, &lay.mlp_p[k], &z[k]));
            }
        }
        let q_t = &p_tapes[t].as_ref().unwrap().out;
        let q_k: Vec<&Matrix> = ctx
            .relations
            .iter()
            .map(|nr| &p_tapes[nr.neighbor_type.0].as_ref().unwrap().out)
            .collect();
        let adjs: Vec<&SparseAdj> = ctx.adj_tk.iter().collect();
        let gsem = semantic_embeddings(q_t, &q_k, &adjs);
        let pro = prototype_loss(q_t, &gsem, labels, ctx.synthetic.clone(), cfg.temperature)?;
        loss.e = pro.l_e;
        loss.o = pro.l_o;
        loss.pro = pro.value;
        if w.pro != 0.0 {
            let rows: Vec<usize> = q_k.iter().map(|q| q.rows()).collect();
            let (dq_from_g, dq_k) = semantic_embeddings_backward(&pro.d_g, &rows, &adjs);
            let mut dq: Vec<Option<Matrix>> = p_tapes
                .iter()
                .map(|tp| tp.as_ref().map(|tp| Matrix::zeros(tp.out.rows(), tp.out.cols())))
                .collect();
            {
                let d = dq[t].as_mut().unwrap();
                d.scaled_add(w.pro, &pro.d_q);
                d.scaled_add(w.pro, &dq_from_g);
            }
            for (r, nr) in ctx.relations.iter().enumerate() {
                dq[nr.neighbor_type.0].as_mut().unwrap().scaled_add(w.pro, &dq_k[r]);
            }
            for (ty, tp) in p_tapes.iter().enumerate() {
                if let (Some(tp), Some(d)) = (tp, &dq[ty]) {
                    let dzz = mlp_backward(state, &lay.mlp_p[ty], tp, &z[ty], d, &mut grads.params);
                    dz[ty].add_assign(&dzz);
                }
            }
        }
    }
    loss.total = w.cla * loss.cla + w.sem * loss.sem + w.pro * loss.pro;
    encoder.backward(graph, state, &tape, &dz, &dlogits, &mut grads)?;
    Ok(Evaluation {
        loss,
        grads,
        logits: tape.logits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(r: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn uniform_logits_give_ln_m() {
        let logits = Matrix::zeros(4, 5);
        let (l, _) = classification_loss(&logits, &[Some(0), Some(1), Some(4), Some(2)], &[true; 4]).unwrap();
        assert!((l - libm::log(5.0)).abs() < 1e-12);
    }

    #[test]
    fn dominant_true_logit_gives_near_zero_loss() {
        let logits = rows(&[&[50.0, 0.0], &[0.0, 50.0]]);
        let (l, g) = classification_loss(&logits, &[Some(0), Some(1)], &[true, true]).unwrap();
        assert!(l < 1e-20);
        assert!(g.max_abs() < 1e-20);
    }

    #[test]
    fn cross_entropy_hand_case() {
        let logits = rows(&[&[1.0, 2.0], &[0.5, -0.5], &[3.0, 3.0]]);
        let (l, g) = classification_loss(&logits, &[Some(1), Some(0), None], &[true, true, false]).unwrap();
        let want = (libm::log(libm::exp(1.0) + libm::exp(2.0)) - 2.0 + libm::log(libm::exp(0.5) + libm::exp(-0.5)) - 0.5) / 2.0;
        assert!((l - want).abs() < 1e-14);
        assert_eq!(g.row(2), &[0.0, 0.0]);
        assert!(classification_loss(&logits, &[None; 3], &[false; 3]).is_err());
    }

    #[test]
    fn empty_hat_set_gives_zero_semantic_loss() {
        let p_t = rows(&[&[1.0], &[2.0], &[0.5]]);
        let p_k = rows(&[&[1.0], &[1.0]]);
        // synthetic node 2 isolated
        let adj = SparseAdj::from_edges(3, 2, &[(0, 0), (1, 1)]).unwrap();
        let term = semantic_loss_term(&p_t, &p_k, &adj, 2..3, None).unwrap();
        assert_eq!(term.value, 0.0);
        assert_eq!(term.hat_size, 0);
    }

    #[test]
    fn semantic_two_by_two_hand_case() {
        // targets 0 (real) and 1 (synthetic); neighbors 0, 1; synthetic touches neighbor 1
        let p_t = rows(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let p_k = rows(&[&[2.0, 1.0], &[-1.0, 1.0]]);
        let adj = SparseAdj::from_edges(2, 2, &[(0, 0), (0, 1), (1, 1)]).unwrap();
        let term = semantic_loss_term(&p_t, &p_k, &adj, 1..2, None).unwrap();
        // V̂ = {1}; pairs in V̂: (0,1) s=-1, (1,1) s=0
        let ls = |x: f64| -libm::log(1.0 + libm::exp(-x));
        let want = -(1.0 / 2.0) * ((ls(-1.0) + ls(0.0)) / 1.0);
        assert!((term.value - want).abs() < 1e-15);
    }

    #[test]
    fn semantic_embedding_conventions() {
        let q_t = rows(&[&[3.0, 6.0], &[1.0, 1.0]]);
        let q_a = rows(&[&[1.0, 1.0]]);
        let q_b = rows(&[&[5.0, 5.0]]);
        let none_a = SparseAdj::empty(2, 1);
        let none_b = SparseAdj::empty(2, 1);
        assert_eq!(semantic_embedding(&q_t, &[&q_a, &q_b], &[&none_a, &none_b], 0), vec![1.0, 2.0]);
        let one = SparseAdj::from_edges(2, 1, &[(1, 0)]).unwrap();
        assert_eq!(semantic_embedding(&q_t, &[&q_b], &[&one], 1), vec![3.0, 3.0]);
    }

    #[test]
    fn prototype_uniform_similarity_gives_ln2() {
        // two classes with identical prototypes -> uniform softmax
        let q = rows(&[&[1.0, 0.0], &[1.0, 0.0], &[0.3, 0.7]]);
        let labels = LabelSpec {
            target_type: NodeTypeId(0),
            num_classes: 2,
            labels: vec![Some(0), Some(1), Some(1)],
            train: vec![true; 3],
            val: vec![false; 3],
            test: vec![false; 3],
            minority_classes: vec![1],
        };
        let p = prototype_loss(&q, &q, &labels, 2..3, 1.0).unwrap();
        assert!((p.l_e - libm::log(2.0)).abs() < 1e-15);
        assert!((p.value - libm::log(2.0)).abs() < 1e-15);
    }

    #[test]
    fn prototype_requires_every_class() {
        let q = rows(&[&[1.0], &[2.0]]);
        let labels = LabelSpec {
            target_type: NodeTypeId(0),
            num_classes: 2,
            labels: vec![Some(0), Some(1)],
            train: vec![true, true],
            val: vec![false; 2],
            test: vec![false; 2],
            minority_classes: vec![1],
        };
        assert!(matches!(prototype_loss(&q, &q, &labels, 1..2, 1.0), Err(Error::Insufficient(_))));
    }

    #[test]
    fn total_loss_arithmetic() {
        let cfg = LossConfig { lambda1: 1.0, lambda2: 1.0, ..Default::default() };
        assert_eq!(total_loss(0.5, 0.2, 0.3, &cfg), 1.0);
        let off = LossConfig { lambda1: 0.0, lambda2: 0.0, ..Default::default() };
        assert_eq!(total_loss(0.7, 5.0, 9.0, &off), 0.7);
    }
}
