//! Two-layer relation-aware mean-aggregation encoder, classifier head and
//! per-type projection heads, with explicit reverse-mode gradients.
//!
//! Every relation carries messages both ways, so each relation yields two
//! message channels (forward `src → dst` and reverse `dst → src`) with their
//! own weights. For a node type `A` at layer `ℓ`:
//!
//! ```text
//! pre = h·W_self + b + (1/c_A) Σ_{channels into A} (S_ch · h_sender) · W_ch
//! h'  = relu(pre)
//! ```
//!
//! where `S_ch` averages over the receiver's neighbors in that channel and
//! `c_A` is the number of channels into `A`. Layer 0 inputs are linear
//! projections of the attributes, or learned embedding rows for
//! attributeless types.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{HinGraph, NodeTypeId, RelationId};
use crate::linalg::{axpy, Matrix};
use crate::rng;
use crate::sparse::SparseAdj;

pub const NUM_LAYERS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub embed_dim: usize,
    pub proj_dim: usize,
    /// Uniform init half-width; `None` uses `1/√fan_in` per tensor.
    pub init_scale: Option<f64>,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            embed_dim: 16,
            proj_dim: 16,
            init_scale: None,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.embed_dim == 0 || self.proj_dim == 0 {
            return Err(Error::InvalidArgument("model dimensions must be at least 1".into()));
        }
        if let Some(s) = self.init_scale {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("init_scale {s} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

pub type ParamId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum InputParams {
    Linear { w: ParamId, b: ParamId },
    Embedding { table: ParamId },
}

/// One-hidden-layer rectifier perceptron.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MlpParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LayerParams {
    pub self_w: Vec<ParamId>,
    pub self_b: Vec<ParamId>,
    /// Indexed by channel: `2·relation` forward, `2·relation + 1` reverse.
    pub channel_w: Vec<ParamId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelLayout {
    pub input: Vec<InputParams>,
    pub layers: Vec<LayerParams>,
    pub cls_w: ParamId,
    pub cls_b: ParamId,
    pub mlp_s: Vec<MlpParams>,
    pub mlp_p: Vec<MlpParams>,
}

/// All learnable tensors plus Adam moments.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelState {
    pub config: ModelConfig,
    pub target_type: NodeTypeId,
    pub num_classes: usize,
    pub layout: ModelLayout,
    pub names: Vec<String>,
    params: Vec<Matrix>,
    pub adam_m: Vec<Matrix>,
    pub adam_v: Vec<Matrix>,
    pub step: u64,
    /// Bumped on every parameter mutation; tapes remember it.
    generation: u64,
}

struct Builder<'r> {
    names: Vec<String>,
    params: Vec<Matrix>,
    scale: Option<f64>,
    rng: &'r mut rng::Rng,
}

impl Builder<'_> {
    fn uniform(&mut self, name: String, rows: usize, cols: usize, fan_in: usize) -> ParamId {
        let s = self.scale.unwrap_or_else(|| 1.0 / libm::sqrt(fan_in.max(1) as f64));
        let rng = &mut *self.rng;
        let m = Matrix::from_fn(rows, cols, |_, _| if s > 0.0 { rng.random_range(-s..s) } else { 0.0 });
        self.push(name, m)
    }

    fn zeros(&mut self, name: String, rows: usize, cols: usize) -> ParamId {
        self.push(name, Matrix::zeros(rows, cols))
    }

    fn push(&mut self, name: String, m: Matrix) -> ParamId {
        self.names.push(name);
        self.params.push(m);
        self.params.len() - 1
    }

    fn mlp(&mut self, prefix: &str, ty: &str, input: usize, dim: usize) -> MlpParams {
        MlpParams {
            w1: self.uniform(format!("{prefix}.{ty}.w1"), input, dim, input),
            b1: self.zeros(format!("{prefix}.{ty}.b1"), 1, dim),
            w2: self.uniform(format!("{prefix}.{ty}.w2"), dim, dim, dim),
            b2: self.zeros(format!("{prefix}.{ty}.b2"), 1, dim),
        }
    }
}

impl ModelState {
    pub fn new(graph: &HinGraph, target_type: NodeTypeId, num_classes: usize, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        if num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        let schema = graph.schema();
        let mut r = rng::stream(config.seed, 0x1417);
        let mut b = Builder {
            names: Vec::new(),
            params: Vec::new(),
            scale: config.init_scale,
            rng: &mut r,
        };
        let hid = config.hidden_dim;
        let emb = config.embed_dim;
        let input = schema
            .node_types
            .iter()
            .map(|t| {
                if t.attr_dim > 0 {
                    InputParams::Linear {
                        w: b.uniform(format!("input.{}.w", t.name), t.attr_dim, hid, t.attr_dim),
                        b: b.zeros(format!("input.{}.b", t.name), 1, hid),
                    }
                } else {
                    InputParams::Embedding {
                        table: b.uniform(format!("input.{}.embedding", t.name), t.count, hid, hid),
                    }
                }
            })
            .collect();
        let mut layers = Vec::with_capacity(NUM_LAYERS);
        for l in 0..NUM_LAYERS {
            let out = if l + 1 == NUM_LAYERS { emb } else { hid };
            let self_w = schema
                .node_types
                .iter()
                .map(|t| b.uniform(format!("layer{l}.self.{}.w", t.name), hid, out, hid))
                .collect();
            let self_b = schema
                .node_types
                .iter()
                .map(|t| b.zeros(format!("layer{l}.self.{}.b", t.name), 1, out))
                .collect();
            let mut channel_w = Vec::with_capacity(2 * schema.num_relations());
            for rel in &schema.relations {
                channel_w.push(b.uniform(format!("layer{l}.rel.{}.fwd", rel.name), hid, out, hid));
                channel_w.push(b.uniform(format!("layer{l}.rel.{}.rev", rel.name), hid, out, hid));
            }
            layers.push(LayerParams {
                self_w,
                self_b,
                channel_w,
            });
        }
        let cls_w = b.uniform("cls.w".into(), emb, num_classes, emb);
        let cls_b = b.zeros("cls.b".into(), 1, num_classes);
        let pd = config.proj_dim;
        let mlp_s = schema.node_types.iter().map(|t| b.mlp("mlp_s", &t.name, emb, pd)).collect();
        let mlp_p = schema.node_types.iter().map(|t| b.mlp("mlp_p", &t.name, emb, pd)).collect();
        let Builder { names, params, .. } = b;
        let zeros: Vec<Matrix> = params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
        Ok(Self {
            config: config.clone(),
            target_type,
            num_classes,
            layout: ModelLayout {
                input,
                layers,
                cls_w,
                cls_b,
                mlp_s,
                mlp_p,
            },
            names,
            adam_m: zeros.clone(),
            adam_v: zeros,
            params,
            step: 0,
            generation: 0,
        })
    }

    pub fn params(&self) -> &[Matrix] {
        &self.params
    }

    /// Mutable access; invalidates outstanding tapes.
    pub fn params_mut(&mut self) -> &mut [Matrix] {
        self.generation += 1;
        &mut self.params
    }

    pub fn param(&self, id: ParamId) -> &Matrix {
        &self.params[id]
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.rows() * p.cols()).sum()
    }

    /// Zero-valued gradient buffers matching every tensor.
    pub fn zero_grads(&self) -> Vec<Matrix> {
        self.params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect()
    }

    /// Checks that the tensors fit `graph` (attribute widths, embedding rows,
    /// relation count).
    pub fn check_graph(&self, graph: &HinGraph) -> Result<()> {
        let schema = graph.schema();
        if self.layout.input.len() != schema.num_types()
            || self.layout.layers.iter().any(|l| l.channel_w.len() != 2 * schema.num_relations())
        {
            return Err(Error::Shape("model was built for a different schema".into()));
        }
        if self.params.len() != self.names.len()
            || self.adam_m.len() != self.params.len()
            || self.adam_v.len() != self.params.len()
        {
            return Err(Error::Shape("model tensors and optimizer moments disagree".into()));
        }
        for (t, inp) in schema.node_types.iter().zip(&self.layout.input) {
            let ok = match *inp {
                InputParams::Linear { w, .. } => t.attr_dim > 0 && self.params[w].rows() == t.attr_dim,
                InputParams::Embedding { table } => t.attr_dim == 0 && self.params[table].rows() == t.count,
            };
            if !ok {
                return Err(Error::Shape(format!("input tensor of node type `{}` does not fit the graph", t.name)));
            }
        }
        Ok(())
    }
}

/// Per-relation, per-direction message channel.
#[derive(Clone, Debug)]
pub struct Channel {
    pub relation: RelationId,
    pub reverse: bool,
    pub receiver: NodeTypeId,
    pub sender: NodeTypeId,
    /// `receiver x sender`
    pub adj: SparseAdj,
    pub inv_deg: Vec<f64>,
}

impl Channel {
    /// Row-mean of sender features over each receiver's neighbors.
    fn propagate(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.adj.rows(), x.cols());
        for i in 0..self.adj.rows() {
            let w = self.inv_deg[i];
            let orow = out.row_mut(i);
            for &j in self.adj.row(i) {
                axpy(w, x.row(j), orow);
            }
        }
        out
    }

    /// `out += Sᵀ · g`
    fn propagate_t(&self, g: &Matrix, out: &mut Matrix) {
        for i in 0..self.adj.rows() {
            let w = self.inv_deg[i];
            let grow = g.row(i);
            for &j in self.adj.row(i) {
                axpy(w, grow, out.row_mut(j));
            }
        }
    }
}

/// Forward cache sufficient to replay the backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// `h[ℓ][type]` for ℓ = 0 (input projection), 1, 2 (= z).
    pub h: Vec<Vec<Matrix>>,
    pub pre: Vec<Vec<Matrix>>,
    /// `agg[ℓ][channel] = S_ch · h[ℓ][sender]`
    pub agg: Vec<Vec<Matrix>>,
    pub logits: Matrix,
    generation: u64,
}

impl Tape {
    pub fn z(&self, t: NodeTypeId) -> &Matrix {
        &self.h[NUM_LAYERS][t.0]
    }

    pub fn embeddings(&self) -> &[Matrix] {
        &self.h[NUM_LAYERS]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<Matrix>,
    /// `∂L/∂X` per node type (`count x 0` for attributeless types).
    pub inputs: Vec<Matrix>,
}

/// Message plan over a fixed graph topology.
#[derive(Clone, Debug)]
pub struct Encoder {
    channels: Vec<Channel>,
    incoming: Vec<usize>,
    counts: Vec<usize>,
}

impl Encoder {
    pub fn new(graph: &HinGraph) -> Self {
        let schema = graph.schema();
        let mut channels = Vec::with_capacity(2 * schema.num_relations());
        let mut incoming = vec![0; schema.num_types()];
        for rid in graph.relation_ids() {
            let rel = schema.relation(rid);
            let a = graph.adjacency(rid);
            for (reverse, adj, receiver, sender) in [(false, a.transpose(), rel.dst, rel.src), (true, a.clone(), rel.src, rel.dst)] {
                let inv_deg = (0..adj.rows())
                    .map(|i| match adj.degree(i) {
                        0 => 0.0,
                        d => 1.0 / d as f64,
                    })
                    .collect();
                incoming[receiver.0] += 1;
                channels.push(Channel {
                    relation: rid,
                    reverse,
                    receiver,
                    sender,
                    adj,
                    inv_deg,
                });
            }
        }
        Self {
            channels,
            incoming,
            counts: schema.node_types.iter().map(|t| t.count).collect(),
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    fn check(&self, graph: &HinGraph, state: &ModelState) -> Result<()> {
        let counts: Vec<usize> = graph.schema().node_types.iter().map(|t| t.count).collect();
        if counts != self.counts {
            return Err(Error::Shape("encoder plan was built for a different graph".into()));
        }
        state.check_graph(graph)
    }

    pub fn forward(&self, graph: &HinGraph, state: &ModelState) -> Result<Tape> {
        self.check(graph, state)?;
        let p = &state.params;
        let lay = &state.layout;
        let h0: Vec<Matrix> = graph
            .type_ids()
            .map(|t| match lay.input[t.0] {
                InputParams::Linear { w, b } => {
                    let mut h = graph.attributes(t).matmul(&p[w]);
                    h.add_row_broadcast(&p[b]);
                    h
                }
                InputParams::Embedding { table } => p[table].clone(),
            })
            .collect();
        let mut h = vec![h0];
        let mut pre_all = Vec::with_capacity(NUM_LAYERS);
        let mut agg_all = Vec::with_capacity(NUM_LAYERS);
        for (l, lp) in lay.layers.iter().enumerate() {
            let cur = &h[l];
            let agg: Vec<Matrix> = self.channels.iter().map(|ch| ch.propagate(&cur[ch.sender.0])).collect();
            let mut pre: Vec<Matrix> = (0..self.counts.len())
                .map(|t| {
                    let mut m = cur[t].matmul(&p[lp.self_w[t]]);
                    m.add_row_broadcast(&p[lp.self_b[t]]);
                    m
                })
                .collect();
            for (c, ch) in self.channels.iter().enumerate() {
                let inv = 1.0 / self.incoming[ch.receiver.0] as f64;
                let msg = agg[c].matmul(&p[lp.channel_w[c]]);
                pre[ch.receiver.0].scaled_add(inv, &msg);
            }
            let next: Vec<Matrix> = pre.iter().map(relu).collect();
            pre_all.push(pre);
            agg_all.push(agg);
            h.push(next);
        }
        let t = state.target_type.0;
        let mut logits = h[NUM_LAYERS][t].matmul(&p[lay.cls_w]);
        logits.add_row_broadcast(&p[lay.cls_b]);
        Ok(Tape {
            h,
            pre: pre_all,
            agg: agg_all,
            logits,
            generation: state.generation,
        })
    }

    /// Accumulates gradients into `grads` given upstream `dz` (per type,
    /// same shapes as the embeddings) and `dlogits`.
    pub fn backward(
        &self,
        graph: &HinGraph,
        state: &ModelState,
        tape: &Tape,
        dz: &[Matrix],
        dlogits: &Matrix,
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check(graph, state)?;
        if tape.generation != state.generation {
            return Err(Error::StaleTape(format!(
                "tape from parameter generation {} used with generation {}",
                tape.generation, state.generation
            )));
        }
        let p = &state.params;
        let lay = &state.layout;
        let t = state.target_type.0;
        if dz.len() != self.counts.len() || dz.iter().zip(&tape.h[NUM_LAYERS]).any(|(d, z)| d.shape() != z.shape()) {
            return Err(Error::Shape("upstream embedding gradients do not match the tape".into()));
        }
        if dlogits.shape() != tape.logits.shape() {
            return Err(Error::Shape("upstream logit gradient does not match the tape".into()));
        }
        if grads.params.len() != p.len() {
            return Err(Error::Shape("gradient buffer does not match the model".into()));
        }
        let g = &mut grads.params;
        let mut dh: Vec<Matrix> = dz.to_vec();
        let z_t = &tape.h[NUM_LAYERS][t];
        g[lay.cls_w].add_assign(&z_t.matmul_tn(dlogits));
        g[lay.cls_b].add_assign(&dlogits.col_sums());
        dh[t].add_assign(&dlogits.matmul_nt(&p[lay.cls_w]));

        for l in (0..NUM_LAYERS).rev() {
            let lp = &lay.layers[l];
            let hin = &tape.h[l];
            let mut dprev: Vec<Matrix> = hin.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
            let dpre: Vec<Matrix> = dh
                .iter()
                .zip(&tape.pre[l])
                .map(|(d, pre)| relu_backward(d, pre))
                .collect();
            for ty in 0..self.counts.len() {
                g[lp.self_w[ty]].add_assign(&hin[ty].matmul_tn(&dpre[ty]));
                g[lp.self_b[ty]].add_assign(&dpre[ty].col_sums());
                dprev[ty].add_assign(&dpre[ty].matmul_nt(&p[lp.self_w[ty]]));
            }
            for (c, ch) in self.channels.iter().enumerate() {
                let r = ch.receiver.0;
                let inv = 1.0 / self.incoming[r] as f64;
                let mut gd = dpre[r].clone();
                gd.scale(inv);
                g[lp.channel_w[c]].add_assign(&tape.agg[l][c].matmul_tn(&gd));
                let dagg = gd.matmul_nt(&p[lp.channel_w[c]]);
                ch.propagate_t(&dagg, &mut dprev[ch.sender.0]);
            }
            dh = dprev;
        }

        for (ty, inp) in lay.input.iter().enumerate() {
            match *inp {
                InputParams::Linear { w, b } => {
                    let x = graph.attributes(NodeTypeId(ty));
                    g[w].add_assign(&x.matmul_tn(&dh[ty]));
                    g[b].add_assign(&dh[ty].col_sums());
                    grads.inputs[ty].add_assign(&dh[ty].matmul_nt(&p[w]));
                }
                InputParams::Embedding { table } => {
                    g[table].add_assign(&dh[ty]);
                }
            }
        }
        Ok(())
    }

    pub fn zero_gradients(&self, graph: &HinGraph, state: &ModelState) -> Gradients {
        Gradients {
            params: state.zero_grads(),
            inputs: graph
                .type_ids()
                .map(|t| Matrix::zeros(graph.node_count(t), graph.schema().node_type(t).attr_dim))
                .collect(),
        }
    }
}

fn relu(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    out.as_mut_slice().iter_mut().for_each(|x| *x = x.max(0.0));
    out
}

fn relu_backward(d: &Matrix, pre: &Matrix) -> Matrix {
    let mut out = d.clone();
    for (o, p) in out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        if *p <= 0.0 {
            *o = 0.0;
        }
    }
    out
}

/// Cached activations of one projection head.
#[derive(Clone, Debug)]
pub struct MlpTape {
    pub pre: Matrix,
    pub hidden: Matrix,
    pub out: Matrix,
}

pub fn mlp_forward(state: &ModelState, mlp: &MlpParams, x: &Matrix) -> MlpTape {
    let p = &state.params;
    let mut pre = x.matmul(&p[mlp.w1]);
    pre.add_row_broadcast(&p[mlp.b1]);
    let hidden = relu(&pre);
    let mut out = hidden.matmul(&p[mlp.w2]);
    out.add_row_broadcast(&p[mlp.b2]);
    MlpTape { pre, hidden, out }
}

/// Accumulates head parameter gradients and returns `∂L/∂x`.
pub fn mlp_backward(
    state: &ModelState,
    mlp: &MlpParams,
    tape: &MlpTape,
    x: &Matrix,
    dout: &Matrix,
    grads: &mut [Matrix],
) -> Matrix {
    let p = &state.params;
    grads[mlp.w2].add_assign(&tape.hidden.matmul_tn(dout));
    grads[mlp.b2].add_assign(&dout.col_sums());
    let dhidden = dout.matmul_nt(&p[mlp.w2]);
    let dpre = relu_backward(&dhidden, &tape.pre);
    grads[mlp.w1].add_assign(&x.matmul_tn(&dpre));
    grads[mlp.b1].add_assign(&dpre.col_sums());
    dpre.matmul_nt(&p[mlp.w1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{NetworkSchema, NodeType, Relation};

    fn tiny() -> HinGraph {
        let schema = NetworkSchema {
            node_types: vec![
                NodeType { name: "t".into(), count: 3, attr_dim: 2 },
                NodeType { name: "a".into(), count: 2, attr_dim: 0 },
            ],
            relations: vec![Relation { name: "at".into(), src: NodeTypeId(1), dst: NodeTypeId(0) }],
        };
        let adj = vec![SparseAdj::from_edges(2, 3, &[(0, 0), (0, 1), (1, 1)]).unwrap()];
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, -1.0], vec![0.0, 2.0]]).unwrap();
        HinGraph::new(schema, adj, vec![x, Matrix::zeros(2, 0)]).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let g = tiny();
        let cfg = ModelConfig { init_scale: Some(0.0), ..Default::default() };
        let s = ModelState::new(&g, NodeTypeId(0), 3, &cfg).unwrap();
        let tape = Encoder::new(&g).forward(&g, &s).unwrap();
        assert!(tape.logits.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(tape.logits.shape(), (3, 3));
    }

    #[test]
    fn stale_tape_is_rejected() {
        let g = tiny();
        let mut s = ModelState::new(&g, NodeTypeId(0), 2, &ModelConfig::default()).unwrap();
        let enc = Encoder::new(&g);
        let tape = enc.forward(&g, &s).unwrap();
        s.params_mut()[0].scale(2.0);
        let dz: Vec<Matrix> = tape.embeddings().iter().map(|z| Matrix::zeros(z.rows(), z.cols())).collect();
        let mut grads = enc.zero_gradients(&g, &s);
        let dl = Matrix::zeros(3, 2);
        assert!(matches!(enc.backward(&g, &s, &tape, &dz, &dl, &mut grads), Err(Error::StaleTape(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let g = tiny();
        let s = ModelState::new(&g, NodeTypeId(0), 2, &ModelConfig::default()).unwrap();
        let enc = Encoder::new(&g);
        let tape = enc.forward(&g, &s).unwrap();
        let dz: Vec<Matrix> = tape.embeddings().iter().map(|z| Matrix::zeros(z.rows(), z.cols())).collect();
        let mut grads = enc.zero_gradients(&g, &s);
        enc.backward(&g, &s, &tape, &dz, &Matrix::zeros(3, 2), &mut grads).unwrap();
        assert!(grads.params.iter().all(|m| m.max_abs() == 0.0));
        assert!(grads.inputs.iter().all(|m| m.max_abs() == 0.0));
    }

    #[test]
    fn every_tensor_has_a_unique_name() {
        let g = tiny();
        let s = ModelState::new(&g, NodeTypeId(0), 2, &ModelConfig::default()).unwrap();
        let mut names = s.names.clone();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), s.params().len());
    }
}
