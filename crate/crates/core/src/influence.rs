//! Personalized-PageRank influence of neighbor-type nodes on minority classes
//! and top-k candidate selection.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{compose_metapath_adjacency, HinGraph, LabelSpec, MetaPath, NeighborRelation, NodeTypeId, RelationId};
use crate::linalg::Matrix;
use crate::sparse::{CsrMatrix, SparseAdj};

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PprConfig {
    /// Restart probability.
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop once the L1 norm of the latest series term drops below this.
    pub tol: f64,
}

impl Default for PprConfig {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            max_iters: 200,
            tol: 1e-8,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        if self.max_iters == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("max_iters and tol must be positive".into()));
        }
        Ok(())
    }
}

/// Candidate-size multiplier: `k = ⌈μ·d_max⌉`, or every neighbor node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mu {
    Factor(f64),
    All,
}

impl core::fmt::Display for Mu {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Mu::Factor(x) => write!(f, "{x}"),
            Mu::All => f.write_str("ALL"),
        }
    }
}

#[cfg(feature = "serde")]
impl Serialize for Mu {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Mu::Factor(x) => s.serialize_f64(*x),
            Mu::All => s.serialize_str("ALL"),
        }
    }
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for Mu {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Mu;
            fn expecting(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                f.write_str("a positive number or \"ALL\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> core::result::Result<Mu, E> {
                Ok(Mu::Factor(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<Mu, E> {
                Ok(Mu::Factor(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<Mu, E> {
                Ok(Mu::Factor(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<Mu, E> {
                if v.eq_ignore_ascii_case("all") {
                    Ok(Mu::All)
                } else {
                    v.parse::<f64>().map(Mu::Factor).map_err(E::custom)
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Where synthetic-node neighbor candidates come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SelectionMode {
    /// Top-k by minority-class PPR influence.
    #[default]
    Influence,
    /// Neighbors of the class's labeled training members.
    MinorityNeighbors,
    /// Every node of the neighbor type.
    Uniform,
}

/// Result of dense power iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct PprMatrix {
    pub pi: Matrix,
    pub iterations: usize,
    pub converged: bool,
}

/// `[[0, B], [Bᵀ, 0]]` for `B` oriented `neighbor x target`, symmetrically
/// normalized as `D^{-1/2} M D^{-1/2}`. Neighbor block first.
pub fn bidirectional_normalized(neighbor_by_target: &SparseAdj) -> CsrMatrix {
    let nk = neighbor_by_target.rows();
    let nt = neighbor_by_target.cols();
    let bt = neighbor_by_target.transpose();
    let deg: Vec<f64> = (0..nk)
        .map(|i| neighbor_by_target.degree(i) as f64)
        .chain((0..nt).map(|j| bt.degree(j) as f64))
        .collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / libm::sqrt(d) } else { 0.0 })
        .collect();
    let n = nk + nt;
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(2 * neighbor_by_target.nnz());
    let mut values = Vec::with_capacity(2 * neighbor_by_target.nnz());
    indptr.push(0);
    for i in 0..nk {
        for &j in neighbor_by_target.row(i) {
            indices.push(nk + j);
            values.push(inv_sqrt[i] * inv_sqrt[nk + j]);
        }
        indptr.push(indices.len());
    }
    for j in 0..nt {
        for &i in bt.row(j) {
            indices.push(i);
            values.push(inv_sqrt[nk + j] * inv_sqrt[i]);
        }
        indptr.push(indices.len());
    }
    CsrMatrix::new(n, n, indptr, indices, values).expect("block structure is valid CSR")
}

/// Bidirectional normalized operator of one neighbor relation of `target`.
pub fn relation_operator(graph: &HinGraph, relation: RelationId, target: NodeTypeId) -> Result<CsrMatrix> {
    let adj = oriented_relation(graph, relation, target)?;
    Ok(bidirectional_normalized(&adj))
}

fn oriented_relation(graph: &HinGraph, relation: RelationId, target: NodeTypeId) -> Result<SparseAdj> {
    let r = graph.schema().relation(relation);
    if r.dst == target {
        Ok(graph.adjacency(relation).clone())
    } else if r.src == target {
        Ok(graph.adjacency(relation).transpose())
    } else {
        Err(Error::InvalidArgument(format!(
            "relation `{}` does not touch the target type",
            r.name
        )))
    }
}

/// Composed adjacency of `path`, binarized and oriented `neighbor x target`.
pub fn oriented_path_adjacency(
    graph: &HinGraph,
    path: &MetaPath,
    target: NodeTypeId,
    neighbor: NodeTypeId,
) -> Result<SparseAdj> {
    let a = compose_metapath_adjacency(graph, path)?;
    if path.start() == neighbor && path.end() == target {
        Ok(a)
    } else if path.start() == target && path.end() == neighbor {
        Ok(a.transpose())
    } else {
        Err(Error::InvalidArgument(format!(
            "meta-path runs between types {} and {}, not between neighbor {} and target {}",
            path.start().0,
            path.end().0,
            neighbor.0,
            target.0
        )))
    }
}

/// `Π = α(I − (1−α)Ã)^{-1}` by summing the Neumann series until the newest
/// term's L1 norm falls below `tol`.
pub fn ppr(op: &CsrMatrix, cfg: &PprConfig) -> Result<PprMatrix> {
    cfg.validate()?;
    if op.rows() != op.cols() {
        return Err(Error::Shape(format!("PPR needs a square operator, got {}x{}", op.rows(), op.cols())));
    }
    let n = op.rows();
    let mut term = Matrix::identity(n);
    term.scale(cfg.alpha);
    let mut pi = term.clone();
    let decay = 1.0 - cfg.alpha;
    let mut iterations = 0;
    let mut converged = decay == 0.0;
    while !converged && iterations < cfg.max_iters {
        term = op.mul_dense(&term);
        term.scale(decay);
        pi.add_assign(&term);
        iterations += 1;
        let change: f64 = term.as_slice().iter().map(|x| libm::fabs(*x)).sum();
        converged = change < cfg.tol;
    }
    if !converged {
        log::warn!("PPR did not converge within {} iterations", cfg.max_iters);
    }
    Ok(PprMatrix {
        pi,
        iterations,
        converged,
    })
}

/// `Π·x` via the same series, without materializing `Π`.
pub fn ppr_apply(op: &CsrMatrix, x: &[f64], cfg: &PprConfig) -> Result<(Vec<f64>, bool)> {
    cfg.validate()?;
    if op.rows() != op.cols() || x.len() != op.rows() {
        return Err(Error::Shape("PPR operator and vector disagree".into()));
    }
    let mut term: Vec<f64> = x.iter().map(|v| cfg.alpha * v).collect();
    let mut acc = term.clone();
    let decay = 1.0 - cfg.alpha;
    let mut converged = decay == 0.0;
    let mut it = 0;
    while !converged && it < cfg.max_iters {
        term = op.mul_vec(&term);
        let mut change = 0.0;
        for (a, t) in acc.iter_mut().zip(term.iter_mut()) {
            *t *= decay;
            *a += *t;
            change += libm::fabs(*t);
        }
        it += 1;
        converged = change < cfg.tol;
    }
    Ok((acc, converged))
}

/// Sum over `paths` of the `neighbor x target` block of each path's PPR matrix.
pub fn aggregate_influence(
    graph: &HinGraph,
    target: NodeTypeId,
    neighbor: NodeTypeId,
    paths: &[MetaPath],
    cfg: &PprConfig,
) -> Result<Matrix> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("at least one meta-path is required".into()));
    }
    let nk = graph.node_count(neighbor);
    let nt = graph.node_count(target);
    let mut total = Matrix::zeros(nk, nt);
    for path in paths {
        let adj = oriented_path_adjacency(graph, path, target, neighbor)?;
        let res = ppr(&bidirectional_normalized(&adj), cfg)?;
        for i in 0..nk {
            for j in 0..nt {
                let v = total.get(i, j) + res.pi.get(i, nk + j);
                total.set(i, j, v);
            }
        }
    }
    Ok(total)
}

/// `P_j = Σ_{i ∈ C_l} Π_{j,i}` for a `neighbor x target` influence block.
pub fn minority_influence(pi_block: &Matrix, members: &[usize]) -> Result<Vec<f64>> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("minority member set is empty".into()));
    }
    if let Some(&m) = members.iter().find(|&&m| m >= pi_block.cols()) {
        return Err(Error::InvalidArgument(format!("member {m} is not a target node")));
    }
    Ok((0..pi_block.rows())
        .map(|j| members.iter().map(|&i| pi_block.get(j, i)).sum())
        .collect())
}

/// Class influence scores computed as one PPR solve seeded on the members,
/// summed over paths. Equal to `minority_influence(aggregate_influence(..))`
/// because each bidirectional operator is symmetric.
pub fn class_influence(
    graph: &HinGraph,
    target: NodeTypeId,
    neighbor: NodeTypeId,
    paths: &[MetaPath],
    members: &[usize],
    cfg: &PprConfig,
) -> Result<(Vec<f64>, bool)> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("at least one meta-path is required".into()));
    }
    if members.is_empty() {
        return Err(Error::InvalidArgument("minority member set is empty".into()));
    }
    let nk = graph.node_count(neighbor);
    let nt = graph.node_count(target);
    if let Some(&m) = members.iter().find(|&&m| m >= nt) {
        return Err(Error::InvalidArgument(format!("member {m} is not a target node")));
    }
    let mut scores = vec![0.0; nk];
    let mut all_converged = true;
    for path in paths {
        let adj = oriented_path_adjacency(graph, path, target, neighbor)?;
        let op = bidirectional_normalized(&adj);
        let mut seed = vec![0.0; nk + nt];
        for &m in members {
            seed[nk + m] += 1.0;
        }
        let (v, converged) = ppr_apply(&op, &seed, cfg)?;
        all_converged &= converged;
        for (s, x) in scores.iter_mut().zip(&v[..nk]) {
            *s += x;
        }
    }
    Ok((scores, all_converged))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub candidates: Vec<usize>,
    pub k: usize,
    /// Every score was zero, so candidates are just the lowest ids.
    pub all_zero: bool,
}

/// Top-`min(⌈μ·d_max⌉, n)` ids by score, descending, ties to the lower id.
pub fn select_candidates(scores: &[f64], mu: Mu, d_max: usize) -> Result<Selection> {
    if d_max == 0 {
        return Err(Error::InvalidArgument("d_max must be at least 1".into()));
    }
    let n = scores.len();
    let k = match mu {
        Mu::All => n,
        Mu::Factor(f) if f > 0.0 && f.is_finite() => {
            let k = libm::ceil(f * d_max as f64 - 1e-9);
            if k >= n as f64 {
                n
            } else {
                k as usize
            }
        }
        Mu::Factor(f) => return Err(Error::InvalidArgument(format!("mu {f} must be positive"))),
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    let all_zero = scores.iter().all(|&s| s == 0.0);
    if all_zero && n > 0 {
        log::warn!("all influence scores are zero; candidates fall back to the lowest ids");
    }
    Ok(Selection {
        candidates: order,
        k,
        all_zero,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InfluenceTable {
    pub relation: RelationId,
    pub neighbor_type: NodeTypeId,
    pub minority_class: usize,
    /// Empty for selection modes that do not score neighbors.
    pub scores: Vec<f64>,
    /// In rank order.
    pub candidates: Vec<usize>,
    pub k_used: usize,
    pub d_max: usize,
    pub all_zero: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct InfluenceConfig {
    pub ppr: PprConfig,
    /// Meta-paths per neighbor relation; a relation without an entry uses
    /// itself as the only path.
    pub paths: BTreeMap<RelationId, Vec<MetaPath>>,
}

/// Largest training-member degree of `class` in the `target x neighbor`
/// adjacency; zero degrees are lifted to 1.
pub fn max_member_degree(adj_tk: &SparseAdj, members: &[usize]) -> usize {
    members.iter().map(|&i| adj_tk.degree(i)).max().unwrap_or(0).max(1)
}

/// One table per (minority class, neighbor relation). Only training labels
/// are consulted.
pub fn build_influence_tables(
    graph: &HinGraph,
    labels: &LabelSpec,
    cfg: &InfluenceConfig,
    mu: Mu,
    mode: SelectionMode,
) -> Result<Vec<InfluenceTable>> {
    let target = labels.target_type;
    let mut classes = labels.minority_classes.clone();
    classes.sort_unstable();
    classes.dedup();
    let relations = graph.neighbor_relations(target);
    let mut out = Vec::with_capacity(classes.len() * relations.len());
    for &class in &classes {
        let members = labels.train_members(class);
        if members.is_empty() {
            return Err(Error::Insufficient(format!("minority class {class} has no training member")));
        }
        for nr in &relations {
            out.push(table_for(graph, target, nr, class, &members, cfg, mu, mode)?);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn table_for(
    graph: &HinGraph,
    target: NodeTypeId,
    nr: &NeighborRelation,
    class: usize,
    members: &[usize],
    cfg: &InfluenceConfig,
    mu: Mu,
    mode: SelectionMode,
) -> Result<InfluenceTable> {
    let adj_tk = graph.target_adjacency(nr);
    let d_max = max_member_degree(&adj_tk, members);
    let nk = graph.node_count(nr.neighbor_type);
    let mut table = InfluenceTable {
        relation: nr.relation,
        neighbor_type: nr.neighbor_type,
        minority_class: class,
        scores: Vec::new(),
        candidates: Vec::new(),
        k_used: 0,
        d_max,
        all_zero: false,
        converged: true,
    };
    match mode {
        SelectionMode::Influence => {
            let default_path;
            let paths = match cfg.paths.get(&nr.relation) {
                Some(p) if !p.is_empty() => p.as_slice(),
                _ => {
                    default_path = [MetaPath::single(graph.schema(), nr.relation)?];
                    &default_path[..]
                }
            };
            let (scores, converged) = class_influence(graph, target, nr.neighbor_type, paths, members, &cfg.ppr)?;
            let sel = select_candidates(&scores, mu, d_max)?;
            table.scores = scores;
            table.candidates = sel.candidates;
            table.k_used = sel.k;
            table.all_zero = sel.all_zero;
            table.converged = converged;
        }
        SelectionMode::MinorityNeighbors => {
            let mut c: Vec<usize> = members.iter().flat_map(|&i| adj_tk.row(i).iter().copied()).collect();
            c.sort_unstable();
            c.dedup();
            if c.is_empty() {
                c = (0..nk).collect();
            }
            table.k_used = c.len();
            table.candidates = c;
        }
        SelectionMode::Uniform => {
            table.candidates = (0..nk).collect();
            table.k_used = nk;
        }
    }
    if table.candidates.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "neighbor type {} has no nodes to connect synthetic nodes to",
            nr.neighbor_type.0
        )));
    }
    Ok(table)
}
