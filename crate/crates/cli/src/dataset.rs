//! On-disk dataset directory.
//!
//! ```text
//! <dir>/schema.json              node types, relations, target
//! <dir>/edges/<relation>.txt     "src dst" per line
//! <dir>/attributes/<type>.txt    one row of reals per node (attributed types only)
//! <dir>/labels.txt               "node class" per labeled target node
//! <dir>/splits.txt               "node train|val|test" (optional)
//! ```
//!
//! Lines are whitespace separated; `#` starts a comment and blank lines are
//! skipped. Node ids are 0-based within their type.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hinbal_core::hin::{NodeType, Relation};
use hinbal_core::{HinGraph, LabelSpec, Matrix, NetworkSchema, NodeTypeId, SparseAdj};
use serde::{Deserialize, Serialize};

use crate::error::{self, CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeTypeEntry {
    pub name: String,
    pub count: usize,
    #[serde(default)]
    pub attr_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    pub name: String,
    pub src: String,
    pub dst: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    #[serde(rename = "type")]
    pub type_name: String,
    pub num_classes: usize,
    pub minority_classes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    pub node_types: Vec<NodeTypeEntry>,
    pub relations: Vec<RelationEntry>,
    pub target: TargetEntry,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: HinGraph,
    /// Train/val/test masks are all false when the directory has no splits file.
    pub labels: LabelSpec,
    pub has_splits: bool,
}

pub fn edge_path(dir: &Path, relation: &str) -> PathBuf {
    dir.join("edges").join(format!("{relation}.txt"))
}

pub fn attr_path(dir: &Path, type_name: &str) -> PathBuf {
    dir.join("attributes").join(format!("{type_name}.txt"))
}

fn check_name(path: &Path, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(CliError::file(path, format!("name `{name}` must use only ASCII letters, digits, '-', '_' or '.'")))
    }
}

impl SchemaFile {
    pub fn from_graph(graph: &HinGraph, labels: &LabelSpec) -> Self {
        let s = graph.schema();
        SchemaFile {
            node_types: s
                .node_types
                .iter()
                .map(|t| NodeTypeEntry { name: t.name.clone(), count: t.count, attr_dim: t.attr_dim })
                .collect(),
            relations: s
                .relations
                .iter()
                .map(|r| RelationEntry {
                    name: r.name.clone(),
                    src: s.node_type(r.src).name.clone(),
                    dst: s.node_type(r.dst).name.clone(),
                })
                .collect(),
            target: TargetEntry {
                type_name: s.node_type(labels.target_type).name.clone(),
                num_classes: labels.num_classes,
                minority_classes: labels.minority_classes.clone(),
            },
        }
    }

    fn resolve(&self, path: &Path) -> Result<(NetworkSchema, NodeTypeId)> {
        let mut schema = NetworkSchema::default();
        for t in &self.node_types {
            check_name(path, &t.name)?;
            schema.node_types.push(NodeType { name: t.name.clone(), count: t.count, attr_dim: t.attr_dim });
        }
        let lookup = |name: &str, what: &str| {
            schema
                .type_by_name(name)
                .ok_or_else(|| CliError::file(path, format!("{what} refers to unknown node type `{name}`")))
        };
        let mut relations = Vec::new();
        for r in &self.relations {
            check_name(path, &r.name)?;
            let what = format!("relation `{}`", r.name);
            relations.push(Relation { name: r.name.clone(), src: lookup(&r.src, &what)?, dst: lookup(&r.dst, &what)? });
        }
        let target = lookup(&self.target.type_name, "target")?;
        schema.relations = relations;
        schema.validate().map_err(|e| CliError::file(path, e))?;
        if schema.node_types.iter().any(|t| t.count == 0) {
            return Err(CliError::file(path, "every node type needs at least one node"));
        }
        Ok((schema, target))
    }
}

/// Meaningful lines as `(1-based line number, tokens)`.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_index(path: &Path, line: usize, tok: &str, bound: usize, what: &str) -> Result<usize> {
    let v: usize = tok
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("{what} `{tok}` is not a non-negative integer")))?;
    if v >= bound {
        return Err(CliError::parse(path, line, format!("{what} {v} out of range (count {bound})")));
    }
    Ok(v)
}

fn read_edges(path: &Path, rows: usize, cols: usize) -> Result<SparseAdj> {
    let text = error::read_to_string(path)?;
    let mut edges = Vec::new();
    for (line, tok) in data_lines(&text) {
        if tok.len() != 2 {
            return Err(CliError::parse(path, line, format!("expected 2 columns, found {}", tok.len())));
        }
        let i = parse_index(path, line, tok[0], rows, "source node")?;
        let j = parse_index(path, line, tok[1], cols, "destination node")?;
        edges.push((i, j));
    }
    Ok(SparseAdj::from_edges(rows, cols, &edges)?)
}

fn read_attributes(path: &Path, rows: usize, cols: usize) -> Result<Matrix> {
    let text = error::read_to_string(path)?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    let mut last = 0;
    for (line, tok) in data_lines(&text) {
        if tok.len() != cols {
            return Err(CliError::parse(path, line, format!("expected {cols} values, found {}", tok.len())));
        }
        if seen == rows {
            return Err(CliError::parse(path, line, format!("more than {rows} rows")));
        }
        for t in tok {
            let v: f64 = t.parse().map_err(|_| CliError::parse(path, line, format!("`{t}` is not a number")))?;
            if !v.is_finite() {
                return Err(CliError::parse(path, line, format!("non-finite value `{t}`")));
            }
            data.push(v);
        }
        seen += 1;
        last = line;
    }
    if seen != rows {
        return Err(CliError::parse(path, last + 1, format!("expected {rows} rows, found {seen}")));
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

fn read_labels(path: &Path, n: usize, num_classes: usize) -> Result<Vec<Option<usize>>> {
    let text = error::read_to_string(path)?;
    let mut labels = vec![None; n];
    for (line, tok) in data_lines(&text) {
        if tok.len() != 2 {
            return Err(CliError::parse(path, line, format!("expected `node class`, found {} columns", tok.len())));
        }
        let i = parse_index(path, line, tok[0], n, "node")?;
        let c = parse_index(path, line, tok[1], num_classes, "class")?;
        if labels[i].replace(c).is_some() {
            return Err(CliError::parse(path, line, format!("node {i} labeled twice")));
        }
    }
    Ok(labels)
}

fn read_splits(path: &Path, labels: &mut LabelSpec) -> Result<()> {
    let text = error::read_to_string(path)?;
    let n = labels.len();
    for (line, tok) in data_lines(&text) {
        if tok.len() != 2 {
            return Err(CliError::parse(path, line, format!("expected `node split`, found {} columns", tok.len())));
        }
        let i = parse_index(path, line, tok[0], n, "node")?;
        if labels.train[i] || labels.val[i] || labels.test[i] {
            return Err(CliError::parse(path, line, format!("node {i} assigned twice")));
        }
        if labels.labels[i].is_none() {
            return Err(CliError::parse(path, line, format!("node {i} is unlabeled")));
        }
        match tok[1] {
            "train" => labels.train[i] = true,
            "val" => labels.val[i] = true,
            "test" => labels.test[i] = true,
            other => return Err(CliError::parse(path, line, format!("unknown split `{other}`"))),
        }
    }
    Ok(())
}

pub fn load(dir: &Path) -> Result<Dataset> {
    let schema_path = dir.join("schema.json");
    let file: SchemaFile = error::read_json(&schema_path)?;
    let (schema, target) = file.resolve(&schema_path)?;
    if file.target.num_classes < 2 {
        return Err(CliError::file(&schema_path, "num_classes must be at least 2"));
    }
    if let Some(&c) = file.target.minority_classes.iter().find(|&&c| c >= file.target.num_classes) {
        return Err(CliError::file(&schema_path, format!("minority class {c} out of range")));
    }
    let mut adjacency = Vec::with_capacity(schema.num_relations());
    for r in &schema.relations {
        let (rows, cols) = (schema.node_type(r.src).count, schema.node_type(r.dst).count);
        adjacency.push(read_edges(&edge_path(dir, &r.name), rows, cols)?);
    }
    let mut attributes = Vec::with_capacity(schema.num_types());
    for t in &schema.node_types {
        attributes.push(if t.attr_dim == 0 {
            Matrix::zeros(t.count, 0)
        } else {
            read_attributes(&attr_path(dir, &t.name), t.count, t.attr_dim)?
        });
    }
    let n = schema.node_type(target).count;
    let graph = HinGraph::new(schema, adjacency, attributes)?;
    let mut labels = LabelSpec {
        target_type: target,
        num_classes: file.target.num_classes,
        labels: read_labels(&dir.join("labels.txt"), n, file.target.num_classes)?,
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
        minority_classes: file.target.minority_classes.clone(),
    };
    let splits = dir.join("splits.txt");
    let has_splits = splits.exists();
    if has_splits {
        read_splits(&splits, &mut labels)?;
    }
    labels.validate(&graph)?;
    Ok(Dataset { graph, labels, has_splits })
}

/// Writes `graph` and `labels`; the splits file is written when `splits` is set.
pub fn save(dir: &Path, graph: &HinGraph, labels: &LabelSpec, splits: bool) -> Result<()> {
    let schema_path = dir.join("schema.json");
    let file = SchemaFile::from_graph(graph, labels);
    file.resolve(&schema_path)?;
    error::write_json(&schema_path, &file)?;
    let schema = graph.schema();
    for (k, r) in schema.relations.iter().enumerate() {
        let mut s = String::new();
        for (i, j) in graph.adjacency(hinbal_core::RelationId(k)).edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        error::write(&edge_path(dir, &r.name), s)?;
    }
    for (t, nt) in schema.node_types.iter().enumerate() {
        if nt.attr_dim == 0 {
            continue;
        }
        let x = graph.attributes(NodeTypeId(t));
        let mut s = String::new();
        for i in 0..x.rows() {
            let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        error::write(&attr_path(dir, &nt.name), s)?;
    }
    let mut s = String::new();
    for (i, l) in labels.labels.iter().enumerate() {
        if let Some(c) = l {
            let _ = writeln!(s, "{i} {c}");
        }
    }
    error::write(&dir.join("labels.txt"), s)?;
    if splits {
        let mut s = String::new();
        for i in 0..labels.len() {
            let name = if labels.train[i] {
                "train"
            } else if labels.val[i] {
                "val"
            } else if labels.test[i] {
                "test"
            } else {
                continue;
            };
            let _ = writeln!(s, "{i} {name}");
        }
        error::write(&dir.join("splits.txt"), s)?;
    }
    Ok(())
}
