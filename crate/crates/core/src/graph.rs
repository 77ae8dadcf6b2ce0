//! Edge-labeled directed graphs, paths, the TSV edge-list format and the
//! generators for the benchmark graph families.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("token `{0}` is used both as a node and as an edge label")]
    NamespaceClash(String),
    #[error("{0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LabelId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: NodeId,
    pub label: LabelId,
    pub target: NodeId,
}

/// An immutable edge-labeled graph. Node and label names are interned in
/// order of first appearance; that order is the graph's node order.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    labels: Vec<String>,
    label_index: HashMap<String, LabelId>,
    edges: Vec<Edge>,
    by_label: Vec<Vec<Edge>>,
    out: HashMap<(NodeId, LabelId), Vec<NodeId>>,
    inc: HashMap<(NodeId, LabelId), Vec<NodeId>>,
    degree: Vec<u32>,
}

impl Graph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn label(&self, name: &str) -> Option<LabelId> {
        self.label_index.get(name).copied()
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        &self.nodes[n.index()]
    }

    pub fn label_name(&self, l: LabelId) -> &str {
        &self.labels[l.index()]
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_with_label(&self, l: LabelId) -> &[Edge] {
        &self.by_label[l.index()]
    }

    /// δ(m, σ)
    pub fn successors(&self, m: NodeId, l: LabelId) -> &[NodeId] {
        self.out.get(&(m, l)).map_or(&[], Vec::as_slice)
    }

    pub fn predecessors(&self, n: NodeId, l: LabelId) -> &[NodeId] {
        self.inc.get(&(n, l)).map_or(&[], Vec::as_slice)
    }

    pub fn has_edge(&self, source: NodeId, label: LabelId, target: NodeId) -> bool {
        self.successors(source, label).contains(&target)
    }

    /// Number of incident edges (in + out). Self-loops count twice.
    pub fn degree(&self, n: NodeId) -> u32 {
        self.degree[n.index()]
    }

    /// Outgoing `(label, target)` pairs of `m`, in edge order.
    pub fn out_edges(&self, m: NodeId) -> impl Iterator<Item = (LabelId, NodeId)> + '_ {
        (0..self.labels.len() as u32)
            .map(LabelId)
            .flat_map(move |l| self.successors(m, l).iter().map(move |&n| (l, n)))
    }

    pub fn validate_path(&self, p: &Path) -> bool {
        p.nodes.len() == p.labels.len() + 1
            && p.nodes.iter().all(|n| n.index() < self.nodes.len())
            && p.steps().all(|(m, l, n)| l.index() < self.labels.len() && self.has_edge(m, l, n))
    }

    /// Serializes in the TSV edge-list format. Nodes without edges are
    /// written as `node` declarations after the edges.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(self.node_name(e.source));
            out.push('\t');
            out.push_str(self.label_name(e.label));
            out.push('\t');
            out.push_str(self.node_name(e.target));
            out.push('\n');
        }
        for n in self.nodes() {
            if self.degree(n) == 0 {
                out.push_str("node\t");
                out.push_str(self.node_name(n));
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<String>,
    node_index: HashMap<String, NodeId>,
    labels: Vec<String>,
    label_index: HashMap<String, LabelId>,
    edges: Vec<Edge>,
    seen: HashSet<Edge>,
}

impl GraphBuilder {
    pub fn node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.node_index.get(name) {
            return id;
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(name.to_string());
        self.node_index.insert(name.to_string(), id);
        id
    }

    pub fn label(&mut self, name: &str) -> LabelId {
        if let Some(&id) = self.label_index.get(name) {
            return id;
        }
        let id = LabelId(self.labels.len() as u32);
        self.labels.push(name.to_string());
        self.label_index.insert(name.to_string(), id);
        id
    }

    pub fn edge(&mut self, source: &str, label: &str, target: &str) -> &mut Self {
        let source = self.node(source);
        let label = self.label(label);
        let target = self.node(target);
        let e = Edge { source, label, target };
        if self.seen.insert(e) {
            self.edges.push(e);
        }
        self
    }

    pub fn build(self) -> Result<Graph, GraphError> {
        if let Some(name) = self.nodes.iter().find(|n| self.label_index.contains_key(*n)) {
            return Err(GraphError::NamespaceClash(name.clone()));
        }
        let mut by_label = vec![Vec::new(); self.labels.len()];
        let mut out: HashMap<(NodeId, LabelId), Vec<NodeId>> = HashMap::new();
        let mut inc: HashMap<(NodeId, LabelId), Vec<NodeId>> = HashMap::new();
        let mut degree = vec![0u32; self.nodes.len()];
        for &e in &self.edges {
            by_label[e.label.index()].push(e);
            out.entry((e.source, e.label)).or_default().push(e.target);
            inc.entry((e.target, e.label)).or_default().push(e.source);
            degree[e.source.index()] += 1;
            degree[e.target.index()] += 1;
        }
        Ok(Graph {
            nodes: self.nodes,
            node_index: self.node_index,
            labels: self.labels,
            label_index: self.label_index,
            edges: self.edges,
            by_label,
            out,
            inc,
            degree,
        })
    }
}

/// A path `n1 σ1 n2 … σ(i-1) ni`. Always holds one more node than labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub labels: Vec<LabelId>,
}

impl Path {
    pub fn single(node: NodeId) -> Self {
        Path { nodes: vec![node], labels: Vec::new() }
    }

    /// Builds a path from node and label names, `None` if a name is unknown.
    pub fn from_names(graph: &Graph, nodes: &[&str], labels: &[&str]) -> Option<Self> {
        Some(Path {
            nodes: nodes.iter().map(|n| graph.node(n)).collect::<Option<_>>()?,
            labels: labels.iter().map(|l| graph.label(l)).collect::<Option<_>>()?,
        })
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("path has at least one node")
    }

    pub fn trace(&self) -> &[LabelId] {
        &self.labels
    }

    pub fn trace_names<'g>(&self, graph: &'g Graph) -> Vec<&'g str> {
        self.labels.iter().map(|&l| graph.label_name(l)).collect()
    }

    pub fn steps(&self) -> impl Iterator<Item = (NodeId, LabelId, NodeId)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (self.nodes[i], l, self.nodes[i + 1]))
    }

    pub fn display<'a>(&'a self, graph: &'a Graph) -> PathDisplay<'a> {
        PathDisplay { path: self, graph }
    }
}

/// Renders `n1 -[l1]-> n2 -[l2]-> n3`.
pub struct PathDisplay<'a> {
    path: &'a Path,
    graph: &'a Graph,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.graph.node_name(self.path.nodes[0]))?;
        for (_, l, n) in self.path.steps() {
            write!(f, " -[{}]-> {}", self.graph.label_name(l), self.graph.node_name(n))?;
        }
        Ok(())
    }
}

/// Reads the TSV edge-list format: `source \t label \t target` per edge,
/// `node \t id` for an isolated node, `#` comments and blank lines ignored.
pub fn load_graph(text: &str) -> Result<Graph, GraphError> {
    let mut b = Graph::builder();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let malformed = |message: String| GraphError::Malformed { line: i + 1, message };
        if fields.iter().any(|f| f.is_empty() || f.chars().any(char::is_whitespace)) {
            return Err(malformed("empty field or field containing whitespace".into()));
        }
        match fields.as_slice() {
            [source, label, target] => {
                b.edge(source, label, target);
            }
            ["node", id] => {
                b.node(id);
            }
            _ => {
                return Err(malformed(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )))
            }
        }
    }
    b.build()
}

/// A single `label`-cycle `n0 → n1 → … → n(count-1) → n0`.
pub fn gen_cycle(count: usize, label: &str) -> Result<Graph, GraphError> {
    if count == 0 {
        return Err(GraphError::InvalidParameter("cycle needs at least one node".into()));
    }
    let mut b = Graph::builder();
    for i in 0..count {
        b.node(&format!("n{i}"));
    }
    for i in 0..count {
        b.edge(&format!("n{i}"), label, &format!("n{}", (i + 1) % count));
    }
    b.build()
}

/// Two cycles sharing the node `c`: `u` edges labeled `label1` through
/// `m1 … m(u-1)` and `v` edges labeled `label2` through `n1 … n(v-1)`.
pub fn gen_double_cycle(u: usize, v: usize, label1: &str, label2: &str) -> Result<Graph, GraphError> {
    if u == 0 || v == 0 {
        return Err(GraphError::InvalidParameter("both cycles need at least one edge".into()));
    }
    let mut b = Graph::builder();
    b.node("c");
    let ring = |b: &mut GraphBuilder, prefix: &str, len: usize, label: &str| {
        let name = |i: usize| if i == 0 || i == len { "c".to_string() } else { format!("{prefix}{i}") };
        for i in 1..len {
            b.node(&name(i));
        }
        for i in 0..len {
            b.edge(&name(i), label, &name(i + 1));
        }
    };
    ring(&mut b, "m", u, label1);
    ring(&mut b, "n", v, label2);
    b.build()
}

/// The six-person friendOf network; Faythe has no friends.
pub fn gen_social_network() -> Graph {
    let mut b = Graph::builder();
    for (s, t) in [("Alice", "Bob"), ("Alice", "Craig"), ("Bob", "Dan"), ("Craig", "Eve"), ("Dan", "Eve")] {
        b.edge(s, "friendOf", t);
    }
    b.node("Faythe");
    b.build().expect("fixed graph is well-formed")
}
