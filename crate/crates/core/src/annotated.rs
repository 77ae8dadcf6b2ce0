//! All-path semantics through the annotated grammar.
//!
//! The annotated grammar over `(G, graph)` has nonterminals `⟨a, m, n⟩` for
//! every derivable triple and rules
//!
//! ```text
//! ⟨a,m,n⟩ -> σ                 for a -> σ in G and an edge (m, σ, n)
//! ⟨a,m,n⟩ -> ⟨b,m,o⟩ ⟨c,o,n⟩   for a -> b c in G with all three triples derivable
//! ```
//!
//! Its derivations spell exactly the matching paths. Binary rules are
//! enumerated from the recognizer's index on demand; [`AnnotatedGrammar::materialize`]
//! lists them all.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use crate::grammar::{Body, Grammar, NtId, RuleId, TermId};
use crate::graph::{Graph, LabelId, NodeId, Path};
use crate::recognizer::{recognize, terminal_labels, ReachSet};
use crate::singlepath::minimize_annotated;

pub use crate::recognizer::AnnotatedSymbol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnnotatedError {
    #[error("{0} is not a nonterminal of the annotated grammar")]
    NoPath(String),
    #[error("path cannot be derived from {0}")]
    NotDerivable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnnotatedBody {
    Terminal(TermId),
    Pair(AnnotatedSymbol, AnnotatedSymbol),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnnotatedRule {
    pub head: AnnotatedSymbol,
    pub body: AnnotatedBody,
    /// The grammar rule this rule annotates.
    pub origin: RuleId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleCounts {
    pub terminal: usize,
    pub binary: usize,
}

impl RuleCounts {
    pub fn total(&self) -> usize {
        self.terminal + self.binary
    }
}

/// The annotated grammar over a grammar and a graph.
#[derive(Debug, Clone)]
pub struct AnnotatedGrammar<'a> {
    grammar: &'a Grammar,
    graph: &'a Graph,
    reach: ReachSet,
    labels: Vec<Option<LabelId>>,
}

pub fn build_annotated<'a>(g: &'a Grammar, graph: &'a Graph) -> AnnotatedGrammar<'a> {
    AnnotatedGrammar { grammar: g, graph, reach: recognize(g, graph), labels: terminal_labels(g, graph) }
}

impl<'a> AnnotatedGrammar<'a> {
    pub fn grammar(&self) -> &'a Grammar {
        self.grammar
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn reach(&self) -> &ReachSet {
        &self.reach
    }

    pub fn symbol_count(&self) -> usize {
        self.reach.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = AnnotatedSymbol> + '_ {
        self.reach.iter()
    }

    pub fn contains(&self, s: AnnotatedSymbol) -> bool {
        s.nonterminal.index() < self.grammar.nonterminal_count()
            && s.source.index() < self.graph.node_count()
            && s.target.index() < self.graph.node_count()
            && self.reach.contains_symbol(s)
    }

    pub fn symbol(&self, a: &str, m: &str, n: &str) -> Option<AnnotatedSymbol> {
        let s = AnnotatedSymbol::new(self.grammar.nonterminal(a)?, self.graph.node(m)?, self.graph.node(n)?);
        self.contains(s).then_some(s)
    }

    pub fn label_of(&self, t: TermId) -> Option<LabelId> {
        self.labels[t.index()]
    }

    /// Rules with head `head`: terminal rules first, then binary rules in
    /// grammar rule order and node order of the split point.
    pub fn rules_for(&self, head: AnnotatedSymbol) -> Vec<AnnotatedRule> {
        let mut out = Vec::new();
        if !self.contains(head) {
            return out;
        }
        let AnnotatedSymbol { nonterminal: a, source: m, target: n } = head;
        for r in self.grammar.rule_ids() {
            let rule = self.grammar.rule(r);
            if rule.head != a {
                continue;
            }
            if let Body::Terminal(t) = rule.body {
                if self.labels[t.index()].map_or(false, |l| self.graph.has_edge(m, l, n)) {
                    out.push(AnnotatedRule { head, body: AnnotatedBody::Terminal(t), origin: r });
                }
            }
        }
        for r in self.grammar.rule_ids() {
            let rule = self.grammar.rule(r);
            if rule.head != a {
                continue;
            }
            if let Body::Pair(b, c) = rule.body {
                for &o in self.reach.targets(b, m) {
                    if self.reach.contains(c, o, n) {
                        out.push(AnnotatedRule {
                            head,
                            body: AnnotatedBody::Pair(AnnotatedSymbol::new(b, m, o), AnnotatedSymbol::new(c, o, n)),
                            origin: r,
                        });
                    }
                }
            }
        }
        out
    }

    /// Terminal rules, in grammar rule order then edge order.
    pub fn terminal_rules(&self) -> impl Iterator<Item = AnnotatedRule> + '_ {
        self.grammar.rule_ids().flat_map(move |r| {
            let rule = self.grammar.rule(r);
            let edges = match rule.body {
                Body::Terminal(t) => self.labels[t.index()].map_or(&[][..], |l| self.graph.edges_with_label(l)),
                Body::Pair(..) => &[][..],
            };
            edges.iter().map(move |e| {
                let Body::Terminal(t) = rule.body else { unreachable!() };
                AnnotatedRule {
                    head: AnnotatedSymbol::new(rule.head, e.source, e.target),
                    body: AnnotatedBody::Terminal(t),
                    origin: r,
                }
            })
        })
    }

    /// Binary rules, generated from the grammar and the triple index.
    pub fn binary_rules(&self) -> impl Iterator<Item = AnnotatedRule> + '_ {
        let nodes = self.graph.node_count() as u32;
        self.grammar.rule_ids().flat_map(move |r| {
            let rule = self.grammar.rule(r);
            let (b, c) = match rule.body {
                Body::Pair(b, c) => (b, c),
                Body::Terminal(_) => (NtId(u32::MAX), NtId(u32::MAX)),
            };
            let active = matches!(rule.body, Body::Pair(..));
            (0..if active { nodes } else { 0 }).flat_map(move |m| {
                let m = NodeId(m);
                self.reach.targets(b, m).iter().flat_map(move |&o| {
                    self.reach.targets(c, o).iter().filter_map(move |&n| {
                        self.reach.contains(rule.head, m, n).then(|| AnnotatedRule {
                            head: AnnotatedSymbol::new(rule.head, m, n),
                            body: AnnotatedBody::Pair(AnnotatedSymbol::new(b, m, o), AnnotatedSymbol::new(c, o, n)),
                            origin: r,
                        })
                    })
                })
            })
        })
    }

    pub fn materialize(&self) -> Vec<AnnotatedRule> {
        self.terminal_rules().chain(self.binary_rules()).collect()
    }

    pub fn rule_counts(&self) -> RuleCounts {
        RuleCounts { terminal: self.terminal_rules().count(), binary: self.binary_rules().count() }
    }

    /// Checks the worst-case size bounds `|𝒩̂| ≤ |𝒩||V|²` and
    /// `|𝒫̂| ≤ |𝒫||V|³ + min(|𝒩|, |𝒫|)|E|`.
    pub fn within_size_bounds(&self) -> bool {
        let nts = self.grammar.nonterminal_count() as u128;
        let rules = self.grammar.rules().len() as u128;
        let v = self.graph.node_count() as u128;
        let e = self.graph.edge_count() as u128;
        let counts = self.rule_counts();
        (self.symbol_count() as u128) <= nts * v * v && (counts.total() as u128) <= rules * v * v * v + nts.min(rules) * e
    }

    /// The annotated grammar as an ordinary grammar with nonterminals named
    /// `<a,m,n>` and terminals named after the graph labels. Also returns the
    /// triple behind each new nonterminal.
    pub fn to_plain_grammar(&self) -> (Grammar, Vec<AnnotatedSymbol>) {
        let mut b = Grammar::builder();
        let mut symbols = Vec::new();
        let mut intern = |b: &mut crate::grammar::GrammarBuilder, s: AnnotatedSymbol| {
            let name = s.display(self.grammar, self.graph);
            let id = b.nonterminal(&name);
            if id.index() == symbols.len() {
                symbols.push(s);
            }
            name
        };
        for s in self.symbols() {
            intern(&mut b, s);
        }
        for rule in self.materialize() {
            let head = intern(&mut b, rule.head);
            match rule.body {
                AnnotatedBody::Terminal(t) => {
                    b.terminal_rule(&head, self.grammar.term_name(t));
                }
                AnnotatedBody::Pair(x, y) => {
                    let x = intern(&mut b, x);
                    let y = intern(&mut b, y);
                    b.binary_rule(&head, &x, &y);
                }
            }
        }
        (b.build().expect("annotated names never clash with labels"), symbols)
    }

    /// Finds a derivation of `p` from `start`, CYK-style over the path.
    pub fn derive_specific_path(&self, start: AnnotatedSymbol, p: &Path) -> Result<PathDerivation, AnnotatedError> {
        let describe = || start.display(self.grammar, self.graph);
        if !self.contains(start) {
            return Err(AnnotatedError::NotDerivable(describe()));
        }
        let k = p.len();
        if k == 0 || p.nodes.len() != k + 1 || p.source() != start.source || p.target() != start.target {
            return Err(AnnotatedError::NotDerivable(describe()));
        }
        if p.nodes.iter().any(|n| n.index() >= self.graph.node_count()) || !self.graph.validate_path(p) {
            return Err(AnnotatedError::NotDerivable(describe()));
        }
        let nts = self.grammar.nonterminal_count();
        // back[(span-1)*k + i][a]: how ⟨a, nodes[i], nodes[i+span]⟩ derives that subpath
        #[derive(Clone, Copy)]
        enum Back {
            None,
            Leaf(RuleId),
            Split(RuleId, usize),
        }
        let cell = |span: usize, i: usize| (span - 1) * k + i;
        let mut back = vec![Back::None; k * k * nts];
        for i in 0..k {
            let (m, l, n) = (p.nodes[i], p.labels[i], p.nodes[i + 1]);
            for r in self.grammar.rule_ids() {
                let rule = self.grammar.rule(r);
                if let Body::Terminal(t) = rule.body {
                    let at = cell(1, i) * nts + rule.head.index();
                    if self.labels[t.index()] == Some(l) && matches!(back[at], Back::None) && self.reach.contains(rule.head, m, n) {
                        back[at] = Back::Leaf(r);
                    }
                }
            }
        }
        for span in 2..=k {
            for i in 0..=k - span {
                let (m, n) = (p.nodes[i], p.nodes[i + span]);
                for split in 1..span {
                    for r in self.grammar.rule_ids() {
                        let rule = self.grammar.rule(r);
                        let Body::Pair(b, c) = rule.body else { continue };
                        let at = cell(span, i) * nts + rule.head.index();
                        if !matches!(back[at], Back::None) || !self.reach.contains(rule.head, m, n) {
                            continue;
                        }
                        let left = cell(split, i) * nts + b.index();
                        let right = cell(span - split, i + split) * nts + c.index();
                        if !matches!(back[left], Back::None) && !matches!(back[right], Back::None) {
                            back[at] = Back::Split(r, split);
                        }
                    }
                }
            }
        }
        if matches!(back[cell(k, 0) * nts + start.nonterminal.index()], Back::None) {
            return Err(AnnotatedError::NotDerivable(describe()));
        }
        let mut nodes = Vec::with_capacity(2 * k - 1);
        // (tree slot, nonterminal, span, start)
        let mut stack = vec![(0usize, start.nonterminal, k, 0usize)];
        nodes.push(DerivationNode::Leaf { rule: RuleId(0), symbol: start, edge: 0 });
        while let Some((slot, a, span, i)) = stack.pop() {
            let symbol = AnnotatedSymbol::new(a, p.nodes[i], p.nodes[i + span]);
            match back[cell(span, i) * nts + a.index()] {
                Back::Leaf(rule) => nodes[slot] = DerivationNode::Leaf { rule, symbol, edge: i },
                Back::Split(rule, split) => {
                    let Body::Pair(b, c) = self.grammar.rule(rule).body else { unreachable!() };
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(DerivationNode::Leaf { rule: RuleId(0), symbol, edge: 0 });
                    nodes.push(DerivationNode::Leaf { rule: RuleId(0), symbol, edge: 0 });
                    nodes[slot] = DerivationNode::Branch { rule, symbol, left, right };
                    stack.push((right, c, span - split, i + split));
                    stack.push((left, b, split, i));
                }
                Back::None => unreachable!("back-pointers only reference derivable cells"),
            }
        }
        Ok(PathDerivation { nodes, path: p.clone() })
    }

    /// Paths derivable from `start`, shortest first.
    pub fn enumerate_paths(
        &self,
        start: AnnotatedSymbol,
        max_paths: usize,
        max_len: usize,
    ) -> Result<PathEnumerator<'_, 'a>, AnnotatedError> {
        if !self.contains(start) {
            return Err(AnnotatedError::NoPath(start.display(self.grammar, self.graph)));
        }
        let ms = minimize_annotated(self.grammar, self.graph);
        let mut estimate = rustc_hash::FxHashMap::default();
        for (s, c) in ms.iter() {
            estimate.insert(s, c.to_u64().unwrap_or(u64::MAX));
        }
        let mut e = PathEnumerator {
            ag: self,
            estimate,
            heap: BinaryHeap::new(),
            seen_states: HashSet::new(),
            emitted: HashSet::new(),
            batch: Vec::new(),
            max_paths,
            max_len: max_len as u64,
            count: 0,
            start_node: start.source,
        };
        e.push(Partial { edges: Vec::new(), pending: vec![start], end: start.source });
        Ok(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivationNode {
    Leaf { rule: RuleId, symbol: AnnotatedSymbol, edge: usize },
    Branch { rule: RuleId, symbol: AnnotatedSymbol, left: usize, right: usize },
}

/// A derivation tree of a path; node 0 is the root.
#[derive(Debug, Clone)]
pub struct PathDerivation {
    nodes: Vec<DerivationNode>,
    path: Path,
}

impl PathDerivation {
    pub fn nodes(&self) -> &[DerivationNode] {
        &self.nodes
    }

    pub fn root(&self) -> &DerivationNode {
        &self.nodes[0]
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Leaves in left-to-right order as `(symbol, edge index)`.
    pub fn leaves(&self) -> Vec<(AnnotatedSymbol, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match self.nodes[i] {
                DerivationNode::Leaf { symbol, edge, .. } => out.push((symbol, edge)),
                DerivationNode::Branch { right, left, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }
}

/// A partial leftmost derivation: the edges spelled so far, then the
/// annotated nonterminals still to expand (last element is leftmost).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Partial {
    edges: Vec<(LabelId, NodeId)>,
    pending: Vec<AnnotatedSymbol>,
    end: NodeId,
}

#[derive(Debug)]
struct Queued {
    bound: u64,
    seq: u64,
    state: Partial,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.bound, self.seq).cmp(&(other.bound, other.seq))
    }
}

/// Best-first enumeration of the paths derivable from one annotated
/// nonterminal. Partial derivations are ordered by a lower bound on their
/// final length: spelled edges plus the minimum path length of each pending
/// nonterminal. Complete paths of one length are released together, sorted
/// by node sequence and then by label sequence.
pub struct PathEnumerator<'g, 'a> {
    ag: &'g AnnotatedGrammar<'a>,
    estimate: rustc_hash::FxHashMap<AnnotatedSymbol, u64>,
    heap: BinaryHeap<Reverse<Queued>>,
    seen_states: HashSet<Partial>,
    emitted: HashSet<Path>,
    batch: Vec<Path>,
    max_paths: usize,
    max_len: u64,
    count: usize,
    start_node: NodeId,
}

impl PathEnumerator<'_, '_> {
    fn push(&mut self, state: Partial) {
        let mut bound = state.edges.len() as u64;
        for s in &state.pending {
            match self.estimate.get(s) {
                Some(&c) => bound = bound.saturating_add(c),
                None => return,
            }
        }
        if bound > self.max_len || !self.seen_states.insert(state.clone()) {
            return;
        }
        let seq = self.seen_states.len() as u64;
        self.heap.push(Reverse(Queued { bound, seq, state }));
    }

    fn expand(&mut self, mut state: Partial) {
        let Some(head) = state.pending.pop() else { return };
        for rule in self.ag.rules_for(head) {
            let mut next = state.clone();
            match rule.body {
                AnnotatedBody::Terminal(t) => {
                    let label = self.ag.label_of(t).expect("terminal rules come from edges");
                    next.edges.push((label, head.target));
                    next.end = head.target;
                }
                AnnotatedBody::Pair(left, right) => {
                    next.pending.push(right);
                    next.pending.push(left);
                }
            }
            self.push(next);
        }
    }

    fn fill_batch(&mut self) {
        while self.batch.is_empty() {
            let Some(Reverse(first)) = self.heap.pop() else { return };
            let level = first.bound;
            let mut complete = Vec::new();
            let mut current = Some(first);
            while let Some(q) = current.take() {
                if q.state.pending.is_empty() {
                    complete.push(q.state);
                } else {
                    self.expand(q.state);
                }
                if self.heap.peek().map_or(false, |Reverse(top)| top.bound == level) {
                    current = self.heap.pop().map(|Reverse(q)| q);
                }
            }
            let origin = self.start_node;
            let mut paths: Vec<Path> = complete
                .into_iter()
                .map(|state| {
                    let mut nodes = Vec::with_capacity(state.edges.len() + 1);
                    let mut labels = Vec::with_capacity(state.edges.len());
                    nodes.push(origin);
                    for (l, n) in state.edges {
                        labels.push(l);
                        nodes.push(n);
                    }
                    Path { nodes, labels }
                })
                .collect();
            paths.retain(|p| self.emitted.insert(p.clone()));
            paths.sort_by(|x, y| x.nodes.cmp(&y.nodes).then_with(|| x.labels.cmp(&y.labels)));
            paths.reverse();
            self.batch = paths;
        }
    }
}

impl Iterator for PathEnumerator<'_, '_> {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        if self.count >= self.max_paths {
            return None;
        }
        self.fill_batch();
        let p = self.batch.pop()?;
        self.count += 1;
        Some(p)
    }
}
