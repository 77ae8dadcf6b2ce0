//! Single-path semantics: a minimum-length path per node pair.
//!
//! [`minimize_annotated`] runs the best-first minimization directly on the
//! annotated grammar over a grammar and a graph without materializing it.
//! Costed triples are kept in a flat table keyed by the packed
//! `a·|V|² + m·|V| + n` index, together with per-`(nonterminal, node)`
//! adjacency lists of costed targets and sources that drive the two join
//! loops.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::cost::Cost;
use crate::grammar::{Body, Grammar, GrammarError, NtId, RuleId};
use crate::graph::{Graph, LabelId, NodeId, Path};
use crate::recognizer::{terminal_labels, AnnotatedSymbol};
use crate::shortest::QueueStats;
use crate::triples::{SlotMap, TripleSpace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("no matching path from {from} to {to}")]
    NoPath { from: String, to: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("path is too long to materialize")]
    TooLong,
}

/// A chosen annotated rule: `⟨a,m,n⟩ -> σ` when `rule` is a terminal rule,
/// otherwise `⟨a,m,n⟩ -> ⟨b,m,mid⟩ ⟨c,mid,n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotatedChoice {
    pub rule: RuleId,
    pub mid: NodeId,
}

#[derive(Debug, Clone)]
struct Entry {
    key: u64,
    cost: Cost,
    choice: AnnotatedChoice,
}

/// Minimizing set over the annotated grammar: one chosen annotated rule and
/// the minimum path length for every derivable `⟨a, m, n⟩`.
#[derive(Debug, Clone)]
pub struct AnnotatedMinimizingSet<'a> {
    grammar: &'a Grammar,
    graph: &'a Graph,
    space: TripleSpace,
    slots: SlotMap,
    entries: Vec<Entry>,
    labels: Vec<Option<LabelId>>,
    stats: QueueStats,
}

/// Size summary of a minimizing set, as reported by `--stats` and benches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostSummary {
    pub domain: usize,
    pub max: Cost,
    pub total: Cost,
}

impl<'a> AnnotatedMinimizingSet<'a> {
    pub fn grammar(&self) -> &'a Grammar {
        self.grammar
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> &QueueStats {
        &self.stats
    }

    fn slot(&self, s: AnnotatedSymbol) -> Option<usize> {
        if s.nonterminal.index() >= self.grammar.nonterminal_count()
            || s.source.index() >= self.graph.node_count()
            || s.target.index() >= self.graph.node_count()
        {
            return None;
        }
        self.slots.get(self.space.pack(s.nonterminal, s.source, s.target)).map(|s| s as usize)
    }

    pub fn contains(&self, s: AnnotatedSymbol) -> bool {
        self.slot(s).is_some()
    }

    pub fn cost(&self, s: AnnotatedSymbol) -> Option<&Cost> {
        self.slot(s).map(|i| &self.entries[i].cost)
    }

    pub fn choice(&self, s: AnnotatedSymbol) -> Option<AnnotatedChoice> {
        self.slot(s).map(|i| self.entries[i].choice)
    }

    /// Costed triples in the order they were first reached.
    pub fn iter(&self) -> impl Iterator<Item = (AnnotatedSymbol, &Cost)> + '_ {
        self.entries.iter().map(|e| {
            let (a, m, n) = self.space.unpack(e.key);
            (AnnotatedSymbol::new(a, m, n), &e.cost)
        })
    }

    /// Costed pairs of `a`, sorted in node order.
    pub fn pairs(&self, a: NtId) -> Vec<(NodeId, NodeId)> {
        let mut pairs: Vec<_> = self
            .iter()
            .filter(|(s, _)| s.nonterminal == a)
            .map(|(s, _)| (s.source, s.target))
            .collect();
        pairs.sort_unstable();
        pairs
    }

    pub fn summary(&self) -> CostSummary {
        self.summarize(|_| true)
    }

    pub fn summary_for(&self, a: NtId) -> CostSummary {
        self.summarize(|s| s.nonterminal == a)
    }

    fn summarize(&self, keep: impl Fn(&AnnotatedSymbol) -> bool) -> CostSummary {
        let mut domain = 0;
        let mut max = Cost::ZERO;
        let mut total = Cost::ZERO;
        for (s, c) in self.iter() {
            if keep(&s) {
                domain += 1;
                if *c > max {
                    max = c.clone();
                }
                total = &total + c;
            }
        }
        CostSummary { domain, max, total }
    }

    /// Streams the edges of the minimum-length path for `s`, first to last.
    pub fn for_each_edge(
        &self,
        s: AnnotatedSymbol,
        mut emit: impl FnMut(NodeId, LabelId, NodeId),
    ) -> Result<(), PathError> {
        let root = self.slot(s).ok_or_else(|| self.no_path(s))?;
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            let entry = &self.entries[i];
            let (a, m, n) = self.space.unpack(entry.key);
            let rule = self.grammar.rule(entry.choice.rule);
            debug_assert_eq!(rule.head, a);
            match rule.body {
                Body::Terminal(t) => {
                    let label = self.labels[t.index()].expect("seeded from an edge with this label");
                    emit(m, label, n);
                }
                Body::Pair(b, c) => {
                    let mid = entry.choice.mid;
                    let right = self.slots.get(self.space.pack(c, mid, n)).expect("chosen rules are complete");
                    let left = self.slots.get(self.space.pack(b, m, mid)).expect("chosen rules are complete");
                    stack.push(right as usize);
                    stack.push(left as usize);
                }
            }
        }
        Ok(())
    }

    /// Materializes the minimum-length path for `s`.
    pub fn path(&self, s: AnnotatedSymbol) -> Result<Path, PathError> {
        let len = self.cost(s).ok_or_else(|| self.no_path(s))?.to_u64().ok_or(PathError::TooLong)?;
        let len = usize::try_from(len).map_err(|_| PathError::TooLong)?;
        let mut path = Path { nodes: Vec::with_capacity(len + 1), labels: Vec::with_capacity(len) };
        path.nodes.push(s.source);
        self.for_each_edge(s, |_, l, n| {
            path.labels.push(l);
            path.nodes.push(n);
        })?;
        Ok(path)
    }

    fn no_path(&self, s: AnnotatedSymbol) -> PathError {
        let name = |n: NodeId| {
            if n.index() < self.graph.node_count() {
                self.graph.node_name(n).to_string()
            } else {
                format!("#{}", n.0)
            }
        };
        PathError::NoPath { from: name(s.source), to: name(s.target) }
    }

    /// Triples whose chosen rule breaks the cost equations: a terminal rule
    /// must cost 1, and `⟨a,m,n⟩ -> ⟨b,m,o⟩ ⟨c,o,n⟩` must cost the sum of two
    /// costed parts, each strictly cheaper than the head.
    pub fn equation_violations(&self) -> Vec<AnnotatedSymbol> {
        let mut out = Vec::new();
        for entry in &self.entries {
            let (a, m, n) = self.space.unpack(entry.key);
            let ok = match self.grammar.rule(entry.choice.rule).body {
                Body::Terminal(_) => entry.cost == Cost::ONE,
                Body::Pair(b, c) => {
                    let mid = entry.choice.mid;
                    match (self.cost(AnnotatedSymbol::new(b, m, mid)), self.cost(AnnotatedSymbol::new(c, mid, n))) {
                        (Some(x), Some(y)) => entry.cost == x + y && entry.cost > *x && entry.cost > *y,
                        _ => false,
                    }
                }
            };
            if !ok {
                out.push(AnnotatedSymbol::new(a, m, n));
            }
        }
        out
    }

    /// Overwrites the recorded cost of `s`. Only for fault-injection tests
    /// of the verifiers.
    #[doc(hidden)]
    pub fn corrupt_cost(&mut self, s: AnnotatedSymbol, cost: Cost) -> bool {
        match self.slot(s) {
            Some(i) => {
                self.entries[i].cost = cost;
                true
            }
            None => false,
        }
    }
}

struct Run<'a> {
    space: TripleSpace,
    slots: SlotMap,
    entries: Vec<Entry>,
    /// `(a, m)` → slots of costed `⟨a, m, ·⟩`, in the order they were costed
    out: Vec<Vec<u32>>,
    /// `(a, n)` → slots of costed `⟨a, ·, n⟩`
    inc: Vec<Vec<u32>>,
    done: Vec<bool>,
    queue: BinaryHeap<Reverse<(Cost, u64)>>,
    stats: QueueStats,
    grammar: &'a Grammar,
}

impl Run<'_> {
    fn push_new(&mut self, key: u64, cost: Cost, choice: AnnotatedChoice) {
        let slot = self.entries.len() as u32;
        let (a, m, n) = self.space.unpack(key);
        self.slots.insert(key, slot);
        self.entries.push(Entry { key, cost: cost.clone(), choice });
        self.done.push(false);
        self.out[self.space.pair(a, m)].push(slot);
        self.inc[self.space.pair(a, n)].push(slot);
        self.queue.push(Reverse((cost, key)));
        self.stats.insertions += 1;
    }

    /// `⟨d,u,w⟩ -> ⟨e,u,v⟩ ⟨f,v,w⟩` with both body triples costed.
    #[inline]
    fn produce(&mut self, head: u64, rule: RuleId, mid: NodeId, left: u32, right: u32) {
        let sum = &self.entries[left as usize].cost + &self.entries[right as usize].cost;
        match self.slots.get(head) {
            None => self.push_new(head, sum, AnnotatedChoice { rule, mid }),
            Some(slot) => {
                let entry = &mut self.entries[slot as usize];
                if entry.cost > sum {
                    if self.done[slot as usize] {
                        self.stats.single_insertion = false;
                    }
                    entry.cost = sum.clone();
                    entry.choice = AnnotatedChoice { rule, mid };
                    self.queue.push(Reverse((sum, head)));
                    self.stats.decreases += 1;
                }
            }
        }
    }
}

/// Builds the minimizing set of the annotated grammar over `(g, graph)`.
pub fn minimize_annotated<'a>(g: &'a Grammar, graph: &'a Graph) -> AnnotatedMinimizingSet<'a> {
    let space = TripleSpace::new(g.nonterminal_count(), graph.node_count());
    let labels = terminal_labels(g, graph);
    let mut run = Run {
        space,
        slots: SlotMap::for_space(&space),
        entries: Vec::new(),
        out: vec![Vec::new(); space.pair_count()],
        inc: vec![Vec::new(); space.pair_count()],
        done: Vec::new(),
        queue: BinaryHeap::new(),
        stats: QueueStats::default(),
        grammar: g,
    };

    for r in g.rule_ids() {
        let rule = g.rule(r);
        let Body::Terminal(t) = rule.body else { continue };
        let Some(l) = labels[t.index()] else { continue };
        for e in graph.edges_with_label(l) {
            let key = space.pack(rule.head, e.source, e.target);
            if !run.slots.contains(key) {
                run.push_new(key, Cost::ONE, AnnotatedChoice { rule: r, mid: e.source });
            }
        }
    }

    let mut last: Option<Cost> = None;
    while let Some(Reverse((priority, key))) = run.queue.pop() {
        let slot = run.slots.get(key).expect("queued keys are costed");
        if run.done[slot as usize] {
            run.stats.stale_skipped += 1;
            continue;
        }
        if let Some(prev) = &last {
            if priority < *prev {
                run.stats.monotone = false;
            }
        }
        debug_assert!(last.as_ref().map_or(true, |p| priority >= *p), "queue priorities went down");
        last = Some(priority);
        run.done[slot as usize] = true;
        run.stats.extractions += 1;

        let (a, m, n) = space.unpack(key);
        let grammar = run.grammar;
        // c -> a b with ⟨b,n,o⟩ costed: ⟨c,m,o⟩ -> ⟨a,m,n⟩ ⟨b,n,o⟩
        for &r in grammar.rules_with_first(a) {
            let rule = grammar.rule(r);
            let Body::Pair(_, b) = rule.body else { unreachable!() };
            let list = space.pair(b, n);
            let count = run.out[list].len();
            for i in 0..count {
                let right = run.out[list][i];
                let (_, _, o) = space.unpack(run.entries[right as usize].key);
                run.produce(space.pack(rule.head, m, o), r, n, slot, right);
            }
        }
        // c -> b a with ⟨b,o,m⟩ costed: ⟨c,o,n⟩ -> ⟨b,o,m⟩ ⟨a,m,n⟩
        for &r in grammar.rules_with_second(a) {
            let rule = grammar.rule(r);
            let Body::Pair(b, _) = rule.body else { unreachable!() };
            let list = space.pair(b, m);
            let count = run.inc[list].len();
            for i in 0..count {
                let left = run.inc[list][i];
                let (_, o, _) = space.unpack(run.entries[left as usize].key);
                run.produce(space.pack(rule.head, o, n), r, m, left, slot);
            }
        }
    }

    AnnotatedMinimizingSet {
        grammar: g,
        graph,
        space,
        slots: run.slots,
        entries: run.entries,
        labels,
        stats: run.stats,
    }
}

fn resolve_node(graph: &Graph, name: &str) -> Result<NodeId, PathError> {
    graph.node(name).ok_or_else(|| PathError::UnknownNode(name.to_string()))
}

/// A minimum-length path from `from` to `to` whose trace is in `L(a)`.
pub fn shortest_path(g: &Grammar, a: &str, graph: &Graph, from: &str, to: &str) -> Result<Path, PathError> {
    let a = g.resolve(a)?;
    let m = resolve_node(graph, from)?;
    let n = resolve_node(graph, to)?;
    minimize_annotated(g, graph).path(AnnotatedSymbol::new(a, m, n))
}

/// One minimum-length path per pair of the relational answer, in node order.
pub fn shortest_path_all_pairs<'s, 'a>(
    ms: &'s AnnotatedMinimizingSet<'a>,
    a: NtId,
) -> impl Iterator<Item = (NodeId, NodeId, Path)> + 's {
    ms.pairs(a).into_iter().map(move |(m, n)| {
        let p = ms.path(AnnotatedSymbol::new(a, m, n)).expect("pair is costed");
        (m, n, p)
    })
}
