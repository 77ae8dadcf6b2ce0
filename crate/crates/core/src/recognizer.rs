//! Relational and boolean query evaluation.
//!
//! [`recognize`] computes every annotated nonterminal `⟨a, m, n⟩` such that
//! some path from `m` to `n` has a trace in `L(a)`. It is a bottom-up
//! worklist closure: terminal rules seed triples from matching edges, and
//! each newly derived triple is joined with the already known triples on its
//! left and right through the binary rules.

use std::collections::VecDeque;

use crate::grammar::{Body, Grammar, GrammarError, NtId};
use crate::graph::{Graph, LabelId, NodeId};
use crate::triples::{SlotMap, TripleSpace};

/// `⟨a, m, n⟩`: nonterminal `a` annotated with a source and a target node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotatedSymbol {
    pub nonterminal: NtId,
    pub source: NodeId,
    pub target: NodeId,
}

impl AnnotatedSymbol {
    pub fn new(nonterminal: NtId, source: NodeId, target: NodeId) -> Self {
        AnnotatedSymbol { nonterminal, source, target }
    }

    pub fn display(&self, g: &Grammar, graph: &Graph) -> String {
        format!(
            "<{},{},{}>",
            g.nt_name(self.nonterminal),
            graph.node_name(self.source),
            graph.node_name(self.target)
        )
    }
}

/// Graph label for each grammar terminal, by name.
pub(crate) fn terminal_labels(g: &Grammar, graph: &Graph) -> Vec<Option<LabelId>> {
    (0..g.terminal_count() as u32)
        .map(|t| graph.label(g.term_name(crate::grammar::TermId(t))))
        .collect()
}

/// The set of derivable annotated nonterminals.
#[derive(Debug, Clone)]
pub struct ReachSet {
    space: TripleSpace,
    present: SlotMap,
    /// Triples in derivation order.
    order: Vec<u64>,
    /// `(a, m)` → targets `n`, sorted.
    out: Vec<Vec<NodeId>>,
    /// `(a, n)` → sources `m`, sorted.
    inc: Vec<Vec<NodeId>>,
    nodes: usize,
}

impl ReachSet {
    pub fn space(&self) -> TripleSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    pub fn contains(&self, a: NtId, m: NodeId, n: NodeId) -> bool {
        self.present.contains(self.space.pack(a, m, n))
    }

    pub fn contains_symbol(&self, s: AnnotatedSymbol) -> bool {
        self.contains(s.nonterminal, s.source, s.target)
    }

    /// Targets `n` with `⟨a, m, n⟩` in the set, in node order.
    pub fn targets(&self, a: NtId, m: NodeId) -> &[NodeId] {
        &self.out[self.space.pair(a, m)]
    }

    /// Sources `m` with `⟨a, m, n⟩` in the set, in node order.
    pub fn sources(&self, a: NtId, n: NodeId) -> &[NodeId] {
        &self.inc[self.space.pair(a, n)]
    }

    /// All triples, ordered by nonterminal, source, then target.
    pub fn iter(&self) -> impl Iterator<Item = AnnotatedSymbol> + '_ {
        let nodes = self.nodes as u32;
        let nts = if nodes == 0 { 0 } else { self.out.len() as u32 / nodes };
        (0..nts).flat_map(move |a| {
            (0..nodes).flat_map(move |m| {
                self.targets(NtId(a), NodeId(m))
                    .iter()
                    .map(move |&n| AnnotatedSymbol::new(NtId(a), NodeId(m), n))
            })
        })
    }

    /// Node pairs `(m, n)` for `a`, in node order.
    pub fn pairs(&self, a: NtId) -> Vec<(NodeId, NodeId)> {
        (0..self.nodes as u32)
            .flat_map(|m| self.targets(a, NodeId(m)).iter().map(move |&n| (NodeId(m), n)))
            .collect()
    }
}

struct Closure {
    space: TripleSpace,
    present: SlotMap,
    order: Vec<u64>,
    out: Vec<Vec<NodeId>>,
    inc: Vec<Vec<NodeId>>,
    queue: VecDeque<(NtId, NodeId, NodeId)>,
}

impl Closure {
    #[inline]
    fn insert(&mut self, a: NtId, m: NodeId, n: NodeId) {
        let key = self.space.pack(a, m, n);
        if self.present.contains(key) {
            return;
        }
        self.present.insert(key, self.order.len() as u32);
        self.order.push(key);
        self.out[self.space.pair(a, m)].push(n);
        self.inc[self.space.pair(a, n)].push(m);
        self.queue.push_back((a, m, n));
    }
}

/// Computes `{ ⟨a, m, n⟩ | L(a) ∩ L(graph; m, n) ≠ ∅ }`.
pub fn recognize(g: &Grammar, graph: &Graph) -> ReachSet {
    let space = TripleSpace::new(g.nonterminal_count(), graph.node_count());
    let mut st = Closure {
        space,
        present: SlotMap::for_space(&space),
        order: Vec::new(),
        out: vec![Vec::new(); space.pair_count()],
        inc: vec![Vec::new(); space.pair_count()],
        queue: VecDeque::new(),
    };
    let labels = terminal_labels(g, graph);
    for rule in g.rules() {
        if let Body::Terminal(t) = rule.body {
            if let Some(l) = labels[t.index()] {
                for e in graph.edges_with_label(l) {
                    st.insert(rule.head, e.source, e.target);
                }
            }
        }
    }
    while let Some((b, m, o)) = st.queue.pop_front() {
        // a -> b c: ⟨b,m,o⟩ ⟨c,o,n⟩ gives ⟨a,m,n⟩
        for &r in g.rules_with_first(b) {
            let rule = g.rule(r);
            let Body::Pair(_, c) = rule.body else { unreachable!() };
            let list = space.pair(c, o);
            let mut i = 0;
            while i < st.out[list].len() {
                let n = st.out[list][i];
                st.insert(rule.head, m, n);
                i += 1;
            }
        }
        // a -> c b: ⟨c,l,m⟩ ⟨b,m,o⟩ gives ⟨a,l,o⟩
        for &r in g.rules_with_second(b) {
            let rule = g.rule(r);
            let Body::Pair(c, _) = rule.body else { unreachable!() };
            let list = space.pair(c, m);
            let mut i = 0;
            while i < st.inc[list].len() {
                let l = st.inc[list][i];
                st.insert(rule.head, l, o);
                i += 1;
            }
        }
    }
    for v in st.out.iter_mut().chain(st.inc.iter_mut()) {
        v.sort_unstable();
    }
    ReachSet {
        space,
        present: st.present,
        order: st.order,
        out: st.out,
        inc: st.inc,
        nodes: graph.node_count(),
    }
}

/// Relational semantics: the sorted node pairs connected by an `a`-path.
pub fn eval_relational(g: &Grammar, a: &str, graph: &Graph) -> Result<Vec<(NodeId, NodeId)>, GrammarError> {
    let a = g.resolve(a)?;
    Ok(recognize(g, graph).pairs(a))
}

/// Boolean semantics: does any `a`-path exist?
pub fn eval_boolean(g: &Grammar, a: &str, graph: &Graph) -> Result<bool, GrammarError> {
    Ok(!eval_relational(g, a, graph)?.is_empty())
}
