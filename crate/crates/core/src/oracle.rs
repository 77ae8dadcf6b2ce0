//! Brute-force reference answers for small instances.
//!
//! Nothing here shares code with the engine beyond the grammar and graph
//! containers. Membership is decided by a local CYK table, and path search
//! walks traces explicitly.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{Body, Grammar, NtId, TermId};
use crate::graph::{Graph, LabelId, NodeId, Path};

/// Every path of at most `bound` edges starting at `m`, in breadth-first
/// order (by length, then by the order edges were added).
pub fn enum_paths(graph: &Graph, m: NodeId, bound: usize) -> Vec<Path> {
    let mut out = vec![Path::single(m)];
    let mut frontier = 0;
    for _ in 0..bound {
        let end = out.len();
        for i in frontier..end {
            let p = out[i].clone();
            for (l, n) in graph.out_edges(p.target()) {
                let mut q = p.clone();
                q.labels.push(l);
                q.nodes.push(n);
                out.push(q);
            }
        }
        frontier = end;
    }
    out
}

/// Number of paths from `m` of each length `0..=bound`, by powers of the
/// edge-count matrix.
pub fn path_counts(graph: &Graph, m: NodeId, bound: usize) -> Vec<u128> {
    let v = graph.node_count();
    let mut adj = vec![vec![0u128; v]; v];
    for e in graph.edges() {
        adj[e.source.index()][e.target.index()] += 1;
    }
    let mut row = vec![0u128; v];
    row[m.index()] = 1;
    let mut counts = vec![1];
    for _ in 0..bound {
        let mut next = vec![0u128; v];
        for (i, &x) in row.iter().enumerate() {
            if x != 0 {
                for (j, &c) in adj[i].iter().enumerate() {
                    next[j] += x * c;
                }
            }
        }
        row = next;
        counts.push(row.iter().sum());
    }
    counts
}

/// CYK over a word of grammar terminals; entry `a` of the result says
/// whether `a` derives the whole word.
pub fn derivers(g: &Grammar, word: &[TermId]) -> Vec<bool> {
    let k = word.len();
    let nts = g.nonterminal_count();
    if k == 0 {
        return vec![false; nts];
    }
    let at = |span: usize, i: usize, a: usize| ((span - 1) * k + i) * nts + a;
    let mut table = vec![false; k * k * nts];
    for (i, &t) in word.iter().enumerate() {
        for rule in g.rules() {
            if rule.body == Body::Terminal(t) {
                table[at(1, i, rule.head.index())] = true;
            }
        }
    }
    for span in 2..=k {
        for i in 0..=k - span {
            for split in 1..span {
                for rule in g.rules() {
                    if let Body::Pair(b, c) = rule.body {
                        if table[at(split, i, b.index())] && table[at(span - split, i + split, c.index())] {
                            table[at(span, i, rule.head.index())] = true;
                        }
                    }
                }
            }
        }
    }
    (0..nts).map(|a| table[at(k, 0, a)]).collect()
}

fn label_terms(g: &Grammar, graph: &Graph) -> Vec<Option<TermId>> {
    (0..graph.label_count() as u32).map(|l| g.terminal(graph.label_name(LabelId(l)))).collect()
}

/// Depth-first walk over the distinct traces of paths from `m` with at most
/// `bound` edges. Calls `visit(word, reachable, roots)` for every nonempty
/// trace whose labels are all grammar terminals: `reachable[n]` tells whether
/// some path from `m` with that trace ends in `n`, and `roots[a]` whether `a`
/// derives the trace. The CYK chart grows one column per appended label.
fn walk_traces(
    g: &Grammar,
    graph: &Graph,
    m: NodeId,
    bound: usize,
    visit: &mut dyn FnMut(&[TermId], &[bool], &[bool]),
) {
    let terms = label_terms(g, graph);
    let v = graph.node_count();
    let nts = g.nonterminal_count();
    let mut start = vec![false; v];
    start[m.index()] = true;
    let mut word = Vec::new();
    // columns[k - 1][i * nts + a]: `a` derives word[i..k]
    let mut columns: Vec<Vec<bool>> = Vec::new();
    // (reachable set, next label to try)
    let mut stack: Vec<(Vec<bool>, usize)> = vec![(start, 0)];
    while let Some((set, next)) = stack.last_mut() {
        if word.len() == bound || *next == graph.label_count() {
            stack.pop();
            word.pop();
            columns.pop();
            continue;
        }
        let l = LabelId(*next as u32);
        *next += 1;
        let Some(t) = terms[l.index()] else { continue };
        let mut succ = vec![false; v];
        let mut any = false;
        for (i, _) in set.iter().enumerate().filter(|(_, &x)| x) {
            for &n in graph.successors(NodeId(i as u32), l) {
                succ[n.index()] = true;
                any = true;
            }
        }
        if !any {
            continue;
        }
        word.push(t);
        let k = word.len();
        let mut col = vec![false; k * nts];
        for rule in g.rules() {
            if rule.body == Body::Terminal(t) {
                col[(k - 1) * nts + rule.head.index()] = true;
            }
        }
        for i in (0..k - 1).rev() {
            // word[i..k] = word[i..j] word[j..k]
            for j in i + 1..k {
                for rule in g.rules() {
                    if let Body::Pair(b, c) = rule.body {
                        if columns[j - 1][i * nts + b.index()] && col[j * nts + c.index()] {
                            col[i * nts + rule.head.index()] = true;
                        }
                    }
                }
            }
        }
        visit(&word, &succ, &col[..nts]);
        columns.push(col);
        stack.push((succ, 0));
    }
}

/// Minimum length at most `bound` of a path `m → n` whose trace `a` derives.
pub fn brute_min_path(g: &Grammar, a: NtId, graph: &Graph, m: NodeId, n: NodeId, bound: usize) -> Option<usize> {
    let mut best: Option<usize> = None;
    walk_traces(g, graph, m, bound, &mut |word, reach, roots| {
        if reach[n.index()] && roots[a.index()] && best.map_or(true, |b| word.len() < b) {
            best = Some(word.len());
        }
    });
    best
}

/// All triples `⟨a, m, n⟩` witnessed by some path of at most `bound` edges,
/// with the minimum witness length found.
pub fn bounded_triples(g: &Grammar, graph: &Graph, bound: usize) -> Vec<((NtId, NodeId, NodeId), usize)> {
    let nts = g.nonterminal_count();
    let v = graph.node_count();
    let mut best = vec![usize::MAX; nts * v * v];
    for m in graph.nodes() {
        walk_traces(g, graph, m, bound, &mut |word, reach, roots| {
            for (a, _) in roots.iter().enumerate().filter(|(_, &x)| x) {
                for (n, _) in reach.iter().enumerate().filter(|(_, &x)| x) {
                    let slot = &mut best[(a * v + m.index()) * v + n];
                    *slot = (*slot).min(word.len());
                }
            }
        });
    }
    let mut out = Vec::new();
    for a in 0..nts {
        for m in 0..v {
            for n in 0..v {
                let len = best[(a * v + m) * v + n];
                if len != usize::MAX {
                    out.push(((NtId(a as u32), NodeId(m as u32), NodeId(n as u32)), len));
                }
            }
        }
    }
    out
}

/// Exact minimum witness length of every derivable triple, by building the
/// sets of triples with a witness of each exact length `1, 2, …`.
///
/// Once the longest first-appearance length seen is `d` and no triple first
/// appears in `(d, 2d]`, no triple is missing. Returns `None` if that point
/// is not reached within `max_len` lengths.
pub fn exact_min_lengths(g: &Grammar, graph: &Graph, max_len: usize) -> Option<Vec<((NtId, NodeId, NodeId), usize)>> {
    let nts = g.nonterminal_count();
    let v = graph.node_count();
    let size = nts * v * v;
    let idx = |a: usize, m: usize, n: usize| (a * v + m) * v + n;
    let terms = label_terms(g, graph);
    let mut levels: Vec<Vec<bool>> = vec![Vec::new()];
    let mut first = vec![usize::MAX; size];
    let mut deepest = 0;
    let mut base = vec![false; size];
    for e in graph.edges() {
        if let Some(t) = terms[e.label.index()] {
            for rule in g.rules() {
                if rule.body == Body::Terminal(t) {
                    base[idx(rule.head.index(), e.source.index(), e.target.index())] = true;
                }
            }
        }
    }
    levels.push(base);
    let mut len = 1;
    loop {
        for (i, _) in levels[len].iter().enumerate().filter(|(_, &x)| x) {
            if first[i] == usize::MAX {
                first[i] = len;
                deepest = len;
            }
        }
        if len >= 2 * deepest.max(1) {
            break;
        }
        if len == max_len {
            return None;
        }
        len += 1;
        let mut level = vec![false; size];
        for left in 1..len {
            let (x, y) = (&levels[left], &levels[len - left]);
            for rule in g.rules() {
                let Body::Pair(b, c) = rule.body else { continue };
                for m in 0..v {
                    for o in 0..v {
                        if !x[idx(b.index(), m, o)] {
                            continue;
                        }
                        for n in 0..v {
                            if y[idx(c.index(), o, n)] {
                                level[idx(rule.head.index(), m, n)] = true;
                            }
                        }
                    }
                }
            }
        }
        levels.push(level);
    }
    let mut out = Vec::new();
    for a in 0..nts {
        for m in 0..v {
            for n in 0..v {
                let l = first[idx(a, m, n)];
                if l != usize::MAX {
                    out.push(((NtId(a as u32), NodeId(m as u32), NodeId(n as u32)), l));
                }
            }
        }
    }
    Some(out)
}

/// Minimum length at most `bound` of a string derived from `a`, by
/// breadth-first search over leftmost sentential forms.
pub fn brute_min_string(g: &Grammar, a: NtId, bound: usize) -> Option<usize> {
    // (terminals emitted, pending nonterminals with the leftmost last)
    let mut seen: HashSet<(usize, Vec<NtId>)> = HashSet::new();
    let mut queue = VecDeque::new();
    let start = (0usize, vec![a]);
    seen.insert(start.clone());
    queue.push_back(start);
    let mut best: Option<usize> = None;
    while let Some((emitted, mut pending)) = queue.pop_front() {
        let Some(head) = pending.pop() else {
            best = Some(best.map_or(emitted, |b| b.min(emitted)));
            continue;
        };
        for rule in g.rules().iter().filter(|r| r.head == head) {
            let mut next = pending.clone();
            let mut count = emitted;
            match rule.body {
                Body::Terminal(_) => count += 1,
                Body::Pair(b, c) => {
                    next.push(c);
                    next.push(b);
                }
            }
            if count + next.len() > bound {
                continue;
            }
            let state = (count, next);
            if seen.insert(state.clone()) {
                queue.push_back(state);
            }
        }
    }
    best
}

/// A seeded random instance: a CNF grammar with at most `max_nts`
/// nonterminals and `max_rules` rules over terminals `a`, `b`, `c`, and a
/// graph with at most `max_nodes` nodes labelled `a` and `b`.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub grammar: Grammar,
    pub graph: Graph,
}

pub fn random_instance(seed: u64, max_nts: usize, max_rules: usize, max_nodes: usize) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nts: Vec<String> = (0..rng.gen_range(max_nts.div_ceil(2)..=max_nts)).map(|i| format!("x{i}")).collect();
    let terms = ["a", "b", "c"];
    let mut b = Grammar::builder();
    for name in &nts {
        b.nonterminal(name);
    }
    let rules = rng.gen_range(1..=max_rules);
    // Starting with one terminal rule keeps most instances non-empty.
    b.terminal_rule(&nts[0], terms[rng.gen_range(0..2)]);
    for _ in 1..rules {
        let head = nts.choose(&mut rng).unwrap();
        if rng.gen_bool(0.4) {
            // `c` never labels an edge
            let t = if rng.gen_bool(0.1) { "c" } else { terms[rng.gen_range(0..2)] };
            b.terminal_rule(head, t);
        } else {
            b.binary_rule(head, nts.choose(&mut rng).unwrap(), nts.choose(&mut rng).unwrap());
        }
    }
    let grammar = b.build().expect("random names are distinct");
    let nodes = rng.gen_range(max_nodes.div_ceil(2).max(1)..=max_nodes);
    let mut gb = Graph::builder();
    for i in 0..nodes {
        gb.node(&format!("v{i}"));
    }
    let edges = rng.gen_range(nodes..=3 * nodes);
    let mut set = BTreeSet::new();
    for _ in 0..edges {
        set.insert((rng.gen_range(0..nodes), rng.gen_range(0..2), rng.gen_range(0..nodes)));
    }
    for (m, l, n) in set {
        gb.edge(&format!("v{m}"), ["a", "b"][l], &format!("v{n}"));
    }
    RandomInstance { grammar, graph: gb.build().expect("random names are distinct") }
}
