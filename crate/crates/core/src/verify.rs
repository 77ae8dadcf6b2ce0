//! Cross-checks the engine against the brute-force oracles on one instance.

use std::fmt;

use crate::annotated::build_annotated;
use crate::cost::Cost;
use crate::grammar::Grammar;
use crate::graph::Graph;
use crate::oracle::{bounded_triples, exact_min_lengths};
use crate::recognizer::{recognize, AnnotatedSymbol};
use crate::shortest::{check_minimizing, minimize};
use crate::singlepath::{minimize_annotated, AnnotatedMinimizingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Path length searched by the trace enumeration.
    pub bound: usize,
    /// Longest exact-length level built before the closure oracle gives up.
    pub max_len: usize,
    /// Raises one recorded cost by one before checking.
    pub corrupt_cost: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { bound: 8, max_len: 256, corrupt_cost: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample(pub String);

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Counterexample {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub triples: usize,
    pub paths_checked: usize,
    /// The exact-length oracle reached its fixpoint, so absence was checked too.
    pub conclusive: bool,
}

/// Runs every check and returns the first disagreement.
pub fn verify(g: &Grammar, graph: &Graph, config: &VerifyConfig) -> Result<VerifyReport, Counterexample> {
    let mut ms = minimize_annotated(g, graph);
    if config.corrupt_cost {
        let first = ms.iter().next().map(|(s, c)| (s, c.clone()));
        if let Some((s, c)) = first {
            ms.corrupt_cost(s, &c + &Cost::ONE);
        }
    }
    check_set(g, graph, &ms, config)
}

pub fn check_set(
    g: &Grammar,
    graph: &Graph,
    ms: &AnnotatedMinimizingSet<'_>,
    config: &VerifyConfig,
) -> Result<VerifyReport, Counterexample> {
    let show = |s: AnnotatedSymbol| s.display(g, graph);
    let fail = |msg: String| Err(Counterexample(msg));
    if !ms.stats().holds() {
        return fail(format!("queue discipline violated: {:?}", ms.stats()));
    }
    if let Some(&s) = ms.equation_violations().first() {
        return fail(format!("{}: chosen rule breaks the cost equation", show(s)));
    }
    let reach = recognize(g, graph);
    let costed: Vec<AnnotatedSymbol> = ms.iter().map(|(s, _)| s).collect();
    let listed: Vec<AnnotatedSymbol> = reach.iter().collect();
    let mut sorted = costed.clone();
    sorted.sort_unstable();
    if sorted != listed {
        let missing = listed.iter().find(|s| !ms.contains(**s)).or_else(|| sorted.iter().find(|s| !reach.contains_symbol(**s)));
        return fail(format!("recognizer and minimizer disagree on {}", missing.map_or("?".into(), |s| show(*s))));
    }

    for ((a, m, n), len) in bounded_triples(g, graph, config.bound) {
        let s = AnnotatedSymbol::new(a, m, n);
        if !reach.contains_symbol(s) {
            return fail(format!("{} has a witness of length {len} but was not derived", show(s)));
        }
        if ms.cost(s).map_or(true, |c| *c > Cost::from(len as u64)) {
            return fail(format!("{} has a witness of length {len} but cost {}", show(s), ms.cost(s).unwrap()));
        }
    }

    let exact = exact_min_lengths(g, graph, config.max_len);
    if let Some(exact) = &exact {
        if exact.len() != costed.len() {
            return fail(format!("closure oracle finds {} triples, engine {}", exact.len(), costed.len()));
        }
        for &((a, m, n), len) in exact {
            let s = AnnotatedSymbol::new(a, m, n);
            match ms.cost(s) {
                Some(c) if *c == len as u64 => {}
                Some(c) => return fail(format!("{} has cost {c}, shortest witness {len}", show(s))),
                None => return fail(format!("{} has a witness of length {len} but no cost", show(s))),
            }
        }
    }

    let ag = build_annotated(g, graph);
    if !ag.within_size_bounds() {
        return fail("annotated grammar exceeds its size bounds".into());
    }
    let (plain, symbols) = ag.to_plain_grammar();
    let explicit = minimize(&plain);
    if !explicit.stats().holds() {
        return fail(format!("queue discipline violated on the explicit grammar: {:?}", explicit.stats()));
    }
    if let Some(v) = check_minimizing(&plain, &explicit).first() {
        return fail(v.describe(&plain));
    }
    for (i, &s) in symbols.iter().enumerate() {
        let here = explicit.cost(crate::grammar::NtId(i as u32));
        if here != ms.cost(s) {
            return fail(format!("{}: explicit grammar cost {:?}, in-place cost {:?}", show(s), here, ms.cost(s)));
        }
    }

    let mut paths_checked = 0;
    for &s in &costed {
        let p = ms.path(s).map_err(|e| Counterexample(format!("{}: {e}", show(s))))?;
        if !graph.validate_path(&p) || p.source() != s.source || p.target() != s.target {
            return fail(format!("{}: extracted path is not a path of the graph", show(s)));
        }
        let word: Option<Vec<_>> = p.trace_names(graph).iter().map(|l| g.terminal(l)).collect();
        if !word.map_or(false, |w| g.accepts(s.nonterminal, &w)) {
            return fail(format!("{}: trace of {} is not in the language", show(s), p.display(graph)));
        }
        if ms.cost(s).map_or(true, |c| *c != p.len() as u64) {
            return fail(format!("{}: path length {} differs from its cost", show(s), p.len()));
        }
        paths_checked += 1;
    }

    Ok(VerifyReport { triples: costed.len(), paths_checked, conclusive: exact.is_some() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;
    use crate::graph::gen_social_network;

    #[test]
    fn social_network_verifies() {
        let g = load_grammar("q -> \"friendOf\" | q q").unwrap().grammar;
        let report = verify(&g, &gen_social_network(), &VerifyConfig::default()).unwrap();
        assert_eq!(report, VerifyReport { triples: 8, paths_checked: 8, conclusive: true });
    }

    #[test]
    fn corrupted_cost_is_caught() {
        let g = load_grammar("q -> \"friendOf\" | q q").unwrap().grammar;
        let config = VerifyConfig { corrupt_cost: true, ..VerifyConfig::default() };
        assert!(verify(&g, &gen_social_network(), &config).is_err());
    }

    #[test]
    fn empty_graph_verifies() {
        let g = load_grammar("q -> \"friendOf\" | q q").unwrap().grammar;
        let report = verify(&g, &Graph::default(), &VerifyConfig::default()).unwrap();
        assert_eq!(report.triples, 0);
    }
}
