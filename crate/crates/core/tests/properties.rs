use std::collections::{HashMap, HashSet};

use proptest::prelude::*;

use cfpq::annotated::build_annotated;
use cfpq::cost::Cost;
use cfpq::grammar::{load_grammar, parse_grammar, Grammar, NtId, RawGrammar, RawSymbol};
use cfpq::graph::{gen_cycle, gen_double_cycle, gen_social_network, load_graph, NodeId, Path};
use cfpq::oracle::{self, random_instance};
use cfpq::recognizer::{eval_relational, recognize, AnnotatedSymbol};
use cfpq::shortest::{check_minimizing, derive_min_string, minimize};
use cfpq::singlepath::minimize_annotated;
use cfpq::verify::{check_set, VerifyConfig};

/// Strings of length at most `max` in the language of each nonterminal,
/// computed by iterating rule concatenation to a fixpoint.
fn bounded_language(raw: &RawGrammar, max: usize) -> HashMap<String, HashSet<Vec<String>>> {
    let mut lang: HashMap<String, HashSet<Vec<String>>> =
        raw.nonterminals.iter().map(|n| (n.clone(), HashSet::new())).collect();
    loop {
        let mut changed = false;
        for rule in &raw.rules {
            let mut partial: HashSet<Vec<String>> = HashSet::from([Vec::new()]);
            for sym in &rule.body {
                let mut next = HashSet::new();
                for w in &partial {
                    match sym {
                        RawSymbol::Terminal(t) => {
                            if w.len() < max {
                                let mut x = w.clone();
                                x.push(t.clone());
                                next.insert(x);
                            }
                        }
                        RawSymbol::Nonterminal(n) => {
                            for tail in &lang[n] {
                                if w.len() + tail.len() <= max {
                                    let mut x = w.clone();
                                    x.extend(tail.iter().cloned());
                                    next.insert(x);
                                }
                            }
                        }
                    }
                }
                partial = next;
            }
            let set = lang.get_mut(&rule.head).unwrap();
            for w in partial {
                changed |= set.insert(w);
            }
        }
        if !changed {
            return lang;
        }
    }
}

fn words(alphabet: &[&str], max: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            for t in alphabet {
                let mut x: Vec<String> = w.clone();
                x.push(t.to_string());
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn raw_grammar_text() -> impl Strategy<Value = String> {
    let symbol = prop_oneof![
        Just("A".to_string()),
        Just("B".to_string()),
        Just("C".to_string()),
        Just("\"a\"".to_string()),
        Just("\"b\"".to_string()),
    ];
    let rule = (0..3usize, prop::collection::vec(symbol, 0..4));
    prop::collection::vec(rule, 1..7).prop_map(|rules| {
        let mut text = String::new();
        for (head, body) in rules {
            let head = ["A", "B", "C"][head];
            if body.is_empty() {
                text.push_str(&format!("{head} -> ε\n"));
            } else {
                text.push_str(&format!("{head} -> {}\n", body.join(" ")));
            }
        }
        text
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_preserves_nonempty_strings(text in raw_grammar_text()) {
        let raw = parse_grammar(&text).unwrap();
        let lang = bounded_language(&raw, 5);
        let normalized = load_grammar(&text).unwrap();
        let g = &normalized.grammar;
        for name in &raw.nonterminals {
            for w in words(&["a", "b"], 5).into_iter().filter(|w| !w.is_empty()) {
                let refs: Vec<&str> = w.iter().map(String::as_str).collect();
                let member = g.nonterminal(name).is_some() && g.cyk_member(name, &refs).unwrap();
                prop_assert_eq!(member, lang[name].contains(&w), "{} on {:?}\n{}", name, w, text);
            }
            let nullable = lang[name].contains(&Vec::new());
            prop_assert_eq!(nullable, normalized.diagnostics.nullable.contains(name));
        }
    }

    #[test]
    fn normalization_is_deterministic(text in raw_grammar_text()) {
        let x = load_grammar(&text).unwrap().grammar.to_string();
        let y = load_grammar(&text).unwrap().grammar.to_string();
        prop_assert_eq!(&x, &y);
        // the serialized grammar is already in normal form
        let again = load_grammar(&x).unwrap().grammar.to_string();
        prop_assert_eq!(x, again);
    }
}

#[test]
fn recognizer_matches_closure_oracle() {
    let mut conclusive = 0;
    for seed in 0..120 {
        let inst = random_instance(seed, 4, 10, 6);
        let reach = recognize(&inst.grammar, &inst.graph);
        let found: Vec<(NtId, NodeId, NodeId)> =
            reach.iter().map(|s| (s.nonterminal, s.source, s.target)).collect();
        if let Some(exact) = oracle::exact_min_lengths(&inst.grammar, &inst.graph, 512) {
            conclusive += 1;
            let expected: Vec<_> = exact.iter().map(|&(t, _)| t).collect();
            assert_eq!(found, expected, "seed {seed}");
        }
        for ((a, m, n), _) in oracle::bounded_triples(&inst.grammar, &inst.graph, 6) {
            assert!(reach.contains(a, m, n), "seed {seed}");
        }
    }
    assert_eq!(conclusive, 120);
}

#[test]
fn minimize_matches_brute_force_strings() {
    for seed in 0..150 {
        let g = random_instance(seed, 4, 10, 1).grammar;
        let ms = minimize(&g);
        assert!(ms.stats().holds(), "seed {seed}: {:?}", ms.stats());
        assert!(check_minimizing(&g, &ms).is_empty(), "seed {seed}");
        let nts = g.nonterminal_count() as u32;
        let bound = 1usize << (nts - 1);
        for a in g.nonterminals() {
            let brute = oracle::brute_min_string(&g, a, bound);
            assert_eq!(ms.cost(a).map(|c| c.to_u64().unwrap() as usize), brute, "seed {seed} {}", g.nt_name(a));
            if ms.contains(a) {
                let w = derive_min_string(&g, &ms, a).unwrap();
                assert_eq!(Cost::from(w.len() as u64), *ms.cost(a).unwrap());
                assert!(oracle::derivers(&g, &w)[a.index()]);
            }
        }
        assert!(ms.max_cost().map_or(true, |m| m <= Cost::pow2(nts - 1)));
        assert!(ms.total_cost() <= Cost::from((1u64 << nts) - 1));
    }
}

#[test]
fn doubling_chains_reach_the_string_bound() {
    for levels in 1..=12u32 {
        let mut text = String::from("a0 -> \"s\"\n");
        for j in 1..levels {
            text.push_str(&format!("a{j} -> a{} a{}\n", j - 1, j - 1));
        }
        let g = load_grammar(&text).unwrap().grammar;
        let ms = minimize(&g);
        assert_eq!(ms.max_cost(), Some(Cost::pow2(levels - 1)));
        assert_eq!(ms.total_cost(), Cost::from((1u64 << levels) - 1));
        if levels <= 5 {
            let top = g.nonterminal(&format!("a{}", levels - 1)).unwrap();
            assert_eq!(oracle::brute_min_string(&g, top, 1 << (levels - 1)), Some(1 << (levels - 1)));
        }
    }
}

#[test]
fn in_place_minimization_matches_every_oracle() {
    for seed in 1000..1060 {
        let inst = random_instance(seed, 4, 10, 6);
        let ms = minimize_annotated(&inst.grammar, &inst.graph);
        let config = VerifyConfig { bound: 10, max_len: 512, corrupt_cost: false };
        let report = check_set(&inst.grammar, &inst.graph, &ms, &config).unwrap_or_else(|c| panic!("seed {seed}: {c}"));
        assert!(report.conclusive);
    }
}

#[test]
fn annotated_grammars_respect_size_bounds_and_naive_length_bound() {
    for seed in 0..80 {
        let inst = random_instance(seed, 3, 8, 3);
        let ag = build_annotated(&inst.grammar, &inst.graph);
        assert!(ag.within_size_bounds(), "seed {seed}");
        let exponent = (inst.grammar.nonterminal_count() * inst.graph.node_count().pow(2)) as u32 - 1;
        let ms = minimize_annotated(&inst.grammar, &inst.graph);
        for (_, c) in ms.iter() {
            assert!(*c <= Cost::pow2(exponent));
        }
    }
}

#[test]
fn enumeration_matches_filtered_path_listing() {
    let mut checked = 0;
    for seed in 0..60 {
        let inst = random_instance(seed, 3, 8, 4);
        let (g, graph) = (&inst.grammar, &inst.graph);
        let ag = build_annotated(g, graph);
        let ms = minimize_annotated(g, graph);
        let terms: Vec<_> = (0..graph.label_count() as u32)
            .map(|l| g.terminal(graph.label_name(cfpq::graph::LabelId(l))))
            .collect();
        for s in ag.symbols().take(6) {
            let got: Vec<Path> = ag.enumerate_paths(s, 10_000, 5).unwrap().collect();
            let mut expected: Vec<Path> = oracle::enum_paths(graph, s.source, 5)
                .into_iter()
                .filter(|p| !p.is_empty() && p.target() == s.target)
                .filter(|p| {
                    let w: Option<Vec<_>> = p.labels.iter().map(|l| terms[l.index()]).collect();
                    w.map_or(false, |w| oracle::derivers(g, &w)[s.nonterminal.index()])
                })
                .collect();
            expected.sort_by(|x, y| x.len().cmp(&y.len()).then(x.nodes.cmp(&y.nodes)).then(x.labels.cmp(&y.labels)));
            assert_eq!(got, expected, "seed {seed} {}", s.display(g, graph));
            let shortest = ms.cost(s).unwrap().to_u64().unwrap() as usize;
            assert_eq!(ag.enumerate_paths(s, 10, shortest - 1).unwrap().count(), 0);
            for p in &got {
                assert!(graph.validate_path(p));
                assert!(ag.derive_specific_path(s, p).is_ok());
            }
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn doubling_chain_on_cycles_needs_a_multiple_of_the_cycle() {
    for nodes in [2usize, 3, 5] {
        let graph = gen_cycle(nodes, "s").unwrap();
        for levels in 2..=4u32 {
            let mut text = String::from("a0 -> \"s\" | a0 a0\n");
            for j in 1..levels {
                text.push_str(&format!("a{j} -> a{} a{}\n", j - 1, j - 1));
            }
            let g = load_grammar(&text).unwrap().grammar;
            let top = g.nonterminal(&format!("a{}", levels - 1)).unwrap();
            let s = AnnotatedSymbol::new(top, NodeId(0), NodeId(0));
            let ms = minimize_annotated(&g, &graph);
            assert!(ms.stats().holds());
            let cost = ms.cost(s).unwrap().to_u64().unwrap() as usize;
            let words = 1usize << (levels - 1);
            assert_eq!(cost, words.div_ceil(nodes) * nodes, "{nodes} nodes, {levels} levels");
            assert_eq!(oracle::brute_min_path(&g, top, &graph, NodeId(0), NodeId(0), 40), Some(cost));
        }
    }
}

#[test]
fn double_cycle_paths_wrap_both_cycles() {
    let g = load_grammar("q -> a qq | a b\nqq -> q b\na -> \"s1\"\nb -> \"s2\"").unwrap().grammar;
    for (u, v) in [(2, 1), (3, 2), (4, 3)] {
        let graph = gen_double_cycle(u, v, "s1", "s2").unwrap();
        let c = graph.node("c").unwrap();
        let p = cfpq::singlepath::shortest_path(&g, "q", &graph, "c", "c").unwrap();
        assert_eq!(p.len(), 2 * u * v);
        let trace = p.trace_names(&graph);
        let (half, rest) = trace.split_at(u * v);
        assert!(half.iter().all(|&l| l == "s1") && rest.iter().all(|&l| l == "s2"));
        assert_eq!(oracle::brute_min_path(&g, NtId(0), &graph, c, c, 2 * u * v + 2), Some(2 * u * v));
    }
}

#[test]
fn generated_graphs_survive_serialization() {
    let g = load_grammar("q -> \"friendOf\" | q q").unwrap().grammar;
    let social = gen_social_network();
    let reloaded = load_graph(&social.to_tsv()).unwrap();
    assert_eq!(reloaded.to_tsv(), social.to_tsv());
    assert_eq!(eval_relational(&g, "q", &social).unwrap(), eval_relational(&g, "q", &reloaded).unwrap());
    let cycle = gen_double_cycle(5, 4, "s1", "s2").unwrap();
    assert_eq!(load_graph(&cycle.to_tsv()).unwrap().to_tsv(), cycle.to_tsv());
}

#[test]
fn cost_maps_ignore_grammar_ambiguity() {
    let linear = load_grammar("q1 -> a q1 | \"s\"\na -> \"s\"").unwrap().grammar;
    let ambiguous = load_grammar("q2 -> q2 q2 | \"s\"").unwrap().grammar;
    let graph = gen_cycle(17, "s").unwrap();
    let x = minimize_annotated(&linear, &graph);
    let y = minimize_annotated(&ambiguous, &graph);
    let project = |g: &Grammar, ms: &cfpq::singlepath::AnnotatedMinimizingSet<'_>, name: &str| {
        let a = g.nonterminal(name).unwrap();
        let mut v: Vec<_> = ms.iter().filter(|(s, _)| s.nonterminal == a).map(|(s, c)| (s.source, s.target, c.clone())).collect();
        v.sort();
        v
    };
    assert_eq!(project(&linear, &x, "q1"), project(&ambiguous, &y, "q2"));
}
