//! Exit criteria, one PASS/FAIL line each. Runs without the libtest harness
//! so the lines come out in order; exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cfpq::annotated::{build_annotated, AnnotatedBody, AnnotatedGrammar};
use cfpq::bench::{self, Test};
use cfpq::cost::Cost;
use cfpq::grammar::{load_grammar, Grammar, NtId};
use cfpq::graph::{gen_cycle, gen_double_cycle, gen_social_network, Graph, NodeId};
use cfpq::oracle;
use cfpq::recognizer::{eval_relational, AnnotatedSymbol};
use cfpq::shortest::{check_minimizing, minimize, MinimizingSet};
use cfpq::singlepath::{minimize_annotated, shortest_path, AnnotatedMinimizingSet};
use cfpq::verify::{check_set, VerifyConfig};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

const MATCHED: &str = "q -> a qq | a b\nqq -> q b\na -> \"s1\"\nb -> \"s2\"\n";

fn grammar(text: &str) -> Grammar {
    load_grammar(text).expect("fixture grammar").grammar
}

fn doubling_chain(levels: u32, self_loop: bool) -> Grammar {
    let mut text = String::from(if self_loop { "a0 -> \"s\" | a0 a0\n" } else { "a0 -> \"s\"\n" });
    for j in 1..levels {
        text.push_str(&format!("a{j} -> a{} a{}\n", j - 1, j - 1));
    }
    grammar(&text)
}

/// Every minimizer run in this suite is recorded here for the invariant check.
#[derive(Default)]
struct Runs {
    plain: usize,
    annotated: usize,
    built: usize,
    problems: Vec<String>,
}

impl Runs {
    fn plain(&mut self, g: &Grammar, ms: &MinimizingSet, label: &str) {
        self.plain += 1;
        if !ms.stats().holds() {
            self.problems.push(format!("{label}: queue {:?}", ms.stats()));
        }
        if let Some(v) = check_minimizing(g, ms).first() {
            self.problems.push(format!("{label}: {}", v.describe(g)));
        }
    }

    fn annotated(&mut self, ms: &AnnotatedMinimizingSet<'_>, label: &str) {
        self.annotated += 1;
        if !ms.stats().holds() {
            self.problems.push(format!("{label}: queue {:?}", ms.stats()));
        }
        if let Some(s) = ms.equation_violations().first() {
            self.problems.push(format!("{label}: cost equation broken at {}", s.display(ms.grammar(), ms.graph())));
        }
    }

    fn built(&mut self, ag: &AnnotatedGrammar<'_>, label: &str) {
        self.built += 1;
        if !ag.within_size_bounds() {
            self.problems.push(format!("{label}: annotated grammar exceeds size bounds"));
        }
    }
}

fn worked_example(runs: &mut Runs) -> Outcome {
    let started = Instant::now();
    let g = grammar("q -> \"friendOf\" | q q");
    let graph = gen_social_network();
    let pairs: Vec<(String, String)> = eval_relational(&g, "q", &graph)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(m, n)| (graph.node_name(m).to_string(), graph.node_name(n).to_string()))
        .collect();
    let expected: Vec<(String, String)> = [
        ("Alice", "Bob"),
        ("Alice", "Craig"),
        ("Alice", "Dan"),
        ("Alice", "Eve"),
        ("Bob", "Dan"),
        ("Bob", "Eve"),
        ("Craig", "Eve"),
        ("Dan", "Eve"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    ensure(pairs == expected, || format!("pairs {pairs:?}"))?;

    let ag = build_annotated(&g, &graph);
    runs.built(&ag, "social");
    let show = |s: AnnotatedSymbol| s.display(&g, &graph);
    let mut rules: Vec<String> = ag
        .materialize()
        .iter()
        .map(|r| match r.body {
            AnnotatedBody::Terminal(t) => format!("{} -> {}", show(r.head), g.term_name(t)),
            AnnotatedBody::Pair(x, y) => format!("{} -> {} {}", show(r.head), show(x), show(y)),
        })
        .collect();
    rules.sort();
    let mut listed: Vec<String> = [
        "<q,Alice,Bob> -> friendOf",
        "<q,Alice,Craig> -> friendOf",
        "<q,Bob,Dan> -> friendOf",
        "<q,Craig,Eve> -> friendOf",
        "<q,Dan,Eve> -> friendOf",
        "<q,Alice,Dan> -> <q,Alice,Bob> <q,Bob,Dan>",
        "<q,Alice,Eve> -> <q,Alice,Bob> <q,Bob,Eve>",
        "<q,Alice,Eve> -> <q,Alice,Craig> <q,Craig,Eve>",
        "<q,Alice,Eve> -> <q,Alice,Dan> <q,Dan,Eve>",
        "<q,Bob,Eve> -> <q,Bob,Dan> <q,Dan,Eve>",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    listed.sort();
    ensure(rules == listed, || format!("annotated rules {rules:?}"))?;
    let counts = ag.rule_counts();
    ensure(counts.terminal == 5 && counts.binary == 5, || format!("{counts:?}"))?;

    let ms = minimize_annotated(&g, &graph);
    runs.annotated(&ms, "social");
    let p = shortest_path(&g, "q", &graph, "Alice", "Eve").map_err(|e| e.to_string())?;
    let shown = p.display(&graph).to_string();
    ensure(shown == "Alice -[friendOf]-> Craig -[friendOf]-> Eve", || format!("shortest {shown}"))?;
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!("8 pairs, 5+5 annotated rules, {shown} ({took:?})"))
}

fn chain_family(runs: &mut Runs) -> Outcome {
    let started = Instant::now();
    for levels in 1..=10u32 {
        let g = doubling_chain(levels, false);
        let ms = minimize(&g);
        runs.plain(&g, &ms, &format!("chain {levels}"));
        let max = ms.max_cost();
        let sum = ms.total_cost();
        ensure(max == Some(Cost::pow2(levels - 1)), || format!("|N|={levels}: max {max:?}"))?;
        ensure(sum == (1u64 << levels) - 1, || format!("|N|={levels}: sum {sum}"))?;
    }
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!("|N| = 1..10 ({took:?})"))
}

fn cycle_family(runs: &mut Runs) -> Outcome {
    let started = Instant::now();
    let mut wrong = Vec::new();
    for nodes in [2usize, 3, 5, 8] {
        let graph = gen_cycle(nodes, "s").map_err(|e| e.to_string())?;
        for levels in [2u32, 3, 4] {
            let g = doubling_chain(levels, true);
            let ms = minimize_annotated(&g, &graph);
            runs.annotated(&ms, &format!("cycle {nodes} chain {levels}"));
            let top = NtId(levels - 1);
            let s = AnnotatedSymbol::new(top, NodeId(0), NodeId(0));
            let expected = nodes as u64 * (1 << (levels - 1));
            let cost = ms.cost(s).and_then(Cost::to_u64);
            let brute = oracle::brute_min_path(&g, top, &graph, NodeId(0), NodeId(0), 40);
            let agrees = brute.map_or(expected > 40, |b| b as u64 == expected);
            if cost != Some(expected) || !agrees {
                let engine = cost.map_or("none".into(), |c| c.to_string());
                let brute = brute.map_or("none within 40".into(), |b| b.to_string());
                wrong.push(format!("|V|={nodes} |N|={levels}: want {expected}, engine {engine}, brute force {brute}"));
            }
        }
    }
    within(Duration::from_secs(5), started)?;
    if wrong.is_empty() {
        Ok("12 instances".into())
    } else {
        Err(wrong.join("; "))
    }
}

fn double_cycles(runs: &mut Runs) -> Outcome {
    let started = Instant::now();
    let g = grammar(MATCHED);
    let q = g.nonterminal("q").unwrap();
    for (u, v) in [(2usize, 1usize), (3, 2), (4, 3), (5, 4)] {
        let graph = gen_double_cycle(u, v, "s1", "s2").map_err(|e| e.to_string())?;
        let ms = minimize_annotated(&g, &graph);
        runs.annotated(&ms, &format!("double cycle {u},{v}"));
        let p = shortest_path(&g, "q", &graph, "c", "c").map_err(|e| e.to_string())?;
        ensure(p.len() == 2 * u * v, || format!("({u},{v}): length {}", p.len()))?;
        let c = graph.node("c").unwrap();
        let brute = oracle::brute_min_path(&g, q, &graph, c, c, 2 * u * v + 2);
        ensure(brute == Some(2 * u * v), || format!("({u},{v}): brute force {brute:?}"))?;
    }
    // one doubling level on top: b1 -> q q on (3, 2)
    let extended = grammar(&format!("{MATCHED}b1 -> q q\n"));
    let graph = gen_double_cycle(3, 2, "s1", "s2").unwrap();
    let ms = minimize_annotated(&extended, &graph);
    runs.annotated(&ms, "double cycle 3,2 with b1");
    let b1 = extended.nonterminal("b1").unwrap();
    let c = graph.node("c").unwrap();
    let cost = ms.cost(AnnotatedSymbol::new(b1, c, c)).and_then(Cost::to_u64);
    let brute = oracle::brute_min_path(&extended, b1, &graph, c, c, 26);
    ensure(cost == Some(24) && brute == Some(24), || format!("b1 on (3,2): engine {cost:?}, brute {brute:?}"))?;
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!("2uv on 4 pairs, b1 = 24 on (3,2) ({took:?})"))
}

fn oracle_sweep(runs: &mut Runs) -> Outcome {
    let started = Instant::now();
    let config = VerifyConfig { bound: 12, max_len: 512, corrupt_cost: false };
    let mut triples = 0;
    for seed in 0..50u64 {
        let inst = oracle::random_instance(seed, 4, 10, 6);
        let ag = build_annotated(&inst.grammar, &inst.graph);
        runs.built(&ag, &format!("seed {seed}"));
        let ms = minimize_annotated(&inst.grammar, &inst.graph);
        runs.annotated(&ms, &format!("seed {seed}"));
        let (plain, _) = ag.to_plain_grammar();
        runs.plain(&plain, &minimize(&plain), &format!("seed {seed} explicit"));
        let report = check_set(&inst.grammar, &inst.graph, &ms, &config).map_err(|c| format!("seed {seed}: {c}"))?;
        ensure(report.conclusive, || format!("seed {seed}: closure oracle did not converge"))?;
        triples += report.triples;
    }
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!("50 instances, {triples} triples, 0 mismatches ({took:?})"))
}

fn desk_scale_bench(runs: &mut Runs) -> Outcome {
    let started = Instant::now();
    let graph = Test::DoubleCycle.graph(250).map_err(|e| e.to_string())?;
    let record = bench::measure(Test::DoubleCycle, bench::MATCHED, &graph);
    let took = within(Duration::from_secs(10), started)?;
    runs.annotated(&minimize_annotated(&bench::MATCHED.grammar(), &graph), "bench 3 250");
    ensure(record.longest == 31500, || format!("longest {}", record.longest))?;
    ensure(record.query_max == 31500, || format!("query max {}", record.query_max))?;
    Ok(format!(
        "longest 31500 edges, minimize {} ms + derive {} ms ({took:?})",
        record.minimize_ns / 1_000_000,
        record.produce_ns / 1_000_000
    ))
}

fn projected(ms: &AnnotatedMinimizingSet<'_>, a: NtId) -> Vec<(NodeId, NodeId, Cost)> {
    let mut v: Vec<_> =
        ms.iter().filter(|(s, _)| s.nonterminal == a).map(|(s, c)| (s.source, s.target, c.clone())).collect();
    v.sort();
    v
}

fn timed(g: &Grammar, graph: &Graph, runs: &mut Runs, label: &str) -> (Duration, Vec<(NodeId, NodeId, Cost)>) {
    let mut best = Duration::MAX;
    let mut costs = Vec::new();
    for _ in 0..3 {
        let started = Instant::now();
        let ms = minimize_annotated(g, graph);
        best = best.min(started.elapsed());
        runs.annotated(&ms, label);
        costs = projected(&ms, NtId(0));
    }
    (best, costs)
}

fn linear_beats_ambiguous(runs: &mut Runs) -> Outcome {
    let graph = gen_cycle(375, "s").map_err(|e| e.to_string())?;
    let q1 = bench::LINEAR.grammar();
    let q2 = bench::AMBIGUOUS.grammar();
    ensure(q1.nonterminal("q1") == Some(NtId(0)) && q2.nonterminal("q2") == Some(NtId(0)), || "preset order".into())?;
    let (t1, c1) = timed(&q1, &graph, runs, "q1 on 375");
    let (t2, c2) = timed(&q2, &graph, runs, "q2 on 375");
    ensure(c1 == c2, || "q1 and q2 cost maps differ".into())?;
    ensure(t1 < t2, || format!("q1 {t1:?} not faster than q2 {t2:?}"))?;
    Ok(format!("size 375: q1 {t1:?} < q2 {t2:?}, identical cost maps"))
}

fn invariants(runs: &mut Runs) -> Outcome {
    let g = grammar("q -> \"friendOf\" | q q");
    let graph = gen_social_network();
    let (plain, _) = build_annotated(&g, &graph).to_plain_grammar();
    runs.plain(&plain, &minimize(&plain), "social explicit");
    for (u, v) in [(2, 1), (3, 2)] {
        let graph = gen_double_cycle(u, v, "s1", "s2").unwrap();
        let g = grammar(MATCHED);
        runs.built(&build_annotated(&g, &graph), &format!("double cycle {u},{v}"));
    }
    if runs.problems.is_empty() {
        Ok(format!("{} plain runs, {} annotated runs, {} annotated grammars", runs.plain, runs.annotated, runs.built))
    } else {
        Err(runs.problems.join("; "))
    }
}

fn main() -> ExitCode {
    let mut runs = Runs::default();
    let criteria: [(&str, fn(&mut Runs) -> Outcome); 8] = [
        ("worked example on the social network", worked_example),
        ("doubling chain string lengths", chain_family),
        ("doubling chain on cycles", cycle_family),
        ("double-cycle optimality", double_cycles),
        ("oracle equivalence sweep", oracle_sweep),
        ("double-cycle bench at size 250", desk_scale_bench),
        ("linear closure grammar beats ambiguous one", linear_beats_ambiguous),
        ("queue, cost-equation and size invariants", invariants),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run(&mut runs) {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
