//! Scaling experiments on generated graphs.
//!
//! Test 1 compares a linear and an ambiguous transitive-closure grammar on
//! cycles, test 2 compares the linear one with the finite language `{sss}`
//! on cycles, and test 3 derives the longest minimum-length path of the
//! `s1ᵏ s2ᵏ` grammar on double cycles.

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::cost::Cost;
use crate::grammar::{load_grammar, Grammar, NtId};
use crate::graph::{gen_cycle, gen_double_cycle, Graph};
use crate::recognizer::AnnotatedSymbol;
use crate::singlepath::{minimize_annotated, AnnotatedMinimizingSet};

/// A named grammar shipped with the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub query: &'static str,
    pub source: &'static str,
}

pub const LINEAR: Preset = Preset { name: "q1", query: "q1", source: "q1 -> a q1 | \"s\"\na -> \"s\"\n" };
pub const AMBIGUOUS: Preset = Preset { name: "q2", query: "q2", source: "q2 -> q2 q2 | \"s\"\n" };
pub const FINITE: Preset = Preset { name: "sss", query: "p", source: "p -> a t\nt -> a a\na -> \"s\"\n" };
pub const MATCHED: Preset = Preset {
    name: "matched",
    query: "q",
    source: "q -> a qq | a b\nqq -> q b\na -> \"s1\"\nb -> \"s2\"\n",
};

pub const PRESETS: [Preset; 4] = [LINEAR, AMBIGUOUS, FINITE, MATCHED];

impl Preset {
    pub fn by_name(name: &str) -> Option<Preset> {
        PRESETS.into_iter().find(|p| p.name == name)
    }

    pub fn grammar(&self) -> Grammar {
        load_grammar(self.source).expect("presets are valid").grammar
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("unknown test `{0}`, expected 1, 2 or 3")]
    UnknownTest(String),
    #[error("graph size must be at least {min}, got {size}")]
    TooSmall { size: usize, min: usize },
    #[error("double-cycle size must be even (u + v - 1 with v = u - 1), got {0}")]
    OddSize(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Test {
    TransitiveClosure,
    SparseResult,
    DoubleCycle,
}

impl Test {
    pub fn parse(s: &str) -> Result<Test, BenchError> {
        match s {
            "1" => Ok(Test::TransitiveClosure),
            "2" => Ok(Test::SparseResult),
            "3" => Ok(Test::DoubleCycle),
            _ => Err(BenchError::UnknownTest(s.to_string())),
        }
    }

    pub fn id(&self) -> u8 {
        match self {
            Test::TransitiveClosure => 1,
            Test::SparseResult => 2,
            Test::DoubleCycle => 3,
        }
    }

    pub fn presets(&self) -> &'static [Preset] {
        match self {
            Test::TransitiveClosure => &[LINEAR, AMBIGUOUS],
            Test::SparseResult => &[LINEAR, FINITE],
            Test::DoubleCycle => &[MATCHED],
        }
    }

    pub fn graph(&self, size: usize) -> Result<Graph, BenchError> {
        match self {
            Test::TransitiveClosure | Test::SparseResult => {
                gen_cycle(size, "s").map_err(|_| BenchError::TooSmall { size, min: 1 })
            }
            Test::DoubleCycle => {
                let (u, v) = double_cycle_split(size)?;
                Ok(gen_double_cycle(u, v, "s1", "s2").expect("u, v >= 1"))
            }
        }
    }
}

/// Consecutive cycle lengths `(u, u - 1)` with `u + v - 1 = size`.
pub fn double_cycle_split(size: usize) -> Result<(usize, usize), BenchError> {
    if size < 2 {
        return Err(BenchError::TooSmall { size, min: 2 });
    }
    if size % 2 == 1 {
        return Err(BenchError::OddSize(size));
    }
    let u = size / 2 + 1;
    Ok((u, u - 1))
}

/// One `(query, size)` measurement.
///
/// `paths`, `max` and `output` cover every annotated nonterminal; the
/// `query_*` fields only those of the query nonterminal. `longest` is the
/// number of edges actually derived for the query's longest minimum-length
/// path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub test: u8,
    pub query: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub nonterminals: usize,
    pub paths: usize,
    pub max: Cost,
    pub output: Cost,
    pub query_paths: usize,
    pub query_max: Cost,
    pub query_output: Cost,
    pub longest: u64,
    pub minimize_ns: u128,
    pub produce_ns: u128,
}

pub const HEADER: &str = "test\tquery\tnodes\tedges\tnon-terminals\tpaths\tmax\toutput\tquery-paths\tquery-max\tquery-output\tlongest\tminimize-ns\tproduce-ns";

impl BenchRecord {
    pub fn to_tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.test,
            self.query,
            self.nodes,
            self.edges,
            self.nonterminals,
            self.paths,
            self.max,
            self.output,
            self.query_paths,
            self.query_max,
            self.query_output,
            self.longest,
            self.minimize_ns,
            self.produce_ns
        )
    }

    /// The record with its timings zeroed.
    pub fn without_times(&self) -> BenchRecord {
        BenchRecord { minimize_ns: 0, produce_ns: 0, ..self.clone() }
    }
}

pub fn to_tsv(records: &[BenchRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.to_tsv_row());
    }
    out
}

fn longest_for(ms: &AnnotatedMinimizingSet<'_>, a: NtId) -> Option<AnnotatedSymbol> {
    let mut best: Option<(AnnotatedSymbol, &Cost)> = None;
    for (s, c) in ms.iter() {
        if s.nonterminal == a && best.map_or(true, |(b, bc)| c > bc || (c == bc && s < b)) {
            best = Some((s, c));
        }
    }
    best.map(|(s, _)| s)
}

/// Runs one preset on one graph.
pub fn measure(test: Test, preset: Preset, graph: &Graph) -> BenchRecord {
    let g = preset.grammar();
    let query = g.nonterminal(preset.query).expect("preset query is defined");
    let started = Instant::now();
    let ms = minimize_annotated(&g, graph);
    let minimize_ns = started.elapsed().as_nanos();
    let all = ms.summary();
    let q = ms.summary_for(query);
    let started = Instant::now();
    let mut longest = 0u64;
    if let Some(s) = longest_for(&ms, query) {
        ms.for_each_edge(s, |_, _, _| longest += 1).expect("costed triple");
    }
    let produce_ns = started.elapsed().as_nanos();
    BenchRecord {
        test: test.id(),
        query: preset.name,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        nonterminals: g.nonterminal_count(),
        paths: all.domain,
        max: all.max,
        output: all.total,
        query_paths: q.domain,
        query_max: q.max,
        query_output: q.total,
        longest,
        minimize_ns,
        produce_ns,
    }
}

/// One record per preset of `test` and size, sizes outermost.
pub fn run_bench(test: Test, sizes: &[usize]) -> Result<Vec<BenchRecord>, BenchError> {
    let graphs = sizes.iter().map(|&s| test.graph(s)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for graph in &graphs {
        for &preset in test.presets() {
            out.push(measure(test, preset, graph));
        }
    }
    Ok(out)
}
