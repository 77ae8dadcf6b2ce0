use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cfpq::annotated::build_annotated;
use cfpq::bench::{self, Test};
use cfpq::grammar::{load_grammar, Body, Grammar, Normalized, NtId};
use cfpq::graph::{gen_cycle, gen_double_cycle, gen_social_network, load_graph, Graph, NodeId};
use cfpq::oracle;
use cfpq::recognizer::{recognize, AnnotatedSymbol};
use cfpq::shortest::minimize;
use cfpq::singlepath::{minimize_annotated, shortest_path_all_pairs, AnnotatedMinimizingSet};
use cfpq::verify::{verify, VerifyConfig};

#[derive(Parser)]
#[command(name = "cfpq", version, about = "Context-free path queries on edge-labelled graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query under one of the four semantics.
    Query(QueryArgs),
    /// Print a generated graph as TSV.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Reproduce the scaling experiments; prints one TSV row per (query, size).
    Bench {
        /// 1, 2 or 3
        test: String,
        #[arg(required = true)]
        sizes: Vec<usize>,
    },
    /// Check the engine against brute-force oracles on one instance.
    Verify {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short = 'd', long)]
        graph: PathBuf,
        /// Longest path explored by the trace enumeration.
        #[arg(long, default_value_t = 8)]
        bound: usize,
        /// Longest witness length the closure oracle builds before giving up.
        #[arg(long, default_value_t = 256)]
        max_len: usize,
        #[arg(long, hide = true)]
        corrupt_cost: bool,
    },
    /// Dump the minimizing set as TSV (annotated when a graph is given).
    Minimize {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short = 'd', long)]
        graph: Option<PathBuf>,
    },
    #[command(hide = true)]
    Oracle {
        #[command(subcommand)]
        kind: OracleKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    Boolean,
    Pairs,
    Allpaths,
    Shortest,
}

#[derive(clap::Args)]
struct QueryArgs {
    semantics: Semantics,
    #[arg(short, long)]
    grammar: PathBuf,
    /// Query nonterminal.
    #[arg(short, long)]
    start: String,
    #[arg(short = 'd', long)]
    graph: PathBuf,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long, default_value_t = 10)]
    max_paths: usize,
    #[arg(long, default_value_t = 64)]
    max_len: usize,
    /// shortest: one line `from, to, path` per pair of the relational answer.
    #[arg(long)]
    all_pairs: bool,
    /// shortest: print domain size, max cost and sum of costs instead of paths.
    #[arg(long)]
    stats: bool,
}

#[derive(Subcommand)]
enum GenKind {
    Cycle { nodes: usize, label: String },
    DoubleCycle { u: usize, v: usize, label1: String, label2: String },
    Social,
}

#[derive(Subcommand)]
enum OracleKind {
    MinPath {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        start: String,
        #[arg(short = 'd', long)]
        graph: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        bound: usize,
    },
    MinString {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        start: String,
        #[arg(long)]
        bound: usize,
    },
}

/// Exit status 1: the query is well formed but has no answer.
const NO_ANSWER: u8 = 1;

fn read(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn grammar_file(path: &FsPath) -> Result<Normalized> {
    load_grammar(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn graph_file(path: &FsPath) -> Result<Graph> {
    load_graph(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn node(graph: &Graph, name: &str) -> Result<NodeId> {
    graph.node(name).with_context(|| format!("unknown node `{name}`"))
}

fn endpoints(graph: &Graph, args: &QueryArgs) -> Result<(NodeId, NodeId)> {
    match (&args.from, &args.to) {
        (Some(m), Some(n)) => Ok((node(graph, m)?, node(graph, n)?)),
        _ => bail!("--from and --to are required"),
    }
}

fn query(args: &QueryArgs, out: &mut impl Write) -> Result<u8> {
    let normalized = grammar_file(&args.grammar)?;
    let a = normalized.query_nonterminal(&args.start)?;
    let g = &normalized.grammar;
    let graph = graph_file(&args.graph)?;
    match args.semantics {
        Semantics::Boolean => {
            writeln!(out, "{}", !recognize(g, &graph).pairs(a).is_empty())?;
        }
        Semantics::Pairs => {
            for (m, n) in recognize(g, &graph).pairs(a) {
                writeln!(out, "{}\t{}", graph.node_name(m), graph.node_name(n))?;
            }
        }
        Semantics::Allpaths => {
            let (m, n) = endpoints(&graph, args)?;
            let ag = build_annotated(g, &graph);
            let start = AnnotatedSymbol::new(a, m, n);
            if !ag.contains(start) {
                return Ok(NO_ANSWER);
            }
            for p in ag.enumerate_paths(start, args.max_paths, args.max_len)? {
                writeln!(out, "{}", p.display(&graph))?;
            }
        }
        Semantics::Shortest => {
            let ms = minimize_annotated(g, &graph);
            if args.stats {
                let s = ms.summary_for(a);
                writeln!(out, "domain\tmax\tsum")?;
                writeln!(out, "{}\t{}\t{}", s.domain, s.max, s.total)?;
            } else if args.all_pairs {
                for (m, n, p) in shortest_path_all_pairs(&ms, a) {
                    writeln!(out, "{}\t{}\t{}", graph.node_name(m), graph.node_name(n), p.display(&graph))?;
                }
            } else {
                let (m, n) = endpoints(&graph, args)?;
                let s = AnnotatedSymbol::new(a, m, n);
                if !ms.contains(s) {
                    return Ok(NO_ANSWER);
                }
                writeln!(out, "{}", ms.path(s)?.display(&graph))?;
            }
        }
    }
    Ok(0)
}

fn annotated_tsv(g: &Grammar, graph: &Graph, ms: &AnnotatedMinimizingSet<'_>, out: &mut impl Write) -> Result<()> {
    let mut rows: Vec<_> = ms.iter().collect();
    rows.sort_by_key(|(s, _)| *s);
    for (s, cost) in rows {
        let choice = ms.choice(s).expect("costed triples have a choice");
        let body = match g.rule(choice.rule).body {
            Body::Terminal(t) => format!("\"{}\"", g.term_name(t)),
            Body::Pair(b, c) => format!(
                "{} {}",
                AnnotatedSymbol::new(b, s.source, choice.mid).display(g, graph),
                AnnotatedSymbol::new(c, choice.mid, s.target).display(g, graph)
            ),
        };
        let head = s.display(g, graph);
        writeln!(out, "{head}\t{cost}\t{head} -> {body}")?;
    }
    Ok(())
}

fn run(cli: Cli, out: &mut impl Write) -> Result<u8> {
    match cli.command {
        Command::Query(args) => query(&args, out),
        Command::Gen { kind } => {
            let graph = match kind {
                GenKind::Cycle { nodes, label } => gen_cycle(nodes, &label)?,
                GenKind::DoubleCycle { u, v, label1, label2 } => gen_double_cycle(u, v, &label1, &label2)?,
                GenKind::Social => gen_social_network(),
            };
            out.write_all(graph.to_tsv().as_bytes())?;
            Ok(0)
        }
        Command::Bench { test, sizes } => {
            let test = Test::parse(&test)?;
            let rows = bench::run_bench(test, &sizes)?;
            out.write_all(bench::to_tsv(&rows).as_bytes())?;
            Ok(0)
        }
        Command::Verify { grammar, graph, bound, max_len, corrupt_cost } => {
            let g = grammar_file(&grammar)?.grammar;
            let graph = graph_file(&graph)?;
            match verify(&g, &graph, &VerifyConfig { bound, max_len, corrupt_cost }) {
                Ok(report) => {
                    writeln!(
                        out,
                        "ok\t{} triples\t{} paths\t{}",
                        report.triples,
                        report.paths_checked,
                        if report.conclusive { "conclusive" } else { "bounded" }
                    )?;
                    Ok(0)
                }
                Err(counterexample) => {
                    writeln!(out, "counterexample\t{counterexample}")?;
                    Ok(1)
                }
            }
        }
        Command::Minimize { grammar, graph } => {
            let g = grammar_file(&grammar)?.grammar;
            match graph {
                None => out.write_all(minimize(&g).to_tsv(&g).as_bytes())?,
                Some(path) => {
                    let graph = graph_file(&path)?;
                    annotated_tsv(&g, &graph, &minimize_annotated(&g, &graph), out)?;
                }
            }
            Ok(0)
        }
        Command::Oracle { kind } => {
            let found = match kind {
                OracleKind::MinPath { grammar, start, graph, from, to, bound } => {
                    let normalized = grammar_file(&grammar)?;
                    let a: NtId = normalized.query_nonterminal(&start)?;
                    let graph = graph_file(&graph)?;
                    let (m, n) = (node(&graph, &from)?, node(&graph, &to)?);
                    oracle::brute_min_path(&normalized.grammar, a, &graph, m, n, bound)
                }
                OracleKind::MinString { grammar, start, bound } => {
                    let normalized = grammar_file(&grammar)?;
                    let a = normalized.query_nonterminal(&start)?;
                    oracle::brute_min_string(&normalized.grammar, a, bound)
                }
            };
            match found {
                Some(len) => writeln!(out, "{len}")?,
                None => writeln!(out, "none")?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli, &mut out).and_then(|code| {
        out.flush()?;
        Ok(code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
