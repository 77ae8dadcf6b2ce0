//! Context-free path querying over edge-labelled graphs.
//!
//! A grammar in Chomsky normal form and a graph whose edge labels are the
//! grammar's terminals yield three kinds of answers: which node pairs are
//! connected by a path whose trace is in the language ([`recognizer`]), every
//! such path ([`annotated`]), and one shortest such path per pair
//! ([`singlepath`]). [`shortest`] computes minimum-length strings of a plain
//! grammar with the same priority-queue scheme.

pub mod annotated;
pub mod bench;
pub mod cost;
pub mod grammar;
pub mod graph;
pub mod oracle;
pub mod recognizer;
pub mod shortest;
pub mod singlepath;
pub mod triples;
pub mod verify;

pub use annotated::{build_annotated, AnnotatedGrammar, AnnotatedSymbol};
pub use cost::Cost;
pub use grammar::{load_grammar, normalize_to_cnf, parse_grammar, Grammar, GrammarError, NtId, RuleId, TermId};
pub use graph::{gen_cycle, gen_double_cycle, gen_social_network, load_graph, Graph, GraphError, NodeId, Path};
pub use recognizer::{eval_boolean, eval_relational, recognize, ReachSet};
pub use shortest::{derive_min_string, minimize, MinimizingSet};
pub use singlepath::{minimize_annotated, shortest_path, AnnotatedMinimizingSet, PathError};
