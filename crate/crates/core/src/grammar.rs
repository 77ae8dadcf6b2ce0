//! Context-free grammars in Chomsky Normal Form.
//!
//! Grammars are read from a small line-oriented text format, normalized to
//! CNF (rules `a -> "σ"` and `a -> b c` only, no ε), and then frozen into an
//! immutable [`Grammar`] with lookup tables for the evaluation algorithms.
//!
//! ```text
//! # same-generation query
//! q -> "parentOf" q "childOf" | "parentOf" "childOf"
//! ```

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("symbol `{0}` is used both as a terminal and as a nonterminal")]
    SymbolConflict(String),
    #[error("unknown nonterminal `{0}`")]
    UnknownNonterminal(String),
    #[error("nonterminal `{0}` only derives the empty string")]
    EpsilonLanguage(String),
}

/// Dense index of a nonterminal within one [`Grammar`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NtId(pub u32);

/// Dense index of a terminal within one [`Grammar`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(pub u32);

/// Position of a rule in [`Grammar::rules`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u32);

impl NtId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TermId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RuleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Body {
    Terminal(TermId),
    Pair(NtId, NtId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: NtId,
    pub body: Body,
}

/// A symbol of an unrestricted rule body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RawSymbol {
    Terminal(String),
    Nonterminal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRule {
    pub head: String,
    pub body: Vec<RawSymbol>,
    pub line: usize,
}

/// Rules as written in a grammar file, before normalization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawGrammar {
    pub rules: Vec<RawRule>,
    /// Nonterminals in order of first appearance.
    pub nonterminals: Vec<String>,
}

/// An immutable CNF grammar.
#[derive(Debug, Clone)]
pub struct Grammar {
    nonterminals: Vec<String>,
    nt_index: HashMap<String, NtId>,
    terminals: Vec<String>,
    term_index: HashMap<String, TermId>,
    rules: Vec<Rule>,
    by_terminal: Vec<Vec<RuleId>>,
    by_first: Vec<Vec<RuleId>>,
    by_second: Vec<Vec<RuleId>>,
}

impl Grammar {
    pub fn builder() -> GrammarBuilder {
        GrammarBuilder::default()
    }

    pub fn nonterminal_count(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = NtId> + '_ {
        (0..self.nonterminals.len() as u32).map(NtId)
    }

    pub fn nonterminal(&self, name: &str) -> Option<NtId> {
        self.nt_index.get(name).copied()
    }

    pub fn terminal(&self, name: &str) -> Option<TermId> {
        self.term_index.get(name).copied()
    }

    pub fn nt_name(&self, a: NtId) -> &str {
        &self.nonterminals[a.index()]
    }

    pub fn term_name(&self, t: TermId) -> &str {
        &self.terminals[t.index()]
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> Rule {
        self.rules[id.index()]
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = RuleId> {
        (0..self.rules.len() as u32).map(RuleId)
    }

    /// Terminal rules `a -> t`, in rule order.
    pub fn rules_with_terminal(&self, t: TermId) -> &[RuleId] {
        &self.by_terminal[t.index()]
    }

    /// Binary rules `c -> a b` with `a` in first body position.
    pub fn rules_with_first(&self, a: NtId) -> &[RuleId] {
        &self.by_first[a.index()]
    }

    /// Binary rules `c -> b a` with `a` in second body position.
    pub fn rules_with_second(&self, a: NtId) -> &[RuleId] {
        &self.by_second[a.index()]
    }

    pub fn resolve(&self, name: &str) -> Result<NtId, GrammarError> {
        self.nonterminal(name)
            .ok_or_else(|| GrammarError::UnknownNonterminal(name.to_string()))
    }

    pub fn display_rule(&self, id: RuleId) -> String {
        let rule = self.rule(id);
        match rule.body {
            Body::Terminal(t) => format!("{} -> \"{}\"", self.nt_name(rule.head), self.term_name(t)),
            Body::Pair(b, c) => format!(
                "{} -> {} {}",
                self.nt_name(rule.head),
                self.nt_name(b),
                self.nt_name(c)
            ),
        }
    }

    /// CYK membership test: does `a` derive `w`?
    ///
    /// The empty word is never accepted.
    pub fn accepts(&self, a: NtId, w: &[TermId]) -> bool {
        let len = w.len();
        if len == 0 {
            return false;
        }
        let words = (self.nonterminals.len() + 63) / 64;
        // table[(span - 1) * len + start] is the set of nonterminals deriving w[start..start + span]
        let mut table = vec![0u64; len * len * words];
        let cell = |span: usize, start: usize| ((span - 1) * len + start) * words;
        for (i, &t) in w.iter().enumerate() {
            let Some(rules) = self.by_terminal.get(t.index()) else {
                return false;
            };
            let base = cell(1, i);
            for &r in rules {
                let head = self.rules[r.index()].head.index();
                table[base + head / 64] |= 1 << (head % 64);
            }
        }
        let binary: Vec<(usize, usize, usize)> = self
            .rules
            .iter()
            .filter_map(|r| match r.body {
                Body::Pair(b, c) => Some((r.head.index(), b.index(), c.index())),
                Body::Terminal(_) => None,
            })
            .collect();
        let has = |table: &[u64], at: usize, x: usize| table[at + x / 64] & (1 << (x % 64)) != 0;
        for span in 2..=len {
            for start in 0..=len - span {
                let target = cell(span, start);
                for split in 1..span {
                    let left = cell(split, start);
                    let right = cell(span - split, start + split);
                    for &(head, b, c) in &binary {
                        if has(&table, left, b) && has(&table, right, c) {
                            table[target + head / 64] |= 1 << (head % 64);
                        }
                    }
                }
            }
        }
        has(&table, cell(len, 0), a.index())
    }

    /// Name-based CYK membership. Terminals unknown to the grammar make the
    /// word unrecognizable.
    pub fn cyk_member(&self, a: &str, w: &[&str]) -> Result<bool, GrammarError> {
        let a = self.resolve(a)?;
        let mut ids = Vec::with_capacity(w.len());
        for t in w {
            match self.terminal(t) {
                Some(id) => ids.push(id),
                None => return Ok(false),
            }
        }
        Ok(self.accepts(a, &ids))
    }
}

impl fmt::Display for Grammar {
    /// Serializes in the grammar file format, one rule per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in self.rule_ids() {
            writeln!(f, "{}", self.display_rule(id))?;
        }
        Ok(())
    }
}

/// Incremental construction of a CNF [`Grammar`]. Duplicate rules are
/// dropped, keeping the first occurrence.
#[derive(Debug, Default, Clone)]
pub struct GrammarBuilder {
    nonterminals: Vec<String>,
    nt_index: HashMap<String, NtId>,
    terminals: Vec<String>,
    term_index: HashMap<String, TermId>,
    rules: Vec<Rule>,
    seen: HashSet<Rule>,
}

impl GrammarBuilder {
    pub fn nonterminal(&mut self, name: &str) -> NtId {
        if let Some(&id) = self.nt_index.get(name) {
            return id;
        }
        let id = NtId(self.nonterminals.len() as u32);
        self.nonterminals.push(name.to_string());
        self.nt_index.insert(name.to_string(), id);
        id
    }

    pub fn terminal(&mut self, name: &str) -> TermId {
        if let Some(&id) = self.term_index.get(name) {
            return id;
        }
        let id = TermId(self.terminals.len() as u32);
        self.terminals.push(name.to_string());
        self.term_index.insert(name.to_string(), id);
        id
    }

    pub fn terminal_rule(&mut self, head: &str, terminal: &str) -> &mut Self {
        let head = self.nonterminal(head);
        let t = self.terminal(terminal);
        self.push(Rule { head, body: Body::Terminal(t) })
    }

    pub fn binary_rule(&mut self, head: &str, first: &str, second: &str) -> &mut Self {
        let head = self.nonterminal(head);
        let b = self.nonterminal(first);
        let c = self.nonterminal(second);
        self.push(Rule { head, body: Body::Pair(b, c) })
    }

    pub fn push(&mut self, rule: Rule) -> &mut Self {
        if self.seen.insert(rule) {
            self.rules.push(rule);
        }
        self
    }

    pub fn build(self) -> Result<Grammar, GrammarError> {
        if let Some(name) = self.nonterminals.iter().find(|n| self.term_index.contains_key(*n)) {
            return Err(GrammarError::SymbolConflict(name.clone()));
        }
        let mut by_terminal = vec![Vec::new(); self.terminals.len()];
        let mut by_first = vec![Vec::new(); self.nonterminals.len()];
        let mut by_second = vec![Vec::new(); self.nonterminals.len()];
        for (i, rule) in self.rules.iter().enumerate() {
            let id = RuleId(i as u32);
            match rule.body {
                Body::Terminal(t) => by_terminal[t.index()].push(id),
                Body::Pair(b, c) => {
                    by_first[b.index()].push(id);
                    by_second[c.index()].push(id);
                }
            }
        }
        Ok(Grammar {
            nonterminals: self.nonterminals,
            nt_index: self.nt_index,
            terminals: self.terminals,
            term_index: self.term_index,
            rules: self.rules,
            by_terminal,
            by_first,
            by_second,
        })
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, PartialEq)]
enum Token {
    Bare(String),
    Quoted(String),
    Arrow,
    Bar,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Token>, GrammarError> {
    let syntax = |message: &str| GrammarError::Syntax { line: lineno, message: message.to_string() };
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, ch)) = chars.peek() {
        match ch {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                tokens.push(Token::Bar);
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    text.push(c);
                }
                if !closed {
                    return Err(syntax("unterminated terminal"));
                }
                if text.is_empty() {
                    return Err(syntax("empty terminal"));
                }
                if text.chars().any(char::is_whitespace) {
                    return Err(syntax("terminal contains whitespace"));
                }
                tokens.push(Token::Quoted(text));
            }
            _ => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_whitespace() || c == '"' || c == '|' || c == '#' {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                let word = &line[start..end];
                if word == "->" {
                    tokens.push(Token::Arrow);
                } else if word.contains("->") {
                    return Err(syntax("`->` must be separated by whitespace"));
                } else {
                    tokens.push(Token::Bare(word.to_string()));
                }
            }
        }
    }
    Ok(tokens)
}

/// The bare token `ε` may be used to write an empty alternative explicitly.
const EPSILON: &str = "ε";

/// Parses the grammar file format. Alternatives separated by `|` become
/// separate rules, in left-to-right order.
pub fn parse_grammar(text: &str) -> Result<RawGrammar, GrammarError> {
    let mut raw = RawGrammar::default();
    let mut seen_nt: HashSet<String> = HashSet::new();
    let mut terminals: HashSet<String> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens = tokenize(line, lineno)?;
        if tokens.is_empty() {
            continue;
        }
        let syntax = |message: &str| GrammarError::Syntax { line: lineno, message: message.to_string() };
        let mut it = tokens.into_iter();
        let head = match it.next() {
            Some(Token::Bare(name)) if name != EPSILON => name,
            _ => return Err(syntax("expected a nonterminal at the start of the rule")),
        };
        if it.next() != Some(Token::Arrow) {
            return Err(syntax("expected `->` after the rule head"));
        }
        let mut note_nt = |name: &str, raw: &mut RawGrammar| {
            if seen_nt.insert(name.to_string()) {
                raw.nonterminals.push(name.to_string());
            }
        };
        note_nt(&head, &mut raw);
        let mut body = Vec::new();
        let mut alternatives = Vec::new();
        for token in it {
            match token {
                Token::Bar => alternatives.push(std::mem::take(&mut body)),
                Token::Arrow => return Err(syntax("unexpected `->` in rule body")),
                Token::Quoted(t) => {
                    terminals.insert(t.clone());
                    body.push(RawSymbol::Terminal(t));
                }
                Token::Bare(name) if name == EPSILON => {}
                Token::Bare(name) => {
                    note_nt(&name, &mut raw);
                    body.push(RawSymbol::Nonterminal(name));
                }
            }
        }
        alternatives.push(body);
        for body in alternatives {
            raw.rules.push(RawRule { head: head.clone(), body, line: lineno });
        }
    }
    if let Some(name) = raw.nonterminals.iter().find(|n| terminals.contains(*n)) {
        return Err(GrammarError::SymbolConflict(name.clone()));
    }
    Ok(raw)
}

// ---------------------------------------------------------------------------
// Normalization

/// Warnings produced while normalizing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizeDiagnostics {
    /// Original nonterminals that derive ε; ε is dropped from their language.
    pub nullable: Vec<String>,
    /// Original nonterminals whose language was exactly {ε} and is now empty.
    pub epsilon_only: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub grammar: Grammar,
    pub diagnostics: NormalizeDiagnostics,
}

impl Normalized {
    /// Resolves a nonterminal that is about to be queried, rejecting names
    /// whose whole language was ε.
    pub fn query_nonterminal(&self, name: &str) -> Result<NtId, GrammarError> {
        let id = self.grammar.resolve(name)?;
        if self.diagnostics.epsilon_only.iter().any(|n| n == name) {
            return Err(GrammarError::EpsilonLanguage(name.to_string()));
        }
        Ok(id)
    }
}

/// Parses and normalizes a grammar document.
pub fn load_grammar(text: &str) -> Result<Normalized, GrammarError> {
    normalize_to_cnf(&parse_grammar(text)?)
}

struct FreshNames<'a> {
    taken: &'a HashSet<String>,
    used: HashSet<String>,
    next_bin: usize,
}

impl FreshNames<'_> {
    fn pick(&mut self, base: String) -> String {
        let mut name = base.clone();
        let mut k = 1;
        while self.taken.contains(&name) || self.used.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.used.insert(name.clone());
        name
    }

    fn binarization(&mut self) -> String {
        loop {
            self.next_bin += 1;
            let name = format!("_b{}", self.next_bin);
            if !self.taken.contains(&name) && !self.used.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }
}

/// Converts to CNF: removes ε-rules and unit rules, lifts terminals out of
/// long bodies into `_t<label>` nonterminals and binarizes with `_b<k>`
/// nonterminals. Every original nonterminal keeps its language minus ε.
pub fn normalize_to_cnf(raw: &RawGrammar) -> Result<Normalized, GrammarError> {
    let nts = &raw.nonterminals;
    let nt_pos: HashMap<&str, usize> = nts.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut nullable = vec![false; nts.len()];
    loop {
        let mut changed = false;
        for rule in &raw.rules {
            let h = nt_pos[rule.head.as_str()];
            if nullable[h] {
                continue;
            }
            let all = rule.body.iter().all(|s| match s {
                RawSymbol::Terminal(_) => false,
                RawSymbol::Nonterminal(n) => nullable[nt_pos[n.as_str()]],
            });
            if all {
                nullable[h] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // ε-elimination: every way of dropping nullable occurrences, non-empty results only.
    let mut expanded: Vec<(usize, Vec<RawSymbol>)> = Vec::new();
    let mut seen: HashSet<(usize, Vec<RawSymbol>)> = HashSet::new();
    for rule in &raw.rules {
        let h = nt_pos[rule.head.as_str()];
        let mut variants: Vec<Vec<RawSymbol>> = vec![Vec::new()];
        for sym in &rule.body {
            let optional = matches!(sym, RawSymbol::Nonterminal(n) if nullable[nt_pos[n.as_str()]]);
            let mut next = Vec::with_capacity(variants.len() * 2);
            for v in variants {
                let mut with = v.clone();
                with.push(sym.clone());
                next.push(with);
                if optional {
                    next.push(v);
                }
            }
            variants = next;
        }
        for v in variants {
            if v.is_empty() {
                continue;
            }
            // a -> a is a no-op
            if let [RawSymbol::Nonterminal(n)] = v.as_slice() {
                if nt_pos[n.as_str()] == h {
                    continue;
                }
            }
            if seen.insert((h, v.clone())) {
                expanded.push((h, v));
            }
        }
    }

    // Unit closure: unit[a] lists the nonterminals reachable from a by unit rules, a first.
    let mut unit_edges: Vec<Vec<usize>> = vec![Vec::new(); nts.len()];
    for (h, body) in &expanded {
        if let [RawSymbol::Nonterminal(n)] = body.as_slice() {
            unit_edges[*h].push(nt_pos[n.as_str()]);
        }
    }
    let unit_closure = |start: usize| -> Vec<usize> {
        let mut order = vec![start];
        let mut mark = vec![false; nts.len()];
        mark[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &unit_edges[x] {
                if !mark[y] {
                    mark[y] = true;
                    order.push(y);
                    queue.push_back(y);
                }
            }
        }
        order
    };
    let mut by_head: Vec<Vec<usize>> = vec![Vec::new(); nts.len()];
    for (i, (h, body)) in expanded.iter().enumerate() {
        if !matches!(body.as_slice(), [RawSymbol::Nonterminal(_)]) {
            by_head[*h].push(i);
        }
    }
    let mut proper: Vec<(usize, Vec<RawSymbol>)> = Vec::new();
    let mut seen_proper: HashSet<(usize, Vec<RawSymbol>)> = HashSet::new();
    for (h, body) in &expanded {
        match body.as_slice() {
            [RawSymbol::Nonterminal(n)] => {
                for c in unit_closure(nt_pos[n.as_str()]) {
                    for &ri in &by_head[c] {
                        let item = (*h, expanded[ri].1.clone());
                        if seen_proper.insert(item.clone()) {
                            proper.push(item);
                        }
                    }
                }
            }
            _ => {
                let item = (*h, body.clone());
                if seen_proper.insert(item.clone()) {
                    proper.push(item);
                }
            }
        }
    }

    let taken: HashSet<String> = nts.iter().cloned().collect();
    let mut fresh = FreshNames { taken: &taken, used: HashSet::new(), next_bin: 0 };
    let mut lifted: HashMap<String, String> = HashMap::new();
    let mut builder = Grammar::builder();
    for n in nts {
        builder.nonterminal(n);
    }
    for (h, body) in proper {
        let head = nts[h].clone();
        if let [RawSymbol::Terminal(t)] = body.as_slice() {
            builder.terminal_rule(&head, t);
            continue;
        }
        let mut names = Vec::with_capacity(body.len());
        for sym in &body {
            match sym {
                RawSymbol::Nonterminal(n) => names.push(n.clone()),
                RawSymbol::Terminal(t) => {
                    let name = match lifted.get(t) {
                        Some(name) => name.clone(),
                        None => {
                            let name = fresh.pick(format!("_t{t}"));
                            lifted.insert(t.clone(), name.clone());
                            builder.terminal_rule(&name, t);
                            name
                        }
                    };
                    names.push(name);
                }
            }
        }
        let mut current = head;
        let mut rest = names.as_slice();
        while rest.len() > 2 {
            let next = fresh.binarization();
            builder.binary_rule(&current, &rest[0], &next);
            current = next;
            rest = &rest[1..];
        }
        builder.binary_rule(&current, &rest[0], &rest[1]);
    }
    let grammar = builder.build()?;

    let productive = productive_set(&grammar);
    let mut diagnostics = NormalizeDiagnostics::default();
    for (i, n) in nts.iter().enumerate() {
        if nullable[i] {
            diagnostics.nullable.push(n.clone());
            if !productive[i] {
                diagnostics.epsilon_only.push(n.clone());
            }
        }
    }
    Ok(Normalized { grammar, diagnostics })
}

/// Nonterminals with a non-empty language.
pub fn productive_set(g: &Grammar) -> Vec<bool> {
    let mut productive = vec![false; g.nonterminal_count()];
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if productive[rule.head.index()] {
                continue;
            }
            let ok = match rule.body {
                Body::Terminal(_) => true,
                Body::Pair(b, c) => productive[b.index()] && productive[c.index()],
            };
            if ok {
                productive[rule.head.index()] = true;
                changed = true;
            }
        }
        if !changed {
            return productive;
        }
    }
}
