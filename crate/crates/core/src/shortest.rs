//! Minimum-length strings of a context-free grammar.
//!
//! [`minimize`] picks, for every nonterminal with a non-empty language, one
//! rule such that the chosen rules form a deterministic non-recursive set
//! whose unique string per head is as short as possible. It is a
//! Knuth/Dijkstra-style best-first search: terminal rules seed cost 1, and
//! each nonterminal leaving the queue (in nondecreasing cost order) relaxes
//! the binary rules it appears in whenever the sibling is already costed.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

use crate::cost::Cost;
use crate::grammar::{Body, Grammar, NtId, RuleId, TermId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeriveError {
    #[error("`{0}` derives no string")]
    NotDerivable(String),
    #[error("chosen rules for `{0}` do not spell a string of the recorded length")]
    Inconsistent(String),
    #[error("string for `{0}` is too long to materialize")]
    TooLong(String),
}

/// Bookkeeping of one best-first run, used to check the queue discipline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueStats {
    pub insertions: usize,
    pub decreases: usize,
    pub extractions: usize,
    pub stale_skipped: usize,
    /// Extracted priorities never went down.
    pub monotone: bool,
    /// No key was lowered or re-queued after it had been extracted.
    pub single_insertion: bool,
}

impl Default for QueueStats {
    fn default() -> Self {
        QueueStats {
            insertions: 0,
            decreases: 0,
            extractions: 0,
            stale_skipped: 0,
            monotone: true,
            single_insertion: true,
        }
    }
}

impl QueueStats {
    pub fn holds(&self) -> bool {
        self.monotone && self.single_insertion && self.extractions == self.insertions
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub rule: RuleId,
    pub cost: Cost,
}

/// One chosen rule and its string length per derivable nonterminal.
#[derive(Debug, Clone)]
pub struct MinimizingSet {
    choices: Vec<Option<Choice>>,
    stats: QueueStats,
}

impl MinimizingSet {
    /// Wraps hand-written entries, e.g. to run [`check_minimizing`] on them.
    pub fn from_entries(nonterminals: usize, entries: impl IntoIterator<Item = (NtId, RuleId, Cost)>) -> Self {
        let mut choices = vec![None; nonterminals];
        for (a, rule, cost) in entries {
            choices[a.index()] = Some(Choice { rule, cost });
        }
        MinimizingSet { choices, stats: QueueStats::default() }
    }

    /// Wraps a rule selection, computing each head's cost as the length of
    /// the string the selection spells. Heads caught in a cycle of chosen
    /// rules get cost 0.
    pub fn from_rules(g: &Grammar, rules: &[RuleId]) -> Self {
        let mut chosen: Vec<Option<RuleId>> = vec![None; g.nonterminal_count()];
        for &r in rules {
            chosen[g.rule(r).head.index()] = Some(r);
        }
        let mut cost: Vec<Option<Cost>> = vec![None; g.nonterminal_count()];
        loop {
            let mut changed = false;
            for a in g.nonterminals() {
                if cost[a.index()].is_some() {
                    continue;
                }
                let Some(r) = chosen[a.index()] else { continue };
                let value = match g.rule(r).body {
                    Body::Terminal(_) => Some(Cost::ONE),
                    Body::Pair(b, c) => match (&cost[b.index()], &cost[c.index()]) {
                        (Some(x), Some(y)) => Some(x + y),
                        _ => None,
                    },
                };
                if value.is_some() {
                    cost[a.index()] = value;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let entries = g.nonterminals().filter_map(|a| {
            chosen[a.index()].map(|r| (a, r, cost[a.index()].clone().unwrap_or(Cost::ZERO)))
        });
        Self::from_entries(g.nonterminal_count(), entries)
    }

    pub fn get(&self, a: NtId) -> Option<&Choice> {
        self.choices.get(a.index()).and_then(Option::as_ref)
    }

    pub fn cost(&self, a: NtId) -> Option<&Cost> {
        self.get(a).map(|c| &c.cost)
    }

    pub fn contains(&self, a: NtId) -> bool {
        self.get(a).is_some()
    }

    /// Heads of the chosen rules, in nonterminal order.
    pub fn domain(&self) -> impl Iterator<Item = (NtId, &Choice)> + '_ {
        self.choices
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_ref().map(|c| (NtId(i as u32), c)))
    }

    pub fn len(&self) -> usize {
        self.choices.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> &QueueStats {
        &self.stats
    }

    pub fn max_cost(&self) -> Option<Cost> {
        self.domain().map(|(_, c)| c.cost.clone()).max()
    }

    pub fn total_cost(&self) -> Cost {
        self.domain().map(|(_, c)| &c.cost).sum()
    }

    /// `head \t cost \t chosen-rule`, one line per head in nonterminal order.
    pub fn to_tsv(&self, g: &Grammar) -> String {
        let mut out = String::new();
        for (a, c) in self.domain() {
            out.push_str(&format!("{}\t{}\t{}\n", g.nt_name(a), c.cost, g.display_rule(c.rule)));
        }
        out
    }
}

/// Builds a minimizing set of rules for `g`.
pub fn minimize(g: &Grammar) -> MinimizingSet {
    let n = g.nonterminal_count();
    let mut choices: Vec<Option<Choice>> = vec![None; n];
    let mut done = vec![false; n];
    let mut queue: BinaryHeap<Reverse<(Cost, u32)>> = BinaryHeap::new();
    let mut stats = QueueStats::default();

    for r in g.rule_ids() {
        let rule = g.rule(r);
        if let Body::Terminal(_) = rule.body {
            if choices[rule.head.index()].is_none() {
                choices[rule.head.index()] = Some(Choice { rule: r, cost: Cost::ONE });
                queue.push(Reverse((Cost::ONE, rule.head.0)));
                stats.insertions += 1;
            }
        }
    }

    let mut last: Option<Cost> = None;
    while let Some(Reverse((priority, a))) = queue.pop() {
        let a = NtId(a);
        if done[a.index()] {
            stats.stale_skipped += 1;
            continue;
        }
        if let Some(prev) = &last {
            if priority < *prev {
                stats.monotone = false;
            }
        }
        debug_assert!(last.as_ref().map_or(true, |p| priority >= *p), "queue priorities went down");
        last = Some(priority);
        done[a.index()] = true;
        stats.extractions += 1;

        let mut produce = |head: NtId, rule: RuleId, e: NtId, f: NtId, choices: &mut Vec<Option<Choice>>| {
            let sum = {
                let (Some(ce), Some(cf)) = (&choices[e.index()], &choices[f.index()]) else {
                    return;
                };
                &ce.cost + &cf.cost
            };
            match &mut choices[head.index()] {
                slot @ None => {
                    *slot = Some(Choice { rule, cost: sum.clone() });
                    queue.push(Reverse((sum, head.0)));
                    stats.insertions += 1;
                }
                Some(current) if current.cost > sum => {
                    if done[head.index()] {
                        stats.single_insertion = false;
                    }
                    current.rule = rule;
                    current.cost = sum.clone();
                    queue.push(Reverse((sum, head.0)));
                    stats.decreases += 1;
                }
                Some(_) => {}
            }
        };

        for &r in g.rules_with_first(a) {
            let rule = g.rule(r);
            let Body::Pair(_, b) = rule.body else { unreachable!() };
            produce(rule.head, r, a, b, &mut choices);
        }
        for &r in g.rules_with_second(a) {
            let rule = g.rule(r);
            let Body::Pair(b, _) = rule.body else { unreachable!() };
            produce(rule.head, r, b, a, &mut choices);
        }
    }
    MinimizingSet { choices, stats }
}

/// Streams the string chosen for `a`, left to right, from the rule set.
pub fn for_each_terminal(
    g: &Grammar,
    ms: &MinimizingSet,
    a: NtId,
    mut emit: impl FnMut(TermId),
) -> Result<(), DeriveError> {
    let root = ms.get(a).ok_or_else(|| DeriveError::NotDerivable(g.nt_name(a).to_string()))?;
    let limit = root.cost.to_u64().ok_or_else(|| DeriveError::TooLong(g.nt_name(a).to_string()))?;
    let mut emitted = 0u64;
    let mut steps = 0u64;
    let mut stack = vec![a];
    while let Some(x) = stack.pop() {
        steps += 1;
        if steps > limit.saturating_mul(2) {
            return Err(DeriveError::Inconsistent(g.nt_name(a).to_string()));
        }
        let choice = ms.get(x).ok_or_else(|| DeriveError::Inconsistent(g.nt_name(a).to_string()))?;
        match g.rule(choice.rule).body {
            Body::Terminal(t) => {
                emitted += 1;
                emit(t);
            }
            Body::Pair(b, c) => {
                stack.push(c);
                stack.push(b);
            }
        }
    }
    if limit != emitted {
        return Err(DeriveError::Inconsistent(g.nt_name(a).to_string()));
    }
    Ok(())
}

/// The minimum-length string of `a` spelled by the chosen rules.
pub fn derive_min_string(g: &Grammar, ms: &MinimizingSet, a: NtId) -> Result<Vec<TermId>, DeriveError> {
    let mut out = Vec::new();
    for_each_terminal(g, ms, a, |t| out.push(t))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The entry for a head points at a rule of another head.
    WrongHead { head: NtId, rule: RuleId },
    /// A chosen rule uses a nonterminal that has no chosen rule.
    Incomplete { head: NtId, missing: NtId },
    /// Recorded cost does not match the chosen rule.
    CostEquation { head: NtId, cost: Cost, expected: Cost },
    /// `head` is reachable from itself through chosen rules.
    Recursive { head: NtId },
    /// Recorded cost exceeds the true minimum length.
    NotMinimal { head: NtId, cost: Cost, minlen: Cost },
    /// `head` has a non-empty language but no chosen rule, or vice versa.
    Domain { head: NtId, derivable: bool },
}

impl Violation {
    pub fn describe(&self, g: &Grammar) -> String {
        match self {
            Violation::WrongHead { head, rule } => {
                format!("{}: chosen rule `{}` has another head", g.nt_name(*head), g.display_rule(*rule))
            }
            Violation::Incomplete { head, missing } => {
                format!("{}: body symbol {} has no chosen rule", g.nt_name(*head), g.nt_name(*missing))
            }
            Violation::CostEquation { head, cost, expected } => {
                format!("{}: cost {} but chosen rule gives {}", g.nt_name(*head), cost, expected)
            }
            Violation::Recursive { head } => format!("{}: chosen rules are recursive", g.nt_name(*head)),
            Violation::NotMinimal { head, cost, minlen } => {
                format!("{}: cost {} exceeds minimum length {}", g.nt_name(*head), cost, minlen)
            }
            Violation::Domain { head, derivable } => {
                if *derivable {
                    format!("{}: derivable but has no chosen rule", g.nt_name(*head))
                } else {
                    format!("{}: has a chosen rule but derives nothing", g.nt_name(*head))
                }
            }
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Minimum lengths by plain fixpoint relaxation over all rules.
pub fn minlen_fixpoint(g: &Grammar) -> Vec<Option<Cost>> {
    let mut best: Vec<Option<Cost>> = vec![None; g.nonterminal_count()];
    loop {
        let mut changed = false;
        for rule in g.rules() {
            let candidate = match rule.body {
                Body::Terminal(_) => Some(Cost::ONE),
                Body::Pair(b, c) => match (&best[b.index()], &best[c.index()]) {
                    (Some(x), Some(y)) => Some(x + y),
                    _ => None,
                },
            };
            if let Some(v) = candidate {
                let slot = &mut best[rule.head.index()];
                if slot.as_ref().map_or(true, |cur| v < *cur) {
                    *slot = Some(v);
                    changed = true;
                }
            }
        }
        if !changed {
            return best;
        }
    }
}

/// Verifies that `ms` is a minimizing set for `g`. An empty result means it is.
pub fn check_minimizing(g: &Grammar, ms: &MinimizingSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for (a, choice) in ms.domain() {
        let rule = g.rule(choice.rule);
        if rule.head != a {
            out.push(Violation::WrongHead { head: a, rule: choice.rule });
            continue;
        }
        match rule.body {
            Body::Terminal(_) => {
                if choice.cost != Cost::ONE {
                    out.push(Violation::CostEquation { head: a, cost: choice.cost.clone(), expected: Cost::ONE });
                }
            }
            Body::Pair(b, c) => match (ms.cost(b), ms.cost(c)) {
                (Some(cb), Some(cc)) => {
                    let expected = cb + cc;
                    if choice.cost != expected || choice.cost <= *cb || choice.cost <= *cc {
                        out.push(Violation::CostEquation { head: a, cost: choice.cost.clone(), expected });
                    }
                }
                (None, _) => out.push(Violation::Incomplete { head: a, missing: b }),
                (_, None) => out.push(Violation::Incomplete { head: a, missing: c }),
            },
        }
    }

    // cycle detection over head -> body edges of the chosen rules
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; g.nonterminal_count()];
    let children = |x: NtId| -> Vec<NtId> {
        match ms.get(x).map(|c| g.rule(c.rule).body) {
            Some(Body::Pair(b, c)) => vec![b, c],
            _ => Vec::new(),
        }
    };
    let mut recursive = vec![false; g.nonterminal_count()];
    for (start, _) in ms.domain() {
        if color[start.index()] != WHITE {
            continue;
        }
        let mut stack: Vec<(NtId, Vec<NtId>)> = vec![(start, children(start))];
        color[start.index()] = GREY;
        while let Some((x, pending)) = stack.last_mut() {
            let x = *x;
            match pending.pop() {
                Some(y) => match color[y.index()] {
                    WHITE => {
                        color[y.index()] = GREY;
                        stack.push((y, children(y)));
                    }
                    GREY => {
                        // every node on the stack from y upwards lies on the cycle
                        let from = stack.iter().position(|(z, _)| *z == y).unwrap_or(0);
                        for (z, _) in &stack[from..] {
                            recursive[z.index()] = true;
                        }
                    }
                    _ => {}
                },
                None => {
                    color[x.index()] = BLACK;
                    stack.pop();
                }
            }
        }
    }
    out.extend(g.nonterminals().filter(|a| recursive[a.index()]).map(|head| Violation::Recursive { head }));

    let best = minlen_fixpoint(g);
    for a in g.nonterminals() {
        match (ms.get(a), &best[a.index()]) {
            (Some(choice), Some(minlen)) => {
                if choice.cost != *minlen {
                    out.push(Violation::NotMinimal { head: a, cost: choice.cost.clone(), minlen: minlen.clone() });
                }
            }
            (None, Some(_)) => out.push(Violation::Domain { head: a, derivable: true }),
            (Some(_), None) => out.push(Violation::Domain { head: a, derivable: false }),
            (None, None) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;

    /// a0 -> s, a(j) -> a(j-1) a(j-1)
    pub(crate) fn chain(levels: usize) -> Grammar {
        let mut b = Grammar::builder();
        b.terminal_rule("a0", "s");
        for j in 1..levels {
            b.binary_rule(&format!("a{j}"), &format!("a{}", j - 1), &format!("a{}", j - 1));
        }
        b.build().unwrap()
    }

    #[test]
    fn single_terminal() {
        let g = load_grammar("a -> \"x\"").unwrap().grammar;
        let ms = minimize(&g);
        let a = g.nonterminal("a").unwrap();
        assert_eq!(ms.cost(a), Some(&Cost::ONE));
        assert_eq!(derive_min_string(&g, &ms, a).unwrap(), vec![g.terminal("x").unwrap()]);
        assert!(check_minimizing(&g, &ms).is_empty());
        assert_eq!(ms.to_tsv(&g), "a\t1\ta -> \"x\"\n");
    }

    #[test]
    fn chain_doubles() {
        let g = chain(3);
        let ms = minimize(&g);
        let a2 = g.nonterminal("a2").unwrap();
        assert_eq!(ms.cost(a2), Some(&Cost::from(4)));
        let s = g.terminal("s").unwrap();
        assert_eq!(derive_min_string(&g, &ms, a2).unwrap(), vec![s; 4]);
        assert!(ms.stats().holds());
    }

    #[test]
    fn chain_beyond_u64() {
        let g = chain(70);
        let ms = minimize(&g);
        let top = g.nonterminal("a69").unwrap();
        assert_eq!(ms.cost(top), Some(&Cost::pow2(69)));
        assert_eq!(ms.max_cost(), Some(Cost::pow2(69)));
        assert_eq!(&ms.total_cost() + &Cost::ONE, Cost::pow2(70));
        assert!(check_minimizing(&g, &ms).is_empty());
    }

    #[test]
    fn empty_language_is_absent() {
        let g = load_grammar("a -> a a | b b\nb -> \"x\"\nc -> c b").unwrap().grammar;
        let ms = minimize(&g);
        assert!(ms.contains(g.nonterminal("a").unwrap()));
        let c = g.nonterminal("c").unwrap();
        assert!(!ms.contains(c));
        assert_eq!(derive_min_string(&g, &ms, c), Err(DeriveError::NotDerivable("c".into())));
        assert!(check_minimizing(&g, &ms).is_empty());
    }

    #[test]
    fn strict_comparison_keeps_first_rule() {
        // both rules give length 2; the one found first is kept
        let g = load_grammar("s -> x y | y x\nx -> \"a\"\ny -> \"b\"").unwrap().grammar;
        let ms = minimize(&g);
        let s = g.nonterminal("s").unwrap();
        assert_eq!(g.display_rule(ms.get(s).unwrap().rule), "s -> x y");
    }

    #[test]
    fn self_referential_choice_is_flagged() {
        let g = load_grammar("a -> a a | \"x\"").unwrap().grammar;
        let a = g.nonterminal("a").unwrap();
        let ms = MinimizingSet::from_entries(1, [(a, RuleId(0), Cost::from(2))]);
        let violations = check_minimizing(&g, &ms);
        assert!(violations.contains(&Violation::Recursive { head: a }), "{violations:?}");
        assert!(derive_min_string(&g, &ms, a).is_err());
    }

    #[test]
    fn wrong_costs_are_flagged() {
        let g = load_grammar("a -> b b\nb -> \"x\" | a a").unwrap().grammar;
        let a = g.nonterminal("a").unwrap();
        let b = g.nonterminal("b").unwrap();
        let ms = MinimizingSet::from_entries(2, [(a, RuleId(0), Cost::from(3)), (b, RuleId(1), Cost::ONE)]);
        let v = check_minimizing(&g, &ms);
        assert_eq!(
            v,
            vec![
                Violation::CostEquation { head: a, cost: Cost::from(3), expected: Cost::from(2) },
                Violation::NotMinimal { head: a, cost: Cost::from(3), minlen: Cost::from(2) },
            ]
        );
    }
}
