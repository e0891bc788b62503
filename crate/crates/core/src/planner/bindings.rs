use std::collections::HashMap;

use crate::datalog::{Atom, Const, Program, Rule, Term};

use super::normalize::pushing_literal;
use super::schema::BindingPattern;
use crate::datalog::PredicateGraph;

/// A value source inside a rule application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    /// A rule variable's slot.
    Local(u32),
    /// An interned constant.
    Const(u32),
}

/// Dense numbering of a rule's variables.
#[derive(Debug, Clone, Default)]
pub struct Locals {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Locals {
    pub fn of(rule: &Rule) -> Locals {
        let mut l = Locals::default();
        for v in rule.variables() {
            l.index.insert(v.to_string(), l.names.len() as u32);
            l.names.push(v.to_string());
        }
        l
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, var: &str) -> u32 {
        self.index[var]
    }

    pub fn name(&self, i: u32) -> &str {
        &self.names[i as usize]
    }
}

/// How one body literal is read: which columns are selected by constants,
/// which stored columns are keys, and what each returned value does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    /// Index of the literal in the rule body.
    pub literal: usize,
    /// Pattern over all argument positions; constants count as bound.
    pub full: BindingPattern,
    /// Constant columns.
    pub filters: Vec<(usize, Const)>,
    /// Pattern over the non-constant columns.
    pub pattern: BindingPattern,
    /// Locals supplying the key columns, in column order.
    pub key: Vec<u32>,
    /// `(value index, local)`: the value binds a variable's first occurrence.
    pub binds: Vec<(u32, u32)>,
    /// `(value index, local)`: the value must equal an already bound local
    /// (a variable repeated within this literal).
    pub checks: Vec<(u32, u32)>,
}

/// Marks the variables of `lit` bound, as when it is matched by an input fact.
pub fn bind_all(lit: &Atom, locals: &Locals, bound: &mut [bool]) {
    for v in lit.vars() {
        bound[locals.get(v) as usize] = true;
    }
}

/// Access shape of `lit` given the currently bound locals; updates `bound`.
///
/// A variable first seen in this literal is free at that column; a later
/// column of the same literal compares against it after the lookup.
pub fn access(literal: usize, lit: &Atom, locals: &Locals, bound: &mut [bool]) -> Access {
    let mut full = Vec::with_capacity(lit.arity());
    let mut filters = Vec::new();
    let mut pattern = Vec::new();
    let mut key = Vec::new();
    let mut values: Vec<u32> = Vec::new();
    for (col, t) in lit.args.iter().enumerate() {
        match t {
            Term::Const(c) => {
                full.push(true);
                filters.push((col, c.clone()));
            }
            Term::Var(v) => {
                let l = locals.get(v);
                let b = bound[l as usize];
                full.push(b);
                pattern.push(b);
                if b {
                    key.push(l);
                } else {
                    values.push(l);
                }
            }
        }
    }
    let mut binds = Vec::new();
    let mut checks = Vec::new();
    for (i, &l) in values.iter().enumerate() {
        if bound[l as usize] {
            checks.push((i as u32, l));
        } else {
            bound[l as usize] = true;
            binds.push((i as u32, l));
        }
    }
    Access {
        literal,
        full: BindingPattern(full),
        filters,
        pattern: BindingPattern(pattern),
        key,
        binds,
        checks,
    }
}

/// Join order for a rule body: `first` (bound by the incoming fact), then the
/// remaining literals left to right. Returns their accesses in that order.
pub fn join(rule: &Rule, first: Option<usize>, locals: &Locals) -> Vec<Access> {
    let mut bound = vec![false; locals.len()];
    if let Some(f) = first {
        bind_all(&rule.body[f], locals, &mut bound);
    }
    (0..rule.body.len())
        .filter(|&i| Some(i) != first)
        .map(|i| access(i, &rule.body[i], locals, &mut bound))
        .collect()
}

/// Binding pattern of every body literal as the push engine accesses it:
/// per rule (and per pushing literal when a rule has several), the literal
/// index and its full pattern. The pushing literal itself is all bound.
pub fn analyze_bindings(p: &Program, graph: &PredicateGraph) -> Vec<Vec<(usize, BindingPattern)>> {
    let mut out = Vec::new();
    for rule in &p.rules {
        let locals = Locals::of(rule);
        for first in pushing_literal(p, graph, rule) {
            let mut row: Vec<(usize, BindingPattern)> = Vec::new();
            if let Some(f) = first {
                row.push((f, BindingPattern::bound(rule.body[f].arity())));
            }
            row.extend(join(rule, first, &locals).into_iter().map(|a| (a.literal, a.full)));
            row.sort_by_key(|e| e.0);
            out.push(row);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{build_predicate_graph, parse_program};

    fn patterns(src: &str) -> Vec<Vec<String>> {
        let p = parse_program(src).unwrap();
        let g = build_predicate_graph(&p);
        analyze_bindings(&p, &g)
            .into_iter()
            .map(|r| r.into_iter().map(|(_, b)| b.to_string()).collect())
            .collect()
    }

    #[test]
    fn dblp_query() {
        let got = patterns(
            "answer(Id, T, A, Y, M) :- att(Id, title, T), att(Id, year, Y), att(Id, author, A), att(Id, month, M).",
        );
        assert_eq!(got, vec![vec!["fbf", "bbf", "bbf", "bbf"]]);
    }

    #[test]
    fn single_literal() {
        assert_eq!(patterns("a(X) :- b(X)."), vec![vec!["f"]]);
    }

    #[test]
    fn tc_recursive_rule() {
        let got = patterns("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).");
        assert_eq!(got, vec![vec!["ff"], vec!["fb", "bb"]]);
    }

    #[test]
    fn repeated_variable_in_one_literal() {
        let p = parse_program("a(X) :- e(X, X).").unwrap();
        let r = &p.rules[0];
        let l = Locals::of(r);
        let acc = join(r, None, &l);
        assert_eq!(acc[0].pattern.to_string(), "ff");
        assert_eq!(acc[0].binds, vec![(0, 0)]);
        assert_eq!(acc[0].checks, vec![(1, 0)]);
    }
}
