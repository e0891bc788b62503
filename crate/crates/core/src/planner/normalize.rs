use crate::datalog::{Atom, PredicateGraph, Program, Rule, Term};

use super::bindings::{join, Access, Locals};
use super::schema::{RelDesc, Schema};

/// Where a non-pushing body literal is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Index into `Schema::edb`.
    Edb(usize),
    /// Index into `Normalized::temps`.
    Temp(usize),
}

/// One way of firing a rule: an optional pushing IDB literal, and every other
/// literal read from a stored relation in join order.
#[derive(Debug, Clone)]
pub struct RuleVariant {
    pub rule: usize,
    pub input: Option<usize>,
    pub accesses: Vec<Access>,
    pub sources: Vec<Source>,
    /// Clique whose completion the temporary relations read here require;
    /// facts arriving earlier are held back until then.
    pub ready_stage: Option<usize>,
    pub locals: Locals,
}

/// Rules with at most one pushing IDB literal each, plus the temporary
/// relations that hold the other IDB literals.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub variants: Vec<RuleVariant>,
    pub temps: Vec<RelDesc>,
}

/// Candidate pushing literals of a rule: `[None]` without IDB literals;
/// otherwise the IDB literals of the latest clique. With one candidate the
/// others are materialized; with several, the rule gets one variant per
/// candidate and each variant reads the others from temporaries.
pub fn pushing_literal(p: &Program, graph: &PredicateGraph, rule: &Rule) -> Vec<Option<usize>> {
    let idb: Vec<(usize, usize)> = rule
        .body
        .iter()
        .enumerate()
        .filter(|(_, a)| p.is_idb(&a.pred()))
        .map(|(i, a)| (i, graph.clique_of(&a.pred()).unwrap_or(0)))
        .collect();
    let Some(latest) = idb.iter().map(|e| e.1).max() else {
        return vec![None];
    };
    idb.iter().filter(|e| e.1 == latest).map(|e| Some(e.0)).collect()
}

/// Splits every rule into variants with at most one pushing IDB literal and
/// registers the EDB descriptors and temporary relations they read.
pub fn normalize_rules(p: &Program, graph: &PredicateGraph, schema: &mut Schema) -> Normalized {
    let mut out = Normalized {
        variants: Vec::new(),
        temps: Vec::new(),
    };
    for (ri, rule) in p.rules.iter().enumerate() {
        let locals = Locals::of(rule);
        let head_clique = graph.clique_of(&rule.head.pred());
        for input in pushing_literal(p, graph, rule) {
            let accesses = join(rule, input, &locals);
            let mut sources = Vec::with_capacity(accesses.len());
            let mut ready: Option<usize> = None;
            for a in &accesses {
                let lit = &rule.body[a.literal];
                let pred = lit.pred();
                if p.is_idb(&pred) {
                    let desc = schema.describe(&pred, &a.filters, &a.pattern);
                    let t = match out.temps.iter().position(|d| *d == desc) {
                        Some(t) => t,
                        None => {
                            out.temps.push(desc);
                            out.temps.len() - 1
                        }
                    };
                    sources.push(Source::Temp(t));
                    let c = graph.clique_of(&pred);
                    let input_clique = input.and_then(|i| graph.clique_of(&rule.body[i].pred()));
                    if c != input_clique {
                        ready = ready.max(c);
                    }
                } else {
                    sources.push(Source::Edb(schema.request_edb(&pred, &a.filters, &a.pattern)));
                }
            }
            debug_assert!(ready.is_none() || ready < head_clique);
            out.variants.push(RuleVariant {
                rule: ri,
                input,
                accesses,
                sources,
                ready_stage: ready,
                locals: locals.clone(),
            });
        }
    }
    out
}

impl Normalized {
    /// The normalized program as Datalog text: each temporary relation
    /// becomes a predicate `<name>__tmp` filled by a copy rule, and every
    /// variant reads it in place of the materialized literal.
    pub fn as_program(&self, p: &Program) -> Program {
        let mut rules = Vec::new();
        let temp_pred = |t: usize| format!("{}__tmp", self.temps[t].name);
        for (t, d) in self.temps.iter().enumerate() {
            let args: Vec<Term> = (0..d.pred.arity).map(|i| Term::var(format!("V{i}"))).collect();
            rules.push(Rule::new(
                Atom::new(temp_pred(t), args.clone()),
                vec![Atom::new(d.pred.name.clone(), args)],
            ));
        }
        for v in &self.variants {
            let rule = &p.rules[v.rule];
            let mut body = rule.body.clone();
            for (a, s) in v.accesses.iter().zip(&v.sources) {
                if let Source::Temp(t) = s {
                    body[a.literal].predicate = temp_pred(*t);
                }
            }
            rules.push(Rule::new(rule.head.clone(), body));
        }
        let mut out = p.clone();
        out.rules = rules;
        out.synthesized_answer_rule = None;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{build_predicate_graph, parse_program};

    const JOIN1: &str = "a(X, Y) :- b1(X, Z), b2(Z, Y).\n\
        b1(X, Y) :- c1(X, Z), c2(Z, Y).\n\
        b2(X, Y) :- c3(X, Z), c4(Z, Y).\n\
        c1(X, Y) :- d1(X, Z), d2(Z, Y).";

    #[test]
    fn join1_materializes_b1_as_fb_map() {
        let p = parse_program(JOIN1).unwrap();
        let g = build_predicate_graph(&p);
        let mut s = Schema::new(&p);
        let n = normalize_rules(&p, &g, &mut s);
        assert_eq!(n.variants.len(), 4);
        assert_eq!(n.variants[0].input, Some(1));
        assert_eq!(n.temps.len(), 1);
        assert_eq!(n.temps[0].name, "b1_fb");
        assert_eq!(
            n.variants[0].ready_stage,
            g.clique_of(&crate::datalog::Pred::new("b1", 2))
        );
        let mut names: Vec<_> = s.edb.iter().map(|d| d.name.as_str()).collect();
        names.sort();
        assert_eq!(names, vec!["c2_bf", "c3_ff", "c4_bf", "d1_ff", "d2_bf"]);
    }

    #[test]
    fn single_idb_literal_is_unchanged() {
        let p = parse_program("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).").unwrap();
        let g = build_predicate_graph(&p);
        let mut s = Schema::new(&p);
        let n = normalize_rules(&p, &g, &mut s);
        assert!(n.temps.is_empty());
        assert_eq!(n.variants.len(), 2);
        assert_eq!(n.variants[1].input, Some(1));
        assert_eq!(
            s.edb.iter().map(|d| d.name.as_str()).collect::<Vec<_>>(),
            vec!["par_ff", "par_fb"]
        );
    }

    #[test]
    fn nonlinear_rule_gets_symmetric_variants() {
        let p = parse_program("t(X,Y) :- e(X,Y).\nt(X,Y) :- t(X,Z), t(Z,Y).").unwrap();
        let g = build_predicate_graph(&p);
        let mut s = Schema::new(&p);
        let n = normalize_rules(&p, &g, &mut s);
        assert_eq!(n.variants.len(), 3);
        let names: Vec<_> = n.temps.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["t_bf", "t_fb"]);
        assert!(n.variants.iter().all(|v| v.ready_stage.is_none()));
    }

    #[test]
    fn three_idb_literals_two_temps() {
        let p = parse_program("p(X) :- e(X).\nq(X) :- p(X).\nr(X,Y) :- f(X,Y).\ns(X) :- p(X), q(X), r(X,Y).").unwrap();
        let g = build_predicate_graph(&p);
        let mut s = Schema::new(&p);
        let n = normalize_rules(&p, &g, &mut s);
        let v = n.variants.iter().find(|v| v.rule == 3).unwrap();
        assert_eq!(v.sources.iter().filter(|s| matches!(s, Source::Temp(_))).count(), 2);
    }
}
