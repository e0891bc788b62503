use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::parser::{is_anonymous_var, Clause, ParseError, Parser};
use super::term::{Atom, Pred, Rule, Term};

/// Name of the result predicate synthesized for conjunctive or EDB queries.
pub const ANSWER: &str = "answer";

/// A parsed Datalog program.
///
/// `facts` holds the ground facts for EDB predicates found in the program
/// text. Ground facts for predicates that also have rules are kept as
/// body-less rules, so every IDB predicate is defined by rules only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub facts: Vec<Atom>,
    /// The query goal as written, if any.
    pub query: Option<Vec<Atom>>,
    /// The IDB predicate whose facts are the result.
    pub answer: Option<Pred>,
    /// Pattern the result facts must match (constants and repeated variables).
    pub answer_goal: Option<Atom>,
    /// Index of the synthesized answer rule, if the query was rewritten.
    pub synthesized_answer_rule: Option<usize>,
    pub edb: BTreeSet<Pred>,
    pub idb: BTreeSet<Pred>,
}

impl Program {
    /// Builds a program from rules, facts and an optional query goal.
    pub fn new(rules: Vec<Rule>, facts: Vec<Atom>, query: Option<Vec<Atom>>) -> Result<Program, ParseError> {
        let mut clauses: Vec<Clause> = rules
            .into_iter()
            .map(|r| Clause::Rule {
                head: r.head,
                body: r.body,
            })
            .collect();
        clauses.extend(facts.into_iter().map(|f| Clause::Rule {
            head: f,
            body: Vec::new(),
        }));
        if let Some(q) = query {
            clauses.push(Clause::Query(q));
        }
        Program::from_clauses(clauses)
    }

    fn from_clauses(clauses: Vec<Clause>) -> Result<Program, ParseError> {
        let mut query = None;
        let mut heads = BTreeSet::new();
        for c in &clauses {
            match c {
                Clause::Rule { head, body } if !body.is_empty() || !head.is_ground() => {
                    heads.insert(head.pred());
                }
                Clause::Query(goal) => query = Some(goal.clone()),
                _ => {}
            }
        }
        let mut rules = Vec::new();
        let mut facts = Vec::new();
        for c in clauses {
            if let Clause::Rule { head, body } = c {
                if body.is_empty() && head.is_ground() && !heads.contains(&head.pred()) {
                    facts.push(head);
                } else {
                    rules.push(Rule::new(head, body));
                }
            }
        }

        let mut program = Program {
            rules,
            facts,
            query: query.clone(),
            answer: None,
            answer_goal: None,
            synthesized_answer_rule: None,
            edb: BTreeSet::new(),
            idb: BTreeSet::new(),
        };
        program.reclassify();

        match query {
            Some(goal) => program.designate_query(goal)?,
            None => {
                let answer = program.idb.iter().find(|p| p.name == ANSWER).cloned();
                if let Some(pred) = answer {
                    let args = (0..pred.arity).map(|i| Term::var(format!("V{i}"))).collect();
                    program.answer_goal = Some(Atom::new(pred.name.clone(), args));
                    program.answer = Some(pred);
                }
            }
        }
        Ok(program)
    }

    fn designate_query(&mut self, goal: Vec<Atom>) -> Result<(), ParseError> {
        if let [atom] = goal.as_slice() {
            let pred = atom.pred();
            if self.idb.contains(&pred) {
                self.answer = Some(pred);
                self.answer_goal = Some(atom.clone());
                return Ok(());
            }
        }
        let mut vars: Vec<&str> = Vec::new();
        for v in goal.iter().flat_map(Atom::vars) {
            if !is_anonymous_var(v) && !vars.contains(&v) {
                vars.push(v);
            }
        }
        let head = Atom::new(ANSWER, vars.iter().map(|v| Term::var(*v)).collect());
        let pred = head.pred();
        if self.idb.iter().any(|p| p.name == ANSWER) {
            return Err(ParseError::AnswerConflict(pred.to_string()));
        }
        self.answer_goal = Some(head.clone());
        self.synthesized_answer_rule = Some(self.rules.len());
        self.rules.push(Rule::new(head, goal));
        self.answer = Some(pred);
        self.reclassify();
        Ok(())
    }

    fn reclassify(&mut self) {
        let (edb, idb) = classify(self);
        self.edb = edb;
        self.idb = idb;
    }

    pub fn is_idb(&self, pred: &Pred) -> bool {
        self.idb.contains(pred)
    }

    /// Rules in source order, without the synthesized answer rule.
    pub fn user_rules(&self) -> impl Iterator<Item = &Rule> {
        let skip = self.synthesized_answer_rule;
        self.rules
            .iter()
            .enumerate()
            .filter(move |(i, _)| Some(*i) != skip)
            .map(|(_, r)| r)
    }

    /// Every predicate mentioned anywhere, with the arities it is used at.
    pub fn predicate_names(&self) -> BTreeMap<&str, BTreeSet<usize>> {
        let mut out: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        let atoms = self
            .rules
            .iter()
            .flat_map(|r| std::iter::once(&r.head).chain(&r.body))
            .chain(&self.facts)
            .chain(self.query.iter().flatten());
        for a in atoms {
            out.entry(a.predicate.as_str()).or_default().insert(a.arity());
        }
        out
    }
}

fn classify(p: &Program) -> (BTreeSet<Pred>, BTreeSet<Pred>) {
    let idb: BTreeSet<Pred> = p.rules.iter().map(|r| r.head.pred()).collect();
    let edb = p
        .rules
        .iter()
        .flat_map(|r| r.body.iter())
        .chain(&p.facts)
        .chain(p.query.iter().flatten())
        .map(Atom::pred)
        .filter(|pred| !idb.contains(pred))
        .collect();
    (edb, idb)
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.user_rules() {
            writeln!(f, "{r}")?;
        }
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        if let Some(goal) = &self.query {
            f.write_str("?- ")?;
            for (i, a) in goal.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            writeln!(f, ".")?;
        }
        Ok(())
    }
}

/// Parses program text. Identifiers are kept verbatim; quotes are stripped.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut parser = Parser::new(text)?;
    let mut clauses = Vec::new();
    let mut seen_query = false;
    while !parser.at_eof() {
        let span = parser.span();
        let clause = parser.clause()?;
        if matches!(clause, Clause::Query(_)) {
            if seen_query {
                return Err(ParseError::DuplicateQuery {
                    line: span.line,
                    column: span.column,
                });
            }
            seen_query = true;
        }
        clauses.push(clause);
    }
    Program::from_clauses(clauses)
}

/// A head variable that does not occur in the rule body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeViolation {
    pub rule: usize,
    pub variable: String,
}

/// Lists every head variable that is not bound by the body, once per rule.
pub fn check_range_restriction(p: &Program) -> Vec<RangeViolation> {
    let mut out = Vec::new();
    for (i, rule) in p.rules.iter().enumerate() {
        let body: BTreeSet<&str> = rule.body.iter().flat_map(Atom::vars).collect();
        let mut reported = BTreeSet::new();
        for v in rule.head.vars() {
            if !body.contains(v) && reported.insert(v) {
                out.push(RangeViolation {
                    rule: i,
                    variable: v.to_string(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("predicate `{name}` is used with inconsistent arities {arities:?}")]
    InconsistentArity { name: String, arities: Vec<usize> },
}

/// Splits the predicates into EDB (facts only) and IDB (defined by rules).
///
/// Rejects programs that use one predicate name at several arities.
pub fn classify_predicates(p: &Program) -> Result<(BTreeSet<Pred>, BTreeSet<Pred>), ClassifyError> {
    for (name, arities) in p.predicate_names() {
        if arities.len() > 1 {
            return Err(ClassifyError::InconsistentArity {
                name: name.to_string(),
                arities: arities.into_iter().collect(),
            });
        }
    }
    Ok(classify(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse_program("a(X) :- b(X).").unwrap();
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.idb, BTreeSet::from([Pred::new("a", 1)]));
        assert_eq!(p.edb, BTreeSet::from([Pred::new("b", 1)]));
        assert_eq!(p.answer, None);
    }

    #[test]
    fn duplicate_query_rejected() {
        let err = parse_program("?- a(X).\n?- a(Y).").unwrap_err();
        assert_eq!(err, ParseError::DuplicateQuery { line: 2, column: 1 });
    }

    #[test]
    fn range_restriction() {
        let p = parse_program("a(X,Y) :- b(X).").unwrap();
        assert_eq!(
            check_range_restriction(&p),
            vec![RangeViolation {
                rule: 0,
                variable: "Y".into()
            }]
        );
        let p = parse_program("a(X) :- b(X).").unwrap();
        assert!(check_range_restriction(&p).is_empty());
        let p = parse_program("a(Y, Y) :- b(X).").unwrap();
        assert_eq!(check_range_restriction(&p).len(), 1);
    }

    #[test]
    fn self_recursive_only() {
        let p = parse_program("p(X) :- p(X).").unwrap();
        let (edb, idb) = classify_predicates(&p).unwrap();
        assert!(edb.is_empty());
        assert_eq!(idb, BTreeSet::from([Pred::new("p", 1)]));
    }

    #[test]
    fn inconsistent_arity() {
        let p = parse_program("p(X) :- q(X). r(X) :- q(X, X).").unwrap();
        assert!(classify_predicates(&p).is_err());
    }

    #[test]
    fn conjunctive_query_is_wrapped() {
        let p = parse_program("e(1,2).\n?- e(X, Y), e(Y, _).").unwrap();
        assert_eq!(p.answer, Some(Pred::new(ANSWER, 2)));
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.rules[0].to_string(), "answer(X, Y) :- e(X, Y), e(Y, _0).");
        assert_eq!(p.facts.len(), 1);
        // printing omits the synthesized rule
        assert_eq!(p.to_string(), "e(1, 2).\n?- e(X, Y), e(Y, _0).\n");
    }

    #[test]
    fn single_idb_goal_designates_predicate() {
        let p = parse_program("tc(X,Y) :- par(X,Y).\n?- tc(1, A).").unwrap();
        assert_eq!(p.answer, Some(Pred::new("tc", 2)));
        assert_eq!(p.rules.len(), 1);
    }

    #[test]
    fn ground_facts_of_idb_predicates_become_rules() {
        let p = parse_program("p(1). p(X) :- q(X). q(2).").unwrap();
        assert_eq!(p.rules.len(), 2);
        assert_eq!(p.facts.len(), 1);
        assert!(p.idb.contains(&Pred::new("p", 1)));
        assert!(p.edb.contains(&Pred::new("q", 1)));
    }

    #[test]
    fn answer_rule_without_query() {
        let p = parse_program("answer(X) :- e(X).").unwrap();
        assert_eq!(p.answer, Some(Pred::new("answer", 1)));
    }
}
