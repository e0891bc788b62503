use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::datalog::{Atom, Const, Pred, Program, Term};

pub type Facts = BTreeMap<Pred, BTreeSet<Vec<Const>>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no fixpoint after {0} iterations")]
pub struct IterationLimit(pub usize);

#[derive(Clone, Copy)]
enum Arg<'p> {
    Const(&'p Const),
    Var(usize),
}

struct Lit<'p> {
    pred: Pred,
    args: Vec<Arg<'p>>,
}

fn slots<'p>(atom: &'p Atom, vars: &mut Vec<&'p str>) -> Lit<'p> {
    let args = atom
        .args
        .iter()
        .map(|a| match a {
            Term::Const(c) => Arg::Const(c),
            Term::Var(x) => Arg::Var(vars.iter().position(|v| v == x).unwrap_or_else(|| {
                vars.push(x);
                vars.len() - 1
            })),
        })
        .collect();
    Lit {
        pred: atom.pred(),
        args,
    }
}

fn matches(lit: &Atom, t: &[Const], env: &mut HashMap<String, Const>) -> bool {
    for (a, v) in lit.args.iter().zip(t) {
        match a {
            Term::Const(c) if c != v => return false,
            Term::Const(_) => {}
            Term::Var(x) => match env.get(x) {
                Some(w) if w != v => return false,
                Some(_) => {}
                None => {
                    env.insert(x.clone(), v.clone());
                }
            },
        }
    }
    true
}

fn fire<'a>(body: &[Lit], all: &'a Facts, env: &mut [Option<&'a Const>], out: &mut dyn FnMut(&[Option<&'a Const>])) {
    let Some((lit, rest)) = body.split_first() else {
        out(env);
        return;
    };
    let Some(rel) = all.get(&lit.pred) else {
        return;
    };
    let mut bound = Vec::with_capacity(lit.args.len());
    for t in rel {
        let mut ok = true;
        for (a, v) in lit.args.iter().zip(t) {
            match *a {
                Arg::Const(c) => ok = c == v,
                Arg::Var(i) => match env[i] {
                    Some(w) => ok = w == v,
                    None => {
                        env[i] = Some(v);
                        bound.push(i);
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok {
            fire(rest, all, env, out);
        }
        for i in bound.drain(..) {
            env[i] = None;
        }
    }
}

/// Least model by repeated full rule application. `edb` holds the stored
/// facts; the program's own facts are added to it.
pub fn execute_naive(p: &Program, edb: &Facts, iteration_limit: usize) -> Result<Facts, IterationLimit> {
    let mut all: Facts = edb.clone();
    for f in &p.facts {
        let t = f.args.iter().map(|a| match a {
            Term::Const(c) => c.clone(),
            Term::Var(_) => unreachable!("facts are ground"),
        });
        all.entry(f.pred()).or_default().insert(t.collect());
    }
    for q in &p.idb {
        all.entry(q.clone()).or_default();
    }
    let rules: Vec<(Vec<Lit>, Lit, usize)> = p
        .rules
        .iter()
        .map(|r| {
            let mut vars = Vec::new();
            let body = r.body.iter().map(|a| slots(a, &mut vars)).collect();
            let head = slots(&r.head, &mut vars);
            (body, head, vars.len())
        })
        .collect();
    for i in 0.. {
        if i >= iteration_limit {
            return Err(IterationLimit(iteration_limit));
        }
        let mut new: Vec<(Pred, Vec<Const>)> = Vec::new();
        for (body, head, nvars) in &rules {
            let mut env = vec![None; *nvars];
            fire(body, &all, &mut env, &mut |env| {
                let t = head
                    .args
                    .iter()
                    .map(|a| match *a {
                        Arg::Const(c) => c.clone(),
                        Arg::Var(x) => env[x].expect("range restricted").clone(),
                    })
                    .collect();
                new.push((head.pred.clone(), t));
            });
        }
        let mut changed = false;
        for (q, t) in new {
            changed |= all.entry(q).or_default().insert(t);
        }
        if !changed {
            break;
        }
    }
    Ok(all.into_iter().filter(|(q, _)| p.idb.contains(q)).collect())
}

/// Tuples of the program's answer predicate that match its query.
pub fn select_answers(p: &Program, facts: &Facts) -> BTreeSet<Vec<Const>> {
    let (Some(pred), Some(goal)) = (&p.answer, &p.answer_goal) else {
        return BTreeSet::new();
    };
    let Some(rel) = facts.get(pred) else {
        return BTreeSet::new();
    };
    rel.iter()
        .filter(|t| matches(goal, t, &mut HashMap::new()))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn ints(rows: &[&[i64]]) -> BTreeSet<Vec<Const>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| Const::Int(v)).collect())
            .collect()
    }

    #[test]
    fn empty_edb() {
        let p = parse_program("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).").unwrap();
        let r = execute_naive(&p, &Facts::new(), 100).unwrap();
        assert!(r[&Pred::new("tc", 2)].is_empty());
    }

    #[test]
    fn single_rule() {
        let p = parse_program("a(X) :- e(X).\ne(1).\ne(2).\n?- a(X).").unwrap();
        let r = execute_naive(&p, &Facts::new(), 100).unwrap();
        assert_eq!(select_answers(&p, &r), ints(&[&[1], &[2]]));
    }

    #[test]
    fn limit_is_reported() {
        let p = parse_program("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).\npar(1,2).\npar(2,3).\npar(3,4).")
            .unwrap();
        assert_eq!(execute_naive(&p, &Facts::new(), 2), Err(IterationLimit(2)));
        assert_eq!(
            execute_naive(&p, &Facts::new(), 10).unwrap()[&Pred::new("tc", 2)].len(),
            6
        );
    }

    #[test]
    fn goal_with_repeated_variable() {
        let p = parse_program("t(X,Y) :- e(X,Y).\n?- t(X,X).\ne(1,1).\ne(1,2).").unwrap();
        let r = execute_naive(&p, &Facts::new(), 10).unwrap();
        assert_eq!(select_answers(&p, &r), ints(&[&[1, 1]]));
    }
}
