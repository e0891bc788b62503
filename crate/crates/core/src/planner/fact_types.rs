use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::datalog::{Pred, Program, Term};

use super::bindings::Operand;
use super::normalize::{Normalized, RuleVariant};
use super::schema::Schema;

/// Argument of a fact type: a known constant or a register. Registers are
/// numbered by first occurrence, so equal fact types compare equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FtArg {
    Const(u32),
    Reg(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactType {
    pub pred: Pred,
    pub args: Vec<FtArg>,
}

impl FactType {
    /// `p(r0, ..., rn-1)`.
    pub fn general(pred: &Pred) -> FactType {
        FactType {
            pred: pred.clone(),
            args: (0..pred.arity as u32).map(FtArg::Reg).collect(),
        }
    }

    /// Number of distinct registers.
    pub fn registers(&self) -> usize {
        self.args
            .iter()
            .filter_map(|a| match a {
                FtArg::Reg(r) => Some(*r as usize + 1),
                FtArg::Const(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Renders constants through `schema`'s tables.
    pub fn display<'a>(&'a self, schema: &'a Schema) -> impl fmt::Display + 'a {
        FtDisplay { ft: self, schema }
    }
}

struct FtDisplay<'a> {
    ft: &'a FactType,
    schema: &'a Schema,
}

impl fmt::Display for FtDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.ft.pred.name)?;
        for (i, a) in self.ft.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match a {
                FtArg::Reg(r) => write!(f, "r{r}")?,
                FtArg::Const(c) => {
                    let d = self.schema.domain(&self.ft.pred, i);
                    f.write_str(self.schema.tables[d].resolve(*c).unwrap_or("?"))?;
                }
            }
        }
        f.write_str(")")
    }
}

/// Value source at the start of an application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Src {
    /// Register of the input fact type (fact-type local numbering).
    Reg(u32),
    Const(u32),
}

/// Binds the pushing literal to an incoming fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputOp {
    Load { local: u32, src: Src },
    Check { src: Src, against: Operand },
}

/// Result of firing a rule variant on an input fact type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub input_ops: Vec<InputOp>,
    pub output: FactType,
    /// `(output register, source)` written before control passes on.
    pub writes: Vec<(u32, Operand)>,
    /// Full head tuple, used for duplicate checks and answers.
    pub head: Vec<Operand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Abs {
    Const(u32),
    Input(u32),
    Fresh(u32),
}

/// Which fact-type construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactTypeMode {
    Simple,
    Pe,
}

/// Abstractly fires `v` on `input` (`None` for rules without a pushing
/// literal). Returns `None` if the pushing literal cannot match the input.
pub fn apply(
    p: &Program,
    schema: &Schema,
    v: &RuleVariant,
    input: Option<&FactType>,
    mode: FactTypeMode,
) -> Option<Applied> {
    let rule = &p.rules[v.rule];
    let mut abs: Vec<Option<Abs>> = vec![None; v.locals.len()];
    let mut ops = Vec::new();
    if let (Some(li), Some(ft)) = (v.input, input) {
        let lit = &rule.body[li];
        if lit.pred() != ft.pred {
            return None;
        }
        for (i, t) in lit.args.iter().enumerate() {
            let (src, known) = match ft.args[i] {
                FtArg::Const(c) => (Src::Const(c), Abs::Const(c)),
                FtArg::Reg(r) => (Src::Reg(r), Abs::Input(r)),
            };
            match t {
                Term::Const(k) => {
                    let k = schema.const_id(&ft.pred, i, k);
                    match src {
                        Src::Const(c) if c != k => return None,
                        Src::Const(_) => {}
                        Src::Reg(_) => ops.push(InputOp::Check {
                            src,
                            against: Operand::Const(k),
                        }),
                    }
                }
                Term::Var(x) => {
                    let l = v.locals.get(x);
                    match abs[l as usize] {
                        None => {
                            abs[l as usize] = Some(known);
                            ops.push(InputOp::Load { local: l, src });
                        }
                        Some(Abs::Const(c1)) if matches!(known, Abs::Const(_)) => {
                            if Abs::Const(c1) != known {
                                return None;
                            }
                        }
                        Some(Abs::Input(r1)) if known == Abs::Input(r1) => {}
                        Some(_) => ops.push(InputOp::Check {
                            src,
                            against: Operand::Local(l),
                        }),
                    }
                }
            }
        }
    } else if v.input.is_some() != input.is_some() {
        return None;
    }
    for a in &v.accesses {
        for &(_, l) in &a.binds {
            abs[l as usize] = Some(Abs::Fresh(l));
        }
    }

    let hp = rule.head.pred();
    let head: Vec<Operand> = rule
        .head
        .args
        .iter()
        .enumerate()
        .map(|(i, t)| match t {
            Term::Const(k) => Operand::Const(schema.const_id(&hp, i, k)),
            Term::Var(x) => Operand::Local(v.locals.get(x)),
        })
        .collect();

    let (output, writes) = match mode {
        FactTypeMode::Simple => (
            FactType::general(&hp),
            head.iter().enumerate().map(|(i, &o)| (i as u32, o)).collect(),
        ),
        FactTypeMode::Pe => {
            let mut classes: Vec<Abs> = Vec::new();
            let mut writes = Vec::new();
            let args = rule
                .head
                .args
                .iter()
                .zip(&head)
                .map(|(t, &op)| {
                    let a = match t {
                        Term::Const(_) => None,
                        Term::Var(x) => abs[v.locals.get(x) as usize],
                    };
                    match (a, op) {
                        (None, Operand::Const(k)) | (Some(Abs::Const(k)), _) => FtArg::Const(k),
                        (Some(key), _) => match classes.iter().position(|&c| c == key) {
                            Some(r) => FtArg::Reg(r as u32),
                            None => {
                                classes.push(key);
                                let r = (classes.len() - 1) as u32;
                                writes.push((r, op));
                                FtArg::Reg(r)
                            }
                        },
                        (None, Operand::Local(_)) => unreachable!("range restriction"),
                    }
                })
                .collect();
            (FactType { pred: hp, args }, writes)
        }
    };
    Some(Applied {
        input_ops: ops,
        output,
        writes,
        head,
    })
}

/// One fact type per IDB predicate, with a register per argument.
pub fn compute_fact_types_simple(p: &Program) -> Vec<FactType> {
    p.idb.iter().map(FactType::general).collect()
}

/// The partial-evaluation fact types grew past the guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplosionSignal {
    pub guard: usize,
    pub reached: usize,
}

/// Fixpoint of abstract rule application starting from the rules without a
/// pushing literal. Predicates that never receive a fact type get the general
/// one so every rule still has an application.
pub fn compute_fact_types_pe(
    p: &Program,
    schema: &Schema,
    n: &Normalized,
    guard: usize,
) -> Result<Vec<FactType>, ExplosionSignal> {
    let mut fts: Vec<FactType> = Vec::new();
    let mut seen: HashMap<FactType, usize> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut add = |ft: FactType, fts: &mut Vec<FactType>, queue: &mut VecDeque<usize>| -> Result<(), ExplosionSignal> {
        if seen.contains_key(&ft) {
            return Ok(());
        }
        seen.insert(ft.clone(), fts.len());
        queue.push_back(fts.len());
        fts.push(ft);
        if fts.len() > guard {
            return Err(ExplosionSignal {
                guard,
                reached: fts.len(),
            });
        }
        Ok(())
    };
    let by_pred = |pred: &Pred| -> Vec<&RuleVariant> {
        n.variants
            .iter()
            .filter(|v| v.input.is_some_and(|i| p.rules[v.rule].body[i].pred() == *pred))
            .collect()
    };

    for v in n.variants.iter().filter(|v| v.input.is_none()) {
        if let Some(a) = apply(p, schema, v, None, FactTypeMode::Pe) {
            add(a.output, &mut fts, &mut queue)?;
        }
    }
    let mut pending_general = p.idb.iter();
    loop {
        while let Some(f) = queue.pop_front() {
            let ft = fts[f].clone();
            for v in by_pred(&ft.pred) {
                if let Some(a) = apply(p, schema, v, Some(&ft), FactTypeMode::Pe) {
                    add(a.output, &mut fts, &mut queue)?;
                }
            }
        }
        let missing = pending_general.find(|pred| !fts.iter().any(|f| &f.pred == *pred));
        match missing {
            Some(pred) => add(FactType::general(pred), &mut fts, &mut queue)?,
            None => break,
        }
    }
    Ok(fts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{build_predicate_graph, parse_program};
    use crate::planner::normalize::normalize_rules;

    fn pe(src: &str, guard: usize) -> (Result<Vec<FactType>, ExplosionSignal>, Schema) {
        let p = parse_program(src).unwrap();
        let g = build_predicate_graph(&p);
        let mut s = Schema::new(&p);
        let n = normalize_rules(&p, &g, &mut s);
        (compute_fact_types_pe(&p, &s, &n, guard), s)
    }

    #[test]
    fn single_edb_rule() {
        let (fts, _) = pe("a(X) :- e(X).", 100);
        assert_eq!(fts.unwrap(), vec![FactType::general(&Pred::new("a", 1))]);
    }

    #[test]
    fn tc_bf_keeps_head_constant() {
        let (fts, s) = pe(
            "p1(A) :- p1(B), par(B,A).\np1(A) :- par(1,A).\np0(A) :- p1(B), par(B,A).\np0(A) :- par(1,A).\ntc(1,A) :- p0(A).\n?- tc(1,A).",
            100,
        );
        let shown: Vec<String> = fts.unwrap().iter().map(|f| f.display(&s).to_string()).collect();
        assert_eq!(shown, vec!["p1(r0)", "p0(r0)", "tc(1,r0)"]);
    }

    #[test]
    fn guard_trips() {
        let (fts, _) = pe("p(X, c) :- e(X).\np(X, d) :- e(X).\nq(Y, X) :- p(X, Y).", 2);
        assert_eq!(fts.unwrap_err(), ExplosionSignal { guard: 2, reached: 3 });
    }

    #[test]
    fn repeated_head_variable() {
        let (fts, _) = pe("p(X, X) :- e(X).", 10);
        assert_eq!(fts.unwrap()[0].args, vec![FtArg::Reg(0), FtArg::Reg(0)]);
    }

    #[test]
    fn underivable_predicate_gets_general_type() {
        let (fts, _) = pe("p(X) :- p(X).", 10);
        assert_eq!(fts.unwrap(), vec![FactType::general(&Pred::new("p", 1))]);
    }
}
