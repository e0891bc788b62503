use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use crate::datalog::{
    build_predicate_graph, check_range_restriction, classify_predicates, Const, Pred, PredicateGraph, Program, Term,
};
use crate::planner::{join, Locals, Operand, PlanError, Schema, SetChoice};
use crate::runtime::{Database, ExecError, Stored};
use crate::storage::{ListRelation, MapCursor, MapRelation, SetRelation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    /// Rows before the current delta.
    Old,
    /// Rows up to the end of the current delta.
    Full,
    /// Every row (lower cliques are complete).
    All,
}

#[derive(Debug, Clone)]
enum Src {
    Edb(usize),
    Idb {
        pred: usize,
        /// Index over the key columns; `None` scans the rows.
        index: Option<usize>,
        filters: Vec<(usize, u32)>,
        bound: Bound,
    },
}

#[derive(Debug, Clone)]
struct SnStep {
    src: Src,
    key: Vec<u32>,
    /// Full-tuple column of each value index (IDB sources only).
    val_cols: Vec<usize>,
    binds: Vec<(u32, u32)>,
    checks: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Copy)]
enum DeltaOp {
    Bind(usize, u32),
    Check(usize, u32),
    Const(usize, u32),
}

#[derive(Debug, Clone)]
struct Variant {
    delta: Option<(usize, Vec<DeltaOp>)>,
    steps: Vec<SnStep>,
    head_pred: usize,
    head: Vec<Operand>,
    locals: usize,
}

#[derive(Debug, Clone)]
struct IdbIndex {
    pred: usize,
    filters: Vec<(usize, u32)>,
    key_cols: Vec<usize>,
}

/// Compiled form of a program for delta iteration.
#[derive(Debug, Clone)]
pub struct SeminaivePlan {
    pub program: Program,
    pub schema: Schema,
    pub graph: PredicateGraph,
    pub set_impl: SetChoice,
    preds: Vec<Pred>,
    /// Per clique: variants run once, then delta variants.
    base: Vec<Vec<Variant>>,
    deltas: Vec<Vec<Variant>>,
    indexes: Vec<IdbIndex>,
}

/// Builds the seminaive rule variants and registers the EDB access shapes.
pub fn plan_seminaive(p: &Program, set_impl: SetChoice) -> Result<SeminaivePlan, PlanError> {
    classify_predicates(p)?;
    let violations = check_range_restriction(p);
    if !violations.is_empty() {
        return Err(PlanError::RangeRestriction(violations));
    }
    let graph = build_predicate_graph(p);
    let mut schema = Schema::new(p);
    let preds: Vec<Pred> = p.idb.iter().cloned().collect();
    let pidx: HashMap<Pred, usize> = preds.iter().enumerate().map(|(i, q)| (q.clone(), i)).collect();
    let mut indexes: Vec<IdbIndex> = Vec::new();
    let mut base = vec![Vec::new(); graph.cliques.len()];
    let mut deltas = vec![Vec::new(); graph.cliques.len()];

    for rule in &p.rules {
        let locals = Locals::of(rule);
        let hp = rule.head.pred();
        let hc = graph.clique_of(&hp).unwrap_or(0);
        let same: Vec<usize> = (0..rule.body.len())
            .filter(|&i| p.is_idb(&rule.body[i].pred()) && graph.clique_of(&rule.body[i].pred()) == Some(hc))
            .collect();
        let head: Vec<Operand> = rule
            .head
            .args
            .iter()
            .enumerate()
            .map(|(i, t)| match t {
                Term::Const(c) => Operand::Const(schema.const_id(&hp, i, c)),
                Term::Var(v) => Operand::Local(locals.get(v)),
            })
            .collect();
        let firsts: Vec<Option<usize>> = if same.is_empty() {
            vec![None]
        } else {
            same.iter().map(|&d| Some(d)).collect()
        };
        for first in firsts {
            let mut steps = Vec::new();
            for acc in join(rule, first, &locals) {
                let lit = &rule.body[acc.literal];
                let pred = lit.pred();
                if p.is_idb(&pred) {
                    let d = schema.describe(&pred, &acc.filters, &acc.pattern);
                    let bound = if !same.contains(&acc.literal) {
                        Bound::All
                    } else if Some(acc.literal) < first {
                        Bound::Old
                    } else {
                        Bound::Full
                    };
                    let key_cols: Vec<usize> = d.key_positions().iter().map(|&i| d.columns[i]).collect();
                    let index = if key_cols.is_empty() {
                        None
                    } else {
                        let ix = IdbIndex {
                            pred: pidx[&pred],
                            filters: d.filters.clone(),
                            key_cols,
                        };
                        Some(
                            match indexes
                                .iter()
                                .position(|e| e.pred == ix.pred && e.filters == ix.filters && e.key_cols == ix.key_cols)
                            {
                                Some(i) => i,
                                None => {
                                    indexes.push(ix);
                                    indexes.len() - 1
                                }
                            },
                        )
                    };
                    steps.push(SnStep {
                        src: Src::Idb {
                            pred: pidx[&pred],
                            index,
                            filters: d.filters.clone(),
                            bound,
                        },
                        key: acc.key.clone(),
                        val_cols: d.value_positions().iter().map(|&i| d.columns[i]).collect(),
                        binds: acc.binds.clone(),
                        checks: acc.checks.clone(),
                    });
                    continue;
                }
                steps.push(SnStep {
                    src: Src::Edb(schema.request_edb(&pred, &acc.filters, &acc.pattern)),
                    key: acc.key,
                    val_cols: Vec::new(),
                    binds: acc.binds,
                    checks: acc.checks,
                });
            }
            let delta = first.map(|d| {
                let lit = &rule.body[d];
                let mut seen = vec![false; locals.len()];
                let ops = lit
                    .args
                    .iter()
                    .enumerate()
                    .map(|(c, t)| match t {
                        Term::Const(k) => DeltaOp::Const(c, schema.const_id(&lit.pred(), c, k)),
                        Term::Var(v) => {
                            let l = locals.get(v);
                            if std::mem::replace(&mut seen[l as usize], true) {
                                DeltaOp::Check(c, l)
                            } else {
                                DeltaOp::Bind(c, l)
                            }
                        }
                    })
                    .collect();
                (pidx[&lit.pred()], ops)
            });
            let v = Variant {
                delta,
                steps,
                head_pred: pidx[&hp],
                head: head.clone(),
                locals: locals.len(),
            };
            if first.is_none() {
                base[hc].push(v);
            } else {
                deltas[hc].push(v);
            }
        }
    }
    Ok(SeminaivePlan {
        program: p.clone(),
        schema,
        graph,
        set_impl,
        preds,
        base,
        deltas,
        indexes,
    })
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct SeminaiveStats {
    pub derivations: u64,
    pub facts: u64,
    pub duplicates: u64,
    pub iterations: u64,
    pub answers: u64,
    pub millis: f64,
}

// Answer predicate index, (column, constant) checks, equal column pairs.
type AnswerFilter = (usize, Vec<(usize, u32)>, Vec<(usize, usize)>);

/// Every IDB relation after the fixpoint.
#[derive(Debug, Clone)]
pub struct SeminaiveResult {
    pub stats: SeminaiveStats,
    preds: Vec<Pred>,
    lists: Vec<ListRelation>,
    answer: Option<AnswerFilter>,
}

impl SeminaiveResult {
    pub fn relation(&self, pred: &Pred) -> Option<&ListRelation> {
        self.preds.iter().position(|p| p == pred).map(|i| &self.lists[i])
    }

    pub fn idb_facts(&self, db: &Database) -> BTreeMap<Pred, BTreeSet<Vec<Const>>> {
        self.preds
            .iter()
            .zip(&self.lists)
            .map(|(p, l)| (p.clone(), l.iter().map(|t| db.decode(p, t)).collect()))
            .collect()
    }

    /// Tuples of the answer predicate matching the query, in derivation order.
    pub fn answer_rows(&self) -> Vec<&[u32]> {
        let Some((pi, consts, equal)) = &self.answer else {
            return Vec::new();
        };
        self.lists[*pi]
            .iter()
            .filter(|t| consts.iter().all(|&(c, v)| t[c] == v) && equal.iter().all(|&(a, b)| t[a] == t[b]))
            .collect()
    }

    pub fn answer_tuples(&self, db: &Database) -> Vec<Vec<Const>> {
        let Some((pi, ..)) = &self.answer else {
            return Vec::new();
        };
        self.answer_rows()
            .into_iter()
            .map(|t| db.decode(&self.preds[*pi], t))
            .collect()
    }
}

struct State<'a> {
    edb: &'a [Stored],
    lists: Vec<ListRelation>,
    index: Vec<MapRelation>,
    /// Per predicate `(delta start, delta end)`.
    delta: Vec<(usize, usize)>,
}

struct Sink {
    dups: Vec<SetRelation>,
    pending: Vec<(usize, Vec<u32>)>,
    head: Vec<u32>,
    derivations: u64,
    duplicates: u64,
    error: Option<crate::storage::StorageError>,
}

impl State<'_> {
    fn limit(&self, pred: usize, bound: Bound) -> usize {
        match bound {
            Bound::Old => self.delta[pred].0,
            Bound::Full => self.delta[pred].1,
            Bound::All => self.lists[pred].len(),
        }
    }

    fn eval(&self, v: &Variant, k: usize, env: &mut [u32], key: &mut Vec<u32>, sink: &mut Sink) {
        if k == v.steps.len() {
            sink.head.clear();
            sink.head.extend(v.head.iter().map(|&op| match op {
                Operand::Local(l) => env[l as usize],
                Operand::Const(c) => c,
            }));
            sink.derivations += 1;
            match sink.dups[v.head_pred].insert_if_new(&sink.head) {
                Ok(true) => sink.pending.push((v.head_pred, sink.head.clone())),
                Ok(false) => sink.duplicates += 1,
                Err(e) => sink.error = Some(e),
            }
            return;
        }
        let step = &v.steps[k];
        key.clear();
        key.extend(step.key.iter().map(|&l| env[l as usize]));
        match &step.src {
            Src::Edb(e) => {
                let rel = &self.edb[*e];
                let mut cur = [0u32; 3];
                rel.open(key, &mut cur);
                while let Some(vals) = rel.fetch(&mut cur) {
                    for &(vi, l) in &step.binds {
                        env[l as usize] = vals[vi as usize];
                    }
                    if step.checks.iter().all(|&(vi, l)| vals[vi as usize] == env[l as usize]) {
                        self.eval(v, k + 1, env, key, sink);
                    }
                }
            }
            Src::Idb {
                pred,
                index,
                filters,
                bound,
            } => {
                let limit = self.limit(*pred, *bound);
                let list = &self.lists[*pred];
                let visit = |row: usize, env: &mut [u32], key: &mut Vec<u32>, sink: &mut Sink| {
                    let t = list.get(row);
                    for &(vi, l) in &step.binds {
                        env[l as usize] = t[step.val_cols[vi as usize]];
                    }
                    if step
                        .checks
                        .iter()
                        .all(|&(vi, l)| t[step.val_cols[vi as usize]] == env[l as usize])
                    {
                        self.eval(v, k + 1, env, key, sink);
                    }
                };
                match index {
                    Some(ix) => {
                        let map = &self.index[*ix];
                        let mut c: MapCursor = map.cursor_for(key);
                        while let Some(r) = map.next(&mut c) {
                            let row = r[0] as usize;
                            if row >= limit {
                                break;
                            }
                            visit(row, env, key, sink);
                        }
                    }
                    None => {
                        for row in 0..limit {
                            let t = list.get(row);
                            if filters.iter().all(|&(c, x)| t[c] == x) {
                                visit(row, env, key, sink);
                            }
                        }
                    }
                }
            }
        }
    }

    fn run(&self, v: &Variant, env: &mut [u32], key: &mut Vec<u32>, sink: &mut Sink) {
        let Some((pred, ops)) = &v.delta else {
            self.eval(v, 0, env, key, sink);
            return;
        };
        let (lo, hi) = self.delta[*pred];
        'rows: for row in lo..hi {
            let t = self.lists[*pred].get(row);
            for op in ops {
                match *op {
                    DeltaOp::Bind(c, l) => env[l as usize] = t[c],
                    DeltaOp::Check(c, l) => {
                        if t[c] != env[l as usize] {
                            continue 'rows;
                        }
                    }
                    DeltaOp::Const(c, x) => {
                        if t[c] != x {
                            continue 'rows;
                        }
                    }
                }
            }
            self.eval(v, 0, env, key, sink);
        }
    }

    fn append(&mut self, indexes: &[IdbIndex], pred: usize, t: &[u32]) {
        let row = self.lists[pred].len() as u32;
        self.lists[pred].push(t);
        for (ix, d) in indexes.iter().enumerate() {
            if d.pred == pred && d.filters.iter().all(|&(c, x)| t[c] == x) {
                let key: Vec<u32> = d.key_cols.iter().map(|&c| t[c]).collect();
                self.index[ix].push(&key, &[row]);
            }
        }
    }
}

/// Clique-by-clique delta iteration to a fixpoint; new facts become visible
/// at the end of each iteration.
pub fn execute_seminaive(plan: &SeminaivePlan, db: &Database) -> Result<SeminaiveResult, ExecError> {
    let start = Instant::now();
    if db.edb.len() != plan.schema.edb.len() {
        return Err(ExecError::SchemaMismatch(format!(
            "{} relations loaded, plan reads {}",
            db.edb.len(),
            plan.schema.edb.len()
        )));
    }
    let mut st = State {
        edb: &db.edb,
        lists: plan.preds.iter().map(|p| ListRelation::new(p.arity)).collect(),
        index: plan
            .indexes
            .iter()
            .map(|d| MapRelation::new(d.key_cols.len(), 1))
            .collect(),
        delta: vec![(0, 0); plan.preds.len()],
    };
    let mut sink = Sink {
        dups: plan
            .preds
            .iter()
            .map(|p| {
                let sizes = db.domain_sizes(p);
                SetRelation::new(plan.set_impl.resolve(&sizes)?, p.arity, &sizes)
            })
            .collect::<Result<_, _>>()?,
        pending: Vec::new(),
        head: Vec::new(),
        derivations: 0,
        duplicates: 0,
        error: None,
    };
    let max_locals = plan
        .base
        .iter()
        .chain(&plan.deltas)
        .flatten()
        .map(|v| v.locals)
        .max()
        .unwrap_or(0);
    let mut env = vec![0u32; max_locals];
    let mut key = Vec::new();
    let mut stats = SeminaiveStats::default();

    let pidx = |q: &Pred| plan.preds.iter().position(|p| p == q).expect("IDB predicate");
    for (c, clique) in plan.graph.cliques.iter().enumerate() {
        let members: Vec<usize> = clique.preds.iter().map(pidx).collect();
        for v in &plan.base[c] {
            st.run(v, &mut env, &mut key, &mut sink);
        }
        let flush = |st: &mut State, sink: &mut Sink| {
            for (pred, t) in sink.pending.drain(..) {
                st.append(&plan.indexes, pred, &t);
            }
        };
        flush(&mut st, &mut sink);
        stats.iterations += 1;
        if plan.deltas[c].is_empty() {
            continue;
        }
        for &m in &members {
            st.delta[m] = (0, st.lists[m].len());
        }
        while members.iter().any(|&m| st.delta[m].0 < st.delta[m].1) {
            for v in &plan.deltas[c] {
                st.run(v, &mut env, &mut key, &mut sink);
            }
            for &m in &members {
                st.delta[m] = (st.delta[m].1, st.delta[m].1);
            }
            flush(&mut st, &mut sink);
            for &m in &members {
                st.delta[m].1 = st.lists[m].len();
            }
            stats.iterations += 1;
        }
    }
    if let Some(e) = sink.error {
        return Err(e.into());
    }
    stats.derivations = sink.derivations;
    stats.duplicates = sink.duplicates;
    stats.facts = st.lists.iter().map(|l| l.len() as u64).sum();

    let answer = match (&plan.program.answer, &plan.program.answer_goal) {
        (Some(pred), Some(goal)) => {
            let mut consts = Vec::new();
            let mut equal = Vec::new();
            for (i, t) in goal.args.iter().enumerate() {
                match t {
                    Term::Const(k) => consts.push((i, plan.schema.const_id(pred, i, k))),
                    Term::Var(x) => {
                        if let Some(j) = goal.args[..i].iter().position(|u| u.as_var() == Some(x.as_str())) {
                            equal.push((j, i));
                        }
                    }
                }
            }
            Some((pidx(pred), consts, equal))
        }
        _ => None,
    };
    let mut res = SeminaiveResult {
        stats,
        preds: plan.preds.clone(),
        lists: st.lists,
        answer,
    };
    res.stats.answers = res.answer_rows().len() as u64;
    res.stats.millis = start.elapsed().as_secs_f64() * 1e3;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn run(src: &str) -> (BTreeSet<Vec<Const>>, SeminaiveStats) {
        let p = parse_program(src).unwrap();
        let plan = plan_seminaive(&p, SetChoice::Auto).unwrap();
        let mut db = Database::new(&plan.schema);
        db.add_program_facts(&p).unwrap();
        let r = execute_seminaive(&plan, &db).unwrap();
        (r.answer_tuples(&db).into_iter().collect(), r.stats)
    }

    fn ints(rows: &[&[i64]]) -> BTreeSet<Vec<Const>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| Const::Int(v)).collect())
            .collect()
    }

    #[test]
    fn chain() {
        let (a, s) = run("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).\n?- tc(X,Y).\npar(1,2).\npar(2,3).");
        assert_eq!(a, ints(&[&[1, 2], &[2, 3], &[1, 3]]));
        assert_eq!(s.derivations - s.duplicates, 3);
    }

    #[test]
    fn nonlinear() {
        let (a, _) =
            run("t(X,Y) :- e(X,Y).\nt(X,Y) :- t(X,Z), t(Z,Y).\n?- t(X,Y).\ne(1,2).\ne(2,3).\ne(3,4).\ne(4,1).");
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn mutual_recursion_with_constants() {
        let src = "even(0).\neven(Y) :- odd(X), s(X,Y).\nodd(Y) :- even(X), s(X,Y).\n?- even(X).\ns(0,1).\ns(1,2).\ns(2,3).\ns(3,4).";
        let (a, _) = run(src);
        assert_eq!(a, ints(&[&[0], &[2], &[4]]));
    }

    #[test]
    fn each_pair_derived_once_per_delta() {
        // A linear chain gives exactly one derivation per fact.
        let (_, s) =
            run("tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).\n?- tc(X,Y).\npar(1,2).\npar(2,3).\npar(3,4).");
        assert_eq!(s.duplicates, 0);
        assert_eq!(s.derivations, 6);
    }
}
