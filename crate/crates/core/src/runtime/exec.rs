use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::datalog::{Const, Pred};
use crate::planner::{Operand, PushPlan, RelRef, StartOp, Step};
use crate::storage::{ListRelation, MemoryReport, SetRelation, StorageError};

use super::db::{Database, Stored};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("database does not match the plan: {0}")]
    SchemaMismatch(String),
    #[error("counting derivations of a recursive program needs a limit")]
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct PredStats {
    pub pred: String,
    pub derivations: u64,
    pub facts: u64,
    pub duplicates: u64,
    pub dedup: bool,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ExecStats {
    /// Head instantiations produced by rule applications.
    pub derivations: u64,
    /// Derivations passed on to temporaries, answers and consumers.
    pub facts: u64,
    pub duplicates: u64,
    pub answers: u64,
    pub frames_pushed: u64,
    pub max_frames: u64,
    pub max_trail: u64,
    pub saves: u64,
    pub restores: u64,
    pub final_frames: u64,
    pub final_trail: u64,
    /// Consumer activations deferred until a lower clique completed.
    pub buffered: u64,
    pub truncated: bool,
    pub preds: Vec<PredStats>,
    pub millis: f64,
}

impl ExecStats {
    /// Equality of everything but timings.
    pub fn same_counters(&self, other: &ExecStats) -> bool {
        let mut a = self.clone();
        a.millis = other.millis;
        a == *other
    }

    /// Stacks empty and every saved register restored.
    pub fn stacks_balanced(&self) -> bool {
        self.final_frames == 0 && self.final_trail == 0 && self.saves == self.restores
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    /// Keep answer tuples; otherwise only count them.
    pub materialize_answers: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            materialize_answers: true,
        }
    }
}

/// Outcome of [`execute`].
#[derive(Debug, Clone)]
pub struct ExecResult {
    pub stats: ExecStats,
    pub answer_pred: Option<Pred>,
    /// Distinct answers in derivation order.
    pub answers: ListRelation,
    pub temps: Vec<Stored>,
    preds: Vec<Pred>,
    dedup: Vec<Option<SetRelation>>,
}

/// Position in the answer list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnswerCursor {
    row: usize,
}

impl ExecResult {
    pub fn open_answers(&self) -> AnswerCursor {
        AnswerCursor::default()
    }

    pub fn next<'a>(&'a self, c: &mut AnswerCursor) -> Option<&'a [u32]> {
        if c.row >= self.answers.len() {
            return None;
        }
        c.row += 1;
        Some(self.answers.get(c.row - 1))
    }

    /// Decoded answers in derivation order.
    pub fn answer_tuples(&self, db: &Database) -> Vec<Vec<Const>> {
        let Some(pred) = &self.answer_pred else {
            return Vec::new();
        };
        self.answers.iter().map(|t| db.decode(pred, t)).collect()
    }

    /// Contents of every IDB predicate that kept a duplicate set.
    pub fn idb_facts(&self, db: &Database) -> BTreeMap<Pred, BTreeSet<Vec<Const>>> {
        self.preds
            .iter()
            .zip(&self.dedup)
            .filter_map(|(p, s)| {
                let s = s.as_ref()?;
                Some((p.clone(), s.tuples().iter().map(|t| db.decode(p, t)).collect()))
            })
            .collect()
    }

    pub fn memory(&self, report: &mut MemoryReport) {
        for t in &self.temps {
            report.add(format!("{} (temp)", t.name), t.kind_name(), t.len(), t.bytes());
        }
        for (p, s) in self.preds.iter().zip(&self.dedup) {
            if let Some(s) = s {
                report.add(format!("{p} (dedup)"), s.kind().name(), s.len(), s.bytes());
            }
        }
        report.add("answers", "list", self.answers.len(), self.answers.bytes());
    }
}

/// Result of [`execute_nodedup`].
#[derive(Debug, Clone)]
pub struct NodedupResult {
    /// Derivations of answer tuples, with multiplicity.
    pub derivations: u64,
    pub truncated: bool,
    pub stats: ExecStats,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    app: u32,
    base: u32,
    trail: u32,
    // Activation segment start for a pending Start entry.
    top: u32,
    cont: bool,
}

// Consumer app and the register writes to replay.
type Deferred = (u32, Vec<(u32, u32)>);

struct Machine<'p> {
    plan: &'p PushPlan,
    edb: &'p [Stored],
    temps: Vec<Stored>,
    dedup: Vec<Option<SetRelation>>,
    answers: ListRelation,
    materialize: bool,
    temps_of: Vec<Vec<usize>>,
    seg: Vec<u32>,
    regs: Vec<u32>,
    stamp: Vec<u64>,
    epoch: u64,
    mem: Vec<u32>,
    frames: Vec<Frame>,
    trail: Vec<(u32, u32)>,
    buffers: Vec<Vec<Deferred>>,
    done_stages: usize,
    head: Vec<u32>,
    key: Vec<u32>,
    stats: ExecStats,
    pred_duplicates: Vec<u64>,
    limit: Option<u64>,
    total_limit: Option<u64>,
    stop: bool,
    error: Option<StorageError>,
}

#[inline]
fn value(op: Operand, mem: &[u32], base: usize) -> u32 {
    match op {
        Operand::Local(l) => mem[base + l as usize],
        Operand::Const(c) => c,
    }
}

#[inline]
fn open(step: &Step, rel: &Stored, mem: &mut [u32], key: &mut Vec<u32>, base: usize, c: usize) {
    key.clear();
    key.extend(step.key.iter().map(|&l| mem[base + l as usize]));
    rel.open(key, &mut mem[c..c + 3]);
}

impl<'p> Machine<'p> {
    fn new(plan: &'p PushPlan, db: &'p Database, dedup_on: bool, opts: ExecOptions) -> Result<Machine<'p>, ExecError> {
        if db.edb.len() != plan.schema.edb.len() || db.edb.iter().zip(&plan.schema.edb).any(|(s, d)| s.name != d.name) {
            return Err(ExecError::SchemaMismatch(format!(
                "{} relations loaded, plan reads {}",
                db.edb.len(),
                plan.schema.edb.len()
            )));
        }
        let set = |pred: &Pred| plan.config.set_impl.resolve(&db.domain_sizes(pred));
        let temps = plan
            .temps
            .iter()
            .map(|d| {
                let imp = plan.config.set_impl.resolve(
                    &d.key_positions()
                        .iter()
                        .map(|&i| db.domain_sizes(&d.pred)[d.columns[i]])
                        .collect::<Vec<_>>(),
                )?;
                Stored::new(d, imp, &db.domain_sizes(&d.pred))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut dedup = Vec::with_capacity(plan.preds.len());
        for pi in &plan.preds {
            dedup.push(if pi.dedup && dedup_on {
                let sizes = db.domain_sizes(&pi.pred);
                Some(SetRelation::new(set(&pi.pred)?, pi.pred.arity, &sizes)?)
            } else {
                None
            });
        }
        let seg = plan.apps.iter().map(|a| a.locals + 3 * a.steps.len() as u32).collect();
        let stats = ExecStats {
            preds: plan
                .preds
                .iter()
                .zip(&dedup)
                .map(|(pi, d)| PredStats {
                    pred: pi.pred.to_string(),
                    dedup: d.is_some(),
                    ..PredStats::default()
                })
                .collect(),
            ..ExecStats::default()
        };
        Ok(Machine {
            plan,
            edb: &db.edb,
            temps,
            dedup,
            answers: ListRelation::new(plan.answer_pred().map_or(0, |p| p.arity)),
            materialize: opts.materialize_answers,
            temps_of: plan.preds.iter().map(|p| p.temps.clone()).collect(),
            seg,
            regs: vec![0; plan.registers],
            stamp: vec![0; plan.registers],
            epoch: 1,
            mem: Vec::new(),
            frames: Vec::new(),
            trail: Vec::new(),
            buffers: vec![Vec::new(); plan.stages.len()],
            done_stages: 0,
            head: vec![0; plan.preds.iter().map(|p| p.pred.arity).max().unwrap_or(0)],
            key: Vec::new(),
            stats,
            pred_duplicates: vec![0; plan.preds.len()],
            limit: None,
            total_limit: None,
            stop: false,
            error: None,
        })
    }

    /// Runs application `ai` with its activation at `base`, from the start or
    /// resuming after its last derivation. Returns the consumer to transfer
    /// to, with its activation base, when a new fact was produced.
    fn run(&mut self, ai: u32, base: usize, cont: bool) -> Option<(u32, usize)> {
        let plan = self.plan;
        let app = &plan.apps[ai as usize];
        let n = app.steps.len();
        let cur0 = base + app.locals as usize;
        let mut k;
        if !cont {
            let end = cur0 + 3 * n;
            if self.mem.len() < end {
                self.mem.resize(end, 0);
            }
            for op in &app.start {
                match *op {
                    StartOp::Load { local, src } => {
                        self.mem[base + local as usize] = match src {
                            Operand::Local(r) => self.regs[r as usize],
                            Operand::Const(c) => c,
                        }
                    }
                    StartOp::Expect { local, value } => {
                        if self.mem[base + local as usize] != value {
                            return None;
                        }
                    }
                    StartOp::Check { reg, against } => {
                        if self.regs[reg as usize] != value(against, &self.mem, base) {
                            return None;
                        }
                    }
                }
            }
            if n == 0 {
                return self.emit(ai, base);
            }
            let rel = match app.steps[0].rel {
                RelRef::Edb(e) => &self.edb[e as usize],
                RelRef::Temp(t) => &self.temps[t as usize],
            };
            open(&app.steps[0], rel, &mut self.mem, &mut self.key, base, cur0);
            k = 0;
        } else {
            if n == 0 {
                return None;
            }
            k = n - 1;
        }
        let hn = app.head.len();
        let hp = app.head_pred;
        loop {
            let step = &app.steps[k];
            let c = cur0 + 3 * k;
            let rel = match step.rel {
                RelRef::Edb(e) => &self.edb[e as usize],
                RelRef::Temp(t) => &self.temps[t as usize],
            };
            if k + 1 < n {
                let Some(vals) = rel.fetch(&mut self.mem[c..c + 3]) else {
                    if k == 0 {
                        return None;
                    }
                    k -= 1;
                    continue;
                };
                for &(vi, l) in &step.binds {
                    self.mem[base + l as usize] = vals[vi as usize];
                }
                if !step
                    .checks
                    .iter()
                    .all(|&(vi, l)| vals[vi as usize] == self.mem[base + l as usize])
                {
                    continue;
                }
                k += 1;
                let next = &app.steps[k];
                let rel = match next.rel {
                    RelRef::Edb(e) => &self.edb[e as usize],
                    RelRef::Temp(t) => &self.temps[t as usize],
                };
                open(next, rel, &mut self.mem, &mut self.key, base, cur0 + 3 * k);
                continue;
            }
            // Innermost level: duplicates are dropped without leaving the loop.
            let mut fresh = false;
            macro_rules! derive {
                ($vals:expr) => {{
                    let vals: &[u32] = $vals;
                    for &(vi, l) in &step.binds {
                        self.mem[base + l as usize] = vals[vi as usize];
                    }
                    if !step
                        .checks
                        .iter()
                        .all(|&(vi, l)| vals[vi as usize] == self.mem[base + l as usize])
                    {
                        continue;
                    }
                    for (h, &op) in self.head[..hn].iter_mut().zip(&app.head) {
                        *h = value(op, &self.mem, base);
                    }
                    if let Some(set) = &mut self.dedup[hp] {
                        match set.insert_if_new(&self.head[..hn]) {
                            Ok(true) => {}
                            Ok(false) => {
                                self.pred_duplicates[hp] += 1;
                                continue;
                            }
                            Err(e) => {
                                self.error = Some(e);
                                self.stop = true;
                                return None;
                            }
                        }
                    }
                    fresh = true;
                }};
            }
            if let Some(w) = rel.chunk_width() {
                loop {
                    let flat = rel.chunk(&self.mem[c..c + 3]);
                    if flat.is_empty() {
                        break;
                    }
                    let mut used = 0u32;
                    for vals in flat.chunks_exact(w) {
                        used += 1;
                        derive!(vals);
                        break;
                    }
                    rel.advance(&mut self.mem[c..c + 3], used);
                    if fresh {
                        break;
                    }
                }
            } else {
                while let Some(vals) = rel.fetch(&mut self.mem[c..c + 3]) {
                    derive!(vals);
                    break;
                }
            }
            if !fresh {
                if k == 0 {
                    return None;
                }
                k -= 1;
                continue;
            }
            if let Some(next) = self.new_fact(ai, base) {
                return Some(next);
            }
            if self.stop {
                return None;
            }
        }
    }

    /// Handles one derivation of application `ai`; duplicates stop here.
    #[inline(always)]
    fn emit(&mut self, ai: u32, base: usize) -> Option<(u32, usize)> {
        let app = &self.plan.apps[ai as usize];
        let n = app.head.len();
        for (h, &op) in self.head[..n].iter_mut().zip(&app.head) {
            *h = value(op, &self.mem, base);
        }
        let pi = app.head_pred;
        if let Some(set) = &mut self.dedup[pi] {
            match set.insert_if_new(&self.head[..n]) {
                Ok(true) => {}
                Ok(false) => {
                    self.pred_duplicates[pi] += 1;
                    return None;
                }
                Err(e) => {
                    self.error = Some(e);
                    self.stop = true;
                    return None;
                }
            }
        }
        self.new_fact(ai, base)
    }

    #[inline(never)]
    fn new_fact(&mut self, ai: u32, base: usize) -> Option<(u32, usize)> {
        let plan = self.plan;
        let app = &plan.apps[ai as usize];
        let head = &self.head[..app.head.len()];
        let pi = app.head_pred;
        self.stats.facts += 1;
        self.stats.preds[pi].facts += 1;
        if let Some(total) = self.total_limit {
            // Only set when nothing is deduplicated, so every derivation lands here.
            if self.stats.facts >= total {
                self.stats.truncated = true;
                self.stop = true;
            }
        }
        for &t in &self.temps_of[pi] {
            let tmp = &mut self.temps[t];
            if tmp.accepts(head) {
                if let Err(e) = tmp.insert(head) {
                    self.error = Some(e);
                    self.stop = true;
                    return None;
                }
            }
        }
        if plan.answer.as_ref().is_some_and(|a| a.pred == pi && a.matches(head)) {
            self.stats.answers += 1;
            if self.materialize {
                self.answers.push(head);
            }
            if let Some(limit) = self.limit {
                if self.stats.answers >= limit {
                    self.stats.truncated = true;
                    self.stop = true;
                }
            }
        }
        if self.stop {
            return None;
        }

        let out = &plan.fact_types[app.output];
        let done = self.done_stages;
        let ready = |c: usize| plan.apps[c].ready_stage.is_none_or(|r| r < done);
        let Some(first) = out.consumers.iter().position(|&c| ready(c)) else {
            for &c in &out.consumers {
                self.defer(c, ai, base);
            }
            return None;
        };
        for &c in &out.consumers {
            if !ready(c) {
                self.defer(c, ai, base);
            }
        }
        for &(r, op) in &app.writes {
            let v = value(op, &self.mem, base);
            let r = r as usize;
            if app.recursive && self.stamp[r] != self.epoch {
                self.stamp[r] = self.epoch;
                self.trail.push((r as u32, self.regs[r]));
                self.stats.saves += 1;
            }
            self.regs[r] = v;
        }
        self.stats.max_trail = self.stats.max_trail.max(self.trail.len() as u64);
        let top = (base + self.seg[ai as usize] as usize) as u32;
        self.push(Frame {
            app: ai,
            base: base as u32,
            trail: self.trail.len() as u32,
            top,
            cont: true,
        });
        for &c in out.consumers[first + 1..].iter().rev() {
            if ready(c) {
                self.push(Frame {
                    app: c as u32,
                    base: top,
                    trail: self.trail.len() as u32,
                    top,
                    cont: false,
                });
            }
        }
        Some((out.consumers[first] as u32, top as usize))
    }

    fn defer(&mut self, consumer: usize, producer: u32, base: usize) {
        let app = &self.plan.apps[producer as usize];
        let vals = app
            .writes
            .iter()
            .map(|&(r, op)| (r, value(op, &self.mem, base)))
            .collect();
        let stage = self.plan.apps[consumer].ready_stage.expect("only gated consumers wait");
        self.buffers[stage].push((consumer as u32, vals));
        self.stats.buffered += 1;
    }

    fn push(&mut self, f: Frame) {
        self.epoch += 1;
        self.frames.push(f);
        self.stats.frames_pushed += 1;
        self.stats.max_frames = self.stats.max_frames.max(self.frames.len() as u64);
    }

    fn restore(&mut self, height: usize) {
        while self.trail.len() > height {
            let (r, v) = self.trail.pop().expect("checked length");
            self.regs[r as usize] = v;
            self.stats.restores += 1;
        }
    }

    /// Runs `ai` from the start at the bottom of the stack, then drains the
    /// backtrack stack.
    fn drive(&mut self, ai: u32) {
        let mut next = Some((ai, 0usize, false));
        while !self.stop {
            if let Some((a, base, cont)) = next {
                next = self.run(a, base, cont).map(|(a, b)| (a, b, false));
                continue;
            }
            let Some(f) = self.frames.pop() else {
                break;
            };
            self.epoch += 1;
            self.restore(f.trail as usize);
            next = Some(if f.cont {
                (f.app, f.base as usize, true)
            } else {
                (f.app, f.top as usize, false)
            });
        }
        if self.stop {
            self.frames.clear();
        }
        self.restore(0);
        self.epoch += 1;
    }

    fn evaluate(&mut self) {
        let plan = self.plan;
        for (s, inits) in plan.stages.iter().enumerate() {
            for &ai in inits {
                self.drive(ai as u32);
                if self.stop {
                    return;
                }
            }
            self.done_stages = s + 1;
            let pending = std::mem::take(&mut self.buffers[s]);
            for (ai, vals) in pending {
                for (r, v) in vals {
                    self.regs[r as usize] = v;
                }
                self.drive(ai);
                if self.stop {
                    return;
                }
            }
        }
    }

    fn finish(mut self, start: Instant) -> Result<ExecResult, ExecError> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        for (ps, &u) in self.stats.preds.iter_mut().zip(&self.pred_duplicates) {
            ps.duplicates = u;
            ps.derivations = ps.facts + u;
        }
        self.stats.duplicates = self.pred_duplicates.iter().sum();
        self.stats.derivations = self.stats.facts + self.stats.duplicates;
        self.stats.final_frames = self.frames.len() as u64;
        self.stats.final_trail = self.trail.len() as u64;
        self.stats.millis = start.elapsed().as_secs_f64() * 1e3;
        Ok(ExecResult {
            stats: self.stats,
            answer_pred: self.plan.answer_pred().cloned(),
            answers: self.answers,
            temps: self.temps,
            preds: self.plan.preds.iter().map(|p| p.pred.clone()).collect(),
            dedup: self.dedup,
        })
    }
}

/// Evaluates `plan` over `db`, pushing every new fact to its consumers.
pub fn execute(plan: &PushPlan, db: &Database, opts: ExecOptions) -> Result<ExecResult, ExecError> {
    let start = Instant::now();
    let mut m = Machine::new(plan, db, true, opts)?;
    m.evaluate();
    m.finish(start)
}

/// Counts answer derivations with duplicate elimination switched off
/// everywhere, stopping after `limit` of them. Multiplicities are exact for
/// programs whose rules have at most one IDB literal per recursive clique.
pub fn execute_nodedup(plan: &PushPlan, db: &Database, limit: Option<u64>) -> Result<NodedupResult, ExecError> {
    if plan.graph.cliques.iter().any(|c| c.recursive) && limit.is_none() {
        return Err(ExecError::Unbounded);
    }
    let start = Instant::now();
    let mut m = Machine::new(
        plan,
        db,
        false,
        ExecOptions {
            materialize_answers: false,
        },
    )?;
    m.limit = limit;
    if plan.graph.cliques.iter().any(|c| c.recursive) {
        // Recursion without duplicate checks need not reach an answer.
        m.total_limit = limit;
    }
    m.evaluate();
    let r = m.finish(start)?;
    Ok(NodedupResult {
        derivations: r.stats.answers,
        truncated: r.stats.truncated,
        stats: r.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;
    use crate::planner::{build_push_plan, FactTypeMode, PlanConfig};

    fn run(src: &str, mode: FactTypeMode) -> (BTreeSet<Vec<Const>>, Vec<Vec<Const>>, ExecStats) {
        let p = parse_program(src).unwrap();
        let cfg = PlanConfig {
            mode,
            ..PlanConfig::default()
        };
        let plan = build_push_plan(&p, &cfg).unwrap();
        let mut db = Database::new(&plan.schema);
        db.add_program_facts(&p).unwrap();
        let r = execute(&plan, &db, ExecOptions::default()).unwrap();
        let ordered = r.answer_tuples(&db);
        (ordered.iter().cloned().collect(), ordered, r.stats)
    }

    fn ints(rows: &[&[i64]]) -> BTreeSet<Vec<Const>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| Const::Int(v)).collect())
            .collect()
    }

    const TC: &str = "tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).\n?- tc(X,Y).\n";

    #[test]
    fn two_edge_chain() {
        for mode in [FactTypeMode::Pe, FactTypeMode::Simple] {
            let (set, list, stats) = run(&format!("{TC}par(1,2).\npar(2,3)."), mode);
            assert_eq!(set, ints(&[&[1, 2], &[2, 3], &[1, 3]]));
            assert_eq!(list.len(), 3);
            assert!(stats.stacks_balanced());
            assert!(stats.saves > 0);
        }
    }

    #[test]
    fn empty_result_cursor() {
        let p = parse_program(TC).unwrap();
        let plan = build_push_plan(&p, &PlanConfig::default()).unwrap();
        let db = Database::new(&plan.schema);
        let r = execute(&plan, &db, ExecOptions::default()).unwrap();
        let mut c = r.open_answers();
        assert!(r.next(&mut c).is_none());
    }

    #[test]
    fn cyclic_graph_terminates() {
        let (set, _, stats) = run(&format!("{TC}par(1,2).\npar(2,1).\npar(2,2)."), FactTypeMode::Pe);
        assert_eq!(set, ints(&[&[1, 2], &[2, 1], &[2, 2], &[1, 1]]));
        assert_eq!(stats.derivations - stats.facts, stats.duplicates);
        assert!(stats.stacks_balanced());
    }

    #[test]
    fn nonlinear_recursion() {
        let src = "t(X,Y) :- e(X,Y).\nt(X,Y) :- t(X,Z), t(Z,Y).\n?- t(X,Y).\ne(1,2).\ne(2,3).\ne(3,4).\ne(4,1).";
        let (set, _, stats) = run(src, FactTypeMode::Pe);
        assert_eq!(set.len(), 16);
        assert!(stats.stacks_balanced());
    }

    #[test]
    fn bound_query_constant() {
        let src = "p1(A) :- p1(B), par(B,A).\np1(A) :- par(1,A).\np0(A) :- p1(B), par(B,A).\np0(A) :- par(1,A).\ntc(1,A) :- p0(A).\n?- tc(1,A).\npar(1,2).\npar(2,3).\npar(5,6).";
        let (set, _, _) = run(src, FactTypeMode::Pe);
        assert_eq!(set, ints(&[&[1, 2], &[1, 3]]));
    }

    #[test]
    fn gated_consumer_waits_for_lower_clique() {
        // r's facts arrive while q is still being derived.
        let src = "q(X) :- e(X).\nq(Y) :- q(X), f(X,Y).\nr(X) :- e(X).\ns(X) :- r(X), q(X).\n?- s(X).\ne(1).\nf(1,2).\nf(2,3).\ne(3).";
        let (set, _, _) = run(src, FactTypeMode::Pe);
        assert_eq!(set, ints(&[&[1], &[3]]));
    }

    #[test]
    fn goal_filters_answers() {
        let src = "tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).\n?- tc(X,X).\npar(1,2).\npar(2,1).\npar(2,3).";
        let (set, _, _) = run(src, FactTypeMode::Pe);
        assert_eq!(set, ints(&[&[1, 1], &[2, 2]]));
        let (set, _, _) = run(
            &format!(
                "{}\n?- tc(2, Y).",
                TC.replace("?- tc(X,Y).\n", "") + "par(1,2).\npar(2,3)."
            ),
            FactTypeMode::Simple,
        );
        assert_eq!(set, ints(&[&[2, 3]]));
    }

    #[test]
    fn repeated_variable_meets_constant_in_input() {
        // The fact type p0(r0,r0,1) feeds p0(Y,X,X): X comes from a register
        // and must then equal the constant.
        let src = "p0(Z,Z,Y) :- p0(Y,X,X), p0(Z,Z,Z).\np0(1,X,X) :- p0(X,X,X), e0(W,4).\np0(W,W,W) :- e0(W,W).\n?- p0(X,Z,Z).\ne0(5,4).\ne0(10,10).";
        for mode in [FactTypeMode::Pe, FactTypeMode::Simple] {
            let (set, _, _) = run(src, mode);
            assert_eq!(set, ints(&[&[1, 10, 10], &[10, 10, 10]]), "{mode:?}");
        }
    }

    #[test]
    fn nodedup_counts_multiplicity() {
        let src = "a(X,Y) :- b(X,Z), c(Z,Y).\n?- a(X,Y).\nb(1,1).\nb(1,2).\nc(1,5).\nc(2,5).\nc(2,6).";
        let p = parse_program(src).unwrap();
        let plan = build_push_plan(&p, &PlanConfig::default()).unwrap();
        let mut db = Database::new(&plan.schema);
        db.add_program_facts(&p).unwrap();
        let r = execute_nodedup(&plan, &db, None).unwrap();
        assert_eq!(r.derivations, 3);
        assert!(!r.truncated);
        let r = execute_nodedup(&plan, &db, Some(2)).unwrap();
        assert_eq!(r.derivations, 2);
        assert!(r.truncated);
        let d = execute(&plan, &db, ExecOptions::default()).unwrap();
        assert_eq!(d.stats.answers, 2);
    }

    #[test]
    fn single_fact_program() {
        let (set, _, stats) = run("a(1).\n?- a(X).", FactTypeMode::Pe);
        assert_eq!(set, ints(&[&[1]]));
        assert_eq!(stats.derivations, 1);
    }

    #[test]
    fn deterministic_counters() {
        let src = format!("{TC}par(1,2).\npar(2,3).\npar(3,1).\npar(3,4).");
        let (_, a, s1) = run(&src, FactTypeMode::Pe);
        let (_, b, s2) = run(&src, FactTypeMode::Pe);
        assert_eq!(a, b);
        assert!(s1.same_counters(&s2));
    }
}
