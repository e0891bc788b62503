use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::datalog::{
    build_predicate_graph, check_range_restriction, classify_predicates, ClassifyError, Pred, PredicateGraph, Program,
    RangeViolation, Term,
};
use crate::storage::{BitmapSet, SetImpl, StorageError};

use super::bindings::Operand;
use super::fact_types::{
    apply, compute_fact_types_pe, compute_fact_types_simple, ExplosionSignal, FactType, FactTypeMode, InputOp, Src,
};
use super::normalize::{normalize_rules, Normalized, Source};
use super::schema::{RelDesc, RelKind, Schema};

/// Which IDB predicates get a duplicate-check set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupMode {
    /// Every IDB predicate.
    All,
    /// Predicates of recursive cliques and the answer predicate.
    Clique,
    /// Only the answer predicate; rejected for recursive programs.
    AnswerOnly,
}

impl std::str::FromStr for DedupMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(DedupMode::All),
            "clique" => Ok(DedupMode::Clique),
            "answer-only" => Ok(DedupMode::AnswerOnly),
            _ => Err(format!("unknown dedup mode `{s}`")),
        }
    }
}

/// Set implementation request; `Auto` picks a bitmap when the columns' domains
/// are small enough and a dynamic hash table otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetChoice {
    Auto,
    Bitmap,
    DynHash,
    FixedHash,
}

impl std::str::FromStr for SetChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(SetChoice::Auto),
            other => Ok(match other.parse::<SetImpl>()? {
                SetImpl::Bitmap => SetChoice::Bitmap,
                SetImpl::DynHash => SetChoice::DynHash,
                SetImpl::FixedHash => SetChoice::FixedHash,
            }),
        }
    }
}

/// Largest bitmap `Auto` selects (bits).
pub const AUTO_BITMAP_BITS: usize = 1 << 27;

impl SetChoice {
    /// Picks the implementation for a set whose columns have `domains` values.
    pub fn resolve(self, domains: &[usize]) -> Result<SetImpl, StorageError> {
        Ok(match self {
            SetChoice::Auto if BitmapSet::fits(domains, AUTO_BITMAP_BITS) => SetImpl::Bitmap,
            SetChoice::Auto | SetChoice::DynHash => SetImpl::DynHash,
            SetChoice::FixedHash => SetImpl::FixedHash,
            SetChoice::Bitmap => {
                if domains.len() > 2 {
                    return Err(StorageError::BitmapArity(domains.len()));
                }
                SetImpl::Bitmap
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanConfig {
    pub mode: FactTypeMode,
    pub dedup: DedupMode,
    pub set_impl: SetChoice,
    /// Maximum number of partial-evaluation fact types; default 4 per rule.
    pub guard: Option<usize>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            mode: FactTypeMode::Pe,
            dedup: DedupMode::All,
            set_impl: SetChoice::Auto,
            guard: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("rule {} is not range restricted: variable {} does not occur in the body", .0[0].rule, .0[0].variable)]
    RangeRestriction(Vec<RangeViolation>),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("dedup mode answer-only cannot evaluate the recursive predicate {0}")]
    AnswerOnlyRecursive(String),
    #[error("internal error: fact types do not cover {0}")]
    Coverage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelRef {
    Edb(u32),
    Temp(u32),
}

/// One nested-loop level of a rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub rel: RelRef,
    pub kind: RelKind,
    pub key: Vec<u32>,
    pub binds: Vec<(u32, u32)>,
    pub checks: Vec<(u32, u32)>,
}

/// Start-time operation with registers resolved to plan-wide slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartOp {
    Load {
        local: u32,
        src: Operand,
    },
    Check {
        reg: u32,
        against: Operand,
    },
    /// The local already loaded from a register must equal a constant.
    Expect {
        local: u32,
        value: u32,
    },
}

/// An edge of the rule-application graph.
#[derive(Debug, Clone)]
pub struct App {
    pub rule: usize,
    pub variant: usize,
    /// Input fact type; `None` for INIT.
    pub input: Option<usize>,
    pub output: usize,
    pub start: Vec<StartOp>,
    pub steps: Vec<Step>,
    pub head_pred: usize,
    pub head: Vec<Operand>,
    /// `(register, source)` written for the consumers of the output.
    pub writes: Vec<(u32, Operand)>,
    pub locals: u32,
    /// The output fact type can reach the input fact type again, so register
    /// writes must be saved.
    pub recursive: bool,
    pub ready_stage: Option<usize>,
}

impl App {
    /// Registers saved before being overwritten.
    pub fn save_set(&self) -> Vec<u32> {
        if self.recursive {
            self.writes.iter().map(|w| w.0).collect()
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone)]
pub struct FactTypeNode {
    pub ft: FactType,
    /// First plan register; the fact type's register `i` is `reg_base + i`.
    pub reg_base: u32,
    /// Applications fed by this fact type, in rule order.
    pub consumers: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PredInfo {
    pub pred: Pred,
    pub clique: usize,
    pub dedup: bool,
    /// Temporary relations filled with this predicate's facts.
    pub temps: Vec<usize>,
}

/// Answer selection on the designated predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSpec {
    pub pred: usize,
    pub consts: Vec<(usize, u32)>,
    pub equal: Vec<(usize, usize)>,
}

impl AnswerSpec {
    #[inline]
    pub fn matches(&self, t: &[u32]) -> bool {
        self.consts.iter().all(|&(c, v)| t[c] == v) && self.equal.iter().all(|&(a, b)| t[a] == t[b])
    }
}

#[derive(Debug, Clone)]
pub struct PushPlan {
    pub program: Program,
    pub schema: Schema,
    pub graph: PredicateGraph,
    pub config: PlanConfig,
    /// Fact-type construction actually used.
    pub mode: FactTypeMode,
    /// Set when partial evaluation was abandoned for the simple variant.
    pub explosion: Option<ExplosionSignal>,
    pub preds: Vec<PredInfo>,
    pub temps: Vec<RelDesc>,
    pub fact_types: Vec<FactTypeNode>,
    pub apps: Vec<App>,
    pub registers: usize,
    /// INIT applications per clique, in rule order.
    pub stages: Vec<Vec<usize>>,
    pub answer: Option<AnswerSpec>,
}

impl PushPlan {
    pub fn pred_index(&self, pred: &Pred) -> Option<usize> {
        self.preds.iter().position(|p| &p.pred == pred)
    }

    pub fn answer_pred(&self) -> Option<&Pred> {
        self.answer.as_ref().map(|a| &self.preds[a.pred].pred)
    }
}

/// Validates `p`, normalizes it and compiles the rule-application graph.
pub fn build_push_plan(p: &Program, config: &PlanConfig) -> Result<PushPlan, PlanError> {
    classify_predicates(p)?;
    let violations = check_range_restriction(p);
    if !violations.is_empty() {
        return Err(PlanError::RangeRestriction(violations));
    }
    let graph = build_predicate_graph(p);
    let mut schema = Schema::new(p);
    let normalized = normalize_rules(p, &graph, &mut schema);
    let (fts, mode, explosion) = match config.mode {
        FactTypeMode::Simple => (compute_fact_types_simple(p), FactTypeMode::Simple, None),
        FactTypeMode::Pe => {
            let guard = config.guard.unwrap_or(4 * p.rules.len());
            match compute_fact_types_pe(p, &schema, &normalized, guard) {
                Ok(fts) => (fts, FactTypeMode::Pe, None),
                Err(sig) => (compute_fact_types_simple(p), FactTypeMode::Simple, Some(sig)),
            }
        }
    };
    build_plan(p, graph, schema, normalized, fts, mode, explosion, config)
}

/// Builds the plan from precomputed parts; see [`build_push_plan`].
#[allow(clippy::too_many_arguments)]
pub fn build_plan(
    p: &Program,
    graph: PredicateGraph,
    schema: Schema,
    n: Normalized,
    fts: Vec<FactType>,
    mode: FactTypeMode,
    explosion: Option<ExplosionSignal>,
    config: &PlanConfig,
) -> Result<PushPlan, PlanError> {
    let answer_pred = p.answer.clone();
    if config.dedup == DedupMode::AnswerOnly {
        if let Some(c) = graph.cliques.iter().find(|c| c.recursive) {
            return Err(PlanError::AnswerOnlyRecursive(c.preds[0].to_string()));
        }
    }
    let mut preds: Vec<PredInfo> = p
        .idb
        .iter()
        .map(|pred| {
            let clique = graph.clique_of(pred).unwrap_or(0);
            let is_answer = answer_pred.as_ref() == Some(pred);
            let dedup = match config.dedup {
                DedupMode::All => true,
                DedupMode::Clique => is_answer || graph.cliques[clique].recursive,
                DedupMode::AnswerOnly => is_answer,
            };
            PredInfo {
                pred: pred.clone(),
                clique,
                dedup,
                temps: Vec::new(),
            }
        })
        .collect();
    let pred_idx: HashMap<Pred, usize> = preds.iter().enumerate().map(|(i, pi)| (pi.pred.clone(), i)).collect();
    for (t, d) in n.temps.iter().enumerate() {
        preds[pred_idx[&d.pred]].temps.push(t);
    }

    let mut nodes = Vec::with_capacity(fts.len());
    let mut ft_idx: HashMap<FactType, usize> = HashMap::new();
    let mut registers = 0u32;
    for ft in fts {
        ft_idx.insert(ft.clone(), nodes.len());
        let regs = ft.registers() as u32;
        nodes.push(FactTypeNode {
            ft,
            reg_base: registers,
            consumers: Vec::new(),
        });
        registers += regs;
    }

    let mut apps: Vec<App> = Vec::new();
    for (vi, v) in n.variants.iter().enumerate() {
        let rule = &p.rules[v.rule];
        let inputs: Vec<Option<usize>> = match v.input {
            None => vec![None],
            Some(li) => {
                let pred = rule.body[li].pred();
                (0..nodes.len())
                    .filter(|&f| nodes[f].ft.pred == pred)
                    .map(Some)
                    .collect()
            }
        };
        for input in inputs {
            let Some(a) = apply(p, &schema, v, input.map(|f| &nodes[f].ft), mode) else {
                continue;
            };
            let Some(&output) = ft_idx.get(&a.output) else {
                return Err(PlanError::Coverage(format!(
                    "{} derived by rule {}",
                    a.output.display(&schema),
                    v.rule
                )));
            };
            let base_in = input.map(|f| nodes[f].reg_base).unwrap_or(0);
            let reg_of = |src: Src| match src {
                Src::Reg(r) => base_in + r,
                Src::Const(_) => unreachable!(),
            };
            let start = a
                .input_ops
                .iter()
                .map(|op| match *op {
                    InputOp::Load {
                        local,
                        src: Src::Const(c),
                    } => StartOp::Load {
                        local,
                        src: Operand::Const(c),
                    },
                    InputOp::Load { local, src } => StartOp::Load {
                        local,
                        src: Operand::Local(reg_of(src)),
                    },
                    InputOp::Check { src, against } => match src {
                        Src::Reg(_) => StartOp::Check {
                            reg: reg_of(src),
                            against,
                        },
                        Src::Const(c) => StartOp::Expect {
                            local: match against {
                                Operand::Local(l) => l,
                                Operand::Const(_) => unreachable!(),
                            },
                            value: c,
                        },
                    },
                })
                .collect();
            let steps = v
                .accesses
                .iter()
                .zip(&v.sources)
                .map(|(acc, src)| {
                    let (rel, kind) = match *src {
                        Source::Edb(e) => (RelRef::Edb(e as u32), schema.edb[e].kind),
                        Source::Temp(t) => (RelRef::Temp(t as u32), n.temps[t].kind),
                    };
                    Step {
                        rel,
                        kind,
                        key: acc.key.clone(),
                        binds: acc.binds.clone(),
                        checks: acc.checks.clone(),
                    }
                })
                .collect();
            let out_base = nodes[output].reg_base;
            apps.push(App {
                rule: v.rule,
                variant: vi,
                input,
                output,
                start,
                steps,
                head_pred: pred_idx[&rule.head.pred()],
                head: a.head,
                writes: a.writes.iter().map(|&(r, o)| (out_base + r, o)).collect(),
                locals: v.locals.len() as u32,
                recursive: false,
                ready_stage: v.ready_stage,
            });
        }
    }

    let mut g: DiGraph<(), ()> = DiGraph::new();
    let ids: Vec<_> = (0..nodes.len()).map(|_| g.add_node(())).collect();
    for a in &apps {
        if let Some(i) = a.input {
            g.add_edge(ids[i], ids[a.output], ());
        }
    }
    let mut scc = vec![0; nodes.len()];
    for (c, comp) in tarjan_scc(&g).into_iter().enumerate() {
        for node in comp {
            scc[node.index()] = c;
        }
    }
    for (i, a) in apps.iter_mut().enumerate() {
        if let Some(inp) = a.input {
            a.recursive = scc[inp] == scc[a.output];
            nodes[inp].consumers.push(i);
        }
    }

    // Nobody reads the registers of a fact type without consumers.
    for a in apps.iter_mut() {
        if nodes[a.output].consumers.is_empty() {
            a.writes.clear();
        }
    }

    let mut stages = vec![Vec::new(); graph.cliques.len()];
    for (i, a) in apps.iter().enumerate() {
        if a.input.is_none() {
            stages[preds[a.head_pred].clique].push(i);
        }
    }

    let answer = match (&answer_pred, &p.answer_goal) {
        (Some(pred), Some(goal)) => {
            let mut consts = Vec::new();
            let mut equal = Vec::new();
            for (i, t) in goal.args.iter().enumerate() {
                match t {
                    Term::Const(c) => consts.push((i, schema.const_id(pred, i, c))),
                    Term::Var(v) => {
                        if let Some(j) = goal.args[..i].iter().position(|u| u.as_var() == Some(v.as_str())) {
                            equal.push((j, i));
                        }
                    }
                }
            }
            Some(AnswerSpec {
                pred: pred_idx[pred],
                consts,
                equal,
            })
        }
        _ => None,
    };

    Ok(PushPlan {
        program: p.clone(),
        schema,
        graph,
        config: *config,
        mode,
        explosion,
        preds,
        temps: n.temps,
        fact_types: nodes,
        apps,
        registers: registers as usize,
        stages,
        answer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    const TC: &str = "tc(X,Y) :- par(X,Y).\ntc(X,Y) :- par(X,Z), tc(Z,Y).\n?- tc(X,Y).";
    const TC_BF: &str = "p1(A) :- p1(B), par(B,A).\np1(A) :- par(1,A).\np0(A) :- p1(B), par(B,A).\np0(A) :- par(1,A).\ntc(1,A) :- p0(A).\n?- tc(1,A).";

    fn plan(src: &str, mode: FactTypeMode) -> PushPlan {
        let cfg = PlanConfig {
            mode,
            ..PlanConfig::default()
        };
        build_push_plan(&parse_program(src).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn tc_ff_has_two_applications() {
        for mode in [FactTypeMode::Pe, FactTypeMode::Simple] {
            let pl = plan(TC, mode);
            assert_eq!(pl.apps.len(), 2);
            assert!(pl.apps[0].input.is_none());
            assert_eq!(pl.apps[1].input, Some(0));
            assert!(pl.apps[1].recursive);
            assert_eq!(pl.apps[1].save_set().len(), 2);
            assert_eq!(pl.fact_types[0].consumers, vec![1]);
        }
    }

    #[test]
    fn tc_bf_has_five_applications() {
        let pl = plan(TC_BF, FactTypeMode::Pe);
        assert_eq!(pl.apps.len(), 5);
        assert_eq!(pl.fact_types.len(), 3);
        let tc = &pl.fact_types[pl.apps[4].output];
        assert_eq!(tc.ft.display(&pl.schema).to_string(), "tc(1,r0)");
        assert_eq!(pl.registers, 3);
        assert!(!pl.apps[4].recursive);
        assert!(pl.apps[4].writes.is_empty());
    }

    #[test]
    fn empty_program() {
        let pl = plan("", FactTypeMode::Pe);
        assert!(pl.apps.is_empty());
        assert!(pl.fact_types.is_empty());
        assert!(pl.answer.is_none());
    }

    #[test]
    fn answer_only_rejects_recursion() {
        let cfg = PlanConfig {
            dedup: DedupMode::AnswerOnly,
            ..PlanConfig::default()
        };
        let err = build_push_plan(&parse_program(TC).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, PlanError::AnswerOnlyRecursive(_)));
    }

    #[test]
    fn range_restriction_is_checked() {
        let err = build_push_plan(&parse_program("a(X, Y) :- b(X).").unwrap(), &PlanConfig::default()).unwrap_err();
        assert!(matches!(err, PlanError::RangeRestriction(_)));
    }

    #[test]
    fn dedup_placement() {
        let src = "a(X,Y) :- b1(X,Z), b2(Z,Y).\nb1(X,Y) :- c1(X,Z), c2(Z,Y).\nb2(X,Y) :- c3(X,Z), c4(Z,Y).\nc1(X,Y) :- d1(X,Z), d2(Z,Y).\n?- a(X,Y).";
        let p = parse_program(src).unwrap();
        let all = build_push_plan(&p, &PlanConfig::default()).unwrap();
        assert!(all.preds.iter().all(|pi| pi.dedup));
        let cfg = PlanConfig {
            dedup: DedupMode::Clique,
            ..PlanConfig::default()
        };
        let clique = build_push_plan(&p, &cfg).unwrap();
        let with: Vec<_> = clique
            .preds
            .iter()
            .filter(|pi| pi.dedup)
            .map(|pi| pi.pred.name.as_str())
            .collect();
        assert_eq!(with, vec!["a"]);
    }

    #[test]
    fn set_choice_resolution() {
        assert_eq!(SetChoice::Auto.resolve(&[1000, 1000]).unwrap(), SetImpl::Bitmap);
        assert_eq!(SetChoice::Auto.resolve(&[10, 10, 10]).unwrap(), SetImpl::DynHash);
        assert!(SetChoice::Bitmap.resolve(&[10, 10, 10]).is_err());
    }
}
