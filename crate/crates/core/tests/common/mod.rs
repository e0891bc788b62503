#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use pushlog::baseline::{execute_naive, execute_seminaive, plan_seminaive, select_answers, Facts};
use pushlog::datalog::{Const, Program};
use pushlog::planner::{build_push_plan, FactTypeMode, PlanConfig, SetChoice};
use pushlog::runtime::{execute, Database, ExecOptions, ExecStats};

pub type Answers = BTreeSet<Vec<Const>>;

pub fn push(p: &Program, mode: FactTypeMode) -> (Answers, ExecStats) {
    let plan = build_push_plan(
        p,
        &PlanConfig {
            mode,
            ..PlanConfig::default()
        },
    )
    .unwrap();
    let mut db = Database::new(&plan.schema);
    db.add_program_facts(p).unwrap();
    let r = execute(
        &plan,
        &db,
        ExecOptions {
            materialize_answers: true,
        },
    )
    .unwrap();
    let got: Vec<_> = r.answer_tuples(&db);
    let set: Answers = got.iter().cloned().collect();
    assert_eq!(set.len(), got.len(), "duplicate answers");
    (set, r.stats)
}

pub fn seminaive(p: &Program) -> Answers {
    let plan = plan_seminaive(p, SetChoice::Auto).unwrap();
    let mut db = Database::new(&plan.schema);
    db.add_program_facts(p).unwrap();
    let r = execute_seminaive(&plan, &db).unwrap();
    r.answer_tuples(&db).into_iter().collect()
}

pub fn naive(p: &Program) -> Answers {
    let facts = execute_naive(p, &Facts::new(), 100_000).unwrap();
    select_answers(p, &facts)
}

/// Nodes reachable from each node over `edges` by one or more steps.
pub fn reachability(nodes: u32, edges: &[(u32, u32)]) -> Vec<HashSet<u32>> {
    let mut adj = vec![Vec::new(); nodes as usize + 1];
    for &(a, b) in edges {
        adj[a as usize].push(b);
    }
    (0..=nodes)
        .map(|s| {
            let mut seen = HashSet::new();
            let mut q: VecDeque<u32> = adj[s as usize].iter().copied().collect();
            while let Some(v) = q.pop_front() {
                if seen.insert(v) {
                    q.extend(adj[v as usize].iter().copied());
                }
            }
            seen
        })
        .collect()
}
