mod common;

use std::collections::BTreeSet;

use pushlog::baseline::Facts;
use pushlog::bench::{
    fixture_dblp, fixture_join1, fixture_tc_ff, gen_eav, gen_tc, render_pairs, run_benchmark, tc_edges, BenchConfig,
    Engine,
};
use pushlog::datalog::{parse_program, Const};
use pushlog::loader::{read_facts, LoadOptions};
use pushlog::planner::{build_push_plan, dump_plan, FactTypeMode, PlanConfig};

fn dump(p: &pushlog::datalog::Program, mode: FactTypeMode) -> String {
    dump_plan(
        &build_push_plan(
            p,
            &PlanConfig {
                mode,
                ..PlanConfig::default()
            },
        )
        .unwrap(),
    )
}

#[test]
fn tc_plan_dump() {
    assert_eq!(
        dump(&fixture_tc_ff(), FactTypeMode::Pe),
        "\
plan mode=pe fact_types=1 apps=2 registers=2
edb par_ff list par/2
edb par_fb map par/2
ft 0 tc(r0,r1) regs=0+2 consumers=[1]
app 0 rule=0 INIT -> tc(r0,r1) via [par_ff] writes=[r0=X,r1=Y]
app 1 rule=1 tc(r0,r1) -> tc(r0,r1) via [par_fb] recursive saves=[r0,r1] writes=[r0=X,r1=Y]
"
    );
}

#[test]
fn join1_plan_dump() {
    assert_eq!(
        dump(&fixture_join1(), FactTypeMode::Simple),
        "\
plan mode=simple fact_types=4 apps=4 registers=8
edb c2_bf map c2/2
edb c3_ff list c3/2
edb c4_bf map c4/2
edb d1_ff list d1/2
edb d2_bf map d2/2
temp b1_fb map b1/2
ft 0 a(r0,r1) regs=0+2 consumers=[]
ft 1 b1(r0,r1) regs=2+2 consumers=[]
ft 2 b2(r0,r1) regs=4+2 consumers=[0]
ft 3 c1(r0,r1) regs=6+2 consumers=[1]
app 0 rule=0 b2(r0,r1) -> a(r0,r1) via [b1_fb*] after=1
app 1 rule=1 c1(r0,r1) -> b1(r0,r1) via [c2_bf]
app 2 rule=2 INIT -> b2(r0,r1) via [c3_ff,c4_bf] writes=[r4=X,r5=Y]
app 3 rule=3 INIT -> c1(r0,r1) via [d1_ff,d2_bf] writes=[r6=X,r7=Y]
"
    );
}

#[test]
fn bound_query_is_projection_of_full_closure() {
    for seed in 0..30 {
        let nodes = 40;
        let edges = tc_edges(120, nodes, seed % 2 == 0, seed).unwrap();
        let facts = render_pairs("par", &edges);
        let ff = parse_program(&format!("{}{facts}", pushlog::bench::TC_FF)).unwrap();
        let bf = parse_program(&format!("{}{facts}", pushlog::bench::TC_BF)).unwrap();
        let reach = common::reachability(nodes, &edges);
        let oracle: BTreeSet<Vec<Const>> = reach[1]
            .iter()
            .map(|&y| vec![Const::Int(1), Const::Int(y as i64)])
            .collect();
        for mode in [FactTypeMode::Pe, FactTypeMode::Simple] {
            let (all, _) = common::push(&ff, mode);
            let proj: BTreeSet<_> = all.into_iter().filter(|t| t[0] == Const::Int(1)).collect();
            assert_eq!(proj, oracle, "ff seed {seed}");
            assert_eq!(common::push(&bf, mode).0, oracle, "bf seed {seed}");
        }
        assert_eq!(common::seminaive(&bf), oracle);
    }
}

#[test]
fn generated_files_round_trip_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("par.P");
    gen_tc(&path, 500, 60, true, 3).unwrap();
    let want: BTreeSet<(u32, u32)> = tc_edges(500, 60, true, 3).unwrap().into_iter().collect();
    for opts in [
        LoadOptions::default(),
        LoadOptions {
            chunk_size: 7,
            ..LoadOptions::default()
        },
        LoadOptions {
            line_reader: true,
            ..LoadOptions::default()
        },
    ] {
        let mut facts = Facts::new();
        assert_eq!(read_facts(&path, opts, &mut facts).unwrap(), 0);
        let got: BTreeSet<(u32, u32)> = facts
            .values()
            .flatten()
            .map(|t| match (&t[0], &t[1]) {
                (Const::Int(a), Const::Int(b)) => (*a as u32, *b as u32),
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(got, want);
    }
}

#[test]
fn eav_documents_load_into_dblp_relations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("att.P");
    let data = gen_eav(300, 5);
    std::fs::write(&path, &data.text).unwrap();
    let cfg = BenchConfig {
        engine: Engine::PushPe,
        ..BenchConfig::default()
    };
    let r = run_benchmark(&fixture_dblp(), &[path], &cfg).unwrap();
    let total: u64 = data.counts.values().sum();
    assert_eq!(r.load.parsed, total);
    assert_eq!(r.load.malformed, 0);
    let semi = run_benchmark(
        &fixture_dblp(),
        &[dir.path().join("att.P")],
        &BenchConfig {
            engine: Engine::Seminaive,
            ..BenchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(r.answers, semi.answers);
    assert!(r.answers <= data.counts["author"]);
}

#[test]
fn bound_query_beats_full_closure_in_derivations() {
    let edges = tc_edges(2000, 200, true, 9).unwrap();
    let facts = render_pairs("par", &edges);
    let ff = parse_program(&format!("{}{facts}", pushlog::bench::TC_FF)).unwrap();
    let bf = parse_program(&format!("{}{facts}", pushlog::bench::TC_BF)).unwrap();
    let (_, sf) = common::push(&ff, FactTypeMode::Pe);
    let (_, sb) = common::push(&bf, FactTypeMode::Pe);
    assert!(
        sb.derivations * 10 < sf.derivations,
        "{} vs {}",
        sb.derivations,
        sf.derivations
    );
}
