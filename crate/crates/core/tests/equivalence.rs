mod common;

use std::time::Instant;

use pushlog::bench::{random_program, CorpusLimits};
use pushlog::datalog::parse_program;
use pushlog::planner::FactTypeMode;

#[test]
fn random_corpus_engines_agree() {
    let start = Instant::now();
    for seed in 0..150 {
        let src = random_program(seed, CorpusLimits::default());
        let p = parse_program(&src).unwrap();
        let oracle = common::naive(&p);
        let semi = common::seminaive(&p);
        assert_eq!(semi, oracle, "seminaive, seed {seed}\n{src}");
        for mode in [FactTypeMode::Simple, FactTypeMode::Pe] {
            let (got, stats) = common::push(&p, mode);
            assert_eq!(got, oracle, "{mode:?}, seed {seed}\n{src}");
            assert!(stats.stacks_balanced(), "seed {seed}");
            assert_eq!(stats.saves, stats.restores, "seed {seed}");
        }
    }
    eprintln!("corpus took {:?}", start.elapsed());
}
