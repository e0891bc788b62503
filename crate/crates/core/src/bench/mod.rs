//! Dataset generators, fixture programs and the benchmark runner.

pub mod corpus;
pub mod fixtures;
pub mod gen;
mod run;

pub use corpus::{explosion_facts, explosion_program, random_program, CorpusLimits};
pub use fixtures::{fixture_dblp, fixture_join1, fixture_tc_bf, fixture_tc_ff, DBLP, JOIN1, TC_BF, TC_FF};
pub use gen::{
    gen_eav, gen_join1, gen_tc, join1_pairs, render_pairs, tc_capacity, tc_edges, EavData, GenError, JOIN1_RELATIONS,
};
pub use run::{peak_rss_bytes, run_benchmark, BenchConfig, BenchError, BenchReport, Engine, Trial};
