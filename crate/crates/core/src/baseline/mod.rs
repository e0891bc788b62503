//! Reference evaluators: seminaive delta iteration over the same storage
//! structures, and a naive fixpoint used as a test oracle.

mod naive;
mod seminaive;

pub use naive::{execute_naive, select_answers, Facts, IterationLimit};
pub use seminaive::{execute_seminaive, plan_seminaive, SeminaivePlan, SeminaiveResult, SeminaiveStats};
