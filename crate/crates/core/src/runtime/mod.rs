//! Push-based execution of a plan over loaded relations.

mod db;
mod exec;

pub use db::{Database, LoadStats, Relation, Stored};
pub use exec::{
    execute, execute_nodedup, AnswerCursor, ExecError, ExecOptions, ExecResult, ExecStats, NodedupResult, PredStats,
};
