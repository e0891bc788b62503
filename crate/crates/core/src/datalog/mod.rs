//! Datalog syntax, program model and predicate dependency analysis.

mod graph;
mod parser;
mod program;
mod term;

pub use graph::{build_predicate_graph, Clique, PredicateGraph};
pub use parser::{is_anonymous_var, parse_fact, Clause, ParseError, Span};
pub use program::{
    check_range_restriction, classify_predicates, parse_program, ClassifyError, Program, RangeViolation, ANSWER,
};
pub use term::{is_bare_symbol, push_symbol, Atom, Const, Pred, Rule, Term};
