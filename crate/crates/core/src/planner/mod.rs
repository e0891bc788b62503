//! Compilation of a program into a push plan: value domains, stored relation
//! shapes, normalized rules, fact types and the rule-application graph.

mod bindings;
mod dump;
mod fact_types;
mod normalize;
mod plan;
mod schema;

pub use bindings::{analyze_bindings, join, Access, Locals, Operand};
pub use dump::dump_plan;
pub use fact_types::{
    apply, compute_fact_types_pe, compute_fact_types_simple, Applied, ExplosionSignal, FactType, FactTypeMode, FtArg,
    InputOp, Src,
};
pub use normalize::{normalize_rules, pushing_literal, Normalized, RuleVariant, Source};
pub use plan::{
    build_plan, build_push_plan, AnswerSpec, App, DedupMode, FactTypeNode, PlanConfig, PlanError, PredInfo, PushPlan,
    RelRef, SetChoice, StartOp, Step, AUTO_BITMAP_BITS,
};
pub use schema::{BindingPattern, RelDesc, RelKind, Schema};
