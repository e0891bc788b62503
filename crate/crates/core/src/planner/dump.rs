use std::fmt::Write;

use super::bindings::Operand;
use super::plan::{PushPlan, RelRef, StartOp};

/// Text listing of a plan: relations, fact types and rule applications, one
/// per line. Stable across runs.
pub fn dump_plan(plan: &PushPlan) -> String {
    let mut s = String::new();
    let mode = match plan.mode {
        super::FactTypeMode::Pe => "pe",
        super::FactTypeMode::Simple => "simple",
    };
    let _ = writeln!(
        s,
        "plan mode={mode} fact_types={} apps={} registers={}",
        plan.fact_types.len(),
        plan.apps.len(),
        plan.registers
    );
    if let Some(e) = plan.explosion {
        let _ = writeln!(s, "fallback guard={} reached={}", e.guard, e.reached);
    }
    for d in &plan.schema.edb {
        let _ = writeln!(s, "edb {} {} {}", d.name, d.kind.name(), d.pred);
    }
    for d in &plan.temps {
        let _ = writeln!(s, "temp {} {} {}", d.name, d.kind.name(), d.pred);
    }
    for (i, n) in plan.fact_types.iter().enumerate() {
        let consumers: Vec<String> = n.consumers.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            s,
            "ft {i} {} regs={}+{} consumers=[{}]",
            n.ft.display(&plan.schema),
            n.reg_base,
            n.ft.registers(),
            consumers.join(",")
        );
    }
    for (i, a) in plan.apps.iter().enumerate() {
        let input = match a.input {
            Some(f) => plan.fact_types[f].ft.display(&plan.schema).to_string(),
            None => "INIT".to_string(),
        };
        let steps: Vec<String> = a
            .steps
            .iter()
            .map(|st| match st.rel {
                RelRef::Edb(e) => plan.schema.edb[e as usize].name.clone(),
                RelRef::Temp(t) => format!("{}*", plan.temps[t as usize].name),
            })
            .collect();
        let _ = write!(
            s,
            "app {i} rule={} {input} -> {} via [{}]",
            a.rule,
            plan.fact_types[a.output].ft.display(&plan.schema),
            steps.join(",")
        );
        let checks = a
            .start
            .iter()
            .filter(|o| matches!(o, StartOp::Check { .. } | StartOp::Expect { .. }))
            .count();
        if checks > 0 {
            let _ = write!(s, " checks={checks}");
        }
        if let Some(r) = a.ready_stage {
            let _ = write!(s, " after={r}");
        }
        if a.recursive {
            let saves: Vec<String> = a.save_set().iter().map(|r| format!("r{r}")).collect();
            let _ = write!(s, " recursive saves=[{}]", saves.join(","));
        }
        let writes: Vec<String> = a
            .writes
            .iter()
            .map(|&(r, o)| match o {
                Operand::Local(l) => format!("r{r}={}", plan.program.rules[a.rule].variables()[l as usize]),
                Operand::Const(c) => format!("r{r}=#{c}"),
            })
            .collect();
        if !writes.is_empty() {
            let _ = write!(s, " writes=[{}]", writes.join(","));
        }
        s.push('\n');
    }
    s
}
