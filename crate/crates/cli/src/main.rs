use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pushlog::bench::{gen_eav, gen_join1, gen_tc, run_benchmark, BenchConfig, Engine};
use pushlog::datalog::{build_predicate_graph, check_range_restriction, classify_predicates, parse_program, Program};
use pushlog::loader::LoadOptions;
use pushlog::planner::{build_push_plan, dump_plan, DedupMode, FactTypeMode, PlanConfig, SetChoice};

#[derive(Parser)]
#[command(name = "pushlog", version, about = "Push-based bottom-up Datalog engine")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a program over fact files and report timings and counts.
    Run(RunArgs),
    /// Generate benchmark data.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Check range restriction and predicate classification.
    Check {
        #[arg(long)]
        program: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    program: PathBuf,
    /// Fact file; repeat for several.
    #[arg(long)]
    data: Vec<PathBuf>,
    /// push-pe, push-simple, seminaive or naive.
    #[arg(long, default_value = "push-pe")]
    engine: Engine,
    /// auto, bitmap, dynhash or fixedhash.
    #[arg(long, default_value = "auto")]
    set_impl: SetChoice,
    /// all, clique or answer-only.
    #[arg(long, default_value = "all")]
    dedup: DedupMode,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Only count answers (the default).
    #[arg(long, conflicts_with = "print_answers")]
    count_only: bool,
    /// Print every answer as a fact.
    #[arg(long)]
    print_answers: bool,
    /// Write the key=value report lines to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the report as one JSON document to this file.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print the compiled plan before running.
    #[arg(long)]
    dump_plan: bool,
    /// Maximum number of partial-evaluation fact types.
    #[arg(long)]
    guard: Option<usize>,
    /// Fail on the first malformed data line.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = pushlog::loader::DEFAULT_CHUNK)]
    chunk_size: usize,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Five relations c2, c3, c4, d1, d2 of random pairs.
    Join1 {
        #[arg(long, default_value_t = 10_000)]
        facts: usize,
        #[arg(long, default_value_t = 1000)]
        domain: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Distinct random par edges.
    Tc {
        #[arg(long, default_value_t = 50_000)]
        edges: u64,
        #[arg(long, default_value_t = 1000)]
        nodes: u32,
        /// Only edges (i, j) with i < j.
        #[arg(long)]
        acyclic: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attribute/value document facts.
    Eav {
        #[arg(long, default_value_t = 10_000)]
        docs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_program(path: &PathBuf) -> Result<Program> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_program(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(a: RunArgs) -> Result<()> {
    let program = read_program(&a.program)?;
    if a.dump_plan {
        match a.engine {
            Engine::PushPe | Engine::PushSimple => {
                let cfg = PlanConfig {
                    mode: if a.engine == Engine::PushPe {
                        FactTypeMode::Pe
                    } else {
                        FactTypeMode::Simple
                    },
                    dedup: a.dedup,
                    set_impl: a.set_impl,
                    guard: a.guard,
                };
                print!("{}", dump_plan(&build_push_plan(&program, &cfg)?));
            }
            _ => eprintln!("--dump-plan applies to the push engines only"),
        }
    }
    let cfg = BenchConfig {
        engine: a.engine,
        set_impl: a.set_impl,
        dedup: a.dedup,
        trials: a.trials,
        keep_answers: a.print_answers,
        load: LoadOptions {
            chunk_size: a.chunk_size,
            strict: a.strict,
            line_reader: false,
        },
        guard: a.guard,
        ..BenchConfig::default()
    };
    let report = run_benchmark(&program, &a.data, &cfg)?;
    if let Some(tuples) = &report.answer_tuples {
        let name = program.answer.as_ref().map(|p| p.name.as_str()).unwrap_or("answer");
        let mut out = String::new();
        for t in tuples {
            let args: Vec<String> = t.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{name}({}).", args.join(","));
        }
        print!("{out}");
    }
    print!("{}", report.table());
    print!("{}", report.lines());
    if let Some(path) = &a.report {
        std::fs::write(path, report.lines()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.json {
        let doc = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, doc + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn check(path: &PathBuf) -> Result<()> {
    let p = read_program(path)?;
    let (edb, idb) = classify_predicates(&p)?;
    let violations = check_range_restriction(&p);
    for v in &violations {
        eprintln!("rule {}: variable {} does not occur in the body", v.rule, v.variable);
    }
    let names = |s: &std::collections::BTreeSet<pushlog::datalog::Pred>| {
        s.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
    };
    println!("edb {}", names(&edb));
    println!("idb {}", names(&idb));
    let g = build_predicate_graph(&p);
    for (i, c) in g.cliques.iter().enumerate() {
        let preds: Vec<String> = c.preds.iter().map(|p| p.to_string()).collect();
        println!(
            "clique {i} {}{}",
            preds.join(" "),
            if c.recursive { " recursive" } else { "" }
        );
    }
    if let Some(a) = &p.answer {
        println!("answer {a}");
    }
    if !violations.is_empty() {
        bail!("{} range restriction violation(s)", violations.len());
    }
    Ok(())
}

fn gen(cmd: GenCmd) -> Result<()> {
    match cmd {
        GenCmd::Join1 {
            facts,
            domain,
            seed,
            out,
        } => {
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for p in gen_join1(&out, facts, domain, seed)? {
                println!("{}", p.display());
            }
        }
        GenCmd::Tc {
            edges,
            nodes,
            acyclic,
            seed,
            out,
        } => gen_tc(&out, edges, nodes, !acyclic, seed)?,
        GenCmd::Eav { docs, seed, out } => {
            let d = gen_eav(docs, seed);
            std::fs::write(&out, &d.text).with_context(|| format!("writing {}", out.display()))?;
            for (attr, n) in &d.counts {
                println!("{attr}={n}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Gen(g) => gen(g),
        Cmd::Check { program } => check(&program),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
