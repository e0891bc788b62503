use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::baseline::{
    execute_naive, execute_seminaive, plan_seminaive, select_answers, Facts, IterationLimit, SeminaiveStats,
};
use crate::datalog::{Const, Program};
use crate::loader::{load_file, read_facts, LoadError, LoadOptions};
use crate::planner::{build_push_plan, DedupMode, FactTypeMode, PlanConfig, PlanError, SetChoice};
use crate::runtime::{execute, Database, ExecError, ExecOptions, ExecStats, LoadStats};
use crate::storage::{MemoryReport, StorageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    PushPe,
    PushSimple,
    Seminaive,
    Naive,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::PushPe, Engine::PushSimple, Engine::Seminaive, Engine::Naive];

    pub fn name(self) -> &'static str {
        match self {
            Engine::PushPe => "push-pe",
            Engine::PushSimple => "push-simple",
            Engine::Seminaive => "seminaive",
            Engine::Naive => "naive",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engine `{s}` (push-pe, push-simple, seminaive, naive)"))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub engine: Engine,
    pub set_impl: SetChoice,
    pub dedup: DedupMode,
    pub trials: usize,
    /// Keep the decoded answers of the last trial in the report.
    pub keep_answers: bool,
    pub load: LoadOptions,
    pub guard: Option<usize>,
    pub naive_iterations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            engine: Engine::PushPe,
            set_impl: SetChoice::Auto,
            dedup: DedupMode::All,
            trials: 1,
            keep_answers: false,
            load: LoadOptions::default(),
            guard: None,
            naive_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Naive(#[from] IterationLimit),
    #[error("trials must be at least 1")]
    NoTrials,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trial {
    pub load_ms: f64,
    pub exec_ms: f64,
    pub total_ms: f64,
    pub answers: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchReport {
    pub engine: String,
    pub set_impl: String,
    pub dedup: String,
    /// Fact-type construction actually used by the push engines.
    pub fact_types: Option<String>,
    pub explosion_guard: Option<usize>,
    pub explosion_reached: Option<usize>,
    pub trials: usize,
    pub compile_ms: f64,
    pub load_ms: f64,
    pub exec_ms: f64,
    pub total_ms: f64,
    pub per_trial: Vec<Trial>,
    pub answers: u64,
    pub peak_rss_bytes: Option<u64>,
    pub structure_bytes: u64,
    pub memory: MemoryReport,
    pub load: LoadStats,
    pub exec: Option<ExecStats>,
    pub seminaive: Option<SeminaiveStats>,
    #[serde(skip)]
    pub answer_tuples: Option<Vec<Vec<Const>>>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// `VmHWM` of this process, where the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

struct Outcome {
    load_ms: f64,
    exec_ms: f64,
    answers: u64,
    memory: MemoryReport,
    load: LoadStats,
    exec: Option<ExecStats>,
    seminaive: Option<SeminaiveStats>,
    tuples: Option<Vec<Vec<Const>>>,
}

fn load_db(db: &mut Database, p: &Program, data: &[PathBuf], opts: LoadOptions) -> Result<f64, BenchError> {
    let t = Instant::now();
    db.add_program_facts(p)?;
    for path in data {
        load_file(db, path, opts)?;
    }
    Ok(ms(t))
}

/// Plans `p` once, then per trial loads `data` into fresh relations and
/// evaluates. Planning, loading and evaluation are timed separately.
pub fn run_benchmark(p: &Program, data: &[PathBuf], cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.trials == 0 {
        return Err(BenchError::NoTrials);
    }
    let mut report = BenchReport {
        engine: cfg.engine.name().into(),
        set_impl: format!("{:?}", cfg.set_impl).to_lowercase(),
        dedup: match cfg.dedup {
            DedupMode::All => "all",
            DedupMode::Clique => "clique",
            DedupMode::AnswerOnly => "answer-only",
        }
        .into(),
        trials: cfg.trials,
        ..BenchReport::default()
    };
    let compile = Instant::now();
    let push = match cfg.engine {
        Engine::PushPe | Engine::PushSimple => {
            let plan = build_push_plan(
                p,
                &PlanConfig {
                    mode: if cfg.engine == Engine::PushPe {
                        FactTypeMode::Pe
                    } else {
                        FactTypeMode::Simple
                    },
                    dedup: cfg.dedup,
                    set_impl: cfg.set_impl,
                    guard: cfg.guard,
                },
            )?;
            report.fact_types = Some(match plan.mode {
                FactTypeMode::Pe => "pe".into(),
                FactTypeMode::Simple => "simple".into(),
            });
            if let Some(sig) = &plan.explosion {
                report.explosion_guard = Some(sig.guard);
                report.explosion_reached = Some(sig.reached);
            }
            Some(plan)
        }
        _ => None,
    };
    let semi = match cfg.engine {
        Engine::Seminaive => Some(plan_seminaive(p, cfg.set_impl)?),
        _ => None,
    };
    if cfg.engine == Engine::Naive {
        crate::datalog::classify_predicates(p).map_err(PlanError::from)?;
    }
    report.compile_ms = ms(compile);

    let mut last = None;
    for _ in 0..cfg.trials {
        let total = Instant::now();
        let out = match cfg.engine {
            Engine::PushPe | Engine::PushSimple => {
                let plan = push.as_ref().expect("planned");
                let mut db = Database::new(&plan.schema);
                let load_ms = load_db(&mut db, p, data, cfg.load)?;
                let t = Instant::now();
                let r = execute(
                    plan,
                    &db,
                    ExecOptions {
                        materialize_answers: cfg.keep_answers,
                    },
                )?;
                let exec_ms = ms(t);
                let mut memory = MemoryReport::new();
                db.memory(&mut memory);
                r.memory(&mut memory);
                Outcome {
                    load_ms,
                    exec_ms,
                    answers: r.stats.answers,
                    memory,
                    load: db.load.clone(),
                    tuples: cfg.keep_answers.then(|| r.answer_tuples(&db)),
                    exec: Some(r.stats),
                    seminaive: None,
                }
            }
            Engine::Seminaive => {
                let plan = semi.as_ref().expect("planned");
                let mut db = Database::new(&plan.schema);
                let load_ms = load_db(&mut db, p, data, cfg.load)?;
                let t = Instant::now();
                let r = execute_seminaive(plan, &db)?;
                let exec_ms = ms(t);
                let mut memory = MemoryReport::new();
                db.memory(&mut memory);
                Outcome {
                    load_ms,
                    exec_ms,
                    answers: r.stats.answers,
                    memory,
                    load: db.load.clone(),
                    tuples: cfg.keep_answers.then(|| r.answer_tuples(&db)),
                    exec: None,
                    seminaive: Some(r.stats),
                }
            }
            Engine::Naive => {
                let t = Instant::now();
                let mut edb = Facts::new();
                let mut malformed = 0;
                for path in data {
                    malformed += read_facts(path, cfg.load, &mut edb)?;
                }
                let load_ms = ms(t);
                let t = Instant::now();
                let facts = execute_naive(p, &edb, cfg.naive_iterations)?;
                let answers = select_answers(p, &facts);
                let exec_ms = ms(t);
                let stored = edb.values().map(|s| s.len() as u64).sum();
                Outcome {
                    load_ms,
                    exec_ms,
                    answers: answers.len() as u64,
                    memory: MemoryReport::new(),
                    load: LoadStats {
                        stored,
                        malformed,
                        millis: load_ms,
                        ..LoadStats::default()
                    },
                    tuples: cfg.keep_answers.then(|| answers.into_iter().collect()),
                    exec: None,
                    seminaive: None,
                }
            }
        };
        report.per_trial.push(Trial {
            load_ms: out.load_ms,
            exec_ms: out.exec_ms,
            total_ms: ms(total),
            answers: out.answers,
        });
        last = Some(out);
    }
    let n = cfg.trials as f64;
    report.load_ms = report.per_trial.iter().map(|t| t.load_ms).sum::<f64>() / n;
    report.exec_ms = report.per_trial.iter().map(|t| t.exec_ms).sum::<f64>() / n;
    report.total_ms = report.per_trial.iter().map(|t| t.total_ms).sum::<f64>() / n;
    let last = last.expect("at least one trial");
    report.answers = last.answers;
    report.structure_bytes = last.memory.total_bytes() as u64;
    report.memory = last.memory;
    report.load = last.load;
    report.exec = last.exec;
    report.seminaive = last.seminaive;
    report.answer_tuples = last.tuples;
    report.peak_rss_bytes = peak_rss_bytes();
    Ok(report)
}

impl BenchReport {
    /// One `key=value` line per metric.
    pub fn lines(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("engine", &self.engine);
        kv("set_impl", &self.set_impl);
        kv("dedup", &self.dedup);
        if let Some(ft) = &self.fact_types {
            kv("fact_types", ft);
        }
        if let (Some(g), Some(r)) = (self.explosion_guard, self.explosion_reached) {
            kv("explosion_guard", &g);
            kv("explosion_reached", &r);
        }
        kv("trials", &self.trials);
        kv("compile_ms", &format!("{:.3}", self.compile_ms));
        kv("load_ms", &format!("{:.3}", self.load_ms));
        kv("exec_ms", &format!("{:.3}", self.exec_ms));
        kv("total_ms", &format!("{:.3}", self.total_ms));
        for (i, t) in self.per_trial.iter().enumerate() {
            kv(&format!("trial.{i}.load_ms"), &format!("{:.3}", t.load_ms));
            kv(&format!("trial.{i}.exec_ms"), &format!("{:.3}", t.exec_ms));
            kv(&format!("trial.{i}.total_ms"), &format!("{:.3}", t.total_ms));
        }
        kv("answers", &self.answers);
        match self.peak_rss_bytes {
            Some(b) => kv("peak_rss_bytes", &b),
            None => kv("peak_rss_bytes", &"absent"),
        }
        kv("structure_bytes", &self.structure_bytes);
        kv("load.lines", &self.load.lines);
        kv("load.parsed", &self.load.parsed);
        kv("load.stored", &self.load.stored);
        kv("load.skipped", &self.load.skipped);
        kv("load.non_matching", &self.load.non_matching);
        kv("load.malformed", &self.load.malformed);
        if let Some(e) = &self.exec {
            kv("exec.derivations", &e.derivations);
            kv("exec.facts", &e.facts);
            kv("exec.duplicates", &e.duplicates);
            kv("exec.frames_pushed", &e.frames_pushed);
            kv("exec.max_frames", &e.max_frames);
            kv("exec.saves", &e.saves);
            kv("exec.restores", &e.restores);
        }
        if let Some(e) = &self.seminaive {
            kv("seminaive.derivations", &e.derivations);
            kv("seminaive.facts", &e.facts);
            kv("seminaive.duplicates", &e.duplicates);
            kv("seminaive.iterations", &e.iterations);
        }
        s
    }

    /// Human-readable summary.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "engine {}  sets {}  dedup {}  trials {}",
            self.engine, self.set_impl, self.dedup, self.trials
        );
        if let Some(g) = self.explosion_guard {
            let _ = writeln!(s, "partial evaluation exceeded {g} fact types; ran without it");
        }
        let _ = writeln!(s, "{:<10}{:>12}", "phase", "ms");
        let _ = writeln!(s, "{:<10}{:>12.3}", "compile", self.compile_ms);
        let _ = writeln!(s, "{:<10}{:>12.3}", "load", self.load_ms);
        let _ = writeln!(s, "{:<10}{:>12.3}", "execute", self.exec_ms);
        let _ = writeln!(s, "{:<10}{:>12.3}", "total", self.total_ms);
        let _ = writeln!(s, "answers {}", self.answers);
        if !self.memory.entries.is_empty() {
            let _ = writeln!(s, "{:<32}{:<10}{:>12}{:>14}", "structure", "kind", "rows", "bytes");
            for e in &self.memory.entries {
                let _ = writeln!(s, "{:<32}{:<10}{:>12}{:>14}", e.name, e.kind, e.rows, e.bytes);
            }
        }
        let _ = writeln!(s, "structure bytes {}", self.structure_bytes);
        match self.peak_rss_bytes {
            Some(b) => {
                let _ = writeln!(s, "peak rss bytes {b}");
            }
            None => s.push_str("peak rss unavailable\n"),
        }
        s
    }
}
