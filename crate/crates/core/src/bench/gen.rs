//! Deterministic dataset generators. Every generator draws from a ChaCha8
//! stream seeded with the caller's `u64`, so equal parameters give
//! byte-identical output on every platform.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datalog::push_symbol;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("{edges} edges requested but an acyclic graph on {nodes} nodes has at most {capacity}")]
    AcyclicCapacity { edges: u64, nodes: u32, capacity: u64 },
    #[error("{edges} distinct edges requested but {nodes} nodes allow only {capacity}")]
    Capacity { edges: u64, nodes: u32, capacity: u64 },
    #[error("nodes and domain must be at least 1")]
    EmptyDomain,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The EDB relations of the join1 program, in generation order.
pub const JOIN1_RELATIONS: [&str; 5] = ["c2", "c3", "c4", "d1", "d2"];

/// `facts` binary facts per relation, both columns uniform in `1..=domain`.
/// Draws are independent, so a relation may repeat a pair.
pub fn join1_pairs(facts: usize, domain: u32, seed: u64) -> Result<Vec<Vec<(u32, u32)>>, GenError> {
    if domain == 0 {
        return Err(GenError::EmptyDomain);
    }
    let mut r = rng(seed);
    Ok(JOIN1_RELATIONS
        .iter()
        .map(|_| {
            (0..facts)
                .map(|_| (r.gen_range(1..=domain), r.gen_range(1..=domain)))
                .collect()
        })
        .collect())
}

pub fn render_pairs(pred: &str, pairs: &[(u32, u32)]) -> String {
    let mut s = String::with_capacity(pairs.len() * (pred.len() + 12));
    for (a, b) in pairs {
        let _ = writeln!(s, "{pred}({a},{b}).");
    }
    s
}

fn write(path: &Path, text: &str) -> Result<(), GenError> {
    std::fs::write(path, text).map_err(|source| GenError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `c2.P`, `c3.P`, `c4.P`, `d1.P` and `d2.P` into `dir`.
pub fn gen_join1(dir: &Path, facts: usize, domain: u32, seed: u64) -> Result<Vec<PathBuf>, GenError> {
    let rels = join1_pairs(facts, domain, seed)?;
    let mut out = Vec::new();
    for (name, pairs) in JOIN1_RELATIONS.iter().zip(&rels) {
        let path = dir.join(format!("{name}.P"));
        write(&path, &render_pairs(name, pairs))?;
        out.push(path);
    }
    Ok(out)
}

/// Ordered pairs over `1..=nodes` that a graph may contain.
pub fn tc_capacity(nodes: u32, cyclic: bool) -> u64 {
    let n = nodes as u64;
    if cyclic {
        n * n
    } else {
        n * n.saturating_sub(1) / 2
    }
}

/// `edges` distinct edges over nodes `1..=nodes`. Cyclic mode samples any
/// ordered pair (self loops included); acyclic mode only pairs `i < j`.
pub fn tc_edges(edges: u64, nodes: u32, cyclic: bool, seed: u64) -> Result<Vec<(u32, u32)>, GenError> {
    if nodes == 0 {
        return Err(GenError::EmptyDomain);
    }
    let capacity = tc_capacity(nodes, cyclic);
    if edges > capacity {
        return Err(if cyclic {
            GenError::Capacity { edges, nodes, capacity }
        } else {
            GenError::AcyclicCapacity { edges, nodes, capacity }
        });
    }
    let mut r = rng(seed);
    let picked = index::sample(&mut r, capacity as usize, edges as usize);
    let n = nodes as usize;
    if cyclic {
        return Ok(picked
            .into_iter()
            .map(|k| ((k / n) as u32 + 1, (k % n) as u32 + 1))
            .collect());
    }
    // Row i (0-based) holds the pairs (i, j) for j in i+1..n.
    let mut starts = Vec::with_capacity(n);
    let mut acc = 0usize;
    for i in 0..n {
        starts.push(acc);
        acc += n - 1 - i;
    }
    Ok(picked
        .into_iter()
        .map(|k| {
            let i = starts.partition_point(|&s| s <= k) - 1;
            let j = i + 1 + (k - starts[i]);
            (i as u32 + 1, j as u32 + 1)
        })
        .collect())
}

/// Writes the `par` facts of [`tc_edges`] to `path`.
pub fn gen_tc(path: &Path, edges: u64, nodes: u32, cyclic: bool, seed: u64) -> Result<(), GenError> {
    let e = tc_edges(edges, nodes, cyclic, seed)?;
    write(path, &render_pairs("par", &e))
}

/// A synthetic attribute/value file shaped like the DBLP dump, with the
/// number of facts written per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EavData {
    pub text: String,
    pub counts: BTreeMap<String, u64>,
}

const WORDS: [&str; 16] = [
    "magic",
    "sets",
    "datalog",
    "query",
    "push",
    "join",
    "index",
    "recursive",
    "deductive",
    "database",
    "evaluation",
    "bottom-up",
    "on the",
    "power",
    "of",
    "it's",
];
const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// `docs` documents, each with a title and a year, one to four authors, a
/// month for about one in a hundred, and some pages/ee/url noise.
pub fn gen_eav(docs: usize, seed: u64) -> EavData {
    let mut r = rng(seed);
    let mut text = String::new();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut fact = |text: &mut String, id: &str, attr: &str, value: &str, int: bool| {
        text.push_str("att(");
        push_symbol(text, id);
        text.push(',');
        text.push_str(attr);
        text.push(',');
        if int {
            text.push_str(value);
        } else {
            push_symbol(text, value);
        }
        text.push_str(").\n");
        *counts.entry(attr.to_string()).or_default() += 1;
    };
    for d in 0..docs {
        let id = format!("node{d:06}x{:04x}", r.gen::<u16>());
        let words = r.gen_range(2..8);
        let mut title = String::new();
        for w in 0..words {
            if w > 0 {
                title.push(' ');
            }
            title.push_str(WORDS[r.gen_range(0..WORDS.len())]);
        }
        title.push('.');
        fact(&mut text, &id, "title", &title, false);
        fact(&mut text, &id, "year", &r.gen_range(1970..2016).to_string(), true);
        for _ in 0..r.gen_range(1..=4) {
            let a = format!("Author {}", r.gen_range(0..5000));
            fact(&mut text, &id, "author", &a, false);
        }
        if r.gen_ratio(1, 100) {
            fact(&mut text, &id, "month", MONTHS[r.gen_range(0..12)], false);
        }
        if r.gen_bool(0.7) {
            let from = r.gen_range(1..400);
            let pages = format!("{}-{}", from, from + r.gen_range(1..30));
            fact(&mut text, &id, "pages", &pages, false);
        }
        if r.gen_bool(0.5) {
            fact(&mut text, &id, "ee", &format!("db/{id}.html"), false);
        }
    }
    EavData { text, counts }
}
