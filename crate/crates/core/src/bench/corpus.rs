//! Random programs for differential testing, and a program family whose
//! partial evaluation blows up.

use std::fmt::Write as _;

use rand::Rng;

use super::gen::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusLimits {
    pub max_rules: usize,
    pub max_idb_body: usize,
    pub max_domain: u32,
    pub max_facts: usize,
}

impl Default for CorpusLimits {
    fn default() -> Self {
        CorpusLimits {
            max_rules: 10,
            max_idb_body: 3,
            max_domain: 30,
            max_facts: 500,
        }
    }
}

fn constant(r: &mut impl Rng, domain: u32) -> String {
    let k = r.gen_range(1..=domain);
    if r.gen_ratio(1, 4) {
        format!("s{k}")
    } else {
        k.to_string()
    }
}

/// A random program with stored facts and a query, as source text. Rules
/// are range restricted; every IDB predicate has at least one rule.
pub fn random_program(seed: u64, lim: CorpusLimits) -> String {
    let mut r = rng(seed);
    let domain = r.gen_range(2..=lim.max_domain.max(2));
    let edb: Vec<(String, usize)> = (0..r.gen_range(1..=3))
        .map(|i| (format!("e{i}"), r.gen_range(1..=3)))
        .collect();
    let n_idb = r.gen_range(1..=4).min(lim.max_rules);
    let idb: Vec<(String, usize)> = (0..n_idb)
        .map(|i| (format!("p{i}"), if r.gen_ratio(1, 5) { 3 } else { r.gen_range(1..=2) }))
        .collect();
    let n_rules = r.gen_range(n_idb..=lim.max_rules.max(n_idb));
    let vars = ["X", "Y", "Z", "W", "V"];
    let mut out = String::new();
    for k in 0..n_rules {
        let (hname, harity) = &idb[if k < n_idb { k } else { r.gen_range(0..n_idb) }];
        // The first literal is stored so every rule can fire from the facts
        // at least in principle; later ones mix stored and derived.
        let mut body: Vec<(String, Vec<String>)> = Vec::new();
        let mut idb_lits = 0;
        for j in 0..r.gen_range(1..=3) {
            let derived = if j > 0 { r.gen_bool(0.5) } else { r.gen_ratio(1, 3) };
            let (name, arity) = if idb_lits < lim.max_idb_body && derived {
                idb_lits += 1;
                &idb[r.gen_range(0..n_idb)]
            } else {
                &edb[r.gen_range(0..edb.len())]
            };
            let args = (0..*arity)
                .map(|_| {
                    if r.gen_ratio(1, 10) {
                        constant(&mut r, domain)
                    } else {
                        vars[r.gen_range(0..vars.len())].to_string()
                    }
                })
                .collect();
            body.push((name.clone(), args));
        }
        let bound: Vec<&String> = body
            .iter()
            .flat_map(|(_, a)| a)
            .filter(|a| a.starts_with(|c: char| c.is_ascii_uppercase()))
            .collect();
        let head: Vec<String> = (0..*harity)
            .map(|_| {
                if bound.is_empty() || r.gen_ratio(1, 10) {
                    constant(&mut r, domain)
                } else {
                    bound[r.gen_range(0..bound.len())].clone()
                }
            })
            .collect();
        let _ = write!(out, "{hname}({}) :- ", head.join(", "));
        let lits: Vec<String> = body.iter().map(|(n, a)| format!("{n}({})", a.join(", "))).collect();
        let _ = writeln!(out, "{}.", lits.join(", "));
    }
    let (qname, qarity) = &idb[r.gen_range(0..n_idb)];
    let q: Vec<String> = (0..*qarity)
        .map(|_| {
            if r.gen_ratio(1, 5) {
                constant(&mut r, domain)
            } else {
                vars[r.gen_range(0..3)].to_string()
            }
        })
        .collect();
    let _ = writeln!(out, "?- {qname}({}).", q.join(", "));
    let per_pred = lim.max_facts / edb.len();
    for (name, arity) in &edb {
        for _ in 0..r.gen_range(0..=per_pred.min(60)) {
            let args: Vec<String> = (0..*arity).map(|_| constant(&mut r, domain)).collect();
            let _ = writeln!(out, "{name}({}).", args.join(", "));
        }
    }
    out
}

/// One recursive clique over `preds` binary predicates `q0..`. Rule `i`
/// passes facts from `q{i}` to the next predicate around the ring, and a
/// second rule per predicate tags the first column with its own constant,
/// so partial evaluation tracks every tag at every predicate.
pub fn explosion_program(preds: usize) -> String {
    let mut out = String::from("q0(X, Y) :- e(X, Y).\n");
    for i in 0..preds {
        let next = (i + 1) % preds;
        let _ = writeln!(out, "q{next}(X, Y) :- q{i}(X, Y).");
        let _ = writeln!(out, "q{next}(k{i}, Y) :- q{i}(X, Y), f(X).");
    }
    out.push_str("?- q0(X, Y).\n");
    out
}

/// `facts` stored facts for [`explosion_program`]: mostly `e` pairs, the rest
/// `f` markers, all over `1..=domain`.
pub fn explosion_facts(facts: usize, domain: u32, seed: u64) -> String {
    let mut r = rng(seed);
    let mut out = String::new();
    let marks = facts / 5;
    for _ in 0..facts - marks {
        let _ = writeln!(out, "e({}, {}).", r.gen_range(1..=domain), r.gen_range(1..=domain));
    }
    for _ in 0..marks {
        let _ = writeln!(out, "f({}).", r.gen_range(1..=domain));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{check_range_restriction, classify_predicates, parse_program};

    #[test]
    fn corpus_respects_limits() {
        let lim = CorpusLimits::default();
        for seed in 0..200 {
            let src = random_program(seed, lim);
            let p = parse_program(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
            assert!(check_range_restriction(&p).is_empty(), "{src}");
            classify_predicates(&p).unwrap();
            assert!(p.user_rules().count() <= lim.max_rules);
            assert!(p.facts.len() <= lim.max_facts);
            for rule in p.user_rules() {
                assert!(rule.body.iter().filter(|a| p.is_idb(&a.pred())).count() <= lim.max_idb_body);
            }
            assert!(p.answer.is_some());
        }
        assert_eq!(random_program(7, lim), random_program(7, lim));
    }

    #[test]
    fn explosion_shape() {
        let p = parse_program(&(explosion_program(200) + &explosion_facts(100, 30, 1))).unwrap();
        assert_eq!(p.idb.len(), 200);
        assert_eq!(p.facts.len(), 100);
        let g = crate::datalog::build_predicate_graph(&p);
        assert_eq!(g.cliques.iter().filter(|c| c.recursive).count(), 1);
    }
}
