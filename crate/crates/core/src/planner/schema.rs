use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::datalog::{Atom, Const, Pred, Program, Term};
use crate::storage::StringTable;

/// Per-argument bound (`b`) / free (`f`) annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BindingPattern(pub Vec<bool>);

impl BindingPattern {
    pub fn free(n: usize) -> Self {
        BindingPattern(vec![false; n])
    }

    pub fn bound(n: usize) -> Self {
        BindingPattern(vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_free(&self) -> bool {
        self.0.iter().all(|b| !b)
    }

    pub fn all_bound(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// Structure selected by this pattern.
    pub fn kind(&self) -> RelKind {
        if self.all_bound() {
            RelKind::Set
        } else if self.all_free() {
            RelKind::List
        } else {
            RelKind::Map
        }
    }
}

impl fmt::Display for BindingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "b" } else { "f" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BindingPattern {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.chars()
            .map(|c| match c {
                'b' => Ok(true),
                'f' => Ok(false),
                _ => Err(format!("invalid binding pattern `{s}`")),
            })
            .collect::<Result<_, _>>()
            .map(BindingPattern)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelKind {
    List,
    Map,
    Set,
}

impl RelKind {
    pub fn name(self) -> &'static str {
        match self {
            RelKind::List => "list",
            RelKind::Map => "map",
            RelKind::Set => "set",
        }
    }
}

/// A stored relation specialized for one access shape of a predicate:
/// constant columns are selected away and the rest are laid out by pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelDesc {
    pub name: String,
    pub pred: Pred,
    /// `(column, constant id)` selections; these columns are not stored.
    pub filters: Vec<(usize, u32)>,
    /// Stored columns in order.
    pub columns: Vec<usize>,
    /// Pattern over the stored columns.
    pub pattern: BindingPattern,
    pub kind: RelKind,
}

impl RelDesc {
    /// Positions within `columns` that form the lookup key.
    pub fn key_positions(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&i| self.pattern.0[i]).collect()
    }

    /// Positions within `columns` that are returned as values.
    pub fn value_positions(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&i| !self.pattern.0[i]).collect()
    }

    /// Whether a full tuple of `pred` passes the constant selections.
    #[inline]
    pub fn accepts(&self, t: &[u32]) -> bool {
        self.filters.iter().all(|&(c, v)| t[c] == v)
    }
}

/// Union-find over predicate argument positions; positions connected by a
/// shared variable end up in one domain with one string table.
#[derive(Debug, Clone, Default)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn add(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// Value domains, their string tables and the EDB descriptors of a plan.
#[derive(Debug, Clone)]
pub struct Schema {
    pub edb_preds: BTreeSet<Pred>,
    pub idb_preds: BTreeSet<Pred>,
    /// Domain of every argument position, per predicate.
    pub domains: BTreeMap<Pred, Vec<usize>>,
    /// One table per domain, holding the program's constants.
    pub tables: Vec<StringTable>,
    pub edb: Vec<RelDesc>,
}

impl Schema {
    /// Computes domains for every predicate of `p` and interns its constants.
    pub fn new(p: &Program) -> Schema {
        let mut uf = UnionFind::default();
        let mut pos: BTreeMap<Pred, Vec<usize>> = BTreeMap::new();
        let mut node = |uf: &mut UnionFind, a: &Atom, i: usize| -> usize {
            let cols = pos
                .entry(a.pred())
                .or_insert_with(|| (0..a.arity()).map(|_| usize::MAX).collect());
            if cols[i] == usize::MAX {
                cols[i] = uf.add();
            }
            cols[i]
        };
        for r in &p.rules {
            let mut first: HashMap<&str, usize> = HashMap::new();
            for a in std::iter::once(&r.head).chain(&r.body) {
                for (i, t) in a.args.iter().enumerate() {
                    let n = node(&mut uf, a, i);
                    if let Term::Var(v) = t {
                        match first.get(v.as_str()) {
                            Some(&m) => uf.union(m, n),
                            None => {
                                first.insert(v, n);
                            }
                        }
                    }
                }
            }
        }
        for a in p.facts.iter().chain(p.query.iter().flatten()) {
            for i in 0..a.arity() {
                node(&mut uf, a, i);
            }
        }
        // The goal filters answers of the designated predicate position-wise.
        if let (Some(goal), Some(ans)) = (&p.answer_goal, &p.answer) {
            if goal.pred() == *ans {
                // Positions compared by a repeated goal variable share a domain.
                let mut first: HashMap<&str, usize> = HashMap::new();
                for (i, t) in goal.args.iter().enumerate() {
                    let n = node(&mut uf, goal, i);
                    if let Term::Var(v) = t {
                        match first.get(v.as_str()) {
                            Some(&m) => uf.union(m, n),
                            None => {
                                first.insert(v, n);
                            }
                        }
                    }
                }
            }
        }

        let mut dense: HashMap<usize, usize> = HashMap::new();
        let mut domains = BTreeMap::new();
        for (pred, cols) in &pos {
            let ids = cols
                .iter()
                .map(|&n| {
                    let root = uf.find(n);
                    let next = dense.len();
                    *dense.entry(root).or_insert(next)
                })
                .collect();
            domains.insert(pred.clone(), ids);
        }
        let mut schema = Schema {
            edb_preds: p.edb.clone(),
            idb_preds: p.idb.clone(),
            domains,
            tables: (0..dense.len()).map(|_| StringTable::new()).collect(),
            edb: Vec::new(),
        };
        for r in &p.rules {
            for a in std::iter::once(&r.head).chain(&r.body) {
                schema.intern_atom_constants(a);
            }
        }
        if let Some(goal) = &p.answer_goal {
            schema.intern_atom_constants(goal);
        }
        schema
    }

    fn intern_atom_constants(&mut self, a: &Atom) {
        for (i, t) in a.args.iter().enumerate() {
            if let Term::Const(c) = t {
                self.intern(&a.pred(), i, c);
            }
        }
    }

    pub fn domain(&self, pred: &Pred, col: usize) -> usize {
        self.domains[pred][col]
    }

    /// Interns `c` in the table of `pred`'s column `col`.
    pub fn intern(&mut self, pred: &Pred, col: usize, c: &Const) -> u32 {
        let d = self.domain(pred, col);
        self.tables[d].intern(&c.to_string())
    }

    /// Id of a constant that was interned at plan time.
    pub fn const_id(&self, pred: &Pred, col: usize, c: &Const) -> u32 {
        let d = self.domain(pred, col);
        self.tables[d]
            .get(&c.to_string())
            .unwrap_or_else(|| panic!("constant {c} of {pred} was not interned"))
    }

    /// Registers an EDB access shape, reusing an identical descriptor.
    pub fn request_edb(&mut self, pred: &Pred, filters: &[(usize, Const)], pattern: &BindingPattern) -> usize {
        let desc = self.describe(pred, filters, pattern);
        match self.edb.iter().position(|d| *d == desc) {
            Some(i) => i,
            None => {
                self.edb.push(desc);
                self.edb.len() - 1
            }
        }
    }

    /// Builds (but does not register) a descriptor for an access shape.
    pub fn describe(&self, pred: &Pred, filters: &[(usize, Const)], pattern: &BindingPattern) -> RelDesc {
        let mut name = pred.name.clone();
        let mut ids = Vec::new();
        for (col, c) in filters {
            name.push('_');
            name.extend(
                c.to_string()
                    .chars()
                    .map(|ch| if ch.is_alphanumeric() { ch } else { '_' }),
            );
            ids.push((*col, self.const_id(pred, *col, c)));
        }
        if !pattern.is_empty() {
            name.push('_');
            name.push_str(&pattern.to_string());
        }
        let columns = (0..pred.arity).filter(|c| !filters.iter().any(|f| f.0 == *c)).collect();
        RelDesc {
            name,
            pred: pred.clone(),
            filters: ids,
            columns,
            pattern: pattern.clone(),
            kind: pattern.kind(),
        }
    }

    /// Current number of values in each column domain of `pred`.
    pub fn domain_sizes(&self, tables: &[StringTable], pred: &Pred) -> Vec<usize> {
        self.domains[pred].iter().map(|&d| tables[d].len()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    #[test]
    fn shared_variables_share_domains() {
        let p = parse_program("answer(Id, T, Y) :- att(Id, title, T), att(Id, year, Y).").unwrap();
        let s = Schema::new(&p);
        let att = Pred::new("att", 3);
        let ans = Pred::new("answer", 3);
        assert_eq!(s.domains[&att].iter().collect::<BTreeSet<_>>().len(), 3);
        assert_eq!(s.domain(&ans, 0), s.domain(&att, 0));
        assert_eq!(s.domain(&ans, 1), s.domain(&att, 2));
        assert_eq!(s.tables[s.domain(&att, 1)].len(), 2);
    }

    #[test]
    fn join1_positions_are_linked() {
        let p = parse_program("a(X,Y) :- b1(X,Z), b2(Z,Y).\nb1(X,Y) :- c1(X,Z), c2(Z,Y).").unwrap();
        let s = Schema::new(&p);
        let d = |n: &str, c| s.domain(&Pred::new(n, 2), c);
        assert_eq!(d("b1", 1), d("b2", 0));
        assert_eq!(d("a", 0), d("c1", 0));
    }

    #[test]
    fn repeated_goal_variable_links_columns() {
        let p = parse_program("p(Z, X, X) :- e(X, Z).\n?- p(X, X, Z).").unwrap();
        let s = Schema::new(&p);
        let d = |c| s.domain(&Pred::new("p", 3), c);
        assert_eq!(d(0), d(1));
        assert_eq!(d(1), d(2));
    }

    #[test]
    fn descriptor_names_and_dedup() {
        let p = parse_program("answer(I, T) :- att(I, title, T), att(I, title, T).").unwrap();
        let mut s = Schema::new(&p);
        let att = Pred::new("att", 3);
        let f = [(1, Const::sym("title"))];
        let a = s.request_edb(&att, &f, &"ff".parse().unwrap());
        let b = s.request_edb(&att, &f, &"ff".parse().unwrap());
        assert_eq!(a, b);
        assert_eq!(s.edb[a].name, "att_title_ff");
        assert_eq!(s.edb[a].columns, vec![0, 2]);
        assert_eq!(s.edb[a].kind, RelKind::List);
    }
}
