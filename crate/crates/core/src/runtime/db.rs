use std::collections::HashMap;

use crate::datalog::{Const, Pred};
use crate::planner::{RelDesc, RelKind, Schema};
use crate::storage::{ListRelation, MapRelation, MemoryReport, SetImpl, SetRelation, StorageError, StringTable};

#[derive(Debug, Clone)]
pub enum Relation {
    List(ListRelation),
    Map(MapRelation),
    Set(SetRelation),
}

/// A relation laid out for one access shape, with the projection from full
/// predicate tuples.
#[derive(Debug, Clone)]
pub struct Stored {
    pub name: String,
    pub pred: Pred,
    filters: Vec<(usize, u32)>,
    key_cols: Vec<usize>,
    val_cols: Vec<usize>,
    pub rel: Relation,
    buf: Vec<u32>,
}

impl Stored {
    /// `domains` are the current sizes of the stored columns' domains; they
    /// only matter for bitmap sets.
    pub fn new(desc: &RelDesc, set: SetImpl, domains: &[usize]) -> Result<Stored, StorageError> {
        let key_cols: Vec<usize> = desc.key_positions().iter().map(|&i| desc.columns[i]).collect();
        let val_cols: Vec<usize> = desc.value_positions().iter().map(|&i| desc.columns[i]).collect();
        let rel = match desc.kind {
            RelKind::List => Relation::List(ListRelation::new(val_cols.len())),
            RelKind::Map => Relation::Map(MapRelation::new(key_cols.len(), val_cols.len())),
            RelKind::Set => {
                let doms: Vec<usize> = key_cols.iter().map(|&c| domains.get(c).copied().unwrap_or(0)).collect();
                Relation::Set(SetRelation::new(set, key_cols.len(), &doms)?)
            }
        };
        Ok(Stored {
            name: desc.name.clone(),
            pred: desc.pred.clone(),
            filters: desc.filters.clone(),
            key_cols,
            val_cols,
            rel,
            buf: Vec::new(),
        })
    }

    #[inline]
    pub fn accepts(&self, t: &[u32]) -> bool {
        self.filters.iter().all(|&(c, v)| t[c] == v)
    }

    /// Stores the projection of the full tuple `t`; the caller checks
    /// [`Stored::accepts`] first.
    #[inline]
    pub fn insert(&mut self, t: &[u32]) -> Result<(), StorageError> {
        self.buf.clear();
        self.buf.extend(self.key_cols.iter().map(|&c| t[c]));
        let k = self.buf.len();
        self.buf.extend(self.val_cols.iter().map(|&c| t[c]));
        match &mut self.rel {
            Relation::List(l) => l.push(&self.buf),
            Relation::Map(m) => m.push(&self.buf[..k], &self.buf[k..]),
            Relation::Set(s) => {
                s.insert_if_new(&self.buf)?;
            }
        }
        Ok(())
    }

    /// Positions `cur` on the values stored under `key`.
    #[inline]
    pub fn open(&self, key: &[u32], cur: &mut [u32]) {
        match &self.rel {
            Relation::List(l) => {
                cur[0] = 0;
                cur[1] = l.len() as u32;
            }
            Relation::Map(m) => {
                let c = m.cursor_for(key);
                cur[0] = c.slot;
                cur[1] = c.pos;
                cur[2] = c.end;
            }
            Relation::Set(s) => cur[0] = s.contains(key) as u32,
        }
    }

    /// Next value tuple of an open cursor; a set yields one empty tuple on a hit.
    #[inline(always)]
    pub fn fetch(&self, cur: &mut [u32]) -> Option<&[u32]> {
        match &self.rel {
            Relation::List(l) => {
                if cur[0] >= cur[1] {
                    return None;
                }
                cur[0] += 1;
                Some(l.get(cur[0] as usize - 1))
            }
            Relation::Map(m) => {
                let mut c = crate::storage::MapCursor {
                    slot: cur[0],
                    pos: cur[1],
                    end: cur[2],
                };
                let v = m.next(&mut c);
                cur[1] = c.pos;
                v
            }
            Relation::Set(_) => {
                if cur[0] == 0 {
                    return None;
                }
                cur[0] = 0;
                Some(&[])
            }
        }
    }

    /// Width of the tuples [`Stored::chunk`] yields; `None` where only
    /// [`Stored::fetch`] applies.
    #[inline]
    pub fn chunk_width(&self) -> Option<usize> {
        match &self.rel {
            Relation::List(l) if l.arity() > 0 => Some(l.arity()),
            Relation::Map(m) => Some(m.value_arity()),
            _ => None,
        }
    }

    /// Contiguous value tuples ahead of an open cursor, flattened; empty when
    /// the cursor is exhausted. Consume them with [`Stored::advance`].
    #[inline(always)]
    pub fn chunk(&self, cur: &[u32]) -> &[u32] {
        match &self.rel {
            Relation::List(l) => l.run(cur[0] as usize, cur[1] as usize),
            Relation::Map(m) => m.remaining(&crate::storage::MapCursor {
                slot: cur[0],
                pos: cur[1],
                end: cur[2],
            }),
            Relation::Set(_) => &[],
        }
    }

    #[inline(always)]
    pub fn advance(&self, cur: &mut [u32], tuples: u32) {
        match &self.rel {
            Relation::List(_) => cur[0] += tuples,
            Relation::Map(m) => cur[1] += tuples * m.value_arity() as u32,
            Relation::Set(_) => {}
        }
    }

    /// Stored rows (for sets, distinct tuples).
    pub fn len(&self) -> usize {
        match &self.rel {
            Relation::List(l) => l.len(),
            Relation::Map(m) => m.len(),
            Relation::Set(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bytes(&self) -> usize {
        match &self.rel {
            Relation::List(l) => l.bytes(),
            Relation::Map(m) => m.bytes(),
            Relation::Set(s) => s.bytes(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.rel {
            Relation::List(_) => "list",
            Relation::Map(_) => "map",
            Relation::Set(s) => s.kind().name(),
        }
    }

    /// Stored rows re-expanded to full predicate tuples.
    pub fn full_tuples(&self) -> Vec<Vec<u32>> {
        let arity = self.pred.arity;
        let expand = |key: &[u32], val: &[u32]| {
            let mut t = vec![0; arity];
            for &(c, v) in &self.filters {
                t[c] = v;
            }
            for (&c, &v) in self.key_cols.iter().zip(key) {
                t[c] = v;
            }
            for (&c, &v) in self.val_cols.iter().zip(val) {
                t[c] = v;
            }
            t
        };
        let mut out = Vec::new();
        match &self.rel {
            Relation::List(l) => out.extend(l.iter().map(|v| expand(&[], v))),
            Relation::Map(m) => m.for_each(|k, v| out.push(expand(k, v))),
            Relation::Set(s) => out.extend(s.tuples().iter().map(|k| expand(k, &[]))),
        }
        out
    }
}

/// Per-descriptor load counters.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct LoadStats {
    pub lines: u64,
    pub parsed: u64,
    /// Facts stored by at least one relation.
    pub stored: u64,
    /// Facts of a loaded predicate rejected by every constant filter.
    pub skipped: u64,
    /// Facts of predicates the program does not read.
    pub non_matching: u64,
    /// Lines that failed to parse (non-strict mode only).
    pub malformed: u64,
    /// Rows stored per relation, in descriptor order.
    pub rows: Vec<(String, u64)>,
    pub millis: f64,
}

#[derive(Debug, Clone)]
struct Route {
    arity: usize,
    domains: Vec<usize>,
    rels: Vec<usize>,
}

/// The EDB relations of a plan plus the value tables they are encoded with.
#[derive(Debug, Clone)]
pub struct Database {
    pub tables: Vec<StringTable>,
    pub edb: Vec<Stored>,
    /// Column domains of every predicate.
    pub domains: std::collections::BTreeMap<Pred, Vec<usize>>,
    routes: HashMap<String, Vec<Route>>,
    idb: std::collections::BTreeSet<Pred>,
    pub load: LoadStats,
    buf: Vec<u32>,
    text: String,
}

impl Database {
    /// Empty relations for every EDB descriptor of `schema`. EDB sets use
    /// dynamic hashing since their domains are not known before loading.
    pub fn new(schema: &Schema) -> Database {
        let mut routes: HashMap<String, Vec<Route>> = HashMap::new();
        let edb = schema
            .edb
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let rs = routes.entry(d.pred.name.clone()).or_default();
                match rs.iter_mut().find(|r| r.arity == d.pred.arity) {
                    Some(r) => r.rels.push(i),
                    None => rs.push(Route {
                        arity: d.pred.arity,
                        domains: schema.domains[&d.pred].clone(),
                        rels: vec![i],
                    }),
                }
                Stored::new(d, SetImpl::DynHash, &[]).expect("hash sets have no domain limits")
            })
            .collect();
        Database {
            tables: schema.tables.clone(),
            edb,
            domains: schema.domains.clone(),
            routes,
            idb: schema.idb_preds.clone(),
            load: LoadStats {
                rows: schema.edb.iter().map(|d| (d.name.clone(), 0)).collect(),
                ..LoadStats::default()
            },
            buf: Vec::new(),
            text: String::new(),
        }
    }

    /// Whether `name/arity` is defined by rules.
    pub fn is_idb(&self, name: &str, arity: usize) -> bool {
        self.idb.iter().any(|p| p.arity == arity && p.name == name)
    }

    /// Whether any relation reads `name/arity`.
    pub fn reads(&self, name: &str, arity: usize) -> bool {
        self.routes
            .get(name)
            .is_some_and(|rs| rs.iter().any(|r| r.arity == arity))
    }

    /// Interns and routes one fact given as canonical value texts. Returns
    /// false if no relation reads its predicate. Does not count `parsed`.
    pub fn add_fact_texts<'t>(
        &mut self,
        name: &str,
        values: impl ExactSizeIterator<Item = &'t str>,
    ) -> Result<bool, StorageError> {
        let arity = values.len();
        let Some(route) = self
            .routes
            .get(name)
            .and_then(|rs| rs.iter().find(|r| r.arity == arity))
        else {
            self.load.non_matching += 1;
            return Ok(false);
        };
        self.buf.clear();
        for (c, v) in values.enumerate() {
            self.buf.push(self.tables[route.domains[c]].intern(v));
        }
        let mut any = false;
        for &r in &route.rels {
            let s = &mut self.edb[r];
            if s.accepts(&self.buf) {
                s.insert(&self.buf)?;
                self.load.rows[r].1 += 1;
                any = true;
            }
        }
        if any {
            self.load.stored += 1;
        } else {
            self.load.skipped += 1;
        }
        Ok(true)
    }

    /// Routes a parsed fact.
    pub fn add_fact(&mut self, name: &str, values: &[Const]) -> Result<bool, StorageError> {
        let texts: Vec<String> = values.iter().map(|c| c.to_string()).collect();
        self.load.parsed += 1;
        self.add_fact_texts(name, texts.iter().map(String::as_str))
    }

    /// Adds the EDB facts written inline in a program.
    pub fn add_program_facts(&mut self, p: &crate::datalog::Program) -> Result<(), StorageError> {
        for f in &p.facts {
            let vals: Vec<Const> = f
                .args
                .iter()
                .map(|t| match t {
                    crate::datalog::Term::Const(c) => c.clone(),
                    crate::datalog::Term::Var(_) => unreachable!("facts are ground"),
                })
                .collect();
            self.add_fact(&f.predicate, &vals)?;
        }
        Ok(())
    }

    /// Interns `c` in the table of `pred`'s column `col`.
    pub fn intern(&mut self, pred: &Pred, col: usize, c: &Const) -> u32 {
        c.write_canonical(&mut self.text);
        let d = self.domains[pred][col];
        self.tables[d].intern(&self.text)
    }

    /// Decodes a tuple of `pred`.
    pub fn decode(&self, pred: &Pred, t: &[u32]) -> Vec<Const> {
        let doms = &self.domains[pred];
        t.iter()
            .enumerate()
            .map(|(c, &id)| {
                let text = self.tables[doms[c]].resolve(id).expect("ids come from this table");
                Const::parse_canonical(text).expect("tables hold canonical constants")
            })
            .collect()
    }

    /// Current number of values in each column domain of `pred`.
    pub fn domain_sizes(&self, pred: &Pred) -> Vec<usize> {
        self.domains[pred].iter().map(|&d| self.tables[d].len()).collect()
    }

    pub fn memory(&self, report: &mut MemoryReport) {
        for s in &self.edb {
            report.add(s.name.clone(), s.kind_name(), s.len(), s.bytes());
        }
        let strings: usize = self.tables.iter().map(StringTable::bytes).sum();
        let values: usize = self.tables.iter().map(StringTable::len).sum();
        report.add("string tables", "table", values, strings);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    #[test]
    fn routes_and_filters() {
        let p = parse_program(
            "answer(I, T, Y) :- att(I, title, T), att(I, year, Y).\natt(d1, title, x).\natt(d1, year, 1990).\natt(d1, pages, '55').",
        )
        .unwrap();
        let mut s = Schema::new(&p);
        let att = Pred::new("att", 3);
        s.request_edb(&att, &[(1, Const::sym("title"))], &"ff".parse().unwrap());
        s.request_edb(&att, &[(1, Const::sym("year"))], &"bf".parse().unwrap());
        let mut db = Database::new(&s);
        db.add_program_facts(&p).unwrap();
        assert_eq!(db.load.parsed, 3);
        assert_eq!(db.load.stored, 2);
        assert_eq!(db.load.skipped, 1);
        assert_eq!(db.edb[0].len(), 1);
        let full = db.edb[1].full_tuples();
        assert_eq!(
            db.decode(&att, &full[0]),
            vec![Const::sym("d1"), Const::sym("year"), Const::Int(1990)]
        );
        assert!(!db.add_fact("other", &[Const::Int(1)]).unwrap());
        assert_eq!(db.load.non_matching, 1);
    }

    #[test]
    fn set_relation_cursor() {
        let p = parse_program("a(X) :- e(X, X).").unwrap();
        let mut s = Schema::new(&p);
        let e = Pred::new("e", 2);
        let i = s.request_edb(&e, &[], &"bb".parse().unwrap());
        let mut db = Database::new(&s);
        db.add_fact("e", &[Const::Int(1), Const::Int(2)]).unwrap();
        let k = [db.intern(&e, 0, &Const::Int(1)), db.intern(&e, 1, &Const::Int(2))];
        let mut cur = [0u32; 3];
        db.edb[i].open(&k, &mut cur);
        assert_eq!(db.edb[i].fetch(&mut cur), Some(&[][..]));
        assert_eq!(db.edb[i].fetch(&mut cur), None);
        db.edb[i].open(&[k[1], k[0]], &mut cur);
        assert_eq!(db.edb[i].fetch(&mut cur), None);
    }
}
