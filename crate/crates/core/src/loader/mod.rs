//! Bulk loading of fact files into the relations of a [`Database`].

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::baseline::Facts;
use crate::datalog::{is_bare_symbol, parse_fact, push_symbol, Const, Pred, Term};
use crate::runtime::Database;
use crate::storage::StorageError;

pub const DEFAULT_CHUNK: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub chunk_size: usize,
    /// Reject facts spanning lines and fail on the first malformed line.
    pub strict: bool,
    /// Read line by line instead of in chunks.
    pub line_reader: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            chunk_size: DEFAULT_CHUNK,
            strict: false,
            line_reader: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}:{line}: {pred} is defined by rules and cannot be loaded as data")]
    IdbFact { path: PathBuf, line: u64, pred: String },
    #[error("{path}:{line}: {source}")]
    Storage {
        path: PathBuf,
        line: u64,
        source: StorageError,
    },
}

/// Receives facts as predicate names and canonical constant texts.
trait Sink {
    fn fact(&mut self, name: &str, values: &[String]) -> Result<Outcome, StorageError>;
}

enum Outcome {
    Routed,
    Ignored,
    Idb,
}

impl Sink for Database {
    fn fact(&mut self, name: &str, values: &[String]) -> Result<Outcome, StorageError> {
        self.load.parsed += 1;
        if self.add_fact_texts(name, values.iter().map(String::as_str))? {
            Ok(Outcome::Routed)
        } else if self.is_idb(name, values.len()) {
            Ok(Outcome::Idb)
        } else {
            Ok(Outcome::Ignored)
        }
    }
}

struct Collect<'a>(&'a mut Facts);

impl Sink for Collect<'_> {
    fn fact(&mut self, name: &str, values: &[String]) -> Result<Outcome, StorageError> {
        let t = values
            .iter()
            .map(|v| Const::parse_canonical(v).expect("loader emits canonical text"))
            .collect();
        self.0.entry(Pred::new(name, values.len())).or_default().insert(t);
        Ok(Outcome::Routed)
    }
}

/// Counters not kept by the sink.
#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    lines: u64,
    malformed: u64,
}

/// Calls `f(line number, line)` for every line, reading `chunk` bytes at a
/// time. A trailing `\r` is removed.
fn chunked_lines(
    mut r: impl Read,
    chunk: usize,
    path: &Path,
    mut f: impl FnMut(u64, &[u8]) -> Result<(), LoadError>,
) -> Result<(), LoadError> {
    let mut buf = vec![0u8; chunk.max(1)];
    let mut carry: Vec<u8> = Vec::new();
    let mut line = 0u64;
    let mut emit = |l: &[u8]| {
        line += 1;
        f(line, l.strip_suffix(b"\r").unwrap_or(l))
    };
    loop {
        let n = match r.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(source) => {
                return Err(LoadError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let mut data = &buf[..n];
        while let Some(pos) = data.iter().position(|&b| b == b'\n') {
            if carry.is_empty() {
                emit(&data[..pos])?;
            } else {
                carry.extend_from_slice(&data[..pos]);
                emit(&carry)?;
                carry.clear();
            }
            data = &data[pos + 1..];
        }
        carry.extend_from_slice(data);
    }
    if !carry.is_empty() {
        emit(&carry)?;
    }
    Ok(())
}

fn buffered_lines(
    r: impl Read,
    path: &Path,
    mut f: impl FnMut(u64, &[u8]) -> Result<(), LoadError>,
) -> Result<(), LoadError> {
    let mut r = BufReader::new(r);
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        let n = r.read_until(b'\n', &mut buf).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            return Ok(());
        }
        line += 1;
        let l = buf.strip_suffix(b"\n").unwrap_or(&buf);
        f(line, l.strip_suffix(b"\r").unwrap_or(l))?;
    }
}

/// Fast path for one-fact-per-line files: `name(c1, ..., cn).` with
/// integer, bare or single-quoted constants. Returns `None` for anything
/// else, which then goes through the general parser.
fn fast_fact<'l>(line: &'l str, values: &mut Vec<String>) -> Option<&'l str> {
    let b = line.as_bytes();
    let mut i = 0;
    let skip = |i: &mut usize| {
        while *i < b.len() && (b[*i] == b' ' || b[*i] == b'\t') {
            *i += 1;
        }
    };
    skip(&mut i);
    let start = i;
    if i >= b.len() || !b[i].is_ascii_lowercase() {
        return None;
    }
    while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
        i += 1;
    }
    let name = &line[start..i];
    skip(&mut i);
    let mut n = 0;
    if i < b.len() && b[i] == b'(' {
        i += 1;
        loop {
            skip(&mut i);
            if i >= b.len() {
                return None;
            }
            if values.len() <= n {
                values.push(String::new());
            }
            let out = &mut values[n];
            out.clear();
            n += 1;
            match b[i] {
                b'\'' => {
                    let s = i + 1;
                    let mut j = s;
                    let mut plain = true;
                    loop {
                        match b.get(j)? {
                            b'\\' => {
                                plain = false;
                                j += 2;
                            }
                            b'\'' if b.get(j + 1) == Some(&b'\'') => {
                                plain = false;
                                j += 2;
                            }
                            b'\'' => break,
                            _ => j += 1,
                        }
                    }
                    let raw = &line[s..j];
                    if plain {
                        if is_bare_symbol(raw) {
                            out.push_str(raw);
                        } else {
                            push_symbol(out, raw);
                        }
                    } else {
                        let text = Const::parse_canonical(&line[i..=j])?;
                        let _ = write!(out, "{text}");
                    }
                    i = j + 1;
                }
                c if c.is_ascii_digit() || c == b'-' => {
                    let s = i;
                    i += 1;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                        return None;
                    }
                    let v: i64 = line[s..i].parse().ok()?;
                    let _ = write!(out, "{v}");
                }
                c if c.is_ascii_lowercase() => {
                    let s = i;
                    while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                        i += 1;
                    }
                    if i < b.len() && !b[i].is_ascii() {
                        return None;
                    }
                    out.push_str(&line[s..i]);
                }
                _ => return None,
            }
            skip(&mut i);
            match b.get(i)? {
                b',' => i += 1,
                b')' => {
                    i += 1;
                    break;
                }
                _ => return None,
            }
        }
        skip(&mut i);
    }
    if b.get(i) != Some(&b'.') {
        return None;
    }
    i += 1;
    skip(&mut i);
    if i < b.len() && b[i] != b'%' {
        return None;
    }
    values.truncate(n);
    Some(name)
}

fn is_blank(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('%')
}

struct LineParser<'s, S: Sink> {
    sink: &'s mut S,
    path: PathBuf,
    opts: LoadOptions,
    values: Vec<String>,
    pending: String,
    pending_line: u64,
    counts: Counts,
}

impl<S: Sink> LineParser<'_, S> {
    fn deliver(&mut self, line: u64, name: &str, n: usize) -> Result<(), LoadError> {
        let out = self
            .sink
            .fact(name, &self.values[..n])
            .map_err(|source| LoadError::Storage {
                path: self.path.clone(),
                line,
                source,
            })?;
        if let Outcome::Idb = out {
            return Err(LoadError::IdbFact {
                path: self.path.clone(),
                line,
                pred: format!("{name}/{n}"),
            });
        }
        Ok(())
    }

    fn general(&mut self, line: u64, text: &str) -> Result<bool, LoadError> {
        match parse_fact(text) {
            Ok(atom) => {
                self.values.clear();
                for a in &atom.args {
                    match a {
                        Term::Const(c) => self.values.push(c.to_string()),
                        Term::Var(_) => unreachable!("parse_fact returns ground atoms"),
                    }
                }
                let n = self.values.len();
                self.deliver(line, &atom.predicate, n)?;
                Ok(true)
            }
            Err(e) => {
                if self.opts.strict {
                    return Err(LoadError::Parse {
                        path: self.path.clone(),
                        line,
                        message: e.to_string(),
                    });
                }
                Ok(false)
            }
        }
    }

    fn line(&mut self, no: u64, bytes: &[u8]) -> Result<(), LoadError> {
        self.counts.lines += 1;
        let Ok(text) = std::str::from_utf8(bytes) else {
            if self.opts.strict {
                return Err(LoadError::Parse {
                    path: self.path.clone(),
                    line: no,
                    message: "invalid UTF-8".into(),
                });
            }
            self.counts.malformed += 1;
            return Ok(());
        };
        if !self.pending.is_empty() {
            self.pending.push('\n');
            self.pending.push_str(text);
            if text.trim_end().ends_with('.') {
                let p = std::mem::take(&mut self.pending);
                if !self.general(self.pending_line, &p)? {
                    self.counts.malformed += 1;
                }
            }
            return Ok(());
        }
        if is_blank(text) {
            return Ok(());
        }
        let mut values = std::mem::take(&mut self.values);
        let fast = fast_fact(text, &mut values).map(|name| (name, values.len()));
        self.values = values;
        if let Some((name, n)) = fast {
            return self.deliver(no, name, n);
        }
        if self.general(no, text)? {
            return Ok(());
        }
        // Non-strict: the fact may continue on the following lines.
        if !text.trim_end().ends_with('.') {
            self.pending = text.to_string();
            self.pending_line = no;
        } else {
            self.counts.malformed += 1;
        }
        Ok(())
    }

    fn finish(&mut self) {
        if !self.pending.is_empty() {
            self.pending.clear();
            self.counts.malformed += 1;
        }
    }
}

fn run<S: Sink>(sink: &mut S, path: &Path, r: impl Read, opts: LoadOptions) -> Result<Counts, LoadError> {
    let mut lp = LineParser {
        sink,
        path: path.to_path_buf(),
        opts,
        values: Vec::new(),
        pending: String::new(),
        pending_line: 0,
        counts: Counts::default(),
    };
    let f = |no: u64, l: &[u8]| lp.line(no, l);
    if opts.line_reader {
        buffered_lines(r, path, f)?;
    } else {
        chunked_lines(r, opts.chunk_size, path, f)?;
    }
    lp.finish();
    Ok(lp.counts)
}

/// Loads the facts read from `r` into `db`.
pub fn load_reader(db: &mut Database, path: &Path, r: impl Read, opts: LoadOptions) -> Result<(), LoadError> {
    let start = Instant::now();
    let counts = run(db, path, r, opts)?;
    db.load.lines += counts.lines;
    db.load.malformed += counts.malformed;
    db.load.millis += start.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

/// Loads a fact file into `db`.
pub fn load_file(db: &mut Database, path: &Path, opts: LoadOptions) -> Result<(), LoadError> {
    let f = File::open(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_reader(db, path, f, opts)
}

/// Reads every fact of a file as constants, without any relation layout.
pub fn read_facts(path: &Path, opts: LoadOptions, into: &mut Facts) -> Result<u64, LoadError> {
    let f = File::open(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(run(&mut Collect(into), path, f, opts)?.malformed)
}

/// Parses `r` and returns its facts in file order (for comparing readers).
pub fn parse_stream(r: impl Read, opts: LoadOptions) -> Result<Vec<(String, Vec<String>)>, LoadError> {
    struct Keep(Vec<(String, Vec<String>)>);
    impl Sink for Keep {
        fn fact(&mut self, name: &str, values: &[String]) -> Result<Outcome, StorageError> {
            self.0.push((name.to_string(), values.to_vec()));
            Ok(Outcome::Routed)
        }
    }
    let mut k = Keep(Vec::new());
    run(&mut k, Path::new("<stream>"), r, opts)?;
    Ok(k.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;
    use crate::planner::Schema;

    fn values(line: &str) -> Option<(String, Vec<String>)> {
        let mut v = Vec::new();
        fast_fact(line, &mut v).map(|n| (n.to_string(), v))
    }

    #[test]
    fn fast_path_forms() {
        assert_eq!(
            values("att('node12', title, 'On the Power of Magic.')."),
            Some((
                "att".into(),
                vec!["node12".into(), "title".into(), "'On the Power of Magic.'".into()]
            ))
        );
        assert_eq!(values("par(1, -2).  % comment").unwrap().1, vec!["1", "-2"]);
        assert_eq!(values("p('12').").unwrap().1, vec!["'12'"]);
        assert_eq!(values("p('it''s').").unwrap().1, vec!["'it''s'"]);
        assert_eq!(values("p(007).").unwrap().1, vec!["7"]);
        assert_eq!(values("flag.").unwrap().1, Vec::<String>::new());
        assert_eq!(values("p(X)."), None);
        assert_eq!(values("p(\"x\")."), None);
        assert_eq!(values("p(1,"), None);
    }

    #[test]
    fn fast_path_agrees_with_parser() {
        for line in ["att(d1, year, 1990).", "p('a b', 'x\\ny', c_d, -5).", "p('abc')."] {
            let (name, vals) = values(line).unwrap();
            let atom = parse_fact(line).unwrap();
            assert_eq!(name, atom.predicate);
            let want: Vec<String> = atom.args.iter().map(|a| a.to_string()).collect();
            assert_eq!(vals, want, "{line}");
        }
    }

    fn db_for(src: &str) -> Database {
        let p = parse_program(src).unwrap();
        let mut s = Schema::new(&p);
        let att = Pred::new("att", 3);
        for a in ["title", "year"] {
            s.request_edb(&att, &[(1, Const::sym(a))], &"ff".parse().unwrap());
        }
        Database::new(&s)
    }

    const Q: &str = "answer(I, T, Y) :- att(I, title, T), att(I, year, Y).";

    #[test]
    fn counts_balance() {
        let mut db = db_for(Q);
        let data = "att(d1, title, 'X').\natt(d1, year, 1990).\n\natt(d1, pages, '55').\nother(1).\nbroken(\n";
        load_reader(&mut db, Path::new("t"), data.as_bytes(), LoadOptions::default()).unwrap();
        let l = &db.load;
        assert_eq!(l.lines, 6);
        assert_eq!(l.parsed, 4);
        assert_eq!((l.stored, l.skipped, l.non_matching, l.malformed), (2, 1, 1, 1));
        assert_eq!(l.stored + l.skipped + l.non_matching, l.parsed);
        assert_eq!(
            l.rows,
            vec![("att_title_ff".to_string(), 1), ("att_year_ff".to_string(), 1)]
        );
    }

    #[test]
    fn strict_mode_reports_line() {
        let mut db = db_for(Q);
        let opts = LoadOptions {
            strict: true,
            ..LoadOptions::default()
        };
        let err = load_reader(
            &mut db,
            Path::new("f.P"),
            "att(a, title, b).\natt(a,\n title, c).\n".as_bytes(),
            opts,
        )
        .unwrap_err();
        match err {
            LoadError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn multi_line_fact_tolerated() {
        let mut db = db_for(Q);
        load_reader(
            &mut db,
            Path::new("t"),
            "att(a,\n  title, 'T').\natt(a, year, 3).".as_bytes(),
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(db.load.stored, 2);
        assert_eq!(db.load.malformed, 0);
    }

    #[test]
    fn idb_facts_rejected() {
        let mut db = db_for(Q);
        let err = load_reader(
            &mut db,
            Path::new("t"),
            "answer(a, b, c).\n".as_bytes(),
            LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LoadError::IdbFact { line: 1, .. }));
    }

    #[test]
    fn loading_twice_doubles_lists() {
        let mut db = db_for(Q);
        let data = "att(d1, title, 'X').\natt(d2, title, 'Y').\n";
        for _ in 0..2 {
            load_reader(&mut db, Path::new("t"), data.as_bytes(), LoadOptions::default()).unwrap();
        }
        assert_eq!(db.edb[0].len(), 4);
    }

    #[test]
    fn tiny_chunks_match_line_reader() {
        let data = "p(1, 'a b').\r\nq(x).\n% c\np(2,\n 'z').\nlast('no newline').";
        let chunked = parse_stream(
            data.as_bytes(),
            LoadOptions {
                chunk_size: 3,
                ..LoadOptions::default()
            },
        )
        .unwrap();
        let lines = parse_stream(
            data.as_bytes(),
            LoadOptions {
                line_reader: true,
                ..LoadOptions::default()
            },
        )
        .unwrap();
        assert_eq!(chunked, lines);
        assert_eq!(chunked.len(), 4);
    }
}
