use std::fmt;

/// A ground value: integers and symbols are distinct kinds and never compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Const {
    Int(i64),
    Sym(String),
}

impl Const {
    pub fn sym(s: impl Into<String>) -> Self {
        Const::Sym(s.into())
    }

    /// Parses the canonical rendering produced by `Display`.
    pub fn parse_canonical(text: &str) -> Option<Const> {
        if let Some(inner) = text.strip_prefix('\'') {
            let inner = inner.strip_suffix('\'')?;
            return unescape_quoted(inner).map(Const::Sym);
        }
        if is_int_token(text) {
            return text.parse().ok().map(Const::Int);
        }
        if is_bare_symbol(text) {
            return Some(Const::Sym(text.to_string()));
        }
        None
    }

    /// Writes the canonical text into `out` (cleared first).
    pub fn write_canonical(&self, out: &mut String) {
        use std::fmt::Write;
        out.clear();
        let _ = write!(out, "{self}");
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(v) => write!(f, "{v}"),
            Const::Sym(s) => write_symbol(f, s),
        }
    }
}

/// Appends the canonical text of the symbol `s` to `out`.
pub fn push_symbol(out: &mut String, s: &str) {
    let _ = write_symbol(out, s);
}

pub(crate) fn write_symbol(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    if is_bare_symbol(s) {
        return f.write_str(s);
    }
    f.write_char('\'')?;
    for c in s.chars() {
        match c {
            '\'' => f.write_str("''")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('\'')
}

/// `[a-z][A-Za-z0-9_]*`
pub fn is_bare_symbol(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_lowercase() => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

pub(crate) fn is_int_token(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Resolves the body of a single-quoted atom (without the surrounding quotes).
pub(crate) fn unescape_quoted(inner: &str) -> Option<String> {
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\'' => {
                if chars.next() != Some('\'') {
                    return None;
                }
                out.push('\'');
            }
            '\\' => out.push(match chars.next()? {
                'n' => '\n',
                't' => '\t',
                'r' => '\r',
                other => other,
            }),
            c => out.push(c),
        }
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(Const),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn int(v: i64) -> Self {
        Term::Const(Const::Int(v))
    }

    pub fn sym(s: impl Into<String>) -> Self {
        Term::Const(Const::Sym(s.into()))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Const> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => c.fmt(f),
        }
    }
}

/// Predicate identity: name plus arity, so `p/1` and `p/2` are different predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pred {
    pub name: String,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Pred {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbol(f, &self.name)?;
        write!(f, "/{}", self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn pred(&self) -> Pred {
        Pred::new(self.predicate.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbol(f, &self.predicate)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            t.fmt(f)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        Rule { head, body }
    }

    /// Distinct variables in first-occurrence order (body first, then head).
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for v in self.body.iter().flat_map(Atom::vars).chain(self.head.vars()) {
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
        seen
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.head.fmt(f)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                a.fmt(f)?;
            }
        }
        f.write_str(".")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        for c in [
            Const::Int(-12),
            Const::Int(7),
            Const::sym("title"),
            Const::sym("On the Power of Magic."),
            Const::sym("it's"),
            Const::sym("12"),
            Const::sym(""),
            Const::sym("a\\b\nc"),
        ] {
            let text = c.to_string();
            assert_eq!(Const::parse_canonical(&text), Some(c), "{text}");
        }
    }

    #[test]
    fn quoted_digits_are_not_integers() {
        assert_eq!(Const::sym("55").to_string(), "'55'");
        assert_ne!(Const::sym("55"), Const::Int(55));
    }

    #[test]
    fn rule_display() {
        let r = Rule::new(
            Atom::new("a", vec![Term::var("X")]),
            vec![Atom::new("b", vec![Term::var("X"), Term::int(3)])],
        );
        assert_eq!(r.to_string(), "a(X) :- b(X, 3).");
        assert_eq!(Atom::new("p", vec![]).to_string(), "p");
    }
}
