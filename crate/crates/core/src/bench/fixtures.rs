use crate::datalog::{parse_program, Program};

pub const TC_FF: &str = "\
tc(X, Y) :- par(X, Y).
tc(X, Y) :- par(X, Z), tc(Z, Y).
?- tc(X, Y).
";

/// Magic-set style rewriting of `?- tc(1, A)` that lowers the recursive
/// predicate to one argument. `p0` duplicates `p1` and is kept as generated.
pub const TC_BF: &str = "\
p1(A) :- p1(B), par(B, A).
p1(A) :- par(1, A).
p0(A) :- p1(B), par(B, A).
p0(A) :- par(1, A).
tc(1, A) :- p0(A).
?- tc(1, A).
";

pub const JOIN1: &str = "\
a(X, Y) :- b1(X, Z), b2(Z, Y).
b1(X, Y) :- c1(X, Z), c2(Z, Y).
b2(X, Y) :- c3(X, Z), c4(Z, Y).
c1(X, Y) :- d1(X, Z), d2(Z, Y).
?- a(X, Y).
";

pub const DBLP: &str = "\
answer(Id, T, A, Y, M) :-
    att(Id, title, T),
    att(Id, year, Y),
    att(Id, author, A),
    att(Id, month, M).
?- answer(Id, T, A, Y, M).
";

fn parse(src: &str) -> Program {
    parse_program(src).expect("fixture parses")
}

pub fn fixture_tc_ff() -> Program {
    parse(TC_FF)
}

pub fn fixture_tc_bf() -> Program {
    parse(TC_BF)
}

pub fn fixture_join1() -> Program {
    parse(JOIN1)
}

pub fn fixture_dblp() -> Program {
    parse(DBLP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        assert_eq!(fixture_tc_ff().rules.len(), 2);
        assert_eq!(fixture_tc_bf().user_rules().count(), 5);
        assert_eq!(fixture_join1().edb.len(), 5);
        assert_eq!(fixture_dblp().idb.len(), 1);
    }
}
