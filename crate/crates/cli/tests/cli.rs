use std::path::Path;
use std::process::{Command, Output};

fn pushlog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pushlog")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
        .unwrap_or_else(|| panic!("no {key} in\n{out}"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.P");
    let b = dir.path().join("b.P");
    for p in [&a, &b] {
        let o = pushlog(&[
            "gen",
            "tc",
            "--edges",
            "300",
            "--nodes",
            "50",
            "--seed",
            "4",
            "--out",
            path(p),
        ]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 300);

    let o = pushlog(&[
        "gen",
        "join1",
        "--facts",
        "100",
        "--domain",
        "20",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success());
    for r in ["c2", "c3", "c4", "d1", "d2"] {
        let t = std::fs::read_to_string(dir.path().join(format!("{r}.P"))).unwrap();
        assert_eq!(t.lines().count(), 100);
    }
}

#[test]
fn run_reports_answers_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("tc.P");
    std::fs::write(
        &prog,
        "tc(X, Y) :- par(X, Y).\ntc(X, Y) :- par(X, Z), tc(Z, Y).\n?- tc(X, Y).\n",
    )
    .unwrap();
    let data = dir.path().join("par.P");
    std::fs::write(&data, "par(1, 2).\npar(2, 3).\npar(3, 4).\n").unwrap();
    let report = dir.path().join("r.txt");
    let json = dir.path().join("r.json");
    for engine in ["push-pe", "push-simple", "seminaive", "naive"] {
        let o = pushlog(&[
            "run",
            "--program",
            path(&prog),
            "--data",
            path(&data),
            "--engine",
            engine,
            "--report",
            path(&report),
            "--json",
            path(&json),
            "--print-answers",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let out = stdout(&o);
        assert_eq!(value(&out, "answers"), "6", "{engine}");
        assert!(out.contains("tc(1,4)."));
        assert_eq!(value(&std::fs::read_to_string(&report).unwrap(), "engine"), engine);
        assert!(std::fs::read_to_string(&json).unwrap().contains("\"answers\": 6"));
    }
}

#[test]
fn empty_program_has_no_answers() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("empty.P");
    std::fs::write(&prog, "").unwrap();
    let o = pushlog(&["run", "--program", path(&prog)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "answers"), "0");
}

#[test]
fn check_lists_cliques_and_rejects_unsafe_rules() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.P");
    std::fs::write(&ok, "tc(X, Y) :- par(X, Y).\ntc(X, Y) :- par(X, Z), tc(Z, Y).\n").unwrap();
    let o = pushlog(&["check", "--program", path(&ok)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("edb par/2"));
    assert!(out.contains("recursive"));

    let bad = dir.path().join("bad.P");
    std::fs::write(&bad, "p(X, Y) :- q(X).\n").unwrap();
    assert!(!pushlog(&["check", "--program", path(&bad)]).status.success());
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!pushlog(&["run", "--program", path(&dir.path().join("missing.P"))])
        .status
        .success());

    let prog = dir.path().join("p.P");
    std::fs::write(&prog, "p(X) :- q(X).\n?- p(X).\n").unwrap();
    let data = dir.path().join("q.P");
    std::fs::write(&data, "q(1).\nq(2\n").unwrap();
    let o = pushlog(&["run", "--program", path(&prog), "--data", path(&data), "--strict"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"));
    let o = pushlog(&["run", "--program", path(&prog), "--data", path(&data)]);
    assert!(o.status.success());
    assert_eq!(value(&stdout(&o), "load.malformed"), "1");
    assert!(
        !pushlog(&["run", "--program", path(&prog), "--count-only", "--print-answers"])
            .status
            .success()
    );
}
