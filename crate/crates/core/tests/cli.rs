use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

const FLAGSHIP: &str = r#"
(declare-str s)
(assert (= (str.++ "ab" s) (str.++ s "ba")))
(assert (str.in_re s (re.++ (re.* (str.to_re "ab")) (str.to_re "a"))))
(assert (= (mod (str.len s) 2) 0))
"#;

fn file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn sea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sea")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn flagship_is_unsat() {
    let f = file(FLAGSHIP);
    let o = sea(&[f.path().to_str().unwrap()]);
    assert_eq!(stdout(&o), "unsat\n");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn equation_alone_is_sat_with_model() {
    let f = file(r#"(declare-str s)(assert (= (str.++ "ab" s) (str.++ s "ba")))"#);
    let o = sea(&[f.path().to_str().unwrap(), "--model"]);
    assert_eq!(stdout(&o), "sat\n(define s \"a\")\n");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn missing_file_is_an_error() {
    let o = sea(&["/nonexistent/problem.smt"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn parse_error_reports_position() {
    let f = file("(declare-str s)\n(assert (= s t))");
    let o = sea(&[f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:14"));
}

#[test]
fn budget_zero_is_unknown() {
    let f = file(r#"(declare-str x y)(assert (= (str.++ x "a" y) (str.++ y "b" x)))"#);
    let o = sea(&[f.path().to_str().unwrap(), "--budget", "0"]);
    assert_eq!(stdout(&o), "unknown\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fragment_dot_and_oracle() {
    let f = file(FLAGSHIP);
    let dot = NamedTempFile::new().unwrap();
    let o = sea(&[
        f.path().to_str().unwrap(),
        "--fragment",
        "--oa",
        "lengths-only",
        "--dot",
        dot.path().to_str().unwrap(),
        "--oracle-check",
        "5",
    ]);
    let out = stdout(&o);
    assert!(out.starts_with("fragment: 1SEA"), "{out}");
    assert!(out.ends_with("unsat\n"));
    assert_eq!(o.status.code(), Some(1));
    let g = std::fs::read_to_string(dot.path()).unwrap();
    assert!(g.starts_with("digraph"));
    assert_eq!(g.lines().filter(|l| l.contains("style=dashed")).count(), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle-check: agrees"));
}

#[test]
fn reduce_to_single_keeps_verdict() {
    let f = file(r#"(declare-str x y)(assert (= x "ab"))(assert (= (str.++ x y) "abb"))"#);
    let o = sea(&[f.path().to_str().unwrap(), "--reduce-to-single", "--model"]);
    assert_eq!(stdout(&o), "sat\n(define x \"ab\")\n(define y \"b\")\n");
}

#[test]
fn generate_is_seeded() {
    let a = sea(&["--generate", "mixed", "--seed", "11"]);
    let b = sea(&["--generate", "mixed", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("(assert"));
}
